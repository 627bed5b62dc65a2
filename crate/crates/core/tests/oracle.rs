//! Exact-rational cross-checks of the coefficient tables.
//!
//! The law of `sum_i a_i w_i` with flat Dirichlet weights is the normalized
//! B-spline with knots `a_i` (repeated by multiplicity), which gives an
//! oracle independent of the residue construction.

use haar_law::law::{compile_coefficients, LawCoefficients};
use haar_law::scalar::{with_precision, BigReal, ExtFloat, Field};
use haar_law::spectrum::Spectrum;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qf(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// Normalized B-spline `M(x | knots)` by the Curry-Schoenberg recurrence,
/// right-continuous on each knot interval.
fn bspline(knots: &[BigRational], x: &BigRational) -> BigRational {
    let n = knots.len();
    // order-1 splines on [t_i, t_{i+1})
    let mut level: Vec<BigRational> = (0..n - 1)
        .map(|i| {
            let (a, b) = (&knots[i], &knots[i + 1]);
            if a < b && a <= x && x < b {
                BigRational::one() / (b - a)
            } else {
                BigRational::zero()
            }
        })
        .collect();
    for k in 2..n {
        let kq = BigRational::from_integer(BigInt::from(k as i64));
        let km1 = BigRational::from_integer(BigInt::from(k as i64 - 1));
        level = (0..n - k)
            .map(|i| {
                let span = &knots[i + k] - &knots[i];
                if span.is_zero() {
                    return BigRational::zero();
                }
                let left = (x - &knots[i]) * &level[i];
                let right = (&knots[i + k] - x) * &level[i + 1];
                &kq * (left + right) / (&km1 * span)
            })
            .collect();
    }
    level.into_iter().next().unwrap()
}

fn knots_of(s: &Spectrum) -> Vec<BigRational> {
    s.expanded().into_iter().map(qf).collect()
}

/// Exact integral over `[lo, hi]` of a polynomial of degree at most `deg`
/// known only through evaluations, via moment-matching weights.
fn integrate_poly(
    lo: &BigRational,
    hi: &BigRational,
    deg: usize,
    f: impl Fn(&BigRational) -> BigRational,
) -> BigRational {
    let m = deg + 1;
    let nodes: Vec<BigRational> = (0..m)
        .map(|i| lo + (hi - lo) * q(2 * i as i64 + 1, 2 * m as i64))
        .collect();
    // solve V^T w = moments
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|p| {
            let mut row: Vec<BigRational> =
                nodes.iter().map(|x| Field::powi(x, p as u32)).collect();
            let pp = BigRational::from_integer(BigInt::from(p as i64 + 1));
            row.push((Field::powi(hi, p as u32 + 1) - Field::powi(lo, p as u32 + 1)) / pp);
            row
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero()).unwrap();
        a.swap(col, piv);
        let pivot = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = &row[col] / &pivot[col];
                for (cell, p) in row.iter_mut().zip(&pivot).skip(col) {
                    *cell -= &factor * p;
                }
            }
        }
    }
    (0..m)
        .map(|i| &a[i][m] / &a[i][i] * f(&nodes[i]))
        .fold(BigRational::zero(), |acc, v| acc + v)
}

/// Exact CDF from the oracle density, integrating piece by piece.
fn oracle_cdf(s: &Spectrum, x: &BigRational) -> BigRational {
    let knots = knots_of(s);
    let deg = s.dim() - 2;
    let vals: Vec<BigRational> = s.values().iter().map(|&v| qf(v)).collect();
    let mut acc = BigRational::zero();
    for w in vals.windows(2) {
        if *x <= w[0] {
            break;
        }
        let hi = if *x < w[1] { x.clone() } else { w[1].clone() };
        acc += integrate_poly(&w[0], &hi, deg, |t| bspline(&knots, t));
    }
    acc
}

fn spectra() -> Vec<Spectrum> {
    vec![
        Spectrum::new(vec![0.0, 1.0], vec![1, 1]).unwrap(),
        Spectrum::new(vec![1.0, 2.0, 3.0], vec![1, 1, 1]).unwrap(),
        Spectrum::new(vec![0.0, 1.0], vec![3, 1]).unwrap(),
        Spectrum::new(vec![0.0, 1.0], vec![2, 3]).unwrap(),
        Spectrum::new(vec![-1.0, 0.5, 2.0], vec![2, 1, 3]).unwrap(),
        Spectrum::new(vec![-0.75, 0.0, 0.25, 3.0], vec![1, 3, 2, 2]).unwrap(),
        Spectrum::new(vec![-2.0, -0.5, 0.125, 1.5, 4.0], vec![1, 1, 1, 1, 1]).unwrap(),
    ]
}

/// Interior probe points that avoid the knots.
fn probes(s: &Spectrum) -> Vec<BigRational> {
    let lo = qf(s.min());
    let hi = qf(s.max());
    (1..40)
        .map(|i| &lo + (&hi - &lo) * q(2 * i - 1, 79))
        .filter(|x| s.values().iter().all(|&v| qf(v) != *x))
        .collect()
}

#[test]
fn rational_density_equals_bspline_exactly() {
    for s in spectra() {
        let law: LawCoefficients<BigRational> = compile_coefficients(&s).unwrap();
        let knots = knots_of(&s);
        for x in probes(&s) {
            assert_eq!(law.density(&x), bspline(&knots, &x), "{s:?} at {x}");
            assert_eq!(
                law.density_unclamped(&x),
                bspline(&knots, &x),
                "{s:?} at {x}"
            );
        }
    }
}

#[test]
fn rational_cdf_and_sf_equal_integrated_oracle() {
    for s in spectra() {
        let law: LawCoefficients<BigRational> = compile_coefficients(&s).unwrap();
        for x in probes(&s).into_iter().step_by(5) {
            let expect = oracle_cdf(&s, &x);
            assert_eq!(law.cdf(&x), expect, "{s:?} at {x}");
            assert_eq!(law.sf(&x), BigRational::one() - expect, "{s:?} at {x}");
        }
    }
}

#[test]
fn residue_sum_vanishes_identically_outside_support() {
    for s in spectra() {
        let law: LawCoefficients<BigRational> = compile_coefficients(&s).unwrap();
        for x in [qf(s.min() - 1.5), qf(s.max() + 0.25), qf(s.max() + 7.0)] {
            assert!(law.density_unclamped(&x).is_zero(), "{s:?} at {x}");
            assert!(law.density(&x).is_zero());
        }
    }
}

#[test]
fn all_terms_sum_to_the_zero_polynomial() {
    for s in spectra() {
        let law: LawCoefficients<BigRational> = compile_coefficients(&s).unwrap();
        let x = q(3, 7);
        let total = law
            .terms()
            .iter()
            .map(|t| {
                t.coeff.clone() * Field::powi(&(law.points()[t.eigen].clone() - x.clone()), t.power)
            })
            .fold(BigRational::zero(), |a, b| a + b);
        assert!(total.is_zero(), "{s:?}");
    }
}

#[test]
fn non_degenerate_coefficients_have_closed_form() {
    let s = Spectrum::new(vec![-2.0, -0.5, 0.125, 1.5, 4.0], vec![1; 5]).unwrap();
    let law: LawCoefficients<BigRational> = compile_coefficients(&s).unwrap();
    let d = s.dim() as i64;
    for t in law.terms() {
        assert_eq!(t.order, 0);
        assert_eq!(t.power as i64, d - 2);
        let a = qf(s.values()[t.eigen]);
        let prod = s
            .values()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != t.eigen)
            .fold(BigRational::one(), |acc, (_, &b)| acc * (&a - qf(b)));
        assert_eq!(
            t.coeff,
            BigRational::from_integer(BigInt::from(d - 1)) / (q(2, 1) * prod)
        );
    }
}

#[test]
fn projector_is_beta_law_exactly() {
    for d in [2usize, 3, 5, 10, 20] {
        let s = Spectrum::new(vec![0.0, 1.0], vec![d - 1, 1]).unwrap();
        let law: LawCoefficients<BigRational> = compile_coefficients(&s).unwrap();
        for i in 1..20 {
            let x = q(i, 20);
            let one_minus = BigRational::one() - &x;
            let dm1 = BigRational::from_integer(BigInt::from(d as i64 - 1));
            assert_eq!(
                law.density(&x),
                &dm1 * Field::powi(&one_minus, d as u32 - 2)
            );
            assert_eq!(law.sf(&x), Field::powi(&one_minus, d as u32 - 1));
        }
    }
}

fn max_rel_err<T: Field>(s: &Spectrum, tol: f64) {
    let exact: LawCoefficients<BigRational> = compile_coefficients(s).unwrap();
    let approx: LawCoefficients<T> = compile_coefficients(s).unwrap();
    for x in probes(s) {
        let xf = Field::to_f64(&x);
        let want = Field::to_f64(&exact.density(&x));
        let got = approx.density(&T::from_f64(xf)).to_f64();
        let want_at_xf = Field::to_f64(&exact.density(&qf(xf)));
        assert!(
            (got - want_at_xf).abs() <= tol * want.abs().max(1e-300),
            "{s:?} at {xf}: {got} vs {want_at_xf}"
        );
        let cw = Field::to_f64(&exact.cdf(&qf(xf)));
        let cg = approx.cdf(&T::from_f64(xf)).to_f64();
        assert!((cg - cw).abs() <= tol, "cdf {s:?} at {xf}: {cg} vs {cw}");
    }
}

#[test]
fn floating_backends_track_rational_values() {
    for s in spectra() {
        max_rel_err::<f64>(&s, 1e-12);
        max_rel_err::<ExtFloat>(&s, 1e-12);
        with_precision(192, || max_rel_err::<BigReal>(&s, 1e-15));
    }
}

#[test]
fn single_precision_table() {
    let s = Spectrum::new(vec![0.0, 1.0], vec![3, 1]).unwrap();
    let law: haar_law::LawCoefficientsF32 = compile_coefficients(&s).unwrap();
    for i in 1..10 {
        let x = i as f32 / 10.0;
        let expect = 3.0 * (1.0 - x) * (1.0 - x);
        assert!((law.density(&x) - expect).abs() < 1e-5 * expect);
    }
}
