//! Moments `m_n = E[X^n]` and cumulants of the expectation value by several
//! independent routes.

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{power_sum_moments, ExactLaw, Law};
use crate::quadrature::WeightedNodes;
use crate::scalar::{with_precision, BigReal, ExtFloat, Field};
use crate::spectrum::Spectrum;

/// Largest order the permutation route enumerates (`|S_6| = 720`).
pub const MAX_PERMUTATION_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    /// Spectral sum over simple poles; non-degenerate spectra only.
    Compact,
    /// Sum over the symmetric group of cycle-type power-sum products.
    Permutation,
    /// Closed form for a rank-one projector.
    Fidelity,
    /// Gauss-Legendre integration of the exact density.
    Quadrature,
    /// Newton recursion on power sums.
    PowerSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n_max: usize,
    pub method: MomentMethod,
    /// `m_1..m_{n_max}`; `m_0 = 1` is implicit.
    pub moments: Vec<f64>,
    /// `kappa_1..kappa_k` for `k = min(n_max, 3)`.
    pub cumulants: Vec<f64>,
}

impl MomentReport {
    fn new(method: MomentMethod, moments: Vec<f64>) -> Self {
        let n_max = moments.len();
        let cumulants = cumulants_from(&moments);
        MomentReport {
            n_max,
            method,
            moments,
            cumulants,
        }
    }

    /// `m_n` for `1 <= n <= n_max`.
    pub fn moment(&self, n: usize) -> f64 {
        self.moments[n - 1]
    }

    pub fn mean(&self) -> f64 {
        self.moments[0]
    }

    pub fn variance(&self) -> Option<f64> {
        self.cumulants.get(1).copied()
    }
}

fn cumulants_from(m: &[f64]) -> Vec<f64> {
    let mut k = Vec::with_capacity(3);
    if let Some(&m1) = m.first() {
        k.push(m1);
        if let Some(&m2) = m.get(1) {
            k.push((m2 - m1 * m1).max(0.0));
            if let Some(&m3) = m.get(2) {
                k.push(m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1);
            }
        }
    }
    k
}

/// Recomputes `kappa_1..kappa_3` from `m_1..m_3`.
pub fn cumulants(report: &MomentReport) -> Result<MomentReport> {
    if report.moments.len() < 3 {
        return Err(Error::InvalidArgument("cumulants need m_1..m_3".into()));
    }
    Ok(MomentReport {
        cumulants: cumulants_from(&report.moments),
        ..report.clone()
    })
}

/// Cumulants `kappa_1..kappa_3` carried in software floats, for moments
/// whose differences cancel heavily.
pub fn cumulants_precise(moments: &[BigReal]) -> [BigReal; 3] {
    let (m1, m2, m3) = (moments[0].clone(), moments[1].clone(), moments[2].clone());
    let k2 = m2.clone() - m1.clone() * m1.clone();
    let k3 = m3 - BigReal::from_i64(3) * m1.clone() * m2
        + BigReal::from_i64(2) * m1.clone() * m1.clone() * m1.clone();
    [m1, k2, k3]
}

fn check_order(n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    Ok(())
}

/// `m_n = C(n+d-1, n)^{-1} sum_k a_k^{n+d-1} / prod_{j != k} (a_k - a_j)`
/// for `n = 1..=n_max`, in `T`. Also returns log2 of the summed term
/// magnitudes (before the binomial) per order.
pub fn compact_moments_in<T: Field>(values: &[T], n_max: usize) -> (Vec<T>, Vec<f64>) {
    let d = values.len();
    let inv_prod: Vec<T> = values
        .iter()
        .enumerate()
        .map(|(k, ak)| {
            let prod = values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .fold(T::one(), |acc, (_, aj)| acc * (ak.clone() - aj.clone()));
            T::one() / prod
        })
        .collect();
    let mut current: Vec<T> = values
        .iter()
        .zip(&inv_prod)
        .map(|(a, w)| a.powi(d as u32 - 1) * w.clone())
        .collect();
    let mut binom = T::one();
    let mut moments = Vec::with_capacity(n_max);
    let mut masses = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        for (c, a) in current.iter_mut().zip(values) {
            *c = c.clone() * a.clone();
        }
        // C(n+d-1, n) = C(n+d-2, n-1) (n+d-1) / n
        binom = binom * T::from_i64((n + d - 1) as i64) / T::from_i64(n as i64);
        let mass = current
            .iter()
            .map(|c| c.log2_abs())
            .fold(f64::NEG_INFINITY, crate::sum::log2_add);
        masses.push(mass);
        moments.push(T::sum_terms(current.iter().cloned()) / binom.clone());
    }
    (moments, masses)
}

/// Working precision that keeps the compact sums accurate to well beyond
/// f64, or `None` when extended floats already suffice.
pub fn compact_precision_bits(s: &Spectrum, n_max: usize) -> Option<usize> {
    let ext: Vec<ExtFloat> = s.values().iter().map(|&a| ExtFloat::from_f64(a)).collect();
    let (_, masses) = compact_moments_in(&ext, n_max);
    let reference = moments_power_sum(s, n_max);
    let d = s.dim();
    let norm = s.operator_norm().max(f64::MIN_POSITIVE);
    let mut log2_binom = 0.0;
    let lost = masses
        .iter()
        .enumerate()
        .map(|(i, &mass)| {
            let n = i + 1;
            log2_binom += ((n + d - 1) as f64 / n as f64).log2();
            let floor = n as f64 * norm.log2() - 40.0;
            let scale = reference.moments[i].abs().log2().max(floor);
            mass - log2_binom - scale
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if lost <= 4.0 {
        None
    } else {
        Some((((lost + 64.0 + 53.0) / 64.0).ceil() as usize * 64).max(128))
    }
}

/// Compact spectral moment formula, precision raised as needed.
pub fn moments_compact(s: &Spectrum, n_max: usize) -> Result<MomentReport> {
    check_order(n_max)?;
    if !s.is_non_degenerate() {
        return Err(Error::RequiresNonDegenerate);
    }
    if s.dim() == 1 {
        let a = s.min();
        return Ok(MomentReport::new(
            MomentMethod::Compact,
            (1..=n_max).map(|n| a.powi(n as i32)).collect(),
        ));
    }
    let moments = match compact_precision_bits(s, n_max) {
        None => {
            let ext: Vec<ExtFloat> = s.values().iter().map(|&a| ExtFloat::from_f64(a)).collect();
            compact_moments_in(&ext, n_max)
                .0
                .iter()
                .map(Field::to_f64)
                .collect()
        }
        Some(bits) => compact_moments_big(s, n_max, bits)
            .iter()
            .map(Field::to_f64)
            .collect(),
    };
    Ok(MomentReport::new(MomentMethod::Compact, moments))
}

/// Compact moments as software floats at `bits` (kept at that precision
/// only inside [`with_precision`]).
pub fn compact_moments_big(s: &Spectrum, n_max: usize, bits: usize) -> Vec<BigReal> {
    with_precision(bits, || {
        let big: Vec<BigReal> = s.values().iter().map(|&a| BigReal::from_f64(a)).collect();
        compact_moments_in(&big, n_max).0
    })
}

/// `sum_{pi in S_n} prod_{cycles c} p_{|c|}` for `n = 1..=n_max`, with
/// `p_r = sum_j n_j a_j^r`.
pub fn permutation_sums_in<T: Field>(s: &Spectrum, n_max: usize) -> Vec<T> {
    let power_sums: Vec<T> = (0..=n_max)
        .map(|r| {
            T::sum_terms(
                s.values()
                    .iter()
                    .zip(s.multiplicities())
                    .map(|(&a, &n)| T::from_f64(a).powi(r as u32) * T::from_i64(n as i64)),
            )
        })
        .collect();
    (1..=n_max)
        .map(|n| {
            let mut terms = Vec::new();
            for_each_permutation(n, |perm| {
                let prod = cycle_lengths(perm)
                    .into_iter()
                    .fold(T::one(), |acc, len| acc * power_sums[len].clone());
                terms.push(prod);
            });
            T::sum_terms(terms)
        })
        .collect()
}

/// Symmetric-group route; works for any spectrum, `n_max <= 6`.
pub fn moments_permutation(s: &Spectrum, n_max: usize) -> Result<MomentReport> {
    check_order(n_max)?;
    if n_max > MAX_PERMUTATION_ORDER {
        return Err(Error::TooLarge {
            what: "permutation moment order",
            value: n_max,
            max: MAX_PERMUTATION_ORDER,
        });
    }
    let d = s.dim() as i64;
    let moments = with_precision(256, || {
        let sums = permutation_sums_in::<BigReal>(s, n_max);
        let mut scale = BigReal::one();
        sums.into_iter()
            .enumerate()
            .map(|(i, sum)| {
                // (d-1)!/(d+n-1)! = prod_{t=0}^{n-1} 1/(d+t)
                scale = scale.clone() / BigReal::from_i64(d + i as i64);
                (sum * scale.clone()).to_f64()
            })
            .collect()
    });
    Ok(MomentReport::new(MomentMethod::Permutation, moments))
}

/// `ln(n! (d-1)! / (d+n-1)!) = sum_{t=1}^n ln(t / (d+t-1))`.
pub fn fidelity_log_moment(d: usize, n: usize) -> f64 {
    crate::sum::neumaier_sum((1..=n).map(|t| (t as f64 / (d + t - 1) as f64).ln()))
}

/// Moments of `|<1|psi>|^2`, the beta(1, d-1) law.
pub fn moments_fidelity(d: usize, n_max: usize) -> Result<MomentReport> {
    check_order(n_max)?;
    if d == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let moments = (1..=n_max)
        .map(|n| fidelity_log_moment(d, n).exp())
        .collect();
    Ok(MomentReport::new(MomentMethod::Fidelity, moments))
}

/// `int x^n P(x) dx` by piecewise Gauss-Legendre; point masses are exact.
pub fn moments_quadrature(law: &Law, n_max: usize) -> Result<MomentReport> {
    check_order(n_max)?;
    let moments = match law {
        Law::PointMass(p) => (1..=n_max).map(|n| p.location.powi(n as i32)).collect(),
        Law::Exact(e) => quadrature_moments(e, n_max),
    };
    Ok(MomentReport::new(MomentMethod::Quadrature, moments))
}

fn quadrature_moments(law: &ExactLaw, n_max: usize) -> Vec<f64> {
    let rule = WeightedNodes::new(law, n_max);
    (1..=n_max)
        .map(|n| rule.integrate(|x| x.powi(n as i32)))
        .collect()
}

/// Newton's recursion on power sums; any spectrum, any order.
pub fn moments_power_sum(s: &Spectrum, n_max: usize) -> MomentReport {
    let moments = with_precision(256, || {
        let points: Vec<BigReal> = s.values().iter().map(|&a| BigReal::from_f64(a)).collect();
        power_sum_moments(&points, s.multiplicities(), s.dim(), n_max)
            .iter()
            .skip(1)
            .map(Field::to_f64)
            .collect()
    });
    MomentReport::new(MomentMethod::PowerSum, moments)
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            f(&perm);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}

/// Cycle lengths of a permutation given in one-line notation.
pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        out.push(len);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{generate, SpectrumKind};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(5, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 120);
        let mut count = 0;
        for_each_permutation(0, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn cycle_type() {
        let mut c = cycle_lengths(&[1, 0, 2, 4, 5, 3]);
        c.sort();
        assert_eq!(c, vec![1, 2, 3]);
    }

    #[test]
    fn uniform_moments() {
        let s = Spectrum::new(vec![0.0, 1.0], vec![1, 1]).unwrap();
        for r in [
            moments_compact(&s, 3).unwrap(),
            moments_permutation(&s, 3).unwrap(),
            moments_power_sum(&s, 3),
        ] {
            assert!(close(r.moment(1), 0.5, 1e-15), "{r:?}");
            assert!(close(r.moment(2), 1.0 / 3.0, 1e-15), "{r:?}");
            assert!(close(r.moment(3), 0.25, 1e-15), "{r:?}");
            assert!(close(r.cumulants[1], 1.0 / 12.0, 1e-14), "{r:?}");
        }
    }

    #[test]
    fn number_operator_mean() {
        for d in [3usize, 10, 40] {
            let s = generate(&SpectrumKind::NumberOperator, d).unwrap();
            let r = moments_compact(&s, 2).unwrap();
            assert!(
                close(r.mean(), (d as f64 + 1.0) / 2.0, 1e-12),
                "{d}: {}",
                r.mean()
            );
        }
    }

    #[test]
    fn point_mass_moments() {
        let s = generate(&SpectrumKind::Constant { value: -1.5 }, 4).unwrap();
        let r = moments_permutation(&s, 4).unwrap();
        for n in 1..=4 {
            assert!(close(r.moment(n), (-1.5f64).powi(n as i32), 1e-15));
        }
        assert!(r.cumulants[1].abs() < 1e-15);
        assert!(r.cumulants[2].abs() < 1e-14);
        assert!(matches!(
            moments_compact(&s, 2),
            Err(Error::RequiresNonDegenerate)
        ));
    }

    #[test]
    fn fidelity_examples() {
        assert!(close(
            moments_fidelity(7, 1).unwrap().mean(),
            1.0 / 7.0,
            1e-15
        ));
        assert!(close(
            moments_fidelity(2, 2).unwrap().moment(2),
            1.0 / 3.0,
            1e-15
        ));
        let one = moments_fidelity(1, 5).unwrap();
        assert!(one.moments.iter().all(|&m| m == 1.0));
        for d in [2usize, 5, 30] {
            let k2 = moments_fidelity(d, 3).unwrap().cumulants[1];
            let d = d as f64;
            assert!(close(k2, (d - 1.0) / (d * d * (d + 1.0)), 1e-13));
        }
    }

    #[test]
    fn permutation_order_cap() {
        let s = Spectrum::new(vec![0.0, 1.0], vec![1, 1]).unwrap();
        assert!(matches!(
            moments_permutation(&s, 7),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            moments_permutation(&s, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cumulants_need_three_moments() {
        let s = Spectrum::new(vec![0.0, 1.0], vec![1, 1]).unwrap();
        let r = moments_power_sum(&s, 2);
        assert!(cumulants(&r).is_err());
        let r = moments_power_sum(&s, 3);
        assert_eq!(cumulants(&r).unwrap().cumulants, r.cumulants);
    }
}
