use crate::error::{Error, Result};
use crate::scalar::Field;
use crate::spectrum::Spectrum;

/// Above this many compositions per coefficient the composition sum is
/// regrouped as a truncated power-series product.
const ENUMERATION_LIMIT: u128 = 1 << 20;

/// One summand `coeff * (a - x)^power * sign(a - x)` of the density.
#[derive(Debug, Clone)]
pub struct Term<T> {
    /// Index of the eigenvalue `a` in the spectrum.
    pub eigen: usize,
    /// Derivative order, `0..n_k`.
    pub order: usize,
    pub power: u32,
    pub coeff: T,
    /// `log2 |coeff|`, for cheap magnitude estimates.
    pub log2_abs: f64,
}

/// Piecewise-polynomial representation of the law of a spectrum with at
/// least two distinct eigenvalues.
#[derive(Debug, Clone)]
pub struct LawCoefficients<T> {
    pub(crate) spectrum: Spectrum,
    pub(crate) points: Vec<T>,
    pub(crate) terms: Vec<Term<T>>,
}

impl<T: Field> LawCoefficients<T> {
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    /// Eigenvalues converted to the working scalar.
    pub fn points(&self) -> &[T] {
        &self.points
    }
}

/// Builds the coefficient table of the density
/// `P(x) = sum c_{k,M} (a_k - x)^{d+M-n_k-1} sign(a_k - x)`.
pub fn compile_coefficients<T: Field>(spectrum: &Spectrum) -> Result<LawCoefficients<T>> {
    if spectrum.is_point_mass() {
        return Err(Error::DegenerateLaw);
    }
    let d = spectrum.dim();
    let ell = spectrum.distinct();
    let mult = spectrum.multiplicities();
    let points: Vec<T> = spectrum.values().iter().map(|&a| T::from_f64(a)).collect();

    let max_order = mult.iter().copied().max().unwrap_or(1) - 1;
    // (d-1) C(d-2, q) for q = 0..=max_order
    let mut scale = Vec::with_capacity(max_order + 1);
    let mut binom = T::one();
    for q in 0..=max_order.min(d - 2) {
        if q > 0 {
            binom = binom * T::from_i64((d - 1 - q) as i64) / T::from_i64(q as i64);
        }
        scale.push(T::from_i64((d - 1) as i64) * binom.clone());
    }

    let mut terms = Vec::new();
    for k in 0..ell {
        let nk = mult[k];
        let others: Vec<usize> = (0..ell).filter(|&j| j != k).collect();
        // factors[i][m] = C(n_j+m-1, m) / (a_k - a_j)^{n_j+m}
        let factors: Vec<Vec<T>> = others
            .iter()
            .map(|&j| {
                let gap = points[k].clone() - points[j].clone();
                let inv = T::one() / gap;
                let nj = mult[j];
                let mut row = Vec::with_capacity(nk);
                let mut value = inv.powi(nj as u32);
                for m in 0..nk {
                    if m > 0 {
                        value = value * inv.clone() * T::from_i64((nj + m - 1) as i64)
                            / T::from_i64(m as i64);
                    }
                    row.push(value.clone());
                }
                row
            })
            .collect();

        for order in 0..nk {
            let beta = if composition_count(order, others.len()) <= ENUMERATION_LIMIT {
                enumerate_compositions(&factors, order)
            } else {
                convolve(&factors, order)
            };
            let beta = beta.ok_or_else(|| {
                Error::PrecisionExceeded(format!(
                    "pole products for eigenvalue {} leave the scalar range",
                    spectrum.values()[k]
                ))
            })?;
            let q = nk - 1 - order;
            let mut coeff = scale[q].clone() * beta;
            if order % 2 == 1 {
                coeff = -coeff;
            }
            coeff = coeff / T::from_i64(2);
            if !coeff.is_representable() {
                return Err(Error::PrecisionExceeded(format!(
                    "coefficient for eigenvalue {} at order {order} is out of range",
                    spectrum.values()[k]
                )));
            }
            let log2_abs = coeff.log2_abs();
            terms.push(Term {
                eigen: k,
                order,
                power: (d + order - nk - 1) as u32,
                coeff,
                log2_abs,
            });
        }
    }
    Ok(LawCoefficients {
        spectrum: spectrum.clone(),
        points,
        terms,
    })
}

/// Number of compositions of `total` into `parts` nonnegative parts.
fn composition_count(total: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    // C(total + parts - 1, parts - 1), saturating
    let (n, r) = ((total + parts - 1) as u128, (parts - 1).min(total) as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Products of nonzero factors that come out zero or unrepresentable have
/// left the scalar's range.
fn in_range<T: Field>(v: &T) -> bool {
    v.is_representable() && !v.is_zero()
}

/// Sums `prod_i factors[i][m_i]` over all compositions `m` of `total`,
/// visited in lexicographic order. `None` when a product leaves the range.
fn enumerate_compositions<T: Field>(factors: &[Vec<T>], total: usize) -> Option<T> {
    let parts = factors.len();
    if parts == 0 {
        return Some(if total == 0 { T::one() } else { T::zero() });
    }
    let mut terms = Vec::new();
    for parts_m in Compositions::new(total, parts) {
        let product = parts_m
            .iter()
            .zip(factors)
            .fold(T::one(), |acc, (&m, row)| acc * row[m].clone());
        if !in_range(&product) {
            return None;
        }
        terms.push(product);
    }
    Some(T::sum_terms(terms))
}

/// Same sum as [`enumerate_compositions`], grouped as the coefficient of
/// `t^total` in `prod_i sum_m factors[i][m] t^m`.
fn convolve<T: Field>(factors: &[Vec<T>], total: usize) -> Option<T> {
    if factors.iter().flatten().any(|f| !in_range(f)) {
        return None;
    }
    let mut acc = vec![T::zero(); total + 1];
    acc[0] = T::one();
    for row in factors {
        let mut next = Vec::with_capacity(total + 1);
        for deg in 0..=total {
            next.push(T::sum_terms(
                (0..=deg).map(|m| acc[deg - m].clone() * row[m].clone()),
            ));
        }
        acc = next;
    }
    Some(acc.swap_remove(total))
}

/// Weak compositions of `total` into `parts` parts in lexicographic order.
pub(crate) struct Compositions {
    current: Vec<usize>,
    done: bool,
}

impl Compositions {
    pub(crate) fn new(total: usize, parts: usize) -> Self {
        assert!(parts > 0);
        let mut current = vec![0; parts];
        current[parts - 1] = total;
        Compositions {
            current,
            done: false,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // successor: bump the slot left of the rightmost nonzero entry and
        // push the remaining mass of the suffix into the last slot
        match self.current.iter().rposition(|&v| v > 0) {
            Some(r) if r > 0 => {
                let suffix: usize = self.current[r..].iter().sum();
                self.current[r - 1] += 1;
                for v in &mut self.current[r..] {
                    *v = 0;
                }
                let last = self.current.len() - 1;
                self.current[last] = suffix - 1;
            }
            _ => self.done = true,
        }
        Some(out)
    }
}
