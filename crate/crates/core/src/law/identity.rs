use crate::error::{Error, Result};
use crate::scalar::{with_precision, BigReal, ExtFloat, Field};
use crate::spectrum::Spectrum;

/// `sum_k (a_k - omega)^n / prod_{j != k} (a_k - a_j)` in the scalar `T`.
/// Also returns log2 of the summed term magnitudes.
pub fn identity_sum<T: Field>(values: &[T], omega: &T, n: u32) -> (T, f64) {
    let mut log2_mass = f64::NEG_INFINITY;
    let terms: Vec<T> = values
        .iter()
        .enumerate()
        .map(|(k, ak)| {
            let denom = values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .fold(T::one(), |acc, (_, aj)| acc * (ak.clone() - aj.clone()));
            let term = (ak.clone() - omega.clone()).powi(n) / denom;
            log2_mass = crate::sum::log2_add(log2_mass, term.log2_abs());
            term
        })
        .collect();
    (T::sum_terms(terms), log2_mass)
}

/// Evaluates the partial-fraction identity sum, which is 0 for
/// `n <= d - 2` and 1 for `n = d - 1` at every `omega`. Precision is raised
/// until rounding stays far below the result scale.
pub fn identity_check(spectrum: &Spectrum, omega: f64, n: usize) -> Result<f64> {
    if !spectrum.is_non_degenerate() {
        return Err(Error::RequiresNonDegenerate);
    }
    if !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("shift {omega}")));
    }
    let d = spectrum.dim();
    if n + 1 > d {
        return Err(Error::InvalidArgument(format!(
            "power {n} exceeds d - 1 = {}",
            d - 1
        )));
    }
    let ext: Vec<ExtFloat> = spectrum
        .values()
        .iter()
        .map(|&a| ExtFloat::from_f64(a))
        .collect();
    let (estimate, log2_mass) = identity_sum(&ext, &ExtFloat::from_f64(omega), n as u32);
    // results are O(1); keep 64 bits beyond the cancelled mass
    if log2_mass <= 0.0 {
        return Ok(estimate.to_f64());
    }
    let bits = (((log2_mass + 64.0 + 53.0) / 64.0).ceil() as usize * 64).max(128);
    Ok(with_precision(bits, || {
        let big: Vec<BigReal> = spectrum
            .values()
            .iter()
            .map(|&a| BigReal::from_f64(a))
            .collect();
        identity_sum(&big, &BigReal::from_f64(omega), n as u32)
            .0
            .to_f64()
    }))
}
