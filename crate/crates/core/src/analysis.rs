//! Exact tail probabilities against Levy's concentration bound, and
//! cumulant diagnostics for the approach to a Gaussian.

use std::f64::consts::{LN_2, PI};

use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{compile_law_auto, ExactLaw, Law};
use crate::moments::{compact_moments_big, compact_precision_bits, cumulants_precise};
use crate::scalar::{with_precision, BigReal, Field};
use crate::spectrum::{generate, Spectrum, SpectrumKind};

/// `C_1 = 1 / (9 pi^3 ln 2)`.
pub fn levy_c1() -> f64 {
    1.0 / (9.0 * PI.powi(3) * LN_2)
}

/// Gaussian rate of the Levy bound for the rank-one projector, `C_1 / 2`.
pub fn random_guess_levy_constant() -> f64 {
    levy_c1() / 2.0
}

/// `d`-independent Gaussian rate quoted for the number operator, `2 C_1`.
pub fn number_operator_levy_constant() -> f64 {
    2.0 * levy_c1()
}

/// Rate reported for the number-operator tail `alpha e^{-C eps}`.
pub const NUMBER_OPERATOR_REFERENCE_RATE: f64 = 0.25;

/// Tail values inside this window enter the decay fits.
pub const FIT_WINDOW: (f64, f64) = (1e-12, 0.5);

/// Absolute slack when checking the exact tail against the bound.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// `ln tail ~ ln prefactor - rate * eps^power`, least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub prefactor: f64,
    pub rate: f64,
    pub power: u32,
    pub points: usize,
}

/// Least-squares fit of `ln y` on `x^power` over points whose `y` lies in
/// `window`; `None` with fewer than two usable points.
pub fn fit_tail(eps: &[f64], tail: &[f64], power: u32, window: (f64, f64)) -> Option<TailFit> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(tail)
        .filter(|&(_, &t)| t >= window.0 && t <= window.1)
        .map(|(&e, &t)| (e.powi(power as i32), t.ln()))
        .collect();
    let (slope, intercept) = least_squares(&pts)?;
    Some(TailFit {
        prefactor: intercept.exp(),
        rate: -slope,
        power,
        points: pts.len(),
    })
}

/// `(slope, intercept)` of the ordinary least-squares line.
pub fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub dim: usize,
    pub mean: f64,
    /// Lipschitz constant `2 max_j |a_j|`.
    pub eta: f64,
    pub c1: f64,
    pub eps: Vec<f64>,
    /// `Prob(X - mean >= eps)`.
    pub exact_tail: Vec<f64>,
    /// `2 exp(-C_1 2d eps^2 / eta^2)`.
    pub levy_bound: Vec<f64>,
    /// Linear-in-eps fit of the exact tail.
    pub exact_fit: Option<TailFit>,
    /// Quadratic-in-eps fit of the bound.
    pub bound_fit: Option<TailFit>,
    /// Grid points where an informative bound is beaten by the exact tail.
    pub violations: Vec<f64>,
}

impl ConcentrationReport {
    pub fn bound_holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Levy bound at deviation `eps` for dimension `d` and Lipschitz constant
/// `eta`.
pub fn levy_bound(d: usize, eta: f64, eps: f64) -> f64 {
    2.0 * (-levy_c1() * 2.0 * d as f64 * eps * eps / (eta * eta)).exp()
}

fn check_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(Error::InvalidArgument(
            "deviation grid must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Exact mean-centred upper tail against the Levy bound.
pub fn levy_compare(s: &Spectrum, eps: &[f64]) -> Result<ConcentrationReport> {
    check_grid(eps)?;
    let law = match compile_law_auto(s)? {
        Law::PointMass(_) => return Err(Error::DegenerateLaw),
        Law::Exact(e) => e,
    };
    Ok(concentration(&law, eps))
}

fn concentration(law: &ExactLaw, eps: &[f64]) -> ConcentrationReport {
    let s = law.spectrum();
    let mean = s.mean();
    let eta = 2.0 * s.operator_norm();
    let exact_tail: Vec<f64> = eps.par_iter().map(|&e| law.sf(mean + e)).collect();
    let bound: Vec<f64> = eps.iter().map(|&e| levy_bound(s.dim(), eta, e)).collect();
    let violations = eps
        .iter()
        .zip(exact_tail.iter().zip(&bound))
        .filter(|&(_, (&t, &b))| b <= 1.0 && t > b + DOMINANCE_TOL)
        .map(|(&e, _)| e)
        .collect();
    ConcentrationReport {
        dim: s.dim(),
        mean,
        eta,
        c1: levy_c1(),
        eps: eps.to_vec(),
        exact_fit: fit_tail(eps, &exact_tail, 1, FIT_WINDOW),
        bound_fit: fit_tail(eps, &bound, 2, (f64::MIN_POSITIVE, 1.0)),
        exact_tail,
        levy_bound: bound,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberOperatorReport {
    pub concentration: ConcentrationReport,
    /// Fit of `alpha e^{-C eps}` over `1 <= eps <= 10`.
    pub fit: Option<TailFit>,
    pub reference_rate: f64,
    /// `2 C_1`, and the `d`-independent bound `2 e^{-C' eps^2}` on the grid.
    pub levy_constant: f64,
    pub reference_bound: Vec<f64>,
}

/// `B(d, eps) = 1 - cdf((d+1)/2 + eps)` for `a_k = k`, fitted on
/// `eps in [1, 10]`.
pub fn number_operator_tail(d: usize, eps: &[f64]) -> Result<NumberOperatorReport> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("dimension {d} is below 3")));
    }
    check_grid(eps)?;
    let s = generate(&SpectrumKind::NumberOperator, d)?;
    let concentration = levy_compare(&s, eps)?;
    let window: Vec<(f64, f64)> = concentration
        .eps
        .iter()
        .zip(&concentration.exact_tail)
        .filter(|&(&e, _)| (1.0..=10.0).contains(&e))
        .map(|(&e, &t)| (e, t))
        .collect();
    let (we, wt): (Vec<f64>, Vec<f64>) = window.into_iter().unzip();
    let fit = fit_tail(&we, &wt, 1, (f64::MIN_POSITIVE, 1.0));
    let c_prime = number_operator_levy_constant();
    Ok(NumberOperatorReport {
        reference_bound: eps
            .iter()
            .map(|&e| 2.0 * (-c_prime * e * e).exp())
            .collect(),
        concentration,
        fit,
        reference_rate: NUMBER_OPERATOR_REFERENCE_RATE,
        levy_constant: c_prime,
    })
}

/// One spectrum of a CLT sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub dim: usize,
    pub mean: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// `kappa3 / kappa2^{3/2}`, the third cumulant of the standardized
    /// variable.
    pub skewness: f64,
    pub z: Vec<f64>,
    /// `sqrt(kappa2) P(mean + z sqrt(kappa2))`.
    pub rescaled_density: Vec<f64>,
    pub normal_density: Vec<f64>,
    pub sup_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub kind: SpectrumKind,
    pub rows: Vec<CltRow>,
    /// Slope of `ln |skewness|` against `ln d`.
    pub skewness_slope: Option<f64>,
}

/// Default standardized grid for rescaled densities.
pub fn default_z_grid() -> Vec<f64> {
    (0..=160).map(|i| -4.0 + 0.05 * i as f64).collect()
}

/// Cumulants and rescaled densities of `kind` across `dims`.
pub fn clt_diagnostics(kind: &SpectrumKind, dims: &[usize], z: &[f64]) -> Result<CltReport> {
    if dims.is_empty() || dims.iter().any(|&d| d < 4) || dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "dimension grid must ascend from at least 4".into(),
        ));
    }
    let rows = dims
        .iter()
        .map(|&d| clt_row(&generate(kind, d)?, z))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.skewness != 0.0)
        .map(|r| ((r.dim as f64).ln(), r.skewness.abs().ln()))
        .collect();
    Ok(CltReport {
        kind: kind.clone(),
        rows,
        skewness_slope: least_squares(&pts).map(|p| p.0),
    })
}

/// `kappa_1..kappa_3` by the compact route at whatever precision the
/// cancellation demands.
pub fn precise_cumulants(s: &Spectrum) -> Result<[f64; 3]> {
    if !s.is_non_degenerate() {
        return Err(Error::RequiresNonDegenerate);
    }
    let bits = compact_precision_bits(s, 3).unwrap_or(128) + 64;
    let moments = compact_moments_big(s, 3, bits);
    Ok(with_precision(bits, || {
        let k = cumulants_precise(&moments);
        [k[0].to_f64(), k[1].to_f64(), k[2].to_f64()]
    }))
}

fn clt_row(s: &Spectrum, z: &[f64]) -> Result<CltRow> {
    let [mean, kappa2, kappa3] = precise_cumulants(s)?;
    if kappa2.is_nan() || kappa2 <= 0.0 {
        return Err(Error::DegenerateLaw);
    }
    let sd = kappa2.sqrt();
    let law = match compile_law_auto(s)? {
        Law::PointMass(_) => return Err(Error::DegenerateLaw),
        Law::Exact(e) => e,
    };
    let rescaled_density: Vec<f64> = z
        .par_iter()
        .map(|&t| sd * law.density(mean + t * sd))
        .collect();
    let normal_density: Vec<f64> = z
        .iter()
        .map(|&t| (-0.5 * t * t).exp() / (2.0 * PI).sqrt())
        .collect();
    let sup_deviation = rescaled_density
        .iter()
        .zip(&normal_density)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CltRow {
        dim: s.dim(),
        mean,
        kappa2,
        kappa3,
        skewness: kappa3 / kappa2.powf(1.5),
        z: z.to_vec(),
        rescaled_density,
        normal_density,
        sup_deviation,
    })
}

/// Exact `Prob(F - 1/d >= eps)` for the rank-one projector.
pub fn random_guess_tail(d: usize, eps: f64) -> f64 {
    let base = 1.0 - (1.0 + eps * d as f64) / d as f64;
    if base <= 0.0 {
        0.0
    } else {
        base.powi(d as i32 - 1)
    }
}

/// Product covariance `E[X_h X_k] - E[X_h] E[X_k]` of two distinct basis
/// projectors, from second moments of rank-one and rank-two projectors.
pub fn projector_covariance(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument("need d >= 2".into()));
    }
    let second = |rank: usize| -> Result<BigReal> {
        let s = generate(&SpectrumKind::Projector { rank }, d)?;
        Ok(with_precision(256, || {
            let points: Vec<BigReal> = s.values().iter().map(|&a| BigReal::from_f64(a)).collect();
            crate::law::power_sum_moments(&points, s.multiplicities(), d, 2)[2].clone()
        }))
    };
    let (m2_two, m2_one) = (second(2)?, second(1)?);
    Ok(with_precision(256, || {
        // E[(X_h + X_k)^2] = 2 E[X_h^2] + 2 E[X_h X_k]
        let cross = (m2_two - BigReal::from_i64(2) * m2_one) / BigReal::from_i64(2);
        let mean = BigReal::one() / BigReal::from_i64(d as i64);
        (cross - mean.clone() * mean).to_f64()
    }))
}
