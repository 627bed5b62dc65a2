//! The exact law of `<psi|A|psi>` for Haar-random `psi`.
//!
//! [`compile_law`] turns a [`Spectrum`] into either a [`PointMassLaw`] (one
//! distinct eigenvalue) or an [`ExactLaw`] backed by a coefficient table in
//! the scalar type selected by a [`PrecisionPolicy`].

mod coeffs;
mod eval;
mod identity;

pub use coeffs::{compile_coefficients, LawCoefficients, Term};
pub use identity::{identity_check, identity_sum};

pub(crate) use eval::power_sum_moments;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{with_precision, BigReal, ExtFloat, Field, Real};
use crate::spectrum::Spectrum;

/// Default `|lambda| * range` below which transforms use the moment series.
pub const DEFAULT_TAYLOR_SWITCH: f64 = 1.0;
/// Default software-float precision.
pub const DEFAULT_HIGH_BITS: usize = 256;

/// Scalar backend for the coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMode {
    /// Plain f64 with compensated summation; fails on coefficient overflow.
    FastFloat,
    /// Extended-exponent floats with compensated summation; never overflows.
    Compensated,
    /// Software floats with the given mantissa bits (at least 64).
    HighPrecision { bits: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub mode: PrecisionMode,
    pub taylor_switch_radius: f64,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            mode: PrecisionMode::Compensated,
            taylor_switch_radius: DEFAULT_TAYLOR_SWITCH,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(mode: PrecisionMode) -> Result<Self> {
        PrecisionPolicy {
            mode,
            ..Default::default()
        }
        .validated()
    }

    pub fn fast() -> Self {
        PrecisionPolicy {
            mode: PrecisionMode::FastFloat,
            ..Default::default()
        }
    }

    pub fn compensated() -> Self {
        PrecisionPolicy::default()
    }

    pub fn high(bits: usize) -> Result<Self> {
        PrecisionPolicy::new(PrecisionMode::HighPrecision { bits })
    }

    pub fn with_taylor_switch_radius(self, radius: f64) -> Result<Self> {
        PrecisionPolicy {
            taylor_switch_radius: radius,
            ..self
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if let PrecisionMode::HighPrecision { bits } = self.mode {
            if bits < 64 {
                return Err(Error::InvalidArgument(format!(
                    "precision {bits} bits is below 64"
                )));
            }
        }
        if !(self.taylor_switch_radius.is_finite() && self.taylor_switch_radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "taylor switch radius {} must be positive",
                self.taylor_switch_radius
            )));
        }
        Ok(self)
    }

    /// Picks a backend from the worst cancellation the density and CDF
    /// kernels meet on a scan of the support: extended floats when at most
    /// `LOSS_BITS` bits are lost, software floats otherwise.
    pub fn suggest(spectrum: &Spectrum) -> Self {
        const LOSS_BITS: f64 = 12.0;
        let loss = match cancellation_bits(spectrum) {
            Some(loss) => loss,
            None => return PrecisionPolicy::default(),
        };
        if loss <= LOSS_BITS {
            PrecisionPolicy::default()
        } else {
            let bits = ((loss + 96.0) / 64.0).ceil() as usize * 64;
            PrecisionPolicy {
                mode: PrecisionMode::HighPrecision {
                    bits: bits.max(128),
                },
                ..Default::default()
            }
        }
    }
}

/// Estimated bits lost to cancellation across the support, `None` for a
/// point mass.
pub fn cancellation_bits(spectrum: &Spectrum) -> Option<f64> {
    let table = compile_coefficients::<ExtFloat>(spectrum).ok()?;
    let (lo, range) = (spectrum.min(), spectrum.range());
    let log2_range = range.log2();
    let rounding = (spectrum.dim() as f64).log2();
    let worst = (0..64)
        .map(|i| {
            let x = ExtFloat::from_f64(lo + range * (i as f64 + 0.5) / 64.0);
            // densities scale like 1/range, the CDF like 1
            let density = table.density_cancellation_log2(&x) + log2_range;
            let cdf = table.cdf_cancellation_log2(&x);
            density.max(cdf)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Some(worst.max(0.0) + rounding)
}

#[derive(Debug, Clone)]
enum Table {
    Fast(LawCoefficients<f64>),
    Compensated(LawCoefficients<ExtFloat>),
    High {
        bits: usize,
        coeffs: LawCoefficients<BigReal>,
    },
}

/// Runs a generic expression against whichever table backs the law.
macro_rules! dispatch {
    ($law:expr, |$c:ident| $body:expr) => {
        match &$law.table {
            Table::Fast($c) => $body,
            Table::Compensated($c) => $body,
            Table::High { bits, coeffs: $c } => with_precision(*bits, || $body),
        }
    };
}

/// A compiled law of a spectrum with at least two distinct eigenvalues.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    table: Table,
    policy: PrecisionPolicy,
}

impl ExactLaw {
    pub fn compile(spectrum: &Spectrum, policy: PrecisionPolicy) -> Result<Self> {
        let policy = policy.validated()?;
        let table = match policy.mode {
            PrecisionMode::FastFloat => Table::Fast(compile_coefficients(spectrum)?),
            PrecisionMode::Compensated => Table::Compensated(compile_coefficients(spectrum)?),
            PrecisionMode::HighPrecision { bits } => Table::High {
                bits,
                coeffs: with_precision(bits, || compile_coefficients(spectrum))?,
            },
        };
        Ok(ExactLaw { table, policy })
    }

    pub fn policy(&self) -> PrecisionPolicy {
        self.policy
    }

    pub fn spectrum(&self) -> &Spectrum {
        dispatch!(self, |c| c.spectrum())
    }

    /// Coefficient table as f64 `(eigenvalue index, order, power, coeff)`.
    pub fn coefficients(&self) -> Vec<(usize, usize, u32, f64)> {
        dispatch!(self, |c| c
            .terms()
            .iter()
            .map(|t| (t.eigen, t.order, t.power, t.coeff.to_f64()))
            .collect())
    }

    pub fn density(&self, x: f64) -> f64 {
        dispatch!(self, |c| eval_at(c, x, |c, x| c.density(x)))
    }

    /// Signed residue sum with no support clamp, for checking that it
    /// vanishes outside the numerical range.
    pub fn density_unclamped(&self, x: f64) -> f64 {
        dispatch!(self, |c| eval_at(c, x, |c, x| c.density_unclamped(x)))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        dispatch!(self, |c| eval_at(c, x, |c, x| c.cdf(x)))
    }

    pub fn sf(&self, x: f64) -> f64 {
        dispatch!(self, |c| eval_at(c, x, |c, x| c.sf(x)))
    }

    pub fn char_fn(&self, lambda: f64) -> Result<Complex64> {
        if lambda == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let radius = self.policy.taylor_switch_radius;
        let (re, im) = dispatch!(self, |c| char_fn_in(c, lambda, radius));
        let value = Complex64::new(re, im);
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::PrecisionExceeded(format!(
                "characteristic function at {lambda}"
            )));
        }
        Ok(value)
    }

    /// `E[e^{y (X - omega)}]`.
    pub fn mgf(&self, y: f64, omega: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(1.0);
        }
        let radius = self.policy.taylor_switch_radius;
        let value = dispatch!(self, |c| mgf_in(c, y, omega, radius));
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::PrecisionExceeded(format!(
                "moment generating function at y = {y} leaves the representable range"
            )));
        }
        Ok(value)
    }
}

fn eval_at<T: Field>(
    c: &LawCoefficients<T>,
    x: f64,
    f: impl Fn(&LawCoefficients<T>, &T) -> T,
) -> f64 {
    f(c, &T::from_f64(x)).to_f64()
}

fn char_fn_in<T: Real>(c: &LawCoefficients<T>, lambda: f64, radius: f64) -> (f64, f64) {
    let centre = c.centre();
    let l = T::from_f64(lambda);
    let (re, im) = if use_series(c, lambda, radius, false) {
        c.transform_series(&l, &centre, true)
    } else {
        c.char_closed(&l, &centre)
    };
    // rotate by e^{i lambda centre}
    let phase = l * centre;
    let (cs, sn) = (phase.cos(), phase.sin());
    let out_re = re.clone() * cs.clone() - im.clone() * sn.clone();
    let out_im = re * sn + im * cs;
    (out_re.to_f64(), out_im.to_f64())
}

fn mgf_in<T: Real>(c: &LawCoefficients<T>, y: f64, omega: f64, radius: f64) -> f64 {
    let centre = c.centre();
    let yt = T::from_f64(y);
    let centred = if use_series(c, y, radius, true) {
        c.transform_series(&yt, &centre, false).0
    } else {
        c.mgf_closed(&yt, &centre)
    };
    let shift = (yt * (centre - T::from_f64(omega))).exp();
    (centred * shift).to_f64()
}

/// Series inside the switch radius; beyond it, whichever branch accumulates
/// the smaller magnitude.
fn use_series<T: Real>(c: &LawCoefficients<T>, y: f64, radius: f64, real: bool) -> bool {
    if y.abs() * c.spectrum().range() < radius {
        return true;
    }
    c.series_cancellation_log2(y) <= c.transform_cancellation_log2(y, real)
}

/// Law of a spectrum with a single distinct eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMassLaw {
    pub location: f64,
    pub dim: usize,
}

impl PointMassLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.location {
            0.0
        } else {
            1.0
        }
    }

    pub fn char_fn(&self, lambda: f64) -> Complex64 {
        Complex64::from_polar(1.0, lambda * self.location)
    }

    pub fn mgf(&self, y: f64, omega: f64) -> f64 {
        (y * (self.location - omega)).exp()
    }
}

/// Either kind of compiled law.
#[derive(Debug, Clone)]
pub enum Law {
    PointMass(PointMassLaw),
    Exact(ExactLaw),
}

/// Compiles the law of `spectrum` under `policy`.
pub fn compile_law(spectrum: &Spectrum, policy: PrecisionPolicy) -> Result<Law> {
    if spectrum.is_point_mass() {
        policy.validated()?;
        return Ok(Law::PointMass(PointMassLaw {
            location: spectrum.min(),
            dim: spectrum.dim(),
        }));
    }
    ExactLaw::compile(spectrum, policy).map(Law::Exact)
}

/// [`compile_law`] with the policy from [`PrecisionPolicy::suggest`].
pub fn compile_law_auto(spectrum: &Spectrum) -> Result<Law> {
    compile_law(spectrum, PrecisionPolicy::suggest(spectrum))
}

impl Law {
    pub fn spectrum(&self) -> Spectrum {
        match self {
            Law::PointMass(p) => {
                Spectrum::new(vec![p.location], vec![p.dim]).expect("valid point mass")
            }
            Law::Exact(e) => e.spectrum().clone(),
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, Law::PointMass(_))
    }

    /// `[a_1, a_l]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Law::PointMass(p) => (p.location, p.location),
            Law::Exact(e) => (e.spectrum().min(), e.spectrum().max()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Law::PointMass(p) => p.location,
            Law::Exact(e) => e.spectrum().mean(),
        }
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            Law::PointMass(_) => Err(Error::NoDensity),
            Law::Exact(e) => Ok(e.density(x)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Law::PointMass(p) => p.cdf(x),
            Law::Exact(e) => e.cdf(x),
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Law::PointMass(p) => 1.0 - p.cdf(x),
            Law::Exact(e) => e.sf(x),
        }
    }

    pub fn char_fn(&self, lambda: f64) -> Result<Complex64> {
        match self {
            Law::PointMass(p) => Ok(p.char_fn(lambda)),
            Law::Exact(e) => e.char_fn(lambda),
        }
    }

    pub fn mgf(&self, y: f64, omega: f64) -> Result<f64> {
        match self {
            Law::PointMass(p) => {
                let v = p.mgf(y, omega);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::PrecisionExceeded(format!(
                        "moment generating function at y = {y}"
                    )))
                }
            }
            Law::Exact(e) => e.mgf(y, omega),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::WeightedNodes;
    use crate::spectrum::{generate, SpectrumKind};

    fn uniform() -> Spectrum {
        Spectrum::new(vec![0.0, 1.0], vec![1, 1]).unwrap()
    }

    fn policies() -> Vec<PrecisionPolicy> {
        vec![
            PrecisionPolicy::fast(),
            PrecisionPolicy::compensated(),
            PrecisionPolicy::high(128).unwrap(),
        ]
    }

    #[test]
    fn uniform_law() {
        for policy in policies() {
            let law = ExactLaw::compile(&uniform(), policy).unwrap();
            assert_eq!(law.density(0.3), 1.0);
            assert_eq!(law.density(-0.1), 0.0);
            assert_eq!(law.density(1.2), 0.0);
            assert!((law.cdf(0.25) - 0.25).abs() < 1e-15);
            assert_eq!(law.cdf(1.0), 1.0);
            assert!((law.mgf(1.0, 0.0).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-14);
            for &lambda in &[-40.0, -3.0, -0.9, -1e-3, 1e-6, 0.5, 0.999, 1.001, 2.0, 17.0] {
                // (e^{i l} - 1)/(i l) = e^{i l/2} sin(l/2)/(l/2)
                let expect =
                    Complex64::from_polar((lambda / 2.0).sin() / (lambda / 2.0), lambda / 2.0);
                let got = law.char_fn(lambda).unwrap();
                assert!(
                    (got - expect).norm() < 1e-14,
                    "{policy:?} {lambda}: {got} vs {expect}"
                );
            }
            assert_eq!(law.char_fn(0.0).unwrap(), Complex64::new(1.0, 0.0));
            assert_eq!(law.mgf(0.0, 3.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn mgf_shift_is_a_prefactor() {
        let s = generate(&SpectrumKind::NumberOperator, 5).unwrap();
        let law = ExactLaw::compile(&s, PrecisionPolicy::default()).unwrap();
        for &y in &[-2.0, -0.1, 0.05, 0.7, 3.0] {
            let base = law.mgf(y, 0.0).unwrap();
            for &omega in &[-10.0, 2.5, 10.0] {
                let shifted = law.mgf(y, omega).unwrap();
                let expect = (-omega * y).exp() * base;
                assert!((shifted - expect).abs() <= 1e-13 * expect, "{y} {omega}");
            }
        }
    }

    #[test]
    fn projector_mgf_series() {
        for d in [2usize, 4, 9] {
            let s = generate(&SpectrumKind::Projector { rank: 1 }, d).unwrap();
            let law = ExactLaw::compile(&s, PrecisionPolicy::default()).unwrap();
            for &y in &[0.3, 1.5, 6.0] {
                let mut term = 1.0;
                let mut expect = 1.0;
                for n in 1..200 {
                    term *= y / (d + n - 1) as f64;
                    expect += term;
                }
                let got = law.mgf(y, 0.0).unwrap();
                assert!(
                    (got - expect).abs() < 1e-13 * expect,
                    "d={d} y={y}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn branches_agree_around_the_switch() {
        for d in [3usize, 8, 15, 30] {
            let s = generate(&SpectrumKind::NumberOperator, d).unwrap();
            let bits = 64 * (d / 8 + 3);
            with_precision(bits, || {
                let c: LawCoefficients<BigReal> = compile_coefficients(&s).unwrap();
                let centre = c.centre();
                for i in 0..9 {
                    let t = 0.8 + 0.05 * i as f64;
                    let lambda = BigReal::from_f64(t / s.range());
                    let (sr, si) = c.transform_series(&lambda, &centre, true);
                    let (cr, ci) = c.char_closed(&lambda, &centre);
                    let err = (sr.to_f64() - cr.to_f64()).hypot(si.to_f64() - ci.to_f64());
                    assert!(err < 1e-12, "d={d} t={t}: {err}");
                }
            });
            // the default backend must stay accurate across the switch
            let law = ExactLaw::compile(&s, PrecisionPolicy::default()).unwrap();
            let hp = ExactLaw::compile(&s, PrecisionPolicy::high(512).unwrap()).unwrap();
            for i in 0..9 {
                let lambda = (0.8 + 0.05 * i as f64) / s.range();
                let err = (law.char_fn(lambda).unwrap() - hp.char_fn(lambda).unwrap()).norm();
                assert!(err < 1e-12, "d={d} lambda={lambda}: {err}");
            }
        }
    }

    #[test]
    fn char_fn_matches_fourier_integral_of_density() {
        let spectra = [
            generate(&SpectrumKind::NumberOperator, 4).unwrap(),
            Spectrum::new(vec![-1.0, 0.25, 2.0], vec![2, 1, 3]).unwrap(),
            Spectrum::new(vec![0.0, 1.0], vec![5, 1]).unwrap(),
        ];
        for s in spectra {
            let law = ExactLaw::compile(&s, PrecisionPolicy::default()).unwrap();
            let rule = WeightedNodes::new(&law, 120);
            for i in -8..=8 {
                let lambda = 2.5 * i as f64;
                let re = rule.integrate(|x| (lambda * x).cos());
                let im = rule.integrate(|x| (lambda * x).sin());
                let got = law.char_fn(lambda).unwrap();
                assert!(
                    (got - Complex64::new(re, im)).norm() < 1e-10,
                    "{s:?} {lambda}"
                );
                assert!(got.norm() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn mgf_matches_laplace_integral_of_density() {
        let s = Spectrum::new(vec![-1.0, 0.5, 2.0], vec![2, 2, 1]).unwrap();
        let law = ExactLaw::compile(&s, PrecisionPolicy::default()).unwrap();
        let rule = WeightedNodes::new(&law, 120);
        for &y in &[-5.0, -0.3, 0.2, 1.0, 4.0] {
            let expect = rule.integrate(|x| (y * x).exp());
            let got = law.mgf(y, 0.0).unwrap();
            assert!(
                (got - expect).abs() < 1e-11 * expect,
                "{y}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn point_mass() {
        let s = generate(&SpectrumKind::Constant { value: 2.0 }, 3).unwrap();
        let law = compile_law(&s, PrecisionPolicy::default()).unwrap();
        assert!(matches!(law.density(2.0), Err(Error::NoDensity)));
        assert_eq!(law.cdf(1.999), 0.0);
        assert_eq!(law.cdf(2.0), 1.0);
        let z = law.char_fn(0.7).unwrap();
        assert!((z - Complex64::new(0.0, 1.4).exp()).norm() < 1e-15);
        assert!((law.mgf(0.5, 1.0).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(law.spectrum(), s);
    }

    #[test]
    fn fast_float_reports_overflow() {
        let s = generate(&SpectrumKind::NumberOperator, 400).unwrap();
        assert!(matches!(
            ExactLaw::compile(&s, PrecisionPolicy::fast()),
            Err(Error::PrecisionExceeded(_))
        ));
        assert!(ExactLaw::compile(&s, PrecisionPolicy::compensated()).is_ok());
    }

    #[test]
    fn survival_keeps_relative_accuracy_in_the_tail() {
        let d = 1000;
        let s = generate(&SpectrumKind::Projector { rank: 1 }, d).unwrap();
        let law = ExactLaw::compile(&s, PrecisionPolicy::default()).unwrap();
        for &x in &[0.001, 0.01, 0.05, 0.2] {
            let expect = (1.0f64 - x).powi(d as i32 - 1);
            assert!((law.sf(x) - expect).abs() <= 1e-12 * expect, "{x}");
        }
    }

    #[test]
    fn policy_validation_and_suggestion() {
        assert!(PrecisionPolicy::high(32).is_err());
        assert!(PrecisionPolicy::default()
            .with_taylor_switch_radius(0.0)
            .is_err());
        let small = generate(&SpectrumKind::NumberOperator, 5).unwrap();
        assert_eq!(
            PrecisionPolicy::suggest(&small).mode,
            PrecisionMode::Compensated
        );
        let big = generate(&SpectrumKind::NumberOperator, 200).unwrap();
        match PrecisionPolicy::suggest(&big).mode {
            PrecisionMode::HighPrecision { bits } => assert!(bits >= 192, "{bits}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_examples() {
        let s = generate(&SpectrumKind::NumberOperator, 3).unwrap();
        assert_eq!(identity_check(&s, 0.0, 0).unwrap(), 0.0);
        assert!((identity_check(&s, 7.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((identity_check(&uniform(), 0.0, 1).unwrap() - 1.0).abs() < 1e-15);
        let degenerate = generate(&SpectrumKind::Projector { rank: 1 }, 3).unwrap();
        assert!(matches!(
            identity_check(&degenerate, 0.0, 0),
            Err(Error::RequiresNonDegenerate)
        ));
        assert!(identity_check(&s, 0.0, 3).is_err());
    }
}
