//! Observables described by their spectra.
//!
//! The law of `<psi|A|psi>` under the unitarily invariant measure depends on
//! `A` only through its distinct eigenvalues and their multiplicities, so a
//! [`Spectrum`] is all the engine ever consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative clustering tolerance used when none is given.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-12;

/// Distinct eigenvalues `a_1 < ... < a_l` with multiplicities `n_j`,
/// `d = sum n_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumFile", into = "SpectrumFile")]
pub struct Spectrum {
    values: Vec<f64>,
    multiplicities: Vec<usize>,
    dim: usize,
}

impl Spectrum {
    /// Validating constructor for an already canonical spectrum.
    pub fn new(values: Vec<f64>, multiplicities: Vec<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("no eigenvalues".into()));
        }
        if values.len() != multiplicities.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} values but {} multiplicities",
                values.len(),
                multiplicities.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("non-finite eigenvalue {v}")));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidSpectrum("zero multiplicity".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpectrum(
                "eigenvalues must be strictly increasing".into(),
            ));
        }
        let dim = multiplicities.iter().sum();
        Ok(Spectrum {
            values,
            multiplicities,
            dim,
        })
    }

    /// Non-degenerate spectrum from distinct values in any order.
    pub fn from_distinct(values: &[f64]) -> Result<Self> {
        let s = build_spectrum(values, 0.0)?;
        if !s.is_non_degenerate() {
            return Err(Error::InvalidSpectrum("repeated eigenvalue".into()));
        }
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct eigenvalues `l`.
    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    /// True when every multiplicity is one.
    pub fn is_non_degenerate(&self) -> bool {
        self.multiplicities.iter().all(|&n| n == 1)
    }

    /// A single distinct value: the law is a point mass.
    pub fn is_point_mass(&self) -> bool {
        self.values.len() == 1
    }

    /// `tr A`.
    pub fn trace(&self) -> f64 {
        crate::sum::neumaier_sum(
            self.values
                .iter()
                .zip(&self.multiplicities)
                .map(|(&a, &n)| a * n as f64),
        )
    }

    /// `tr A / d`, the mean of the expectation value.
    pub fn mean(&self) -> f64 {
        self.trace() / self.dim as f64
    }

    /// Operator norm `max_j |a_j|`.
    pub fn operator_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Power sum `p_r = sum_j n_j a_j^r`.
    pub fn power_sum(&self, r: u32) -> f64 {
        crate::sum::neumaier_sum(
            self.values
                .iter()
                .zip(&self.multiplicities)
                .map(|(&a, &n)| n as f64 * a.powi(r as i32)),
        )
    }

    /// Every eigenvalue repeated according to its multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&a, &n)| std::iter::repeat_n(a, n))
            .collect()
    }

    /// Same multiplicities, eigenvalues mapped through `a -> scale*a + shift`
    /// (`scale > 0`).
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) || !shift.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad affine map {scale}, {shift}"
            )));
        }
        Spectrum::new(
            self.values.iter().map(|&a| scale * a + shift).collect(),
            self.multiplicities.clone(),
        )
    }
}

/// Sorts raw eigenvalues and merges those closer than `cluster_tol` times the
/// spectral range (absolute when the range is zero). Each cluster is replaced
/// by the mean of its members and carries their total multiplicity.
pub fn build_spectrum(raw: &[f64], cluster_tol: f64) -> Result<Spectrum> {
    if raw.is_empty() {
        return Err(Error::InvalidSpectrum("no eigenvalues".into()));
    }
    if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("non-finite eigenvalue {v}")));
    }
    if !(cluster_tol.is_finite() && cluster_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cluster tolerance {cluster_tol}"
        )));
    }
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let threshold = if range > 0.0 {
        cluster_tol * range
    } else {
        cluster_tol
    };

    let mut values = Vec::new();
    let mut multiplicities = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > threshold {
            let cluster = &sorted[start..i];
            values.push(cluster_mean(cluster));
            multiplicities.push(cluster.len());
            start = i;
        }
    }
    // two cluster means can only coincide after rounding; fold them
    let mut i = 1;
    while i < values.len() {
        if values[i] <= values[i - 1] {
            multiplicities[i - 1] += multiplicities.remove(i);
            values.remove(i);
        } else {
            i += 1;
        }
    }
    Spectrum::new(values, multiplicities)
}

/// Mean of a sorted cluster, exact for identical members and clamped to the
/// cluster's hull.
fn cluster_mean(cluster: &[f64]) -> f64 {
    let first = cluster[0];
    let offset =
        crate::sum::neumaier_sum(cluster.iter().map(|&x| x - first)) / cluster.len() as f64;
    (first + offset).clamp(first, cluster[cluster.len() - 1])
}

/// Named spectrum generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Raw eigenvalues, clustered at the default tolerance.
    Explicit { eigenvalues: Vec<f64> },
    /// Rank-`rank` orthogonal projector.
    Projector { rank: usize },
    /// `a_k = k`, `k = 1..d`.
    NumberOperator,
    /// `a_k = k^alpha`.
    Power { alpha: f64 },
    /// `a_k = ln k` (so `a_1 = 0`).
    Log,
    /// `d`-fold degenerate value.
    Constant { value: f64 },
}

/// Builds the spectrum of a named family in dimension `d`.
pub fn generate(kind: &SpectrumKind, d: usize) -> Result<Spectrum> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    match kind {
        SpectrumKind::Explicit { eigenvalues } => {
            if eigenvalues.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "{} eigenvalues given for dimension {d}",
                    eigenvalues.len()
                )));
            }
            build_spectrum(eigenvalues, DEFAULT_CLUSTER_TOL)
        }
        SpectrumKind::Projector { rank } => match *rank {
            r if r > d => Err(Error::InvalidArgument(format!(
                "rank {r} exceeds dimension {d}"
            ))),
            0 => Spectrum::new(vec![0.0], vec![d]),
            r if r == d => Spectrum::new(vec![1.0], vec![d]),
            r => Spectrum::new(vec![0.0, 1.0], vec![d - r, r]),
        },
        SpectrumKind::NumberOperator => Spectrum::from_distinct(&range_map(d, |k| k)),
        SpectrumKind::Power { alpha } => {
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "power exponent {alpha} must be > 0"
                )));
            }
            Spectrum::from_distinct(&range_map(d, |k| k.powf(*alpha)))
        }
        SpectrumKind::Log => Spectrum::from_distinct(&range_map(d, f64::ln)),
        SpectrumKind::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::InvalidSpectrum(format!(
                    "non-finite eigenvalue {value}"
                )));
            }
            Spectrum::new(vec![*value], vec![d])
        }
    }
}

fn range_map(d: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (1..=d).map(|k| f(k as f64)).collect()
}

/// On-disk JSON shape: `{"eigenvalues":[{"value":..,"multiplicity":..}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub eigenvalues: Vec<EigenEntry>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenEntry {
    pub value: f64,
    pub multiplicity: usize,
}

impl From<Spectrum> for SpectrumFile {
    fn from(s: Spectrum) -> Self {
        SpectrumFile {
            eigenvalues: s
                .values
                .iter()
                .zip(&s.multiplicities)
                .map(|(&value, &multiplicity)| EigenEntry {
                    value,
                    multiplicity,
                })
                .collect(),
        }
    }
}

impl TryFrom<SpectrumFile> for Spectrum {
    type Error = Error;

    /// Entries may be unsorted or repeat a value; identical values merge.
    fn try_from(f: SpectrumFile) -> Result<Self> {
        let mut entries = f.eigenvalues;
        if entries.iter().any(|e| e.multiplicity == 0) {
            return Err(Error::InvalidSpectrum("zero multiplicity".into()));
        }
        if let Some(e) = entries.iter().find(|e| !e.value.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "non-finite eigenvalue {}",
                e.value
            )));
        }
        entries.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut values: Vec<f64> = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        for e in entries {
            match values.last() {
                Some(&v) if v == e.value => *mult.last_mut().expect("paired") += e.multiplicity,
                _ => {
                    values.push(e.value);
                    mult.push(e.multiplicity);
                }
            }
        }
        Spectrum::new(values, mult)
    }
}
