//! Haar-random pure states by normalized complex Gaussians, and
//! Kolmogorov-Smirnov agreement with the exact law.
//!
//! Draw `i` of a run with seed `s` comes from a ChaCha8 stream keyed by `s`
//! on stream number `i`, so output does not depend on how draws are split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::Law;
use crate::moments::moments_power_sum;
use crate::spectrum::Spectrum;

/// Asymptotic 1% critical value of `sqrt(N) D_N`.
pub const KS_CRITICAL_1PCT: f64 = 1.63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub spectrum: Spectrum,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `N` draws of `<psi|A|psi>` for the spectrum `s`.
pub fn sample(s: &Spectrum, n: usize, seed: u64) -> Result<SampleSet> {
    let values = sample_blocks(s.values(), s.multiplicities(), n, seed)?;
    Ok(SampleSet {
        spectrum: s.clone(),
        seed,
        values,
    })
}

/// Draws for eigenvalue blocks given in any order; `values[j]` repeats
/// `mult[j]` times.
pub fn sample_blocks(values: &[f64], mult: &[usize], n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    if values.is_empty() || values.len() != mult.len() || mult.contains(&0) {
        return Err(Error::InvalidSpectrum(
            "blocks need matching positive multiplicities".into(),
        ));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            draw(&mut rng, values, mult, lo, hi)
        })
        .collect())
}

/// One draw: block weights are sums of `|z_i|^2` over 2d real normals; the
/// result is the convex combination, kept inside `[lo, hi]`.
fn draw(rng: &mut ChaCha8Rng, values: &[f64], mult: &[usize], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    let mut offset = 0.0;
    for (&a, &m) in values.iter().zip(mult) {
        let mut w = 0.0;
        for _ in 0..m {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            w += re * re + im * im;
        }
        total += w;
        offset += w * (a - lo);
    }
    (lo + offset / total).clamp(lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub n: usize,
    /// `D_N = sup_x |F_N(x) - F(x)|`.
    pub ks_statistic: f64,
    /// `sqrt(N) D_N`.
    pub scaled_statistic: f64,
    pub critical_value: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub exact_mean: f64,
    pub exact_variance: f64,
}

impl GofReport {
    pub fn accepted(&self) -> bool {
        self.scaled_statistic < self.critical_value
    }
}

/// One-sample KS statistic of `samples` against `law`, handling ties and
/// the jump of a point mass.
pub fn ks_test(samples: &SampleSet, law: &Law) -> Result<GofReport> {
    if samples.spectrum != law.spectrum() {
        return Err(Error::InvalidArgument(
            "samples were drawn from a different spectrum".into(),
        ));
    }
    let n = samples.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let ks_statistic = ks_statistic(&samples.values, law);
    let (sample_mean, sample_variance) = mean_variance(&samples.values);
    let exact = moments_power_sum(&samples.spectrum, 2);
    Ok(GofReport {
        n,
        ks_statistic,
        scaled_statistic: (n as f64).sqrt() * ks_statistic,
        critical_value: KS_CRITICAL_1PCT,
        sample_mean,
        sample_variance,
        exact_mean: exact.mean(),
        exact_variance: exact.cumulants[1],
    })
}

/// `sup |F_N - F|` over the sample, comparing both one-sided limits.
pub fn ks_statistic(values: &[f64], law: &Law) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| a == b);
    let mut all = values.to_vec();
    all.sort_by(f64::total_cmp);
    let n = all.len() as f64;
    let cdf: Vec<(f64, f64)> = sorted
        .par_iter()
        .map(|&x| {
            let below = match law {
                Law::PointMass(p) if x >= p.location => {
                    if x == p.location {
                        0.0
                    } else {
                        1.0
                    }
                }
                _ => law.cdf(x),
            };
            (law.cdf(x), below)
        })
        .collect();
    let mut d: f64 = 0.0;
    let mut idx = 0usize;
    for (x, (at, left)) in sorted.iter().zip(cdf) {
        let lt = idx;
        while idx < all.len() && all[idx] == *x {
            idx += 1;
        }
        d = d
            .max((idx as f64 / n - at).abs())
            .max((lt as f64 / n - left).abs());
    }
    d
}

/// Two-sample KS statistic `sup |F_N - G_M|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = crate::sum::neumaier_sum(values.iter().copied()) / n;
    let var = if values.len() > 1 {
        crate::sum::neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{compile_law, PrecisionPolicy};
    use crate::spectrum::{generate, SpectrumKind};

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = generate(&SpectrumKind::NumberOperator, 5).unwrap();
        let a = sample(&s, 500, 42).unwrap();
        let b = sample(&s, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = sample(&s, 500, 43).unwrap();
        assert_ne!(a.values, c.values);
        // prefix property: draw i does not depend on N
        let short = sample(&s, 100, 42).unwrap();
        assert_eq!(&a.values[..100], &short.values[..]);
    }

    #[test]
    fn independent_of_thread_count() {
        let s = generate(&SpectrumKind::NumberOperator, 6).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample(&s, 2000, 9).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sample(&s, 2000, 9).unwrap());
        assert_eq!(single, many);
    }

    #[test]
    fn draws_stay_in_numerical_range() {
        let s = Spectrum::new(vec![-3.0, 0.5, 7.0], vec![2, 1, 4]).unwrap();
        let set = sample(&s, 5000, 1).unwrap();
        assert!(set.values.iter().all(|&v| (-3.0..=7.0).contains(&v)));
    }

    #[test]
    fn constant_spectrum() {
        let s = generate(&SpectrumKind::Constant { value: 1.25 }, 4).unwrap();
        let set = sample(&s, 100, 3).unwrap();
        assert!(set.values.iter().all(|&v| v == 1.25));
        let law = compile_law(&s, PrecisionPolicy::default()).unwrap();
        let report = ks_test(&set, &law).unwrap();
        assert_eq!(report.ks_statistic, 0.0);
    }

    #[test]
    fn rejects_bad_requests() {
        let s = generate(&SpectrumKind::NumberOperator, 3).unwrap();
        assert!(matches!(sample(&s, 0, 1), Err(Error::InvalidArgument(_))));
        let set = sample(&s, 10, 1).unwrap();
        let other = compile_law(
            &generate(&SpectrumKind::NumberOperator, 4).unwrap(),
            PrecisionPolicy::default(),
        )
        .unwrap();
        assert!(matches!(
            ks_test(&set, &other),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn statistic_on_hand_made_sample() {
        let s = Spectrum::new(vec![0.0, 1.0], vec![1, 1]).unwrap();
        let law = compile_law(&s, PrecisionPolicy::default()).unwrap();
        // uniform law, sample {0.25, 0.5}: gaps 0.25 either side
        let d = ks_statistic(&[0.5, 0.25], &law);
        assert!((d - 0.5).abs() < 1e-15, "{d}");
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0], &[2.0]), 1.0);
    }
}
