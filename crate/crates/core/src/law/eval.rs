//! Scalar-generic kernels over a [`LawCoefficients`] table.
//!
//! The terms of the density sum to the zero polynomial, so the terms on
//! either side of `x` determine the value on their own. Every kernel sums
//! only the side with the smaller total magnitude, estimated in f64 log space
//! before any arithmetic in `T` happens.

use std::cmp::Ordering;

use super::coeffs::LawCoefficients;
use crate::scalar::{Field, Real};
use crate::sum::log2_add;

/// Magnitude summary of the terms on each side of an evaluation point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sides {
    /// log2 of the summed magnitudes of terms with `a > x`.
    pub upper: f64,
    /// Same for `a < x`.
    pub lower: f64,
}

impl Sides {
    pub fn use_upper(&self) -> bool {
        self.upper <= self.lower
    }

    /// log2 of the magnitude that the chosen side accumulates.
    pub fn chosen(&self) -> f64 {
        self.upper.min(self.lower)
    }
}

struct Frame<T> {
    diffs: Vec<T>,
    order: Vec<Ordering>,
    log2_diffs: Vec<f64>,
}

impl<T: Field> LawCoefficients<T> {
    fn frame(&self, x: &T) -> Frame<T> {
        let diffs: Vec<T> = self.points.iter().map(|a| a.clone() - x.clone()).collect();
        let order = self
            .points
            .iter()
            .map(|a| a.partial_cmp(x).unwrap_or(Ordering::Equal))
            .collect();
        let log2_diffs = diffs.iter().map(|t| t.log2_abs()).collect();
        Frame {
            diffs,
            order,
            log2_diffs,
        }
    }

    fn sides(&self, frame: &Frame<T>, extra_power: u32) -> Sides {
        let mut upper = f64::NEG_INFINITY;
        let mut lower = f64::NEG_INFINITY;
        for t in &self.terms {
            let p = (t.power + extra_power) as f64;
            let mag = t.log2_abs + p * frame.log2_diffs[t.eigen];
            match frame.order[t.eigen] {
                Ordering::Greater => upper = log2_add(upper, mag),
                Ordering::Less => lower = log2_add(lower, mag),
                Ordering::Equal => {}
            }
        }
        Sides { upper, lower }
    }

    /// `sum c (a - x)^{p + extra} / div(p)` over the terms on one side.
    fn side_sum(
        &self,
        frame: &Frame<T>,
        side: Ordering,
        extra_power: u32,
        divide_by_power: bool,
    ) -> T {
        let terms = self
            .terms
            .iter()
            .filter(|t| frame.order[t.eigen] == side)
            .map(|t| {
                let v = t.coeff.clone() * frame.diffs[t.eigen].powi(t.power + extra_power);
                if divide_by_power {
                    v / T::from_i64((t.power + extra_power) as i64)
                } else {
                    v
                }
            });
        T::sum_terms(terms)
    }

    fn inside(&self, x: &T) -> bool {
        *x >= self.points[0] && *x <= self.points[self.points.len() - 1]
    }

    /// log2 of the magnitude the density kernel accumulates at `x`.
    pub fn density_cancellation_log2(&self, x: &T) -> f64 {
        let frame = self.frame(x);
        self.sides(&frame, 0).chosen()
    }

    /// log2 of the magnitude the CDF kernel accumulates at `x`.
    pub fn cdf_cancellation_log2(&self, x: &T) -> f64 {
        let frame = self.frame(x);
        self.sides(&frame, 1).chosen()
    }

    /// Density, zero outside the support, `sign(0) = 0` at eigenvalues.
    pub fn density(&self, x: &T) -> T {
        if !self.inside(x) {
            return T::zero();
        }
        let frame = self.frame(x);
        let sides = self.sides(&frame, 0);
        // constant terms sitting exactly at x
        let at_x = T::sum_terms(
            self.terms
                .iter()
                .filter(|t| t.power == 0 && frame.order[t.eigen] == Ordering::Equal)
                .map(|t| t.coeff.clone()),
        );
        let two = T::from_i64(2);
        let value = if sides.use_upper() {
            two * self.side_sum(&frame, Ordering::Greater, 0, false) + at_x
        } else {
            -(two * self.side_sum(&frame, Ordering::Less, 0, false)) - at_x
        };
        if value < T::zero() {
            T::zero()
        } else {
            value
        }
    }

    /// The raw signed sum at any `x`, with no support clamp or side choice.
    pub fn density_unclamped(&self, x: &T) -> T {
        let frame = self.frame(x);
        T::sum_terms(self.terms.iter().filter_map(|t| {
            let v = t.coeff.clone() * frame.diffs[t.eigen].powi(t.power);
            match frame.order[t.eigen] {
                Ordering::Greater => Some(v),
                Ordering::Less => Some(-v),
                Ordering::Equal => None,
            }
        }))
    }

    /// `Prob(X <= x)`.
    pub fn cdf(&self, x: &T) -> T {
        self.distribution(x, false)
    }

    /// `Prob(X > x)`, accurate in relative terms deep in the upper tail.
    pub fn sf(&self, x: &T) -> T {
        self.distribution(x, true)
    }

    fn distribution(&self, x: &T, survival: bool) -> T {
        let last = self.points.len() - 1;
        let (below, above) = if survival {
            (T::one(), T::zero())
        } else {
            (T::zero(), T::one())
        };
        if *x <= self.points[0] {
            return below;
        }
        if *x >= self.points[last] {
            return above;
        }
        let frame = self.frame(x);
        let sides = self.sides(&frame, 1);
        let two = T::from_i64(2);
        // the upper-side sum is half the survival function, the lower-side
        // sum half the CDF
        let value = if sides.use_upper() {
            let upper = two * self.side_sum(&frame, Ordering::Greater, 1, true);
            if survival {
                upper
            } else {
                T::one() - upper
            }
        } else {
            let lower = two * self.side_sum(&frame, Ordering::Less, 1, true);
            if survival {
                T::one() - lower
            } else {
                lower
            }
        };
        clamp_unit(value)
    }

    /// Eigenvalue midpoint used to centre the transforms.
    pub(crate) fn centre(&self) -> T {
        let last = self.points.len() - 1;
        (self.points[0].clone() + self.points[last].clone()) / T::from_i64(2)
    }

    /// Moments `E[(X - centre)^n]` for `n = 0..=count`, from power sums of the
    /// shifted spectrum via Newton's recursion for complete homogeneous
    /// polynomials.
    pub(crate) fn centred_moments(&self, centre: &T, count: usize) -> Vec<T> {
        let shifted: Vec<T> = self
            .points
            .iter()
            .map(|a| a.clone() - centre.clone())
            .collect();
        let mult = self.spectrum.multiplicities();
        power_sum_moments(&shifted, mult, self.spectrum.dim(), count)
    }
}

/// `E[X^n]` for `n = 0..=count` from the spectrum `(points, mult)`:
/// `m_n = (1/n) sum_{i=1}^n p_i m_{n-i} prod_{t<i} (n-t)/(n+d-1-t)`.
pub(crate) fn power_sum_moments<T: Field>(
    points: &[T],
    mult: &[usize],
    dim: usize,
    count: usize,
) -> Vec<T> {
    let mut power_sums = Vec::with_capacity(count + 1);
    power_sums.push(T::from_i64(dim as i64));
    let mut powers: Vec<T> = points.iter().map(|_| T::one()).collect();
    for _ in 1..=count {
        for (pw, a) in powers.iter_mut().zip(points) {
            *pw = pw.clone() * a.clone();
        }
        power_sums.push(T::sum_terms(
            powers
                .iter()
                .zip(mult)
                .map(|(pw, &n)| pw.clone() * T::from_i64(n as i64)),
        ));
    }
    let mut m = Vec::with_capacity(count + 1);
    m.push(T::one());
    let d = dim as i64;
    for n in 1..=count {
        let mut ratio = T::one();
        let mut terms = Vec::with_capacity(n);
        for i in 1..=n {
            let t = (i - 1) as i64;
            ratio = ratio * T::from_i64(n as i64 - t) / T::from_i64(n as i64 + d - 1 - t);
            terms.push(power_sums[i].clone() * m[n - i].clone() * ratio.clone());
        }
        m.push(T::sum_terms(terms) / T::from_i64(n as i64));
    }
    m
}

fn clamp_unit<T: Field>(v: T) -> T {
    if v < T::zero() {
        T::zero()
    } else if v > T::one() {
        T::one()
    } else {
        v
    }
}

fn factorials<T: Field>(max: u32) -> Vec<T> {
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push(T::one());
    for i in 1..=max {
        let next = out[i as usize - 1].clone() * T::from_i64(i as i64);
        out.push(next);
    }
    out
}

fn log2_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).log2()).sum()
}

impl<T: Real> LawCoefficients<T> {
    fn max_power(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    /// log2 of the summed term magnitudes of the closed-form transform at
    /// `|y|`, with real exponentials `e^{y(a - centre)}` when `real` is set.
    pub(crate) fn transform_cancellation_log2(&self, y: f64, real: bool) -> f64 {
        let centre = self.centre().to_f64();
        let ly = y.abs().log2();
        let mut acc = f64::NEG_INFINITY;
        let mut fact_cache: Vec<f64> = Vec::new();
        for t in &self.terms {
            while fact_cache.len() <= t.power as usize {
                fact_cache.push(log2_factorial(fact_cache.len() as u32));
            }
            let a = self.spectrum.values()[t.eigen];
            let growth = if real {
                y * (a - centre) / std::f64::consts::LN_2
            } else {
                0.0
            };
            let mag = 1.0 + t.log2_abs + fact_cache[t.power as usize] - (t.power + 1) as f64 * ly
                + growth;
            acc = log2_add(acc, mag);
        }
        acc
    }

    /// `E[e^{y (X - centre)}]` from the residue formula; `y != 0`.
    pub fn mgf_closed(&self, y: &T, centre: &T) -> T {
        let fact: Vec<T> = factorials(self.max_power());
        let terms = self.terms.iter().map(|t| {
            let shift = self.points[t.eigen].clone() - centre.clone();
            let e = (y.clone() * shift).exp();
            T::from_i64(2) * t.coeff.clone() * fact[t.power as usize].clone() * e
                / y.powi(t.power + 1)
        });
        T::sum_terms(terms)
    }

    /// `E[e^{i lambda (X - centre)}]` as `(re, im)`; `lambda != 0`.
    pub fn char_closed(&self, lambda: &T, centre: &T) -> (T, T) {
        let fact: Vec<T> = factorials(self.max_power());
        let mut re = Vec::with_capacity(self.terms.len());
        let mut im = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let theta = lambda.clone() * (self.points[t.eigen].clone() - centre.clone());
            let (c, s) = (theta.cos(), theta.sin());
            let scale = T::from_i64(2) * t.coeff.clone() * fact[t.power as usize].clone()
                / lambda.powi(t.power + 1);
            // multiply (c + i s) by (-i)^{p+1}
            let (r, i) = match (t.power + 1) % 4 {
                0 => (c, s),
                1 => (s, -c),
                2 => (-c, -s),
                _ => (-s, c),
            };
            re.push(scale.clone() * r);
            im.push(scale * i);
        }
        (T::sum_terms(re), T::sum_terms(im))
    }

    /// Truncated moment series for `E[e^{z (X - centre)}]` with `z = y` real
    /// or `z = i y`; returns `(re, im)`.
    pub(crate) fn transform_series(&self, y: &T, centre: &T, imaginary: bool) -> (T, T) {
        let half_range = self.spectrum.range() / 2.0;
        let reach = half_range * y.to_f64().abs();
        let tol = T::unit_roundoff() * 1e-3;
        // smallest n whose tail bound reach^n / n! drops below tol
        let mut count = 0usize;
        let mut bound = 1.0f64;
        while count < 20_000 {
            count += 1;
            bound *= reach / count as f64;
            if bound < tol && count as f64 > reach {
                break;
            }
        }
        let moments = self.centred_moments(centre, count);
        let mut re = Vec::with_capacity(count + 1);
        let mut im = Vec::with_capacity(count + 1);
        let mut factor = T::one();
        for (n, mu) in moments.into_iter().enumerate() {
            if n > 0 {
                factor = factor * y.clone() / T::from_i64(n as i64);
            }
            let term = mu * factor.clone();
            if !imaginary {
                re.push(term);
                continue;
            }
            // i^n
            match n % 4 {
                0 => re.push(term),
                1 => im.push(term),
                2 => re.push(-term),
                _ => im.push(-term),
            }
        }
        (T::sum_terms(re), T::sum_terms(im))
    }

    /// log2 of the summed magnitudes of the series at `|y|`, bounded by
    /// `e^{R|y|}` for half-range `R`.
    pub(crate) fn series_cancellation_log2(&self, y: f64) -> f64 {
        self.spectrum.range() / 2.0 * y.abs() / std::f64::consts::LN_2
    }
}
