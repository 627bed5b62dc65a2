//! Gauss-Legendre rules and piecewise integration against a compiled law.

use rayon::prelude::*;

use crate::law::ExactLaw;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes `x` and weights `w * P(x)` covering the support piece by piece,
/// exact for `P(x) q(x)` with `q` a polynomial of degree `extra_degree`.
#[derive(Debug, Clone)]
pub struct WeightedNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedNodes {
    pub fn new(law: &ExactLaw, extra_degree: usize) -> Self {
        let s = law.spectrum();
        let count = (s.dim() - 1 + extra_degree).div_ceil(2) + 1;
        let (gx, gw) = gauss_legendre(count);
        let mut nodes = Vec::with_capacity(count * (s.distinct() - 1));
        let mut raw = Vec::with_capacity(nodes.capacity());
        for w in s.values().windows(2) {
            let (mid, half) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
            for (x, wt) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                raw.push(half * wt);
            }
        }
        let weights = nodes
            .par_iter()
            .zip(raw.par_iter())
            .map(|(&x, &w)| w * law.density(x))
            .collect();
        WeightedNodes { nodes, weights }
    }

    /// `int P(x) f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        crate::sum::neumaier_sum(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(x)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 12, 40, 101] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}: {total}");
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-12, "n={n} deg={deg}: {got}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_interior() {
        let (x, _) = gauss_legendre(33);
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert!(x.iter().all(|v| v.abs() < 1.0));
    }
}
