//! Gauss–Legendre quadrature, fixed and adaptive.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Nodes come from Newton iteration on the Legendre recurrence, started
/// from the Chebyshev-like estimate `cos(pi (i - 1/4) / (n + 1/2))`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A reusable fixed-order rule.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Abscissae and weights of the rule repeated over `panels` equal
    /// sub-intervals of `[a, b]`.
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let width = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let half = 0.5 * width;
            let mid = lo + half;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * x, half * w));
            }
        }
        out
    }
}

/// Adaptive quadrature comparing 10- and 20-point Gauss–Legendre on each
/// panel and bisecting panels whose estimates disagree.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let coarse = GaussLegendre::new(10);
    let fine = GaussLegendre::new(20);
    let total_width = (b - a).abs();
    let mut stack = vec![(a, b, 0usize)];
    let mut sum = 0.0;
    let mut compensation = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = coarse.integrate(&mut f, lo, hi);
        let g = fine.integrate(&mut f, lo, hi);
        let local_tol = abs_tol * ((hi - lo).abs() / total_width).max(1e-3);
        if (g - c).abs() <= local_tol || depth >= 40 {
            if depth >= 40 && (g - c).abs() > local_tol {
                return Err(Error::Numeric(format!(
                    "adaptive quadrature failed to converge near [{lo}, {hi}]"
                )));
            }
            // Kahan summation keeps the panel sum at full precision.
            let y = g - compensation;
            let t = sum + y;
            compensation = (t - sum) - y;
            sum = t;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for n in [1, 2, 5, 6, 10, 12, 20, 33] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn known_six_point_rule() {
        let (x, w) = gauss_legendre(6);
        assert!((x[0] + 0.932_469_514_203_152).abs() < 1e-14);
        assert!((w[0] - 0.171_324_492_379_170).abs() < 1e-14);
        assert!((w[2] - 0.467_913_934_572_691).abs() < 1e-14);
    }

    #[test]
    fn exact_for_polynomials_of_degree_2n_minus_1() {
        let rule = GaussLegendre::new(5);
        let v = rule.integrate(|x| x.powi(9) + x.powi(8), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian_integral() {
        let v = integrate_adaptive(|x| (-0.5 * x * x).exp(), -12.0, 12.0, 1e-13).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-12);
    }
}
