//! Standard-normal helpers and Gauss–Hermite expectations.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument the lower tail is evaluated through the Mills ratio.
const TAIL_SWITCH: f64 = -8.0;
const MILLS_TERMS: usize = 80;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Continued fraction for Q(t)/φ(t), t > 0. Accurate for t ≳ 5.
fn upper_mills_ratio(t: f64) -> f64 {
    let mut d = t;
    for k in (1..=MILLS_TERMS).rev() {
        d = t + k as f64 / d;
    }
    1.0 / d
}

/// log Φ(x), finite for every finite x.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        -0.5 * x * x - LN_SQRT_2PI + upper_mills_ratio(-x).ln()
    } else if x > 5.0 {
        (-0.5 * libm::erfc(x / SQRT_2)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// φ(x)/Φ(x), the derivative of log Φ.
pub fn inverse_mills(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        1.0 / upper_mills_ratio(-x)
    } else {
        norm_pdf(x) / norm_cdf(x)
    }
}

/// Binary entropy (nats) of the probability Φ(t).
pub fn probit_entropy(t: f64) -> f64 {
    let term = |arg: f64| {
        let lp = log_norm_cdf(arg);
        -lp.exp() * lp
    };
    term(t) + term(-t)
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Gauss–Hermite rule rescaled for expectations under N(0, 1).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix of
    /// the physicists' Hermite recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for i in 0..order - 1 {
            let off = ((i + 1) as f64 * 0.5).sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
        let eigen = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .zip(eigen.eigenvectors.row(0).iter())
            .map(|(&x, &v)| (x * SQRT_2, v * v))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // first eigenvector components squared sum to one, so weights are
        // already normalised for the probabilists' measure
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let (nodes, weights) = pairs.into_iter().map(|(z, w)| (z, w / total)).unzip();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// E[g(z)] for z ~ N(0, 1).
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(self.weights.iter()).map(|(&z, &w)| w * g(z)).sum()
    }
}
