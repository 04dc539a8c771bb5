//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Dyn};
use rand::Rng;
use vibropref::acquisition::random_point;
use vibropref::math::{norm_cdf, norm_pdf};
use vibropref::prefmodel::{
    log_posterior, ComparisonRecord, Confidence, Dataset, LikelihoodConfig, Preference, PreferencePosterior,
};
use vibropref::signal::NormalizedPoint;

pub type Cholesky = nalgebra::Cholesky<f64, Dyn>;

pub fn random_confidence<R: Rng>(rng: &mut R) -> Confidence {
    Confidence::new(rng.random_range(1..=5)).unwrap()
}

pub fn random_preference<R: Rng>(rng: &mut R) -> Preference {
    if rng.random_bool(0.5) {
        Preference::First
    } else {
        Preference::Second
    }
}

/// `records` random comparisons among `points` random points, mixed
/// confidences and answers.
pub fn random_dataset<R: Rng>(rng: &mut R, points: usize, records: usize) -> Dataset {
    let pool: Vec<NormalizedPoint> = (0..points).map(|_| random_point(rng)).collect();
    let mut data = Dataset::new();
    // Register every point so the latent vector always has `points` entries.
    for p in &pool {
        data.insert_point(*p);
    }
    for _ in 0..records {
        let i = rng.random_range(0..points);
        let mut j = rng.random_range(0..points - 1);
        if j >= i {
            j += 1;
        }
        data.push(ComparisonRecord::new(pool[i], pool[j], random_preference(rng), random_confidence(rng)));
    }
    data
}

pub fn value(f: &DVector<f64>, data: &Dataset, cfg: &LikelihoodConfig, gram: &Cholesky) -> f64 {
    log_posterior(f, data, cfg, gram).value
}

/// Central-difference gradient of the log posterior.
pub fn fd_gradient(f: &DVector<f64>, data: &Dataset, cfg: &LikelihoodConfig, gram: &Cholesky, h: f64) -> DVector<f64> {
    DVector::from_fn(f.len(), |i, _| {
        let mut up = f.clone();
        let mut down = f.clone();
        up[i] += h;
        down[i] -= h;
        (value(&up, data, cfg, gram) - value(&down, data, cfg, gram)) / (2.0 * h)
    })
}

/// Central differences of the analytic gradient.
pub fn fd_hessian(f: &DVector<f64>, data: &Dataset, cfg: &LikelihoodConfig, gram: &Cholesky, h: f64) -> DMatrix<f64> {
    let n = f.len();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut up = f.clone();
        let mut down = f.clone();
        up[j] += h;
        down[j] -= h;
        let col =
            (log_posterior(&up, data, cfg, gram).gradient - log_posterior(&down, data, cfg, gram).gradient) / (2.0 * h);
        out.set_column(j, &col);
    }
    out
}

/// Max-norm relative error of `approx` against `reference`.
pub fn relative_error(approx: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let scale = reference.amax().max(f64::MIN_POSITIVE);
    (approx - reference).amax() / scale
}

fn entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

/// Information gain by the trapezoid rule over z in [-8, 8].
pub fn trapezoid_ig(m: f64, v: f64, sigma: f64, steps: usize) -> f64 {
    let marginal = entropy(norm_cdf(m / (v + sigma * sigma).sqrt()));
    let (lo, hi) = (-8.0, 8.0);
    let h = (hi - lo) / steps as f64;
    let g = |z: f64| norm_pdf(z) * entropy(norm_cdf((m + v.sqrt() * z) / sigma));
    let mut sum = 0.5 * (g(lo) + g(hi));
    for k in 1..steps {
        sum += g(lo + k as f64 * h);
    }
    marginal - sum * h
}

/// Highest information gain over all pairs, scored one pair at a time
/// through `predict_pair` rather than the joint covariance.
pub fn brute_force_best(
    post: &PreferencePosterior,
    candidates: &[NormalizedPoint],
    sigma: f64,
) -> ((usize, usize), f64) {
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let (m, v) = post.predict_pair(&candidates[i], &candidates[j]);
            let score = trapezoid_ig(m, v, sigma, 4096);
            if score > best.1 {
                best = ((i, j), score);
            }
        }
    }
    best
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}
