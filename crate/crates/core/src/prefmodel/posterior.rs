use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::{cross_covariance, factor_gram, kernel, KernelConfig};
use super::likelihood::{ComparisonRecord, LikelihoodConfig};
use super::Dataset;
use crate::error::{Error, Result};
use crate::math::{inverse_mills, log_norm_cdf};
use crate::signal::NormalizedPoint;

/// Newton stops once the sup-norm of the gradient falls below this.
pub const NEWTON_TOLERANCE: f64 = 1e-8;
pub const MAX_NEWTON_ITERATIONS: usize = 100;

const MAX_HALVINGS: usize = 50;
const PAIR_VARIANCE_WARN: f64 = -1e-8;

/// Probit log-likelihood with its gradient and negative Hessian `W`.
struct LikelihoodTerms {
    value: f64,
    gradient: DVector<f64>,
    w: DMatrix<f64>,
}

fn likelihood_terms(f: &DVector<f64>, data: &Dataset, cfg: &LikelihoodConfig) -> LikelihoodTerms {
    let n = f.len();
    let mut value = 0.0;
    let mut gradient = DVector::zeros(n);
    let mut w = DMatrix::zeros(n, n);
    for (record, &(a, b)) in data.records().iter().zip(data.pairs()) {
        let sign = record.y.sign();
        let noise = cfg.effective_noise(record.confidence);
        let z = sign * (f[a] - f[b]) / noise;
        value += log_norm_cdf(z);
        let r = inverse_mills(z);
        let g = sign * r / noise;
        gradient[a] += g;
        gradient[b] -= g;
        // −d²/dz² log Φ(z) = r(z + r), in (0, 1)
        let h = r * (z + r) / (noise * noise);
        w[(a, a)] += h;
        w[(b, b)] += h;
        w[(a, b)] -= h;
        w[(b, a)] -= h;
    }
    LikelihoodTerms { value, gradient, w }
}

/// Value, gradient and Hessian of the unnormalised log posterior.
#[derive(Debug, Clone)]
pub struct LogPosterior {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Evaluates Σ log Φ(yᵢΔᵢ/σ̃ᵢ) − ½ fᵀK⁻¹f at `f`.
///
/// `gram` is the Cholesky factor of the jittered gram matrix over
/// `data.points()`. The Hessian is −(K⁻¹ + W).
pub fn log_posterior(
    f: &DVector<f64>,
    data: &Dataset,
    cfg: &LikelihoodConfig,
    gram: &Cholesky<f64, Dyn>,
) -> LogPosterior {
    let terms = likelihood_terms(f, data, cfg);
    let alpha = gram.solve(f);
    LogPosterior {
        value: terms.value - 0.5 * f.dot(&alpha),
        gradient: terms.gradient - alpha,
        hessian: -(gram.inverse() + terms.w),
    }
}

/// Converged posterior mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEstimate {
    pub utilities: DVector<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub fn fit_map(data: &Dataset, kernel_cfg: &KernelConfig, lik_cfg: &LikelihoodConfig) -> Result<MapEstimate> {
    fit_map_from(data, kernel_cfg, lik_cfg, None)
}

/// Damped Newton ascent from `start` (zero when `None`).
pub fn fit_map_from(
    data: &Dataset,
    kernel_cfg: &KernelConfig,
    lik_cfg: &LikelihoodConfig,
    start: Option<&DVector<f64>>,
) -> Result<MapEstimate> {
    let n = data.points().len();
    if n == 0 {
        return Ok(MapEstimate { utilities: DVector::zeros(0), iterations: 0, gradient_norm: 0.0 });
    }
    let (_, chol) = factor_gram(data.points(), kernel_cfg)?;
    let l = chol.l();
    let mut f = match start {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => return Err(Error::InvalidInput(format!("start has {} entries, expected {n}", s.len()))),
        None => DVector::zeros(n),
    };

    let evaluate = |f: &DVector<f64>| {
        let terms = likelihood_terms(f, data, lik_cfg);
        let alpha = chol.solve(f);
        let objective = terms.value - 0.5 * f.dot(&alpha);
        (objective, terms, alpha)
    };

    let (mut objective, mut terms, mut alpha) = evaluate(&f);
    for iteration in 0..=MAX_NEWTON_ITERATIONS {
        let gradient = &terms.gradient - &alpha;
        let gradient_norm = gradient.amax();
        if gradient_norm < NEWTON_TOLERANCE {
            return Ok(MapEstimate { utilities: f, iterations: iteration, gradient_norm });
        }
        if iteration == MAX_NEWTON_ITERATIONS {
            return Err(Error::NotConverged { iterations: iteration, gradient_norm });
        }

        // (K⁻¹ + W)⁻¹ = L B⁻¹ Lᵀ with B = I + Lᵀ W L
        let b = whitened_precision(&l, &terms.w);
        let chol_b = Cholesky::new(b).ok_or(Error::IllConditioned { jitter: kernel_cfg.gram_jitter })?;
        let step = &l * chol_b.solve(&(l.transpose() * &gradient));

        let slack = 1e-13 * (1.0 + objective.abs());
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let candidate = &f + &step * scale;
            let (cand_objective, cand_terms, cand_alpha) = evaluate(&candidate);
            if cand_objective.is_finite() && cand_objective >= objective - slack {
                f = candidate;
                objective = cand_objective;
                terms = cand_terms;
                alpha = cand_alpha;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::NotConverged { iterations: iteration, gradient_norm });
        }
    }
    unreachable!("loop returns on its final iteration")
}

fn whitened_precision(l: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut b = l.transpose() * w * l;
    for i in 0..n {
        b[(i, i)] += 1.0;
    }
    symmetrize(&mut b);
    b
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Laplace approximation N(f̂, (K⁻¹ + W)⁻¹) over the dataset's points.
#[derive(Debug, Clone)]
pub struct PreferencePosterior {
    data: Dataset,
    map_utilities: DVector<f64>,
    covariance: DMatrix<f64>,
    kernel: KernelConfig,
    likelihood: LikelihoodConfig,
    /// Lower Cholesky factor of K.
    gram_factor: DMatrix<f64>,
    /// Lower Cholesky factor of B = I + LᵀWL.
    precision_factor: DMatrix<f64>,
    /// K⁻¹ f̂.
    alpha: DVector<f64>,
}

pub fn laplace(
    map: &DVector<f64>,
    data: &Dataset,
    kernel_cfg: &KernelConfig,
    lik_cfg: &LikelihoodConfig,
) -> Result<PreferencePosterior> {
    let n = data.points().len();
    if map.len() != n {
        return Err(Error::InvalidInput(format!("MAP vector has {} entries for {n} points", map.len())));
    }
    if n == 0 {
        return Ok(PreferencePosterior::prior(*kernel_cfg, *lik_cfg));
    }
    let (_, chol) = factor_gram(data.points(), kernel_cfg)?;
    let l = chol.l();
    let terms = likelihood_terms(map, data, lik_cfg);
    let b = whitened_precision(&l, &terms.w);
    let chol_b = Cholesky::new(b).ok_or(Error::IllConditioned { jitter: kernel_cfg.gram_jitter })?;
    let l_b = chol_b.l();
    // Σ = L B⁻¹ Lᵀ = MᵀM with M = L_B⁻¹ Lᵀ
    let m =
        l_b.solve_lower_triangular(&l.transpose()).ok_or(Error::IllConditioned { jitter: kernel_cfg.gram_jitter })?;
    let mut covariance = m.transpose() * &m;
    symmetrize(&mut covariance);
    Ok(PreferencePosterior {
        data: data.clone(),
        map_utilities: map.clone(),
        covariance,
        kernel: *kernel_cfg,
        likelihood: *lik_cfg,
        gram_factor: l,
        precision_factor: l_b,
        alpha: chol.solve(map),
    })
}

/// MAP fit followed by the Laplace approximation.
pub fn fit(data: &Dataset, kernel_cfg: &KernelConfig, lik_cfg: &LikelihoodConfig) -> Result<PreferencePosterior> {
    kernel_cfg.validate()?;
    lik_cfg.validate()?;
    let map = fit_map(data, kernel_cfg, lik_cfg)?;
    laplace(&map.utilities, data, kernel_cfg, lik_cfg)
}

impl PreferencePosterior {
    /// Posterior with no data, i.e. the GP prior.
    pub fn prior(kernel: KernelConfig, likelihood: LikelihoodConfig) -> Self {
        Self {
            data: Dataset::new(),
            map_utilities: DVector::zeros(0),
            covariance: DMatrix::zeros(0, 0),
            kernel,
            likelihood,
            gram_factor: DMatrix::zeros(0, 0),
            precision_factor: DMatrix::zeros(0, 0),
            alpha: DVector::zeros(0),
        }
    }

    pub fn points(&self) -> &[NormalizedPoint] {
        self.data.points()
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn map_utilities(&self) -> &DVector<f64> {
        &self.map_utilities
    }

    /// Laplace covariance over `points()`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn kernel_config(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn likelihood_config(&self) -> &LikelihoodConfig {
        &self.likelihood
    }

    pub fn is_empty(&self) -> bool {
        self.data.points().is_empty()
    }

    fn variance_floor(&self) -> f64 {
        1e-14 * self.kernel.signal_variance
    }

    fn cross(&self, x: &NormalizedPoint) -> DVector<f64> {
        DVector::from_iterator(self.points().len(), self.points().iter().map(|p| kernel(p, x, &self.kernel)))
    }

    /// k*ᵀ(K + W⁻¹)⁻¹k* written as vᵀ(I − B⁻¹)v with v = L⁻¹k*, which stays
    /// finite when W is singular.
    fn explained_variance(&self, k: &DVector<f64>) -> f64 {
        let v = self.gram_factor.solve_lower_triangular(k).expect("Cholesky factor has a positive diagonal");
        let w = self.precision_factor.solve_lower_triangular(&v).expect("Cholesky factor has a positive diagonal");
        v.norm_squared() - w.norm_squared()
    }

    pub fn mean(&self, x: &NormalizedPoint) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.cross(x).dot(&self.alpha)
    }

    pub fn means(&self, xs: &[NormalizedPoint]) -> Vec<f64> {
        if self.is_empty() {
            return vec![0.0; xs.len()];
        }
        let k = cross_covariance(self.points(), xs, &self.kernel);
        (k.transpose() * &self.alpha).iter().copied().collect()
    }

    /// Predictive mean and variance of the latent utility at `x`.
    pub fn predict(&self, x: &NormalizedPoint) -> (f64, f64) {
        let prior = self.kernel.signal_variance;
        if self.is_empty() {
            return (0.0, prior);
        }
        let k = self.cross(x);
        let mean = k.dot(&self.alpha);
        let variance = (prior - self.explained_variance(&k)).clamp(self.variance_floor(), prior);
        (mean, variance)
    }

    /// Mean and variance of f(a) − f(b).
    pub fn predict_pair(&self, a: &NormalizedPoint, b: &NormalizedPoint) -> (f64, f64) {
        let prior_var = 2.0 * self.kernel.signal_variance - 2.0 * kernel(a, b, &self.kernel);
        let (mean, variance) = if self.is_empty() {
            (0.0, prior_var)
        } else {
            let kd = self.cross(a) - self.cross(b);
            (kd.dot(&self.alpha), prior_var - self.explained_variance(&kd))
        };
        if variance < PAIR_VARIANCE_WARN {
            log::warn!("pair variance {variance:e} clamped to zero");
        }
        (mean, variance.max(0.0))
    }

    /// Joint predictive mean and covariance at `xs`.
    pub fn joint(&self, xs: &[NormalizedPoint]) -> (DVector<f64>, DMatrix<f64>) {
        let mut prior = cross_covariance(xs, xs, &self.kernel);
        if self.is_empty() {
            return (DVector::zeros(xs.len()), prior);
        }
        let k = cross_covariance(self.points(), xs, &self.kernel);
        let mean = k.transpose() * &self.alpha;
        let v = self.gram_factor.solve_lower_triangular(&k).expect("Cholesky factor has a positive diagonal");
        let w = self.precision_factor.solve_lower_triangular(&v).expect("Cholesky factor has a positive diagonal");
        prior -= v.transpose() * &v;
        prior += w.transpose() * &w;
        symmetrize(&mut prior);
        (mean, prior)
    }

    pub fn snapshot(&self) -> PosteriorSnapshot {
        PosteriorSnapshot {
            points: self.points().to_vec(),
            map_utilities: self.map_utilities.iter().copied().collect(),
            kernel: self.kernel,
            likelihood: self.likelihood,
            records: self.data.records().to_vec(),
        }
    }

    /// Rebuilds a posterior from its serialized form; the covariance is
    /// recomputed from the stored mode.
    pub fn from_snapshot(snapshot: &PosteriorSnapshot) -> Result<Self> {
        let mut data = Dataset::new();
        for p in &snapshot.points {
            data.insert_point(*p);
        }
        for r in &snapshot.records {
            data.push(r.clone());
        }
        if data.points().len() != snapshot.points.len() {
            return Err(Error::Malformed("records reference points missing from the point list".into()));
        }
        let map = DVector::from_column_slice(&snapshot.map_utilities);
        laplace(&map, &data, &snapshot.kernel, &snapshot.likelihood)
    }
}

/// Serialized posterior: the MAP and everything needed to rebuild Σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub points: Vec<NormalizedPoint>,
    pub map_utilities: Vec<f64>,
    pub kernel: KernelConfig,
    pub likelihood: LikelihoodConfig,
    pub records: Vec<ComparisonRecord>,
}
