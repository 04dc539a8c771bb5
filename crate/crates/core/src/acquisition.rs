//! Query selection and recommendation.
//!
//! Each round a fresh candidate set is drawn uniformly from the unit
//! hypercube and every unordered pair is scored under the current posterior.
//! The default score is the expected information gain of the comparison;
//! EUBO (expected utility of the better option) and uniform random choice
//! are available for comparison.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{norm_cdf, norm_pdf, probit_entropy, GaussHermite};
use crate::prefmodel::PreferencePosterior;
use crate::signal::{NormalizedPoint, DIM};

/// Any IG below this is quadrature noise.
const IG_NEGATIVE_TOLERANCE: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    InfoGain,
    Eubo,
    Random,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::InfoGain => "info_gain",
            Strategy::Eubo => "eubo",
            Strategy::Random => "random",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "info_gain" => Ok(Strategy::InfoGain),
            "eubo" => Ok(Strategy::Eubo),
            "random" => Ok(Strategy::Random),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    /// σ_nom, the noise assumed for the not-yet-given answer.
    pub nominal_noise: f64,
    pub candidate_count: usize,
    pub quadrature_order: usize,
    pub strategy: Strategy,
    /// Size of the uniform pool searched by [`recommend`].
    pub recommendation_pool: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            // u(3), a typical-confidence answer
            nominal_noise: 1.7,
            candidate_count: 64,
            quadrature_order: 32,
            strategy: Strategy::InfoGain,
            recommendation_pool: 8192,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_noise.is_finite() && self.nominal_noise > 0.0) {
            return Err(Error::InvalidConfig("acquisition.nominal_noise must be > 0".into()));
        }
        if self.candidate_count < 2 {
            return Err(Error::InvalidConfig("acquisition.candidate_count must be >= 2".into()));
        }
        if self.quadrature_order < 8 {
            return Err(Error::InvalidConfig("acquisition.quadrature_order must be >= 8".into()));
        }
        if self.recommendation_pool == 0 {
            return Err(Error::InvalidConfig("acquisition.recommendation_pool must be >= 1".into()));
        }
        Ok(())
    }
}

/// The selected comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryPair {
    pub a: NormalizedPoint,
    pub b: NormalizedPoint,
    /// Strategy score: nats for info_gain, utility for eubo.
    pub score: f64,
    /// Expected information gain (nats), logged for every strategy.
    pub information_gain: f64,
    /// Mean of f(a) − f(b).
    pub mean_gap: f64,
    /// Variance of f(a) − f(b).
    pub gap_variance: f64,
}

/// Φ(m / √(v + σ²)), the predicted probability that the first option wins.
pub fn choice_probability(m: f64, v: f64, nominal_noise: f64) -> f64 {
    norm_cdf(m / (v + nominal_noise * nominal_noise).sqrt())
}

/// Expected information gain evaluator with a cached quadrature rule.
#[derive(Debug, Clone)]
pub struct InformationGain {
    nominal_noise: f64,
    rule: GaussHermite,
}

impl InformationGain {
    pub fn new(nominal_noise: f64, order: usize) -> Self {
        Self { nominal_noise, rule: GaussHermite::new(order) }
    }

    /// h(Φ(m/√(v+σ²))) − E_z[h(Φ((m + √v z)/σ))], in nats, clamped at zero.
    pub fn score(&self, m: f64, v: f64) -> f64 {
        let sigma = self.nominal_noise;
        let v = v.max(0.0);
        if v == 0.0 {
            return 0.0;
        }
        let marginal = probit_entropy(m / (v + sigma * sigma).sqrt());
        let sd = v.sqrt();
        let conditional = self.rule.expect(|z| probit_entropy((m + sd * z) / sigma));
        let ig = marginal - conditional;
        if ig < IG_NEGATIVE_TOLERANCE {
            log::debug!("information gain {ig:e} clamped to zero");
        }
        ig.max(0.0)
    }
}

pub fn information_gain(m: f64, v: f64, nominal_noise: f64, order: usize) -> f64 {
    InformationGain::new(nominal_noise, order).score(m, v)
}

/// E[max(f(a), f(b))] for jointly Gaussian utilities with means `mu_a`,
/// `mu_b` and gap variance `v`.
pub fn expected_best(mu_a: f64, mu_b: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return mu_a.max(mu_b);
    }
    let sd = v.sqrt();
    let t = (mu_a - mu_b) / sd;
    mu_a * norm_cdf(t) + mu_b * norm_cdf(-t) + sd * norm_pdf(t)
}

pub fn eubo_score(post: &PreferencePosterior, a: &NormalizedPoint, b: &NormalizedPoint) -> f64 {
    let mu_a = post.mean(a);
    let mu_b = post.mean(b);
    let (_, v) = post.predict_pair(a, b);
    expected_best(mu_a, mu_b, v)
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R) -> NormalizedPoint {
    let coords: [f64; DIM] = std::array::from_fn(|_| rng.random::<f64>());
    NormalizedPoint::new(coords).expect("uniform draws lie in [0, 1)")
}

/// `n` points uniform in the unit hypercube.
pub fn sample_candidates<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<NormalizedPoint> {
    (0..n).map(|_| random_point(rng)).collect()
}

/// Scores all pairs of a fresh candidate set and returns the best one.
pub fn select_pair<R: Rng + ?Sized>(
    post: &PreferencePosterior,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<QueryPair> {
    cfg.validate()?;
    let candidates = sample_candidates(rng, cfg.candidate_count);
    let forced = match cfg.strategy {
        Strategy::Random => {
            let i = rng.random_range(0..candidates.len());
            let mut j = rng.random_range(0..candidates.len() - 1);
            if j >= i {
                j += 1;
            }
            Some((i.min(j), i.max(j)))
        }
        _ => None,
    };
    select_from(post, cfg, &candidates, forced)
}

/// Exhaustive scoring over `candidates`. Ties keep the first pair in
/// (i, j > i) order. When `forced` is set that pair is returned with its
/// information gain attached.
pub fn select_from(
    post: &PreferencePosterior,
    cfg: &AcquisitionConfig,
    candidates: &[NormalizedPoint],
    forced: Option<(usize, usize)>,
) -> Result<QueryPair> {
    if candidates.len() < 2 {
        return Err(Error::InvalidInput("need at least two candidates".into()));
    }
    let ig = InformationGain::new(cfg.nominal_noise, cfg.quadrature_order);
    let (means, cov) = post.joint(candidates);
    let stats = |i: usize, j: usize| {
        let m = means[i] - means[j];
        let v = (cov[(i, i)] + cov[(j, j)] - 2.0 * cov[(i, j)]).max(0.0);
        (m, v)
    };
    let build = |i: usize, j: usize, score: f64| {
        let (m, v) = stats(i, j);
        QueryPair {
            a: candidates[i],
            b: candidates[j],
            score,
            information_gain: ig.score(m, v),
            mean_gap: m,
            gap_variance: v,
        }
    };

    if let Some((i, j)) = forced {
        let pair = build(i, j, 0.0);
        return Ok(QueryPair { score: pair.information_gain, ..pair });
    }

    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let (m, v) = stats(i, j);
            let score = match cfg.strategy {
                Strategy::InfoGain | Strategy::Random => ig.score(m, v),
                Strategy::Eubo => expected_best(means[i], means[j], v),
            };
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((i, j, score));
            }
        }
    }
    let (i, j, score) = best.expect("at least one pair");
    Ok(build(i, j, score))
}

/// Best point found by the pool search, with its posterior mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub point: NormalizedPoint,
    pub posterior_mean: f64,
}

/// The seeded uniform pool of [`recommend`] followed by the queried points.
pub fn recommendation_pool<R: Rng + ?Sized>(
    post: &PreferencePosterior,
    pool_size: usize,
    rng: &mut R,
) -> Vec<NormalizedPoint> {
    let mut pool = sample_candidates(rng, pool_size);
    pool.extend_from_slice(post.points());
    pool
}

/// Approximate argmax of the posterior mean over a pool search.
pub fn recommend<R: Rng + ?Sized>(post: &PreferencePosterior, pool_size: usize, rng: &mut R) -> Result<Recommendation> {
    if post.dataset().is_empty() {
        return Err(Error::EmptyPosterior);
    }
    let pool = recommendation_pool(post, pool_size, rng);
    let means = post.means(&pool);
    let (idx, mean) =
        means
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, m)| if m > best.1 { (i, m) } else { best });
    Ok(Recommendation { point: pool[idx], posterior_mean: mean })
}
