//! Synthetic-user simulation of the learning loop.
//!
//! A ground-truth utility answers each query deterministically: it prefers
//! the option with the higher utility and reports a confidence proportional
//! to the normalized utility difference. Convergence is tracked through the
//! information gain of each selected query and the Spearman correlation
//! between the posterior mean and the ground truth on a fixed grid.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{sample_candidates, Recommendation, Strategy};
use crate::error::{Error, Result};
use crate::learner::{Learner, ModelConfig};
use crate::prefmodel::{ComparisonRecord, Confidence, Preference};
use crate::seeding;
use crate::signal::NormalizedPoint;

/// Utility differences below this are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Values within this of the target count as "not above" it.
pub const PERCENTILE_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: NormalizedPoint,
    pub weight: f64,
    pub width: f64,
}

/// Mixture of isotropic Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthUtility {
    components: Vec<GaussianBump>,
}

impl GroundTruthUtility {
    pub fn new(components: Vec<GaussianBump>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("ground truth needs at least one component".into()));
        }
        for c in &components {
            if !(c.weight.is_finite() && c.weight > 0.0) || c.width.is_nan() || c.width <= 0.0 {
                return Err(Error::InvalidConfig("ground-truth weights and widths must be > 0".into()));
            }
        }
        Ok(Self { components })
    }

    /// `count` bumps centered uniformly in [0.2, 0.8]⁴.
    pub fn random_mixture<R: Rng + ?Sized>(rng: &mut R, count: usize, width: f64, weight: f64) -> Result<Self> {
        let components = (0..count)
            .map(|_| GaussianBump {
                center: NormalizedPoint::new(std::array::from_fn(|_| rng.random_range(0.2..=0.8)))
                    .expect("inside the unit cube"),
                weight,
                width,
            })
            .collect();
        Self::new(components)
    }

    pub fn components(&self) -> &[GaussianBump] {
        &self.components
    }

    pub fn value(&self, x: &NormalizedPoint) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (-x.squared_distance(&c.center) / (2.0 * c.width * c.width)).exp())
            .sum()
    }
}

/// Deterministic synthetic answer for the pair `(a, b)`.
pub fn oracle_respond(
    gt: &GroundTruthUtility,
    a: &NormalizedPoint,
    b: &NormalizedPoint,
    range_scale: f64,
) -> (Preference, Confidence) {
    let delta = gt.value(a) - gt.value(b);
    if delta.abs() < TIE_TOLERANCE {
        return (Preference::First, Confidence::new(1).expect("valid level"));
    }
    let y = if delta > 0.0 { Preference::First } else { Preference::Second };
    let level = if range_scale > 0.0 { (1.0 + (4.0 * delta.abs() / range_scale).round()).clamp(1.0, 5.0) } else { 1.0 };
    (y, Confidence::new(level as u8).expect("clamped to 1..=5"))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based) share their mean
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput("spearman needs two equal-length lists of at least two values".into()));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        va += (x - mean) * (x - mean);
        vb += (y - mean) * (y - mean);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Percentage of `values` that are ≤ `target`.
pub fn percentile_rank(target: f64, values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("percentile rank over an empty grid".into()));
    }
    let below = values.iter().filter(|&&v| v <= target + PERCENTILE_TIE_TOLERANCE).count();
    Ok(100.0 * below as f64 / values.len() as f64)
}

/// How the ground truth is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthSpec {
    /// Random mixture drawn from the simulation seed.
    Mixture {
        components: usize,
        width: f64,
        weight: f64,
    },
    Fixed(GroundTruthUtility),
}

impl Default for GroundTruthSpec {
    fn default() -> Self {
        GroundTruthSpec::Mixture { components: 2, width: 0.2, weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub rounds: usize,
    pub ground_truth: GroundTruthSpec,
    pub model: ModelConfig,
    pub eval_grid: usize,
    pub holdout_pairs: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            rounds: 40,
            ground_truth: GroundTruthSpec::default(),
            model: ModelConfig::default(),
            eval_grid: 512,
            holdout_pairs: 200,
        }
    }
}

impl SimulationConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.model.acquisition.strategy = strategy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRound {
    pub round: usize,
    pub a: NormalizedPoint,
    pub b: NormalizedPoint,
    pub score: f64,
    pub information_gain: f64,
    pub y: Preference,
    pub confidence: Confidence,
    /// Spearman ρ after refitting on this round; `None` when undefined.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub seed: u64,
    pub strategy: Strategy,
    pub ground_truth: GroundTruthUtility,
    /// Ground-truth range over the evaluation grid.
    pub range_scale: f64,
    /// The ground truth is flat on the grid; ρ is not defined.
    pub degenerate: bool,
    pub rounds: Vec<SimulatedRound>,
    pub recommendation: Recommendation,
    pub recommendation_percentile: f64,
    pub holdout_accuracy: f64,
}

impl SimulationTrace {
    pub fn final_spearman(&self) -> Option<f64> {
        self.rounds.last().and_then(|r| r.spearman)
    }

    pub fn spearman_at(&self, round: usize) -> Option<f64> {
        self.rounds.get(round.checked_sub(1)?).and_then(|r| r.spearman)
    }

    /// Mean selected information gain over rounds `from..=to` (1-based).
    pub fn mean_information_gain(&self, from: usize, to: usize) -> f64 {
        let slice = &self.rounds[from - 1..to.min(self.rounds.len())];
        slice.iter().map(|r| r.information_gain).sum::<f64>() / slice.len() as f64
    }

    /// Mean information gain in ten equal chunks of the round sequence.
    pub fn ig_by_decile(&self) -> [f64; 10] {
        let mut sums = [0.0; 10];
        let mut counts = [0usize; 10];
        let n = self.rounds.len().max(1);
        for (i, r) in self.rounds.iter().enumerate() {
            let d = i * 10 / n;
            sums[d] += r.information_gain;
            counts[d] += 1;
        }
        std::array::from_fn(|d| if counts[d] > 0 { sums[d] / counts[d] as f64 } else { f64::NAN })
    }

    /// All queried points in query order.
    pub fn queried_points(&self) -> Vec<NormalizedPoint> {
        self.rounds.iter().flat_map(|r| [r.a, r.b]).collect()
    }
}

/// Runs the full loop against a synthetic oracle.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationTrace> {
    if cfg.rounds == 0 || cfg.eval_grid < 2 {
        return Err(Error::InvalidConfig("simulation needs rounds >= 1 and eval_grid >= 2".into()));
    }
    let gt = match &cfg.ground_truth {
        GroundTruthSpec::Mixture { components, width, weight } => {
            let mut rng = seeding::stream(cfg.seed, seeding::GROUND_TRUTH);
            GroundTruthUtility::random_mixture(&mut rng, *components, *width, *weight)?
        }
        GroundTruthSpec::Fixed(gt) => gt.clone(),
    };
    let grid = sample_candidates(&mut seeding::stream(cfg.seed, seeding::EVAL_GRID), cfg.eval_grid);
    let gt_values: Vec<f64> = grid.iter().map(|x| gt.value(x)).collect();
    let (lo, hi) = gt_values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range_scale = hi - lo;
    let degenerate = range_scale <= 1e-9 * hi.abs().max(1.0);

    let mut learner = Learner::new(cfg.model, cfg.seed)?;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let with_round = |e: Error| Error::Round { round, source: Box::new(e) };
        let query = learner.query(round).map_err(with_round)?;
        let (y, confidence) = oracle_respond(&gt, &query.a, &query.b, range_scale);
        let mut record = ComparisonRecord::new(query.a, query.b, y, confidence);
        record.acquisition_score = Some(query.information_gain);
        learner.observe(record).map_err(with_round)?;
        let spearman = if degenerate { None } else { spearman_or_none(&learner.posterior().means(&grid), &gt_values) };
        rounds.push(SimulatedRound {
            round,
            a: query.a,
            b: query.b,
            score: query.score,
            information_gain: query.information_gain,
            y,
            confidence,
            spearman,
        });
    }

    let recommendation = learner.recommend()?;
    let recommendation_percentile = percentile_rank(gt.value(&recommendation.point), &gt_values)?;

    let mut rng = seeding::stream(cfg.seed, seeding::HOLDOUT);
    let correct = (0..cfg.holdout_pairs)
        .filter(|_| {
            let pair = sample_candidates(&mut rng, 2);
            let (truth, _) = oracle_respond(&gt, &pair[0], &pair[1], range_scale);
            let m = learner.posterior().mean(&pair[0]) - learner.posterior().mean(&pair[1]);
            let predicted = if m >= 0.0 { Preference::First } else { Preference::Second };
            predicted == truth
        })
        .count();
    let holdout_accuracy = if cfg.holdout_pairs == 0 { f64::NAN } else { correct as f64 / cfg.holdout_pairs as f64 };

    Ok(SimulationTrace {
        seed: cfg.seed,
        strategy: cfg.model.acquisition.strategy,
        ground_truth: gt,
        range_scale,
        degenerate,
        rounds,
        recommendation,
        recommendation_percentile,
        holdout_accuracy,
    })
}

fn spearman_or_none(a: &[f64], b: &[f64]) -> Option<f64> {
    match spearman(a, b) {
        Ok(rho) => Some(rho),
        Err(Error::ZeroVariance) => None,
        Err(e) => unreachable!("grid lists have equal length: {e}"),
    }
}

/// Runs one simulation per seed in parallel, preserving seed order.
pub fn run_batch(base: &SimulationConfig, seeds: &[u64]) -> Result<Vec<SimulationTrace>> {
    seeds.par_iter().map(|&seed| run_simulation(&base.clone().with_seed(seed))).collect()
}

/// Mean Euclidean distance over all pairs of `points`.
pub fn mean_pairwise_distance(points: &[NormalizedPoint]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            total += p.distance(q);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    seed: u64,
    strategy: String,
    final_rho: Option<f64>,
    final_accuracy: f64,
    recommendation_percentile: f64,
    ig_d1: f64,
    ig_d2: f64,
    ig_d3: f64,
    ig_d4: f64,
    ig_d5: f64,
    ig_d6: f64,
    ig_d7: f64,
    ig_d8: f64,
    ig_d9: f64,
    ig_d10: f64,
}

/// Writes `trace_<seed>.json` per trace and `summary.csv` into `dir`.
pub fn write_outputs(dir: &Path, traces: &[SimulationTrace]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in traces {
        let mut file = std::fs::File::create(dir.join(format!("trace_{}.json", t.seed)))?;
        serde_json::to_writer_pretty(&mut file, t).map_err(|e| Error::Malformed(e.to_string()))?;
        file.write_all(b"\n")?;
    }
    let mut writer = csv::Writer::from_path(dir.join("summary.csv")).map_err(|e| Error::Malformed(e.to_string()))?;
    for t in traces {
        let d = t.ig_by_decile();
        writer
            .serialize(SummaryRow {
                seed: t.seed,
                strategy: t.strategy.to_string(),
                final_rho: t.final_spearman(),
                final_accuracy: t.holdout_accuracy,
                recommendation_percentile: t.recommendation_percentile,
                ig_d1: d[0],
                ig_d2: d[1],
                ig_d3: d[2],
                ig_d4: d[3],
                ig_d5: d[4],
                ig_d6: d[5],
                ig_d7: d[6],
                ig_d8: d[7],
                ig_d9: d[8],
                ig_d10: d[9],
            })
            .map_err(|e| Error::Malformed(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: [f64; 4]) -> NormalizedPoint {
        NormalizedPoint::new(v).unwrap()
    }

    fn line_gt() -> GroundTruthUtility {
        GroundTruthUtility::new(vec![GaussianBump { center: pt([0.5; 4]), weight: 1.0, width: 0.3 }]).unwrap()
    }

    #[test]
    fn oracle_ties_and_extremes() {
        let gt = line_gt();
        let a = pt([0.2, 0.5, 0.5, 0.5]);
        let b = pt([0.8, 0.5, 0.5, 0.5]);
        assert_eq!(oracle_respond(&gt, &a, &b, 1.0), (Preference::First, Confidence::new(1).unwrap()));

        let top = pt([0.5; 4]);
        let delta = gt.value(&top) - gt.value(&a);
        assert_eq!(oracle_respond(&gt, &top, &a, delta), (Preference::First, Confidence::new(5).unwrap()));
        assert_eq!(oracle_respond(&gt, &a, &top, delta), (Preference::Second, Confidence::new(5).unwrap()));
        // 4 · 0.3 = 1.2 rounds to 1
        assert_eq!(oracle_respond(&gt, &top, &a, delta / 0.3).1, Confidence::new(2).unwrap());
    }

    #[test]
    fn spearman_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        assert_eq!(spearman(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((spearman(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(spearman(&a, &[2.0; 4]), Err(Error::ZeroVariance)));
        assert!(spearman(&a, &[1.0]).is_err());
    }

    #[test]
    fn spearman_averages_tied_ranks() {
        // ranks of b: [1, 2.5, 2.5, 4]; Pearson against [1, 2, 3, 4]
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[0.0, 5.0, 5.0, 9.0]).unwrap();
        let expected = 4.5 / (5f64 * 4.5).sqrt();
        assert!((rho - expected).abs() < 1e-12);
    }

    #[test]
    fn percentile_extremes() {
        let values: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(percentile_rank(49.0, &values).unwrap(), 100.0);
        assert_eq!(percentile_rank(0.0, &values).unwrap(), 100.0 / 50.0);
        assert!(percentile_rank(0.0, &[]).is_err());
    }

    #[test]
    fn percentile_of_symmetric_midpoint() {
        // u(x) = x₁ on a uniform 101-point grid; the midpoint sits at ~50%
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let p = percentile_rank(0.5, &grid).unwrap();
        assert!((p - 50.0).abs() <= 100.0 / grid.len() as f64 + 1e-9, "{p}");
    }

    #[test]
    fn ground_truth_validation() {
        assert!(GroundTruthUtility::new(vec![]).is_err());
        let bad = GaussianBump { center: pt([0.5; 4]), weight: 0.0, width: 0.2 };
        assert!(GroundTruthUtility::new(vec![bad]).is_err());
        let gt = GroundTruthUtility::random_mixture(&mut seeding::stream(1, 1), 2, 0.2, 1.0).unwrap();
        for c in gt.components() {
            assert!(c.center.coords().iter().all(|v| (0.2..=0.8).contains(v)));
        }
    }

    #[test]
    fn short_simulation_is_deterministic() {
        let cfg = SimulationConfig { rounds: 6, eval_grid: 64, holdout_pairs: 20, ..Default::default() };
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.rounds.len(), 6);
        for r in &a.rounds {
            let truth = a.ground_truth.value(&r.a) - a.ground_truth.value(&r.b);
            if truth.abs() >= TIE_TOLERANCE {
                assert_eq!(r.y.sign(), truth.signum());
            }
            assert!(r.spearman.is_none_or(|rho| (-1.0..=1.0).contains(&rho)));
        }
    }

    #[test]
    fn flat_ground_truth_is_degenerate() {
        let flat =
            GroundTruthUtility::new(vec![GaussianBump { center: pt([0.5; 4]), weight: 1.0, width: f64::INFINITY }])
                .unwrap();
        let cfg = SimulationConfig {
            rounds: 5,
            eval_grid: 64,
            holdout_pairs: 10,
            ground_truth: GroundTruthSpec::Fixed(flat),
            ..Default::default()
        };
        let trace = run_simulation(&cfg).unwrap();
        assert!(trace.degenerate);
        assert!(trace.rounds.iter().all(|r| r.confidence.level() == 1 && r.spearman.is_none()));
    }

    #[test]
    fn deciles_cover_all_rounds() {
        let cfg = SimulationConfig { rounds: 10, eval_grid: 32, holdout_pairs: 0, ..Default::default() };
        let trace = run_simulation(&cfg).unwrap();
        let d = trace.ig_by_decile();
        for (i, r) in trace.rounds.iter().enumerate() {
            assert_eq!(d[i], r.information_gain);
        }
        assert!(trace.holdout_accuracy.is_nan());
    }
}
