//! The post-learning validation round: seven stimuli (the recommendation
//! plus six spread-out samples) and four tagged comparisons.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::random_point;
use crate::error::{Error, Result};
use crate::prefmodel::PreferencePosterior;
use crate::signal::{hypercube_diagonal, NormalizedPoint};

pub const SAMPLED_POINTS: usize = 6;
pub const MAX_SAMPLING_ATTEMPTS: usize = 10_000;
/// Minimum separation as a fraction of the hypercube diagonal.
pub const MIN_DISTANCE_FRACTION: f64 = 0.05;

pub fn min_distance() -> f64 {
    MIN_DISTANCE_FRACTION * hypercube_diagonal()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairTag {
    AnchorEasy,
    AnchorMedium,
    GlobalTradeoff,
    ConsistencyCheck,
}

impl PairTag {
    /// Protocol order.
    pub const ORDER: [PairTag; 4] =
        [PairTag::AnchorEasy, PairTag::AnchorMedium, PairTag::GlobalTradeoff, PairTag::ConsistencyCheck];
}

impl std::fmt::Display for PairTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PairTag::AnchorEasy => "anchor_easy",
            PairTag::AnchorMedium => "anchor_medium",
            PairTag::GlobalTradeoff => "global_tradeoff",
            PairTag::ConsistencyCheck => "consistency_check",
        };
        f.write_str(s)
    }
}

/// A validation comparison. Indices refer to [`ValidationSet::points`];
/// `shown_a`/`shown_b` is the order presented to the participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPair {
    pub tag: PairTag,
    pub shown_a: usize,
    pub shown_b: usize,
}

impl ValidationPair {
    pub fn swapped(self, tag: PairTag) -> Self {
        Self { tag, shown_a: self.shown_b, shown_b: self.shown_a }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSet {
    /// `points[0]` is the recommendation, the rest are the sampled points.
    pub points: Vec<NormalizedPoint>,
    /// Posterior mean of each point.
    pub means: Vec<f64>,
    pub best: usize,
    pub worst: usize,
    pub mid: usize,
    pub pairs: Vec<ValidationPair>,
}

impl ValidationSet {
    pub fn pair(&self, tag: PairTag) -> &ValidationPair {
        self.pairs.iter().find(|p| p.tag == tag).expect("every tag is present")
    }

    /// Index the model ranks higher within `pair` (ties go to side A).
    pub fn model_choice(&self, pair: &ValidationPair) -> usize {
        if self.means[pair.shown_a] >= self.means[pair.shown_b] {
            pair.shown_a
        } else {
            pair.shown_b
        }
    }

    /// Checks the 7-point / 4-pair structure and the distance constraint.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Malformed(format!("validation set: {msg}")));
        let n = SAMPLED_POINTS + 1;
        if self.points.len() != n || self.means.len() != n {
            return bad(format!("expected {n} points"));
        }
        if self.best != 0
            || self.worst >= n
            || self.mid >= n
            || self.worst == 0
            || self.mid == 0
            || self.worst == self.mid
        {
            return bad("anchor indices".into());
        }
        let threshold = min_distance();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.points[i].distance(&self.points[j]) < threshold {
                    return bad(format!("points {i} and {j} closer than {threshold}"));
                }
            }
        }
        let tags: Vec<PairTag> = self.pairs.iter().map(|p| p.tag).collect();
        if tags != PairTag::ORDER {
            return bad("pair tags".into());
        }
        if self.pairs.iter().any(|p| p.shown_a >= n || p.shown_b >= n || p.shown_a == p.shown_b) {
            return bad("pair indices".into());
        }
        let unordered = |p: &ValidationPair| (p.shown_a.min(p.shown_b), p.shown_a.max(p.shown_b));
        if unordered(self.pair(PairTag::AnchorEasy)) != (0, self.worst)
            || unordered(self.pair(PairTag::AnchorMedium)) != (0, self.mid)
        {
            return bad("anchor pairs".into());
        }
        if *self.pair(PairTag::ConsistencyCheck) != self.pair(PairTag::AnchorMedium).swapped(PairTag::ConsistencyCheck)
        {
            return bad("consistency check is not the swapped anchor_medium pair".into());
        }
        Ok(())
    }
}

/// Six uniform points, each at least [`min_distance`] from `best` and from
/// each other, by rejection sampling.
pub fn sample_spread_points<R: Rng + ?Sized>(best: &NormalizedPoint, rng: &mut R) -> Result<Vec<NormalizedPoint>> {
    let threshold = min_distance();
    let mut points = vec![*best];
    let mut attempts = 0;
    while points.len() <= SAMPLED_POINTS {
        if attempts == MAX_SAMPLING_ATTEMPTS {
            return Err(Error::SamplingExhausted { attempts });
        }
        attempts += 1;
        let x = random_point(rng);
        if points.iter().all(|p| p.distance(&x) >= threshold) {
            points.push(x);
        }
    }
    Ok(points)
}

/// Builds the validation set around `best` (normally the recommendation).
///
/// `sample_rng` draws the six extra points and `side_rng` decides which
/// signal of each pair is shown first. The consistency check repeats
/// anchor_medium with the presented sides swapped.
pub fn generate_validation_set<R: Rng + ?Sized, S: Rng + ?Sized>(
    post: &PreferencePosterior,
    best: &NormalizedPoint,
    sample_rng: &mut R,
    side_rng: &mut S,
) -> Result<ValidationSet> {
    let points = sample_spread_points(best, sample_rng)?;
    let means = post.means(&points);

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| means[i].total_cmp(&means[j]).then(i.cmp(&j)));
    // The lowest and median ranks, stepping one rank towards the middle
    // when the recommendation itself sits there.
    let worst = if order[0] == 0 { order[1] } else { order[0] };
    let median = order.len() / 2;
    let mid = if order[median] == 0 { order[median - 1] } else { order[median] };

    let mut tradeoff = (0, 1);
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let score = points[i].distance(&points[j]) * (means[i] - means[j]).abs();
            if score > best_score {
                best_score = score;
                tradeoff = (i, j);
            }
        }
    }

    let mut present = |tag: PairTag, (x, y): (usize, usize)| {
        if side_rng.random_bool(0.5) {
            ValidationPair { tag, shown_a: y, shown_b: x }
        } else {
            ValidationPair { tag, shown_a: x, shown_b: y }
        }
    };
    let easy = present(PairTag::AnchorEasy, (0, worst));
    let medium = present(PairTag::AnchorMedium, (0, mid));
    let global = present(PairTag::GlobalTradeoff, tradeoff);
    let consistency = medium.swapped(PairTag::ConsistencyCheck);

    let set = ValidationSet { points, means, best: 0, worst, mid, pairs: vec![easy, medium, global, consistency] };
    debug_assert!(set.check().is_ok());
    Ok(set)
}
