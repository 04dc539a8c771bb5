use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::NormalizedPoint;

/// Self-reported confidence, 1 (very unsure) to 5 (very sure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Confidence(u8);

impl Confidence {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(level: u8) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&level) {
            Ok(Self(level))
        } else {
            Err(Error::InvalidInput(format!("confidence must be in 1..=5, got {level}")))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Confidence> {
        (Self::MIN..=Self::MAX).map(Confidence)
    }
}

impl TryFrom<u8> for Confidence {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Confidence::new(v)
    }
}

impl From<Confidence> for u8 {
    fn from(c: Confidence) -> u8 {
        c.0
    }
}

/// Binary preference; serialized as `+1` (first option preferred) or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Preference {
    /// The first point of the pair is preferred (y = +1).
    First,
    /// The second point is preferred (y = −1).
    Second,
}

impl Preference {
    pub fn sign(self) -> f64 {
        match self {
            Preference::First => 1.0,
            Preference::Second => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Preference::First => Preference::Second,
            Preference::Second => Preference::First,
        }
    }
}

impl TryFrom<i8> for Preference {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Preference::First),
            -1 => Ok(Preference::Second),
            _ => Err(Error::InvalidInput(format!("preference must be +1 or -1, got {v}"))),
        }
    }
}

impl From<Preference> for i8 {
    fn from(p: Preference) -> i8 {
        match p {
            Preference::First => 1,
            Preference::Second => -1,
        }
    }
}

/// One answered comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub a: NormalizedPoint,
    pub b: NormalizedPoint,
    pub y: Preference,
    pub confidence: Confidence,
    /// Information gain (nats) the pair scored when it was selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquisition_score: Option<f64>,
    /// Milliseconds since the Unix epoch.
    #[serde(default)]
    pub timestamp_ms: u64,
}

impl ComparisonRecord {
    pub fn new(a: NormalizedPoint, b: NormalizedPoint, y: Preference, confidence: Confidence) -> Self {
        Self { a, b, y, confidence, acquisition_score: None, timestamp_ms: 0 }
    }
}

/// Confidence-aware probit noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LikelihoodConfig {
    /// Baseline jitter λ shared by every comparison.
    pub baseline_jitter: f64,
    /// Noise scale u(c) for confidence levels 1..=5.
    pub confidence_noise: [f64; 5],
}

/// Pilot-calibrated noise scales for confidence 1..=5.
pub const CALIBRATED_NOISE: [f64; 5] = [9.0, 3.35, 1.7, 0.66, 0.01];

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self { baseline_jitter: 0.1, confidence_noise: CALIBRATED_NOISE }
    }
}

impl LikelihoodConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.baseline_jitter.is_finite() && self.baseline_jitter > 0.0) {
            return Err(Error::InvalidConfig("likelihood.baseline_jitter must be > 0".into()));
        }
        let u = &self.confidence_noise;
        if !(u[4].is_finite() && u[4] > 0.0)
            || u.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidConfig(
                "likelihood.confidence_noise must be strictly decreasing and positive".into(),
            ));
        }
        Ok(())
    }

    pub fn noise_scale(&self, c: Confidence) -> f64 {
        self.confidence_noise[usize::from(c.level() - 1)]
    }

    /// √(2λ² + u(c)²), the probit denominator for a comparison at confidence `c`.
    pub fn effective_noise(&self, c: Confidence) -> f64 {
        let u = self.noise_scale(c);
        (2.0 * self.baseline_jitter * self.baseline_jitter + u * u).sqrt()
    }
}

pub fn effective_noise(record: &ComparisonRecord, cfg: &LikelihoodConfig) -> f64 {
    cfg.effective_noise(record.confidence)
}
