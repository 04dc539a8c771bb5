//! A live study session: active learning, the validation round and the
//! favorites phase, with a JSON log that can be saved and resumed.

mod clock;
mod persist;
pub mod validation;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::acquisition::{QueryPair, Recommendation};
use crate::error::{Error, Result};
use crate::learner::{Learner, ModelConfig};
use crate::prefmodel::{ComparisonRecord, Confidence, Preference};
use crate::seeding;
use crate::signal::{self, denormalize, normalize, NormalizedPoint, PulseTimeline, SignalParams};
use crate::simulator::percentile_rank;

pub use clock::{time_based_seed, Clock, StepClock, SystemClock};
pub use persist::{from_json, load_session, save_session, to_json, SCHEMA_VERSION};
pub use validation::{generate_validation_set, PairTag, ValidationPair, ValidationSet};

pub const MAX_FAVORITES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Number of learning rounds.
    pub budget: usize,
    /// `None` draws a time-based seed at creation; the drawn value is
    /// written back so the log always carries it.
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub duration_ms: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self { budget: 40, seed: None, model: ModelConfig::default(), duration_ms: signal::DEFAULT_DURATION_MS }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        if !(self.duration_ms.is_finite() && self.duration_ms > 0.0) {
            return Err(Error::InvalidConfig("duration_ms must be > 0".into()));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Learning,
    Validation,
    Adjustment,
    Complete,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Learning => "learning",
            Phase::Validation => "validation",
            Phase::Adjustment => "adjustment",
            Phase::Complete => "complete",
        };
        f.write_str(s)
    }
}

/// Presented side of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Side::A),
            "B" => Ok(Side::B),
            _ => Err(Error::InvalidInput(format!("choice must be \"A\" or \"B\", got {s:?}"))),
        }
    }
}

/// A stimulus as logged: physical parameters plus normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub params: SignalParams,
    pub point: NormalizedPoint,
}

impl Stimulus {
    pub fn from_point(point: NormalizedPoint) -> Self {
        Self { params: denormalize(&point), point }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub round: usize,
    pub a: Stimulus,
    pub b: Stimulus,
    /// Value of the configured acquisition criterion.
    pub score: f64,
    pub information_gain: f64,
    pub issued_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub a: Stimulus,
    pub b: Stimulus,
    pub choice: Side,
    pub y: Preference,
    pub confidence: Confidence,
    pub information_gain: f64,
    pub acquisition_score: f64,
    pub issued_ms: u64,
    pub answered_ms: u64,
    /// Free-form playback note from the client, e.g. `"fallback"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub playback: Option<String>,
}

impl RoundLog {
    pub fn record(&self) -> ComparisonRecord {
        ComparisonRecord {
            a: self.a.point,
            b: self.b.point,
            y: self.y,
            confidence: self.confidence,
            acquisition_score: Some(self.information_gain),
            timestamp_ms: self.answered_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendationLog {
    pub stimulus: Stimulus,
    pub posterior_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationResponse {
    pub tag: PairTag,
    pub choice: Side,
    /// Index into the validation points of the chosen signal.
    pub chosen: usize,
    pub matches_model: bool,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationLog {
    pub set: ValidationSet,
    pub stimuli: Vec<Stimulus>,
    pub responses: Vec<ValidationResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inconsistent: Option<bool>,
}

impl ValidationLog {
    pub fn next_pair(&self) -> Option<&ValidationPair> {
        self.set.pairs.get(self.responses.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Favorite {
    pub stimulus: Stimulus,
    pub timestamp_ms: u64,
    pub posterior_mean: f64,
    /// Percentile of `posterior_mean` among the recommendation pool.
    pub percentile: f64,
}

/// The serialized session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema_version: u64,
    pub id: String,
    pub seed: u64,
    pub config: SessionConfig,
    pub phase: Phase,
    pub created_ms: u64,
    pub rounds: Vec<RoundLog>,
    pub pending: Option<PendingQuery>,
    pub recommendation: Option<RecommendationLog>,
    pub validation: Option<ValidationLog>,
    pub favorites: Vec<Favorite>,
    /// Opaque to the engine; reserved for questionnaires and notes.
    #[serde(default)]
    pub annotations: serde_json::Map<String, serde_json::Value>,
}

impl SessionState {
    pub fn records(&self) -> Vec<ComparisonRecord> {
        self.rounds.iter().map(RoundLog::record).collect()
    }

    /// Structural checks used when loading a log.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Malformed(format!("session log: {msg}")));
        self.config.validate()?;
        if self.config.seed != Some(self.seed) {
            return bad("seed does not match config");
        }
        if self.rounds.len() > self.config.budget {
            return bad("more rounds than budget");
        }
        if self.rounds.iter().enumerate().any(|(i, r)| r.round != i + 1) {
            return bad("round numbers are not consecutive");
        }
        if self.rounds.iter().any(|r| (r.choice == Side::A) != (r.y == Preference::First)) {
            return bad("choice and y disagree");
        }
        let learning_done = self.rounds.len() == self.config.budget;
        match (self.phase, &self.pending) {
            (Phase::Learning, Some(p)) if !learning_done && p.round == self.rounds.len() + 1 => {}
            (Phase::Learning, _) => return bad("learning phase needs the next query pending"),
            (_, Some(_)) => return bad("pending query outside learning"),
            (_, None) if !learning_done => return bad("learning ended early"),
            _ => {}
        }
        if (self.phase > Phase::Learning) != self.recommendation.is_some() {
            return bad("recommendation presence does not match phase");
        }
        match (&self.validation, self.phase) {
            (None, Phase::Learning) => {}
            (None, _) => return bad("missing validation set"),
            (Some(_), Phase::Learning) => return bad("validation set during learning"),
            (Some(v), phase) => {
                v.set.check()?;
                let done = v.responses.len() == v.set.pairs.len();
                if v.responses.len() > v.set.pairs.len() || (phase == Phase::Validation) == done {
                    return bad("validation responses do not match phase");
                }
            }
        }
        let favorites_ok = match self.phase {
            Phase::Complete => self.favorites.len() == MAX_FAVORITES,
            Phase::Adjustment => self.favorites.len() < MAX_FAVORITES,
            _ => self.favorites.is_empty(),
        };
        if !favorites_ok {
            return bad("favorites do not match phase");
        }
        Ok(())
    }
}

/// Outcome of a learning-phase response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Progress {
    NextRound(usize),
    PhaseChange(Phase),
}

/// A stimulus with its rendered pulse train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playable {
    pub params: SignalParams,
    pub timeline: PulseTimeline,
}

/// A running session: the log plus the learner fitted to it.
pub struct Session {
    state: SessionState,
    learner: Learner,
    clock: Arc<dyn Clock>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session").field("state", &self.state).finish_non_exhaustive()
    }
}

impl Session {
    /// Starts a session and selects the first query.
    pub fn create(id: impl Into<String>, mut config: SessionConfig, clock: Arc<dyn Clock>) -> Result<Self> {
        config.validate()?;
        let seed = *config.seed.get_or_insert_with(time_based_seed);
        let learner = Learner::new(config.model, seed)?;
        let created_ms = clock.now_ms();
        let mut session = Self {
            state: SessionState {
                schema_version: SCHEMA_VERSION,
                id: id.into(),
                seed,
                config,
                phase: Phase::Learning,
                created_ms,
                rounds: Vec::new(),
                pending: None,
                recommendation: None,
                validation: None,
                favorites: Vec::new(),
                annotations: Default::default(),
            },
            learner,
            clock,
        };
        session.state.pending = Some(session.next_query(&session.learner, 1)?);
        Ok(session)
    }

    /// Resumes from a log, refitting the model on its comparisons.
    pub fn resume(state: SessionState, clock: Arc<dyn Clock>) -> Result<Self> {
        state.check()?;
        let learner = Learner::with_records(state.config.model, state.seed, &state.records())?;
        Ok(Self { state, learner, clock })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn into_state(self) -> SessionState {
        self.state
    }

    pub fn id(&self) -> &str {
        &self.state.id
    }

    pub fn seed(&self) -> u64 {
        self.state.seed
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn annotations_mut(&mut self) -> &mut serde_json::Map<String, serde_json::Value> {
        &mut self.state.annotations
    }

    pub fn render(&self, params: &SignalParams) -> Result<Playable> {
        Ok(Playable { params: *params, timeline: signal::render_pulse_train(params, self.state.config.duration_ms)? })
    }

    pub fn pending(&self) -> Result<&PendingQuery> {
        self.state
            .pending
            .as_ref()
            .ok_or_else(|| Error::Protocol(format!("no pending query in phase {}", self.state.phase)))
    }

    fn next_query(&self, learner: &Learner, round: usize) -> Result<PendingQuery> {
        let q: QueryPair = learner.query(round)?;
        Ok(PendingQuery {
            round,
            a: Stimulus::from_point(q.a),
            b: Stimulus::from_point(q.b),
            score: q.score,
            information_gain: q.information_gain,
            issued_ms: self.clock.now_ms(),
        })
    }

    /// Records the answer to the pending query. On any error the session
    /// is left exactly as it was.
    pub fn submit_response(
        &mut self,
        choice: Side,
        confidence: Confidence,
        playback: Option<String>,
    ) -> Result<Progress> {
        if self.state.phase != Phase::Learning {
            return Err(Error::Protocol(format!("responses are not accepted in phase {}", self.state.phase)));
        }
        let pending = *self.pending()?;
        let y = match choice {
            Side::A => Preference::First,
            Side::B => Preference::Second,
        };
        let log = RoundLog {
            round: pending.round,
            a: pending.a,
            b: pending.b,
            choice,
            y,
            confidence,
            information_gain: pending.information_gain,
            acquisition_score: pending.score,
            issued_ms: pending.issued_ms,
            answered_ms: self.clock.now_ms(),
            playback,
        };
        let mut learner = self.learner.clone();
        learner.observe(log.record()).map_err(|e| Error::Round { round: pending.round, source: Box::new(e) })?;

        let progress = if self.state.rounds.len() + 1 < self.state.config.budget {
            let next = self.next_query(&learner, pending.round + 1)?;
            self.state.pending = Some(next);
            Progress::NextRound(next.round)
        } else {
            let (recommendation, validation) = self.finish_learning(&learner)?;
            self.state.pending = None;
            self.state.recommendation = Some(recommendation);
            self.state.validation = Some(validation);
            self.state.phase = Phase::Validation;
            Progress::PhaseChange(Phase::Validation)
        };
        self.state.rounds.push(log);
        self.learner = learner;
        Ok(progress)
    }

    fn finish_learning(&self, learner: &Learner) -> Result<(RecommendationLog, ValidationLog)> {
        let Recommendation { point, posterior_mean } = learner.recommend()?;
        let set = generate_validation_set(
            learner.posterior(),
            &point,
            &mut seeding::stream(self.state.seed, seeding::VALIDATION),
            &mut seeding::stream(self.state.seed, seeding::PRESENTATION),
        )?;
        let stimuli = set.points.iter().copied().map(Stimulus::from_point).collect();
        Ok((
            RecommendationLog { stimulus: Stimulus::from_point(point), posterior_mean },
            ValidationLog { set, stimuli, responses: Vec::new(), accuracy: None, inconsistent: None },
        ))
    }

    pub fn recommendation(&self) -> Result<&RecommendationLog> {
        self.state
            .recommendation
            .as_ref()
            .ok_or_else(|| Error::Protocol("no recommendation before learning completes".into()))
    }

    /// The validation pair awaiting an answer, with its two stimuli in
    /// presentation order.
    pub fn next_validation_pair(&self) -> Result<(ValidationPair, Stimulus, Stimulus)> {
        let v = self.validation_in_progress()?;
        let pair = *v.next_pair().expect("validation phase has a pending pair");
        Ok((pair, v.stimuli[pair.shown_a], v.stimuli[pair.shown_b]))
    }

    fn validation_in_progress(&self) -> Result<&ValidationLog> {
        if self.state.phase != Phase::Validation {
            return Err(Error::Protocol(format!("no validation pair in phase {}", self.state.phase)));
        }
        Ok(self.state.validation.as_ref().expect("validation phase has a validation set"))
    }

    pub fn submit_validation_response(&mut self, tag: PairTag, choice: Side) -> Result<Option<Phase>> {
        let (pair, _, _) = self.next_validation_pair()?;
        if pair.tag != tag {
            return Err(Error::Protocol(format!("expected a response for {}, got {tag}", pair.tag)));
        }
        let timestamp_ms = self.clock.now_ms();
        let v = self.state.validation.as_mut().expect("checked above");
        let chosen = match choice {
            Side::A => pair.shown_a,
            Side::B => pair.shown_b,
        };
        v.responses.push(ValidationResponse {
            tag,
            choice,
            chosen,
            matches_model: chosen == v.set.model_choice(&pair),
            timestamp_ms,
        });
        if v.responses.len() < v.set.pairs.len() {
            return Ok(None);
        }
        let correct = v.responses.iter().filter(|r| r.matches_model).count();
        v.accuracy = Some(correct as f64 / v.responses.len() as f64);
        let chosen_for = |t: PairTag| v.responses.iter().find(|r| r.tag == t).map(|r| r.chosen);
        v.inconsistent = Some(chosen_for(PairTag::AnchorMedium) != chosen_for(PairTag::ConsistencyCheck));
        self.state.phase = Phase::Adjustment;
        Ok(Some(Phase::Adjustment))
    }

    /// Stores a favorite with its posterior-mean percentile over the
    /// recommendation pool.
    pub fn record_favorite(&mut self, params: SignalParams) -> Result<&Favorite> {
        if self.state.phase != Phase::Adjustment {
            return Err(Error::Protocol(format!("favorites are not accepted in phase {}", self.state.phase)));
        }
        let point = normalize(&params);
        let post = self.learner.posterior();
        let mean = post.mean(&point);
        let pool_means = post.means(&self.learner.recommendation_pool());
        let percentile = percentile_rank(mean, &pool_means)?;
        self.state.favorites.push(Favorite {
            stimulus: Stimulus { params, point },
            timestamp_ms: self.clock.now_ms(),
            posterior_mean: mean,
            percentile,
        });
        if self.state.favorites.len() == MAX_FAVORITES {
            self.state.phase = Phase::Complete;
        }
        Ok(self.state.favorites.last().expect("just pushed"))
    }
}
