//! The active-learning loop shared by live sessions and the simulator:
//! select a pair, record the answer, refit, and finally recommend.

use crate::acquisition::{self, AcquisitionConfig, QueryPair, Recommendation};
use crate::error::Result;
use crate::prefmodel::{fit, ComparisonRecord, Dataset, KernelConfig, LikelihoodConfig, PreferencePosterior};
use crate::seeding;
use crate::signal::NormalizedPoint;

/// Model configuration bundle.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub likelihood: LikelihoodConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.likelihood.validate()?;
        self.acquisition.validate()
    }
}

#[derive(Debug, Clone)]
pub struct Learner {
    config: ModelConfig,
    seed: u64,
    posterior: PreferencePosterior,
}

impl Learner {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, seed, posterior: PreferencePosterior::prior(config.kernel, config.likelihood) })
    }

    /// Rebuilds the learner by refitting on `records`.
    pub fn with_records(config: ModelConfig, seed: u64, records: &[ComparisonRecord]) -> Result<Self> {
        let mut learner = Self::new(config, seed)?;
        if !records.is_empty() {
            let data = Dataset::from_records(records.iter().cloned());
            learner.posterior = fit(&data, &config.kernel, &config.likelihood)?;
        }
        Ok(learner)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn posterior(&self) -> &PreferencePosterior {
        &self.posterior
    }

    pub fn records(&self) -> &[ComparisonRecord] {
        self.posterior.dataset().records()
    }

    /// Query for learning round `round` (1-based). Depends only on the
    /// seed, the round and the data so far.
    pub fn query(&self, round: usize) -> Result<QueryPair> {
        let mut rng = seeding::round_stream(self.seed, round);
        acquisition::select_pair(&self.posterior, &self.config.acquisition, &mut rng)
    }

    /// Adds a record and refits. On failure the learner is left unchanged.
    pub fn observe(&mut self, record: ComparisonRecord) -> Result<()> {
        let mut data = self.posterior.dataset().clone();
        data.push(record);
        self.posterior = fit(&data, &self.config.kernel, &self.config.likelihood)?;
        Ok(())
    }

    pub fn recommendation_pool(&self) -> Vec<NormalizedPoint> {
        let mut rng = seeding::stream(self.seed, seeding::RECOMMENDATION);
        acquisition::recommendation_pool(&self.posterior, self.config.acquisition.recommendation_pool, &mut rng)
    }

    pub fn recommend(&self) -> Result<Recommendation> {
        let mut rng = seeding::stream(self.seed, seeding::RECOMMENDATION);
        acquisition::recommend(&self.posterior, self.config.acquisition.recommendation_pool, &mut rng)
    }
}
