//! Gaussian-process preference model.
//!
//! Latent utilities at the queried points get a zero-mean GP prior with an
//! RBF kernel. Each comparison contributes a probit likelihood whose noise
//! scale depends on the reported confidence. The posterior mode is found by
//! damped Newton ascent and a Laplace approximation around it gives the
//! covariance used for prediction and query selection.

mod kernel;
mod likelihood;
mod posterior;

pub use kernel::{cross_covariance, factor_gram, gram, kernel, KernelConfig};
pub use likelihood::{effective_noise, ComparisonRecord, Confidence, LikelihoodConfig, Preference, CALIBRATED_NOISE};
pub use posterior::{
    fit, fit_map, fit_map_from, laplace, log_posterior, LogPosterior, MapEstimate, PosteriorSnapshot,
    PreferencePosterior, MAX_NEWTON_ITERATIONS, NEWTON_TOLERANCE,
};

use crate::signal::NormalizedPoint;

/// Comparison records resolved against a list of unique points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    points: Vec<NormalizedPoint>,
    records: Vec<ComparisonRecord>,
    index: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<I: IntoIterator<Item = ComparisonRecord>>(records: I) -> Self {
        let mut data = Self::new();
        for r in records {
            data.push(r);
        }
        data
    }

    /// Index of `point`, inserting it if no exact match exists.
    pub fn insert_point(&mut self, point: NormalizedPoint) -> usize {
        match self.points.iter().position(|p| p.same_as(&point)) {
            Some(i) => i,
            None => {
                self.points.push(point);
                self.points.len() - 1
            }
        }
    }

    pub fn push(&mut self, record: ComparisonRecord) {
        let a = self.insert_point(record.a);
        let b = self.insert_point(record.b);
        self.index.push((a, b));
        self.records.push(record);
    }

    pub fn points(&self) -> &[NormalizedPoint] {
        &self.points
    }

    pub fn records(&self) -> &[ComparisonRecord] {
        &self.records
    }

    /// `(a, b)` point indices for each record.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
