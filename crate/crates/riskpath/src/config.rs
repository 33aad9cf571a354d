//! Run configuration shared by both algorithms and the evaluation tools.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Risk-estimation parameters. Defaults follow the evaluation protocol:
/// alpha 0.1, 10^4 estimation samples, 10^4 coverage samples, delta 0.05.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RiskConfig {
    /// Total risk budget in (0, 1).
    pub alpha: f64,
    /// Number of buckets d; the budget grid is multiples of alpha/d.
    pub buckets: u32,
    /// Estimation sample size n per quantile evaluation.
    pub samples: usize,
    /// Failure probability for the quantile-error bound.
    pub delta: f64,
    /// Master seed; every stream is derived from it.
    pub seed: u64,
    /// Fresh-sample count for coverage evaluation.
    pub coverage_samples: usize,
    /// Cap on baseline path enumeration.
    pub path_cap: usize,
    /// Reuse edge draws per (predecessor, incoming-bucket) across target
    /// buckets. Speed optimization; changes the statistical footprint, so
    /// it is off by default.
    pub memoize_draws: bool,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            buckets: 100,
            samples: 10_000,
            delta: 0.05,
            seed: 0,
            coverage_samples: 10_000,
            path_cap: crate::graph::DEFAULT_PATH_CAP,
            memoize_draws: false,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.buckets == 0 {
            return Err(Error::InvalidConfig("buckets must be >= 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must be in (0,1), got {}",
                self.delta
            )));
        }
        if self.coverage_samples == 0 {
            return Err(Error::InvalidConfig("coverage_samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_buckets(mut self, buckets: u32) -> Self {
        self.buckets = buckets;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}
