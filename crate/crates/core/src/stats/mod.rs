//! Estimators and the Monte Carlo harness.

pub mod comparison;
pub mod linearization;
pub mod orlicz;
pub mod report;
pub mod summary;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use comparison::{comparison_suite, ComparisonCounts};
pub use linearization::{linearization_gap, LinearizationGap};
pub use orlicz::{orlicz_norm, orlicz_norm_bootstrap, OrliczEstimate};
pub use report::{modulus_stats, scaling_report, ModulusTable, ScalingReport};
pub use summary::{ols, Estimate, LinearFit, RunningStats};
pub use sweep::{mc_sweep, replicate_seed, SweepPlan, SweepRecord, SweepResult};

/// A labelled, non-empty sample of finite reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("empty sample");
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return domain(format!("non-finite sample value {v}"));
        }
        Ok(Self { label: label.into(), values, seed: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}
