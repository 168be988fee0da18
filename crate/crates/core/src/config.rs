//! Experiment configuration shared by the command-line runner and the tests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimizer::DEFAULT_PENALTIES;
use crate::potential::resolution_exponent;
use crate::stats::sweep::{hex_digest, SweepPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub system_sizes: Vec<usize>,
    pub replicates: usize,
    /// Height resolution `δ_min`, a power of two.
    pub delta_min: f64,
    /// DP grid spacing `δ`; defaults to `δ_min`.
    pub delta: Option<f64>,
    /// Fixed initial band half-width; omitted means the default rule.
    pub band_half_width: Option<f64>,
    pub adaptive_band: bool,
    pub penalties: Vec<f64>,
    pub exponents: Vec<f64>,
    pub linearization_targets: Vec<f64>,
    pub frontier: bool,
    pub ding_wirth: bool,
    pub two_scale: bool,
    /// `(L, l)` pairs for the two-scale competitor.
    pub two_scale_pairs: Vec<(usize, usize)>,
    pub comparison: bool,
    pub comparison_size: usize,
    pub comparison_trials: usize,
    pub modulus: bool,
    pub counting: bool,
    /// Largest dimension of the lattice-ball table.
    pub count_max_dim: usize,
    /// Largest `D` of the lattice-ball table; `D` runs in steps of ¼.
    pub count_max_d: f64,
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            system_sizes: vec![32, 64, 128],
            replicates: 10,
            delta_min: 1.0 / 64.0,
            delta: Some(0.25),
            band_half_width: None,
            adaptive_band: true,
            penalties: DEFAULT_PENALTIES.to_vec(),
            exponents: crate::energy::DEFAULT_EXPONENTS.to_vec(),
            linearization_targets: vec![0.5, 0.1, 0.02],
            frontier: false,
            ding_wirth: true,
            two_scale: false,
            two_scale_pairs: Vec::new(),
            comparison: false,
            comparison_size: 64,
            comparison_trials: 100,
            modulus: true,
            counting: true,
            count_max_dim: 6,
            count_max_d: 16.0,
            output_dir: PathBuf::from("out"),
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.system_sizes.is_empty() {
            bad.push("system_sizes: must not be empty".to_string());
        }
        for &l in &self.system_sizes {
            if l < 4 || !l.is_power_of_two() {
                bad.push(format!("system_sizes: {l} is not a power of two >= 4"));
            }
        }
        if self.replicates == 0 {
            bad.push("replicates: must be >= 1".into());
        }
        if resolution_exponent(self.delta_min).is_err() {
            bad.push(format!("delta_min: {} is not a power of two in [2^-40, 1]", self.delta_min));
        }
        if let Some(d) = self.delta {
            let units = d / self.delta_min;
            if !(d > 0.0) || (units - units.round()).abs() > 1e-9 || units.round() < 1.0 {
                bad.push(format!("delta: {d} is not a positive multiple of delta_min = {}", self.delta_min));
            }
        }
        if let Some(b) = self.band_half_width {
            if !(b > 0.0) {
                bad.push(format!("band_half_width: {b} must be positive"));
            }
        }
        if self.penalties.is_empty() || self.penalties.windows(2).any(|w| w[0] >= w[1]) || self.penalties.iter().any(|m| !(*m > 0.0)) {
            bad.push("penalties: must be positive and strictly increasing".into());
        }
        if self.exponents.iter().any(|p| !(*p >= 1.0)) {
            bad.push("exponents: every p must be >= 1".into());
        }
        if !self.exponents.contains(&2.0) {
            bad.push("exponents: must include 2".into());
        }
        if self.linearization_targets.iter().any(|t| !(*t > 0.0)) {
            bad.push("linearization_targets: must be positive".into());
        }
        for &(l, b) in &self.two_scale_pairs {
            if !l.is_power_of_two() || !b.is_power_of_two() || b <= 1 || b >= l {
                bad.push(format!("two_scale_pairs: ({l}, {b}) needs powers of two with 1 < l < L"));
            }
        }
        if self.two_scale && self.two_scale_pairs.is_empty() {
            bad.push("two_scale_pairs: required when two_scale is enabled".into());
        }
        if self.comparison && (self.comparison_trials == 0 || self.comparison_size < 4 || !self.comparison_size.is_power_of_two()) {
            bad.push("comparison_size/comparison_trials: need a power-of-two size >= 4 and at least one trial".into());
        }
        if self.counting && !(1..=6).contains(&self.count_max_dim) {
            bad.push(format!("count_max_dim: {} outside 1..=6", self.count_max_dim));
        }
        if self.counting && !(0.0..=16.0).contains(&self.count_max_d) {
            bad.push(format!("count_max_d: {} outside [0, 16]", self.count_max_d));
        }
        if self.jobs == Some(0) {
            bad.push("jobs: must be >= 1".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            bad.push("output_dir: must not be empty".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// SHA-256 of the canonical JSON form, leaving out the output directory
    /// and worker count, which never change results.
    pub fn hash(&self) -> String {
        let key = Self { output_dir: PathBuf::new(), jobs: None, ..self.clone() };
        hex_digest(serde_json::to_string(&key).expect("config serializes").as_bytes())
    }

    pub fn resolution_exp(&self) -> Result<u32> {
        resolution_exponent(self.delta_min)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        Ok(SweepPlan {
            master_seed: self.master_seed,
            system_sizes: self.system_sizes.clone(),
            replicates: self.replicates,
            resolution_exp: self.resolution_exp()?,
            grid_spacing: self.delta,
            band_half_width: self.band_half_width,
            adaptive_band: self.adaptive_band,
            exponents: self.exponents.clone(),
            penalties: self.penalties.clone(),
            ground_state: true,
            frontier: self.frontier,
            ding_wirth: self.ding_wirth,
            linearization_targets: self.linearization_targets.clone(),
            jobs: self.jobs,
        })
    }
}
