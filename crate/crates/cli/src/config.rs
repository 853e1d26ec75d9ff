//! Experiment configuration.

use std::path::Path;

use permlab_core::instances::GeneratorSpec;
use permlab_core::problems::StepSizeRule;
use permlab_core::schedulers::StrategySpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_repeats() -> usize {
    1
}

fn default_burn_in() -> f64 {
    permlab_core::analysis::fit::DEFAULT_BURN_IN
}

/// A sweep over strategies, epoch counts and seeds on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: GeneratorSpec,
    /// Strategy labels: `igd`, `ss`, `rr`, each optionally prefixed `ff-`.
    pub algos: Vec<String>,
    #[serde(rename = "K_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    pub step_rule: StepSizeRule,
    /// Initialization; the origin when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Leading fraction of the K-grid left out of rate fits.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn strategies(&self) -> Result<Vec<StrategySpec>, CliError> {
        self.algos
            .iter()
            .enumerate()
            .map(|(i, a)| {
                StrategySpec::parse(a).map_err(|e| CliError::Usage(format!("algos[{i}]: {e}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let strategies = self.strategies()?;
        if strategies.is_empty() {
            return Err(CliError::Usage("algos: need at least one strategy".into()));
        }
        if self.k_grid.is_empty() {
            return Err(CliError::Usage(
                "K_grid: need at least one epoch count".into(),
            ));
        }
        if let Some(i) = self.k_grid.iter().position(|&k| k == 0) {
            return Err(CliError::Usage(format!(
                "K_grid[{i}]: epoch counts must be positive"
            )));
        }
        if strategies.iter().any(|s| s.flipflop) {
            if let Some(i) = self.k_grid.iter().position(|k| k % 2 == 1) {
                return Err(CliError::Usage(format!(
                    "K_grid[{i}]: FlipFlop strategies need even epoch counts, got {}",
                    self.k_grid[i]
                )));
            }
        }
        if self.repeats == 0 {
            return Err(CliError::Usage("repeats: must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(CliError::Usage("burn_in: must lie in [0, 1)".into()));
        }
        Ok(())
    }
}
