use serde::{Deserialize, Serialize};

use super::EngineError;

pub const DEFAULT_MAX_MANAGER_ACTIONS: u32 = 100;
pub const DEFAULT_MAX_TIMESTEPS: u64 = 100;

/// Stochastic execution parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionModel {
    /// Scale of the log-normal duration multiplier (location 0).
    pub duration_sigma: f64,
    /// Standard deviation of the additive quality noise.
    pub quality_noise: f64,
    /// Duration multiplier applied to simulated-human workers.
    pub human_latency: f64,
    /// Probability that a finished execution fails instead of completing.
    pub failure_rate: f64,
}

impl Default for ExecutionModel {
    fn default() -> Self {
        Self {
            duration_sigma: 0.25,
            quality_noise: 0.05,
            human_latency: 1.5,
            failure_rate: 0.0,
        }
    }
}

impl ExecutionModel {
    /// Zero-variance model, handy for closed-form tests.
    pub fn deterministic() -> Self {
        Self {
            duration_sigma: 0.0,
            quality_noise: 0.0,
            human_latency: 1.0,
            failure_rate: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub seed: u64,
    pub max_manager_actions: u32,
    pub max_timesteps: u64,
    pub hours_per_timestep: f64,
    pub execution: ExecutionModel,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_manager_actions: DEFAULT_MAX_MANAGER_ACTIONS,
            max_timesteps: DEFAULT_MAX_TIMESTEPS,
            hours_per_timestep: 1.0,
            execution: ExecutionModel::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::Config(msg.to_string()));
        if self.max_manager_actions == 0 {
            return bad("max_manager_actions must be at least 1");
        }
        if self.max_timesteps == 0 {
            return bad("max_timesteps must be at least 1");
        }
        if !(self.hours_per_timestep.is_finite() && self.hours_per_timestep > 0.0) {
            return bad("hours_per_timestep must be positive");
        }
        let e = &self.execution;
        if !(e.duration_sigma.is_finite() && e.duration_sigma >= 0.0) {
            return bad("duration_sigma must be non-negative");
        }
        if !(e.quality_noise.is_finite() && e.quality_noise >= 0.0) {
            return bad("quality_noise must be non-negative");
        }
        if !(e.human_latency.is_finite() && e.human_latency > 0.0) {
            return bad("human_latency must be positive");
        }
        if !(0.0..=1.0).contains(&e.failure_rate) {
            return bad("failure_rate must lie in [0, 1]");
        }
        Ok(())
    }
}
