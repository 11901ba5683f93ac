//! Run configuration: JSON schema, defaults, and validation.
//!
//! Every field has a default, so `{}` is a complete config. Unknown
//! keys are rejected rather than silently ignored. `parse_config` is
//! the only entry point that touches untrusted input.

use serde::{Deserialize, Serialize};

use crate::agent::Condition;
use crate::env::EnvParams;
use crate::error::{Error, Result};
use crate::population::{GroupAttribute, PopulationParams};

/// Experimental condition selector; `fixed` reads its rate from
/// `agent.fixed_eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Dynamic,
    Fixed,
    Random,
}

/// Learning constants shared by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub fixed_eta: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.9,
            epsilon: 0.05,
            beta: 0.001,
            fixed_eta: 0.001,
        }
    }
}

/// Full description of one experiment: population, environment,
/// learning constants, and the run protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub condition: ConditionKind,
    pub attribute: GroupAttribute,
    pub n_agents: usize,
    pub trials: usize,
    pub episodes: usize,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub tau: usize,
    pub env: EnvParams,
    pub agent: AgentConfig,
    pub population: PopulationParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            condition: ConditionKind::Dynamic,
            attribute: GroupAttribute::Heterogeneous,
            n_agents: 6,
            trials: 100,
            episodes: 300,
            n_seeds: 5,
            base_seed: 0,
            tau: 5,
            env: EnvParams::default(),
            agent: AgentConfig::default(),
            population: PopulationParams::default(),
        }
    }
}

impl ExperimentConfig {
    /// The agent-level condition, with the fixed rate folded in.
    pub fn condition(&self) -> Condition {
        match self.condition {
            ConditionKind::Dynamic => Condition::Dynamic,
            ConditionKind::Fixed => Condition::Fixed(self.agent.fixed_eta),
            ConditionKind::Random => Condition::Random,
        }
    }

    /// Reject out-of-range values, naming the offending key. The
    /// band/threshold cross-checks hold at this config's own `tau`;
    /// sweep variants derived later deliberately skip re-validation.
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 1 {
            return Err(Error::config("n_agents", "must be at least 1"));
        }
        if self.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.episodes < 1 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        if self.n_seeds < 1 {
            return Err(Error::config("n_seeds", "must be at least 1"));
        }
        if self.tau < 1 {
            return Err(Error::config("tau", "must be at least 1"));
        }

        let e = &self.env;
        check_unit("env.delta_g", e.delta_g)?;
        check_unit("env.sigma", e.sigma)?;
        if e.delta_s_g < 1 {
            return Err(Error::config("env.delta_s_g", "must be at least 1"));
        }
        check_positive("env.r_a", e.r_a)?;
        check_positive("env.r_g", e.r_g)?;
        check_unit("env.initial_apple_density", e.initial_apple_density)?;
        check_unit("env.initial_garbage_density", e.initial_garbage_density)?;

        let a = &self.agent;
        if !(a.gamma.is_finite() && (0.0..1.0).contains(&a.gamma)) {
            return Err(Error::config("agent.gamma", "must lie in [0, 1)"));
        }
        check_unit("agent.epsilon", a.epsilon)?;
        check_positive("agent.beta", a.beta)?;
        if !(a.fixed_eta.is_finite() && a.fixed_eta >= 0.0) {
            return Err(Error::config("agent.fixed_eta", "must be non-negative and finite"));
        }

        self.population.validate()?;
        // Satisficing thresholds: a low target must be reachable from
        // cleaning income alone within one window, a high target must
        // exceed what apple income alone delivers in under a window.
        let window_clean = e.r_g * self.tau as f64;
        let window_collect = e.r_a * self.tau as f64;
        if self.population.low_range[1] > window_clean {
            return Err(Error::config(
                "population.low_range",
                format!("upper bound must not exceed r_g * tau = {window_clean}"),
            ));
        }
        if self.population.high_range[0] < window_collect {
            return Err(Error::config(
                "population.high_range",
                format!("lower bound must be at least r_a * tau = {window_collect}"),
            ));
        }
        Ok(())
    }
}

fn check_unit(key: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(key, "must lie in [0, 1]"))
    }
}

fn check_positive(key: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, "must be positive and finite"))
    }
}

/// Parse and validate a JSON config. `{}` yields the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}
