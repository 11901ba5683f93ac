//! Deterministic multi-agent Q-learning simulator for an apple/garbage
//! commons gridworld, with an experiment harness that reproduces the
//! cooperation, division-of-labor, and inequality results as CSV/JSON
//! artifacts.

pub mod agent;
pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod population;
pub mod rng;

pub use agent::{
    learning_rate, AgentParams, AgentState, Condition, PositionEncoder, QTable, RewardWindow,
    StateEncoder, StateIndex,
};
pub use config::{parse_config, AgentConfig, ConditionKind, ExperimentConfig};
pub use env::{
    apple_growth_rate, AgentAction, Cell, CellContent, CellIndex, EnvParams, EnvState,
    GridGeometry, Observation, ObservedCell,
};
pub use error::{Error, Result};
pub use experiment::{
    gini, mean, occupancy_fraction, run_episode, run_experiment, run_experiment_with_threads,
    run_replica, run_sweep, sample_sd, value_range, EpisodeOutcome, GridHalf, MetricsRecord,
    SweepPoint,
};
pub use population::{
    agent_group, initial_placement, sample_target_rewards, GroupAttribute, PopulationParams,
    TargetGroup,
};
