//! Tabular Q-learning agents with a satisficing dynamic learning rate.
//!
//! Each agent keeps a sliding window of its last `tau` rewards. The
//! learning rate is proportional to how far that stage reward falls
//! short of the agent's target: eta = max(target - stage, 0) / target * beta.
//! An agent meeting its target stops updating; one falling short
//! explores harder through larger updates.

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{AgentAction, Observation};
use crate::error::{Error, Result};

/// Tabular state identifier. The default encoder uses the agent's
/// signed cell index, so at most 240 states occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateIndex(pub i32);

/// Maps an observation to a tabular state.
pub trait StateEncoder {
    fn encode(&self, obs: &Observation) -> StateIndex;
}

/// Position-only encoding: the signed index of the agent's cell. The
/// content window is ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct PositionEncoder;

impl StateEncoder for PositionEncoder {
    fn encode(&self, obs: &Observation) -> StateIndex {
        StateIndex(obs.center_index.0)
    }
}

/// Experimental condition: how the learning rate (and for `Random`, the
/// policy itself) behaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    /// Satisficing rate from the target-reward shortfall.
    Dynamic,
    /// Constant learning rate.
    Fixed(f64),
    /// Uniform random action selection, no learning.
    Random,
}

/// Learning rate for one update. `stage_reward` is the reward-window
/// sum at the time of the update, before the incoming reward is pushed.
pub fn learning_rate(condition: Condition, target_reward: f64, stage_reward: f64, beta: f64) -> f64 {
    match condition {
        Condition::Dynamic => (target_reward - stage_reward).max(0.0) / target_reward * beta,
        Condition::Fixed(eta) => eta,
        Condition::Random => 0.0,
    }
}

/// Sliding window over the last `tau` rewards; its sum is the stage
/// cumulative reward the dynamic rate compares against the target.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardWindow {
    tau: usize,
    rewards: VecDeque<f64>,
}

impl RewardWindow {
    pub fn new(tau: usize) -> Self {
        assert!(tau >= 1, "window length must be at least 1");
        RewardWindow {
            tau,
            rewards: VecDeque::with_capacity(tau),
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Append a reward, evicting the oldest once `tau` are held.
    pub fn push(&mut self, reward: f64) {
        if self.rewards.len() == self.tau {
            self.rewards.pop_front();
        }
        self.rewards.push_back(reward);
    }

    /// Stage cumulative reward: the sum of the stored rewards. Zero
    /// when empty (start of an episode).
    pub fn sum(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn clear(&mut self) {
        self.rewards.clear();
    }
}

/// Action-value table keyed by state; unvisited states read as all
/// zeros and occupy no storage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    values: HashMap<StateIndex, [f64; AgentAction::COUNT]>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, s: StateIndex, a: AgentAction) -> f64 {
        self.values.get(&s).map_or(0.0, |row| row[a.index()])
    }

    /// Q-values for every action at `s`, zeros if never visited.
    pub fn row(&self, s: StateIndex) -> [f64; AgentAction::COUNT] {
        self.values.get(&s).copied().unwrap_or_default()
    }

    pub fn max(&self, s: StateIndex) -> f64 {
        self.row(s).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn set(&mut self, s: StateIndex, a: AgentAction, value: f64) {
        self.values.entry(s).or_default()[a.index()] = value;
    }

    /// Number of states with an allocated row.
    pub fn n_states(&self) -> usize {
        self.values.len()
    }
}

/// Per-agent constants fixed for a whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    pub condition: Condition,
    pub target_reward: f64,
    pub tau: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: f64,
}

/// One learner: its parameters, Q-table, and reward window. The
/// Q-table persists across episodes; the window is reset per episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub params: AgentParams,
    pub q: QTable,
    pub window: RewardWindow,
}

impl AgentState {
    pub fn new(params: AgentParams) -> Result<Self> {
        if params.tau < 1 {
            return Err(Error::config("tau", "must be at least 1"));
        }
        if !(params.gamma.is_finite() && (0.0..1.0).contains(&params.gamma)) {
            return Err(Error::config("gamma", "must lie in [0, 1)"));
        }
        if !(params.epsilon.is_finite() && (0.0..=1.0).contains(&params.epsilon)) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        match params.condition {
            Condition::Dynamic => {
                if !(params.target_reward.is_finite() && params.target_reward > 0.0) {
                    return Err(Error::config("target_reward", "must be positive and finite"));
                }
                if !(params.beta.is_finite() && params.beta > 0.0) {
                    return Err(Error::config("beta", "must be positive and finite"));
                }
            }
            Condition::Fixed(eta) => {
                if !(eta.is_finite() && eta >= 0.0) {
                    return Err(Error::config("fixed_eta", "must be non-negative and finite"));
                }
            }
            Condition::Random => {}
        }
        Ok(AgentState {
            params,
            q: QTable::new(),
            window: RewardWindow::new(params.tau),
        })
    }

    /// Clear the reward window at an episode boundary; the Q-table is
    /// deliberately left intact.
    pub fn start_episode(&mut self) {
        self.window.clear();
    }

    /// Epsilon-greedy over the Q-row at `s`, ties broken uniformly.
    /// Under the random condition every action is equally likely and
    /// the table is ignored. Always consumes the same draw pattern:
    /// one Bernoulli, then one index draw.
    pub fn select_action(&self, s: StateIndex, rng: &mut ChaCha8Rng) -> AgentAction {
        let explore = match self.params.condition {
            Condition::Random => {
                rng.gen_bool(1.0);
                true
            }
            _ => rng.gen_bool(self.params.epsilon),
        };
        if explore {
            return *AgentAction::ALL.choose(rng).expect("non-empty action set");
        }
        let row = self.q.row(s);
        let best = row.into_iter().fold(f64::NEG_INFINITY, f64::max);
        let candidates: Vec<AgentAction> = AgentAction::ALL
            .into_iter()
            .filter(|a| row[a.index()] == best)
            .collect();
        *candidates.choose(rng).expect("at least one maximal action")
    }

    /// One Q-learning update. The learning rate is computed from the
    /// window as it stood before this reward, then the reward is
    /// pushed. Returns the rate that was applied.
    pub fn q_update(
        &mut self,
        s: StateIndex,
        a: AgentAction,
        reward: f64,
        s_next: StateIndex,
    ) -> Result<f64> {
        if !reward.is_finite() {
            return Err(Error::NonFinite {
                context: "reward passed to q_update".into(),
            });
        }
        let eta = learning_rate(
            self.params.condition,
            self.params.target_reward,
            self.window.sum(),
            self.params.beta,
        );
        if eta > 0.0 {
            let old = self.q.get(s, a);
            let updated = old + eta * (reward + self.params.gamma * self.q.max(s_next) - old);
            debug_assert!(updated.is_finite());
            self.q.set(s, a, updated);
        }
        self.window.push(reward);
        Ok(eta)
    }
}
