//! Population setup: target-reward sampling and initial placement.
//!
//! A population is split into a low-target group (satisfied by cleaning
//! income alone) and a high-target group (needs apple income). The
//! heterogeneous condition mixes both; the homogeneous conditions use a
//! single group for every agent.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Cell, GridGeometry};
use crate::error::{Error, Result};

/// Population composition for one experimental condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAttribute {
    Heterogeneous,
    HomogeneousHigh,
    HomogeneousLow,
}

/// Which target band an agent draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetGroup {
    Low,
    High,
}

/// Group of agent `i` in a population of `n`: under the heterogeneous
/// attribute the first half is low-target, the rest high-target.
pub fn agent_group(i: usize, n: usize, attribute: GroupAttribute) -> TargetGroup {
    match attribute {
        GroupAttribute::Heterogeneous => {
            if i < n / 2 {
                TargetGroup::Low
            } else {
                TargetGroup::High
            }
        }
        GroupAttribute::HomogeneousHigh => TargetGroup::High,
        GroupAttribute::HomogeneousLow => TargetGroup::Low,
    }
}

/// Target-reward bands and placement mode. `low_range` is sampled as
/// the half-open interval (low, high] and `high_range` as [low, high),
/// so a low target always exceeds the band floor and a high target
/// never reaches the band ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationParams {
    pub low_range: [f64; 2],
    pub high_range: [f64; 2],
    pub random_placement: bool,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            low_range: [10.0, 25.0],
            high_range: [50.0, 100.0],
            random_placement: false,
        }
    }
}

impl PopulationParams {
    pub fn validate(&self) -> Result<()> {
        check_range("population.low_range", self.low_range)?;
        check_range("population.high_range", self.high_range)?;
        Ok(())
    }
}

fn check_range(key: &'static str, range: [f64; 2]) -> Result<()> {
    let [lo, hi] = range;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::config(key, "bounds must be finite"));
    }
    if lo <= 0.0 {
        return Err(Error::config(key, "lower bound must be positive"));
    }
    if lo >= hi {
        return Err(Error::config(key, "lower bound must be below upper bound"));
    }
    Ok(())
}

/// Draw per-agent target rewards. Low targets land in (lo, hi], high
/// targets in [lo, hi); both draws consume exactly one uniform each.
pub fn sample_target_rewards(
    n_agents: usize,
    attribute: GroupAttribute,
    params: &PopulationParams,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    params.validate()?;
    let mut targets = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let t = match agent_group(i, n_agents, attribute) {
            TargetGroup::Low => {
                let [lo, hi] = params.low_range;
                hi - rng.gen_range(0.0..hi - lo)
            }
            TargetGroup::High => {
                let [lo, hi] = params.high_range;
                rng.gen_range(lo..hi)
            }
        };
        targets.push(t);
    }
    Ok(targets)
}

/// Starting cells. By default the first half of the population starts
/// in the garbage half and the rest in the apple half, independent of
/// the group attribute; with `random_placement` every agent is uniform
/// over the whole grid. Each cell draw is row then column.
pub fn initial_placement(
    n_agents: usize,
    random_placement: bool,
    geometry: &GridGeometry,
    rng: &mut ChaCha8Rng,
) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let (row_lo, row_hi) = if random_placement {
            (0, geometry.rows())
        } else if i < n_agents / 2 {
            (0, geometry.garbage_rows())
        } else {
            (geometry.garbage_rows(), geometry.rows())
        };
        let row = rng.gen_range(row_lo..row_hi);
        let col = rng.gen_range(0..geometry.cols());
        cells.push(Cell::new(row, col));
    }
    cells
}
