//! Experiment protocol: seeded replicas of the episode loop, plus the
//! summary statistics the result artifacts are built from.
//!
//! One replica runs `episodes` episodes of `trials` steps with a fixed
//! population. Q-tables persist across episodes; the environment,
//! placements, and reward windows reset at each episode boundary. All
//! randomness comes from streams derived off the replica seed, so a
//! replica's outcome is independent of threading or replica order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand_chacha::ChaCha8Rng;

use crate::agent::{AgentParams, AgentState, PositionEncoder, StateEncoder};
use crate::config::ExperimentConfig;
use crate::env::{EnvState, GridGeometry};
use crate::error::{Error, Result};
use crate::population::{initial_placement, sample_target_rewards};
use crate::rng;

/// Returns and movement counts from a single episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub collective_return: f64,
    pub agent_returns: Vec<f64>,
    /// Per agent: flat row-major cell visit counts, one per trial,
    /// taken at the post-step position.
    pub occupancy: Vec<Vec<u64>>,
}

/// Everything measured over one replica (one seed).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// The replica seed every stream was derived from.
    pub seed: u64,
    pub targets: Vec<f64>,
    /// Collective return per episode, in episode order.
    pub episode_returns: Vec<f64>,
    /// Per-agent reward summed over the whole run.
    pub agent_totals: Vec<f64>,
    /// Per-agent visit counts over the whole run, flat row-major.
    pub occupancy: Vec<Vec<u64>>,
    /// Per-agent visit counts over the last `final_window` episodes.
    pub occupancy_final: Vec<Vec<u64>>,
    /// min(50, episodes): the averaging window for final performance.
    pub final_window: usize,
}

impl MetricsRecord {
    /// Mean collective return over the last `final_window` episodes.
    pub fn mean_final_return(&self) -> f64 {
        let tail = &self.episode_returns[self.episode_returns.len() - self.final_window..];
        mean(tail)
    }
}

/// One episode: `trials` rounds of observe, act, step, update. Resets
/// every reward window on entry; Q-tables carry over.
pub fn run_episode(
    env: &mut EnvState,
    agents: &mut [AgentState],
    encoder: &dyn StateEncoder,
    trials: usize,
    policy_rngs: &mut [ChaCha8Rng],
) -> Result<EpisodeOutcome> {
    let n = agents.len();
    if env.n_agents() != n {
        return Err(Error::ActionCountMismatch {
            expected: env.n_agents(),
            got: n,
        });
    }
    if policy_rngs.len() != n {
        return Err(Error::ActionCountMismatch {
            expected: n,
            got: policy_rngs.len(),
        });
    }
    for a in agents.iter_mut() {
        a.start_episode();
    }
    let n_cells = env.geometry().n_cells();
    let mut agent_returns = vec![0.0; n];
    let mut occupancy = vec![vec![0u64; n_cells]; n];
    let mut states = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    for _ in 0..trials {
        states.clear();
        for i in 0..n {
            states.push(encoder.encode(&env.observe(i)?));
        }
        actions.clear();
        for i in 0..n {
            actions.push(agents[i].select_action(states[i], &mut policy_rngs[i]));
        }
        let rewards = env.step(&actions)?;
        for i in 0..n {
            let next = encoder.encode(&env.observe(i)?);
            agents[i].q_update(states[i], actions[i], rewards[i], next)?;
            agent_returns[i] += rewards[i];
            let pos = env.agent_position(i)?;
            occupancy[i][env.geometry().flat(pos)] += 1;
        }
    }
    Ok(EpisodeOutcome {
        collective_return: agent_returns.iter().sum(),
        agent_returns,
        occupancy,
    })
}

/// One full replica: sample the population once, then run every
/// episode with per-episode environment and placement streams.
pub fn run_replica(cfg: &ExperimentConfig, replica_index: usize) -> Result<MetricsRecord> {
    let rseed = rng::replica_seed(cfg.base_seed, replica_index as u64);
    let mut pop_rng = rng::stream_rng(rseed, rng::domain::POPULATION, 0);
    let targets = sample_target_rewards(cfg.n_agents, cfg.attribute, &cfg.population, &mut pop_rng)?;
    let condition = cfg.condition();
    let mut agents = targets
        .iter()
        .map(|&target_reward| {
            AgentState::new(AgentParams {
                condition,
                target_reward,
                tau: cfg.tau,
                gamma: cfg.agent.gamma,
                epsilon: cfg.agent.epsilon,
                beta: cfg.agent.beta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut policy_rngs: Vec<ChaCha8Rng> = (0..cfg.n_agents)
        .map(|i| rng::stream_rng(rseed, rng::domain::POLICY, i as u64))
        .collect();
    let geometry = GridGeometry::standard();
    let n_cells = geometry.n_cells();
    let encoder = PositionEncoder;

    let final_window = cfg.episodes.min(50);
    let first_final = cfg.episodes - final_window;
    let mut episode_returns = Vec::with_capacity(cfg.episodes);
    let mut agent_totals = vec![0.0; cfg.n_agents];
    let mut occupancy = vec![vec![0u64; n_cells]; cfg.n_agents];
    let mut occupancy_final = vec![vec![0u64; n_cells]; cfg.n_agents];

    for episode in 0..cfg.episodes {
        let mut place_rng = rng::stream_rng(rseed, rng::domain::PLACEMENT, episode as u64);
        let placements = initial_placement(
            cfg.n_agents,
            cfg.population.random_placement,
            &geometry,
            &mut place_rng,
        );
        let env_seed = rng::stream_seed(rseed, rng::domain::ENV, episode as u64);
        let mut env = EnvState::new(cfg.env, &placements, env_seed)?;
        let out = run_episode(&mut env, &mut agents, &encoder, cfg.trials, &mut policy_rngs)?;
        episode_returns.push(out.collective_return);
        for i in 0..cfg.n_agents {
            agent_totals[i] += out.agent_returns[i];
            for (acc, v) in occupancy[i].iter_mut().zip(&out.occupancy[i]) {
                *acc += v;
            }
            if episode >= first_final {
                for (acc, v) in occupancy_final[i].iter_mut().zip(&out.occupancy[i]) {
                    *acc += v;
                }
            }
        }
    }
    Ok(MetricsRecord {
        seed: rseed,
        targets,
        episode_returns,
        agent_totals,
        occupancy,
        occupancy_final,
        final_window,
    })
}

/// Run every replica of `cfg`, fanning out across threads. Results are
/// ordered and valued independently of the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    let cap = match std::env::var("DILEMMA_THREADS") {
        Ok(s) => thread_cap_from(Some(&s))?,
        Err(std::env::VarError::NotPresent) => thread_cap_from(None)?,
        Err(std::env::VarError::NotUnicode(_)) => {
            return Err(Error::config("DILEMMA_THREADS", "must be valid unicode"))
        }
    };
    run_replicas(cfg, cap)
}

/// As `run_experiment`, with an explicit thread cap (0 = auto) instead
/// of the `DILEMMA_THREADS` environment variable.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    run_replicas(cfg, threads)
}

/// Parse a thread cap; `None` or `Some("0")` selects auto.
fn thread_cap_from(raw: Option<&str>) -> Result<usize> {
    match raw {
        None => Ok(0),
        Some(s) => s.trim().parse::<usize>().map_err(|_| {
            Error::config(
                "DILEMMA_THREADS",
                format!("cannot parse `{s}` as a thread count"),
            )
        }),
    }
}

fn run_replicas(cfg: &ExperimentConfig, cap: usize) -> Result<Vec<MetricsRecord>> {
    let auto = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = if cap == 0 { auto } else { cap }.min(cfg.n_seeds).max(1);
    if threads == 1 {
        return (0..cfg.n_seeds).map(|k| run_replica(cfg, k)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<MetricsRecord>>>> =
        (0..cfg.n_seeds).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= cfg.n_seeds {
                    break;
                }
                let record = run_replica(cfg, k);
                *slots[k].lock().expect("slot lock") = Some(record);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("slot lock").expect("replica completed"))
        .collect()
}

/// One point of the window-length sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub tau: usize,
    pub mean_final_return: f64,
    pub sd: f64,
}

/// Re-run the experiment at each window length. The base config is
/// validated once; the tau variants intentionally skip the
/// band/threshold cross-check, which only holds at the base tau.
pub fn run_sweep(base: &ExperimentConfig, taus: &[usize]) -> Result<Vec<SweepPoint>> {
    base.validate()?;
    if taus.is_empty() {
        return Err(Error::config("taus", "must list at least one window length"));
    }
    let mut sorted = taus.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted[0] < 1 {
        return Err(Error::config("taus", "window lengths must be at least 1"));
    }
    let cap = match std::env::var("DILEMMA_THREADS") {
        Ok(s) => thread_cap_from(Some(&s))?,
        Err(_) => 0,
    };
    let mut points = Vec::with_capacity(sorted.len());
    for tau in sorted {
        let mut cfg = base.clone();
        cfg.tau = tau;
        let records = run_replicas(&cfg, cap)?;
        let finals: Vec<f64> = records.iter().map(MetricsRecord::mean_final_return).collect();
        points.push(SweepPoint {
            tau,
            mean_final_return: mean(&finals),
            sd: sample_sd(&finals),
        });
    }
    Ok(points)
}

/// Arithmetic mean; NaN on an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero below two points.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Gini coefficient of a non-negative distribution; zero when
/// everything is zero or equal.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Metrics("gini of an empty distribution".into()));
    }
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Metrics(format!(
                "gini requires finite non-negative values, got {v}"
            )));
        }
    }
    let n = values.len() as f64;
    let mu = mean(values);
    if mu == 0.0 {
        return Ok(0.0);
    }
    let mut abs_diff_sum = 0.0;
    for &a in values {
        for &b in values {
            abs_diff_sum += (a - b).abs();
        }
    }
    Ok(abs_diff_sum / (2.0 * n * n * mu))
}

/// Max minus min.
pub fn value_range(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Metrics("range of an empty distribution".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Metrics("range requires finite values".into()));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Which half of the grid an occupancy fraction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridHalf {
    Garbage,
    Apple,
}

/// Fraction of visits that fall in the given half. Errors when the
/// counts are empty overall: a fraction of nothing is meaningless.
pub fn occupancy_fraction(counts: &[u64], geometry: &GridGeometry, half: GridHalf) -> Result<f64> {
    if counts.len() != geometry.n_cells() {
        return Err(Error::Metrics(format!(
            "occupancy grid has {} cells, geometry has {}",
            counts.len(),
            geometry.n_cells()
        )));
    }
    let boundary = geometry.garbage_rows() * geometry.cols();
    let in_garbage: u64 = counts[..boundary].iter().sum();
    let total: u64 = in_garbage + counts[boundary..].iter().sum::<u64>();
    if total == 0 {
        return Err(Error::Metrics("occupancy grid holds no visits".into()));
    }
    let frac = in_garbage as f64 / total as f64;
    Ok(match half {
        GridHalf::Garbage => frac,
        GridHalf::Apple => 1.0 - frac,
    })
}
