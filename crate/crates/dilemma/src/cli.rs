//! Artifact-producing commands behind the binary: single runs,
//! condition/attribute comparisons, and the window-length sweep.
//!
//! Every artifact is a pure function of the config, so re-running a
//! command into a fresh directory reproduces each file byte for byte.
//! Nothing here writes timestamps or machine-specific data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ConditionKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::experiment::{
    gini, mean, occupancy_fraction, run_experiment, run_sweep, sample_sd, value_range, GridHalf,
    MetricsRecord, SweepPoint,
};
use crate::env::GridGeometry;
use crate::population::GroupAttribute;
use crate::rng::SEED_SCHEME;

/// Run manifest: enough to reproduce the artifacts exactly. Contains
/// no timestamps so identical runs write identical bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed_scheme: &'static str,
    pub config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taus: Option<&'a [usize]>,
    pub artifacts: Vec<String>,
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn f(v: f64) -> String {
    format!("{v:.6}")
}

fn manifest_json(manifest: &RunManifest) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}

fn new_manifest<'a>(command: &'static str, cfg: &'a ExperimentConfig) -> RunManifest<'a> {
    RunManifest {
        tool: "dilemma",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed_scheme: SEED_SCHEME,
        config: cfg,
        taus: None,
        artifacts: Vec::new(),
    }
}

/// `run`: one condition, all seeds. Writes returns.csv, agents.csv,
/// one occupancy grid per agent, summary.json, and manifest.json.
/// Returns the paths written.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let records = run_experiment(cfg)?;
    ensure_dir(out_dir)?;
    let geometry = GridGeometry::standard();

    let mut paths = Vec::new();
    paths.push(write_file(out_dir, "returns.csv", &returns_csv(&records))?);
    paths.push(write_file(out_dir, "agents.csv", &agents_csv(&records, &geometry)?)?);
    for agent in 0..cfg.n_agents {
        let name = format!("occupancy_{}.csv", agent + 1);
        paths.push(write_file(out_dir, &name, &occupancy_csv(&records, &geometry, agent))?);
    }
    paths.push(write_file(out_dir, "summary.json", &summary_json(cfg, &records)?)?);

    let mut manifest = new_manifest("run", cfg);
    manifest.artifacts = artifact_names(out_dir, &paths);
    manifest.artifacts.push("manifest.json".into());
    paths.push(write_file(out_dir, "manifest.json", &manifest_json(&manifest))?);
    Ok(paths)
}

fn artifact_names(dir: &Path, paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .map(|p| {
            p.strip_prefix(dir)
                .unwrap_or(p)
                .to_string_lossy()
                .into_owned()
        })
        .collect()
}

/// episode,seed,collective_return; seeds outer, episodes inner,
/// episodes numbered from 1.
fn returns_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from("episode,seed,collective_return\n");
    for rec in records {
        for (e, ret) in rec.episode_returns.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", e + 1, rec.seed, f(*ret));
        }
    }
    out
}

/// agent,seed,total_reward,target_reward,garbage_fraction; agents
/// numbered from 1; the fraction covers the whole run.
fn agents_csv(records: &[MetricsRecord], geometry: &GridGeometry) -> Result<String> {
    let mut out = String::from("agent,seed,total_reward,target_reward,garbage_fraction\n");
    for rec in records {
        for (i, (&total, &target)) in rec.agent_totals.iter().zip(&rec.targets).enumerate() {
            let frac = occupancy_fraction(&rec.occupancy[i], geometry, GridHalf::Garbage)?;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                i + 1,
                rec.seed,
                f(total),
                f(target),
                f(frac)
            );
        }
    }
    Ok(out)
}

/// 12 rows of 20 comma-separated visit counts, no header, summed
/// across seeds.
fn occupancy_csv(records: &[MetricsRecord], geometry: &GridGeometry, agent: usize) -> String {
    let mut summed = vec![0u64; geometry.n_cells()];
    for rec in records {
        for (acc, v) in summed.iter_mut().zip(&rec.occupancy[agent]) {
            *acc += v;
        }
    }
    let mut out = String::new();
    for row in 0..geometry.rows() {
        let cells: Vec<String> = (0..geometry.cols())
            .map(|col| summed[row * geometry.cols() + col].to_string())
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    mean_final_return: f64,
    targets: Vec<f64>,
    agent_totals: Vec<f64>,
    gini: f64,
    range: f64,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    final_window: usize,
    per_seed: Vec<SeedSummary>,
    mean_final_return: f64,
    sd_final_return: f64,
}

fn summary_json(cfg: &ExperimentConfig, records: &[MetricsRecord]) -> Result<String> {
    let per_seed = records
        .iter()
        .map(|rec| {
            Ok(SeedSummary {
                seed: rec.seed,
                mean_final_return: rec.mean_final_return(),
                targets: rec.targets.clone(),
                agent_totals: rec.agent_totals.clone(),
                gini: gini(&rec.agent_totals)?,
                range: value_range(&rec.agent_totals)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = per_seed.iter().map(|s| s.mean_final_return).collect();
    let summary = Summary {
        config: cfg,
        final_window: records.first().map_or(0, |r| r.final_window),
        per_seed,
        mean_final_return: mean(&finals),
        sd_final_return: sample_sd(&finals),
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    Ok(text)
}

/// The five comparison cells: three learning conditions at the base
/// attribute, plus the two homogeneous populations under the dynamic
/// condition. The shared cell is run once.
struct ComparisonBundle {
    conditions: Vec<(ConditionKind, Vec<MetricsRecord>)>,
    attributes: Vec<(GroupAttribute, Vec<MetricsRecord>)>,
}

fn run_comparison(cfg: &ExperimentConfig) -> Result<ComparisonBundle> {
    let mut cache: Vec<((ConditionKind, GroupAttribute), Vec<MetricsRecord>)> = Vec::new();
    let mut run_cell = |condition: ConditionKind,
                        attribute: GroupAttribute|
     -> Result<Vec<MetricsRecord>> {
        if let Some((_, recs)) = cache.iter().find(|(k, _)| *k == (condition, attribute)) {
            return Ok(recs.clone());
        }
        let cell = ExperimentConfig {
            condition,
            attribute,
            ..cfg.clone()
        };
        let recs = run_experiment(&cell)?;
        cache.push(((condition, attribute), recs.clone()));
        Ok(recs)
    };
    let conditions = [ConditionKind::Dynamic, ConditionKind::Fixed, ConditionKind::Random]
        .into_iter()
        .map(|c| Ok((c, run_cell(c, cfg.attribute)?)))
        .collect::<Result<Vec<_>>>()?;
    let attributes = [
        GroupAttribute::Heterogeneous,
        GroupAttribute::HomogeneousHigh,
        GroupAttribute::HomogeneousLow,
    ]
    .into_iter()
    .map(|a| Ok((a, run_cell(ConditionKind::Dynamic, a)?)))
    .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonBundle { conditions, attributes })
}

fn condition_label(c: ConditionKind) -> &'static str {
    match c {
        ConditionKind::Dynamic => "dynamic",
        ConditionKind::Fixed => "fixed",
        ConditionKind::Random => "random",
    }
}

fn attribute_label(a: GroupAttribute) -> &'static str {
    match a {
        GroupAttribute::Heterogeneous => "heterogeneous",
        GroupAttribute::HomogeneousHigh => "homogeneous_high",
        GroupAttribute::HomogeneousLow => "homogeneous_low",
    }
}

/// mode,label,episode,mean_return,sd; across-seed mean and sample sd
/// of the collective return at each episode.
fn compare_csv(bundle: &ComparisonBundle) -> String {
    let mut out = String::from("mode,label,episode,mean_return,sd\n");
    let mut emit = |mode: &str, label: &str, records: &[MetricsRecord]| {
        let episodes = records.first().map_or(0, |r| r.episode_returns.len());
        for e in 0..episodes {
            let at_e: Vec<f64> = records.iter().map(|r| r.episode_returns[e]).collect();
            let _ = writeln!(
                out,
                "{mode},{label},{},{},{}",
                e + 1,
                f(mean(&at_e)),
                f(sample_sd(&at_e))
            );
        }
    };
    for (c, recs) in &bundle.conditions {
        emit("condition", condition_label(*c), recs);
    }
    for (a, recs) in &bundle.attributes {
        emit("attribute", attribute_label(*a), recs);
    }
    out
}

fn final_mean(records: &[MetricsRecord]) -> f64 {
    let finals: Vec<f64> = records.iter().map(MetricsRecord::mean_final_return).collect();
    mean(&finals)
}

#[derive(Debug, Serialize)]
struct VerdictMeans {
    dynamic: f64,
    fixed: f64,
    random: f64,
    heterogeneous: f64,
    homogeneous_high: f64,
    homogeneous_low: f64,
}

/// Machine-readable orderings the comparison is expected to reproduce.
#[derive(Debug, Serialize)]
pub struct Verdict {
    dynamic_gt_fixed: bool,
    fixed_gt_random: bool,
    dynamic_ge_1p5x_random: bool,
    hetero_gt_homogeneous_high: bool,
    homogeneous_low_le_1p1x_random: bool,
    /// True when the run had fewer episodes than the averaging window,
    /// making the final means unreliable.
    insufficient_window: bool,
    final_window: usize,
    means: VerdictMeans,
}

fn verdict(cfg: &ExperimentConfig, bundle: &ComparisonBundle) -> Verdict {
    let by_condition = |k: ConditionKind| {
        bundle
            .conditions
            .iter()
            .find(|(c, _)| *c == k)
            .map(|(_, r)| final_mean(r))
            .expect("all conditions present")
    };
    let by_attribute = |k: GroupAttribute| {
        bundle
            .attributes
            .iter()
            .find(|(a, _)| *a == k)
            .map(|(_, r)| final_mean(r))
            .expect("all attributes present")
    };
    let means = VerdictMeans {
        dynamic: by_condition(ConditionKind::Dynamic),
        fixed: by_condition(ConditionKind::Fixed),
        random: by_condition(ConditionKind::Random),
        heterogeneous: by_attribute(GroupAttribute::Heterogeneous),
        homogeneous_high: by_attribute(GroupAttribute::HomogeneousHigh),
        homogeneous_low: by_attribute(GroupAttribute::HomogeneousLow),
    };
    Verdict {
        dynamic_gt_fixed: means.dynamic > means.fixed,
        fixed_gt_random: means.fixed > means.random,
        dynamic_ge_1p5x_random: means.dynamic >= 1.5 * means.random,
        hetero_gt_homogeneous_high: means.heterogeneous > means.homogeneous_high,
        homogeneous_low_le_1p1x_random: means.homogeneous_low <= 1.1 * means.random,
        insufficient_window: cfg.episodes < 50,
        final_window: cfg.episodes.min(50),
        means,
    }
}

/// `compare`: run both comparison modes off one base config and write
/// compare.csv, verdict.json, and manifest.json.
pub fn cmd_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let bundle = run_comparison(cfg)?;
    ensure_dir(out_dir)?;
    let mut paths = Vec::new();
    paths.push(write_file(out_dir, "compare.csv", &compare_csv(&bundle))?);
    let mut verdict_text =
        serde_json::to_string_pretty(&verdict(cfg, &bundle)).expect("verdict serializes");
    verdict_text.push('\n');
    paths.push(write_file(out_dir, "verdict.json", &verdict_text)?);

    let mut manifest = new_manifest("compare", cfg);
    manifest.artifacts = artifact_names(out_dir, &paths);
    manifest.artifacts.push("manifest.json".into());
    paths.push(write_file(out_dir, "manifest.json", &manifest_json(&manifest))?);
    Ok(paths)
}

/// tau,mean_final_return,sd; ascending in tau.
fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("tau,mean_final_return,sd\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.tau, f(p.mean_final_return), f(p.sd));
    }
    out
}

/// `sweep`: the experiment at each window length, writing sweep.csv
/// and manifest.json.
pub fn cmd_sweep(cfg: &ExperimentConfig, taus: &[usize], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let points = run_sweep(cfg, taus)?;
    ensure_dir(out_dir)?;
    let mut paths = Vec::new();
    paths.push(write_file(out_dir, "sweep.csv", &sweep_csv(&points))?);

    let mut manifest = new_manifest("sweep", cfg);
    manifest.taus = Some(taus);
    manifest.artifacts = artifact_names(out_dir, &paths);
    manifest.artifacts.push("manifest.json".into());
    paths.push(write_file(out_dir, "manifest.json", &manifest_json(&manifest))?);
    Ok(paths)
}

/// Read and parse a JSON config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match crate::config::parse_config(&text) {
        Err(Error::Parse(e)) => Err(Error::Json {
            path: path.display().to_string(),
            source: e,
        }),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            episodes: 3,
            trials: 5,
            n_seeds: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn run_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let paths = cmd_run(&tiny(), dir.path()).unwrap();
        let names: Vec<_> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        for expected in [
            "returns.csv",
            "agents.csv",
            "occupancy_1.csv",
            "occupancy_6.csv",
            "summary.json",
            "manifest.json",
        ] {
            assert!(names.iter().any(|n| n == expected), "missing {expected}");
        }
        let returns = std::fs::read_to_string(dir.path().join("returns.csv")).unwrap();
        // Header plus episodes * seeds rows.
        assert_eq!(returns.lines().count(), 1 + 3 * 2);
        assert!(returns.starts_with("episode,seed,collective_return\n"));
        let agents = std::fs::read_to_string(dir.path().join("agents.csv")).unwrap();
        assert_eq!(agents.lines().count(), 1 + 6 * 2);
        let occ = std::fs::read_to_string(dir.path().join("occupancy_3.csv")).unwrap();
        let rows: Vec<&str> = occ.lines().collect();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.split(',').count() == 20));
        // Visit counts across the whole file: seeds * episodes * trials.
        let total: u64 = occ.split([',', '\n']).filter(|s| !s.is_empty()).map(|s| s.parse::<u64>().unwrap()).sum();
        assert_eq!(total, 2 * 3 * 5);
    }

    #[test]
    fn manifest_lists_artifacts_without_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        cmd_run(&tiny(), dir.path()).unwrap();
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(v["tool"], "dilemma");
        assert_eq!(v["command"], "run");
        assert!(v["seed_scheme"].as_str().unwrap().contains("splitmix64"));
        let artifacts: Vec<&str> = v["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a.as_str().unwrap())
            .collect();
        assert!(artifacts.contains(&"returns.csv"));
        assert!(artifacts.contains(&"manifest.json"));
        assert!(!manifest.to_lowercase().contains("time"));
    }

    #[test]
    fn compare_covers_both_modes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            episodes: 2,
            trials: 5,
            n_seeds: 2,
            ..ExperimentConfig::default()
        };
        cmd_compare(&cfg, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
        // Header + 6 cells * 2 episodes.
        assert_eq!(text.lines().count(), 1 + 6 * 2);
        for label in [
            "condition,dynamic",
            "condition,fixed",
            "condition,random",
            "attribute,heterogeneous",
            "attribute,homogeneous_high",
            "attribute,homogeneous_low",
        ] {
            assert!(text.contains(label), "missing {label}");
        }
        let verdict: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdict.json")).unwrap())
                .unwrap();
        assert_eq!(verdict["insufficient_window"], true);
        assert_eq!(verdict["final_window"], 2);
        assert!(verdict["means"]["dynamic"].is_number());
        // The shared dynamic/heterogeneous cell is literally the same run.
        let dyn_rows: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("condition,dynamic"))
            .collect();
        let het_rows: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("attribute,heterogeneous"))
            .collect();
        for (d, h) in dyn_rows.iter().zip(&het_rows) {
            assert_eq!(
                d.trim_start_matches("condition,dynamic"),
                h.trim_start_matches("attribute,heterogeneous")
            );
        }
    }

    #[test]
    fn sweep_csv_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            episodes: 2,
            trials: 5,
            n_seeds: 2,
            ..ExperimentConfig::default()
        };
        cmd_sweep(&cfg, &[5, 2], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let taus: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(taus, vec!["2", "5"]);
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(v["taus"], serde_json::json!([5, 2]));
    }

    #[test]
    fn load_config_reports_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"episodes": 7}"#).unwrap();
        assert_eq!(load_config(&path).unwrap().episodes, 7);
        std::fs::write(&path, "{not json").unwrap();
        let err = load_config(&path).unwrap_err().to_string();
        assert!(err.contains("cfg.json"), "{err}");
        let missing = load_config(&dir.path().join("absent.json")).unwrap_err().to_string();
        assert!(missing.contains("absent.json"), "{missing}");
    }
}
