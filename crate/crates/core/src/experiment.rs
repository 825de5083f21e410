//! Monte-Carlo experiment harness: runs a tracker over many seeded
//! realizations of a scenario and writes plot-ready CSV and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bnp::{BaseMeasure, GammaPrior, ParamTransition, PriorModel, WindowBase};
use crate::dynamics::MotionNoise;
use crate::error::{Error, Result};
use crate::inference::{run_tracker, Hyper, PosteriorSummary, TrackerConfig};
use crate::metrics::ospa;
use crate::scenario::{generate, GroundTruth, ScenarioSpec};
use crate::tomlio;

/// Version of the CSV/JSON layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Dependent Dirichlet process prior.
    Ddp,
    /// Dependent Pitman-Yor prior with discount `hyper.discount`.
    Dpy,
    /// Per-frame Dirichlet process mixture with no temporal dependency.
    DpmBaseline,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddp" => Ok(Self::Ddp),
            "dpy" => Ok(Self::Dpy),
            "dpm-baseline" => Ok(Self::DpmBaseline),
            other => Err(Error::ParameterDomain(format!(
                "unknown model {other:?}; expected ddp, dpy or dpm-baseline"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub alpha_prior: GammaPrior,
    /// Fixed concentration. Defaults to the mean of `alpha_prior`.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Resample the concentration each sweep instead of holding it fixed.
    #[serde(default)]
    pub resample_alpha: bool,
    #[serde(default)]
    pub discount: f64,
    #[serde(default = "default_survival")]
    pub survival: f64,
    #[serde(default = "default_proposals")]
    pub proposals: usize,
    #[serde(default = "default_base")]
    pub base: BaseMeasure,
    #[serde(default)]
    pub transition: ParamTransition,
    /// Motion model assumed by the tracker.
    #[serde(default)]
    pub motion: MotionNoise,
}

fn default_survival() -> f64 {
    0.95
}

fn default_proposals() -> usize {
    10
}

fn default_base() -> BaseMeasure {
    BaseMeasure::Window(WindowBase::default())
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            alpha_prior: GammaPrior {
                shape: 1.0,
                rate: 0.1,
            },
            alpha: None,
            resample_alpha: false,
            discount: 0.0,
            survival: default_survival(),
            proposals: default_proposals(),
            base: default_base(),
            transition: ParamTransition::default(),
            motion: MotionNoise::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OspaConfig {
    pub p: f64,
    pub c: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self { p: 1.0, c: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario file, relative to the config file's directory.
    pub scenario: PathBuf,
    pub model: ModelKind,
    #[serde(default = "default_runs")]
    pub mc_runs: usize,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub ospa: OspaConfig,
}

fn default_runs() -> usize {
    50
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_sweeps() -> usize {
    100
}

fn default_burn_in() -> usize {
    20
}

impl ExperimentConfig {
    /// Parses a config, resolving the scenario path against `path`'s directory.
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = tomlio::parse(text, path)?;
        if let Err((key, message)) = cfg.check() {
            return Err(Error::Config {
                path: path.to_path_buf(),
                line: tomlio::line_of(text, key),
                message,
            });
        }
        if cfg.scenario.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.scenario = dir.join(&cfg.scenario);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.mc_runs == 0 {
            return Err(("mc_runs", "mc_runs must be at least 1".into()));
        }
        if self.sweeps <= self.burn_in {
            return Err(("sweeps", format!(
                "sweeps ({}) must exceed burn_in ({})",
                self.sweeps, self.burn_in
            )));
        }
        let h = &self.hyper;
        if h.alpha_prior.validate().is_err() {
            return Err(("alpha_prior", "alpha_prior needs positive shape and rate".into()));
        }
        if h.alpha.is_some_and(|a| !(a > 0.0)) {
            return Err(("alpha", "alpha must be positive".into()));
        }
        if !(0.0..1.0).contains(&h.discount) {
            return Err(("discount", format!("discount {} outside [0, 1)", h.discount)));
        }
        if !(0.0..=1.0).contains(&h.survival) {
            return Err(("survival", format!("survival {} outside [0, 1]", h.survival)));
        }
        if let Err(e) = h.base.validate() {
            return Err(("base", e.to_string()));
        }
        if !(self.ospa.p >= 1.0) || !(self.ospa.c > 0.0) {
            return Err(("ospa", "ospa needs p >= 1 and c > 0".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, m)| Error::ParameterDomain(m))
    }

    /// Tracker settings for `model` under this config's hyperparameters.
    pub fn tracker_config(&self, scenario: &ScenarioSpec) -> Result<TrackerConfig> {
        let h = &self.hyper;
        let alpha = h.alpha.unwrap_or_else(|| h.alpha_prior.mean());
        let model = match self.model {
            ModelKind::Dpy => PriorModel::Dpy {
                alpha,
                discount: h.discount,
            },
            ModelKind::Ddp | ModelKind::DpmBaseline => PriorModel::Ddp { alpha },
        };
        let cfg = TrackerConfig {
            hyper: Hyper {
                model,
                base: h.base,
                measurement: scenario.effective_measurement()?,
                proposals: h.proposals,
            },
            motion: h.motion,
            transition: h.transition,
            survival_prob: h.survival,
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            alpha_prior: h.resample_alpha.then_some(h.alpha_prior),
            independent: self.model == ModelKind::DpmBaseline,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Seed of run `run`, derived from the root seed and the scenario seed only,
/// so different models and configs see the same data for the same run.
pub fn derive_seed(root_seed: u64, scenario_seed: u64, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(root_seed.to_le_bytes());
    h.update(scenario_seed.to_le_bytes());
    h.update((run as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Per-run series, enough to rebuild every aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub true_cardinality: Vec<usize>,
    pub estimated_cardinality: Vec<usize>,
    pub ospa: Vec<f64>,
    pub ospa_localization: Vec<f64>,
    pub ospa_cardinality: Vec<f64>,
}

impl RunRecord {
    pub fn mean_ospa(&self) -> f64 {
        mean(&self.ospa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub step: usize,
    pub ospa_mean: f64,
    pub ospa_q05: f64,
    pub ospa_median: f64,
    pub ospa_q95: f64,
    pub true_cardinality: f64,
    pub cardinality_mean: f64,
    pub cardinality_q05: f64,
    pub cardinality_q95: f64,
    pub cardinality_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub model: ModelKind,
    pub runs: usize,
    pub steps: usize,
    pub mean_ospa: f64,
    pub cardinality_mae: f64,
    pub cardinality_bias: f64,
    /// Mean OSPA of each run, in run order, for paired comparisons.
    pub run_mean_ospa: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub summary: ExperimentSummary,
    pub output_dir: PathBuf,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Linear-interpolation quantile of unsorted data.
fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn run_dir(out: &Path, run: usize) -> PathBuf {
    out.join("runs").join(format!("run_{run:04}"))
}

/// Simulates and tracks one realization.
pub fn simulate_run(
    scenario: &ScenarioSpec,
    tracker: &TrackerConfig,
    ospa_cfg: &OspaConfig,
    run: usize,
    seed: u64,
) -> Result<(RunRecord, GroundTruth, Vec<PosteriorSummary>)> {
    let mut data_rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = generate(scenario, &mut data_rng)?;
    let mut track_rng = ChaCha8Rng::seed_from_u64(seed);
    track_rng.set_stream(1);
    let estimates = run_tracker(&truth.measurements, tracker, &mut track_rng)?;
    let mut rec = RunRecord {
        run,
        seed,
        true_cardinality: truth.cardinality.clone(),
        estimated_cardinality: Vec::with_capacity(estimates.len()),
        ospa: Vec::with_capacity(estimates.len()),
        ospa_localization: Vec::with_capacity(estimates.len()),
        ospa_cardinality: Vec::with_capacity(estimates.len()),
    };
    for (k, est) in estimates.iter().enumerate() {
        let positions: Vec<[f64; 2]> = est.estimated_states.iter().map(|s| s.position()).collect();
        let o = ospa(&truth.positions(k), &positions, ospa_cfg.p, ospa_cfg.c)?;
        rec.estimated_cardinality.push(est.cardinality);
        rec.ospa.push(o.total);
        rec.ospa_localization.push(o.localization);
        rec.ospa_cardinality.push(o.cardinality_component);
    }
    Ok((rec, truth, estimates))
}

fn write_run(dir: &Path, rec: &RunRecord, truth: &GroundTruth, est: &[PosteriorSummary]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    truth.write_states_csv(&dir.join("truth.csv"))?;

    let path = dir.join("estimates.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["step", "label", "x", "vx", "y", "vy", "omega"])?;
    for s in est {
        for (label, x) in s.labels.iter().zip(&s.estimated_states) {
            w.serialize((s.step, label.0, x.x, x.vx, x.y, x.vy, x.omega))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("cardinality.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["step", "true", "estimated"])?;
    for (k, (t, e)) in rec.true_cardinality.iter().zip(&rec.estimated_cardinality).enumerate() {
        w.serialize((k, t, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("ospa.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["step", "total", "localization", "cardinality"])?;
    for k in 0..rec.ospa.len() {
        w.serialize((k, rec.ospa[k], rec.ospa_localization[k], rec.ospa_cardinality[k]))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    // record.json marks the run complete, so it is written last and atomically
    write_atomic(&dir.join("record.json"), &serde_json::to_vec_pretty(rec)?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// A finished run from an earlier invocation, if its seed still matches.
fn completed_run(dir: &Path, seed: u64) -> Option<RunRecord> {
    let bytes = fs::read(dir.join("record.json")).ok()?;
    let rec: RunRecord = serde_json::from_slice(&bytes).ok()?;
    (rec.seed == seed).then_some(rec)
}

pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let steps = records.first().map_or(0, |r| r.ospa.len());
    (0..steps)
        .map(|k| {
            let ospa: Vec<f64> = records.iter().map(|r| r.ospa[k]).collect();
            let card: Vec<f64> = records.iter().map(|r| r.estimated_cardinality[k] as f64).collect();
            let truth: Vec<f64> = records.iter().map(|r| r.true_cardinality[k] as f64).collect();
            let abs: Vec<f64> = card.iter().zip(&truth).map(|(e, t)| (e - t).abs()).collect();
            AggregateRow {
                step: k,
                ospa_mean: mean(&ospa),
                ospa_q05: quantile(&ospa, 0.05),
                ospa_median: quantile(&ospa, 0.5),
                ospa_q95: quantile(&ospa, 0.95),
                true_cardinality: mean(&truth),
                cardinality_mean: mean(&card),
                cardinality_q05: quantile(&card, 0.05),
                cardinality_q95: quantile(&card, 0.95),
                cardinality_mae: mean(&abs),
            }
        })
        .collect()
}

fn summarize(model: ModelKind, records: &[RunRecord], rows: &[AggregateRow]) -> ExperimentSummary {
    ExperimentSummary {
        model,
        runs: records.len(),
        steps: rows.len(),
        mean_ospa: mean(&rows.iter().map(|r| r.ospa_mean).collect::<Vec<_>>()),
        cardinality_mae: mean(&rows.iter().map(|r| r.cardinality_mae).collect::<Vec<_>>()),
        cardinality_bias: mean(
            &rows
                .iter()
                .map(|r| r.cardinality_mean - r.true_cardinality)
                .collect::<Vec<_>>(),
        ),
        run_mean_ospa: records.iter().map(RunRecord::mean_ospa).collect(),
    }
}

fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else if p.file_name().is_some_and(|n| n != "manifest.json") {
            out.push(p.strip_prefix(root).unwrap_or(&p).to_path_buf());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub scenario: ScenarioSpec,
    pub tracker: TrackerConfig,
    pub seeds: Vec<u64>,
    pub resumed_runs: Vec<usize>,
    pub wall_time_seconds: f64,
    pub csv_schemas: Vec<(String, Vec<String>)>,
    pub files: Vec<ManifestFile>,
}

fn csv_schemas() -> Vec<(String, Vec<String>)> {
    let cols = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        ("aggregate.csv".into(), cols(&[
            "step", "ospa_mean", "ospa_q05", "ospa_median", "ospa_q95", "true_cardinality",
            "cardinality_mean", "cardinality_q05", "cardinality_q95", "cardinality_mae",
        ])),
        ("runs/*/truth.csv".into(), cols(&["step", "object_id", "x", "vx", "y", "vy", "omega"])),
        ("runs/*/estimates.csv".into(), cols(&["step", "label", "x", "vx", "y", "vy", "omega"])),
        ("runs/*/cardinality.csv".into(), cols(&["step", "true", "estimated"])),
        ("runs/*/ospa.csv".into(), cols(&["step", "total", "localization", "cardinality"])),
    ]
}

/// Runs every Monte-Carlo replication (skipping runs already on disk) and
/// writes per-run CSVs, `aggregate.csv`, `summary.json` and `manifest.json`
/// into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    config.validate()?;
    let scenario = ScenarioSpec::load(&config.scenario)?;
    let tracker = config.tracker_config(&scenario)?;
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let seeds: Vec<u64> = (0..config.mc_runs)
        .map(|r| derive_seed(config.root_seed, scenario.seed, r))
        .collect();
    let results: Vec<Result<(RunRecord, bool)>> = seeds
        .par_iter()
        .enumerate()
        .map(|(run, &seed)| {
            let dir = run_dir(&out, run);
            if let Some(rec) = completed_run(&dir, seed) {
                return Ok((rec, true));
            }
            let (rec, truth, est) = simulate_run(&scenario, &tracker, &config.ospa, run, seed)?;
            write_run(&dir, &rec, &truth, &est)?;
            Ok((rec, false))
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut resumed = Vec::new();
    for r in results {
        let (rec, was_resumed) = r?;
        if was_resumed {
            resumed.push(rec.run);
        }
        records.push(rec);
    }

    let rows = aggregate(&records);
    write_aggregate(&out.join("aggregate.csv"), &rows)?;
    let summary = summarize(config.model, &records, &rows);
    write_atomic(&out.join("summary.json"), &serde_json::to_vec_pretty(&summary)?)?;

    let mut files = Vec::new();
    list_files(&out, &out, &mut files)?;
    let files = files
        .into_iter()
        .filter(|p| !p.starts_with("comparison"))
        .map(|p| {
            Ok(ManifestFile {
                sha256: sha256_file(&out.join(&p))?,
                path: p.to_string_lossy().replace('\\', "/"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        scenario,
        tracker,
        seeds,
        resumed_runs: resumed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        csv_schemas: csv_schemas(),
        files,
    };
    write_atomic(&out.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;

    Ok(ExperimentOutcome {
        records,
        aggregate: rows,
        summary,
        output_dir: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub runs: usize,
    pub steps: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Paired mean of `a − b` over runs.
    pub mean_difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

impl Comparison {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Percentile bootstrap CI for the mean of `diffs`.
pub fn bootstrap_mean_ci<R: Rng + ?Sized>(
    diffs: &[f64],
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> (f64, f64) {
    if diffs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = diffs.len();
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let tail = (1.0 - level) / 2.0;
    (quantile(&means, tail), quantile(&means, 1.0 - tail))
}

/// Paired comparison of per-run mean OSPA between two equal-length series.
pub fn paired_comparison(a: &[f64], b: &[f64], steps: usize) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (ci_low, ci_high) = bootstrap_mean_ci(&diffs, BOOTSTRAP_RESAMPLES, 0.95, &mut rng);
    Ok(Comparison {
        runs: a.len(),
        steps,
        mean_a: mean(a),
        mean_b: mean(b),
        mean_difference: mean(&diffs),
        ci_low,
        ci_high,
        resamples: BOOTSTRAP_RESAMPLES,
    })
}

fn read_summary(dir: &Path) -> Result<ExperimentSummary> {
    let path = dir.join("summary.json");
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn read_aggregate(dir: &Path) -> Result<Vec<AggregateRow>> {
    let path = dir.join("aggregate.csv");
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<AggregateRow>, _>>()
        .map_err(Error::from)
}

/// Compares two experiment directories: writes `comparison.csv` with the
/// per-step OSPA difference `a − b` into `out` and returns the paired
/// bootstrap summary, also saved as `comparison.json`.
pub fn compare_runs(dir_a: &Path, dir_b: &Path, out: &Path) -> Result<Comparison> {
    let agg_a = read_aggregate(dir_a)?;
    let agg_b = read_aggregate(dir_b)?;
    let incomparable = |message: String| Error::Incomparable {
        a: dir_a.to_path_buf(),
        b: dir_b.to_path_buf(),
        message,
    };
    if agg_a.len() != agg_b.len() {
        return Err(incomparable(format!("step counts differ ({} vs {})", agg_a.len(), agg_b.len())));
    }
    let sum_a = read_summary(dir_a)?;
    let sum_b = read_summary(dir_b)?;
    if sum_a.runs != sum_b.runs {
        return Err(incomparable(format!("run counts differ ({} vs {})", sum_a.runs, sum_b.runs)));
    }
    let cmp = paired_comparison(&sum_a.run_mean_ospa, &sum_b.run_mean_ospa, agg_a.len())?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join("comparison.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["step", "ospa_a", "ospa_b", "difference"])?;
    for (ra, rb) in agg_a.iter().zip(&agg_b) {
        w.serialize((ra.step, ra.ospa_mean, rb.ospa_mean, ra.ospa_mean - rb.ospa_mean))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_atomic(&out.join("comparison.json"), &serde_json::to_vec_pretty(&cmp)?)?;
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let xs = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn derived_seeds_differ_by_run_and_root() {
        let a = derive_seed(0, 1, 0);
        assert_ne!(a, derive_seed(0, 1, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_eq!(a, derive_seed(0, 1, 0));
    }

    #[test]
    fn bootstrap_of_constant_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (lo, hi) = bootstrap_mean_ci(&[2.0; 20], 200, 0.95, &mut rng);
        assert_eq!((lo, hi), (2.0, 2.0));
    }

    #[test]
    fn bootstrap_covers_the_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..50).map(|i| (i % 7) as f64 - 3.0).collect();
        let (lo, hi) = bootstrap_mean_ci(&xs, 1000, 0.95, &mut rng);
        let m = mean(&xs);
        assert!(lo < m && m < hi);
        // standard error of the mean is about 0.28, so the CI spans roughly ±0.55
        assert!(hi - lo > 0.6 && hi - lo < 1.6, "{lo} {hi}");
    }

    #[test]
    fn semantic_errors_are_line_anchored() {
        let text = "scenario = \"s.toml\"\nmodel = \"ddp\"\nmc_runs = 0\n";
        let err = ExperimentConfig::from_toml(text, Path::new("e.toml")).unwrap_err();
        assert!(err.to_string().starts_with("e.toml:3:"), "{err}");
    }

    #[test]
    fn unknown_model_is_line_anchored() {
        let text = "scenario = \"s.toml\"\n\nmodel = \"glmb\"\n";
        let err = ExperimentConfig::from_toml(text, Path::new("e.toml")).unwrap_err();
        assert!(err.to_string().starts_with("e.toml:3:"), "{err}");
    }

    #[test]
    fn alpha_defaults_to_prior_mean() {
        let cfg = ExperimentConfig::from_toml(
            "scenario = \"s.toml\"\nmodel = \"dpy\"\n[hyper]\nalpha_prior = { shape = 1.0, rate = 0.2 }\ndiscount = 0.1\n",
            Path::new("e.toml"),
        )
        .unwrap();
        let t = cfg.tracker_config(&ScenarioSpec::from_toml("", Path::new("s.toml")).unwrap()).unwrap();
        assert_eq!(t.hyper.model, PriorModel::Dpy { alpha: 5.0, discount: 0.1 });
        assert!(!t.independent);
        assert_eq!(cfg.scenario, PathBuf::from("s.toml"));
    }
}
