use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddp_track::experiment::{compare_runs, run_experiment, ExperimentConfig, ModelKind};
use ddp_track::scenario::{generate, ScenarioSpec};

#[derive(Parser)]
#[command(name = "ddptrack", version, about = "Monte-Carlo harness for nonparametric multi-object tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config over its Monte-Carlo replications.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the number of Monte-Carlo runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Override the root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the prior: ddp, dpy or dpm-baseline.
        #[arg(long)]
        model: Option<ModelKind>,
        /// Output directory, replacing the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root under which a relative `output_dir` is placed.
        #[arg(long, env = "DDPTRACK_OUTPUT_ROOT")]
        output_root: Option<PathBuf>,
    },
    /// Paired comparison of two experiment output directories.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Where to write comparison.csv and comparison.json (default: <a>/comparison).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scenario file utilities.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Check a scenario file and print a short summary.
    Validate { path: PathBuf },
    /// Simulate one realization and export truth and measurement CSVs.
    Generate {
        path: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn output_dir(config_dir: &Path, out: Option<PathBuf>, root: Option<PathBuf>) -> PathBuf {
    match (out, root) {
        (Some(out), _) => out,
        (None, Some(root)) if config_dir.is_relative() => root.join(config_dir),
        (None, _) => config_dir.to_path_buf(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            runs,
            seed,
            model,
            out,
            output_root,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = runs {
                cfg.mc_runs = n;
            }
            if let Some(s) = seed {
                cfg.root_seed = s;
            }
            if let Some(m) = model {
                cfg.model = m;
            }
            cfg.output_dir = output_dir(&cfg.output_dir, out, output_root);
            let outcome = run_experiment(&cfg)?;
            let s = &outcome.summary;
            println!(
                "{} runs x {} steps -> {}",
                s.runs,
                s.steps,
                outcome.output_dir.display()
            );
            println!(
                "mean OSPA {:.3}  cardinality MAE {:.3}  bias {:+.3}",
                s.mean_ospa, s.cardinality_mae, s.cardinality_bias
            );
        }
        Command::Compare { a, b, out } => {
            let out = out.unwrap_or_else(|| a.join("comparison"));
            let c = compare_runs(&a, &b, &out)?;
            println!(
                "mean OSPA a {:.3}  b {:.3}  paired difference {:+.3}  95% CI [{:+.3}, {:+.3}] over {} runs",
                c.mean_a, c.mean_b, c.mean_difference, c.ci_low, c.ci_high, c.runs
            );
            println!(
                "{}",
                if c.ci_excludes_zero() {
                    "difference is significant at the 95% level"
                } else {
                    "difference is not significant at the 95% level"
                }
            );
        }
        Command::Scenario { command } => match command {
            ScenarioCommand::Validate { path } => {
                let spec = ScenarioSpec::load(&path)?;
                let m = spec.effective_measurement()?;
                println!(
                    "{}: ok ({} objects, {} steps, {:?}, noise trace {:.4})",
                    path.display(),
                    spec.objects.len(),
                    spec.duration,
                    m.mode,
                    m.noise_trace()
                );
            }
            ScenarioCommand::Generate { path, seed, out } => {
                let spec = ScenarioSpec::load(&path)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(spec.seed));
                let truth = generate(&spec, &mut rng)?;
                std::fs::create_dir_all(&out)
                    .with_context(|| format!("creating {}", out.display()))?;
                truth.write_states_csv(&out.join("truth.csv"))?;
                truth.write_measurements_csv(&out.join("measurements.csv"))?;
                println!("wrote truth.csv and measurements.csv to {}", out.display());
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
