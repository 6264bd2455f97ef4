//! Command-line runner for the experiment suite.
//!
//! `gino <experiment> [--seed N] [--out DIR] [--config FILE] [--set key=value]... [--plot]`
//! runs one experiment and writes `config.json`, `metrics.csv` and
//! `summary.json` (plus `plots/*.png` with `--plot`) into the output directory.

pub mod config_file;
pub mod emit;
pub mod error;
pub mod field_io;
pub mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use gino_core::diagnostics::{
    bound_checks, e1_accuracy, e2_gauge, e3_metric_sweep, e4_cross_resolution, e5_hodge,
    e6a_lambda_sweep, e6b_smoothness, train_base_cnn, train_base_gino, ExperimentConfig,
    ExperimentReport, SweepSpec,
};
use gino_core::grid::{MetricSpec, Resolution};
use gino_core::oracle::resolvent_apply;
use gino_core::sampler::{sample_batch, ForcingSpec, SeededRng};
use gino_core::train::MetricHistory;

pub use emit::emit_report;
pub use error::{CliError, CliResult};
pub use field_io::{read_field, write_field};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "GINO_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6a,
    E6b,
    Bounds,
    Train,
    GenData,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::E1 => "e1",
            Self::E2 => "e2",
            Self::E3 => "e3",
            Self::E4 => "e4",
            Self::E5 => "e5",
            Self::E6a => "e6a",
            Self::E6b => "e6b",
            Self::Bounds => "bounds",
            Self::Train => "train",
            Self::GenData => "gen-data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gino,
    Cnn,
}

#[derive(Debug, Parser)]
#[command(
    name = "gino",
    version,
    about = "Run one experiment and write its artifacts"
)]
struct Args {
    experiment: Experiment,
    /// Run seed; overrides the config file and the GINO_SEED variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: runs/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Render PNG charts into <out>/plots.
    #[arg(long)]
    plot: bool,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Comma-separated metric perturbations for e3 and e6b.
    #[arg(long)]
    deltas: Option<String>,
    /// Model trained by `train`.
    #[arg(long, value_enum, default_value = "gino")]
    model: ModelKind,
    /// Number of samples written by `gen-data`.
    #[arg(long, default_value_t = 4)]
    count: usize,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Overrides in application order: config file, environment, command line.
    pub overrides: Vec<(String, String)>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub plot: bool,
    pub model: ModelKind,
    pub count: usize,
}

impl RunConfig {
    /// Defaults with every override applied in order.
    pub fn experiment_config(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in &self.overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

fn resolve(args: Args, env_seed: Option<String>) -> CliResult<RunConfig> {
    let mut overrides = Vec::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        overrides.extend(config_file::parse_config(&text)?);
    }
    if let Some(s) = env_seed {
        overrides.push(("seed".into(), s));
    }
    for s in &args.sets {
        overrides.push(config_file::parse_override(s)?);
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(d) = &args.deltas {
        overrides.push(("e3.deltas".into(), d.clone()));
    }
    let mut run = RunConfig {
        experiment: args.experiment,
        overrides,
        seed: 0,
        out_dir: args
            .out
            .unwrap_or_else(|| Path::new("runs").join(args.experiment.name())),
        plot: args.plot,
        model: args.model,
        count: args.count,
    };
    let cfg = run
        .experiment_config()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    run.seed = cfg.seed;
    Ok(run)
}

/// Parses arguments, reading `GINO_SEED` from the environment.
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, (i32, String)>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
            _ => EXIT_USAGE,
        };
        (code, e.to_string())
    })?;
    resolve(args, std::env::var(SEED_ENV).ok()).map_err(|e| (exit_code(&e), e.to_string()))
}

/// Exclusive claim on an output directory, released on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(dir.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn history_report(
    id: &str,
    cfg: &ExperimentConfig,
    history: &MetricHistory,
) -> CliResult<ExperimentReport> {
    let mut report = ExperimentReport::new(id, cfg, &["step", "mse", "rel_l2", "rel_energy"]);
    for r in &history.records {
        report.push_row(vec![r.step as f64, r.mse, r.rel_l2, r.rel_energy])?;
    }
    if let Some(last) = history.last() {
        report.set("mse", last.mse);
        report.set("rel_l2", last.rel_l2);
        report.set("rel_energy", last.rel_energy);
    }
    Ok(report)
}

fn gen_data(run: &RunConfig, cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    if run.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = ForcingSpec::new(cfg.beta, cfg.lambda_f, Resolution::new(cfg.n)?, metric)?;
    let fields = sample_batch(&spec, &mut SeededRng::new(cfg.seed), run.count)?;
    let dir = run.out_dir.join("data");
    std::fs::create_dir_all(&dir)?;
    let mut report =
        ExperimentReport::new("gen-data", cfg, &["sample", "forcing_rms", "solution_rms"]);
    for (i, f) in fields.iter().enumerate() {
        let u = resolvent_apply(f, &metric);
        write_field(&dir.join(format!("forcing_{i:04}.gfld")), f)?;
        write_field(&dir.join(format!("solution_{i:04}.gfld")), &u)?;
        report.push_row(vec![i as f64, f.rms(), u.rms()])?;
    }
    report.set("samples", run.count as f64);
    Ok(report)
}

fn execute(run: &RunConfig) -> CliResult<ExperimentReport> {
    let cfg = run.experiment_config()?;
    let deltas = || SweepSpec::new("delta", cfg.e3_deltas.clone(), vec![cfg.seed]);
    let report = match run.experiment {
        Experiment::E1 => e1_accuracy(&cfg)?,
        Experiment::E2 => {
            let (gino, _) = train_base_gino(&cfg)?;
            let (cnn, _) = train_base_cnn(&cfg)?;
            e2_gauge(&cfg, &gino, &cnn)?
        }
        Experiment::E3 => {
            let (gino, _) = train_base_gino(&cfg)?;
            let (cnn, _) = train_base_cnn(&cfg)?;
            e3_metric_sweep(&cfg, &deltas()?, &gino, Some(&cnn))?
        }
        Experiment::E4 => {
            let (cnn, _) = train_base_cnn(&cfg)?;
            e4_cross_resolution(&cfg, Some(&cnn))?
        }
        Experiment::E5 => e5_hodge(&cfg)?,
        Experiment::E6a => {
            let sweep =
                SweepSpec::new("lambda_max", cfg.e6a_lambdas.clone(), cfg.e6a_seeds.clone())?;
            e6a_lambda_sweep(&cfg, &sweep)?
        }
        Experiment::E6b => {
            let weights = SweepSpec::new(
                "smooth_weight",
                cfg.e6b_weights.clone(),
                cfg.e6b_seeds.clone(),
            )?;
            e6b_smoothness(&cfg, &weights, &deltas()?)?
        }
        Experiment::Bounds => bound_checks(&cfg)?,
        Experiment::Train => {
            std::fs::create_dir_all(&run.out_dir)?;
            let (json, history) = match run.model {
                ModelKind::Gino => {
                    let (m, h) = train_base_gino(&cfg)?;
                    (serde_json::to_string(&m), h)
                }
                ModelKind::Cnn => {
                    let (m, h) = train_base_cnn(&cfg)?;
                    (serde_json::to_string(&m), h)
                }
            };
            let json = json.map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            std::fs::write(run.out_dir.join("model.json"), json)?;
            history_report("train", &cfg, &history)?
        }
        Experiment::GenData => gen_data(run, &cfg)?,
    };
    report.validate()?;
    Ok(report)
}

/// Runs the experiment and writes its artifacts.
pub fn run_config(run: &RunConfig) -> CliResult<ExperimentReport> {
    let _lock = DirLock::acquire(&run.out_dir)?;
    let report = execute(run)?;
    emit_report(&report, &run.out_dir, run.plot)?;
    Ok(report)
}

pub fn exit_code(e: &CliError) -> i32 {
    match e {
        CliError::Core(gino_core::Error::BoundViolation { .. }) => EXIT_VIOLATION,
        CliError::Usage(_) => EXIT_USAGE,
        _ => EXIT_ERROR,
    }
}

/// Entry point shared by the binary and the tests; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let run = match parse_args(argv) {
        Ok(r) => r,
        Err((code, msg)) => {
            if code == EXIT_OK {
                print!("{msg}");
            } else {
                eprintln!("{msg}");
            }
            return code;
        }
    };
    match run_config(&run) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("gino {}: {e}", run.experiment.name());
            exit_code(&e)
        }
    }
}
