//! The `hsw` command line: configuration, dispatch, run directories.
//!
//! ```text
//! hsw <subcommand> [--config path] [flags]
//! ```
//!
//! Exit status 0 on success, 1 on numerical failure (blow-up,
//! non-contraction, I/O), 2 on configuration errors. `HSW_THREADS` caps the
//! worker pool.

pub mod config;
mod commands;
pub mod rundir;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

pub use config::{ConfigError, ExperimentConfig, LoadedConfig};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hsw", version, about = "Pseudo-spectral lab for the periodic higher-order shallow-water equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve initial data and record conserved quantities.
    Simulate(Flags),
    /// Picard iteration of the Duhamel map on a short window.
    PicardCheck(Flags),
    /// Modified-energy increments across a ladder of cutoffs N.
    ImethodScan(Flags),
    /// Exhaustive resonance-function size scan.
    ResonanceVerify(Flags),
    /// Level-set counts of the resonance function.
    AnnulusCount(Flags),
    /// Monte-Carlo probe of the L⁴ Strichartz estimate.
    L4Probe(Flags),
    /// Monte-Carlo probe of a bilinear X^{s,b} estimate.
    BilinearProbe(Flags),
    /// Long-time running sup of the H^s norm against the growth law.
    GrowthCampaign(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Simulate(f) => ("simulate", f),
            Command::PicardCheck(f) => ("picard-check", f),
            Command::ImethodScan(f) => ("imethod-scan", f),
            Command::ResonanceVerify(f) => ("resonance-verify", f),
            Command::AnnulusCount(f) => ("annulus-count", f),
            Command::L4Probe(f) => ("l4-probe", f),
            Command::BilinearProbe(f) => ("bilinear-probe", f),
            Command::GrowthCampaign(f) => ("growth-campaign", f),
        }
    }
}

/// Flags shared by every subcommand; each overrides the config field of the
/// same name.
#[derive(Debug, Default, clap::Args)]
struct Flags {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory name.
    #[arg(long)]
    name: Option<String>,
    /// Parent of the run directory (default `runs`).
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    j: Option<u32>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// `single_mode:k:a`, `broadband:decay:seed:a` or `file:path`.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    dealias: Option<bool>,
    /// Switch the nonlinear term off.
    #[arg(long)]
    linear: bool,
    /// Write every recorded state as `snapshots/t_<i>.csv`.
    #[arg(long)]
    snapshots: bool,
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    s_list: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<u64>>,
    /// Also check the commutator decomposition of each increment.
    #[arg(long)]
    check_identity: bool,
    #[arg(long)]
    k_max: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    k: Option<i64>,
    #[arg(long)]
    k1_range: Option<i64>,
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<u64>>,
    #[arg(long)]
    n_time: Option<usize>,
    #[arg(long)]
    t_window: Option<f64>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `mixed` or `free`.
    #[arg(long)]
    ensemble: Option<String>,
    /// `lemma31` or `lemma32`.
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Result<ExperimentConfig, ConfigError> {
        Ok(ExperimentConfig {
            name: self.name.clone(),
            output_dir: self.output_dir.clone(),
            j: self.j,
            n_points: self.n_points,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
            profile: self.profile.clone(),
            dealias: self.dealias,
            nonlinear: self.linear.then_some(false),
            snapshots: self.snapshots.then_some(true),
            s: self.s,
            s_list: self.s_list.clone(),
            delta: self.delta,
            n_iter: self.n_iter,
            cutoffs: self.cutoffs.clone(),
            check_identity: self.check_identity.then_some(true),
            k_max: self.k_max,
            k: self.k,
            k1_range: self.k1_range,
            windows: self.windows.clone(),
            n_time: self.n_time,
            t_window: self.t_window,
            n_samples: self.n_samples,
            seed: self.seed,
            ensemble: named("ensemble", &self.ensemble)?,
            form: named("form", &self.form)?,
            epsilon: self.epsilon,
        })
    }
}

fn named<T: serde::de::DeserializeOwned>(field: &str, v: &Option<String>) -> Result<Option<T>, ConfigError> {
    v.as_ref()
        .map(|s| serde_json::from_value(Value::String(s.clone())))
        .transpose()
        .map_err(|e| ConfigError(format!("--{field}: {e}")))
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BlowUp { .. } | Error::Io(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

/// Outcome of a successful dispatch.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_dir: PathBuf,
    pub summary: Value,
}

/// Worker count from `HSW_THREADS`, `None` when unset.
fn thread_cap() -> Result<Option<usize>, ConfigError> {
    match std::env::var("HSW_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError(format!("HSW_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

/// Runs one subcommand against an already loaded config.
pub fn run(command: &str, cfg: &LoadedConfig) -> Result<RunOutput, Failure> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap()? {
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| Failure::Numerical(format!("cannot start worker pool: {e}")))?
    };
    let threads = pool.current_num_threads();
    pool.install(|| commands::dispatch(command, cfg, threads))
}

/// Entry point of the `hsw` binary; returns the exit status.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (name, flags) = cli.command.parts();
    let result = load(flags).and_then(|cfg| run(name, &cfg));
    match result {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out.summary).expect("summary serializes")
            );
            eprintln!("hsw {name}: wrote {}", out.run_dir.display());
            EXIT_OK
        }
        Err(f) => {
            eprintln!("hsw {name}: error: {}", f.message());
            f.exit_code()
        }
    }
}

fn load(flags: &Flags) -> Result<LoadedConfig, Failure> {
    let mut cfg = match &flags.config {
        Some(p) => LoadedConfig::from_file(p)?,
        None => LoadedConfig::default(),
    };
    cfg.apply_overrides(&flags.overrides()?)?;
    Ok(cfg)
}
