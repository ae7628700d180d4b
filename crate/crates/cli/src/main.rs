use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use msd_nlse_cli::config::{Backflow, BcKind, ConfigError, Experiment, ExperimentConfig, TimeStep};
use msd_nlse_cli::experiments::{self, EXIT_INVALID_CONFIG};
use serde::Serialize;
use serde_json::{Map, Value};

/// Runs one experiment and writes its tables, snapshots and manifest.
///
/// Exit status: 0 success, 2 a run blew up, 3 a vortex was lost,
/// 4 invalid configuration, 1 any other error.
#[derive(Debug, Parser)]
#[command(name = "sim", version)]
struct Cli {
    experiment: Experiment,
    /// JSON document with any of the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Boundary conditions: msd, l0, 1sd, exact, exact-overwrite, dirichlet0.
    #[arg(long, value_delimiter = ',')]
    bc: Option<Vec<BcKind>>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<f64>>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    /// Time step, or `auto`.
    #[arg(long)]
    k: Option<TimeStep>,
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long)]
    m: Option<i32>,
    /// Distance of each vortex of the pair from the grid center.
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    ring_radius: Option<f64>,
    /// `none`, `auto` or an axial speed.
    #[arg(long, allow_hyphen_values = true)]
    backflow: Option<Backflow>,
    #[arg(long)]
    calibration_time: Option<f64>,
    #[arg(long)]
    profile_dr: Option<f64>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    survive_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    /// Flags that were given, keyed by configuration field name.
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        put(&mut m, "bc", &self.bc);
        put(&mut m, "r", &self.r);
        put(&mut m, "d", &self.d);
        put(&mut m, "points", &self.points);
        put(&mut m, "h", &self.h);
        put(&mut m, "k", &self.k);
        put(&mut m, "tend", &self.tend);
        put(&mut m, "a", &self.a);
        put(&mut m, "s", &self.s);
        put(&mut m, "omega", &self.omega);
        put(&mut m, "c", &self.c);
        put(&mut m, "m", &self.m);
        put(&mut m, "separation", &self.separation);
        put(&mut m, "ring_radius", &self.ring_radius);
        put(&mut m, "backflow", &self.backflow);
        put(&mut m, "calibration_time", &self.calibration_time);
        put(&mut m, "profile_dr", &self.profile_dr);
        put(&mut m, "sample_every", &self.sample_every);
        put(&mut m, "snapshot_every", &self.snapshot_every);
        put(&mut m, "steps", &self.steps);
        put(&mut m, "survive_steps", &self.survive_steps);
        put(&mut m, "seed", &self.seed);
        put(&mut m, "out", &self.out);
        m
    }
}

fn put<T: Serialize>(m: &mut Map<String, Value>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        m.insert(key.to_string(), serde_json::to_value(v).expect("plain data serializes"));
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.clone(),
                source,
            })?;
            Some(serde_json::from_str::<Value>(&text)?)
        }
        None => None,
    };
    ExperimentConfig::resolve(cli.experiment, file, cli.overrides())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID_CONFIG as u8);
        }
    };
    let report = match experiments::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    for run in &report.runs {
        let err = run.err_component_avg.or(run.err_mod2_max);
        let mut line = format!("{:<16} t={:<10.3} steps={:<8}", run.label, run.t_reached, run.steps);
        if let Some(e) = err {
            line.push_str(&format!(" err={e:.3e}"));
        }
        for (k, v) in &run.metrics {
            line.push_str(&format!(" {k}={v:.4e}"));
        }
        if !run.note.is_empty() {
            line.push_str(&format!("  [{}]", run.note));
        }
        println!("{line}");
    }
    println!("outputs in {}", cfg.out.display());
    ExitCode::from(report.exit_code() as u8)
}
