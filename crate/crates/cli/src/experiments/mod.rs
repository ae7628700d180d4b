//! Experiment runners. Each writes its files below the configured output
//! directory and returns one [`RunSummary`] per simulated case.

pub mod appendix;
pub mod ring;
pub mod soliton;
pub mod stability;
pub mod vortex;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use msd_nlse::bc::{BoundaryCondition, ExactSolution, Injection};
use msd_nlse::field::{ComplexField, Grid};
use msd_nlse::integrate::{full_stability_bound_of, recommended_timestep, step_count, Stepper};
use msd_nlse::nlse::NlseParams;
use msd_nlse::Error;
use serde::Serialize;

use crate::config::{BcKind, Experiment, ExperimentConfig, TimeStep};
use crate::output::{self, num, opt_num};

pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_VORTEX_LOST: i32 = 3;
pub const EXIT_INVALID_CONFIG: i32 = 4;

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub bc: Option<BcKind>,
    /// `r` or `d` of the case, when it came from a sweep.
    pub size: Option<f64>,
    pub shape: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub k: f64,
    pub steps: usize,
    /// Time actually reached; short of `tend` when the run stopped early.
    pub t_reached: f64,
    pub err_component_avg: Option<f64>,
    pub err_mod2_max: Option<f64>,
    pub blew_up: bool,
    pub vortex_lost: bool,
    pub metrics: BTreeMap<String, f64>,
    pub note: String,
}

impl RunSummary {
    fn on_grid(label: String, bc: Option<BcKind>, size: Option<f64>, grid: &Grid, k: f64) -> Self {
        let upper = grid.upper();
        Self {
            label,
            bc,
            size,
            shape: grid.shape().to_vec(),
            lower: grid.origin().to_vec(),
            upper: upper[..grid.dim()].to_vec(),
            k,
            ..Self::default()
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    fn record_stop(&mut self, drive: &Drive) {
        self.steps = drive.steps;
        self.t_reached = drive.t;
        match &drive.stop {
            Some(Stop::BlowUp { t, max_abs }) => {
                self.blew_up = true;
                self.note = format!("blow-up at t = {t} (max |psi| = {max_abs:e})");
                self.metrics.insert("blowup_t".into(), *t);
            }
            Some(Stop::VortexLost(msg)) => {
                self.vortex_lost = true;
                self.note = format!("vortex lost at t = {}: {msg}", drive.t);
                self.metrics.insert("lost_t".into(), drive.t);
            }
            None => {}
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub runs: Vec<RunSummary>,
}

impl Report {
    pub fn find(&self, label: &str) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn case(&self, bc: BcKind, size: f64) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.bc == Some(bc) && r.size == Some(size))
    }

    /// 0, or [`EXIT_BLOWUP`] / [`EXIT_VORTEX_LOST`] if any run failed that
    /// way; blow-up takes precedence.
    pub fn exit_code(&self) -> i32 {
        if self.runs.iter().any(|r| r.blew_up) {
            EXIT_BLOWUP
        } else if self.runs.iter().any(|r| r.vortex_lost) {
            EXIT_VORTEX_LOST
        } else {
            0
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    runs: &'a [RunSummary],
}

/// Runs the configured experiment and writes `manifest.json` and
/// `summary.csv` next to the per-run outputs.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let out = &cfg.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let runs = match cfg.experiment {
        Experiment::SolitonStatic => soliton::run_soliton_static(cfg, out)?,
        Experiment::SolitonMoving => soliton::run_soliton_moving(cfg, out)?,
        Experiment::VortexSingle => vortex::run_vortex_single(cfg, out)?,
        Experiment::VortexPair => vortex::run_vortex_pair(cfg, out)?,
        Experiment::VortexRing => ring::run_vortex_ring(cfg, out)?,
        Experiment::StabilityCheck => stability::run_stability_check(cfg, out)?,
        Experiment::AppendixDemo => appendix::run_appendix_demo(cfg, out)?,
    };
    write_summary(&out.join("summary.csv"), &runs)?;
    output::write_json(
        &out.join("manifest.json"),
        &Manifest {
            experiment: cfg.experiment.tag(),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            runs: &runs,
        },
    )?;
    Ok(Report {
        config: cfg.clone(),
        runs,
    })
}

fn write_summary(path: &Path, runs: &[RunSummary]) -> Result<()> {
    output::write_table(
        path,
        &[
            "label",
            "bc",
            "size",
            "k",
            "steps",
            "t_reached",
            "err_component_avg",
            "err_mod2_max",
            "blew_up",
            "vortex_lost",
            "metrics",
        ],
        runs.iter().map(|r| {
            let metrics: Vec<String> = r.metrics.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect();
            vec![
                r.label.clone(),
                r.bc.map(|b| b.tag().to_string()).unwrap_or_default(),
                opt_num(r.size),
                num(r.k),
                r.steps.to_string(),
                num(r.t_reached),
                opt_num(r.err_component_avg),
                opt_num(r.err_mod2_max),
                r.blew_up.to_string(),
                r.vortex_lost.to_string(),
                metrics.join(";"),
            ]
        }),
    )
}

/// Directory-safe case label such as `r05_msd` or `d12.5_l0`.
pub fn case_label(prefix: &str, size: f64, bc: BcKind) -> String {
    let s = if size.fract() == 0.0 {
        format!("{prefix}{:02}", size as i64)
    } else {
        format!("{prefix}{size}")
    };
    format!("{s}_{}", bc.tag())
}

pub fn make_bc(kind: BcKind, exact: Option<Arc<dyn ExactSolution>>) -> Result<BoundaryCondition> {
    let need = || exact.clone().ok_or_else(|| anyhow::anyhow!("{kind} needs a closed-form solution"));
    Ok(match kind {
        BcKind::Msd => BoundaryCondition::msd(),
        BcKind::L0 => BoundaryCondition::LaplacianZero,
        BcKind::OneSided => BoundaryCondition::OneSided2,
        BcKind::Exact => BoundaryCondition::ExactDirichlet {
            solution: need()?,
            injection: Injection::Derivative,
        },
        BcKind::ExactOverwrite => BoundaryCondition::ExactDirichlet {
            solution: need()?,
            injection: Injection::Overwrite,
        },
        BcKind::Dirichlet0 => BoundaryCondition::ZeroDirichlet,
    })
}

/// The configured step, or the recommended fraction of the full stability
/// bound of `psi` for `"auto"`.
pub fn resolve_k(k: TimeStep, psi: &ComplexField, params: &NlseParams, bc: &BoundaryCondition) -> f64 {
    match k {
        TimeStep::Fixed(k) => k,
        TimeStep::Auto(_) => recommended_timestep(full_stability_bound_of(psi, params, bc)),
    }
}

/// Points needed to cover `[lower, upper]` with spacing `h`.
pub fn points_for(lower: f64, upper: f64, h: f64) -> usize {
    ((upper - lower) / h).round() as usize + 1
}

/// Square (cube) grid centered on the origin: `points` per axis if given,
/// otherwise enough to reach `half_width` on each side.
pub fn centered_grid(dim: usize, half_width: f64, points: Option<usize>, h: f64) -> Result<Grid> {
    let n = points.unwrap_or_else(|| points_for(-half_width, half_width, h));
    Ok(Grid::centered(&vec![n; dim], h)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    BlowUp { t: f64, max_abs: f64 },
    VortexLost(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub steps: usize,
    pub t: f64,
    pub stop: Option<Stop>,
}

/// Steps from 0 to `t_end`, shortening the last step to land on it.
/// `observe(step, t, psi)` runs at the start, every `every` steps and at the
/// end; returning an error stops the run as a lost vortex.
pub fn drive(
    stepper: &mut Stepper,
    psi: &mut ComplexField,
    params: &NlseParams,
    bc: &BoundaryCondition,
    t_end: f64,
    every: usize,
    mut observe: impl FnMut(usize, f64, &ComplexField) -> std::result::Result<(), String>,
) -> Drive {
    let k = stepper.config().k;
    let n = step_count(t_end, k);
    let mut t = 0.0;
    if let Err(msg) = observe(0, t, psi) {
        return Drive {
            steps: 0,
            t,
            stop: Some(Stop::VortexLost(msg)),
        };
    }
    for step in 1..=n {
        let dt = if step == n { t_end - t } else { k };
        match stepper.step_by(psi, t, dt, params, bc, &mut |_, _| {}) {
            Ok(()) => {}
            Err(Error::BlowUp { t, max_abs }) => {
                return Drive {
                    steps: step,
                    t,
                    stop: Some(Stop::BlowUp { t, max_abs }),
                }
            }
            Err(e) => panic!("unexpected stepping error: {e}"),
        }
        t = if step == n { t_end } else { step as f64 * k };
        if step % every == 0 || step == n {
            if let Err(msg) = observe(step, t, psi) {
                return Drive {
                    steps: step,
                    t,
                    stop: Some(Stop::VortexLost(msg)),
                };
            }
        }
    }
    Drive { steps: n, t, stop: None }
}

/// Decides when image snapshots are due: at the start, every `every` time
/// units if set, and whenever [`SnapshotClock::force`] is used.
pub struct SnapshotClock {
    every: Option<f64>,
    next: f64,
}

impl SnapshotClock {
    pub fn new(every: Option<f64>) -> Self {
        Self { every, next: 0.0 }
    }

    pub fn due(&mut self, t: f64) -> bool {
        if t + 1e-9 < self.next {
            return false;
        }
        self.next = match self.every {
            Some(dt) => (((t + 1e-9) / dt).floor() + 1.0) * dt,
            None => f64::INFINITY,
        };
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(case_label("r", 5.0, BcKind::Msd), "r05_msd");
        assert_eq!(case_label("d", 12.5, BcKind::L0), "d12.5_l0");
        assert_eq!(case_label("r", 25.0, BcKind::OneSided), "r25_1sd");
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(points_for(-5.0, 5.0, 0.1), 101);
        assert_eq!(points_for(-15.0, 40.0, 0.1), 551);
        let g = centered_grid(2, 10.0, None, 0.25).unwrap();
        assert_eq!(g.shape(), &[81, 81]);
        assert!((g.origin()[0] + 10.0).abs() < 1e-12);
        let g = centered_grid(2, 0.0, Some(120), 0.25).unwrap();
        assert_eq!(g.shape(), &[120, 120]);
    }

    #[test]
    fn snapshot_clock() {
        let mut c = SnapshotClock::new(Some(1.0));
        let hits: Vec<f64> = (0..=30).map(|n| n as f64 * 0.1).filter(|&t| c.due(t)).collect();
        assert_eq!(hits.len(), 4);
        let mut c = SnapshotClock::new(None);
        assert!(c.due(0.0));
        assert!(!c.due(5.0));
    }

    #[test]
    fn exit_code_precedence() {
        let mut r = Report {
            config: ExperimentConfig::defaults(Experiment::VortexPair),
            runs: vec![RunSummary::default(), RunSummary::default()],
        };
        assert_eq!(r.exit_code(), 0);
        r.runs[0].vortex_lost = true;
        assert_eq!(r.exit_code(), EXIT_VORTEX_LOST);
        r.runs[1].blew_up = true;
        assert_eq!(r.exit_code(), EXIT_BLOWUP);
    }
}
