//! Dark-soliton domain-size sweeps in one dimension.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use msd_nlse::analysis::{boundary_mod2_drift, component_error, ErrorSeries};
use msd_nlse::field::{ComplexField, Grid};
use msd_nlse::integrate::{Stepper, StepperConfig};
use msd_nlse::nlse::NlseParams;
use msd_nlse::solutions::{DarkSoliton, SolitonParams};

use super::{case_label, drive, make_bc, points_for, resolve_k, RunSummary};
use crate::config::{BcKind, ExperimentConfig};
use crate::output;

/// Stationary soliton on `[−r, r]` for every `(r, bc)`.
pub fn run_soliton_static(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    sweep(cfg, out)
}

/// Moving soliton on `[−r, r + cT]` (mirrored for `c < 0`) so that it ends
/// a distance `r` from the leading edge.
pub fn run_soliton_moving(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    sweep(cfg, out)
}

/// Domain `[lower, upper]` for radius `r`.
pub fn domain(r: f64, c: f64, tend: f64) -> (f64, f64) {
    let travel = c * tend;
    if travel >= 0.0 {
        (-r, r + travel)
    } else {
        (-r + travel, r)
    }
}

fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let sp = SolitonParams::new(cfg.c, cfg.omega, cfg.a, cfg.s)?;
    let sol = DarkSoliton::new(sp);
    let params = NlseParams::new(cfg.a, cfg.s)?;
    let mut runs = Vec::new();
    for &r in &cfg.r {
        let (lower, upper) = domain(r, cfg.c, cfg.tend);
        let grid = Grid::uniform(&[points_for(lower, upper, cfg.h)], cfg.h, &[lower])?;
        for &bc in &cfg.bc {
            runs.push(run_case(cfg, &sol, &params, &grid, r, bc, out)?);
        }
    }
    Ok(runs)
}

fn run_case(
    cfg: &ExperimentConfig,
    sol: &DarkSoliton,
    params: &NlseParams,
    grid: &Grid,
    r: f64,
    kind: BcKind,
    out: &Path,
) -> Result<RunSummary> {
    let label = case_label("r", r, kind);
    let dir = out.join(&label);
    fs::create_dir_all(&dir)?;
    let bc = make_bc(kind, Some(Arc::new(*sol)))?;
    let mut psi = ComplexField::from_fn(*grid, |x| sol.value(x[0], 0.0));
    let initial = psi.clone();
    let k = resolve_k(cfg.k, &psi, params, &bc);
    let mut stepper = Stepper::new(*grid, StepperConfig::rk4(k)?);
    let map = stepper.map().clone();
    let mut series = ErrorSeries::default();
    let mut drift: f64 = 0.0;
    let reference = |x: [f64; 3], t: f64| sol.value(x[0], t);
    let d = drive(&mut stepper, &mut psi, params, &bc, cfg.tend, cfg.sample_every, |_, t, psi| {
        series.push(t, component_error(psi, &reference, t));
        drift = drift.max(boundary_mod2_drift(&initial, psi, &map));
        Ok(())
    });
    output::write_errors(&dir.join("errors.csv"), &series)?;
    output::write_state(&dir.join("state_final.csv"), &psi)?;
    let mut run = RunSummary::on_grid(label, Some(kind), Some(r), grid, k);
    run.record_stop(&d);
    run.err_component_avg = Some(series.component_avg());
    run.err_mod2_max = Some(series.max_mod2());
    run.metrics.insert("err_real_max".into(), series.max_real());
    run.metrics.insert("err_imag_max".into(), series.max_imag());
    run.metrics.insert("boundary_mod2_drift".into(), drift);
    Ok(run)
}
