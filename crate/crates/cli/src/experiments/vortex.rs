//! Two-dimensional vortex experiments: a steady single vortex and an
//! orbiting co-rotating pair.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use msd_nlse::analysis::{
    boundary_mod2_drift, component_error_field, radius_deviation, rotation_period, track_vortices, ErrorSeries,
    VortexTrack,
};
use msd_nlse::field::{ComplexField, Grid};
use msd_nlse::integrate::{Stepper, StepperConfig};
use msd_nlse::nlse::NlseParams;
use msd_nlse::solutions::{make_multi_vortex, make_vortex_field, solve_radial_profile, RadialProfile, VortexSpec};
use msd_nlse::C64;

use super::{case_label, centered_grid, drive, make_bc, resolve_k, RunSummary, SnapshotClock};
use crate::config::{BcKind, ExperimentConfig};
use crate::output::{self, num, snapshot_stem};

/// Farthest grid point from the origin.
fn reach(grid: &Grid) -> f64 {
    let lo = grid.origin();
    let hi = grid.upper();
    (0..grid.dim()).map(|ax| lo[ax].abs().max(hi[ax].abs()).powi(2)).sum::<f64>().sqrt()
}

/// Newton-refined radial profile tabulated out to at least `radius`.
pub fn vortex_profile(cfg: &ExperimentConfig, radius: f64) -> Result<RadialProfile> {
    let radius = radius + 5.0;
    let n = (radius / cfg.profile_dr).ceil() as usize;
    Ok(solve_radial_profile(cfg.m, cfg.omega, cfg.a, cfg.s, n as f64 * cfg.profile_dr, n)?)
}

/// Grids of the sweep: one per size, or the single `points` grid.
fn grids(cfg: &ExperimentConfig, sizes: &[f64]) -> Result<Vec<(f64, Grid)>> {
    match cfg.points {
        Some(n) => {
            let g = centered_grid(2, 0.0, Some(n), cfg.h)?;
            Ok(vec![(-g.origin()[0], g)])
        }
        None => sizes.iter().map(|&s| Ok((s, centered_grid(2, s, None, cfg.h)?))).collect(),
    }
}

fn shared_profile(cfg: &ExperimentConfig, grids: &[(f64, Grid)], offset: f64, out: &Path) -> Result<Arc<RadialProfile>> {
    let far = grids.iter().map(|(_, g)| reach(g)).fold(0.0, f64::max) + offset;
    let profile = vortex_profile(cfg, far)?;
    output::write_profile(&out.join("profile.csv"), &profile)?;
    Ok(Arc::new(profile))
}

/// Single charge-`m` vortex at the grid center; `|Ψ|²` error against the
/// initial state and drift of the tracked core.
pub fn run_vortex_single(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let cases = grids(cfg, &cfg.r)?;
    let profile = shared_profile(cfg, &cases, 0.0, out)?;
    let params = NlseParams::new(cfg.a, cfg.s)?;
    let rho = cfg.rho();
    let mut runs = Vec::new();
    for (size, grid) in &cases {
        let spec = VortexSpec {
            charge: cfg.m,
            center: [0.0, 0.0],
            profile: profile.clone(),
        };
        let initial = make_vortex_field(grid, &spec)?;
        for &kind in &cfg.bc {
            runs.push(single_case(cfg, &params, &initial, rho, *size, kind, out)?);
        }
    }
    Ok(runs)
}

fn single_case(
    cfg: &ExperimentConfig,
    params: &NlseParams,
    initial: &ComplexField,
    rho: f64,
    size: f64,
    kind: BcKind,
    out: &Path,
) -> Result<RunSummary> {
    let grid = *initial.grid();
    let label = case_label("r", size, kind);
    let dir = out.join(&label);
    fs::create_dir_all(&dir)?;
    let bc = make_bc(kind, None)?;
    let k = resolve_k(cfg.k, initial, params, &bc);
    let mut stepper = Stepper::new(grid, StepperConfig::rk4(k)?);
    let map = stepper.map().clone();
    let core0 = track_vortices(initial, 1, rho)?[0];
    let mut psi = initial.clone();
    let mut series = ErrorSeries::default();
    let mut drift: f64 = 0.0;
    let mut wall_drift: f64 = 0.0;
    let mut clock = SnapshotClock::new(cfg.snapshot_every);
    let mut io_error = None;
    let d = drive(&mut stepper, &mut psi, params, &bc, cfg.tend, cfg.sample_every, |_, t, psi| {
        // steady state: the initial field rotating at frequency Ω
        let rot = C64::from_polar(1.0, cfg.omega * t);
        let reference = ComplexField::from_values(grid, initial.values().iter().map(|z| z * rot).collect())
            .expect("same grid");
        series.push(t, component_error_field(psi, &reference));
        wall_drift = wall_drift.max(boundary_mod2_drift(initial, psi, &map));
        if clock.due(t) {
            if let Err(e) = output::write_snapshot(&dir, &snapshot_stem(t), psi, rho) {
                io_error.get_or_insert(e);
            }
        }
        let core = track_vortices(psi, 1, rho).map_err(|e| e.to_string())?[0];
        drift = drift.max((core[0] - core0[0]).hypot(core[1] - core0[1]));
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    output::write_snapshot(&dir, &snapshot_stem(d.t), &psi, rho)?;
    output::write_errors(&dir.join("errors.csv"), &series)?;
    output::write_state(&dir.join("state_final.csv"), &psi)?;
    let mut run = RunSummary::on_grid(label, Some(kind), Some(size), &grid, k);
    run.record_stop(&d);
    run.err_component_avg = Some(series.component_avg());
    run.err_mod2_max = Some(series.max_mod2());
    run.metrics.insert("center_drift".into(), drift);
    run.metrics.insert("boundary_mod2_drift".into(), wall_drift);
    Ok(run)
}

/// Two equal-charge vortices, each `separation` from the grid center on
/// opposite sides; their orbit radius about the center is tracked.
pub fn run_vortex_pair(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let cases = grids(cfg, &cfg.d)?;
    let offset = cfg.separation;
    let profile = shared_profile(cfg, &cases, offset, out)?;
    let params = NlseParams::new(cfg.a, cfg.s)?;
    let rho = cfg.rho();
    let mut runs = Vec::new();
    for (size, grid) in &cases {
        let specs: Vec<VortexSpec> = [-offset, offset]
            .iter()
            .map(|&x| VortexSpec {
                charge: cfg.m,
                center: [x, 0.0],
                profile: profile.clone(),
            })
            .collect();
        let initial = make_multi_vortex(grid, &specs, rho)?;
        for &kind in &cfg.bc {
            runs.push(pair_case(cfg, &params, &initial, rho, *size, kind, out)?);
        }
    }
    Ok(runs)
}

fn pair_case(
    cfg: &ExperimentConfig,
    params: &NlseParams,
    initial: &ComplexField,
    rho: f64,
    size: f64,
    kind: BcKind,
    out: &Path,
) -> Result<RunSummary> {
    let grid = *initial.grid();
    let label = case_label("d", size, kind);
    let dir = out.join(&label);
    fs::create_dir_all(&dir)?;
    let bc = make_bc(kind, None)?;
    let k = resolve_k(cfg.k, initial, params, &bc);
    let mut stepper = Stepper::new(grid, StepperConfig::rk4(k)?);
    let mut psi = initial.clone();
    let mut track = VortexTrack::default();
    let mut clock = SnapshotClock::new(cfg.snapshot_every);
    let mut io_error = None;
    let d = drive(&mut stepper, &mut psi, params, &bc, cfg.tend, cfg.sample_every, |_, t, psi| {
        if clock.due(t) {
            if let Err(e) = output::write_snapshot(&dir, &snapshot_stem(t), psi, rho) {
                io_error.get_or_insert(e);
            }
        }
        let found = track_vortices(psi, 2, rho).map_err(|e| e.to_string())?;
        track.push(t, &found);
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    output::write_snapshot(&dir, &snapshot_stem(d.t), &psi, rho)?;
    output::write_state(&dir.join("state_final.csv"), &psi)?;
    write_track(&dir.join("track.csv"), &track)?;
    let mut run = RunSummary::on_grid(label, Some(kind), Some(size), &grid, k);
    run.record_stop(&d);
    if !track.is_empty() {
        run.metrics.insert("radius_deviation".into(), radius_deviation(&track, [0.0, 0.0]));
        let xs: Vec<f64> = track.positions[0].iter().map(|p| p[0]).collect();
        if let Some(p) = rotation_period(&track.times, &xs, 0.0) {
            run.metrics.insert("period".into(), p);
        }
        let lo = grid.origin();
        let hi = grid.upper();
        let wall = track
            .positions
            .iter()
            .flatten()
            .map(|p| (p[0] - lo[0]).min(hi[0] - p[0]).min(p[1] - lo[1]).min(hi[1] - p[1]))
            .fold(f64::INFINITY, f64::min);
        run.metrics.insert("min_wall_distance".into(), wall);
    }
    Ok(run)
}

/// `t, x_0, y_0, radius_0, x_1, y_1, radius_1, ...` with radii measured
/// from the grid center.
pub fn write_track(path: &Path, track: &VortexTrack) -> Result<()> {
    let n = track.positions.len();
    let mut header = vec!["t".to_string()];
    for v in 0..n {
        header.extend([format!("x_{v}"), format!("y_{v}"), format!("radius_{v}")]);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..track.len()).map(|i| {
        let mut row = vec![num(track.times[i])];
        for series in &track.positions {
            let p = series[i];
            row.extend([num(p[0]), num(p[1]), num(p[0].hypot(p[1]))]);
        }
        row
    });
    output::write_table(path, &header_refs, rows)
}
