//! Vortex ring in three dimensions, free and held in place by a back-flow.
//!
//! The ring lies in a plane of constant `z` and travels along `z`. Its cores
//! are tracked in the `y = y_c` cut, where they show up as two density
//! minima at `x_c ± R`.

use std::fs;
use std::path::Path;

use anyhow::Result;
use msd_nlse::analysis::track_vortices;
use msd_nlse::field::{ComplexField, Grid};
use msd_nlse::integrate::{Stepper, StepperConfig};
use msd_nlse::nlse::NlseParams;
use msd_nlse::solutions::{add_backflow, make_vortex_ring};

use super::vortex::vortex_profile;
use super::{centered_grid, drive, make_bc, resolve_k, Drive, RunSummary, SnapshotClock};
use crate::config::{Backflow, BackflowMode, BcKind, ExperimentConfig};
use crate::output::{self, num, snapshot_stem};

/// Ring radius and axial position at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSample {
    pub t: f64,
    pub radius: f64,
    pub axial: f64,
}

/// Locates the ring in the `y` cut through `index`.
pub fn measure_ring(psi: &ComplexField, index: usize, rho: f64) -> msd_nlse::Result<(f64, f64)> {
    let cut = psi.slice_plane(1, index)?;
    let p = track_vortices(&cut, 2, rho)?;
    Ok(((p[0][0] - p[1][0]).abs() / 2.0, (p[0][1] + p[1][1]) / 2.0))
}

/// Least-squares slope of `axial(t)`.
pub fn axial_velocity(samples: &[RingSample]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mt = samples.iter().map(|s| s.t).sum::<f64>() / n;
    let mz = samples.iter().map(|s| s.axial).sum::<f64>() / n;
    let num: f64 = samples.iter().map(|s| (s.t - mt) * (s.axial - mz)).sum();
    let den: f64 = samples.iter().map(|s| (s.t - mt).powi(2)).sum();
    num / den
}

/// The free ring stops once its cores come this close to a z face.
const WALL_MARGIN: f64 = 4.0;

/// Length of each corrective pre-run, in units of `calibration_time`.
const CORRECTION_SPANS: f64 = 6.0;

/// Time average of the axial position over equally spaced samples.
fn mean_axial(samples: &[RingSample]) -> f64 {
    samples.iter().map(|s| s.axial).sum::<f64>() / samples.len().max(1) as f64
}

/// Samples with `from ≤ t ≤ to`.
fn settled(samples: &[RingSample], from: f64, to: f64) -> Vec<RingSample> {
    samples.iter().copied().filter(|s| s.t >= from - 1e-9 && s.t <= to + 1e-9).collect()
}

struct RingSetup {
    grid: Grid,
    initial: ComplexField,
    params: NlseParams,
    cut: usize,
    rho: f64,
}

struct RingRun {
    samples: Vec<RingSample>,
    drive: Drive,
    k: f64,
    psi: ComplexField,
}

fn ring_run(
    cfg: &ExperimentConfig,
    setup: &RingSetup,
    backflow: f64,
    tend: f64,
    kind: BcKind,
    snapshots: Option<&Path>,
) -> Result<RingRun> {
    let bc = make_bc(kind, None)?;
    let mut psi = setup.initial.clone();
    add_backflow(&mut psi, [0.0, 0.0, backflow], cfg.a);
    let k = resolve_k(cfg.k, &psi, &setup.params, &bc);
    let mut stepper = Stepper::new(setup.grid, StepperConfig::rk4(k)?);
    let mut samples = Vec::new();
    let mut clock = SnapshotClock::new(cfg.snapshot_every);
    let mut io_error = None;
    let drive = drive(&mut stepper, &mut psi, &setup.params, &bc, tend, cfg.sample_every, |_, t, psi| {
        if let Some(dir) = snapshots {
            if clock.due(t) {
                if let Err(e) = cut_snapshot(dir, t, psi, setup) {
                    io_error.get_or_insert(e);
                }
            }
        }
        let (radius, axial) = measure_ring(psi, setup.cut, setup.rho).map_err(|e| e.to_string())?;
        samples.push(RingSample { t, radius, axial });
        let (lo, hi) = (setup.grid.origin()[2], setup.grid.upper()[2]);
        if (axial - lo).min(hi - axial) < WALL_MARGIN {
            return Err(format!("ring within {WALL_MARGIN} of a z face at t = {t}"));
        }
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    if let Some(dir) = snapshots {
        cut_snapshot(dir, drive.t, &psi, setup)?;
    }
    Ok(RingRun { samples, drive, k, psi })
}

fn cut_snapshot(dir: &Path, t: f64, psi: &ComplexField, setup: &RingSetup) -> Result<()> {
    let cut = psi.slice_plane(1, setup.cut)?;
    output::write_snapshot(dir, &format!("{}_xz", snapshot_stem(t)), &cut, setup.rho)
}

fn write_ring_track(path: &Path, samples: &[RingSample]) -> Result<()> {
    output::write_table(
        path,
        &["t", "radius", "axial"],
        samples.iter().map(|s| vec![num(s.t), num(s.radius), num(s.axial)]),
    )
}

/// Largest `|q(t) − q(0)|` over the samples.
fn max_change(samples: &[RingSample], q: impl Fn(&RingSample) -> f64) -> f64 {
    match samples.first() {
        Some(first) => samples.iter().map(|s| (q(s) - q(first)).abs()).fold(0.0, f64::max),
        None => 0.0,
    }
}

/// Free ring until it nears a z face or `tend`, then (unless back-flow is
/// `none`) the same ring in a counter-flow. With `auto` the counter-flow
/// speed starts from the negated drift fitted over the last two thirds of
/// `calibration_time` and is refined by two pre-runs: the mean axial offset
/// of a ring drifting at `u` over a span `S` is about `u S / 2`, which gives
/// one correction, and a secant step through both offsets gives the next.
pub fn run_vortex_ring(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let half = cfg.r.first().copied().unwrap_or(0.0);
    let grid = centered_grid(3, half, cfg.points, cfg.h)?;
    let mid = [grid.shape()[0] / 2, grid.shape()[1] / 2, grid.shape()[2] / 2];
    let center = grid.position(mid);
    let far = (0..3).map(|ax| (grid.upper()[ax] - grid.origin()[ax]).powi(2)).sum::<f64>().sqrt();
    let profile = vortex_profile(cfg, far)?;
    output::write_profile(&out.join("profile.csv"), &profile)?;
    let setup = RingSetup {
        initial: make_vortex_ring(&grid, cfg.ring_radius, center, cfg.m, &profile)?,
        params: NlseParams::new(cfg.a, cfg.s)?,
        cut: mid[1],
        rho: cfg.rho(),
        grid,
    };
    let kind = cfg.bc[0];
    let mut runs = Vec::new();

    let dir = out.join("free");
    fs::create_dir_all(&dir)?;
    let free = ring_run(cfg, &setup, 0.0, cfg.tend, kind, Some(&dir))?;
    write_ring_track(&dir.join("track.csv"), &free.samples)?;
    let mut run = RunSummary::on_grid("free".into(), Some(kind), None, &grid, free.k);
    run.record_stop(&free.drive);
    if run.vortex_lost {
        // a free ring is expected to reach the wall
        run.vortex_lost = false;
        run.note = format!("ring left the grid at t = {}", free.drive.t);
    }
    let v_free = axial_velocity(&settled(&free.samples, cfg.calibration_time / 3.0, cfg.calibration_time));
    run.metrics.insert("axial_displacement".into(), max_change(&free.samples, |s| s.axial));
    run.metrics.insert("velocity".into(), v_free);
    if let Some(s) = free.samples.first() {
        run.metrics.insert("initial_radius".into(), s.radius);
    }
    runs.push(run);

    let backflow = match cfg.backflow {
        Backflow::Mode(BackflowMode::None) => return Ok(runs),
        Backflow::Velocity(v) => v,
        Backflow::Mode(BackflowMode::Auto) => {
            let span = CORRECTION_SPANS * cfg.calibration_time;
            let z0 = free.samples.first().map_or(0.0, |s| s.axial);
            let offset = |v: f64| -> Result<f64> {
                let check = ring_run(cfg, &setup, v, span, kind, None)?;
                Ok(mean_axial(&check.samples) - z0)
            };
            let v1 = -v_free;
            let g1 = offset(v1)?;
            let v2 = v1 - 2.0 * g1 / span;
            let g2 = offset(v2)?;
            if g2 != g1 {
                v2 - g2 * (v2 - v1) / (g2 - g1)
            } else {
                v2
            }
        }
    };

    let dir = out.join("backflow");
    fs::create_dir_all(&dir)?;
    let held = ring_run(cfg, &setup, backflow, cfg.tend, kind, Some(&dir))?;
    write_ring_track(&dir.join("track.csv"), &held.samples)?;
    output::write_state(&dir.join("state_final.csv"), &held.psi)?;
    let mut run = RunSummary::on_grid("backflow".into(), Some(kind), None, &grid, held.k);
    run.record_stop(&held.drive);
    run.metrics.insert("backflow_velocity".into(), backflow);
    if let Some(first) = held.samples.first() {
        let r0 = first.radius;
        run.metrics.insert("initial_radius".into(), r0);
        run.metrics.insert("radius_change_pct".into(), 100.0 * max_change(&held.samples, |s| s.radius) / r0);
        run.metrics.insert("axial_change_pct".into(), 100.0 * max_change(&held.samples, |s| s.axial) / r0);
        run.metrics.insert("axial_displacement".into(), max_change(&held.samples, |s| s.axial));
    }
    runs.push(run);
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_linear_drift() {
        let s: Vec<RingSample> = (0..10)
            .map(|i| RingSample {
                t: i as f64 * 0.5,
                radius: 5.0,
                axial: 1.0 - 0.3 * i as f64 * 0.5,
            })
            .collect();
        assert!((axial_velocity(&s) + 0.3).abs() < 1e-12);
        assert_eq!(max_change(&s, |x| x.radius), 0.0);
        assert!((max_change(&s, |x| x.axial) - 1.35).abs() < 1e-12);
    }
}
