//! Time-step stability: analytic bounds against blow-up thresholds found by
//! bisection.

use std::path::Path;

use anyhow::Result;
use msd_nlse::bc::BoundaryCondition;
use msd_nlse::field::{boundary_map, ComplexField, Grid};
use msd_nlse::integrate::{
    full_stability_bound_of, is_recommended, linear_stability_bound, recommended_timestep, stability_inputs,
    Stepper, StepperConfig,
};
use msd_nlse::nlse::{rhs_interior, NlseParams};
use msd_nlse::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{centered_grid, RunSummary};
use crate::config::{ExperimentConfig, TimeStep};
use crate::output::{self, num};

/// Relative precision of the bisected threshold.
const BISECTION_TOL: f64 = 1e-4;

/// True if `steps` steps of size `k` drive `max|Ψ|` above `threshold`.
pub fn blows_up(
    initial: &ComplexField,
    params: &NlseParams,
    bc: &BoundaryCondition,
    k: f64,
    steps: usize,
    threshold: f64,
) -> bool {
    let mut config = StepperConfig::rk4(k).expect("positive step");
    config.blowup_threshold = threshold;
    let mut stepper = Stepper::new(*initial.grid(), config);
    let mut psi = initial.clone();
    (0..steps).any(|n| stepper.step(&mut psi, n as f64 * k, params, bc).is_err())
}

/// Smallest step (to [`BISECTION_TOL`]) in `[lo, hi]` that blows up, given
/// that `lo` survives and `hi` does not.
pub fn bisect_threshold(mut lo: f64, mut hi: f64, mut unstable: impl FnMut(f64) -> bool) -> Option<f64> {
    if unstable(lo) || !unstable(hi) {
        return None;
    }
    while (hi - lo) > BISECTION_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if unstable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn noise(grid: &Grid, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..grid.len())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amplitude)
        .collect()
}

fn threshold_case(
    label: &str,
    grid: &Grid,
    initial: &ComplexField,
    params: &NlseParams,
    bc: &BoundaryCondition,
    bound: f64,
    steps: usize,
    blowup: f64,
) -> RunSummary {
    let empirical = bisect_threshold(0.5 * bound, 1.5 * bound, |k| blows_up(initial, params, bc, k, steps, blowup));
    let mut run = RunSummary::on_grid(label.into(), None, None, grid, bound);
    run.steps = steps;
    run.metrics.insert("analytic_bound".into(), bound);
    match empirical {
        Some(k) => {
            run.metrics.insert("empirical_threshold".into(), k);
            run.metrics.insert("ratio".into(), k / bound);
        }
        None => run.note = "threshold not bracketed by [0.5, 1.5] x bound".into(),
    }
    run
}

/// Four cases: the 1D linear equation with fixed boundary values, a 1D
/// uniform background with MSD, a survival run of that background at the
/// recommended step, and the MSD boundary terms of a 2D background.
pub fn run_stability_check(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.r.first().copied().unwrap_or(5.0);
    let grid = centered_grid(1, half, cfg.points, cfg.h)?;
    let rho = cfg.rho();
    let mut runs = Vec::new();

    let linear = NlseParams::new(cfg.a, 0.0)?;
    let seed_field = ComplexField::from_values(grid, noise(&grid, 1.0, &mut rng))?;
    let bound = linear_stability_bound(cfg.h, cfg.a, 1);
    runs.push(threshold_case(
        "linear-1d",
        &grid,
        &seed_field,
        &linear,
        &BoundaryCondition::ZeroDirichlet,
        bound,
        cfg.steps,
        1e3,
    ));

    let params = NlseParams::new(cfg.a, cfg.s)?;
    let msd = BoundaryCondition::msd();
    let amp = rho.sqrt();
    let ripple = noise(&grid, 1e-6 * amp, &mut rng);
    let background = ComplexField::from_values(grid, ripple.iter().map(|z| z + amp).collect())?;
    let full = full_stability_bound_of(&background, &params, &msd);
    runs.push(threshold_case(
        "background-1d",
        &grid,
        &background,
        &params,
        &msd,
        full,
        cfg.steps,
        10.0 * amp,
    ));

    let k = match cfg.k {
        TimeStep::Fixed(k) => k,
        TimeStep::Auto(_) => recommended_timestep(full),
    };
    let mut run = RunSummary::on_grid("survival-1d".into(), None, None, &grid, k);
    let mut stepper = Stepper::new(grid, StepperConfig::rk4(k)?);
    let mut psi = background.clone();
    run.steps = cfg.survive_steps;
    for n in 0..cfg.survive_steps {
        if let Err(e) = stepper.step(&mut psi, n as f64 * k, &params, &msd) {
            run.blew_up = true;
            run.steps = n + 1;
            run.note = e.to_string();
            break;
        }
    }
    run.t_reached = run.steps as f64 * k;
    run.metrics.insert("analytic_bound".into(), full);
    run.metrics.insert("recommended".into(), if is_recommended(k, full) { 1.0 } else { 0.0 });
    run.metrics.insert("max_abs".into(), psi.max_abs());
    runs.push(run);

    let grid2 = centered_grid(2, 0.0, Some(grid.shape()[0].min(41)), cfg.h)?;
    let flat = ComplexField::from_fn(grid2, |_| C64::new(amp, 0.0));
    let flat_t = rhs_interior(&flat, &params, 0.0);
    let inputs = stability_inputs(&flat, &flat_t, &params, &boundary_map(&grid2), &msd, cfg.h);
    let b_max = inputs.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l_max = inputs
        .l
        .iter()
        .flat_map(|l| inputs.g.iter().map(move |g| (l - g).abs()))
        .fold(0.0f64, f64::max);
    let mut run = RunSummary::on_grid("msd-terms-2d".into(), None, None, &grid2, inputs.bound(cfg.h, cfg.a));
    run.metrics.insert("b_max".into(), b_max);
    run.metrics.insert("l_minus_g_max".into(), l_max);
    run.metrics.insert("analytic_bound".into(), inputs.bound(cfg.h, cfg.a));
    run.metrics.insert("linear_bound".into(), linear_stability_bound(cfg.h, cfg.a, 2));
    runs.push(run);

    output::write_table(
        &out.join("stability.csv"),
        &["case", "analytic_bound", "empirical_threshold", "ratio"],
        runs.iter().map(|r| {
            vec![
                r.label.clone(),
                num(r.metric("analytic_bound").unwrap_or(f64::NAN)),
                output::opt_num(r.metric("empirical_threshold")),
                output::opt_num(r.metric("ratio")),
            ]
        }),
    )?;
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_step_function_edge() {
        let edge = 0.7071;
        let k = bisect_threshold(0.3, 1.2, |k| k > edge).unwrap();
        assert!((k - edge).abs() <= BISECTION_TOL * 1.2);
        assert!(bisect_threshold(0.8, 1.2, |k| k > edge).is_none());
        assert!(bisect_threshold(0.1, 0.5, |k| k > edge).is_none());
    }
}
