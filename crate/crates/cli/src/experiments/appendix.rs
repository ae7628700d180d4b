//! Forward Euler with MSD at both ends of a 1D grid: the minimal loop
//! `Ut = F(U); Ut(1) = ...; Ut(end) = ...; U = k*Ut + U`.

use std::path::Path;

use anyhow::Result;
use msd_nlse::bc::BoundaryCondition;
use msd_nlse::field::{ComplexField, Grid};
use msd_nlse::integrate::{Stepper, StepperConfig};
use msd_nlse::nlse::NlseParams;
use msd_nlse::solutions::{DarkSoliton, SolitonParams};

use super::{points_for, RunSummary};
use crate::config::{ExperimentConfig, TimeStep};
use crate::output;

/// Grid and dark-soliton initial state of the demo.
pub fn initial_state(cfg: &ExperimentConfig) -> Result<ComplexField> {
    let r = cfg.r.first().copied().unwrap_or(10.0);
    let grid = Grid::uniform(&[points_for(-r, r, cfg.h)], cfg.h, &[-r])?;
    let sol = DarkSoliton::new(SolitonParams::new(cfg.c, cfg.omega, cfg.a, cfg.s)?);
    Ok(ComplexField::from_fn(grid, |x| sol.value(x[0], 0.0)))
}

/// `steps` Euler steps of size `k` from `psi`.
pub fn euler_msd(psi: &mut ComplexField, params: &NlseParams, k: f64, steps: usize) -> Result<()> {
    let mut stepper = Stepper::new(*psi.grid(), StepperConfig::euler(k)?);
    let bc = BoundaryCondition::msd();
    for n in 0..steps {
        stepper.step(psi, n as f64 * k, params, &bc)?;
    }
    Ok(())
}

pub fn run_appendix_demo(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let k = match cfg.k {
        TimeStep::Fixed(k) => k,
        TimeStep::Auto(_) => anyhow::bail!("appendix-demo needs a fixed time step"),
    };
    let mut psi = initial_state(cfg)?;
    let params = NlseParams::new(cfg.a, cfg.s)?;
    let before: Vec<f64> = [0, psi.values().len() - 1].iter().map(|&b| psi.values()[b].norm_sqr()).collect();
    let mut run = RunSummary::on_grid("euler_msd".into(), None, cfg.r.first().copied(), psi.grid(), k);
    match euler_msd(&mut psi, &params, k, cfg.steps) {
        Ok(()) => run.steps = cfg.steps,
        Err(e) => {
            run.blew_up = true;
            run.note = e.to_string();
        }
    }
    run.t_reached = run.steps as f64 * k;
    let last = psi.values().len() - 1;
    let drift = (psi.values()[0].norm_sqr() - before[0]).abs().max((psi.values()[last].norm_sqr() - before[1]).abs());
    run.metrics.insert("boundary_mod2_drift".into(), drift);
    output::write_state(&out.join("state_final.csv"), &psi)?;
    Ok(vec![run])
}
