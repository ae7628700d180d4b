//! Boundary conditions. Each strategy fills the boundary entries of a time
//! derivative `Ψ_t` whose interior entries were already produced by the
//! interior scheme of the same stage.
//!
//! The modulus-squared Dirichlet (MSD) condition assigns
//!
//! ```text
//! Ψ_t,b = i Im[Ψ_t,b-1 / Ψ_b-1] Ψ_b
//! ```
//!
//! so that the boundary value only rotates in phase, at the (real) frequency
//! read off its inward neighbour. The real part of the ratio is discarded;
//! keeping it would let round-off drive exponential growth of `|Ψ_b|`.

use std::fmt;
use std::sync::Arc;

use crate::field::{BoundaryMap, Grid};
use crate::nlse::{nonlinear_term, rhs_point, NlseParams};
use crate::{Error, Result, C64};

/// Default threshold on `|Ψ_b-1|²` below which MSD falls back to holding
/// the boundary value fixed.
pub const DEFAULT_EPS_SING: f64 = 1e-12;

/// A closed-form solution used by the exact boundary condition.
pub trait ExactSolution: Send + Sync + fmt::Debug {
    fn eval(&self, x: [f64; 3], t: f64) -> C64;
    /// Analytic `∂Ψ/∂t`.
    fn eval_dt(&self, x: [f64; 3], t: f64) -> C64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdOptions {
    pub eps_sing: f64,
    /// Use this constant frequency instead of the one measured at `b-1`.
    pub frozen_omega: Option<f64>,
}

impl Default for MsdOptions {
    fn default() -> Self {
        Self {
            eps_sing: DEFAULT_EPS_SING,
            frozen_omega: None,
        }
    }
}

/// How the exact condition feeds the closed-form solution in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Injection {
    /// Boundary derivative is the analytic `∂Ψ/∂t` at every stage.
    #[default]
    Derivative,
    /// Boundary derivative is zero during the stages and the boundary values
    /// are overwritten with the solution after each full step.
    Overwrite,
}

#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    Msd(MsdOptions),
    LaplacianZero,
    /// One-sided second-order Laplacian; 1D only.
    OneSided2,
    ExactDirichlet {
        solution: Arc<dyn ExactSolution>,
        injection: Injection,
    },
    /// `Ψ_t,b = 0`: boundary values stay at their initial values.
    ZeroDirichlet,
}

impl BoundaryCondition {
    pub fn msd() -> Self {
        BoundaryCondition::Msd(MsdOptions::default())
    }

    pub fn exact(solution: Arc<dyn ExactSolution>) -> Self {
        BoundaryCondition::ExactDirichlet {
            solution,
            injection: Injection::Derivative,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Msd(_) => "msd",
            BoundaryCondition::LaplacianZero => "l0",
            BoundaryCondition::OneSided2 => "1sd",
            BoundaryCondition::ExactDirichlet { .. } => "exact",
            BoundaryCondition::ZeroDirichlet => "zero",
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            BoundaryCondition::OneSided2 if grid.dim() != 1 => Err(Error::UnsupportedDimension {
                what: "one-sided boundary condition",
                expected: 1,
                got: grid.dim(),
            }),
            BoundaryCondition::Msd(o) if !(o.eps_sing >= 0.0) => {
                Err(Error::InvalidParams(format!("eps_sing = {} must be nonnegative", o.eps_sing)))
            }
            _ => Ok(()),
        }
    }

    /// False for conditions tied to an absolute reference (the exact
    /// solution), for which stepping is not covariant under a global phase.
    pub fn is_gauge_covariant(&self) -> bool {
        !matches!(self, BoundaryCondition::ExactDirichlet { .. })
    }

    /// Fills the boundary entries of `psi_t`. Interior entries, in particular
    /// every `b-1`, must already hold the interior right-hand side.
    pub fn fill(
        &self,
        grid: &Grid,
        map: &BoundaryMap,
        psi: &[C64],
        psi_t: &mut [C64],
        params: &NlseParams,
        t: f64,
    ) -> Result<()> {
        match self {
            BoundaryCondition::Msd(o) => match o.frozen_omega {
                Some(omega) => msd_frozen_fill(map, psi, psi_t, omega),
                None => msd_fill(map, psi, psi_t, o.eps_sing),
            },
            BoundaryCondition::LaplacianZero => l0_apply(psi, psi_t, map, params),
            BoundaryCondition::OneSided2 => one_sided_apply(grid, psi, psi_t, params)?,
            BoundaryCondition::ExactDirichlet { solution, injection } => match injection {
                Injection::Derivative => exact_apply(grid, psi_t, map, solution.as_ref(), t),
                Injection::Overwrite => {
                    for &(b, _) in &map.pairs {
                        psi_t[b] = C64::new(0.0, 0.0);
                    }
                }
            },
            BoundaryCondition::ZeroDirichlet => {
                for &(b, _) in &map.pairs {
                    psi_t[b] = C64::new(0.0, 0.0);
                }
            }
        }
        Ok(())
    }

    /// Hook run once after every full step at the new time.
    pub fn after_step(&self, grid: &Grid, map: &BoundaryMap, psi: &mut [C64], t: f64) {
        if let BoundaryCondition::ExactDirichlet {
            solution,
            injection: Injection::Overwrite,
        } = self
        {
            for &(b, _) in &map.pairs {
                psi[b] = solution.eval(grid.coord(b), t);
            }
        }
    }
}

/// Per-pair boundary frequency `Ω̃ = Im[Ψ_t,b-1 / Ψ_b-1]`, in the order of
/// `BoundaryMap::pairs`. Zero where the singular fallback was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRate {
    pub omega_tilde: Vec<f64>,
}

impl BoundaryRate {
    pub fn max_abs(&self) -> f64 {
        self.omega_tilde.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

// Allocation-free MSD used inside the steppers; same arithmetic as the
// split form.
fn msd_fill(map: &BoundaryMap, psi: &[C64], psi_t: &mut [C64], eps_sing: f64) {
    for &(b, inner) in &map.pairs {
        let p = psi[inner];
        let den = p.norm_sqr();
        let omega = if den > eps_sing {
            let pt = psi_t[inner];
            (pt.im * p.re - pt.re * p.im) / den
        } else {
            0.0
        };
        let pb = psi[b];
        psi_t[b] = C64::new(-omega * pb.im, omega * pb.re);
    }
}

fn msd_frozen_fill(map: &BoundaryMap, psi: &[C64], psi_t: &mut [C64], omega: f64) {
    for &(b, _) in &map.pairs {
        let pb = psi[b];
        psi_t[b] = C64::new(-omega * pb.im, omega * pb.re);
    }
}

/// Complex-arithmetic MSD: `Ψ_t,b = i Im[Ψ_t,b-1/Ψ_b-1] Ψ_b`, falling back to
/// `Ψ_t,b = 0` when `|Ψ_b-1|² ≤ eps_sing`.
pub fn msd_apply(psi: &[C64], psi_t: &mut [C64], map: &BoundaryMap, eps_sing: f64) -> BoundaryRate {
    let mut omega_tilde = vec![0.0; map.pairs.len()];
    for (n, &(b, inner)) in map.pairs.iter().enumerate() {
        let p = psi[inner];
        if p.norm_sqr() > eps_sing {
            let w = (psi_t[inner] / p).im;
            psi_t[b] = C64::i() * w * psi[b];
            omega_tilde[n] = w;
        } else {
            psi_t[b] = C64::new(0.0, 0.0);
        }
    }
    BoundaryRate { omega_tilde }
}

/// MSD on separate real and imaginary arrays, using only real arithmetic:
///
/// ```text
/// Ω̃ = (Ψ^I_t,b-1 Ψ^R_b-1 − Ψ^R_t,b-1 Ψ^I_b-1) / ((Ψ^R_b-1)² + (Ψ^I_b-1)²)
/// Ψ^R_t,b = −Ω̃ Ψ^I_b,   Ψ^I_t,b = Ω̃ Ψ^R_b
/// ```
pub fn msd_apply_split(
    psi_re: &[f64],
    psi_im: &[f64],
    psi_t_re: &mut [f64],
    psi_t_im: &mut [f64],
    map: &BoundaryMap,
    eps_sing: f64,
) -> BoundaryRate {
    let mut omega_tilde = vec![0.0; map.pairs.len()];
    for (n, &(b, inner)) in map.pairs.iter().enumerate() {
        let den = psi_re[inner] * psi_re[inner] + psi_im[inner] * psi_im[inner];
        let w = if den > eps_sing {
            (psi_t_im[inner] * psi_re[inner] - psi_t_re[inner] * psi_im[inner]) / den
        } else {
            0.0
        };
        psi_t_re[b] = -w * psi_im[b];
        psi_t_im[b] = w * psi_re[b];
        omega_tilde[n] = w;
    }
    BoundaryRate { omega_tilde }
}

/// Boundary values of `∇²Ψ` implied by MSD for the NLSE, one per pair:
///
/// ```text
/// ∇²Ψ_b = [A + (N_b-1 − N_b)/a] Ψ_b,
/// A = (∇²Ψ^R_b-1 Ψ^R_b-1 + ∇²Ψ^I_b-1 Ψ^I_b-1) / |Ψ_b-1|²
/// ```
///
/// `lap` must hold `∇²Ψ` at every `b-1`. In the singular case the returned
/// value makes the NLSE right-hand side vanish at `b`, matching the fallback
/// of [`msd_apply`].
pub fn msd_laplacian(
    psi: &[C64],
    lap: &[C64],
    map: &BoundaryMap,
    params: &NlseParams,
    eps_sing: f64,
) -> Vec<C64> {
    let a = params.a();
    map.pairs
        .iter()
        .map(|&(b, inner)| {
            let p = psi[inner];
            let pb = psi[b];
            let n_b = params.nonlinear_at(pb, b);
            let den = p.norm_sqr();
            if den > eps_sing {
                let l = lap[inner];
                let big_a = (l.re * p.re + l.im * p.im) / den;
                let n_inner = params.nonlinear_at(p, inner);
                pb * (big_a + (n_inner - n_b) / a)
            } else {
                -pb * n_b / a
            }
        })
        .collect()
}

/// 1D MSD Laplacian with the central-difference stencil at `b-1` expanded:
///
/// ```text
/// ∇²Ψ_b = { [Im(i (Ψ_b + Ψ_b-2)/Ψ_b-1) − 2] / h² + (N_b-1 − N_b)/a } Ψ_b
/// ```
pub fn msd_laplacian_1d_expanded(
    psi_b: C64,
    psi_b1: C64,
    psi_b2: C64,
    n_b: f64,
    n_b1: f64,
    a: f64,
    h: f64,
) -> C64 {
    let ratio = C64::i() * (psi_b + psi_b2) / psi_b1;
    psi_b * ((ratio.im - 2.0) / (h * h) + (n_b1 - n_b) / a)
}

/// Laplacian-zero: the boundary derivative is the right-hand side with the
/// Laplacian dropped, `Ψ_t,b = i (s|Ψ_b|² − V_b) Ψ_b`.
pub fn l0_apply(psi: &[C64], psi_t: &mut [C64], map: &BoundaryMap, params: &NlseParams) {
    for &(b, _) in &map.pairs {
        let pb = psi[b];
        let n = nonlinear_term(pb, params.v_at(b), params.s());
        psi_t[b] = C64::new(-n * pb.im, n * pb.re);
    }
}

/// One-sided second-order second derivative at the left end of `v`
/// (`v[0]` is the boundary point). Mirror the slice for the right end.
#[inline]
pub fn one_sided_second_derivative(v: [C64; 4], h: f64) -> C64 {
    (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) / (h * h)
}

/// One-sided boundary Laplacian `(−Ψ_b-3 + 4Ψ_b-2 − 5Ψ_b-1 + 2Ψ_b)/h²` at
/// both ends of a 1D grid, then the full right-hand side.
pub fn one_sided_apply(grid: &Grid, psi: &[C64], psi_t: &mut [C64], params: &NlseParams) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            what: "one-sided boundary condition",
            expected: 1,
            got: grid.dim(),
        });
    }
    let n = psi.len();
    let h = grid.spacing()[0];
    let left = one_sided_second_derivative([psi[0], psi[1], psi[2], psi[3]], h);
    let right = one_sided_second_derivative([psi[n - 1], psi[n - 2], psi[n - 3], psi[n - 4]], h);
    psi_t[0] = rhs_point(psi[0], left, params.v_at(0), params);
    psi_t[n - 1] = rhs_point(psi[n - 1], right, params.v_at(n - 1), params);
    Ok(())
}

/// Exact condition: boundary derivative from the analytic `∂Ψ/∂t`.
pub fn exact_apply(grid: &Grid, psi_t: &mut [C64], map: &BoundaryMap, solution: &dyn ExactSolution, t: f64) {
    for &(b, _) in &map.pairs {
        psi_t[b] = solution.eval_dt(grid.coord(b), t);
    }
}
