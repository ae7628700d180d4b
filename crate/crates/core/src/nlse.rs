//! Equation coefficients and the interior right-hand side
//! `Ψ_t = i (a ∇²Ψ − V Ψ + s |Ψ|² Ψ)`.

use crate::field::{ComplexField, Grid};
use crate::{Error, Result, C64};

/// Coefficients of the NLSE. The potential is sampled once onto the grid;
/// `None` means `V ≡ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NlseParams {
    a: f64,
    s: f64,
    potential: Option<Vec<f64>>,
}

impl NlseParams {
    pub fn new(a: f64, s: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidParams(format!("dispersion a = {a} must be finite and nonzero")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParams(format!("nonlinearity s = {s} must be finite")));
        }
        Ok(Self { a, s, potential: None })
    }

    /// Samples `v` at every point of `grid`.
    pub fn with_potential(mut self, grid: &Grid, v: impl Fn([f64; 3]) -> f64) -> Self {
        self.potential = Some((0..grid.len()).map(|i| v(grid.coord(i))).collect());
        self
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.potential.as_deref()
    }

    #[inline]
    pub fn v_at(&self, i: usize) -> f64 {
        self.potential.as_ref().map_or(0.0, |v| v[i])
    }

    /// `N = s|ψ|² − V` at linear index `i`.
    #[inline]
    pub fn nonlinear_at(&self, psi: C64, i: usize) -> f64 {
        nonlinear_term(psi, self.v_at(i), self.s)
    }
}

/// `s|ψ|² − V`, the local frequency contributed by the nonlinearity and the
/// potential.
#[inline]
pub fn nonlinear_term(psi: C64, v: f64, s: f64) -> f64 {
    s * psi.norm_sqr() - v
}

/// Writes `Ψ_t` at interior points of `out`; boundary entries are left as
/// they were.
pub fn rhs_interior_into(grid: &Grid, psi: &[C64], params: &NlseParams, out: &mut [C64]) {
    debug_assert_eq!(psi.len(), grid.len());
    debug_assert_eq!(out.len(), grid.len());
    match grid.dim() {
        1 => rhs_kernel::<1>(grid, psi, params, out),
        2 => rhs_kernel::<2>(grid, psi, params, out),
        _ => rhs_kernel::<3>(grid, psi, params, out),
    }
}

fn rhs_kernel<const D: usize>(grid: &Grid, psi: &[C64], params: &NlseParams, out: &mut [C64]) {
    let st = grid.strides();
    let sp = grid.spacing();
    let mut w = [0.0; D];
    for ax in 0..D {
        // a is folded into the stencil weights
        w[ax] = params.a / (sp[ax] * sp[ax]);
    }
    let diag = -2.0 * w.iter().sum::<f64>();
    let s = params.s;
    for (start, end) in grid.interior_runs() {
        let n = end - start;
        let c = &psi[start..end];
        let o = &mut out[start..end];
        // neighbour windows aligned with c
        let lo: [&[C64]; D] = std::array::from_fn(|ax| &psi[start - st[ax]..end - st[ax]]);
        let hi: [&[C64]; D] = std::array::from_fn(|ax| &psi[start + st[ax]..end + st[ax]]);
        let v = params.potential.as_deref().map(|v| &v[start..end]);
        for j in 0..n {
            let z = c[j];
            let mut acc = z * diag;
            for ax in 0..D {
                acc += (lo[ax][j] + hi[ax][j]) * w[ax];
            }
            let nl = match v {
                Some(v) => s * z.norm_sqr() - v[j],
                None => s * z.norm_sqr(),
            };
            acc += z * nl;
            // multiply by i
            o[j] = C64::new(-acc.im, acc.re);
        }
    }
}

/// Allocating form of [`rhs_interior_into`]. The equation is autonomous, so
/// `t` does not enter; it is kept for signature symmetry with the steppers.
pub fn rhs_interior(psi: &ComplexField, params: &NlseParams, _t: f64) -> ComplexField {
    let mut out = ComplexField::zeros(*psi.grid());
    rhs_interior_into(psi.grid(), psi.values(), params, out.values_mut());
    out
}

/// Full right-hand side at a single point given its Laplacian value.
#[inline]
pub fn rhs_point(psi: C64, laplacian: C64, v: f64, params: &NlseParams) -> C64 {
    C64::i() * (laplacian * params.a + psi * nonlinear_term(psi, v, params.s))
}
