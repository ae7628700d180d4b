//! Reference solutions and constructed initial conditions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bc::ExactSolution;
use crate::field::{ComplexField, Grid};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub c: f64,
    pub omega: f64,
    pub a: f64,
    pub s: f64,
}

impl SolitonParams {
    /// Requires `Ω/s > 0` (real amplitude) and `−Ω/a > 0` (real width).
    pub fn new(c: f64, omega: f64, a: f64, s: f64) -> Result<Self> {
        if a == 0.0 || s == 0.0 {
            return Err(Error::InvalidParams("soliton needs a ≠ 0 and s ≠ 0".into()));
        }
        if !(omega / s > 0.0) {
            return Err(Error::InvalidParams(format!("Ω/s = {} must be positive", omega / s)));
        }
        if !(-omega / a > 0.0) {
            return Err(Error::InvalidParams(format!("−Ω/a = {} must be positive", -omega / a)));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParams("soliton velocity must be finite".into()));
        }
        Ok(Self { c, omega, a, s })
    }

    pub fn background_density(&self) -> f64 {
        self.omega / self.s
    }

    pub fn inverse_width(&self) -> f64 {
        (-self.omega / (2.0 * self.a)).sqrt()
    }
}

/// Co-moving dark soliton
///
/// ```text
/// Ψ = √(Ω/s) tanh(κ (x − c t)) exp(i [c x/(2a) + (Ω − c²/(4a)) t]),  κ = √(−Ω/(2a))
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkSoliton {
    params: SolitonParams,
    amplitude: f64,
    kappa: f64,
    wavenumber: f64,
    frequency: f64,
}

impl DarkSoliton {
    pub fn new(params: SolitonParams) -> Self {
        let SolitonParams { c, omega, a, .. } = params;
        Self {
            params,
            amplitude: params.background_density().sqrt(),
            kappa: params.inverse_width(),
            wavenumber: c / (2.0 * a),
            frequency: omega - c * c / (4.0 * a),
        }
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    /// Phase-rotation frequency of the background, `Ω − c²/(4a)`.
    pub fn phase_frequency(&self) -> f64 {
        self.frequency
    }

    fn carrier(&self, x: f64, t: f64) -> C64 {
        C64::from_polar(1.0, self.wavenumber * x + self.frequency * t)
    }

    pub fn value(&self, x: f64, t: f64) -> C64 {
        let xi = x - self.params.c * t;
        self.carrier(x, t) * (self.amplitude * (self.kappa * xi).tanh())
    }

    pub fn time_derivative(&self, x: f64, t: f64) -> C64 {
        let xi = x - self.params.c * t;
        let th = (self.kappa * xi).tanh();
        let sech2 = 1.0 - th * th;
        let envelope = self.amplitude * th;
        let envelope_t = -self.amplitude * self.kappa * self.params.c * sech2;
        self.carrier(x, t) * C64::new(envelope_t, self.frequency * envelope)
    }
}

/// Convenience wrapper: one evaluation of the soliton.
pub fn dark_soliton(x: f64, t: f64, params: &SolitonParams) -> C64 {
    DarkSoliton::new(*params).value(x, t)
}

impl ExactSolution for DarkSoliton {
    fn eval(&self, x: [f64; 3], t: f64) -> C64 {
        self.value(x[0], t)
    }

    fn eval_dt(&self, x: [f64; 3], t: f64) -> C64 {
        self.time_derivative(x[0], t)
    }
}

/// Far-field vortex profile `Re √(Ω/s + a m²/(s r²))`.
pub fn vortex_asymptotic(r: f64, m: i32, omega: f64, a: f64, s: f64) -> f64 {
    let arg = omega / s + a * (m * m) as f64 / (s * r * r);
    if arg > 0.0 {
        arg.sqrt()
    } else {
        0.0
    }
}

/// Radial vortex profile `f(r)` tabulated at `r_j = j Δr`, `j = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub m: i32,
    pub omega: f64,
    pub a: f64,
    pub s: f64,
    pub dr: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl RadialProfile {
    pub fn radius(&self) -> f64 {
        self.dr * (self.values.len() - 1) as f64
    }

    pub fn background_density(&self) -> f64 {
        self.omega / self.s
    }

    /// Linear interpolation in the table; the asymptotic formula beyond it.
    pub fn eval(&self, r: f64) -> f64 {
        let x = r / self.dr;
        let j = x.floor() as usize;
        if j + 1 >= self.values.len() {
            return vortex_asymptotic(r, self.m, self.omega, self.a, self.s);
        }
        let w = x - j as f64;
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |j| j as f64 * self.dr)
    }
}

/// Settings of the radial Newton solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSolver {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ProfileSolver {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-10,
        }
    }
}

struct RadialProblem {
    m2: f64,
    omega: f64,
    a: f64,
    s: f64,
    dr: f64,
    n: usize,
    outer: f64,
}

impl RadialProblem {
    // Residual of a(f'' + f'/r − m² f/r²) − Ω f + s f³ at nodes 1..n-1,
    // with f_0 = 0 and f_n = outer.
    fn residual(&self, f: &[f64], out: &mut [f64]) -> f64 {
        let h2 = self.dr * self.dr;
        let mut max: f64 = 0.0;
        for j in 1..self.n {
            let r = j as f64 * self.dr;
            let fm = if j == 1 { 0.0 } else { f[j - 2] };
            let fp = if j == self.n - 1 { self.outer } else { f[j] };
            let fj = f[j - 1];
            let lap = (fp - 2.0 * fj + fm) / h2 + (fp - fm) / (2.0 * r * self.dr) - self.m2 * fj / (r * r);
            let res = self.a * lap - self.omega * fj + self.s * fj * fj * fj;
            out[j - 1] = res;
            max = max.max(res.abs());
        }
        max
    }

    fn jacobian(&self, f: &[f64], lower: &mut [f64], diag: &mut [f64], upper: &mut [f64]) {
        let h2 = self.dr * self.dr;
        for j in 1..self.n {
            let r = j as f64 * self.dr;
            let fj = f[j - 1];
            lower[j - 1] = self.a * (1.0 / h2 - 1.0 / (2.0 * r * self.dr));
            upper[j - 1] = self.a * (1.0 / h2 + 1.0 / (2.0 * r * self.dr));
            diag[j - 1] = self.a * (-2.0 / h2 - self.m2 / (r * r)) - self.omega + 3.0 * self.s * fj * fj;
        }
    }
}

/// Thomas algorithm; `rhs` is overwritten with the solution.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Solves `a(f'' + f'/r − m² f/r²) − Ω f + s f³ = 0` on `[0, R]` with
/// `f(0) = 0` and `f(R)` pinned to [`vortex_asymptotic`], starting Newton
/// from the asymptotic profile.
pub fn solve_radial_profile(m: i32, omega: f64, a: f64, s: f64, radius: f64, n: usize) -> Result<RadialProfile> {
    let dr = radius / n as f64;
    let initial: Vec<f64> = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { vortex_asymptotic(j as f64 * dr, m, omega, a, s) })
        .collect();
    solve_radial_profile_from(m, omega, a, s, radius, &initial, ProfileSolver::default())
}

/// As [`solve_radial_profile`], from a caller-supplied initial table of
/// `n + 1` values (the first and last are replaced by the boundary values).
pub fn solve_radial_profile_from(
    m: i32,
    omega: f64,
    a: f64,
    s: f64,
    radius: f64,
    initial: &[f64],
    solver: ProfileSolver,
) -> Result<RadialProfile> {
    if m == 0 {
        return Err(Error::InvalidParams("vortex charge must be nonzero".into()));
    }
    if !(omega / s > 0.0) || a == 0.0 {
        return Err(Error::InvalidParams(format!("background density Ω/s = {} must be positive", omega / s)));
    }
    let n = initial.len().saturating_sub(1);
    if n < 4 || !(radius > 0.0) {
        return Err(Error::InvalidParams("radial grid needs R > 0 and at least 4 intervals".into()));
    }
    let problem = RadialProblem {
        m2: (m * m) as f64,
        omega,
        a,
        s,
        dr: radius / n as f64,
        n,
        outer: vortex_asymptotic(radius, m, omega, a, s),
    };
    let k = n - 1;
    let mut f: Vec<f64> = initial[1..n].to_vec();
    let mut res = vec![0.0; k];
    let mut trial = vec![0.0; k];
    let mut trial_res = vec![0.0; k];
    let (mut lower, mut diag, mut upper) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut norm = problem.residual(&f, &mut res);
    let mut iterations = 0;
    while norm >= solver.tolerance {
        if iterations == solver.max_iterations {
            return Err(Error::NotConverged { iterations, residual: norm });
        }
        iterations += 1;
        problem.jacobian(&f, &mut lower, &mut diag, &mut upper);
        let mut step: Vec<f64> = res.iter().map(|r| -r).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut step);
        // backtracking on the max-norm of the residual
        let mut lambda = 1.0;
        loop {
            for i in 0..k {
                trial[i] = f[i] + lambda * step[i];
            }
            let trial_norm = problem.residual(&trial, &mut trial_res);
            if trial_norm < norm || lambda < 1e-3 {
                std::mem::swap(&mut f, &mut trial);
                std::mem::swap(&mut res, &mut trial_res);
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        if !norm.is_finite() {
            return Err(Error::NotConverged { iterations, residual: norm });
        }
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    values.extend_from_slice(&f);
    values.push(problem.outer);
    Ok(RadialProfile {
        m,
        omega,
        a,
        s,
        dr: problem.dr,
        values,
        iterations,
        residual: norm,
    })
}

/// A vortex of charge `charge` centred at `center` (first two coordinates)
/// with radial profile `profile`.
#[derive(Debug, Clone)]
pub struct VortexSpec {
    pub charge: i32,
    pub center: [f64; 2],
    pub profile: Arc<RadialProfile>,
}

impl VortexSpec {
    pub fn omega(&self) -> f64 {
        self.profile.omega
    }

    fn value_at(&self, x: [f64; 3]) -> C64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let r = dx.hypot(dy);
        C64::from_polar(self.profile.eval(r), self.charge as f64 * dy.atan2(dx))
    }
}

/// `Ψ = f(r) e^{i m θ}` sampled on a 2D grid.
pub fn make_vortex_field(grid: &Grid, spec: &VortexSpec) -> Result<ComplexField> {
    require_dim(grid, 2, "vortex field")?;
    Ok(ComplexField::from_fn(*grid, |x| spec.value_at(x)))
}

/// Normalized product `√ρ Π_j (Ψ_j/√ρ)` of single vortices.
pub fn make_multi_vortex(grid: &Grid, specs: &[VortexSpec], rho: f64) -> Result<ComplexField> {
    require_dim(grid, 2, "multi-vortex field")?;
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!("background density {rho} must be positive")));
    }
    let amp = rho.sqrt();
    Ok(ComplexField::from_fn(*grid, |x| {
        specs.iter().fold(C64::new(amp, 0.0), |acc, v| acc * v.value_at(x) / amp)
    }))
}

/// Multiplies by `exp(i c·x/(2a))`, a uniform background flow of velocity
/// `c`. Moduli are unchanged.
pub fn add_backflow(psi: &mut ComplexField, velocity: [f64; 3], a: f64) {
    let grid = *psi.grid();
    for (i, z) in psi.values_mut().iter_mut().enumerate() {
        let x = grid.coord(i);
        let phase = (velocity[0] * x[0] + velocity[1] * x[1] + velocity[2] * x[2]) / (2.0 * a);
        if phase != 0.0 {
            *z *= C64::from_polar(1.0, phase);
        }
    }
}

/// Approximate vortex ring in the plane normal to the z axis. In each
/// meridional half-plane, with cylindrical radius `ϱ` about `(x₀, y₀)` and
/// `ζ = z − z₀`, it is the normalized product of a charge-`m` vortex at
/// `(ϱ, ζ) = (R₀, 0)` and its mirror antivortex at `(−R₀, 0)`:
///
/// ```text
/// Ψ = f(d₊) f(d₋) / √ρ · exp(i m [atan2(ζ, ϱ − R₀) − atan2(ζ, ϱ + R₀)])
/// ```
///
/// so the phase far from the ring decays like a dipole.
pub fn make_vortex_ring(
    grid: &Grid,
    ring_radius: f64,
    center: [f64; 3],
    charge: i32,
    profile: &RadialProfile,
) -> Result<ComplexField> {
    require_dim(grid, 3, "vortex ring")?;
    if !(ring_radius > 0.0) {
        return Err(Error::InvalidParams(format!("ring radius {ring_radius} must be positive")));
    }
    let amp = profile.background_density().sqrt();
    Ok(ComplexField::from_fn(*grid, |x| {
        let varrho = (x[0] - center[0]).hypot(x[1] - center[1]);
        let zeta = x[2] - center[2];
        let (near, far) = (varrho - ring_radius, varrho + ring_radius);
        let modulus = profile.eval(near.hypot(zeta)) * profile.eval(far.hypot(zeta)) / amp;
        let phase = charge as f64 * (zeta.atan2(near) - zeta.atan2(far));
        C64::from_polar(modulus, phase)
    }))
}

fn require_dim(grid: &Grid, dim: usize, what: &'static str) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::UnsupportedDimension {
            what,
            expected: dim,
            got: grid.dim(),
        });
    }
    Ok(())
}

/// Unwrapped phase change accumulated along a closed polyline of samples.
pub fn winding(samples: &[C64]) -> f64 {
    let mut total = 0.0;
    for i in 0..samples.len() {
        let a = samples[i];
        let b = samples[(i + 1) % samples.len()];
        total += (b * a.conj()).arg();
    }
    total / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn standard_profile(radius: f64, n: usize) -> RadialProfile {
        solve_radial_profile(1, -1.0, 1.0, -1.0, radius, n).unwrap()
    }

    #[test]
    fn soliton_parameter_validation() {
        assert!(SolitonParams::new(0.0, -1.0, 1.0, -1.0).is_ok());
        // printed width sign would need Ω/a > 0 here
        assert!(SolitonParams::new(0.0, 1.0, 1.0, -1.0).is_err());
        assert!(SolitonParams::new(0.0, -1.0, -1.0, -1.0).is_err());
    }

    #[test]
    fn soliton_center_and_tails() {
        let p = SolitonParams::new(0.0, -1.0, 1.0, -1.0).unwrap();
        assert_eq!(dark_soliton(0.0, 3.0, &p).norm(), 0.0);
        assert!((dark_soliton(40.0, 1.0, &p).norm_sqr() - 1.0).abs() < 1e-15);
        let q = SolitonParams::new(0.5, -1.0, 1.0, -1.0).unwrap();
        assert!(dark_soliton(5.0, 10.0, &q).norm() < 1e-15);
    }

    #[test]
    fn soliton_satisfies_the_pde() {
        // analytic x-derivatives of tanh(κξ)e^{iθ} as the oracle
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &c in &[0.0, 0.5] {
            let (omega, a, s) = (-1.0, 1.0, -1.0);
            let sol = DarkSoliton::new(SolitonParams::new(c, omega, a, s).unwrap());
            let amp = (omega / s as f64).sqrt();
            let kappa = (-omega / (2.0 * a) as f64).sqrt();
            let q = c / (2.0 * a);
            for _ in 0..100 {
                let x: f64 = rng.gen_range(-10.0..10.0);
                let t: f64 = rng.gen_range(0.0..50.0);
                let th = (kappa * (x - c * t)).tanh();
                let s2 = 1.0 - th * th;
                let env = amp * th;
                let env_x = amp * kappa * s2;
                let env_xx = -2.0 * amp * kappa * kappa * th * s2;
                let carrier = C64::from_polar(1.0, q * x + (omega - c * c / (4.0 * a)) * t);
                let psi_xx = carrier * C64::new(env_xx - q * q * env, 2.0 * q * env_x);
                let psi = sol.value(x, t);
                let res = C64::i() * sol.time_derivative(x, t) + psi_xx * a + psi * (s * psi.norm_sqr());
                assert!(res.norm() < 1e-12, "residual {} at x={x}, t={t}, c={c}", res.norm());
            }
        }
    }

    #[test]
    fn asymptotic_profile_values() {
        assert!((vortex_asymptotic(1e6, 1, -1.0, 1.0, -1.0) - 1.0).abs() < 1e-11);
        assert_eq!(vortex_asymptotic(1.0, 1, -1.0, 1.0, -1.0), 0.0);
        assert_eq!(vortex_asymptotic(0.5, 1, -1.0, 1.0, -1.0), 0.0);
    }

    #[test]
    fn profile_converges_and_matches_far_field() {
        let p = standard_profile(40.0, 4000);
        assert!(p.residual < 1e-10);
        assert!(p.iterations < 50);
        assert_eq!(p.values[0], 0.0);
        for (r, f) in p.radii().zip(&p.values) {
            if r > 10.0 {
                assert!((f - vortex_asymptotic(r, 1, -1.0, 1.0, -1.0)).abs() < 1e-3, "r={r}");
            }
        }
    }

    // Shooting from the origin with f ≈ α r, bisecting on α so that f
    // neither overshoots the background nor turns back down.
    fn shoot(alpha: f64, r_max: f64, n: usize) -> (Vec<f64>, i32) {
        let dr = r_max / n as f64;
        let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
            // f'' = −f'/r + f/r² − f + f³ for m=1, a=1, Ω=−1, s=−1
            [y[1], -y[1] / r + y[0] / (r * r) - y[0] + y[0].powi(3)]
        };
        let r0 = 1e-4;
        let mut y = [alpha * r0, alpha];
        let mut r = r0;
        let mut out = vec![0.0];
        let steps = ((r_max - r0) / dr) as usize;
        for _ in 0..steps {
            let k1 = rhs(r, y);
            let k2 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
            let k3 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
            let k4 = rhs(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
            y[0] += dr / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += dr / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            r += dr;
            out.push(y[0]);
            if y[0] > 1.0 {
                return (out, 1);
            }
            if y[1] < 0.0 {
                return (out, -1);
            }
        }
        (out, 0)
    }

    #[test]
    fn profile_increasing_and_agrees_with_shooting() {
        let p = standard_profile(40.0, 4000);
        for w in p.values.windows(2) {
            assert!(w[1] > w[0]);
        }
        let (mut lo, mut hi) = (0.1, 1.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match shoot(mid, 12.0, 10_000).1 {
                1 => hi = mid,
                _ => lo = mid,
            }
        }
        let (f, _) = shoot(lo, 12.0, 10_000);
        let dr = 12.0 / 10_000.0;
        for (j, fj) in f.iter().enumerate().skip(1) {
            let r = j as f64 * dr;
            if r > 6.0 {
                break;
            }
            assert!((p.eval(r) - fj).abs() < 2e-4, "r={r}: {} vs {fj}", p.eval(r));
        }
    }

    #[test]
    fn profile_is_independent_of_initial_perturbation() {
        let base = standard_profile(30.0, 3000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let initial: Vec<f64> = base.values.iter().map(|v| v * (1.0 + rng.gen_range(-0.1..0.1))).collect();
        let other = solve_radial_profile_from(1, -1.0, 1.0, -1.0, 30.0, &initial, ProfileSolver::default()).unwrap();
        for (a, b) in base.values.iter().zip(&other.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn profile_reports_non_convergence() {
        let solver = ProfileSolver {
            max_iterations: 1,
            tolerance: 1e-10,
        };
        let init = vec![0.5; 101];
        let err = solve_radial_profile_from(1, -1.0, 1.0, -1.0, 20.0, &init, solver).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 1, .. }));
    }

    #[test]
    fn vortex_field_center_winding_and_corner() {
        let profile = Arc::new(standard_profile(40.0, 4000));
        let g = Grid::centered(&[81, 81], 0.25).unwrap();
        let spec = VortexSpec {
            charge: 1,
            center: [0.0, 0.0],
            profile: profile.clone(),
        };
        let psi = make_vortex_field(&g, &spec).unwrap();
        assert_eq!(psi.at([40, 40, 0]).norm(), 0.0);
        // circle of grid points at radius 20 cells
        let ring: Vec<C64> = (0..200)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 200.0;
                let i = (40.0 + 20.0 * th.cos()).round() as usize;
                let j = (40.0 + 20.0 * th.sin()).round() as usize;
                psi.at([i, j, 0])
            })
            .collect();
        assert!((winding(&ring) - 1.0).abs() < 1e-12);
        let rc = (2.0f64).sqrt() * 10.0;
        assert!((psi.at([0, 0, 0]).norm() - vortex_asymptotic(rc, 1, -1.0, 1.0, -1.0)).abs() < 1e-3);
        assert!(psi.max_abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn multi_vortex_product() {
        let profile = Arc::new(standard_profile(60.0, 6000));
        let g = Grid::centered(&[121, 121], 0.25).unwrap();
        let one = VortexSpec {
            charge: 1,
            center: [-3.5, 0.0],
            profile: profile.clone(),
        };
        let single = make_vortex_field(&g, &one).unwrap();
        let as_multi = make_multi_vortex(&g, &[one.clone()], 1.0).unwrap();
        for (a, b) in single.values().iter().zip(as_multi.values()) {
            assert!((a - b).norm() < 1e-15);
        }
        let two = VortexSpec {
            center: [3.5, 0.0],
            ..one.clone()
        };
        let psi = make_multi_vortex(&g, &[one, two], 1.0).unwrap();
        let n = 120;
        let mut edge = Vec::new();
        for i in 0..n {
            edge.push(psi.at([i, 0, 0]));
        }
        for j in 0..n {
            edge.push(psi.at([n, j, 0]));
        }
        for i in (1..=n).rev() {
            edge.push(psi.at([i, n, 0]));
        }
        for j in (1..=n).rev() {
            edge.push(psi.at([0, j, 0]));
        }
        assert!((winding(&edge) - 2.0).abs() < 1e-12);
        assert!(psi.max_abs() <= 1.0 + 1e-9);
        for i in 0..g.len() {
            let x = g.coord(i);
            let d = ((x[0] - 3.5).hypot(x[1])).min((x[0] + 3.5).hypot(x[1]));
            if d > 15.0 {
                assert!((psi.values()[i].norm() - 1.0).abs() < 2e-2);
            }
        }
    }

    #[test]
    fn backflow_preserves_modulus() {
        let g = Grid::centered(&[9, 7], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<C64> = (0..g.len()).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let psi = ComplexField::from_values(g, vals).unwrap();
        let mut same = psi.clone();
        add_backflow(&mut same, [0.0; 3], 1.0);
        assert_eq!(same, psi);
        let mut boosted = psi.clone();
        add_backflow(&mut boosted, [0.3, -0.2, 0.0], 1.0);
        for (a, b) in psi.values().iter().zip(boosted.values()) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn ring_core_far_field_and_winding() {
        let profile = standard_profile(60.0, 6000);
        let g = Grid::centered(&[41, 41, 41], 0.5).unwrap();
        let r0 = 5.0;
        let psi = make_vortex_ring(&g, r0, [0.0; 3], 1, &profile).unwrap();
        // (x=5, y=0, z=0) is a grid point on the core circle
        assert!(psi.at([30, 20, 20]).norm() < 1e-12);
        assert!(psi.max_abs() <= 1.0 + 1e-9);
        for i in 0..g.len() {
            let x = g.coord(i);
            let sigma = x[0].hypot(x[1]) - r0;
            if sigma.hypot(x[2]) > 10.0 {
                assert!((psi.values()[i].norm_sqr() - 1.0).abs() < 2.5e-2);
            }
        }
        // on the axis the phase falls off as the flow through a ring does
        for k in 21..41 {
            let z = g.coord(g.index([20, 20, k]))[2];
            let want = std::f64::consts::PI - 2.0 * (z / r0).atan();
            assert!((psi.at([20, 20, k]).arg() - want).abs() < 1e-12);
        }
        // square loop of grid points around the core in the y = 0 plane
        let mut loop_pts = Vec::new();
        for i in 27..33 {
            loop_pts.push(psi.at([i, 20, 17]));
        }
        for k in 17..23 {
            loop_pts.push(psi.at([33, 20, k]));
        }
        for i in (28..=33).rev() {
            loop_pts.push(psi.at([i, 20, 23]));
        }
        for k in (18..=23).rev() {
            loop_pts.push(psi.at([27, 20, k]));
        }
        assert!((winding(&loop_pts) - 1.0).abs() < 1e-12);
    }
}
