//! Error metrics, vortex tracking and boundary diagnostics.

use crate::field::{BoundaryMap, ComplexField};
use crate::{Error, Result, C64};

/// Pointwise maxima of the differences in real part, imaginary part and
/// modulus squared.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentError {
    pub real: f64,
    pub imag: f64,
    pub mod2: f64,
}

impl ComponentError {
    pub fn component_avg(&self) -> f64 {
        0.5 * (self.real + self.imag)
    }
}

/// ∞-norm errors of `psi` against `reference(x, t)` over every grid point.
pub fn component_error(psi: &ComplexField, reference: &dyn Fn([f64; 3], f64) -> C64, t: f64) -> ComponentError {
    let grid = psi.grid();
    let mut e = ComponentError::default();
    for (i, z) in psi.values().iter().enumerate() {
        let r = reference(grid.coord(i), t);
        accumulate(&mut e, *z, r);
    }
    e
}

/// Same as [`component_error`] against a sampled reference field.
pub fn component_error_field(psi: &ComplexField, reference: &ComplexField) -> ComponentError {
    let mut e = ComponentError::default();
    for (z, r) in psi.values().iter().zip(reference.values()) {
        accumulate(&mut e, *z, *r);
    }
    e
}

/// Max |Δ|Ψ|²| only, which is what the vortex experiments compare.
pub fn mod2_error_field(psi: &ComplexField, reference: &ComplexField) -> f64 {
    psi.values()
        .iter()
        .zip(reference.values())
        .fold(0.0, |m, (z, r)| nan_max(m, (z.norm_sqr() - r.norm_sqr()).abs()))
}

fn accumulate(e: &mut ComponentError, z: C64, r: C64) {
    e.real = nan_max(e.real, (z.re - r.re).abs());
    e.imag = nan_max(e.imag, (z.im - r.im).abs());
    e.mod2 = nan_max(e.mod2, (z.norm_sqr() - r.norm_sqr()).abs());
}

// NaN wins so a blown-up field never looks accurate.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Error samples over a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub errors: Vec<ComponentError>,
}

impl ErrorSeries {
    pub fn push(&mut self, t: f64, e: ComponentError) {
        if let Some(&last) = self.times.last() {
            assert!(t > last, "error samples must have increasing times");
        }
        self.times.push(t);
        self.errors.push(e);
    }

    pub fn max_real(&self) -> f64 {
        self.errors.iter().fold(0.0, |m, e| nan_max(m, e.real))
    }

    pub fn max_imag(&self) -> f64 {
        self.errors.iter().fold(0.0, |m, e| nan_max(m, e.imag))
    }

    pub fn max_mod2(&self) -> f64 {
        self.errors.iter().fold(0.0, |m, e| nan_max(m, e.mod2))
    }

    /// Average of the run maxima of the real- and imaginary-part errors.
    pub fn component_avg(&self) -> f64 {
        0.5 * (self.max_real() + self.max_imag())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Fraction of the background density below which a local minimum counts as
/// a vortex core.
pub const DEFAULT_CORE_THRESHOLD: f64 = 0.5;

/// Positions of the `n` deepest interior local minima of `|Ψ|²` lying below
/// `threshold · rho`, each refined by a least-squares paraboloid over its
/// 3×3 neighbourhood. Sorted deepest first. 2D fields only.
pub fn track_vortices_with(psi: &ComplexField, n: usize, rho: f64, threshold: f64) -> Result<Vec<[f64; 2]>> {
    let grid = psi.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            what: "vortex tracking",
            expected: 2,
            got: grid.dim(),
        });
    }
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let d: Vec<f64> = psi.mod2();
    let at = |i: usize, j: usize| d[i * ny + j];
    let limit = threshold * rho;
    let mut candidates = Vec::new();
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let v = at(i, j);
            if !(v < limit) {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let w = at((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    if w < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                candidates.push((v, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    // plateaus of equal minima around an off-grid core collapse to one
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for &(_, i, j) in &candidates {
        if picked.iter().all(|&(pi, pj)| pi.abs_diff(i) > 2 || pj.abs_diff(j) > 2) {
            picked.push((i, j));
        }
        if picked.len() == n {
            break;
        }
    }
    if picked.len() < n || n == 0 {
        return Err(Error::VortexLost {
            found: picked.len(),
            expected: n,
        });
    }
    let (h0, h1) = (grid.spacing()[0], grid.spacing()[1]);
    Ok(picked
        .into_iter()
        .map(|(i, j)| {
            let mut f = [[0.0; 3]; 3];
            for (a, row) in f.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v = at(i + a - 1, j + b - 1);
                }
            }
            let (ox, oy) = paraboloid_offset(&f);
            let p = grid.position([i, j, 0]);
            [p[0] + ox * h0, p[1] + oy * h1]
        })
        .collect())
}

pub fn track_vortices(psi: &ComplexField, n: usize, rho: f64) -> Result<Vec<[f64; 2]>> {
    track_vortices_with(psi, n, rho, DEFAULT_CORE_THRESHOLD)
}

/// Minimum of the least-squares quadratic through a 3×3 stencil `f[a][b]`
/// sampled at offsets `(a−1, b−1)`, clamped to the stencil.
fn paraboloid_offset(f: &[[f64; 3]; 3]) -> (f64, f64) {
    let (mut cx, mut cy, mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, row) in f.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            let x = a as f64 - 1.0;
            let y = b as f64 - 1.0;
            cx += x * v / 6.0;
            cy += y * v / 6.0;
            cxy += x * y * v / 4.0;
            cxx += (x * x - 2.0 / 3.0) * v / 2.0;
            cyy += (y * y - 2.0 / 3.0) * v / 2.0;
        }
    }
    // gradient zero: [2cxx cxy; cxy 2cyy] [x y]ᵀ = −[cx cy]ᵀ
    let det = 4.0 * cxx * cyy - cxy * cxy;
    if !(det > 0.0 && cxx > 0.0) {
        return (0.0, 0.0);
    }
    let x = (-cx * 2.0 * cyy + cy * cxy) / det;
    let y = (-cy * 2.0 * cxx + cx * cxy) / det;
    (x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0))
}

/// Time series of tracked vortex positions. Each new detection is matched
/// to the nearest previous position so vortex identities persist.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VortexTrack {
    pub times: Vec<f64>,
    /// `positions[v][n]` is vortex `v` at `times[n]`.
    pub positions: Vec<Vec<[f64; 2]>>,
}

impl VortexTrack {
    pub fn push(&mut self, t: f64, found: &[[f64; 2]]) {
        if self.positions.is_empty() {
            self.positions = found.iter().map(|p| vec![*p]).collect();
            self.times.push(t);
            return;
        }
        let mut remaining: Vec<[f64; 2]> = found.to_vec();
        for series in &mut self.positions {
            let last = *series.last().expect("non-empty series");
            let (best, _) = remaining
                .iter()
                .enumerate()
                .map(|(k, p)| (k, (p[0] - last[0]).hypot(p[1] - last[1])))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            series.push(remaining.remove(best));
        }
        self.times.push(t);
    }

    pub fn radii(&self, vortex: usize, center: [f64; 2]) -> Vec<f64> {
        self.positions[vortex]
            .iter()
            .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Largest `|r(t) − r(0)| / r(0)` in percent over all vortices of the track.
pub fn radius_deviation(track: &VortexTrack, center: [f64; 2]) -> f64 {
    (0..track.positions.len())
        .map(|v| percent_deviation(&track.radii(v, center)))
        .fold(0.0, f64::max)
}

pub fn percent_deviation(series: &[f64]) -> f64 {
    let Some(&r0) = series.first() else { return 0.0 };
    series.iter().fold(0.0, |m, r| m.max((r - r0).abs() / r0 * 100.0))
}

/// Mean spacing between successive downward zero crossings of
/// `x(t) − center`, i.e. one orbital period; `None` with fewer than two.
pub fn rotation_period(times: &[f64], xs: &[f64], center: f64) -> Option<f64> {
    let mut crossings = Vec::new();
    for i in 1..xs.len() {
        let (a, b) = (xs[i - 1] - center, xs[i] - center);
        if a > 0.0 && b <= 0.0 {
            let w = a / (a - b);
            crossings.push(times[i - 1] + w * (times[i] - times[i - 1]));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// `max_b | |Ψ_b(t)|² − |Ψ_b(0)|² |`.
pub fn boundary_mod2_drift(initial: &ComplexField, current: &ComplexField, map: &BoundaryMap) -> f64 {
    map.boundary_indices().fold(0.0, |m, b| {
        nan_max(m, (current.values()[b].norm_sqr() - initial.values()[b].norm_sqr()).abs())
    })
}

/// [`boundary_mod2_drift`] of each snapshot against the first.
pub fn boundary_mod2_drift_series(snapshots: &[ComplexField], map: &BoundaryMap) -> Vec<f64> {
    match snapshots.first() {
        Some(first) => snapshots.iter().map(|s| boundary_mod2_drift(first, s, map)).collect(),
        None => Vec::new(),
    }
}
