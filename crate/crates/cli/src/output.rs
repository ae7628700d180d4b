//! File formats: CSV tables, binary PGM snapshots and the run manifest.
//!
//! Numbers in CSV files are written in scientific notation with 17
//! significant digits so they round-trip exactly.
//!
//! Snapshots are 8-bit binary PGM (`P5`). For a 2D field of shape
//! `(nx, ny)` the image is `nx` wide and `ny` high, with `x` increasing to
//! the right and `y` increasing upwards (the first image row is the largest
//! `y`). Gray levels are `round(255 · clamp((v − lo)/(hi − lo), 0, 1))` with
//! `[lo, hi] = [0, 1.05 ρ]` for `|Ψ|²` and `[−π, π]` for the phase.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use msd_nlse::field::ComplexField;
use serde::Serialize;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes a CSV file with a header row and preformatted records.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `(t, err_real_max, err_imag_max, err_mod2_max)` per sample.
pub fn write_errors(path: &Path, series: &msd_nlse::analysis::ErrorSeries) -> Result<()> {
    write_table(
        path,
        &["t", "err_real_max", "err_imag_max", "err_mod2_max"],
        series
            .times
            .iter()
            .zip(&series.errors)
            .map(|(t, e)| vec![num(*t), num(e.real), num(e.imag), num(e.mod2)]),
    )
}

/// One row per grid point: integer indices of the active axes, then Re, Im.
pub fn write_state(path: &Path, psi: &ComplexField) -> Result<()> {
    let grid = psi.grid();
    let dim = grid.dim();
    let names = ["i", "j", "k"];
    let mut header: Vec<&str> = names[..dim].to_vec();
    header.extend(["re", "im"]);
    write_table(
        path,
        &header,
        psi.values().iter().enumerate().map(|(lin, z)| {
            let idx = grid.multi_index(lin);
            let mut row: Vec<String> = idx[..dim].iter().map(|i| i.to_string()).collect();
            row.push(num(z.re));
            row.push(num(z.im));
            row
        }),
    )
}

/// Two-column `(r, f)` radial profile table.
pub fn write_profile(path: &Path, profile: &msd_nlse::solutions::RadialProfile) -> Result<()> {
    write_table(
        path,
        &["r", "f"],
        profile.radii().zip(&profile.values).map(|(r, f)| vec![num(r), num(*f)]),
    )
}

/// Maps `v` over `[lo, hi]` onto a gray level.
pub fn gray(v: f64, lo: f64, hi: f64) -> u8 {
    let u = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    if u.is_nan() {
        return 0;
    }
    (255.0 * u).round() as u8
}

/// Encodes `values` laid out as `[x][y]` (row-major in `x`) as a P5 image.
pub fn encode_pgm(nx: usize, ny: usize, values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    assert_eq!(values.len(), nx * ny);
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for row in 0..ny {
        let j = ny - 1 - row;
        for i in 0..nx {
            out.push(gray(values[i * ny + j], lo, hi));
        }
    }
    out
}

/// Writes `<stem>_mod2.pgm` and `<stem>_phase.pgm` for a 2D field.
pub fn write_snapshot(dir: &Path, stem: &str, psi: &ComplexField, rho: f64) -> Result<()> {
    let grid = psi.grid();
    anyhow::ensure!(grid.dim() == 2, "snapshots need a 2D field");
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let mod2 = psi.mod2();
    let phase: Vec<f64> = psi.values().iter().map(|z| z.arg()).collect();
    let pi = std::f64::consts::PI;
    fs::write(dir.join(format!("{stem}_mod2.pgm")), encode_pgm(nx, ny, &mod2, 0.0, 1.05 * rho))?;
    fs::write(dir.join(format!("{stem}_phase.pgm")), encode_pgm(nx, ny, &phase, -pi, pi))?;
    Ok(())
}

pub fn snapshot_stem(t: f64) -> String {
    format!("snap_{t:010.3}")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
