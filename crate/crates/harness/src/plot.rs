//! Plot-ready CSVs from a finished run directory, one file per panel, each
//! downsampled to at most [`MAX_PLOT_ROWS`] rows. Files go to `<dir>/plot/`:
//!
//! * `residual.csv`: `t,res_hm1`, the interval midpoint and RMS of
//!   `‖RES‖_{H⁻¹}` over the interval.
//! * `phixx_linf.csv`: `t,phixx_linf`, `‖φ_xx‖_{L∞}` at the solver nodes.
//! * `smallness_<method>.csv`: `t,bound_sq,d_h1,phi_h1,lower,upper,valid`,
//!   the error bound and the band `‖φ‖_{H¹} ± ‖d‖_{H¹}` around the
//!   approximation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surfverify_core::Method;

use crate::run::{bound_file, COEFFICIENTS_FILE, SUMMARY_FILE};
use crate::{HarnessError, Result};

pub const MAX_PLOT_ROWS: usize = 10_000;

/// Indices `0, s, 2s, ...` plus the last index, at most `max` of them.
pub fn downsample(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let step = (len - 1).div_ceil(max.max(2) - 1);
    let mut idx: Vec<usize> = (0..len).step_by(step).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

#[derive(Debug, Deserialize)]
struct CoefficientRow {
    t_start: f64,
    t_end: f64,
    res_hm1_sq_int: f64,
    phixx_linf_left: f64,
    phixx_linf_right: f64,
}

#[derive(Debug, Deserialize)]
struct BoundRow {
    t: f64,
    bound_sq: f64,
    phi_h1: f64,
    valid: u8,
}

#[derive(Debug, Serialize)]
struct SmallnessRow {
    t: f64,
    bound_sq: f64,
    d_h1: f64,
    phi_h1: f64,
    lower: f64,
    upper: f64,
    valid: u8,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for i in downsample(rows.len(), MAX_PLOT_ROWS) {
        w.serialize(&rows[i])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Methods recorded in the run's `summary.json`.
fn run_methods(dir: &Path) -> Result<Vec<Method>> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|_| HarnessError::MissingArtifact(path.clone()))?;
    let summary: serde_json::Value = serde_json::from_str(&text)?;
    let methods = summary["verdicts"]
        .as_array()
        .ok_or_else(|| HarnessError::MissingArtifact(path.clone()))?
        .iter()
        .filter_map(|v| v["method"].as_str()?.parse().ok())
        .collect();
    Ok(methods)
}

/// Writes the plot bundle for the run in `dir` and returns the files written.
pub fn series(dir: &Path) -> Result<Vec<PathBuf>> {
    let methods = run_methods(dir)?;
    let coeffs: Vec<CoefficientRow> = read_rows(&dir.join(COEFFICIENTS_FILE))?;
    let out = dir.join("plot");
    fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let mut written = Vec::new();

    let residual: Vec<(f64, f64)> = coeffs
        .iter()
        .map(|r| (0.5 * (r.t_start + r.t_end), (r.res_hm1_sq_int / (r.t_end - r.t_start)).sqrt()))
        .collect();
    let path = out.join("residual.csv");
    write_rows(&path, &["t", "res_hm1"], &residual)?;
    written.push(path);

    let mut linf: Vec<(f64, f64)> = coeffs.iter().map(|r| (r.t_start, r.phixx_linf_left)).collect();
    if let Some(last) = coeffs.last() {
        linf.push((last.t_end, last.phixx_linf_right));
    }
    let path = out.join("phixx_linf.csv");
    write_rows(&path, &["t", "phixx_linf"], &linf)?;
    written.push(path);

    for m in methods {
        let rows: Vec<BoundRow> = read_rows(&dir.join(bound_file(m)))?;
        let band: Vec<SmallnessRow> = rows
            .iter()
            .map(|r| {
                let d = r.bound_sq.sqrt();
                SmallnessRow {
                    t: r.t,
                    bound_sq: r.bound_sq,
                    d_h1: d,
                    phi_h1: r.phi_h1,
                    lower: (r.phi_h1 - d).max(0.0),
                    upper: r.phi_h1 + d,
                    valid: r.valid,
                }
            })
            .collect();
        let path = out.join(format!("smallness_{m}.csv"));
        write_rows(&path, &["t", "bound_sq", "d_h1", "phi_h1", "lower", "upper", "valid"], &band)?;
        written.push(path);
    }
    Ok(written)
}
