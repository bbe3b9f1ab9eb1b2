//! Residual of the piecewise-linear-in-time interpolant of a trajectory.
//!
//! On `[t_n, t_n + h]` the approximation is `φ(s) = (1−s)φ_n + s φ_{n+1}`,
//! `s ∈ [0, 1]`, and its residual is
//!
//! ```text
//! RES(s) = (φ_{n+1} − φ_n)/h + ∂ₓ⁴φ(s) + (φ(s)_x²)_xx
//! ```
//!
//! which lives on twice the Galerkin band. Per mode, `|R̂_k(s)|²/k²` is a
//! polynomial of degree 4 in `s`, so three-node Gauss–Legendre integrates
//! `‖RES‖²_{H⁻¹}` over the interval without quadrature error.
//!
//! `‖φ_xx(s)‖_{L∞}` is convex along the segment, so `h·max(endpoints)²` bounds
//! its squared integral from above.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolve::Trajectory;
use crate::spectral::{LinfMode, ZeroMeanField};
use crate::{Error, Result};

/// Header of the CSV export of a [`CoefficientSeries`].
pub const SERIES_CSV_HEADER: &str =
    "t_start,t_end,res_hm1_sq_int,phixx_linf_sq_int,phixx_linf_left,phixx_linf_right";

const GAUSS3: [(f64, f64); 3] = [
    (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
];

/// Integrated residual and `φ_xx` data of one solver interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalData {
    pub t_start: f64,
    pub t_end: f64,
    /// `∫ ‖RES(s)‖²_{H⁻¹} ds` over the interval.
    pub res_hm1_sq_integral: f64,
    /// Upper bound for `∫ ‖φ_xx(s)‖²_{L∞} ds` over the interval.
    pub phixx_linf_sq_integral: f64,
    /// `‖φ_xx‖_{L∞}` at the left and right endpoint.
    pub phixx_linf_endpoints: (f64, f64),
}

impl IntervalData {
    pub fn width(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Mean of `‖φ_xx‖²_{L∞}` over the interval (the piecewise-constant rate).
    pub fn phixx_linf_sq_rate(&self) -> f64 {
        self.phixx_linf_sq_integral / self.width()
    }

    /// Root-mean-square of `‖RES‖_{H⁻¹}` over the interval.
    pub fn res_hm1_rms(&self) -> f64 {
        (self.res_hm1_sq_integral / self.width()).sqrt()
    }
}

/// `RES(s)` on the segment between two consecutive snapshots.
pub fn residual_at(phi_n: &ZeroMeanField, phi_np1: &ZeroMeanField, h: f64, s: f64) -> ZeroMeanField {
    let band = phi_n.band().max(phi_np1.band());
    let phi_s = ZeroMeanField::lincomb(1.0 - s, phi_n, s, phi_np1);
    let nonlinear = phi_s.nonlinear_term();
    let coeffs = (1..=2 * band)
        .map(|k| {
            let k4 = (k as f64).powi(4);
            (phi_np1.coeff(k) - phi_n.coeff(k)) / h + phi_s.coeff(k) * k4 - nonlinear.coeff(k)
        })
        .collect();
    ZeroMeanField::from_coeffs(coeffs)
}

/// `∫₀¹ ‖RES(s)‖²_{H⁻¹} ds · h`, exact up to rounding.
pub fn residual_hm1_sq_integral(phi_n: &ZeroMeanField, phi_np1: &ZeroMeanField, h: f64) -> f64 {
    let sum: f64 = GAUSS3
        .iter()
        .map(|&(s, w)| w * residual_at(phi_n, phi_np1, h, s).hneg1_norm_sq())
        .sum();
    sum * h
}

pub fn phixx_linf(phi: &ZeroMeanField, mode: LinfMode) -> f64 {
    phi.derivative(2).linf_bound(mode)
}

pub fn interval_data(
    phi_n: &ZeroMeanField,
    phi_np1: &ZeroMeanField,
    t_start: f64,
    h: f64,
    linf_mode: LinfMode,
) -> IntervalData {
    let left = phixx_linf(phi_n, linf_mode);
    let right = phixx_linf(phi_np1, linf_mode);
    interval_with_endpoints(phi_n, phi_np1, t_start, t_start + h, (left, right))
}

fn interval_with_endpoints(
    phi_n: &ZeroMeanField,
    phi_np1: &ZeroMeanField,
    t_start: f64,
    t_end: f64,
    (left, right): (f64, f64),
) -> IntervalData {
    let h = t_end - t_start;
    let top = left.max(right);
    IntervalData {
        t_start,
        t_end,
        res_hm1_sq_integral: residual_hm1_sq_integral(phi_n, phi_np1, h),
        phixx_linf_sq_integral: h * top * top,
        phixx_linf_endpoints: (left, right),
    }
}

/// Contiguous per-interval data covering `[0, T]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoefficientSeries {
    intervals: Vec<IntervalData>,
}

impl CoefficientSeries {
    pub fn new(intervals: Vec<IntervalData>) -> Result<Self> {
        let mut expected_start = 0.0;
        for (i, iv) in intervals.iter().enumerate() {
            let w = iv.width();
            if !(w > 0.0) {
                return Err(Error::InvalidCoefficients(format!("interval {i} has width {w}")));
            }
            if (iv.t_start - expected_start).abs() > 1e-9 * w {
                return Err(Error::InvalidCoefficients(format!(
                    "interval {i} starts at {} instead of {expected_start}",
                    iv.t_start
                )));
            }
            let vals = [
                iv.res_hm1_sq_integral,
                iv.phixx_linf_sq_integral,
                iv.phixx_linf_endpoints.0,
                iv.phixx_linf_endpoints.1,
            ];
            if vals.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidCoefficients(format!("interval {i} has invalid data {vals:?}")));
            }
            expected_start = iv.t_end;
        }
        Ok(Self { intervals })
    }

    /// A series of `count` identical intervals of width `h`, with constant
    /// `‖RES‖²_{H⁻¹}` and `‖φ_xx‖_{L∞}` rates. Useful for artificial data.
    pub fn constant(count: usize, h: f64, res_hm1_sq_rate: f64, phixx_linf: f64) -> Self {
        let intervals = (0..count)
            .map(|n| IntervalData {
                t_start: n as f64 * h,
                t_end: (n + 1) as f64 * h,
                res_hm1_sq_integral: res_hm1_sq_rate * h,
                phixx_linf_sq_integral: phixx_linf * phixx_linf * h,
                phixx_linf_endpoints: (phixx_linf, phixx_linf),
            })
            .collect();
        Self { intervals }
    }

    pub fn intervals(&self) -> &[IntervalData] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.t_end)
    }

    /// Interval boundaries `t_0 = 0, t_1, ..., t_n`.
    pub fn boundaries(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.intervals.iter().map(|iv| iv.t_end))
            .collect()
    }

    /// `√(∫ ‖RES‖²_{H⁻¹} dt)` over the whole series.
    pub fn total_residual(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.res_hm1_sq_integral).sum::<f64>().sqrt()
    }

    /// Series restricted to intervals ending at or before `t`.
    pub fn truncated(&self, t: f64) -> Self {
        let intervals = self
            .intervals
            .iter()
            .take_while(|iv| iv.t_end <= t * (1.0 + 1e-12))
            .copied()
            .collect();
        Self { intervals }
    }

    /// Merges groups of `factor` consecutive intervals. Integrals add, so the
    /// result still bounds the same quantities on the coarser grid.
    pub fn coarsened(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let intervals = self
            .intervals
            .chunks(factor)
            .map(|c| {
                let first = c[0];
                let last = c[c.len() - 1];
                IntervalData {
                    t_start: first.t_start,
                    t_end: last.t_end,
                    res_hm1_sq_integral: c.iter().map(|iv| iv.res_hm1_sq_integral).sum(),
                    phixx_linf_sq_integral: c.iter().map(|iv| iv.phixx_linf_sq_integral).sum(),
                    phixx_linf_endpoints: (first.phixx_linf_endpoints.0, last.phixx_linf_endpoints.1),
                }
            })
            .collect();
        Self { intervals }
    }

    /// CSV with header [`SERIES_CSV_HEADER`], one row per interval.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SERIES_CSV_HEADER}")?;
        for iv in &self.intervals {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                iv.t_start,
                iv.t_end,
                iv.res_hm1_sq_integral,
                iv.phixx_linf_sq_integral,
                iv.phixx_linf_endpoints.0,
                iv.phixx_linf_endpoints.1
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Folds consecutive snapshots into a [`CoefficientSeries`] without keeping
/// the trajectory. Each snapshot's `‖φ_xx‖_{L∞}` is evaluated once.
#[derive(Debug, Clone)]
pub struct SeriesBuilder {
    dt: f64,
    linf_mode: LinfMode,
    prev: Option<(ZeroMeanField, f64)>,
    intervals: Vec<IntervalData>,
}

impl SeriesBuilder {
    pub fn new(dt: f64, linf_mode: LinfMode) -> Self {
        Self {
            dt,
            linf_mode,
            prev: None,
            intervals: Vec::new(),
        }
    }

    /// Feeds the next snapshot and returns the interval it closes, if any.
    pub fn push(&mut self, phi: ZeroMeanField) -> Option<&IntervalData> {
        let linf = phixx_linf(&phi, self.linf_mode);
        let closed = self.prev.take().map(|(prev, prev_linf)| {
            let n = self.intervals.len();
            interval_with_endpoints(
                &prev,
                &phi,
                n as f64 * self.dt,
                (n + 1) as f64 * self.dt,
                (prev_linf, linf),
            )
        });
        self.prev = Some((phi, linf));
        match closed {
            Some(iv) => {
                self.intervals.push(iv);
                self.intervals.last()
            }
            None => None,
        }
    }

    /// `‖φ_xx‖_{L∞}` of the most recent snapshot.
    pub fn last_phixx_linf(&self) -> Option<f64> {
        self.prev.as_ref().map(|p| p.1)
    }

    pub fn finish(self) -> Result<CoefficientSeries> {
        if self.intervals.is_empty() {
            return Err(Error::ShortTrajectory);
        }
        CoefficientSeries::new(self.intervals)
    }
}

/// One [`IntervalData`] per solver step of a stored trajectory.
pub fn build_series(traj: &Trajectory, linf_mode: LinfMode) -> Result<CoefficientSeries> {
    if traj.snapshots.len() < 2 {
        return Err(Error::ShortTrajectory);
    }
    let h = traj.config.dt;
    let linf: Vec<f64> = traj
        .snapshots
        .par_iter()
        .map(|phi| phixx_linf(phi, linf_mode))
        .collect();
    let intervals = traj
        .snapshots
        .par_windows(2)
        .enumerate()
        .map(|(n, pair)| {
            interval_with_endpoints(
                &pair[0],
                &pair[1],
                n as f64 * h,
                (n + 1) as f64 * h,
                (linf[n], linf[n + 1]),
            )
        })
        .collect();
    CoefficientSeries::new(intervals)
}
