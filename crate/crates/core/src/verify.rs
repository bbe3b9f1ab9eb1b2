//! The three bounding methods for `ξ(t) = ‖u(t) − φ(t)‖²_{H¹}` and the
//! global-regularity verdict.
//!
//! All methods consume a [`CoefficientSeries`] and start from `ξ(0) = d0_sq`.
//! With `L(t) = ‖φ_xx(t)‖_{L∞}` and `R(t) = ‖RES(t)‖_{H⁻¹}`:
//!
//! * Method 1 drops the quintic term and uses the linear bound with rate
//!   `18 L² − 1/4` and forcing `2 R²`. It is only valid while the bound stays
//!   below a threshold `K*`.
//! * Method 2 is the CP-Type II bound for `ξ̇ ≤ K ξ⁵ + (9 L² − 1/4) ξ + R²`.
//! * Method 3 restarts Method 2 every `stride` intervals, feeding the bound at
//!   the end of one cell in as the initial value of the next.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::bounds::{BoundSeries, CpType2Fold, LinearFold, OdeCoefficients};
use crate::evolve::{InitialDatum, Trajectory};
use crate::residual::CoefficientSeries;
use crate::Result;

/// Constants of the energy estimate and the smallness criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(rename = "K")]
    pub k: f64,
    pub eps0: f64,
    pub kstar_paper: f64,
    pub kstar_strict: f64,
    pub p: f64,
}

impl Default for Constants {
    fn default() -> Self {
        let k = 7f64.powi(7) / 4.0;
        Self {
            k,
            eps0: 0.5,
            kstar_paper: (2.0 * 7f64.powi(7)).powf(-1.0 / 8.0),
            kstar_strict: (8.0 * k).powf(-0.25),
            p: 5.0,
        }
    }
}

impl Constants {
    pub fn kstar(&self, mode: KStarMode) -> f64 {
        match mode {
            KStarMode::Paper => self.kstar_paper,
            KStarMode::Strict => self.kstar_strict,
        }
    }
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $key:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $key)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn key(self) -> &'static str {
                match self { $($name::$variant => $key),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.key())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($key => Ok($name::$variant),)+
                    _ => Err(format!(
                        "unknown {} '{s}', expected one of: {}",
                        stringify!($name),
                        [$($key),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum! {
    /// Which Method 1 threshold to use.
    KStarMode { Paper => "paper", Strict => "strict" }
}

keyword_enum! {
    /// `theorem`: `T* = 4‖u₀‖²_{L²}`; `table`: `T* = 4‖u₀‖_{L²}`.
    TStarMode { Theorem => "theorem", Table => "table" }
}

keyword_enum! {
    Method { M1 => "m1", M2 => "m2", M3 => "m3" }
}

impl Default for KStarMode {
    fn default() -> Self {
        KStarMode::Paper
    }
}

impl Default for TStarMode {
    fn default() -> Self {
        TStarMode::Theorem
    }
}

/// Time after which regularity follows from the `L²` norm of the datum alone.
pub fn t_star(u0: &InitialDatum, mode: TStarMode) -> f64 {
    let l2 = u0.l2_norm();
    match mode {
        TStarMode::Theorem => 4.0 * l2 * l2,
        TStarMode::Table => 4.0 * l2,
    }
}

/// `t_star` rounded up to one decimal, plus 0.1.
pub fn default_horizon(t_star: f64) -> f64 {
    let tenths = (t_star * 10.0 * (1.0 - 1e-12)).ceil();
    (tenths + 1.0) / 10.0
}

fn boundary_times(series: &CoefficientSeries) -> Vec<f64> {
    series.boundaries()
}

fn first_infinite(times: &[f64], values: &[f64]) -> f64 {
    values
        .iter()
        .position(|v| v.is_infinite())
        .map_or(f64::INFINITY, |i| times[i])
}

/// Linear bound with rate `18 L² − 1/4` and forcing `2 R²`.
///
/// `valid_until` is the first boundary where the bound reaches `threshold`;
/// later values are still reported.
pub fn method1(d0_sq: f64, series: &CoefficientSeries, threshold: f64) -> BoundSeries {
    let times = boundary_times(series);
    let mut fold = LinearFold::new(d0_sq);
    let mut values = Vec::with_capacity(times.len());
    values.push(fold.value());
    for iv in series.intervals() {
        let a = 18.0 * iv.phixx_linf_sq_rate() - 0.25;
        fold.advance(iv.width(), a, 2.0 * iv.res_hm1_sq_integral);
        values.push(fold.value());
    }
    let valid_until = values
        .iter()
        .position(|v| !(*v < threshold))
        .map_or(f64::INFINITY, |i| times[i]);
    BoundSeries {
        nodes: (0..times.len()).collect(),
        times,
        values,
        valid_until,
    }
}

fn advance_cp2(fold: &mut CpType2Fold, iv: &crate::IntervalData, k: f64) {
    let a = 9.0 * iv.phixx_linf_sq_rate() - 0.25;
    fold.advance(iv.width(), a, k, iv.res_hm1_sq_integral);
}

/// CP-Type II bound with `b = K`, `a = 9 L² − 1/4`, `f = R²`, at every
/// interval boundary.
pub fn method2(d0_sq: f64, series: &CoefficientSeries, consts: &Constants) -> BoundSeries {
    let times = boundary_times(series);
    let mut fold = CpType2Fold::new(d0_sq, consts.p);
    let mut values = Vec::with_capacity(times.len());
    values.push(fold.value());
    let mut blown = false;
    for iv in series.intervals() {
        if blown {
            values.push(f64::INFINITY);
            continue;
        }
        advance_cp2(&mut fold, iv, consts.k);
        let v = fold.value();
        blown = v.is_infinite();
        values.push(v);
    }
    let valid_until = first_infinite(&times, &values);
    BoundSeries {
        nodes: (0..times.len()).collect(),
        times,
        values,
        valid_until,
    }
}

/// Method 2 restarted every `stride` intervals; reported at cell boundaries
/// only. A trailing partial cell is included.
pub fn method3(d0_sq: f64, series: &CoefficientSeries, stride: usize, consts: &Constants) -> BoundSeries {
    let stride = stride.max(1);
    let mut times = vec![0.0];
    let mut nodes = vec![0];
    let mut values = vec![d0_sq];
    let mut z = d0_sq;
    let mut node = 0;
    for cell in series.intervals().chunks(stride) {
        node += cell.len();
        if z.is_finite() {
            let mut fold = CpType2Fold::new(z, consts.p);
            for iv in cell {
                advance_cp2(&mut fold, iv, consts.k);
            }
            z = fold.value();
        }
        times.push(cell[cell.len() - 1].t_end);
        nodes.push(node);
        values.push(z);
    }
    let valid_until = first_infinite(&times, &values);
    BoundSeries {
        times,
        nodes,
        values,
        valid_until,
    }
}

/// Runs `method` with the given Method 1 threshold mode and Method 3 stride.
pub fn run_method(
    method: Method,
    d0_sq: f64,
    series: &CoefficientSeries,
    consts: &Constants,
    kstar: KStarMode,
    stride: usize,
) -> BoundSeries {
    match method {
        Method::M1 => method1(d0_sq, series, consts.kstar(kstar)),
        Method::M2 => method2(d0_sq, series, consts),
        Method::M3 => method3(d0_sq, series, stride, consts),
    }
}

/// Coefficients of `ξ̇ = K ξ⁵ + (9 L² − 1/4) ξ + R²` on the series grid.
pub fn comparison_ode(series: &CoefficientSeries, consts: &Constants) -> Result<OdeCoefficients> {
    let ivs = series.intervals();
    OdeCoefficients::new(
        consts.p,
        series.boundaries(),
        ivs.iter().map(|iv| 9.0 * iv.phixx_linf_sq_rate() - 0.25).collect(),
        vec![consts.k; ivs.len()],
        ivs.iter().map(|iv| iv.res_hm1_sq_integral).collect(),
    )
}

/// Earliest sample before `valid_until` with `‖φ‖_{H¹} + √bound < eps0`.
///
/// `phi_h1[n]` is `‖φ(t_n)‖_{H¹}` at solver node `n`; samples whose node is
/// missing are skipped.
pub fn check_smallness(phi_h1: &[f64], bound: &BoundSeries, eps0: f64) -> Option<f64> {
    (0..bound.len())
        .filter(|&i| bound.is_valid(i))
        .find(|&i| {
            phi_h1
                .get(bound.nodes[i])
                .is_some_and(|phi| phi + bound.values[i].sqrt() < eps0)
        })
        .map(|i| bound.times[i])
}

/// [`check_smallness`] against a stored trajectory.
pub fn check_smallness_in(traj: &Trajectory, bound: &BoundSeries, eps0: f64) -> Option<f64> {
    check_smallness(&traj.h1_norms(), bound, eps0)
}

/// Outcome of one method. Regularity can only be concluded through the
/// smallness or the time criterion; the fields are private so no other route
/// exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    method: Method,
    smallness_time: Option<f64>,
    time_criterion_met: bool,
    valid_until: f64,
    t_star: f64,
    horizon: f64,
}

impl Verdict {
    /// Applies both criteria to `bound`, whose last sample marks how far the
    /// data reach.
    pub fn assess(method: Method, bound: &BoundSeries, phi_h1: &[f64], t_star: f64, eps0: f64) -> Self {
        let horizon = bound.times.last().copied().unwrap_or(0.0);
        let smallness_time = check_smallness(phi_h1, bound, eps0);
        let time_criterion_met = bound.valid_until.min(horizon) >= t_star;
        Self {
            method,
            smallness_time,
            time_criterion_met,
            valid_until: bound.valid_until,
            t_star,
            horizon,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn smallness_time(&self) -> Option<f64> {
        self.smallness_time
    }

    pub fn time_criterion_met(&self) -> bool {
        self.time_criterion_met
    }

    pub fn valid_until(&self) -> f64 {
        self.valid_until
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    /// End of the data the verdict is based on.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn globally_regular(&self) -> bool {
        self.smallness_time.is_some_and(|t| t < self.valid_until) || self.time_criterion_met
    }
}

#[derive(Serialize)]
struct VerdictRecord {
    method: Method,
    smallness_time: Option<f64>,
    time_criterion: bool,
    valid_until: Option<f64>,
    t_star: f64,
    globally_regular: bool,
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VerdictRecord {
            method: self.method,
            smallness_time: self.smallness_time,
            time_criterion: self.time_criterion_met,
            valid_until: self.valid_until.is_finite().then_some(self.valid_until),
            t_star: self.t_star,
            globally_regular: self.globally_regular(),
        }
        .serialize(s)
    }
}
