//! Numerical verification of global regularity for the surface growth equation
//!
//! ```text
//! u_t = −u_xxxx − (u_x²)_xx,   x ∈ [0, 2π] periodic, ∫u dx = 0.
//! ```
//!
//! The pipeline is:
//!
//! 1. [`evolve`] computes a spectral Galerkin / semi-implicit Euler approximation φ.
//! 2. [`residual`] measures, interval by interval, how far the piecewise-linear
//!    interpolant of φ is from solving the equation (`‖RES‖_{H⁻¹}`) together with
//!    `‖φ_xx‖_{L∞}`.
//! 3. [`bounds`] turns those integrals into upper bounds for solutions of scalar
//!    differential inequalities `ẋ ≤ b xᵖ + a x + f`.
//! 4. [`verify`] applies the three bounding methods to `‖u − φ‖²_{H¹}` and decides
//!    regularity through the smallness or the time criterion.
//!
//! Rounding errors are not enclosed; verdicts are as rigorous as IEEE arithmetic.

pub mod bounds;
pub mod evolve;
pub mod residual;
pub mod spectral;
pub mod verify;

pub use bounds::{BoundSeries, OdeCoefficients};
pub use evolve::{InitialDatum, Simulation, SolverConfig, Trajectory};
pub use residual::{CoefficientSeries, IntervalData, SeriesBuilder};
pub use spectral::{LinfMode, Trig, ZeroMeanField};
pub use verify::{Constants, KStarMode, Method, TStarMode, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial datum has wavenumber {k} above the Galerkin cutoff N = {n_modes}")]
    WavenumberAboveCutoff { k: usize, n_modes: usize },
    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),
    #[error("solution became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("time {t} lies outside the coefficient grid [{start}, {end}]")]
    OutsideGrid { t: f64, start: f64, end: f64 },
    #[error("invalid ODE coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("trajectory must contain at least two snapshots")]
    ShortTrajectory,
    #[error("malformed trajectory stream: {0}")]
    MalformedStream(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
