//! Real, zero-mean, 2π-periodic fields stored by their positive Fourier modes.
//!
//! A field `u` with bandwidth `B` is represented by complex coefficients
//! `û_1, ..., û_B` under the convention
//!
//! ```text
//! u(x) = Σ_{k=1..B} 2·Re(û_k e^{ikx})
//! ```
//!
//! so the `k = 0` mode does not exist and realness is structural. All norms are
//! evaluated through Parseval, `‖u‖²_{L²} = 2π Σ_k 2|û_k|²`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Oversampling factor of the grid used by [`LinfMode::Grid`].
pub const LINF_OVERSAMPLING: usize = 8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_inverse(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

fn fft_forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Smallest integer `≥ min` whose only prime factors are 2, 3 and 5.
pub(crate) fn smooth_len(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// How `‖f‖_{L∞}` is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinfMode {
    /// Maximum of `|f|` on a uniform grid oversampled [`LINF_OVERSAMPLING`] times.
    /// Not a certified bound.
    #[default]
    Grid,
    /// `Σ_k 2|f̂_k|`, a rigorous upper bound.
    Coeff,
}

impl fmt::Display for LinfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinfMode::Grid => f.write_str("grid"),
            LinfMode::Coeff => f.write_str("coeff"),
        }
    }
}

impl std::str::FromStr for LinfMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "grid" => Ok(LinfMode::Grid),
            "coeff" => Ok(LinfMode::Coeff),
            _ => Err(format!("unknown L∞ mode '{s}', expected grid or coeff")),
        }
    }
}

/// Kind of a single real trigonometric mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    /// Complex coefficient `û_k` of `amplitude · trig(kx)`.
    pub fn coefficient(self, amplitude: f64) -> Complex64 {
        match self {
            // sin(kx) = (e^{ikx} - e^{-ikx}) / 2i
            Trig::Sin => Complex64::new(0.0, -0.5 * amplitude),
            Trig::Cos => Complex64::new(0.5 * amplitude, 0.0),
        }
    }
}

/// A real, zero-mean, 2π-periodic function in Fourier form.
///
/// Fields are immutable values; every operation returns a new field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroMeanField {
    coeffs: Vec<Complex64>,
}

impl ZeroMeanField {
    pub fn zeros(band: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); band],
        }
    }

    /// Builds a field from `û_1, ..., û_B` (index 0 holds wavenumber 1).
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// Sum of `amplitude · trig(k x)` terms on bandwidth `band`.
    ///
    /// Terms with `k = 0` or `k > band` are ignored; callers that must not lose
    /// content check wavenumbers first.
    pub fn from_terms(band: usize, terms: &[(Trig, usize, f64)]) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); band];
        for &(kind, k, amp) in terms {
            if (1..=band).contains(&k) {
                coeffs[k - 1] += kind.coefficient(amp);
            }
        }
        Self { coeffs }
    }

    /// Number of stored modes (highest representable wavenumber).
    pub fn band(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wavenumber `k`; zero outside `1..=band`.
    pub fn coeff(&self, k: usize) -> Complex64 {
        if k == 0 || k > self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[k - 1]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Copy restricted (or zero-extended) to `band` modes.
    pub fn with_band(&self, band: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(band, Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    /// Point evaluation by direct summation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (s, co) = (((i + 1) as f64) * x).sin_cos();
                2.0 * (c.re * co - c.im * s)
            })
            .sum()
    }

    /// Samples at `x_j = 2πj/m`, `j = 0..m`. Exact for any `m ≥ 1`: modes above
    /// the Nyquist limit fold onto the grid but the samples themselves are not
    /// approximated.
    pub fn grid_values(&self, m: usize) -> Vec<f64> {
        if m == 0 {
            return Vec::new();
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let k = (i + 1) % m;
            buf[k] += c;
            buf[(m - k) % m] += c.conj();
        }
        fft_inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// `‖∂ₓᵖ f‖_{L²}`; `p = 0` is the L² norm.
    pub fn hp_norm(&self, p: u32) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powi(2 * p as i32) * c.norm_sqr())
            .sum();
        (4.0 * PI * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.hp_norm(0)
    }

    /// L² norm of the zero-mean antiderivative.
    pub fn hneg1_norm(&self) -> f64 {
        self.hneg1_norm_sq().sqrt()
    }

    pub(crate) fn hneg1_norm_sq(&self) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64;
                c.norm_sqr() / (k * k)
            })
            .sum();
        4.0 * PI * sum
    }

    /// `∂ₓ^order f`: mode `k` is multiplied by `(ik)^order`.
    pub fn derivative(&self, order: u32) -> Self {
        let rot = Complex64::i().powu(order);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * rot * ((i + 1) as f64).powi(order as i32))
            .collect();
        Self { coeffs }
    }

    pub fn linf_bound(&self, mode: LinfMode) -> f64 {
        match mode {
            LinfMode::Coeff => self.coeffs.iter().map(|c| 2.0 * c.norm()).sum(),
            LinfMode::Grid => {
                if self.coeffs.is_empty() {
                    return 0.0;
                }
                let m = smooth_len(LINF_OVERSAMPLING * 2 * self.band());
                self.grid_values(m)
                    .into_iter()
                    .fold(0.0, |acc, v| acc.max(v.abs()))
            }
        }
    }

    /// Coefficients `0..=2B` of `f²`, computed without aliasing.
    fn square_spectrum(&self) -> Vec<Complex64> {
        let band = self.band();
        // f² lives on wavenumbers -2B..=2B; 4B + 1 samples separate all of them.
        let m = smooth_len(4 * band + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, &c) in self.coeffs.iter().enumerate() {
            buf[i + 1] = c;
            buf[m - i - 1] = c.conj();
        }
        fft_inverse(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.re * z.re, 0.0);
        }
        fft_forward(&mut buf);
        let scale = 1.0 / m as f64;
        buf.truncate(2 * band + 1);
        for z in buf.iter_mut() {
            *z *= scale;
        }
        buf
    }

    /// `−(f_x²)_xx`, exact on bandwidth `2B`.
    ///
    /// The mean of `f_x²` is annihilated by `∂ₓₓ`, so the result is zero-mean.
    pub fn nonlinear_term(&self) -> Self {
        if self.coeffs.is_empty() {
            return Self::zeros(0);
        }
        let spec = self.derivative(1).square_spectrum();
        let coeffs = spec
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * (k * k) as f64)
            .collect();
        Self { coeffs }
    }

    /// `a·x + b·y` on the larger of the two bandwidths.
    pub fn lincomb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        let band = x.band().max(y.band());
        let coeffs = (1..=band).map(|k| x.coeff(k) * a + y.coeff(k) * b).collect();
        Self { coeffs }
    }
}

impl Add for &ZeroMeanField {
    type Output = ZeroMeanField;
    fn add(self, rhs: Self) -> ZeroMeanField {
        ZeroMeanField::lincomb(1.0, self, 1.0, rhs)
    }
}

impl Sub for &ZeroMeanField {
    type Output = ZeroMeanField;
    fn sub(self, rhs: Self) -> ZeroMeanField {
        ZeroMeanField::lincomb(1.0, self, -1.0, rhs)
    }
}

impl Mul<f64> for &ZeroMeanField {
    type Output = ZeroMeanField;
    fn mul(self, rhs: f64) -> ZeroMeanField {
        ZeroMeanField {
            coeffs: self.coeffs.iter().map(|&c| c * rhs).collect(),
        }
    }
}
