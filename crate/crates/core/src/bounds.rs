//! Upper bounds for scalar differential inequalities
//!
//! ```text
//! ẋ ≤ b(t) xᵖ + a(t) x + f(t),   x(0) = x₀ ≥ 0,  p > 1,  b, f ≥ 0
//! ```
//!
//! with piecewise-constant coefficients on a time grid. Every integral that the
//! closed-form bounds need is evaluated exactly per interval, so the bounds
//! below are exact functions of the coefficient data.
//!
//! * [`gronwall`] handles the linear case `b ≡ 0`.
//! * [`cp_type1`] is the explicit comparison bound for `ẋ ≤ c xᵖ + e`.
//! * [`cp_type2`] removes the linear term through the integrating factor
//!   `e^{−A(t)}`, `A(t) = ∫₀ᵗ a`, and then applies [`cp_type1`] with
//!   `b̃ = b e^{(p−1)A}` and `f̃ = e^{−A} f`.
//! * [`ode_oracle`] integrates the equality case numerically. It exists to test
//!   the bounds and never enters a verdict.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `(e^x − 1)/x`, continuous at 0.
pub(crate) fn exprel(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// Piecewise-constant data for `ẋ ≤ b xᵖ + a x + f`.
///
/// On interval `i` (between `grid[i]` and `grid[i+1]`) `a[i]` and `b[i]` are
/// constant rates and `f[i]` is the integral of `f` over the interval, spread
/// uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeCoefficients {
    p: f64,
    grid: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    f: Vec<f64>,
}

impl OdeCoefficients {
    pub fn new(p: f64, grid: Vec<f64>, a: Vec<f64>, b: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidCoefficients(msg));
        if !(p > 1.0 && p.is_finite()) {
            return bad(format!("exponent p = {p} must exceed 1"));
        }
        let n = a.len();
        if grid.len() != n + 1 || b.len() != n || f.len() != n {
            return bad(format!(
                "length mismatch: grid {}, a {}, b {}, f {}",
                grid.len(),
                n,
                b.len(),
                f.len()
            ));
        }
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("grid must be finite and strictly increasing".into());
        }
        if a.iter().any(|v| !v.is_finite()) {
            return bad("a must be finite".into());
        }
        if b.iter().chain(&f).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("b and f must be finite and nonnegative".into());
        }
        Ok(Self { p, grid, a, b, f })
    }

    /// `count` equal intervals on `[0, t_end]` with constant `a`, `b` and
    /// forcing rate `f_rate`.
    pub fn constant(p: f64, t_end: f64, count: usize, a: f64, b: f64, f_rate: f64) -> Result<Self> {
        let h = t_end / count as f64;
        let grid = (0..=count).map(|i| i as f64 * h).collect();
        let widths = (0..count).map(|i| (i + 1) as f64 * h - i as f64 * h);
        let f = widths.map(|w| f_rate * w).collect();
        Self::new(p, grid, vec![a; count], vec![b; count], f)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Pieces `(width, a, b, f_int)` covering `[start, t]`; the last one may be
    /// a fraction of an interval.
    fn pieces_until(&self, t: f64) -> Result<Vec<(f64, f64, f64, f64)>> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(Error::OutsideGrid { t, start, end });
        }
        let mut out = Vec::new();
        for i in 0..self.len() {
            let (lo, hi) = (self.grid[i], self.grid[i + 1]);
            if lo >= t {
                break;
            }
            let w = hi - lo;
            if hi <= t {
                out.push((w, self.a[i], self.b[i], self.f[i]));
            } else {
                let part = t - lo;
                out.push((part, self.a[i], self.b[i], self.f[i] * part / w));
            }
        }
        Ok(out)
    }

    /// Same data with `b` and `f` scaled and `a` replaced, for building
    /// perturbed problems in tests and comparisons.
    pub fn map(&self, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.p,
            self.grid.clone(),
            self.a.iter().map(|&v| a(v)).collect(),
            self.b.iter().map(|&v| b(v)).collect(),
            self.f.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// Fold for the linear bound `e^{A(t)} x₀ + ∫₀ᵗ e^{A(t)−A(s)} f(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFold {
    value: f64,
}

impl LinearFold {
    pub fn new(x0: f64) -> Self {
        Self { value: x0 }
    }

    /// Advances over an interval of length `width` with rate `a` and forcing
    /// mass `f_int`.
    pub fn advance(&mut self, width: f64, a: f64, f_int: f64) {
        let aw = a * width;
        self.value = aw.exp() * self.value + f_int * exprel(aw);
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Fold for the CP-Type II bound, carrying `A`, `∫f̃` and `∫b̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpType2Fold {
    x0: f64,
    p: f64,
    big_a: f64,
    f_tilde: f64,
    b_tilde: f64,
}

impl CpType2Fold {
    pub fn new(x0: f64, p: f64) -> Self {
        Self {
            x0,
            p,
            big_a: 0.0,
            f_tilde: 0.0,
            b_tilde: 0.0,
        }
    }

    pub fn advance(&mut self, width: f64, a: f64, b: f64, f_int: f64) {
        let aw = a * width;
        let q = self.p - 1.0;
        if f_int != 0.0 {
            self.f_tilde += f_int * (-self.big_a).exp() * exprel(-aw);
        }
        if b != 0.0 {
            self.b_tilde += b * (q * self.big_a).exp() * width * exprel(q * aw);
        }
        self.big_a += aw;
    }

    /// `A(t)` accumulated so far.
    pub fn exponent(&self) -> f64 {
        self.big_a
    }

    pub fn value(&self) -> f64 {
        if self.x0 + self.f_tilde == 0.0 {
            return 0.0;
        }
        let y = cp_type1(self.x0, self.b_tilde, self.f_tilde, self.p);
        if y.is_infinite() {
            f64::INFINITY
        } else {
            self.big_a.exp() * y
        }
    }
}

/// Linear comparison bound at time `t` (`b` must vanish).
pub fn gronwall(x0: f64, coeffs: &OdeCoefficients, t: f64) -> Result<f64> {
    if coeffs.b.iter().any(|&b| b != 0.0) {
        return Err(Error::InvalidCoefficients("gronwall needs b ≡ 0".into()));
    }
    let mut fold = LinearFold::new(x0);
    for (w, a, _, f) in coeffs.pieces_until(t)? {
        fold.advance(w, a, f);
    }
    Ok(fold.value())
}

/// Explicit bound for `ẋ ≤ c xᵖ + e`, given `c_int = ∫₀ᵗ c` and `e_int = ∫₀ᵗ e`.
///
/// Returns `+∞` once the brace `1 − (p−1)(x₀ + e_int)^{p−1} c_int` is no
/// longer positive.
pub fn cp_type1(x0: f64, c_int: f64, e_int: f64, p: f64) -> f64 {
    let base = x0 + e_int;
    if base == 0.0 || c_int == 0.0 {
        return base;
    }
    let q = p - 1.0;
    let brace = 1.0 - q * base.powf(q) * c_int;
    if brace > 0.0 {
        base * brace.powf(-1.0 / q)
    } else {
        f64::INFINITY
    }
}

/// CP-Type II bound at time `t`.
pub fn cp_type2(x0: f64, coeffs: &OdeCoefficients, t: f64) -> Result<f64> {
    let mut fold = CpType2Fold::new(x0, coeffs.p);
    for (w, a, b, f) in coeffs.pieces_until(t)? {
        fold.advance(w, a, b, f);
    }
    Ok(fold.value())
}

/// Time samples of a bound on a tracked quantity.
///
/// `nodes[i]` is the index of the interval boundary at `times[i]`, which lets
/// callers line the bound up with per-node data without comparing floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSeries {
    pub times: Vec<f64>,
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    /// First time the bound became infinite or violated a method threshold;
    /// `+∞` if that never happened.
    pub valid_until: f64,
}

impl BoundSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.times[i] < self.valid_until
    }

    pub fn last_value(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Value at sample time `t`, if `t` is a sample.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|&s| s == t).map(|i| self.values[i])
    }

    /// CSV `t,bound_sq,phi_h1,valid`; `phi_h1[node]` supplies `‖φ‖_{H¹}`.
    /// Only every `stride`-th sample is written, plus the last one.
    pub fn write_csv<W: Write>(&self, phi_h1: &[f64], stride: usize, mut w: W) -> Result<()> {
        writeln!(w, "t,bound_sq,phi_h1,valid")?;
        let stride = stride.max(1);
        let last = self.len().saturating_sub(1);
        for i in 0..self.len() {
            if i % stride != 0 && i != last {
                continue;
            }
            let phi = phi_h1.get(self.nodes[i]).copied().unwrap_or(f64::NAN);
            writeln!(
                w,
                "{},{},{},{}",
                self.times[i],
                self.values[i],
                phi,
                u8::from(self.is_valid(i))
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const ORACLE_BLOWUP_CAP: f64 = 1e12;

// Dormand–Prince 5(4) tableau.
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

enum Piece {
    Reached(f64),
    BlowUp(f64),
}

/// Integrates `ẋ = b xᵖ + a x + f` across one constant-coefficient piece.
fn dp5_piece(x0: f64, t0: f64, width: f64, rhs: impl Fn(f64) -> f64, h_guess: &mut f64) -> Piece {
    let t_end = t0 + width;
    let mut t = t0;
    let mut x = x0;
    let mut h = h_guess.min(width);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= 1e-15 * t.abs().max(1.0) {
            return Piece::BlowUp(t);
        }
        let mut k = [0.0; 7];
        k[0] = rhs(x);
        for s in 0..6 {
            let inc: f64 = (0..=s).map(|j| DP_A[s][j] * k[j]).sum();
            k[s + 1] = rhs(x + h * inc);
        }
        // FSAL: row 6 of the tableau is the 5th-order solution.
        let x_new = x + h * (0..6).map(|j| DP_A[5][j] * k[j]).sum::<f64>();
        let err_est = h * (0..7).map(|j| DP_E[j] * k[j]).sum::<f64>();
        let scale = ORACLE_TOLERANCE * (1.0 + x.abs().max(x_new.abs()));
        let err = (err_est / scale).abs();
        if err <= 1.0 && x_new.is_finite() {
            t = if h == t_end - t { t_end } else { t + h };
            x = x_new;
            if x > ORACLE_BLOWUP_CAP {
                return Piece::BlowUp(t);
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            *h_guess = h * grow;
            h *= grow;
        } else {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= shrink;
        }
    }
    Piece::Reached(x)
}

/// Reference solution of the equality `ẋ = b xᵖ + a x + f`, sampled at every
/// grid point up to `t_end` (and at `t_end` itself).
///
/// Adaptive Dormand–Prince 5(4) with local tolerance [`ORACLE_TOLERANCE`],
/// restarted at every grid point so coefficient jumps are never stepped
/// over. Exceeding [`ORACLE_BLOWUP_CAP`] or step-size underflow is reported
/// as blow-up at that time; later samples are `+∞`.
pub fn ode_oracle(x0: f64, coeffs: &OdeCoefficients, t_end: f64) -> BoundSeries {
    let p = coeffs.p;
    let mut times = vec![coeffs.start()];
    let mut nodes = vec![0];
    let mut values = vec![x0];
    let mut valid_until = f64::INFINITY;
    let mut x = x0;
    let mut h_guess = f64::INFINITY;
    let t_end = t_end.min(coeffs.end());
    for i in 0..coeffs.len() {
        let lo = coeffs.grid[i];
        if lo >= t_end {
            break;
        }
        let hi = coeffs.grid[i + 1].min(t_end);
        let full = coeffs.grid[i + 1] - lo;
        let (a, b, f_rate) = (coeffs.a[i], coeffs.b[i], coeffs.f[i] / full);
        if valid_until.is_finite() {
            x = f64::INFINITY;
        } else {
            let rhs = |y: f64| b * y.max(0.0).powf(p) + a * y + f_rate;
            match dp5_piece(x, lo, hi - lo, rhs, &mut h_guess) {
                Piece::Reached(v) => x = v,
                Piece::BlowUp(t) => {
                    valid_until = t;
                    x = f64::INFINITY;
                }
            }
        }
        times.push(hi);
        nodes.push(i + 1);
        values.push(x);
    }
    BoundSeries {
        times,
        nodes,
        values,
        valid_until,
    }
}
