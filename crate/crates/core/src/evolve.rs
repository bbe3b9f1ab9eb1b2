//! Spectral Galerkin discretisation in space, semi-implicit Euler in time.
//!
//! The linear part `−∂ₓ⁴` is treated implicitly and the nonlinearity
//! `−(φ_x²)_xx` explicitly, which makes each step a diagonal solve:
//!
//! ```text
//! φ̂_k^{n+1} = (φ̂_k^n + h·N̂_k(φ^n)) / (1 + h k⁴),   k = 1..N
//! ```
//!
//! `N(φ^n)` is formed exactly on `2N` modes and then truncated to the Galerkin
//! space; whatever is discarded shows up in the residual.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::spectral::{Trig, ZeroMeanField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Galerkin cutoff: highest retained wavenumber.
    pub n_modes: usize,
    /// Time step `h`.
    pub dt: f64,
    /// Horizon `T`.
    pub t_end: f64,
}

impl SolverConfig {
    pub fn new(n_modes: usize, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self { n_modes, dt, t_end };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes < 2 {
            return Err(Error::InvalidConfig(format!("n_modes = {} < 2", self.n_modes)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidConfig(format!(
                "t_end = {} must be finite and at least dt = {}",
                self.t_end, self.dt
            )));
        }
        let steps = self.t_end / self.dt;
        if steps >= usize::MAX as f64 / 2.0 {
            return Err(Error::InvalidConfig(format!("{steps} steps do not fit an index")));
        }
        Ok(())
    }

    /// Number of steps; `t_end` not a multiple of `dt` is rounded down.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt * (1.0 + 1e-12)).floor() as usize
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// A finite trigonometric polynomial `Σ amplitude · trig(k x)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitialDatum {
    terms: Vec<(Trig, usize, f64)>,
}

impl InitialDatum {
    pub fn new(terms: Vec<(Trig, usize, f64)>) -> Result<Self> {
        for (i, &(kind, k, amp)) in terms.iter().enumerate() {
            if k == 0 {
                return Err(Error::InvalidDatum("wavenumber 0 is excluded (zero mean)".into()));
            }
            if !amp.is_finite() {
                return Err(Error::InvalidDatum(format!("amplitude {amp} is not finite")));
            }
            if terms[..i].iter().any(|&(kk, kn, _)| kk == kind && kn == k) {
                return Err(Error::InvalidDatum(format!("duplicate term {kind:?}({k}x)")));
            }
        }
        Ok(Self { terms })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn sin(k: usize, amplitude: f64) -> Self {
        Self {
            terms: vec![(Trig::Sin, k, amplitude)],
        }
    }

    pub fn terms(&self) -> &[(Trig, usize, f64)] {
        &self.terms
    }

    pub fn max_wavenumber(&self) -> usize {
        self.terms.iter().map(|t| t.1).max().unwrap_or(0)
    }

    pub fn to_field(&self, n_modes: usize) -> Result<ZeroMeanField> {
        if let Some(&(_, k, _)) = self.terms.iter().find(|t| t.1 > n_modes) {
            return Err(Error::WavenumberAboveCutoff { k, n_modes });
        }
        Ok(ZeroMeanField::from_terms(n_modes, &self.terms))
    }

    pub fn l2_norm(&self) -> f64 {
        ZeroMeanField::from_terms(self.max_wavenumber(), &self.terms).l2_norm()
    }
}

impl fmt::Display for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, &(kind, k, amp)) in self.terms.iter().enumerate() {
            let name = match kind {
                Trig::Sin => "sin",
                Trig::Cos => "cos",
            };
            let arg = if k == 1 { "x".to_string() } else { format!("{k}x") };
            let mag = amp.abs();
            match (i, amp.is_sign_negative()) {
                (0, false) => {}
                (0, true) => f.write_str("-")?,
                (_, false) => f.write_str(" + ")?,
                (_, true) => f.write_str(" - ")?,
            }
            if mag != 1.0 {
                write!(f, "{mag} ")?;
            }
            write!(f, "{name}({arg})")?;
        }
        Ok(())
    }
}

impl FromStr for InitialDatum {
    type Err = Error;

    /// Parses sums such as `sin(x) + 1/2 sin(2x)` or `3/2 cos(x) - 0.5*sin(2x)`.
    fn from_str(s: &str) -> Result<Self> {
        DatumParser::new(s).parse()
    }
}

impl Serialize for InitialDatum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InitialDatum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct DatumParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> DatumParser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err(&self, msg: &str) -> Error {
        Error::InvalidDatum(format!("{msg} at byte {} of {:?}", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit()
                    || c == '.'
                    || ((c == 'e' || c == 'E') && i > 0)
                    || ((c == '-' || c == '+')
                        && i > 0
                        && matches!(self.rest().as_bytes()[i - 1], b'e' | b'E')))
            })
            .map_or(self.rest().len(), |(i, _)| i);
        if len == 0 {
            return None;
        }
        let v = self.rest()[..len].parse().ok()?;
        self.pos += len;
        Some(v)
    }

    fn parse(mut self) -> Result<InitialDatum> {
        self.skip_ws();
        if self.rest() == "0" {
            return Ok(InitialDatum::zero());
        }
        let mut terms = Vec::new();
        let mut first = true;
        loop {
            self.skip_ws();
            if self.rest().is_empty() {
                if first {
                    return Err(self.err("empty expression"));
                }
                break;
            }
            let mut sign = 1.0;
            if self.eat("+") {
            } else if self.eat("-") {
                sign = -1.0;
            } else if !first {
                return Err(self.err("expected '+' or '-'"));
            }
            first = false;

            let mut amp = 1.0;
            if let Some(num) = self.number() {
                amp = num;
                if self.eat("/") {
                    let den = self.number().ok_or_else(|| self.err("expected denominator"))?;
                    amp /= den;
                }
                self.eat("*");
            }
            let kind = if self.eat("sin") {
                Trig::Sin
            } else if self.eat("cos") {
                Trig::Cos
            } else {
                return Err(self.err("expected 'sin' or 'cos'"));
            };
            if !self.eat("(") {
                return Err(self.err("expected '('"));
            }
            let k = match self.number() {
                Some(v) if v.fract() == 0.0 && v >= 1.0 => v as usize,
                Some(_) => return Err(self.err("wavenumber must be a positive integer")),
                None => 1,
            };
            self.eat("*");
            if !self.eat("x") || !self.eat(")") {
                return Err(self.err("expected 'x)'"));
            }
            terms.push((kind, k, sign * amp));
        }
        InitialDatum::new(terms)
    }
}

/// One semi-implicit Euler step on `n_modes` Galerkin modes.
pub fn step(phi: &ZeroMeanField, h: f64, n_modes: usize) -> ZeroMeanField {
    Stepper::new(n_modes, h).step(phi)
}

/// Step operator with a fixed cutoff and time step.
#[derive(Debug, Clone, Copy)]
pub struct Stepper {
    n_modes: usize,
    dt: f64,
    nonlinear: bool,
}

impl Stepper {
    pub fn new(n_modes: usize, dt: f64) -> Self {
        Self {
            n_modes,
            dt,
            nonlinear: true,
        }
    }

    /// Drops the nonlinearity, leaving `φ_t = −φ_xxxx`.
    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn step(&self, phi: &ZeroMeanField) -> ZeroMeanField {
        let h = self.dt;
        let forcing = if self.nonlinear {
            phi.nonlinear_term()
        } else {
            ZeroMeanField::zeros(0)
        };
        let coeffs = (1..=self.n_modes)
            .map(|k| {
                let k4 = (k as f64).powi(4);
                (phi.coeff(k) + forcing.coeff(k) * h) / (1.0 + h * k4)
            })
            .collect();
        ZeroMeanField::from_coeffs(coeffs)
    }
}

/// Streaming time integration yielding `(n, φ(t_n))` for `n = 0..=steps`.
///
/// Stops with [`Error::NonFinite`] if a snapshot stops being finite.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SolverConfig,
    stepper: Stepper,
    current: Option<ZeroMeanField>,
    next_index: usize,
}

impl Simulation {
    pub fn new(config: SolverConfig, u0: &InitialDatum) -> Result<Self> {
        config.validate()?;
        let phi0 = u0.to_field(config.n_modes)?;
        Ok(Self {
            config,
            stepper: Stepper::new(config.n_modes, config.dt),
            current: Some(phi0),
            next_index: 0,
        })
    }

    pub fn linear_only(mut self) -> Self {
        self.stepper = self.stepper.linear_only();
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }
}

impl Iterator for Simulation {
    type Item = Result<(usize, ZeroMeanField)>;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.next_index;
        if n > self.config.steps() {
            return None;
        }
        let phi = self.current.take()?;
        if !phi.is_finite() {
            return Some(Err(Error::NonFinite {
                t: self.config.time(n),
            }));
        }
        if n < self.config.steps() {
            self.current = Some(self.stepper.step(&phi));
        }
        self.next_index += 1;
        Some(Ok((n, phi)))
    }
}

/// Dense time series of Galerkin snapshots at `t_n = n·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub snapshots: Vec<ZeroMeanField>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.snapshots.len()).map(|n| self.config.time(n))
    }

    /// `‖φ(t_n)‖_{H¹}` for every snapshot.
    pub fn h1_norms(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.hp_norm(1)).collect()
    }

    /// Writes the little-endian binary export (see [`TrajectoryWriter`]).
    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        let mut out = TrajectoryWriter::new(w, self.config.n_modes, self.config.dt, self.snapshots.len())?;
        for s in &self.snapshots {
            out.push(s)?;
        }
        out.finish()?;
        Ok(())
    }
}

/// Runs the whole simulation and keeps every snapshot.
pub fn simulate(config: SolverConfig, u0: &InitialDatum) -> Result<Trajectory> {
    let snapshots = Simulation::new(config, u0)?
        .map(|r| r.map(|(_, phi)| phi))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { config, snapshots })
}

/// Binary trajectory stream: little-endian `f64` values.
///
/// Layout: header `N, h, count`, then for each snapshot
/// `Re û_1, Im û_1, ..., Re û_N, Im û_N`. `h` is the spacing between stored
/// snapshots.
pub struct TrajectoryWriter<W: Write> {
    inner: W,
    n_modes: usize,
    expected: usize,
    written: usize,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut inner: W, n_modes: usize, spacing: f64, count: usize) -> Result<Self> {
        for v in [n_modes as f64, spacing, count as f64] {
            inner.write_all(&v.to_le_bytes())?;
        }
        Ok(Self {
            inner,
            n_modes,
            expected: count,
            written: 0,
        })
    }

    pub fn push(&mut self, phi: &ZeroMeanField) -> Result<()> {
        if self.written == self.expected {
            return Err(Error::MalformedStream(format!(
                "more than the announced {} snapshots",
                self.expected
            )));
        }
        let mut buf = Vec::with_capacity(16 * self.n_modes);
        for k in 1..=self.n_modes {
            let c = phi.coeff(k);
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        self.inner.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.expected {
            return Err(Error::MalformedStream(format!(
                "{} snapshots written, {} announced",
                self.written, self.expected
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Reads a stream produced by [`TrajectoryWriter`]: `(spacing, snapshots)`.
pub fn read_binary<R: Read>(mut r: R) -> Result<(f64, Vec<ZeroMeanField>)> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut word)?;
        Ok(f64::from_le_bytes(word))
    };
    let n_modes = next(&mut r)?;
    let spacing = next(&mut r)?;
    let count = next(&mut r)?;
    if n_modes.fract() != 0.0 || n_modes < 0.0 || count.fract() != 0.0 || count < 0.0 {
        return Err(Error::MalformedStream(format!("bad header ({n_modes}, {count})")));
    }
    let mut snapshots = Vec::with_capacity(count as usize);
    for _ in 0..count as usize {
        let coeffs = (0..n_modes as usize)
            .map(|_| Ok(Complex64::new(next(&mut r)?, next(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        snapshots.push(ZeroMeanField::from_coeffs(coeffs));
    }
    Ok((spacing, snapshots))
}
