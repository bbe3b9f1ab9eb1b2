//! Experiment configuration.
//!
//! A config is a flat TOML file:
//!
//! ```toml
//! initial_data = "sin(x) + 1/2 sin(2x)"
//! n_modes = 128
//! dt = 1e-5
//! t_end = 1.6            # optional, default: T* rounded up to 0.1, plus 0.1
//! methods = ["m1", "m2", "m3"]
//! restart_stride = 1     # Method 3 cell length in solver steps
//! linf_mode = "grid"     # or "coeff"
//! kstar_mode = "paper"   # or "strict"
//! t_star_mode = "theorem"  # or "table"
//! output_dir = "out/sin"
//! snapshot_stride = 100  # thinning of everything written per step
//! write_trajectory = false
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surfverify_core::verify::{default_horizon, t_star};
use surfverify_core::{InitialDatum, KStarMode, LinfMode, Method, SolverConfig, TStarMode};

use crate::{HarnessError, Result};

pub const DEFAULT_OUTPUT_DIR: &str = "surfverify-out";

fn one() -> usize {
    1
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub initial_data: InitialDatum,
    pub n_modes: usize,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "one")]
    pub restart_stride: usize,
    #[serde(default)]
    pub linf_mode: LinfMode,
    #[serde(default)]
    pub kstar_mode: KStarMode,
    #[serde(default)]
    pub t_star_mode: TStarMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub write_trajectory: bool,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the datum and discretisation.
    pub fn new(initial_data: InitialDatum, n_modes: usize, dt: f64) -> Self {
        Self {
            initial_data,
            n_modes,
            dt,
            t_end: None,
            methods: all_methods(),
            restart_stride: 1,
            linf_mode: LinfMode::default(),
            kstar_mode: KStarMode::default(),
            t_star_mode: TStarMode::default(),
            output_dir: None,
            snapshot_stride: 1,
            write_trajectory: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(HarnessError::InvalidKey { key: key.into(), msg });
        if self.n_modes < 2 {
            return bad("n_modes", format!("must be at least 2, got {}", self.n_modes));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        let k = self.initial_data.max_wavenumber();
        if k > self.n_modes {
            return bad("initial_data", format!("wavenumber {k} exceeds n_modes = {}", self.n_modes));
        }
        if let Some(t) = self.t_end {
            if !(t >= self.dt && t.is_finite()) {
                return bad("t_end", format!("must be finite and at least dt, got {t}"));
            }
        }
        if self.methods.is_empty() {
            return bad("methods", "at least one method is required".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad("methods", format!("{m} listed twice"));
            }
        }
        if self.restart_stride == 0 {
            return bad("restart_stride", "must be at least 1".into());
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn t_star(&self) -> f64 {
        t_star(&self.initial_data, self.t_star_mode)
    }

    pub fn resolved_t_end(&self) -> f64 {
        self.t_end.unwrap_or_else(|| default_horizon(self.t_star()))
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        Ok(SolverConfig::new(self.n_modes, self.dt, self.resolved_t_end())?)
    }

    pub fn steps(&self) -> usize {
        let t_end = self.resolved_t_end();
        (t_end / self.dt * (1.0 + 1e-12)).floor() as usize
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub linf_mode: Option<LinfMode>,
    pub kstar_mode: Option<KStarMode>,
    pub t_star_mode: Option<TStarMode>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.linf_mode {
            cfg.linf_mode = m;
        }
        if let Some(m) = self.kstar_mode {
            cfg.kstar_mode = m;
        }
        if let Some(m) = self.t_star_mode {
            cfg.t_star_mode = m;
        }
    }
}
