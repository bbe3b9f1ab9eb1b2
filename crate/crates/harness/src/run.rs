//! One experiment: simulate, measure the residual, bound the error, decide.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use surfverify_core::evolve::TrajectoryWriter;
use surfverify_core::verify::run_method;
use surfverify_core::{BoundSeries, CoefficientSeries, Constants, Method, SeriesBuilder, Simulation, Verdict};

use crate::config::ExperimentConfig;
use crate::{HarnessError, Result};

/// Runs with more solver steps than this need explicit permission.
pub const LONG_STEP_LIMIT: usize = 1_000_000;

pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAJECTORY_FILE: &str = "trajectory.bin";

pub fn bound_file(method: Method) -> String {
    format!("bound_{method}.csv")
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub allow_long: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    /// `√(∫₀ᵀ ‖RES‖²_{H⁻¹} dt)`
    pub total_hm1: f64,
    /// Largest per-interval RMS of `‖RES‖_{H⁻¹}`.
    pub max_hm1: f64,
    pub final_hm1: f64,
    pub max_phixx_linf: f64,
}

impl ResidualStats {
    fn of(series: &CoefficientSeries) -> Self {
        let ivs = series.intervals();
        Self {
            total_hm1: series.total_residual(),
            max_hm1: ivs.iter().map(|iv| iv.res_hm1_rms()).fold(0.0, f64::max),
            final_hm1: ivs.last().map_or(0.0, |iv| iv.res_hm1_rms()),
            max_phixx_linf: ivs
                .iter()
                .map(|iv| iv.phixx_linf_endpoints.0.max(iv.phixx_linf_endpoints.1))
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub simulate_s: f64,
    pub bounds_s: f64,
    pub write_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// The config as run, with `t_end` resolved; running it again reproduces
    /// this report.
    pub config: ExperimentConfig,
    pub t_star: f64,
    pub steps: usize,
    pub verdicts: Vec<Verdict>,
    pub bound_files: BTreeMap<Method, String>,
    pub coefficients_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_file: Option<String>,
    pub residual: ResidualStats,
    pub constants: Constants,
    pub timings: Timings,
}

impl Report {
    pub fn verdict(&self, method: Method) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.method() == method)
    }
}

/// In-memory results of the pipeline, before anything is written.
#[derive(Debug, Clone)]
pub struct Computation {
    pub config: ExperimentConfig,
    pub series: CoefficientSeries,
    /// `‖φ(t_n)‖_{H¹}` for every solver node.
    pub phi_h1: Vec<f64>,
    pub bounds: Vec<(Method, BoundSeries)>,
    pub verdicts: Vec<Verdict>,
    pub simulate_s: f64,
    pub bounds_s: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

/// Simulation, residual and bounds without writing result files. The
/// trajectory is streamed to `trajectory` when given.
pub fn compute(cfg: &ExperimentConfig, opts: RunOptions, trajectory: Option<&Path>) -> Result<Computation> {
    cfg.validate()?;
    let mut config = cfg.clone();
    config.t_end = Some(cfg.resolved_t_end());
    let steps = config.steps();
    if steps > LONG_STEP_LIMIT && !opts.allow_long {
        return Err(HarnessError::TooLong { steps });
    }
    let solver = config.solver()?;
    let consts = Constants::default();
    let t_star = config.t_star();

    let started = Instant::now();
    let stride = config.snapshot_stride;
    let mut writer = match trajectory {
        Some(path) => Some(TrajectoryWriter::new(
            create(path)?,
            config.n_modes,
            stride as f64 * config.dt,
            solver.steps() / stride + 1,
        )?),
        None => None,
    };
    let mut builder = SeriesBuilder::new(config.dt, config.linf_mode);
    let mut phi_h1 = Vec::with_capacity(solver.steps() + 1);
    for item in Simulation::new(solver, &config.initial_data)? {
        let (n, phi) = item?;
        phi_h1.push(phi.hp_norm(1));
        if let Some(w) = writer.as_mut() {
            if n % stride == 0 {
                w.push(&phi)?;
            }
        }
        builder.push(phi);
    }
    if let Some(w) = writer {
        w.finish()?.flush().map_err(surfverify_core::Error::from)?;
    }
    let series = builder.finish()?;
    let simulate_s = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let bounds: Vec<(Method, BoundSeries)> = config
        .methods
        .iter()
        .map(|&m| (m, run_method(m, 0.0, &series, &consts, config.kstar_mode, config.restart_stride)))
        .collect();
    let verdicts = bounds
        .iter()
        .map(|(m, b)| Verdict::assess(*m, b, &phi_h1, t_star, consts.eps0))
        .collect();
    let bounds_s = started.elapsed().as_secs_f64();

    Ok(Computation {
        config,
        series,
        phi_h1,
        bounds,
        verdicts,
        simulate_s,
        bounds_s,
    })
}

/// Runs the experiment and writes its artefacts to the configured directory:
/// `coefficients.csv`, one `bound_<method>.csv` per method, `summary.json`
/// and, if requested, `trajectory.bin`.
pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Report> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let trajectory = cfg.write_trajectory.then(|| dir.join(TRAJECTORY_FILE));
    let comp = compute(cfg, opts, trajectory.as_deref())?;

    let started = Instant::now();
    let stride = comp.config.snapshot_stride;
    comp.series
        .coarsened(stride)
        .write_csv(create(&dir.join(COEFFICIENTS_FILE))?)?;
    let mut bound_files = BTreeMap::new();
    for (m, bound) in &comp.bounds {
        let name = bound_file(*m);
        let per_sample = match m {
            Method::M3 => comp.config.restart_stride,
            _ => 1,
        };
        let sample_stride = (stride / per_sample).max(1);
        bound.write_csv(&comp.phi_h1, sample_stride, create(&dir.join(&name))?)?;
        bound_files.insert(*m, name);
    }
    let write_s = started.elapsed().as_secs_f64();

    let report = Report {
        t_star: comp.config.t_star(),
        steps: comp.series.len(),
        verdicts: comp.verdicts,
        bound_files,
        coefficients_file: COEFFICIENTS_FILE.into(),
        trajectory_file: trajectory.map(|_| TRAJECTORY_FILE.into()),
        residual: ResidualStats::of(&comp.series),
        constants: Constants::default(),
        timings: Timings {
            simulate_s: comp.simulate_s,
            bounds_s: comp.bounds_s,
            write_s,
        },
        config: comp.config,
    };
    let path = dir.join(SUMMARY_FILE);
    let mut out = create(&path)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| HarnessError::io(&path, e))?;
    Ok(report)
}
