use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use surfverify::config::{ExperimentConfig, Overrides};
use surfverify::run::{run, RunOptions};
use surfverify::{plot, table};
use surfverify_core::{KStarMode, LinfMode, TStarMode};

/// Numerical verification of global regularity for the 1D surface growth equation.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Flags {
    /// Allow runs with more than a million solver steps.
    #[arg(long)]
    long: bool,
    /// How ‖φ_xx‖_{L∞} is evaluated: grid or coeff.
    #[arg(long)]
    linf: Option<LinfMode>,
    /// Method 1 threshold: paper or strict.
    #[arg(long)]
    kstar: Option<KStarMode>,
    /// Time-criterion horizon: theorem (4‖u₀‖²) or table (4‖u₀‖).
    #[arg(long)]
    tstar: Option<TStarMode>,
}

impl Flags {
    fn overrides(self) -> Overrides {
        Overrides {
            linf_mode: self.linf,
            kstar_mode: self.kstar,
            t_star_mode: self.tstar,
        }
    }

    fn options(self) -> RunOptions {
        RunOptions { allow_long: self.long }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every `[[row]]` of a row file in parallel and tabulate the verdicts.
    Table {
        rows: PathBuf,
        #[arg(long, short, default_value = "table-out")]
        out: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Write downsampled plot CSVs for a finished run.
    Series { dir: PathBuf },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, out, flags } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            flags.overrides().apply(&mut cfg);
            if out.is_some() {
                cfg.output_dir = out;
            }
            let report = run(&cfg, flags.options()).with_context(|| format!("running {}", config.display()))?;
            println!(
                "{}: T* = {:.4}, {} steps, total residual {:.3e}",
                cfg.initial_data, report.t_star, report.steps, report.residual.total_hm1
            );
            for v in &report.verdicts {
                let small = v.smallness_time().map_or("none".into(), |t| format!("{t:.4}"));
                let valid = if v.valid_until().is_finite() {
                    format!("{:.4}", v.valid_until())
                } else {
                    "end".into()
                };
                println!(
                    "  {}: smallness {small}, valid until {valid}, time criterion {}, globally regular {}",
                    v.method(),
                    v.time_criterion_met(),
                    v.globally_regular()
                );
            }
            println!("results in {}", cfg.output_dir().display());
        }
        Command::Table { rows, out, flags } => {
            let configs = table::load_rows(&rows)?;
            let (result, csv) = table::run_table(&configs, &out, flags.overrides(), flags.options())?;
            print!("{}", table::render(&result));
            println!("wrote {}", csv.display());
        }
        Command::Series { dir } => {
            for path in plot::series(&dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}
