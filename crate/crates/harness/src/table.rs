//! Batch runs laid out like the regularity table: one row per initial datum,
//! smallness and time columns per method.
//!
//! A row file holds one `[[row]]` table per experiment, each with the keys
//! of [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use surfverify_core::{Method, Verdict};

use crate::config::{ExperimentConfig, Overrides};
use crate::run::{run, RunOptions};
use crate::{HarnessError, Result};

pub const TABLE_CSV_HEADER: &str =
    "u0,t_star,n_modes,dt,m1_smallness,m2_smallness,m3_smallness,m1_time,m2_time,m3_time,error";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowFile {
    #[serde(default)]
    row: Vec<ExperimentConfig>,
}

pub fn parse_rows(text: &str) -> Result<Vec<ExperimentConfig>> {
    let file: RowFile = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    for (i, cfg) in file.row.iter().enumerate() {
        cfg.validate().map_err(|e| HarnessError::Config(format!("row {}: {e}", i + 1)))?;
    }
    Ok(file.row)
}

pub fn load_rows(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_rows(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub config: ExperimentConfig,
    pub t_star: f64,
    pub outcome: std::result::Result<BTreeMap<Method, Verdict>, String>,
}

impl TableRow {
    pub fn verdict(&self, method: Method) -> Option<&Verdict> {
        self.outcome.as_ref().ok().and_then(|v| v.get(&method))
    }
}

/// Runs every row in parallel. Rows without an `output_dir` write to
/// `out_dir/row<i>`. A failing row records its error and leaves the others
/// alone.
pub fn table(rows: &[ExperimentConfig], out_dir: &Path, overrides: Overrides, opts: RunOptions) -> Vec<TableRow> {
    rows.par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let mut cfg = cfg.clone();
            overrides.apply(&mut cfg);
            if cfg.output_dir.is_none() {
                cfg.output_dir = Some(out_dir.join(format!("row{}", i + 1)));
            }
            let outcome = run(&cfg, opts)
                .map(|report| report.verdicts.into_iter().map(|v| (v.method(), v)).collect())
                .map_err(|e| e.to_string());
            TableRow {
                t_star: cfg.t_star(),
                config: cfg,
                outcome,
            }
        })
        .collect()
}

fn smallness_cell(v: Option<&Verdict>) -> String {
    match v {
        None => String::new(),
        Some(v) => v
            .smallness_time()
            .filter(|&t| t < v.valid_until())
            .map_or("none".into(), |t| t.to_string()),
    }
}

fn time_cell(v: Option<&Verdict>) -> String {
    match v {
        None => String::new(),
        Some(v) if v.time_criterion_met() => "pass".into(),
        Some(v) if v.valid_until().is_finite() => v.valid_until().to_string(),
        Some(v) => format!(">{}", v.horizon()),
    }
}

pub fn write_table_csv<W: Write>(rows: &[TableRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TABLE_CSV_HEADER.split(','))?;
    for row in rows {
        let mut rec = vec![
            row.config.initial_data.to_string(),
            row.t_star.to_string(),
            row.config.n_modes.to_string(),
            row.config.dt.to_string(),
        ];
        rec.extend(Method::ALL.iter().map(|&m| smallness_cell(row.verdict(m))));
        rec.extend(Method::ALL.iter().map(|&m| time_cell(row.verdict(m))));
        rec.push(row.outcome.as_ref().err().cloned().unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush().map_err(surfverify_core::Error::from)?;
    Ok(())
}

/// Plain-text rendering: `-` for no smallness, `✓` for a met time criterion,
/// otherwise the time at which the bound stopped being valid.
pub fn render(rows: &[TableRow]) -> String {
    let fmt_time = |t: f64| format!("{t:.2}");
    let mut lines: Vec<Vec<String>> = vec![[
        "u(x,0)", "T*", "N", "h", "small M1", "small M2", "small M3", "time M1", "time M2", "time M3",
    ]
    .map(String::from)
    .to_vec()];
    let mut errors = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut line = vec![
            row.config.initial_data.to_string(),
            format!("{:.1}", row.t_star),
            row.config.n_modes.to_string(),
            format!("{:e}", row.config.dt),
        ];
        for m in Method::ALL {
            line.push(match row.verdict(*m) {
                None => String::new(),
                Some(v) => v
                    .smallness_time()
                    .filter(|&t| t < v.valid_until())
                    .map_or("-".into(), fmt_time),
            });
        }
        for m in Method::ALL {
            line.push(match row.verdict(*m) {
                None => String::new(),
                Some(v) if v.time_criterion_met() => "✓".into(),
                Some(v) if v.valid_until().is_finite() => fmt_time(v.valid_until()),
                Some(v) => format!(">{}", fmt_time(v.horizon())),
            });
        }
        if let Err(e) = &row.outcome {
            errors.push(format!("row {}: {e}", i + 1));
            line.truncate(4);
            line.push("error".into());
        }
        lines.push(line);
    }
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| lines.iter().filter_map(|l| l.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for line in &lines {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        writeln!(text, "{}", cells.join("  ").trim_end()).unwrap();
    }
    for e in errors {
        writeln!(text, "{e}").unwrap();
    }
    text
}

/// Runs the rows and writes `table.csv` and `table.txt` into `out_dir`.
pub fn run_table(
    rows: &[ExperimentConfig],
    out_dir: &Path,
    overrides: Overrides,
    opts: RunOptions,
) -> Result<(Vec<TableRow>, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let result = table(rows, out_dir, overrides, opts);
    let csv_path = out_dir.join("table.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| HarnessError::io(&csv_path, e))?;
    write_table_csv(&result, file)?;
    let txt_path = out_dir.join("table.txt");
    std::fs::write(&txt_path, render(&result)).map_err(|e| HarnessError::io(&txt_path, e))?;
    Ok((result, csv_path))
}
