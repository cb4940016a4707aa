//! CSV and JSON renderings of sweep results.
//!
//! CSV: header `knob_value,auc,acc,precision,recall`, one row per grid value,
//! undefined metrics written as `NA`. JSON: the full [`SweepResult`], including
//! confusion counts, divergence status and the overcomplete flag.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::metrics::MetricsReport;
use super::sweep::{Knob, SweepResult};

pub const CSV_HEADER: &str = "knob_value,auc,acc,precision,recall";
const UNDEFINED: &str = "NA";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Contract(format!("unknown report format `{other}`"))),
        }
    }
}

/// `sweep_<knob>_<seed>.<ext>`
pub fn report_file_name(knob: Knob, seed: u64, format: ReportFormat) -> String {
    format!("sweep_{}_{}.{}", knob.name(), seed, format.extension())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| x.to_string())
}

pub fn sweep_to_csv(result: &SweepResult) -> Result<String> {
    if result.points.is_empty() {
        return Err(Error::Contract(
            "refusing to emit a sweep with an empty grid".into(),
        ));
    }
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &result.points {
        let r = p.report.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            p.knob_value,
            cell(r.map(|r| r.auc)),
            cell(r.map(|r| r.acc)),
            cell(r.and_then(|r| r.precision)),
            cell(r.and_then(|r| r.recall)),
        ));
    }
    Ok(s)
}

pub fn sweep_to_json(result: &SweepResult) -> Result<String> {
    if result.points.is_empty() {
        return Err(Error::Contract(
            "refusing to emit a sweep with an empty grid".into(),
        ));
    }
    let mut s = serde_json::to_string_pretty(result)
        .map_err(|e| Error::Contract(format!("sweep serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(result: &SweepResult, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => sweep_to_csv(result)?,
        ReportFormat::Json => sweep_to_json(result)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `sweep_<knob>_<seed>.<ext>` into `dir` and returns its path.
pub fn emit_report_in(result: &SweepResult, dir: &Path, format: ReportFormat) -> Result<PathBuf> {
    let path = dir.join(report_file_name(result.knob, result.seed, format));
    emit_report(result, &path, format)?;
    Ok(path)
}

/// One parsed CSV row: `(knob_value, [auc, acc, precision, recall])`.
pub type CsvRow = (f64, [Option<f64>; 4]);

pub fn parse_sweep_csv(text: &str) -> Result<Vec<CsvRow>> {
    let bad = |m: String| Error::Parse {
        path: PathBuf::from("<sweep csv>"),
        message: m,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s == UNDEFINED {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| bad(format!("bad number `{s}`")))
        }
    };
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(bad(format!("expected 5 cells in `{line}`")));
            }
            let knob = num(cells[0])?.ok_or_else(|| bad("knob value is NA".into()))?;
            Ok((
                knob,
                [
                    num(cells[1])?,
                    num(cells[2])?,
                    num(cells[3])?,
                    num(cells[4])?,
                ],
            ))
        })
        .collect()
}

/// Single-report CSV used by `evaluate`.
pub fn metrics_to_csv(m: &MetricsReport) -> String {
    format!(
        "auc,acc,precision,recall,tp,fp,tn,fn,n,delta_used\n{},{},{},{},{},{},{},{},{},{}\n",
        m.auc,
        m.acc,
        cell(m.precision),
        cell(m.recall),
        m.confusion.tp,
        m.confusion.fp,
        m.confusion.tn,
        m.confusion.fn_,
        m.n,
        m.delta_used
    )
}
