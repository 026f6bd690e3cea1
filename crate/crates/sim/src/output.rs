//! CSV and JSON artifacts.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! recovers the exact values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pseudolat_core::waveform::Scheme;
use pseudolat_core::{MeasurementMatrix, Position3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::compare::WaveformComparison;
use crate::config::CONFIG_VERSION;
use crate::error::{Result, SimError};
use crate::scenario::{MetricsReport, Summary};

pub const REPORT_CSV: &str = "report.csv";
pub const REVOLUTIONS_CSV: &str = "revolutions.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const WAVEFORM_ERRORS_CSV: &str = "waveform_errors.csv";
pub const WAVEFORM_FAILURES_CSV: &str = "waveform_failures.csv";
pub const WAVEFORM_HIST_CSV: &str = "waveform_hist.csv";
pub const WAVEFORM_SUMMARY_JSON: &str = "waveform_summary.json";

/// One row of `report.csv`: the final revolution of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub run: usize,
    pub true_x: f64,
    pub true_y: f64,
    pub true_z: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_z: f64,
    pub err_m: f64,
    pub residual: f64,
    pub converged: bool,
    pub n_alternates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevolutionRow {
    pub run: usize,
    pub revolution: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub center_z: f64,
    pub radius: f64,
    pub true_x: f64,
    pub true_y: f64,
    pub true_z: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_z: f64,
    pub err_m: f64,
    pub residual: f64,
    pub converged: bool,
    pub n_alternates: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistRow {
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub bin_left_m: f64,
    pub bin_right_m: f64,
    pub density: f64,
}

/// One row of a dataset export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub rev: usize,
    pub row: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub d: f64,
    pub los: bool,
    pub label_x: f64,
    pub label_y: f64,
    pub label_z: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    version: u32,
    scenario: &'a str,
    summary: &'a Summary,
}

#[derive(Serialize)]
struct ComparisonFile<'a> {
    version: u32,
    #[serde(flatten)]
    comparison: &'a WaveformComparison,
}

/// Writes `header` then one record per row; the header is written even
/// when there are no rows.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| SimError::csv(path, e))?;
    w.write_record(header).map_err(|e| SimError::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| SimError::csv(path, e))?;
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SimError::csv(path, e))?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| SimError::csv(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| SimError::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| SimError::io(path, e))?;
    w.flush().map_err(|e| SimError::io(path, e))
}

/// Writes `report.csv`, `revolutions.csv` and `summary.json` into `dir`.
pub fn write_scenario(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let report_path = dir.join(REPORT_CSV);
    write_csv(
        &report_path,
        &[
            "scenario", "run", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "err_m", "residual",
            "converged", "n_alternates",
        ],
        report.runs.iter().map(|r| {
            let last = r.last();
            ReportRow {
                scenario: report.scenario.clone(),
                run: r.run,
                true_x: last.truth.x,
                true_y: last.truth.y,
                true_z: last.truth.z,
                est_x: last.estimate.x,
                est_y: last.estimate.y,
                est_z: last.estimate.z,
                err_m: last.error_m,
                residual: last.residual,
                converged: last.converged,
                n_alternates: last.n_alternates,
            }
        }),
    )?;
    let rev_path = dir.join(REVOLUTIONS_CSV);
    write_csv(
        &rev_path,
        &[
            "run", "revolution", "center_x", "center_y", "center_z", "radius", "true_x", "true_y", "true_z", "est_x",
            "est_y", "est_z", "err_m", "residual", "converged", "n_alternates", "dropped",
        ],
        report.runs.iter().flat_map(|r| {
            r.revolutions.iter().map(move |v| RevolutionRow {
                run: r.run,
                revolution: v.revolution,
                center_x: v.center.x,
                center_y: v.center.y,
                center_z: v.center.z,
                radius: v.radius,
                true_x: v.truth.x,
                true_y: v.truth.y,
                true_z: v.truth.z,
                est_x: v.estimate.x,
                est_y: v.estimate.y,
                est_z: v.estimate.z,
                err_m: v.error_m,
                residual: v.residual,
                converged: v.converged,
                n_alternates: v.n_alternates,
                dropped: v.dropped,
            })
        }),
    )?;
    let summary_path = dir.join(SUMMARY_JSON);
    write_json(
        &summary_path,
        &SummaryFile {
            version: CONFIG_VERSION,
            scenario: &report.scenario,
            summary: &report.summary,
        },
    )?;
    Ok(vec![report_path, rev_path, summary_path])
}

/// Writes the per-trial errors, censored failures, histograms and summary.
pub fn write_comparison(cmp: &WaveformComparison, dir: &Path) -> Result<Vec<PathBuf>> {
    let errors = dir.join(WAVEFORM_ERRORS_CSV);
    write_csv(&errors, &["trial", "scheme", "delta_f_hz", "error_m"], &cmp.rows)?;
    let failures = dir.join(WAVEFORM_FAILURES_CSV);
    write_csv(&failures, &["trial", "scheme", "delta_f_hz", "reason"], &cmp.failures)?;
    let hist = dir.join(WAVEFORM_HIST_CSV);
    write_csv(
        &hist,
        &["scheme", "delta_f_hz", "bin_left_m", "bin_right_m", "density"],
        cmp.stats.iter().flat_map(|s| {
            s.histogram.bins().map(move |(l, r, d)| HistRow {
                scheme: s.scheme,
                delta_f_hz: s.delta_f_hz,
                bin_left_m: l,
                bin_right_m: r,
                density: d,
            })
        }),
    )?;
    let summary = dir.join(WAVEFORM_SUMMARY_JSON);
    write_json(
        &summary,
        &ComparisonFile {
            version: CONFIG_VERSION,
            comparison: cmp,
        },
    )?;
    Ok(vec![errors, failures, hist, summary])
}

/// Writes measurement matrices as one CSV row per matrix row. An empty
/// list is an error and creates no file.
pub fn export_dataset(matrices: &[MeasurementMatrix], path: &Path) -> Result<()> {
    if matrices.is_empty() {
        return Err(SimError::Format {
            path: path.to_path_buf(),
            message: "no measurement matrices to export".into(),
        });
    }
    write_csv(
        path,
        &["rev", "row", "x", "y", "z", "d", "los", "label_x", "label_y", "label_z"],
        matrices.iter().flat_map(|m| {
            m.rows.iter().zip(&m.los).enumerate().map(move |(i, (r, &los))| DatasetRow {
                rev: m.revolution,
                row: i,
                x: r[0],
                y: r[1],
                z: r[2],
                d: r[3],
                los,
                label_x: m.label.x,
                label_y: m.label.y,
                label_z: m.label.z,
            })
        }),
    )
}

/// Parses a file written by [`export_dataset`].
pub fn read_dataset(path: &Path) -> Result<Vec<MeasurementMatrix>> {
    let bad = |message: String| SimError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut out: Vec<MeasurementMatrix> = Vec::new();
    for (line, r) in read_csv::<DatasetRow>(path)?.into_iter().enumerate() {
        let label = Position3::new(r.label_x, r.label_y, r.label_z);
        let start_new = out.last().is_none_or(|m| m.revolution != r.rev);
        if start_new {
            out.push(MeasurementMatrix {
                revolution: r.rev,
                rows: Vec::new(),
                los: Vec::new(),
                label,
            });
        }
        let m = out.last_mut().expect("pushed above");
        if r.row != m.rows.len() {
            return Err(bad(format!("data line {}: row {} out of sequence", line + 1, r.row)));
        }
        if m.label != label {
            return Err(bad(format!("data line {}: label changes within rev {}", line + 1, r.rev)));
        }
        m.rows.push([r.x, r.y, r.z, r.d]);
        m.los.push(r.los);
    }
    Ok(out)
}
