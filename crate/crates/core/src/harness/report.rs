use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::fairness::FairnessMetric;

/// Rounds to the 6 decimals reports are written with.
pub(crate) fn r6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// One (seed, ε, metric) cell of a sweep. Floats are already rounded; wall
/// times are left out so repeated runs give identical files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellReport {
    pub seed: u64,
    pub metric: Option<FairnessMetric>,
    pub epsilon: f64,
    pub status: String,
    pub error: Option<String>,
    pub released_epsilon: Option<f64>,
    pub correction_metric: Option<FairnessMetric>,
    pub correction_epsilon: Option<f64>,
    pub estimated_sp: Option<f64>,
    pub estimated_pe: Option<f64>,
    pub estimated_eo: Option<f64>,
    pub estimated_eodds: Option<f64>,
    pub chosen_k: Option<f64>,
    pub baseline_accuracy: Option<f64>,
    pub corrected_accuracy: Option<f64>,
    pub improvement: Option<f64>,
    pub objective: Option<f64>,
    pub changed: Option<usize>,
    pub nodes_expanded: Option<u64>,
    pub proven_optimal: Option<bool>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub train_unfairness: Option<f64>,
    pub test_unfairness: Option<f64>,
    pub oracle_match: Option<bool>,
}

pub const CSV_COLUMNS: [&str; 25] = [
    "seed",
    "metric",
    "epsilon",
    "status",
    "error",
    "released_epsilon",
    "correction_metric",
    "correction_epsilon",
    "estimated_sp",
    "estimated_pe",
    "estimated_eo",
    "estimated_eodds",
    "chosen_k",
    "baseline_accuracy",
    "corrected_accuracy",
    "improvement",
    "objective",
    "changed",
    "nodes_expanded",
    "proven_optimal",
    "train_accuracy",
    "test_accuracy",
    "train_unfairness",
    "test_unfairness",
    "oracle_match",
];

fn fmt_f(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn fmt_d<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl CellReport {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    fn csv_record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            fmt_d(self.metric),
            format!("{:.6}", self.epsilon),
            self.status.clone(),
            self.error.clone().unwrap_or_default(),
            fmt_f(self.released_epsilon),
            fmt_d(self.correction_metric),
            fmt_f(self.correction_epsilon),
            fmt_f(self.estimated_sp),
            fmt_f(self.estimated_pe),
            fmt_f(self.estimated_eo),
            fmt_f(self.estimated_eodds),
            fmt_f(self.chosen_k),
            fmt_f(self.baseline_accuracy),
            fmt_f(self.corrected_accuracy),
            fmt_f(self.improvement),
            fmt_f(self.objective),
            fmt_d(self.changed),
            fmt_d(self.nodes_expanded),
            fmt_d(self.proven_optimal),
            fmt_f(self.train_accuracy),
            fmt_f(self.test_accuracy),
            fmt_f(self.train_unfairness),
            fmt_f(self.test_unfairness),
            fmt_d(self.oracle_match),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub mode: String,
    pub estimate: bool,
    pub metrics: Vec<FairnessMetric>,
    pub epsilon_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub grid_note: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// JSON for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(CSV_COLUMNS)?;
        for cell in &self.cells {
            w.write_record(cell.csv_record())?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), HarnessError> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(|e| HarnessError::Io(e.to_string()))
    }
}

pub fn read_report_json<R: Read>(r: R) -> Result<ExperimentReport, HarnessError> {
    Ok(serde_json::from_reader(r)?)
}

pub fn emit_report(report: &ExperimentReport, path: &Path, format: ReportFormat) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let w = std::io::BufWriter::new(file);
    match format {
        ReportFormat::Csv => report.write_csv(w),
        ReportFormat::Json => report.write_json(w),
    }
}

/// Means over the successful cells of one (metric, ε) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSummary {
    pub metric: Option<FairnessMetric>,
    pub epsilon: f64,
    pub cells: usize,
    pub failed: usize,
    pub mean_baseline: f64,
    pub mean_corrected: f64,
    pub mean_improvement: f64,
    pub oracle_checked: usize,
    pub oracle_mismatches: usize,
}

pub fn summarize(report: &ExperimentReport) -> Vec<EpsilonSummary> {
    let mut keys: Vec<(Option<FairnessMetric>, f64)> = Vec::new();
    for c in &report.cells {
        if !keys.iter().any(|k| k.0 == c.metric && k.1 == c.epsilon) {
            keys.push((c.metric, c.epsilon));
        }
    }
    keys.into_iter()
        .map(|(metric, epsilon)| {
            let group: Vec<&CellReport> = report
                .cells
                .iter()
                .filter(|c| c.metric == metric && c.epsilon == epsilon)
                .collect();
            let ok: Vec<&&CellReport> = group.iter().filter(|c| c.is_ok()).collect();
            let mean = |f: fn(&CellReport) -> Option<f64>| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().filter_map(|c| f(c)).sum::<f64>() / ok.len() as f64
                }
            };
            EpsilonSummary {
                metric,
                epsilon,
                cells: group.len(),
                failed: group.len() - ok.len(),
                mean_baseline: mean(|c| c.baseline_accuracy),
                mean_corrected: mean(|c| c.corrected_accuracy),
                mean_improvement: mean(|c| c.improvement),
                oracle_checked: group.iter().filter(|c| c.oracle_match.is_some()).count(),
                oracle_mismatches: group.iter().filter(|c| c.oracle_match == Some(false)).count(),
            }
        })
        .collect()
}
