//! End-to-end attack pipeline: data ingestion and splitting, a synthetic
//! benchmark, a simulated fair target model, ε sweeps and reports.

mod dataset;
mod experiment;
mod instance_io;
mod predictor;
mod report;
mod split;
mod synth;

use std::path::Path;

use thiserror::Error;

use crate::adversary::AdversaryError;
use crate::corrector::CorrectionError;
use crate::estimator::EstimationError;
use crate::fairness::MetricError;

pub use dataset::{
    ingest_csv, ingest_reader, DatasetSchema, DatasetTable, FeatureColumn, FeatureEncoder, FeatureKind,
    FeatureSpec,
};
pub use experiment::{
    default_epsilon_grid, run_experiment, AttackMode, DataSource, ExperimentConfig, ORACLE_SLICE,
};
pub use instance_io::{
    read_guess_csv, read_instance_csv, write_corrected_csv, write_guess_csv, write_instance_csv, ExternalGuesses,
    InstanceTable,
};
pub use predictor::{make_fair_predictions, repair_slice, FairPredictor};
pub use report::{
    emit_report, read_report_json, summarize, CellReport, EpsilonSummary, ExperimentReport, ReportFormat,
    ReportMetadata, CSV_COLUMNS,
};
pub use split::{split_dataset, split_sizes, DEFAULT_FRACTIONS};
pub use synth::{synth_generate, SynthParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate id {0}")]
    DuplicateId(i64),
    #[error("split fractions {0:?} must be positive and sum to 1")]
    BadFractions(Vec<f64>),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no external guess for id {0}")]
    MissingGuess(i64),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("json error: {0}")]
    Json(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    /// True when no reconstruction can meet the constraint.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Self::Correction(CorrectionError::Infeasible)
                | Self::Adversary(AdversaryError::Correction(CorrectionError::Infeasible))
        )
    }
}

impl From<csv::Error> for HarnessError {
    fn from(err: csv::Error) -> Self {
        match err.kind() {
            csv::ErrorKind::Io(e) => Self::Io(e.to_string()),
            _ => Self::Csv(err.to_string()),
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(err: serde_json::Error) -> Self {
        Self::Json(err.to_string())
    }
}
