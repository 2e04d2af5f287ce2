//! Domain vectors, statistical fairness metrics and reconstruction scoring.
//!
//! Each metric compares every group's rate with the rate over its whole
//! slice: positive prediction rate over all rows (SP), over negatively
//! labelled rows (PE) or over positively labelled rows (EO). EOdds is the
//! conjunction of PE and EO.

mod exact;
mod metrics;
mod types;

use thiserror::Error;

pub use exact::{rate_gap, ExactTolerance, GroupRate, RateBounds};
pub use metrics::{
    counts_satisfy, reconstruction_accuracy, satisfies, satisfies_exact, slice_for_metric,
    unfairness, MetricSlices, SliceCounts, FAIRNESS_SLACK,
};
pub use types::{
    AttackInstance, BinaryVector, ConfidenceVector, FairnessMetric, FairnessSpec, SensitiveVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("the {0} slice contains no examples")]
    EmptySlice(FairnessMetric),
    #[error("empty vector")]
    EmptyVector,
    #[error("value {value} at index {index} is not binary")]
    NotBinary { index: usize, value: u32 },
    #[error("value {value} at index {index} is outside 0..{cardinality}")]
    ValueOutOfRange {
        index: usize,
        value: u32,
        cardinality: u32,
    },
    #[error("sensitive cardinality must be at least 2, got {0}")]
    BadCardinality(u32),
    #[error("confidence {value} at index {index} is negative or not finite")]
    BadConfidence { index: usize, value: f64 },
    #[error("tolerance {0} is outside [0, 1]")]
    BadTolerance(f64),
    #[error("lower bound {lower} is outside [0, {epsilon}]")]
    BadLowerBound { lower: f64, epsilon: f64 },
    #[error("unknown fairness metric `{0}`")]
    UnknownMetric(String),
}
