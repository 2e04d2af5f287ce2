//! Baseline attribute-inference adversaries and confidence processing.

mod baseline;
mod confidence;
mod naive_bayes;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corrector::CorrectionError;
use crate::fairness::{BinaryVector, ConfidenceVector, FairnessSpec, MetricError, SensitiveVector};

pub use baseline::{train_baseline, AdversaryMode, AttackModel, AttackSet, RawGuess};
pub use confidence::{
    process_confidences, scale_scores, score_k_grid, select_k, ValidationSplit, DEFAULT_K_GRID,
    MIN_CONFIDENCE,
};
pub use naive_bayes::{CategoricalNaiveBayes, ClassPrior, FeatureMatrix};

/// Share of the attack set held out for choosing the confidence exponent.
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("the attack set is empty")]
    EmptyAttackSet,
    #[error("the attack set's sensitive column has fewer than two classes")]
    DegenerateClasses,
    #[error("mode A' needs the target model's predictions on the attack set")]
    MissingPredictions,
    #[error("model was trained on {expected} columns, got {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("column {column} has {found} rows, expected {expected}")]
    RaggedFeatures {
        column: usize,
        expected: usize,
        found: usize,
    },
    #[error("raw score {value} at index {index} is outside [0.5, 1]")]
    ScoreOutOfRange { index: usize, value: f64 },
    #[error("confidence exponent must be positive and finite, got {0}")]
    BadExponent(f64),
    #[error("the k grid is empty")]
    EmptyKGrid,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineGuess {
    pub guess: SensitiveVector,
    pub raw_scores: Vec<f64>,
    pub processed: ConfidenceVector,
    pub chosen_k: f64,
}

/// Rows of the target (training) set the adversary attacks.
#[derive(Debug, Clone, Copy)]
pub struct TargetRows<'a> {
    pub features: &'a FeatureMatrix,
    pub labels: &'a BinaryVector,
    pub predictions: &'a BinaryVector,
}

/// Trains on 80% of the attack set, picks `k` by correcting the other 20%
/// under `spec`, then retrains on the whole attack set and guesses the
/// target rows.
///
/// Without attack-set predictions there is nothing to correct the
/// validation rows against, so the smallest grid value is used.
pub fn baseline_guess(
    attack_set: &AttackSet,
    mode: AdversaryMode,
    target: TargetRows<'_>,
    spec: &FairnessSpec,
    k_grid: &[f64],
    seed: u64,
) -> Result<BaselineGuess, AdversaryError> {
    if k_grid.is_empty() {
        return Err(AdversaryError::EmptyKGrid);
    }
    let smallest_k = k_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let chosen_k = match &attack_set.target_predictions {
        Some(predictions) if attack_set.len() >= 10 => {
            let mut order: Vec<usize> = (0..attack_set.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let n_val = ((attack_set.len() as f64) * VALIDATION_FRACTION).round() as usize;
            let (val_idx, fit_idx) = order.split_at(n_val);
            let fit_set = attack_set.select_rows(fit_idx);
            match train_baseline(&fit_set, mode) {
                Ok(model) => {
                    let val_set = attack_set.select_rows(val_idx);
                    let val_predictions = predictions.select(val_idx);
                    let raw = model.predict_guess(&val_set.features, &val_set.labels, Some(&val_predictions))?;
                    let validation = ValidationSplit {
                        predictions: val_predictions,
                        labels: val_set.labels,
                        guess: raw.guess,
                        raw_scores: raw.raw_scores,
                        truth: val_set.sensitive,
                    };
                    select_k(&validation, spec, k_grid)?
                }
                Err(AdversaryError::DegenerateClasses) => smallest_k,
                Err(e) => return Err(e),
            }
        }
        _ => smallest_k,
    };
    let model = train_baseline(attack_set, mode)?;
    let raw = model.predict_guess(target.features, target.labels, Some(target.predictions))?;
    let processed = scale_scores(&raw.raw_scores, chosen_k)?;
    Ok(BaselineGuess {
        guess: raw.guess,
        raw_scores: raw.raw_scores,
        processed,
        chosen_k,
    })
}
