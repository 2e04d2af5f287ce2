//! Normalization and power scaling of raw attack-model scores, with the
//! power chosen by correcting a held-out validation split.

use super::AdversaryError;
use crate::corrector::correct;
use crate::fairness::{
    reconstruction_accuracy, AttackInstance, BinaryVector, ConfidenceVector, FairnessSpec,
    SensitiveVector,
};

pub const DEFAULT_K_GRID: [f64; 6] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];

/// Floor on processed confidences so every flip has a positive cost.
pub const MIN_CONFIDENCE: f64 = 1e-12;

/// `((raw - 0.5) / 0.5)^k`, floored at [`MIN_CONFIDENCE`].
pub fn scale_scores(raw_scores: &[f64], k: f64) -> Result<ConfidenceVector, AdversaryError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(AdversaryError::BadExponent(k));
    }
    let values = raw_scores
        .iter()
        .enumerate()
        .map(|(index, &raw)| {
            if !(0.5..=1.0).contains(&raw) {
                return Err(AdversaryError::ScoreOutOfRange { index, value: raw });
            }
            let normalized = (raw - 0.5) / 0.5;
            Ok(normalized.powf(k).max(MIN_CONFIDENCE))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConfidenceVector::new(values)?)
}

/// Held-out attack rows with the attack model's guess on them.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSplit {
    pub predictions: BinaryVector,
    pub labels: BinaryVector,
    pub guess: SensitiveVector,
    pub raw_scores: Vec<f64>,
    pub truth: SensitiveVector,
}

/// Corrected validation accuracy for each `k`, `None` where correction
/// failed.
pub fn score_k_grid(
    validation: &ValidationSplit,
    spec: &FairnessSpec,
    k_grid: &[f64],
) -> Result<Vec<Option<f64>>, AdversaryError> {
    k_grid
        .iter()
        .map(|&k| {
            let confidence = scale_scores(&validation.raw_scores, k)?;
            let instance = AttackInstance::new(
                validation.predictions.clone(),
                validation.labels.clone(),
                validation.guess.clone(),
                confidence,
                None,
            )?;
            Ok(correct(&instance, spec)
                .ok()
                .and_then(|r| reconstruction_accuracy(&r.corrected, &validation.truth).ok()))
        })
        .collect()
}

/// Picks the `k` with the highest corrected validation accuracy (smallest
/// `k` on ties, the smallest grid value when every correction fails).
pub fn select_k(validation: &ValidationSplit, spec: &FairnessSpec, k_grid: &[f64]) -> Result<f64, AdversaryError> {
    if k_grid.is_empty() {
        return Err(AdversaryError::EmptyKGrid);
    }
    let scores = score_k_grid(validation, spec, k_grid)?;
    let mut order: Vec<usize> = (0..k_grid.len()).collect();
    order.sort_by(|&a, &b| k_grid[a].total_cmp(&k_grid[b]));
    let mut best: Option<(f64, f64)> = None;
    for i in order {
        if let Some(acc) = scores[i] {
            if best.is_none_or(|(b, _)| acc > b) {
                best = Some((acc, k_grid[i]));
            }
        }
    }
    Ok(best.map_or_else(
        || k_grid.iter().cloned().fold(f64::INFINITY, f64::min),
        |(_, k)| k,
    ))
}

pub fn process_confidences(
    raw_scores: &[f64],
    validation: &ValidationSplit,
    spec: &FairnessSpec,
    k_grid: &[f64],
) -> Result<(ConfidenceVector, f64), AdversaryError> {
    let k = select_k(validation, spec, k_grid)?;
    Ok((scale_scores(raw_scores, k)?, k))
}
