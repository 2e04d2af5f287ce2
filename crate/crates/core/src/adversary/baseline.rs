use serde::{Deserialize, Serialize};

use super::naive_bayes::{CategoricalNaiveBayes, ClassPrior, FeatureMatrix};
use super::AdversaryError;
use crate::fairness::{BinaryVector, SensitiveVector};

/// A: attack model on (X, Y). A': also sees the target model's predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdversaryMode {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "aprime")]
    APrime,
}

/// The adversary's auxiliary data, drawn from the training distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSet {
    pub features: FeatureMatrix,
    pub labels: BinaryVector,
    pub sensitive: SensitiveVector,
    pub target_predictions: Option<BinaryVector>,
}

impl AttackSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: self.labels.select(indices),
            sensitive: self.sensitive.select(indices),
            target_predictions: self.target_predictions.as_ref().map(|p| p.select(indices)),
        }
    }
}

/// Class-balanced categorical naive Bayes over the features, the labels and,
/// for A', the target predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    mode: AdversaryMode,
    cardinality: u32,
    model: CategoricalNaiveBayes,
}

/// A guess with the posterior of the chosen class as raw score.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGuess {
    pub guess: SensitiveVector,
    pub raw_scores: Vec<f64>,
}

const LAPLACE_ALPHA: f64 = 1.0;

fn augmented(
    mode: AdversaryMode,
    features: &FeatureMatrix,
    labels: &BinaryVector,
    predictions: Option<&BinaryVector>,
) -> Result<FeatureMatrix, AdversaryError> {
    let mut m = features.clone();
    if m.n_columns() == 0 && m.rows() != labels.len() {
        m = FeatureMatrix::empty(labels.len());
    }
    m.push_column(labels.iter().map(|&v| v as u32).collect())?;
    if mode == AdversaryMode::APrime {
        let p = predictions.ok_or(AdversaryError::MissingPredictions)?;
        m.push_column(p.iter().map(|&v| v as u32).collect())?;
    }
    Ok(m)
}

pub fn train_baseline(attack_set: &AttackSet, mode: AdversaryMode) -> Result<AttackModel, AdversaryError> {
    if attack_set.is_empty() {
        return Err(AdversaryError::EmptyAttackSet);
    }
    let present = attack_set
        .sensitive
        .group_sizes()
        .iter()
        .filter(|&&c| c > 0)
        .count();
    if present < 2 {
        return Err(AdversaryError::DegenerateClasses);
    }
    let x = augmented(
        mode,
        &attack_set.features,
        &attack_set.labels,
        attack_set.target_predictions.as_ref(),
    )?;
    let cardinality = attack_set.sensitive.cardinality();
    let model = CategoricalNaiveBayes::fit(
        &x,
        attack_set.sensitive.values(),
        cardinality as usize,
        ClassPrior::Uniform,
        LAPLACE_ALPHA,
    )?;
    Ok(AttackModel {
        mode,
        cardinality,
        model,
    })
}

impl AttackModel {
    pub fn mode(&self) -> AdversaryMode {
        self.mode
    }

    /// Predicts the sensitive column. Mode A ignores `predictions`.
    pub fn predict_guess(
        &self,
        features: &FeatureMatrix,
        labels: &BinaryVector,
        predictions: Option<&BinaryVector>,
    ) -> Result<RawGuess, AdversaryError> {
        if labels.is_empty() {
            return Ok(RawGuess {
                guess: SensitiveVector::new(Vec::new(), self.cardinality)?,
                raw_scores: Vec::new(),
            });
        }
        let predictions = match self.mode {
            AdversaryMode::A => None,
            AdversaryMode::APrime => predictions,
        };
        let x = augmented(self.mode, features, labels, predictions)?;
        let (guess, raw_scores) = self.model.predict(&x)?.into_iter().unzip();
        Ok(RawGuess {
            guess: SensitiveVector::new(guess, self.cardinality)?,
            raw_scores,
        })
    }
}
