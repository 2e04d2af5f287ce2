//! Guessing a hidden fairness guarantee from the target model's behaviour on
//! the attack set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairness::{unfairness, BinaryVector, FairnessMetric, FairnessSpec, MetricError, SensitiveVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("no candidate metrics")]
    NoCandidates,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedConstraint {
    pub spec: FairnessSpec,
    pub per_metric_unfairness: BTreeMap<FairnessMetric, f64>,
}

/// Preference among equally unfair metrics, most preferred first. EOdds is
/// last and, being the max of PE and EO, only wins when neither is a
/// candidate.
const TIE_ORDER: [FairnessMetric; 4] = [
    FairnessMetric::Pe,
    FairnessMetric::Eo,
    FairnessMetric::Sp,
    FairnessMetric::EOdds,
];

/// The metric with the smallest measured value, ties resolved PE, EO, SP,
/// EOdds.
pub fn select_tightest(measured: &BTreeMap<FairnessMetric, f64>) -> Option<(FairnessMetric, f64)> {
    let mut best: Option<(FairnessMetric, f64)> = None;
    for metric in TIE_ORDER {
        if let Some(&value) = measured.get(&metric) {
            if best.is_none_or(|(_, b)| value < b) {
                best = Some((metric, value));
            }
        }
    }
    best
}

/// Measures each candidate on the attack set and assumes the model is fair
/// for the tightest one, with tolerance equal to its measured value.
pub fn estimate_constraint(
    attack_sensitive: &SensitiveVector,
    attack_predictions: &BinaryVector,
    attack_labels: &BinaryVector,
    candidates: &[FairnessMetric],
) -> Result<EstimatedConstraint, EstimationError> {
    let mut per_metric_unfairness = BTreeMap::new();
    for &metric in candidates {
        let value = unfairness(metric, attack_sensitive, attack_predictions, attack_labels)?;
        per_metric_unfairness.insert(metric, value);
    }
    let (metric, epsilon) = select_tightest(&per_metric_unfairness).ok_or(EstimationError::NoCandidates)?;
    Ok(EstimatedConstraint {
        spec: FairnessSpec::new(metric, epsilon)?,
        per_metric_unfairness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn measured(pairs: &[(FairnessMetric, f64)]) -> BTreeMap<FairnessMetric, f64> {
        pairs.iter().cloned().collect()
    }

    #[test]
    fn picks_the_minimum() {
        use FairnessMetric::*;
        let m = measured(&[(Sp, 0.02), (Pe, 0.01), (Eo, 0.03)]);
        assert_eq!(select_tightest(&m), Some((Pe, 0.01)));
    }

    #[test]
    fn all_zero_prefers_pe() {
        use FairnessMetric::*;
        let m = measured(&[(Sp, 0.0), (Pe, 0.0), (Eo, 0.0), (EOdds, 0.0)]);
        assert_eq!(select_tightest(&m), Some((Pe, 0.0)));
        let m = measured(&[(Sp, 0.0), (Eo, 0.0)]);
        assert_eq!(select_tightest(&m), Some((Eo, 0.0)));
    }

    #[test]
    fn eodds_loses_to_its_parts() {
        use FairnessMetric::*;
        let m = measured(&[(Pe, 0.01), (Eo, 0.03), (EOdds, 0.03)]);
        assert_eq!(select_tightest(&m), Some((Pe, 0.01)));
    }

    #[test]
    fn no_candidates_is_an_error() {
        let s = SensitiveVector::from_bits(&[0, 1]).unwrap();
        let v = BinaryVector::zeros(2);
        assert_eq!(
            estimate_constraint(&s, &v, &v, &[]),
            Err(EstimationError::NoCandidates)
        );
    }

    #[test]
    fn empty_slice_propagates() {
        let s = SensitiveVector::from_bits(&[0, 1]).unwrap();
        let v = BinaryVector::zeros(2);
        assert!(matches!(
            estimate_constraint(&s, &v, &v, &[FairnessMetric::Eo]),
            Err(EstimationError::Metric(MetricError::EmptySlice(_)))
        ));
    }

    proptest! {
        #[test]
        fn epsilon_is_the_measured_value(
            rows in prop::collection::vec((0u8..2, 0u8..2, 0u8..2), 4..60)
        ) {
            let s: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let yhat = BinaryVector::new(rows.iter().map(|r| r.1).collect()).unwrap();
            let mut y: Vec<u8> = rows.iter().map(|r| r.2).collect();
            y[0] = 0;
            y[1] = 1;
            let y = BinaryVector::new(y).unwrap();
            let s = SensitiveVector::from_bits(&s).unwrap();
            let est = estimate_constraint(&s, &yhat, &y, &FairnessMetric::ALL).unwrap();
            prop_assert_ne!(est.spec.metric, FairnessMetric::EOdds);
            prop_assert_eq!(est.spec.epsilon, unfairness(est.spec.metric, &s, &yhat, &y).unwrap());
            for v in est.per_metric_unfairness.values() {
                prop_assert!(est.spec.epsilon <= *v);
            }
        }
    }
}
