//! A stand-in for a fair target model: naive Bayes label scores followed by
//! group-specific decision thresholds that make the training predictions
//! satisfy the requested guarantee.

use super::{DatasetTable, FeatureEncoder, HarnessError};
use crate::adversary::{CategoricalNaiveBayes, ClassPrior};
use crate::corrector::{apply_moves, build_cost_arrays, CostArray, MoveCounts};
use crate::fairness::{
    satisfies_exact, slice_for_metric, unfairness, BinaryVector, ExactTolerance, FairnessMetric, FairnessSpec, RateBounds,
};

const LABEL_ALPHA: f64 = 1.0;

/// Positive when the score is above `cut`, or equal to it if `inclusive`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Threshold {
    cut: f64,
    inclusive: bool,
}

impl Threshold {
    const RAW: Self = Self {
        cut: 0.5,
        inclusive: false,
    };

    fn predict(&self, q: f64) -> u8 {
        u8::from(q > self.cut || (self.inclusive && q == self.cut))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairPredictor {
    encoder: FeatureEncoder,
    model: CategoricalNaiveBayes,
    metric: FairnessMetric,
    /// `[slot][group]`, where the slot is the label for PE, EO and EOdds and
    /// always 0 for SP.
    thresholds: [[Threshold; 2]; 2],
    train_predictions: BinaryVector,
    raw_train_predictions: BinaryVector,
    released_epsilon: f64,
}

fn binary_groups(table: &DatasetTable) -> Result<BinaryVector, HarnessError> {
    table.sensitive.to_binary().ok_or_else(|| {
        HarnessError::Unsupported(format!(
            "the fair predictor needs a binary sensitive attribute, got cardinality {}",
            table.sensitive.cardinality()
        ))
    })
}

impl FairPredictor {
    /// Fits the label model on `train` and repairs its training predictions
    /// to satisfy `spec` with the sensitive column fixed, flipping the
    /// smallest-margin predictions first.
    ///
    /// Exact parity is often attainable only by constant predictions, so
    /// each slice is repaired to `max(epsilon, 1 / slice size)` and the
    /// released tolerance is the larger of `epsilon` and the achieved
    /// training unfairness.
    pub fn fit(train: &DatasetTable, spec: &FairnessSpec) -> Result<Self, HarnessError> {
        let s = binary_groups(train)?;
        let sizes = train.sensitive.group_sizes();
        if sizes.iter().any(|&c| c == 0) {
            return Err(HarnessError::BadParameters(
                "both sensitive groups must be present in the training set".into(),
            ));
        }
        let encoder = FeatureEncoder::fit(train);
        let x = encoder.encode(train)?;
        let targets: Vec<u32> = train.labels.iter().map(|&v| u32::from(v)).collect();
        let model = CategoricalNaiveBayes::fit(&x, &targets, 2, ClassPrior::Empirical, LABEL_ALPHA)?;
        let q: Vec<f64> = model.predict_proba(&x)?.into_iter().map(|p| p[1]).collect();
        let raw = BinaryVector::from_bools(q.iter().map(|&v| Threshold::RAW.predict(v) == 1));
        let margins: Vec<f64> = q.iter().map(|v| (2.0 * v - 1.0).abs()).collect();

        let mut repaired = raw.as_slice().to_vec();
        let mut thresholds = [[Threshold::RAW; 2]; 2];
        for slice in slice_for_metric(spec.metric, &train.labels).as_vec() {
            if slice.is_empty() {
                continue;
            }
            let slot = match spec.metric {
                FairnessMetric::Sp => 0,
                _ => usize::from(train.labels[slice[0]]),
            };
            let yhat = raw.select(slice);
            let groups = s.select(slice);
            let m: Vec<f64> = slice.iter().map(|&i| margins[i]).collect();
            let tolerance = spec.epsilon.max(1.0 / slice.len() as f64);
            let moves = repair_slice(&yhat, &groups, &m, tolerance)?;
            let costs = build_cost_arrays(&yhat, &groups, &m)?;
            let (fixed, _) = apply_moves(&yhat, &groups, &m, &moves)?;
            for (&i, &v) in slice.iter().zip(fixed.iter()) {
                repaired[i] = v;
            }
            let score = |array: &CostArray, k: usize| q[slice[array.order[k - 1]]];
            // Group one.
            if moves.s01_pos > 0 {
                thresholds[slot][1] = Threshold {
                    cut: score(&costs.t0_pos, moves.s01_pos),
                    inclusive: true,
                };
            } else if moves.s10_pos > 0 {
                thresholds[slot][1] = Threshold {
                    cut: score(&costs.t1_pos, moves.s10_pos),
                    inclusive: false,
                };
            }
            // Group zero.
            if moves.s01_neg > 0 {
                thresholds[slot][0] = Threshold {
                    cut: score(&costs.t0_neg, moves.s01_neg),
                    inclusive: true,
                };
            } else if moves.s10_neg > 0 {
                thresholds[slot][0] = Threshold {
                    cut: score(&costs.t1_neg, moves.s10_neg),
                    inclusive: false,
                };
            }
        }

        let train_predictions = BinaryVector::new(repaired)?;
        let target = FairnessSpec::new(spec.metric, spec.epsilon)?;
        let released_epsilon = if satisfies_exact(&target, &train.sensitive, &train_predictions, &train.labels)? {
            spec.epsilon
        } else {
            let achieved = unfairness(spec.metric, &train.sensitive, &train_predictions, &train.labels)?;
            // The bump keeps the released bound at or above the exact ratio.
            (achieved * (1.0 + 1e-12)).min(1.0)
        };
        Ok(Self {
            encoder,
            model,
            metric: spec.metric,
            thresholds,
            train_predictions,
            raw_train_predictions: raw,
            released_epsilon,
        })
    }

    pub fn train_predictions(&self) -> &BinaryVector {
        &self.train_predictions
    }

    /// Unrepaired training predictions (score above 0.5).
    pub fn raw_train_predictions(&self) -> &BinaryVector {
        &self.raw_train_predictions
    }

    pub fn released_epsilon(&self) -> f64 {
        self.released_epsilon
    }

    /// The guarantee the model is published with.
    pub fn released_spec(&self) -> FairnessSpec {
        FairnessSpec {
            metric: self.metric,
            epsilon: self.released_epsilon,
            epsilon_lower: None,
        }
    }

    /// `P(y = 1 | x)` under the label model.
    pub fn label_scores(&self, table: &DatasetTable) -> Result<Vec<f64>, HarnessError> {
        let x = self.encoder.encode(table)?;
        Ok(self.model.predict_proba(&x)?.into_iter().map(|p| p[1]).collect())
    }

    /// Applies the fitted group thresholds to new rows. Rows are routed by
    /// their sensitive value and, outside SP, their label.
    pub fn predict(&self, table: &DatasetTable) -> Result<BinaryVector, HarnessError> {
        let s = binary_groups(table)?;
        let q = self.label_scores(table)?;
        Ok(BinaryVector::from_bools(q.iter().enumerate().map(|(i, &v)| {
            let slot = match self.metric {
                FairnessMetric::Sp => 0,
                _ => usize::from(table.labels[i]),
            };
            self.thresholds[slot][usize::from(s[i])].predict(v) == 1
        })))
    }
}

pub fn make_fair_predictions(train: &DatasetTable, spec: &FairnessSpec) -> Result<BinaryVector, HarnessError> {
    Ok(FairPredictor::fit(train, spec)?.train_predictions)
}

/// Cheapest flips of `yhat` (costs `margins`) that bring the two groups of
/// `groups` within `epsilon` of the slice-wide positive rate. Moves follow
/// [`build_cost_arrays`] with `yhat` as the flipped vector and `groups` as
/// the partition: `*_pos` moves act on group one, `*_neg` on group zero.
pub fn repair_slice(
    yhat: &BinaryVector,
    groups: &BinaryVector,
    margins: &[f64],
    epsilon: f64,
) -> Result<MoveCounts, HarnessError> {
    let costs = build_cost_arrays(yhat, groups, margins)?;
    let t = costs.tallies();
    let (a1, a0) = (t.n1_pos + t.n0_pos, t.n1_neg + t.n0_neg);
    if a1 == 0 || a0 == 0 {
        return Ok(MoveCounts::default());
    }
    let (p1, p0) = (t.n1_pos as i64, t.n1_neg as i64);
    let n = (a1 + a0) as u128;
    let den = n * a1.min(a0) as u128;
    let tol = RateBounds::new(epsilon, None)?.upper;
    let (a1i, a0i) = (a1 as i64, a0 as i64);
    let ok = |q1: i64, q0: i64| -> bool {
        let f = (q1 as i128 * a0i as i128 - q0 as i128 * a1i as i128).unsigned_abs();
        ExactTolerance::admits(&tol, f, den)
    };
    if ok(p1, p0) {
        return Ok(MoveCounts::default());
    }
    let slack = epsilon * n as f64 * a1.min(a0) as f64 / a1 as f64;
    let cost1 = |q1: i64| {
        if q1 >= p1 {
            costs.t0_pos.cost((q1 - p1) as usize)
        } else {
            costs.t1_pos.cost((p1 - q1) as usize)
        }
    };
    let cost0 = |q0: i64| {
        if q0 >= p0 {
            costs.t0_neg.cost((q0 - p0) as usize)
        } else {
            costs.t1_neg.cost((p0 - q0) as usize)
        }
    };

    let mut best: Option<(f64, i64, i64)> = None;
    for q1 in 0..=a1i {
        let centre = q1 as f64 * a0 as f64 / a1 as f64;
        let mut lo = ((centre - slack).ceil() as i64 - 2).clamp(0, a0i);
        let mut hi = ((centre + slack).floor() as i64 + 2).clamp(0, a0i);
        while lo <= hi && !ok(q1, lo) {
            lo += 1;
        }
        while hi >= lo && !ok(q1, hi) {
            hi -= 1;
        }
        if lo > hi {
            continue;
        }
        let q0 = p0.clamp(lo, hi);
        let cost = cost1(q1) + cost0(q0);
        let flips = (q1 - p1).abs() + (q0 - p0).abs();
        let better = match best {
            None => true,
            Some((c, b1, b0)) => cost < c || (cost == c && flips < (b1 - p1).abs() + (b0 - p0).abs()),
        };
        if better {
            best = Some((cost, q1, q0));
        }
    }
    let (_, q1, q0) = best.expect("all-negative predictions are always feasible");
    Ok(MoveCounts::from_net(q1 - p1, q0 - p0))
}
