use std::time::Instant;

use super::efficient::{solve_efficient_with, SearchStrategy};
use super::groups::{apply_moves_with, build_cost_arrays, tally_groups, MoveCounts};
use super::{CorrectionError, CorrectionResult, Moves, SolverStats};
use crate::fairness::{
    slice_for_metric, AttackInstance, FairnessSpec, MetricSlices, RateBounds, SensitiveVector,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorrectorOptions {
    pub strategy: SearchStrategy,
}

/// Corrects a binary guess on the slice(s) the metric constrains. The
/// instance's `truth` is never read.
pub fn correct(instance: &AttackInstance, spec: &FairnessSpec) -> Result<CorrectionResult, CorrectionError> {
    correct_with(instance, spec, &CorrectorOptions::default())
}

#[derive(Debug, Clone, Default)]
struct SliceOutcome {
    moves: MoveCounts,
    changed: Vec<usize>,
    nodes: u64,
}

impl SliceOutcome {
    fn merge(mut self, other: SliceOutcome) -> Self {
        self.moves = self.moves + other.moves;
        self.changed.extend(other.changed);
        self.changed.sort_unstable();
        self.nodes += other.nodes;
        self
    }
}

fn solve_slice(
    instance: &AttackInstance,
    guess_bits: &crate::fairness::BinaryVector,
    indices: &[usize],
    bounds: &RateBounds,
    strategy: SearchStrategy,
) -> Result<SliceOutcome, CorrectionError> {
    if indices.is_empty() {
        return Ok(SliceOutcome::default());
    }
    let guess = guess_bits.select(indices);
    let yhat = instance.predictions.select(indices);
    let conf = instance.confidence.select(indices);
    let tallies = tally_groups(&guess, &yhat)?;
    let costs = build_cost_arrays(&guess, &yhat, &conf)?;
    let solution = solve_efficient_with(
        &tallies,
        &costs,
        tallies.positives(),
        tallies.total(),
        bounds,
        strategy,
    )?;
    let (_, local) = apply_moves_with(&guess, &costs, &solution.moves)?;
    Ok(SliceOutcome {
        moves: solution.moves,
        changed: local.into_iter().map(|i| indices[i]).collect(),
        nodes: solution.nodes_expanded,
    })
}

fn changed_cost(instance: &AttackInstance, changed: &[usize]) -> f64 {
    changed.iter().fold(0.0, |acc, &i| acc + instance.confidence[i])
}

pub fn correct_with(
    instance: &AttackInstance,
    spec: &FairnessSpec,
    options: &CorrectorOptions,
) -> Result<CorrectionResult, CorrectionError> {
    let started = Instant::now();
    let guess_bits = instance
        .guess
        .to_binary()
        .ok_or(CorrectionError::NotBinary(instance.guess.cardinality()))?;
    let bounds = RateBounds::from_spec(spec)?;
    let strategy = options.strategy;

    let outcome = match slice_for_metric(spec.metric, &instance.labels) {
        MetricSlices::Single(slice) => solve_slice(instance, &guess_bits, &slice, &bounds, strategy)?,
        MetricSlices::Pair(negatives, positives) => {
            if bounds.lower.is_none() {
                let pe = solve_slice(instance, &guess_bits, &negatives, &bounds, strategy)?;
                let eo = solve_slice(instance, &guess_bits, &positives, &bounds, strategy)?;
                pe.merge(eo)
            } else {
                // The lower bound holds if either slice reaches it; try both
                // placements and keep the cheaper.
                let upper = bounds.upper_only();
                let mut best: Option<(f64, SliceOutcome)> = None;
                let mut first_err = None;
                for (neg_bounds, pos_bounds, lower_slice) in [
                    (bounds, upper, &negatives),
                    (upper, bounds, &positives),
                ] {
                    if lower_slice.is_empty() {
                        continue;
                    }
                    let attempt = solve_slice(instance, &guess_bits, &negatives, &neg_bounds, strategy)
                        .and_then(|pe| {
                            solve_slice(instance, &guess_bits, &positives, &pos_bounds, strategy)
                                .map(|eo| pe.merge(eo))
                        });
                    match attempt {
                        Ok(o) => {
                            let cost = changed_cost(instance, &o.changed);
                            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                                best = Some((cost, o));
                            }
                        }
                        Err(CorrectionError::Infeasible) => {}
                        Err(e) => {
                            first_err.get_or_insert(e);
                        }
                    }
                }
                match (best, first_err) {
                    (Some((_, o)), _) => o,
                    (None, Some(e)) => return Err(e),
                    (None, None) => return Err(CorrectionError::Infeasible),
                }
            }
        }
    };

    let mut corrected = instance.guess.values().to_vec();
    for &i in &outcome.changed {
        corrected[i] = 1 - corrected[i];
    }
    Ok(CorrectionResult {
        corrected: SensitiveVector::new(corrected, 2)?,
        objective: changed_cost(instance, &outcome.changed),
        moves: Moves::Binary(outcome.moves),
        changed_indices: outcome.changed,
        stats: SolverStats {
            nodes_expanded: outcome.nodes,
            wall_time: started.elapsed(),
            proven_optimal: true,
        },
    })
}
