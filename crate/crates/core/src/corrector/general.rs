//! Brute-force general model: enumerate every assignment of the active rows.
//!
//! Exponential, so it is bounded by a state budget. It serves as the
//! correctness oracle for the efficient path and as the only solver for
//! sensitive attributes with more than two values.

use std::time::Instant;

use super::{CorrectionError, CorrectionResult, MoveCounts, Moves, SolverStats};
use crate::fairness::{
    rate_gap, slice_for_metric, AttackInstance, FairnessSpec, GroupRate, RateBounds, SensitiveVector,
};

pub const DEFAULT_STATE_BUDGET: u64 = 1 << 20;

pub fn solve_general_bruteforce(
    instance: &AttackInstance,
    spec: &FairnessSpec,
    cardinality: u32,
) -> Result<CorrectionResult, CorrectionError> {
    solve_general_bruteforce_with_budget(instance, spec, cardinality, DEFAULT_STATE_BUDGET)
}

struct SliceState {
    total: u64,
    positives: u64,
    sizes: Vec<u64>,
    group_positives: Vec<u64>,
}

impl SliceState {
    fn gaps(&self) -> impl Iterator<Item = (u128, u128)> + '_ {
        self.sizes.iter().zip(&self.group_positives).map(|(&size, &positives)| {
            rate_gap(self.total, self.positives, GroupRate { size, positives })
        })
    }
}

pub fn solve_general_bruteforce_with_budget(
    instance: &AttackInstance,
    spec: &FairnessSpec,
    cardinality: u32,
    budget: u64,
) -> Result<CorrectionResult, CorrectionError> {
    let started = Instant::now();
    if cardinality < 2 {
        return Err(CorrectionError::Metric(crate::fairness::MetricError::BadCardinality(
            cardinality,
        )));
    }
    let guess = instance.guess.values();
    if let Some(index) = guess.iter().position(|&v| v >= cardinality) {
        return Err(CorrectionError::Metric(crate::fairness::MetricError::ValueOutOfRange {
            index,
            value: guess[index],
            cardinality,
        }));
    }
    let bounds = RateBounds::from_spec(spec)?;
    let k = cardinality as usize;

    // Active rows, each tagged with the slice it belongs to.
    let slices: Vec<Vec<usize>> = slice_for_metric(spec.metric, &instance.labels)
        .as_vec()
        .into_iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.to_vec())
        .collect();
    let mut rows: Vec<(usize, usize)> = slices
        .iter()
        .enumerate()
        .flat_map(|(si, s)| s.iter().map(move |&i| (i, si)))
        .collect();
    rows.sort_unstable();

    let m = rows.len() as u32;
    let states = (cardinality as u64).checked_pow(m).unwrap_or(u64::MAX);
    if states > budget {
        return Err(CorrectionError::BudgetExceeded { states, budget });
    }

    let yhat = instance.predictions.as_slice();
    let conf = instance.confidence.as_slice();
    let mut state: Vec<SliceState> = slices
        .iter()
        .map(|s| {
            let positives = s.iter().map(|&i| yhat[i] as u64).sum();
            SliceState {
                total: s.len() as u64,
                positives,
                sizes: vec![0; k],
                group_positives: vec![0; k],
            }
        })
        .collect();

    // Start from the all-zero assignment.
    let mut assign = vec![0u32; rows.len()];
    for &(i, si) in &rows {
        state[si].sizes[0] += 1;
        state[si].group_positives[0] += yhat[i] as u64;
    }
    let mut running_cost: f64 = rows
        .iter()
        .filter(|&&(i, _)| guess[i] != 0)
        .map(|&(i, _)| conf[i])
        .sum();

    let feasible = |state: &[SliceState]| {
        if state.iter().any(|s| s.sizes.contains(&0)) {
            return false;
        }
        let upper = state
            .iter()
            .flat_map(SliceState::gaps)
            .all(|(num, den)| bounds.within_upper(num, den));
        upper
            && (bounds.lower.is_none()
                || state
                    .iter()
                    .flat_map(SliceState::gaps)
                    .any(|(num, den)| bounds.reaches_lower(num, den)))
    };
    let exact_cost = |assign: &[u32]| -> f64 {
        rows.iter()
            .zip(assign)
            .filter(|(&(i, _), &v)| guess[i] != v)
            .fold(0.0, |acc, (&(i, _), _)| acc + conf[i])
    };

    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut nodes = 0u64;
    loop {
        nodes += 1;
        let prune = best
            .as_ref()
            .is_some_and(|(b, _)| running_cost > b + 1e-9 * (1.0 + b.abs()));
        if !prune && feasible(&state) {
            let cost = exact_cost(&assign);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, assign.clone()));
            }
        }
        // Odometer step.
        let mut pos = 0;
        loop {
            if pos == rows.len() {
                break;
            }
            let (i, si) = rows[pos];
            let old = assign[pos];
            let new = (old + 1) % cardinality;
            let st = &mut state[si];
            st.sizes[old as usize] -= 1;
            st.group_positives[old as usize] -= yhat[i] as u64;
            st.sizes[new as usize] += 1;
            st.group_positives[new as usize] += yhat[i] as u64;
            if old == guess[i] {
                running_cost += conf[i];
            }
            if new == guess[i] {
                running_cost -= conf[i];
            }
            assign[pos] = new;
            if new != 0 {
                break;
            }
            pos += 1;
        }
        if pos == rows.len() {
            break;
        }
    }

    let (objective, best_assign) = best.ok_or(CorrectionError::Infeasible)?;
    let mut corrected = guess.to_vec();
    let mut pairs = vec![vec![0usize; k]; k];
    let mut changed = Vec::new();
    for (&(i, _), &v) in rows.iter().zip(&best_assign) {
        if v != guess[i] {
            pairs[guess[i] as usize][v as usize] += 1;
            changed.push(i);
        }
        corrected[i] = v;
    }
    let moves = if k == 2 {
        let mut mc = MoveCounts::default();
        for &i in &changed {
            match (guess[i], yhat[i]) {
                (0, 1) => mc.s01_pos += 1,
                (1, 1) => mc.s10_pos += 1,
                (0, _) => mc.s01_neg += 1,
                _ => mc.s10_neg += 1,
            }
        }
        Moves::Binary(mc)
    } else {
        Moves::PerPair(pairs)
    };
    Ok(CorrectionResult {
        corrected: SensitiveVector::new(corrected, cardinality)?,
        objective,
        moves,
        changed_indices: changed,
        stats: SolverStats {
            nodes_expanded: nodes,
            wall_time: started.elapsed(),
            proven_optimal: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{BinaryVector, ConfidenceVector, FairnessMetric};

    fn instance(guess: Vec<u32>, k: u32, yhat: &[u8], y: &[u8], p: Vec<f64>) -> AttackInstance {
        AttackInstance::new(
            BinaryVector::new(yhat.to_vec()).unwrap(),
            BinaryVector::new(y.to_vec()).unwrap(),
            SensitiveVector::new(guess, k).unwrap(),
            ConfidenceVector::new(p).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn binary_example_matches_hand_solution() {
        let inst = instance(vec![1, 1, 0, 0], 2, &[1, 1, 0, 0], &[0; 4], vec![1.0; 4]);
        let spec = FairnessSpec::new(FairnessMetric::Sp, 0.1).unwrap();
        let r = solve_general_bruteforce(&inst, &spec, 2).unwrap();
        assert_eq!(r.objective, 2.0);
        assert_eq!(r.changed_indices.len(), 2);
    }

    #[test]
    fn three_groups_already_feasible() {
        let inst = instance(vec![0, 1, 2], 3, &[1, 0, 1], &[0; 3], vec![1.0; 3]);
        let spec = FairnessSpec::new(FairnessMetric::Sp, 0.7).unwrap();
        let r = solve_general_bruteforce(&inst, &spec, 3).unwrap();
        assert_eq!(r.objective, 0.0);
        assert!(r.changed_indices.is_empty());
        assert!(matches!(r.moves, Moves::PerPair(_)));
    }

    #[test]
    fn loose_tolerance_keeps_guess() {
        let inst = instance(vec![0, 1, 2, 1, 0], 3, &[1, 0, 1, 1, 0], &[0; 5], vec![0.3; 5]);
        let spec = FairnessSpec::new(FairnessMetric::Sp, 1.0).unwrap();
        assert_eq!(solve_general_bruteforce(&inst, &spec, 3).unwrap().objective, 0.0);
    }

    #[test]
    fn missing_group_must_be_filled() {
        let inst = instance(vec![0, 0, 0], 3, &[1, 0, 1], &[0; 3], vec![0.5, 0.25, 1.0]);
        let spec = FairnessSpec::new(FairnessMetric::Sp, 1.0).unwrap();
        let r = solve_general_bruteforce(&inst, &spec, 3).unwrap();
        assert!((r.objective - 0.75).abs() < 1e-12);
        assert_eq!(r.corrected.group_sizes(), vec![1, 1, 1]);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = instance(vec![0; 12], 3, &[0; 12], &[0; 12], vec![1.0; 12]);
        let spec = FairnessSpec::new(FairnessMetric::Sp, 1.0).unwrap();
        assert!(matches!(
            solve_general_bruteforce_with_budget(&inst, &spec, 3, 1000),
            Err(CorrectionError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn single_row_is_infeasible() {
        let inst = instance(vec![1], 2, &[1], &[0], vec![1.0]);
        let spec = FairnessSpec::new(FairnessMetric::Sp, 1.0).unwrap();
        assert!(matches!(
            solve_general_bruteforce(&inst, &spec, 2),
            Err(CorrectionError::Infeasible)
        ));
    }
}
