//! Minimum confidence-weighted correction of a sensitive-attribute guess so
//! that it agrees with a released fairness guarantee.

mod correct;
mod efficient;
mod general;
mod groups;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairness::{MetricError, SensitiveVector};

pub use correct::{correct, correct_with, CorrectorOptions};
pub use efficient::{
    moves_feasible, solve_efficient, solve_efficient_with, LatticeSolution, SearchStrategy,
    DEFAULT_LATTICE_BUDGET, DEFAULT_NODE_LIMIT,
};
pub use general::{solve_general_bruteforce, solve_general_bruteforce_with_budget, DEFAULT_STATE_BUDGET};
pub use groups::{
    apply_moves, build_cost_arrays, tally_groups, CostArray, CostArrays, GroupTallies, MoveCounts,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectionError {
    #[error("no reconstruction satisfies the constraints")]
    Infeasible,
    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("confidence {value} at index {index} is negative or not finite")]
    NegativeConfidence { index: usize, value: f64 },
    #[error("tallies {0:?} are inconsistent with the cost arrays or totals")]
    InvalidTallies(GroupTallies),
    #[error("moves {moves:?} exceed group sizes {tallies:?}")]
    MoveOutOfBounds { moves: MoveCounts, tallies: GroupTallies },
    #[error("{states} states exceed the enumeration budget of {budget}")]
    BudgetExceeded { states: u64, budget: u64 },
    #[error("search stopped after {nodes} nodes without a feasible state")]
    SearchLimit { nodes: u64 },
    #[error("the efficient corrector needs a binary guess (cardinality {0})")]
    NotBinary(u32),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Moves {
    Binary(MoveCounts),
    /// `counts[from][to]` for multi-valued attributes.
    PerPair(Vec<Vec<usize>>),
}

impl Moves {
    pub fn total(&self) -> usize {
        match self {
            Self::Binary(m) => m.total(),
            Self::PerPair(p) => p.iter().flatten().sum(),
        }
    }

    pub fn binary(&self) -> Option<&MoveCounts> {
        match self {
            Self::Binary(m) => Some(m),
            Self::PerPair(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub nodes_expanded: u64,
    pub wall_time: Duration,
    pub proven_optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionResult {
    pub corrected: SensitiveVector,
    /// Sum of the confidences of the changed entries.
    pub objective: f64,
    pub moves: Moves,
    pub changed_indices: Vec<usize>,
    pub stats: SolverStats,
}
