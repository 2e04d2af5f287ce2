//! Exact solvers for the four-variable move model.
//!
//! A solution is a [`MoveCounts`]; its cost is the sum of the four prefix
//! arrays at those counts, and its feasibility depends only on group one's
//! resulting size `a` and positive count `u`. Three strategies are provided:
//!
//! * [`SearchStrategy::Sweep`] (default): performing opposite flips in the
//!   same prediction class never helps, so an optimum lives on the net
//!   changes `du` (positives) and `dn` (negatives). For each `du` the
//!   feasible `a` values form at most two intervals, located by binary search
//!   on monotone predicates; the cheapest `dn` in an interval is the one
//!   closest to zero. `O(N log N)`.
//! * [`SearchStrategy::BestFirst`]: Dijkstra-style expansion of the lattice in
//!   objective order, stopping at the first feasible state.
//! * [`SearchStrategy::Exhaustive`]: every lattice point, for small slices.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::groups::{CostArrays, GroupTallies, MoveCounts};
use super::CorrectionError;
use crate::fairness::{rate_gap, GroupRate, RateBounds};

pub const DEFAULT_NODE_LIMIT: u64 = 20_000_000;
pub const DEFAULT_LATTICE_BUDGET: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    Sweep,
    BestFirst {
        node_limit: u64,
    },
    Exhaustive {
        budget: u64,
    },
}

impl SearchStrategy {
    pub fn best_first() -> Self {
        Self::BestFirst {
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }

    pub fn exhaustive() -> Self {
        Self::Exhaustive {
            budget: DEFAULT_LATTICE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSolution {
    pub moves: MoveCounts,
    /// Objective as read from the prefix arrays.
    pub objective: f64,
    pub nodes_expanded: u64,
}

/// Feasibility of a move outcome on one slice, decided on integers.
#[derive(Debug, Clone, Copy)]
struct SpForm {
    n: u64,
    positives: u64,
    bounds: RateBounds,
}

impl SpForm {
    fn gaps(&self, a: u64, u: u64) -> [(u128, u128); 2] {
        [
            rate_gap(self.n, self.positives, GroupRate { size: a, positives: u }),
            rate_gap(
                self.n,
                self.positives,
                GroupRate {
                    size: self.n - a,
                    positives: self.positives - u,
                },
            ),
        ]
    }

    fn within_upper(&self, a: u64, u: u64) -> bool {
        self.gaps(a, u)
            .iter()
            .all(|&(num, den)| self.bounds.within_upper(num, den))
    }

    fn reaches_lower(&self, a: u64, u: u64) -> bool {
        self.gaps(a, u)
            .iter()
            .any(|&(num, den)| self.bounds.reaches_lower(num, den))
    }

    fn feasible(&self, a: u64, u: u64) -> bool {
        if a == 0 || a >= self.n || u > a || self.positives < u || self.positives - u > self.n - a {
            return false;
        }
        self.within_upper(a, u) && (self.bounds.lower.is_none() || self.reaches_lower(a, u))
    }

    /// Sign of `P*a - u*n`; group one's rate is below the slice rate when
    /// positive. Non-decreasing in `a`.
    fn excess(&self, a: u64, u: u64) -> Ordering {
        (self.positives as u128 * a as u128).cmp(&(u as u128 * self.n as u128))
    }
}

fn outcome(tallies: &GroupTallies, m: &MoveCounts) -> (u64, u64) {
    let u = tallies.n1_pos + m.s01_pos - m.s10_pos;
    let a = tallies.group_one() + m.s01_pos + m.s01_neg - m.s10_pos - m.s10_neg;
    (a as u64, u as u64)
}

/// Whether `moves` yields a feasible reconstruction on this slice.
pub fn moves_feasible(tallies: &GroupTallies, moves: &MoveCounts, bounds: &RateBounds) -> bool {
    if !moves.fits(tallies) || tallies.total() < 2 {
        return false;
    }
    let form = SpForm {
        n: tallies.total() as u64,
        positives: tallies.positives() as u64,
        bounds: *bounds,
    };
    let (a, u) = outcome(tallies, moves);
    form.feasible(a, u)
}

/// Minimum-cost move counts on one slice under an SP-form constraint.
pub fn solve_efficient(
    tallies: &GroupTallies,
    costs: &CostArrays,
    total_positive: usize,
    n: usize,
    bounds: &RateBounds,
) -> Result<MoveCounts, CorrectionError> {
    solve_efficient_with(tallies, costs, total_positive, n, bounds, SearchStrategy::Sweep)
        .map(|s| s.moves)
}

pub fn solve_efficient_with(
    tallies: &GroupTallies,
    costs: &CostArrays,
    total_positive: usize,
    n: usize,
    bounds: &RateBounds,
    strategy: SearchStrategy,
) -> Result<LatticeSolution, CorrectionError> {
    if costs.tallies() != *tallies || tallies.total() != n || tallies.positives() != total_positive {
        return Err(CorrectionError::InvalidTallies(*tallies));
    }
    if n < 2 {
        return Err(CorrectionError::Infeasible);
    }
    if moves_feasible(tallies, &MoveCounts::default(), bounds) {
        return Ok(LatticeSolution {
            moves: MoveCounts::default(),
            objective: 0.0,
            nodes_expanded: 0,
        });
    }
    let form = SpForm {
        n: n as u64,
        positives: total_positive as u64,
        bounds: *bounds,
    };
    match strategy {
        SearchStrategy::Sweep => sweep(tallies, costs, &form),
        SearchStrategy::BestFirst { node_limit } => best_first(tallies, costs, &form, node_limit),
        SearchStrategy::Exhaustive { budget } => exhaustive(tallies, costs, &form, budget),
    }
}

/// Smallest value in `[lo, hi]` satisfying an up-closed predicate.
fn first_true(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if lo > hi || !pred(hi) {
        return None;
    }
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// Largest value in `[lo, hi]` satisfying a down-closed predicate.
fn last_true(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if lo > hi || !pred(lo) {
        return None;
    }
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    objective: f64,
    flips: u64,
    du: i64,
    dn: i64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        self.objective
            .total_cmp(&other.objective)
            .then(self.flips.cmp(&other.flips))
            .then(self.du.cmp(&other.du))
            .then(self.dn.cmp(&other.dn))
            == Ordering::Less
    }
}

fn sweep(tallies: &GroupTallies, costs: &CostArrays, form: &SpForm) -> Result<LatticeSolution, CorrectionError> {
    let n = form.n;
    let p = form.positives;
    let n1 = tallies.group_one() as i64;
    let pos_cost = |du: i64| {
        if du >= 0 {
            costs.t0_pos.cost(du as usize)
        } else {
            costs.t1_pos.cost((-du) as usize)
        }
    };
    let neg_cost = |dn: i64| {
        if dn >= 0 {
            costs.t0_neg.cost(dn as usize)
        } else {
            costs.t1_neg.cost((-dn) as usize)
        }
    };

    let mut best: Option<Candidate> = None;
    let mut nodes = 0u64;
    for du in -(tallies.n1_pos as i64)..=tallies.n0_pos as i64 {
        nodes += 1;
        let u = (tallies.n1_pos as i64 + du) as u64;
        let lo = u.max(1);
        let hi = (n - 1).min(n - p + u);
        if lo > hi {
            continue;
        }
        let base_cost = pos_cost(du);
        if let Some(b) = &best {
            if base_cost > b.objective {
                continue;
            }
        }

        let up_upper = |a: u64| form.excess(a, u) != Ordering::Less || form.within_upper(a, u);
        let down_upper = |a: u64| form.excess(a, u) != Ordering::Greater || form.within_upper(a, u);
        let (Some(ul), Some(uh)) = (first_true(lo, hi, up_upper), last_true(lo, hi, down_upper)) else {
            continue;
        };
        if ul > uh {
            continue;
        }

        let mut intervals = Vec::with_capacity(2);
        if form.bounds.lower.is_none() {
            intervals.push((ul, uh));
        } else {
            let low_up = |a: u64| form.excess(a, u) != Ordering::Less && form.reaches_lower(a, u);
            let low_down = |a: u64| form.excess(a, u) != Ordering::Greater && form.reaches_lower(a, u);
            if let Some(l) = first_true(ul, uh, low_up) {
                intervals.push((l, uh));
            }
            if let Some(h) = last_true(ul, uh, low_down) {
                intervals.push((ul, h));
            }
        }

        let a0 = n1 + du;
        for (l, h) in intervals {
            let a = a0.clamp(l as i64, h as i64);
            let dn = a - a0;
            let cand = Candidate {
                objective: base_cost + neg_cost(dn),
                flips: (du.unsigned_abs() + dn.unsigned_abs()),
                du,
                dn,
            };
            debug_assert!(form.feasible(a as u64, u));
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
    }

    let best = best.ok_or(CorrectionError::Infeasible)?;
    let moves = MoveCounts::from_net(best.du, best.dn);
    Ok(LatticeSolution {
        objective: costs.objective(&moves),
        moves,
        nodes_expanded: nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    objective: f64,
    state: [u32; 4],
}

impl Eq for Node {}

impl Ord for Node {
    // Reversed so the max-heap pops the cheapest state first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .objective
            .total_cmp(&self.objective)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn to_moves(state: [u32; 4]) -> MoveCounts {
    MoveCounts {
        s01_pos: state[0] as usize,
        s10_pos: state[1] as usize,
        s01_neg: state[2] as usize,
        s10_neg: state[3] as usize,
    }
}

fn best_first(
    tallies: &GroupTallies,
    costs: &CostArrays,
    form: &SpForm,
    node_limit: u64,
) -> Result<LatticeSolution, CorrectionError> {
    let limits = [
        tallies.n0_pos as u32,
        tallies.n1_pos as u32,
        tallies.n0_neg as u32,
        tallies.n1_neg as u32,
    ];
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let start = [0u32; 4];
    heap.push(Node {
        objective: 0.0,
        state: start,
    });
    seen.insert(start);
    let mut nodes = 0u64;
    while let Some(node) = heap.pop() {
        nodes += 1;
        let moves = to_moves(node.state);
        let (a, u) = outcome(tallies, &moves);
        if form.feasible(a, u) {
            return Ok(LatticeSolution {
                moves,
                objective: node.objective,
                nodes_expanded: nodes,
            });
        }
        if nodes >= node_limit {
            return Err(CorrectionError::SearchLimit { nodes });
        }
        for axis in 0..4 {
            if node.state[axis] < limits[axis] {
                let mut next = node.state;
                next[axis] += 1;
                if seen.insert(next) {
                    heap.push(Node {
                        objective: costs.objective(&to_moves(next)),
                        state: next,
                    });
                }
            }
        }
    }
    Err(CorrectionError::Infeasible)
}

fn exhaustive(
    tallies: &GroupTallies,
    costs: &CostArrays,
    form: &SpForm,
    budget: u64,
) -> Result<LatticeSolution, CorrectionError> {
    let states = [tallies.n0_pos, tallies.n1_pos, tallies.n0_neg, tallies.n1_neg]
        .iter()
        .try_fold(1u64, |acc, &k| acc.checked_mul(k as u64 + 1))
        .unwrap_or(u64::MAX);
    if states > budget {
        return Err(CorrectionError::BudgetExceeded { states, budget });
    }
    let mut best: Option<(f64, usize, MoveCounts)> = None;
    let mut nodes = 0u64;
    for s01_pos in 0..=tallies.n0_pos {
        for s10_pos in 0..=tallies.n1_pos {
            for s01_neg in 0..=tallies.n0_neg {
                for s10_neg in 0..=tallies.n1_neg {
                    nodes += 1;
                    let m = MoveCounts {
                        s01_pos,
                        s10_pos,
                        s01_neg,
                        s10_neg,
                    };
                    let (a, u) = outcome(tallies, &m);
                    if !form.feasible(a, u) {
                        continue;
                    }
                    let obj = costs.objective(&m);
                    let better = match &best {
                        None => true,
                        Some((bo, bf, _)) => obj
                            .total_cmp(bo)
                            .then(m.total().cmp(bf))
                            == Ordering::Less,
                    };
                    if better {
                        best = Some((obj, m.total(), m));
                    }
                }
            }
        }
    }
    let (objective, _, moves) = best.ok_or(CorrectionError::Infeasible)?;
    Ok(LatticeSolution {
        moves,
        objective,
        nodes_expanded: nodes,
    })
}
