use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::CorrectionError;
use crate::fairness::BinaryVector;

/// Sizes of the four move groups: guess value (1/0) crossed with prediction
/// (positive/negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupTallies {
    pub n1_pos: usize,
    pub n0_pos: usize,
    pub n1_neg: usize,
    pub n0_neg: usize,
}

impl GroupTallies {
    pub fn total(&self) -> usize {
        self.n1_pos + self.n0_pos + self.n1_neg + self.n0_neg
    }

    pub fn positives(&self) -> usize {
        self.n1_pos + self.n0_pos
    }

    pub fn group_one(&self) -> usize {
        self.n1_pos + self.n1_neg
    }
}

/// The four flip counts the efficient model decides on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MoveCounts {
    /// 0 -> 1 among positive predictions.
    pub s01_pos: usize,
    /// 1 -> 0 among positive predictions.
    pub s10_pos: usize,
    /// 0 -> 1 among negative predictions.
    pub s01_neg: usize,
    /// 1 -> 0 among negative predictions.
    pub s10_neg: usize,
}

impl MoveCounts {
    pub fn total(&self) -> usize {
        self.s01_pos + self.s10_pos + self.s01_neg + self.s10_neg
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    /// Builds the counts from net changes of group one's positives (`du`)
    /// and negatives (`dn`).
    pub(crate) fn from_net(du: i64, dn: i64) -> Self {
        Self {
            s01_pos: du.max(0) as usize,
            s10_pos: (-du).max(0) as usize,
            s01_neg: dn.max(0) as usize,
            s10_neg: (-dn).max(0) as usize,
        }
    }

    pub fn fits(&self, tallies: &GroupTallies) -> bool {
        self.s01_pos <= tallies.n0_pos
            && self.s10_pos <= tallies.n1_pos
            && self.s01_neg <= tallies.n0_neg
            && self.s10_neg <= tallies.n1_neg
    }
}

impl Add for MoveCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            s01_pos: self.s01_pos + rhs.s01_pos,
            s10_pos: self.s10_pos + rhs.s10_pos,
            s01_neg: self.s01_neg + rhs.s01_neg,
            s10_neg: self.s10_neg + rhs.s10_neg,
        }
    }
}

/// Prefix sums of one group's confidences sorted ascending, with the member
/// indices in the same order. `prefix[i]` is the cheapest cost of `i` flips.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostArray {
    pub prefix: Vec<f64>,
    pub order: Vec<usize>,
}

impl CostArray {
    fn build(mut members: Vec<(f64, usize)>) -> Self {
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut prefix = Vec::with_capacity(members.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &(c, _) in &members {
            acc += c;
            prefix.push(acc);
        }
        Self {
            prefix,
            order: members.into_iter().map(|(_, i)| i).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn cost(&self, flips: usize) -> f64 {
        self.prefix[flips]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostArrays {
    pub t1_pos: CostArray,
    pub t0_pos: CostArray,
    pub t1_neg: CostArray,
    pub t0_neg: CostArray,
}

impl CostArrays {
    pub fn tallies(&self) -> GroupTallies {
        GroupTallies {
            n1_pos: self.t1_pos.len(),
            n0_pos: self.t0_pos.len(),
            n1_neg: self.t1_neg.len(),
            n0_neg: self.t0_neg.len(),
        }
    }

    pub fn objective(&self, moves: &MoveCounts) -> f64 {
        self.t0_pos.cost(moves.s01_pos)
            + self.t1_pos.cost(moves.s10_pos)
            + self.t0_neg.cost(moves.s01_neg)
            + self.t1_neg.cost(moves.s10_neg)
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), CorrectionError> {
    if expected != found {
        return Err(CorrectionError::LengthMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

pub fn tally_groups(guess: &BinaryVector, yhat: &BinaryVector) -> Result<GroupTallies, CorrectionError> {
    check_len("predictions", guess.len(), yhat.len())?;
    let mut t = GroupTallies::default();
    for (&s, &y) in guess.iter().zip(yhat.iter()) {
        match (s, y) {
            (1, 1) => t.n1_pos += 1,
            (0, 1) => t.n0_pos += 1,
            (1, _) => t.n1_neg += 1,
            _ => t.n0_neg += 1,
        }
    }
    Ok(t)
}

pub fn build_cost_arrays(
    guess: &BinaryVector,
    yhat: &BinaryVector,
    confidence: &[f64],
) -> Result<CostArrays, CorrectionError> {
    check_len("predictions", guess.len(), yhat.len())?;
    check_len("confidence", guess.len(), confidence.len())?;
    let mut groups: [Vec<(f64, usize)>; 4] = Default::default();
    for (i, ((&s, &y), &p)) in guess.iter().zip(yhat.iter()).zip(confidence).enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(CorrectionError::NegativeConfidence { index: i, value: p });
        }
        let slot = match (s, y) {
            (1, 1) => 0,
            (0, 1) => 1,
            (1, _) => 2,
            _ => 3,
        };
        groups[slot].push((p, i));
    }
    let [g1p, g0p, g1n, g0n] = groups;
    Ok(CostArrays {
        t1_pos: CostArray::build(g1p),
        t0_pos: CostArray::build(g0p),
        t1_neg: CostArray::build(g1n),
        t0_neg: CostArray::build(g0n),
    })
}

/// Performs the flips, cheapest members first, and returns the corrected
/// vector with the changed indices in ascending order.
pub fn apply_moves(
    guess: &BinaryVector,
    yhat: &BinaryVector,
    confidence: &[f64],
    moves: &MoveCounts,
) -> Result<(BinaryVector, Vec<usize>), CorrectionError> {
    let costs = build_cost_arrays(guess, yhat, confidence)?;
    apply_moves_with(guess, &costs, moves)
}

pub(crate) fn apply_moves_with(
    guess: &BinaryVector,
    costs: &CostArrays,
    moves: &MoveCounts,
) -> Result<(BinaryVector, Vec<usize>), CorrectionError> {
    let tallies = costs.tallies();
    if !moves.fits(&tallies) {
        return Err(CorrectionError::MoveOutOfBounds {
            moves: *moves,
            tallies,
        });
    }
    let mut values = guess.as_slice().to_vec();
    let mut changed = Vec::with_capacity(moves.total());
    for (array, count) in [
        (&costs.t0_pos, moves.s01_pos),
        (&costs.t1_pos, moves.s10_pos),
        (&costs.t0_neg, moves.s01_neg),
        (&costs.t1_neg, moves.s10_neg),
    ] {
        for &i in &array.order[..count] {
            values[i] = 1 - values[i];
            changed.push(i);
        }
    }
    changed.sort_unstable();
    Ok((BinaryVector::from_bools(values.into_iter().map(|v| v == 1)), changed))
}
