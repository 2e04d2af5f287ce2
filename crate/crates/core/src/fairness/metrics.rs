use super::exact::{rate_gap, GroupRate, RateBounds};
use super::{BinaryVector, FairnessMetric, FairnessSpec, MetricError, SensitiveVector};

/// Slack on real-valued fairness comparisons.
pub const FAIRNESS_SLACK: f64 = 1e-9;

/// Index sets a metric is evaluated on: one for SP/PE/EO, the ordered pair
/// (negatives, positives) for EOdds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricSlices {
    Single(Vec<usize>),
    Pair(Vec<usize>, Vec<usize>),
}

impl MetricSlices {
    pub fn as_vec(&self) -> Vec<&[usize]> {
        match self {
            Self::Single(a) => vec![a.as_slice()],
            Self::Pair(a, b) => vec![a.as_slice(), b.as_slice()],
        }
    }

    pub fn total_len(&self) -> usize {
        self.as_vec().iter().map(|s| s.len()).sum()
    }
}

pub fn slice_for_metric(metric: FairnessMetric, y: &BinaryVector) -> MetricSlices {
    let with_label = |label: u8| -> Vec<usize> {
        y.iter()
            .enumerate()
            .filter(|(_, &v)| v == label)
            .map(|(i, _)| i)
            .collect()
    };
    match metric {
        FairnessMetric::Sp => MetricSlices::Single((0..y.len()).collect()),
        FairnessMetric::Pe => MetricSlices::Single(with_label(0)),
        FairnessMetric::Eo => MetricSlices::Single(with_label(1)),
        FairnessMetric::EOdds => MetricSlices::Pair(with_label(0), with_label(1)),
    }
}

/// Integer counts of one slice: its size, its positive predictions and the
/// per-group size/positive tallies (including empty groups).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceCounts {
    pub total: u64,
    pub positives: u64,
    pub groups: Vec<GroupRate>,
}

impl SliceCounts {
    pub fn tally(s: &[u32], cardinality: u32, yhat: &[u8], indices: &[usize]) -> Self {
        let mut groups = vec![
            GroupRate {
                size: 0,
                positives: 0
            };
            cardinality as usize
        ];
        let mut positives = 0;
        for &i in indices {
            let g = &mut groups[s[i] as usize];
            g.size += 1;
            let p = yhat[i] as u64;
            g.positives += p;
            positives += p;
        }
        Self {
            total: indices.len() as u64,
            positives,
            groups,
        }
    }

    pub fn all_groups_nonempty(&self) -> bool {
        self.groups.iter().all(|g| g.size > 0)
    }

    /// `(numerator, denominator)` of each present group's gap.
    pub fn gaps(&self) -> impl Iterator<Item = (u128, u128)> + '_ {
        self.groups
            .iter()
            .filter(|g| g.size > 0)
            .map(|&g| rate_gap(self.total, self.positives, g))
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps()
            .map(|(num, den)| num as f64 / den as f64)
            .fold(0.0, f64::max)
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), MetricError> {
    if expected != found {
        return Err(MetricError::LengthMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Counts per non-empty slice of the metric.
fn metric_counts(
    metric: FairnessMetric,
    s: &SensitiveVector,
    yhat: &BinaryVector,
    y: &BinaryVector,
) -> Result<Vec<SliceCounts>, MetricError> {
    check_len("predictions", s.len(), yhat.len())?;
    check_len("labels", s.len(), y.len())?;
    let counts: Vec<SliceCounts> = slice_for_metric(metric, y)
        .as_vec()
        .into_iter()
        .filter(|slice| !slice.is_empty())
        .map(|slice| SliceCounts::tally(s.values(), s.cardinality(), yhat, slice))
        .collect();
    if counts.is_empty() {
        return Err(MetricError::EmptySlice(metric));
    }
    Ok(counts)
}

/// Largest gap between any group's rate and the slice-wide rate.
pub fn unfairness(
    metric: FairnessMetric,
    s: &SensitiveVector,
    yhat: &BinaryVector,
    y: &BinaryVector,
) -> Result<f64, MetricError> {
    let counts = metric_counts(metric, s, yhat, y)?;
    Ok(counts.iter().map(SliceCounts::max_gap).fold(0.0, f64::max))
}

pub fn satisfies(
    spec: &FairnessSpec,
    s: &SensitiveVector,
    yhat: &BinaryVector,
    y: &BinaryVector,
) -> Result<bool, MetricError> {
    let value = unfairness(spec.metric, s, yhat, y)?;
    let upper_ok = value <= spec.epsilon + FAIRNESS_SLACK;
    let lower_ok = spec
        .epsilon_lower
        .is_none_or(|lower| value >= lower - FAIRNESS_SLACK);
    Ok(upper_ok && lower_ok)
}

/// Same predicate as [`satisfies`] decided on integer counts, with no slack.
pub fn satisfies_exact(
    spec: &FairnessSpec,
    s: &SensitiveVector,
    yhat: &BinaryVector,
    y: &BinaryVector,
) -> Result<bool, MetricError> {
    let bounds = RateBounds::from_spec(spec)?;
    let counts = metric_counts(spec.metric, s, yhat, y)?;
    Ok(counts_satisfy(&counts, &bounds))
}

/// Every present group within the upper bound, and some group reaching the
/// lower bound.
pub fn counts_satisfy(counts: &[SliceCounts], bounds: &RateBounds) -> bool {
    let upper = counts
        .iter()
        .flat_map(SliceCounts::gaps)
        .all(|(num, den)| bounds.within_upper(num, den));
    let lower = bounds.lower.is_none()
        || counts
            .iter()
            .flat_map(SliceCounts::gaps)
            .any(|(num, den)| bounds.reaches_lower(num, den));
    upper && lower
}

pub fn reconstruction_accuracy(
    guess: &SensitiveVector,
    truth: &SensitiveVector,
) -> Result<f64, MetricError> {
    check_len("truth", guess.len(), truth.len())?;
    if guess.is_empty() {
        return Err(MetricError::EmptyVector);
    }
    let hits = guess
        .values()
        .iter()
        .zip(truth.values())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / guess.len() as f64)
}
