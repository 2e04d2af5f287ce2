use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// A vector of 0/1 entries (labels, predictions, binary sensitive values).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(values: Vec<u8>) -> Result<Self, MetricError> {
        if let Some(index) = values.iter().position(|&v| v > 1) {
            return Err(MetricError::NotBinary {
                index,
                value: values[index] as u32,
            });
        }
        Ok(Self(values))
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(values: I) -> Self {
        Self(values.into_iter().map(u8::from).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&v| v == 1).count()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// Gathers the entries at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl Deref for BinaryVector {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl TryFrom<Vec<u8>> for BinaryVector {
    type Error = MetricError;

    fn try_from(values: Vec<u8>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<BinaryVector> for Vec<u8> {
    fn from(v: BinaryVector) -> Self {
        v.0
    }
}

/// Sensitive attribute values in `0..cardinality`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensitiveVector {
    values: Vec<u32>,
    cardinality: u32,
}

impl SensitiveVector {
    pub fn new(values: Vec<u32>, cardinality: u32) -> Result<Self, MetricError> {
        if cardinality < 2 {
            return Err(MetricError::BadCardinality(cardinality));
        }
        if let Some(index) = values.iter().position(|&v| v >= cardinality) {
            return Err(MetricError::ValueOutOfRange {
                index,
                value: values[index],
                cardinality,
            });
        }
        Ok(Self {
            values,
            cardinality,
        })
    }

    pub fn binary(values: &BinaryVector) -> Self {
        Self {
            values: values.iter().map(|&v| v as u32).collect(),
            cardinality: 2,
        }
    }

    /// Builds a binary vector from raw 0/1 values.
    pub fn from_bits(bits: &[u8]) -> Result<Self, MetricError> {
        Self::new(bits.iter().map(|&b| b as u32).collect(), 2)
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    pub fn is_binary(&self) -> bool {
        self.cardinality == 2
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_binary(&self) -> Option<BinaryVector> {
        if !self.is_binary() {
            return None;
        }
        Some(BinaryVector(self.values.iter().map(|&v| v as u8).collect()))
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            cardinality: self.cardinality,
        }
    }

    /// Number of members in each group value.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cardinality as usize];
        for &v in &self.values {
            sizes[v as usize] += 1;
        }
        sizes
    }
}

/// Non-negative, finite per-entry confidences.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfidenceVector(Vec<f64>);

impl ConfidenceVector {
    pub fn new(values: Vec<f64>) -> Result<Self, MetricError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(MetricError::BadConfidence {
                index,
                value: values[index],
            });
        }
        Ok(Self(values))
    }

    /// Unit confidence for every entry, so the objective counts flips.
    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, MetricError> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl Deref for ConfidenceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FairnessMetric {
    /// Statistical parity: positive prediction rate.
    #[serde(rename = "sp")]
    Sp,
    /// Predictive equality: false positive rate.
    #[serde(rename = "pe")]
    Pe,
    /// Equal opportunity: true positive rate.
    #[serde(rename = "eo")]
    Eo,
    /// Equalized odds: both PE and EO.
    #[serde(rename = "eodds")]
    EOdds,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 4] = [Self::Sp, Self::Pe, Self::Eo, Self::EOdds];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Sp => "sp",
            Self::Pe => "pe",
            Self::Eo => "eo",
            Self::EOdds => "eodds",
        }
    }
}

impl fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessMetric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(Self::Sp),
            "pe" => Ok(Self::Pe),
            "eo" => Ok(Self::Eo),
            "eodds" => Ok(Self::EOdds),
            other => Err(MetricError::UnknownMetric(other.to_string())),
        }
    }
}

/// A fairness guarantee: `metric` unfairness at most `epsilon`, and at least
/// `epsilon_lower` when that is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub metric: FairnessMetric,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_lower: Option<f64>,
}

impl FairnessSpec {
    pub fn new(metric: FairnessMetric, epsilon: f64) -> Result<Self, MetricError> {
        Self::with_lower(metric, epsilon, None)
    }

    pub fn with_lower(
        metric: FairnessMetric,
        epsilon: f64,
        epsilon_lower: Option<f64>,
    ) -> Result<Self, MetricError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(MetricError::BadTolerance(epsilon));
        }
        if let Some(lower) = epsilon_lower {
            if !(0.0..=epsilon).contains(&lower) {
                return Err(MetricError::BadLowerBound { lower, epsilon });
            }
        }
        Ok(Self {
            metric,
            epsilon,
            epsilon_lower,
        })
    }

    /// Same bounds, different metric.
    pub fn for_metric(&self, metric: FairnessMetric) -> Self {
        Self { metric, ..*self }
    }
}

/// Everything the corrector sees for one problem. `truth` is carried for
/// scoring only.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackInstance {
    pub predictions: BinaryVector,
    pub labels: BinaryVector,
    pub guess: SensitiveVector,
    pub confidence: ConfidenceVector,
    pub truth: Option<SensitiveVector>,
}

impl AttackInstance {
    pub fn new(
        predictions: BinaryVector,
        labels: BinaryVector,
        guess: SensitiveVector,
        confidence: ConfidenceVector,
        truth: Option<SensitiveVector>,
    ) -> Result<Self, MetricError> {
        let n = predictions.len();
        let check = |what: &'static str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(MetricError::LengthMismatch {
                    what,
                    expected: n,
                    found: len,
                })
            }
        };
        check("labels", labels.len())?;
        check("guess", guess.len())?;
        check("confidence", confidence.len())?;
        if let Some(t) = &truth {
            check("truth", t.len())?;
            if t.cardinality() != guess.cardinality() {
                return Err(MetricError::BadCardinality(t.cardinality()));
            }
        }
        Ok(Self {
            predictions,
            labels,
            guess,
            confidence,
            truth,
        })
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    /// Restriction to the rows at `indices`.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            predictions: self.predictions.select(indices),
            labels: self.labels.select(indices),
            guess: self.guess.select(indices),
            confidence: self.confidence.select(indices),
            truth: self.truth.as_ref().map(|t| t.select(indices)),
        }
    }

    pub fn with_confidence(&self, confidence: ConfidenceVector) -> Result<Self, MetricError> {
        Self::new(
            self.predictions.clone(),
            self.labels.clone(),
            self.guess.clone(),
            confidence,
            self.truth.clone(),
        )
    }
}
