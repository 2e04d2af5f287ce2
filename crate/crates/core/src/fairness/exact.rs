//! Exact comparisons between integer rate gaps and floating-point tolerances.
//!
//! Every finite non-negative `f64` is a dyadic rational `mantissa / 2^shift`,
//! so `num / den <= eps` reduces to `num * 2^shift <= mantissa * den`, which
//! is decided in `u128` without rounding.

use std::cmp::Ordering;

use super::{FairnessSpec, MetricError};

/// A non-negative tolerance held as `mantissa / 2^shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactTolerance {
    mantissa: u64,
    shift: u32,
}

impl ExactTolerance {
    pub const ZERO: Self = Self {
        mantissa: 0,
        shift: 0,
    };

    pub fn from_f64(value: f64) -> Result<Self, MetricError> {
        if !value.is_finite() || value < 0.0 {
            return Err(MetricError::BadTolerance(value));
        }
        if value == 0.0 {
            return Ok(Self::ZERO);
        }
        let bits = value.to_bits();
        let exponent = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mut mantissa, mut exp2) = if exponent == 0 {
            (fraction, -1074i64)
        } else {
            (fraction | (1u64 << 52), exponent - 1075)
        };
        let tz = mantissa.trailing_zeros() as i64;
        mantissa >>= tz;
        exp2 += tz;
        if exp2 > 0 {
            // Tolerances above 2^11 are meaningless for rates; saturate.
            if exp2 >= 11 || mantissa.leading_zeros() as i64 <= exp2 {
                return Ok(Self {
                    mantissa: u64::MAX >> 11,
                    shift: 0,
                });
            }
            return Ok(Self {
                mantissa: mantissa << exp2,
                shift: 0,
            });
        }
        Ok(Self {
            mantissa,
            shift: (-exp2) as u32,
        })
    }

    /// Compares `num / den` with the tolerance. `den` must be positive and
    /// below 2^74.
    pub fn cmp_ratio(&self, num: u128, den: u128) -> Ordering {
        debug_assert!(den > 0 && den < (1u128 << 74));
        let rhs = self.mantissa as u128 * den;
        if num == 0 {
            return 0u128.cmp(&rhs);
        }
        if self.shift >= 128 || num.leading_zeros() < self.shift {
            // lhs >= 2^128 > rhs
            return Ordering::Greater;
        }
        (num << self.shift).cmp(&rhs)
    }

    pub fn admits(&self, num: u128, den: u128) -> bool {
        self.cmp_ratio(num, den) != Ordering::Greater
    }
}

/// Integer description of one group inside one slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupRate {
    pub size: u64,
    pub positives: u64,
}

/// Numerator and denominator of `|P/n - u/a|`, i.e. `|P*a - u*n|` and `n*a`.
pub fn rate_gap(total: u64, total_positive: u64, group: GroupRate) -> (u128, u128) {
    let lhs = total_positive as i128 * group.size as i128;
    let rhs = group.positives as i128 * total as i128;
    ((lhs - rhs).unsigned_abs(), total as u128 * group.size as u128)
}

/// Exact upper and optional lower bounds on a rate gap, from a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateBounds {
    pub upper: ExactTolerance,
    pub lower: Option<ExactTolerance>,
}

impl RateBounds {
    pub fn new(upper: f64, lower: Option<f64>) -> Result<Self, MetricError> {
        Ok(Self {
            upper: ExactTolerance::from_f64(upper)?,
            lower: lower.map(ExactTolerance::from_f64).transpose()?,
        })
    }

    pub fn from_spec(spec: &FairnessSpec) -> Result<Self, MetricError> {
        Self::new(spec.epsilon, spec.epsilon_lower)
    }

    pub fn upper_only(&self) -> Self {
        Self {
            upper: self.upper,
            lower: None,
        }
    }

    /// True when the gap `num / den` is within the upper bound.
    pub fn within_upper(&self, num: u128, den: u128) -> bool {
        self.upper.admits(num, den)
    }

    /// True when the gap reaches the lower bound (vacuous when unset).
    pub fn reaches_lower(&self, num: u128, den: u128) -> bool {
        match self.lower {
            None => true,
            Some(lower) => lower.cmp_ratio(num, den) != Ordering::Less,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposes_common_values() {
        let one = ExactTolerance::from_f64(1.0).unwrap();
        assert_eq!(one.cmp_ratio(1, 1), Ordering::Equal);
        let half = ExactTolerance::from_f64(0.5).unwrap();
        assert_eq!(half.cmp_ratio(1, 2), Ordering::Equal);
        assert_eq!(half.cmp_ratio(2, 3), Ordering::Greater);
        assert_eq!(half.cmp_ratio(1, 3), Ordering::Less);
    }

    #[test]
    fn point_one_is_slightly_above_a_tenth() {
        // 0.1_f64 = 0.1000000000000000055...
        let tenth = ExactTolerance::from_f64(0.1).unwrap();
        assert_eq!(tenth.cmp_ratio(1, 10), Ordering::Less);
        assert_eq!(tenth.cmp_ratio(1_000_000_001, 10_000_000_000), Ordering::Greater);
    }

    #[test]
    fn zero_admits_only_zero() {
        let zero = ExactTolerance::ZERO;
        assert!(zero.admits(0, 7));
        assert!(!zero.admits(1, 1 << 70));
    }

    #[test]
    fn subnormal_tolerance_behaves_like_zero_for_integer_gaps() {
        let tiny = ExactTolerance::from_f64(f64::MIN_POSITIVE / 4.0).unwrap();
        assert!(tiny.admits(0, 10));
        assert!(!tiny.admits(1, (1 << 73) - 1));
    }

    #[test]
    fn rate_gap_matches_hand_values() {
        // P/n = 2/4, group with 2 members and 2 positives: |2*2 - 2*4| / (4*2) = 4/8.
        let (num, den) = rate_gap(4, 2, GroupRate { size: 2, positives: 2 });
        assert_eq!((num, den), (4, 8));
    }

    #[test]
    fn lower_bound_is_inclusive() {
        let b = RateBounds::new(0.5, Some(0.25)).unwrap();
        assert!(b.reaches_lower(1, 4));
        assert!(!b.reaches_lower(1, 5));
        assert!(b.within_upper(1, 2));
    }
}
