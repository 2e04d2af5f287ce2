//! Test-side reference implementation: slicing, exact rational feasibility
//! and exhaustive search written without the library's solver code.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;

use fairleak::fairness::{AttackInstance, BinaryVector, ConfidenceVector, FairnessMetric, SensitiveVector};

#[derive(Debug, Clone)]
pub struct Problem {
    pub yhat: Vec<u8>,
    pub y: Vec<u8>,
    pub guess: Vec<u32>,
    pub conf: Vec<f64>,
    pub k: u32,
}

impl Problem {
    pub fn instance(&self) -> AttackInstance {
        AttackInstance::new(
            BinaryVector::new(self.yhat.clone()).unwrap(),
            BinaryVector::new(self.y.clone()).unwrap(),
            SensitiveVector::new(self.guess.clone(), self.k).unwrap(),
            ConfidenceVector::new(self.conf.clone()).unwrap(),
            None,
        )
        .unwrap()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }
}

/// Confidences are multiples of 2^-20 when `dyadic`, so every sum of up to
/// 2^33 of them is exact in f64.
pub const DYADIC_UNIT: f64 = 1.0 / 1_048_576.0;

pub fn random_problem<R: Rng>(rng: &mut R, n: usize, k: u32, dyadic: bool) -> Problem {
    let conf = if dyadic {
        (0..n).map(|_| rng.random_range(0..1u32 << 20) as f64 * DYADIC_UNIT).collect()
    } else if rng.random_bool(0.2) {
        // Heavy ties.
        (0..n).map(|_| rng.random_range(1..4) as f64).collect()
    } else {
        (0..n).map(|_| rng.random::<f64>()).collect()
    };
    Problem {
        yhat: (0..n).map(|_| rng.random_range(0..2)).collect(),
        y: (0..n).map(|_| rng.random_range(0..2)).collect(),
        guess: (0..n).map(|_| rng.random_range(0..k)).collect(),
        conf,
        k,
    }
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// The label slices a metric constrains, empty ones dropped.
pub fn metric_slices(metric: FairnessMetric, y: &[u8]) -> Vec<Vec<usize>> {
    let with = |label: u8| (0..y.len()).filter(|&i| y[i] == label).collect::<Vec<_>>();
    let all: Vec<usize> = (0..y.len()).collect();
    let slices = match metric {
        FairnessMetric::Sp => vec![all],
        FairnessMetric::Pe => vec![with(0)],
        FairnessMetric::Eo => vec![with(1)],
        FairnessMetric::EOdds => vec![with(0), with(1)],
    };
    slices.into_iter().filter(|s| !s.is_empty()).collect()
}

/// Per slice: (rows, positives, per-group rows, per-group positives).
type Counts = Vec<(u64, u64, Vec<u64>, Vec<u64>)>;

fn counts(slices: &[Vec<usize>], s: &[u32], k: u32, yhat: &[u8]) -> Counts {
    slices
        .iter()
        .map(|slice| {
            let mut size = vec![0u64; k as usize];
            let mut pos = vec![0u64; k as usize];
            for &i in slice {
                size[s[i] as usize] += 1;
                pos[s[i] as usize] += u64::from(yhat[i]);
            }
            (slice.len() as u64, pos.iter().sum(), size, pos)
        })
        .collect()
}

/// Every group non-empty in every slice and `|P/n - u/a| <= eps` for
/// each, in exact rationals.
fn counts_feasible(c: &Counts, eps: &BigRational) -> bool {
    c.iter().all(|(n, p, size, pos)| {
        let overall = BigRational::new(BigInt::from(*p), BigInt::from(*n));
        size.iter().zip(pos).all(|(&a, &u)| {
            a > 0 && (overall.clone() - BigRational::new(BigInt::from(u), BigInt::from(a))).abs() <= *eps
        })
    })
}

pub fn exact_feasible(metric: FairnessMetric, eps: f64, s: &[u32], k: u32, yhat: &[u8], y: &[u8]) -> bool {
    let slices = metric_slices(metric, y);
    counts_feasible(&counts(&slices, s, k, yhat), &rational(eps))
}

/// Largest `|P/n - u/a|` over the present groups, exact.
pub fn exact_unfairness(metric: FairnessMetric, s: &[u32], k: u32, yhat: &[u8], y: &[u8]) -> BigRational {
    let slices = metric_slices(metric, y);
    let mut worst = BigRational::zero();
    for (n, p, size, pos) in counts(&slices, s, k, yhat) {
        let overall = BigRational::new(BigInt::from(p), BigInt::from(n));
        for (&a, &u) in size.iter().zip(&pos) {
            if a > 0 {
                let gap = (overall.clone() - BigRational::new(BigInt::from(u), BigInt::from(a))).abs();
                if gap > worst {
                    worst = gap;
                }
            }
        }
    }
    worst
}

pub fn exact_cost(from: &[u32], to: &[u32], conf: &[f64]) -> BigRational {
    from.iter()
        .zip(to)
        .zip(conf)
        .filter(|((a, b), _)| a != b)
        .fold(BigRational::zero(), |acc, (_, &c)| acc + rational(c))
}

/// Minimum exact cost per tolerance by enumerating every assignment of the
/// constrained rows; `None` where nothing is feasible.
pub fn oracle_optima(p: &Problem, metric: FairnessMetric, eps_list: &[f64]) -> Vec<Option<BigRational>> {
    let slices = metric_slices(metric, &p.y);
    let mut active: Vec<usize> = slices.iter().flatten().cloned().collect();
    active.sort_unstable();
    let eps_r: Vec<BigRational> = eps_list.iter().map(|&e| rational(e)).collect();
    let mut best: Vec<Option<(f64, BigRational)>> = vec![None; eps_list.len()];
    let mut cache: HashMap<Vec<u64>, Vec<bool>> = HashMap::new();
    let mut s = p.guess.clone();
    let mut digits = vec![0u32; active.len()];
    loop {
        for (d, &i) in digits.iter().zip(&active) {
            s[i] = *d;
        }
        let c = counts(&slices, &s, p.k, &p.yhat);
        let key: Vec<u64> = c.iter().flat_map(|(_, _, a, u)| a.iter().chain(u).cloned()).collect();
        let ok = cache
            .entry(key)
            .or_insert_with(|| eps_r.iter().map(|e| counts_feasible(&c, e)).collect());
        let float_cost: f64 = (0..p.len()).filter(|&i| s[i] != p.guess[i]).map(|i| p.conf[i]).sum();
        for (j, &feasible) in ok.iter().enumerate() {
            if !feasible {
                continue;
            }
            let promising = best[j].as_ref().is_none_or(|(f, _)| float_cost <= f + 1e-9);
            if promising {
                let exact = exact_cost(&p.guess, &s, &p.conf);
                if best[j].as_ref().is_none_or(|(_, b)| exact < *b) {
                    best[j] = Some((float_cost, exact));
                }
            }
        }
        // Odometer step.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return best.into_iter().map(|b| b.map(|(_, r)| r)).collect();
            }
            digits[pos] += 1;
            if digits[pos] < p.k {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}
