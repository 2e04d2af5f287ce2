use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DatasetTable, FeatureColumn, HarnessError};
use crate::fairness::{BinaryVector, SensitiveVector};

/// Generator knobs. `rho` is how often a proxy feature follows the sensitive
/// bit; `beta` is the sensitive bit's weight in the label logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub rho: f64,
    pub beta: f64,
    /// Probability that a row is in group 1.
    pub group_share: f64,
    pub n_proxies: usize,
    pub n_other: usize,
    pub levels: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            rho: 0.6,
            beta: 0.5,
            group_share: 0.4,
            n_proxies: 3,
            n_other: 4,
            levels: 5,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::BadParameters(msg));
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho {} is outside [0, 1]", self.rho));
        }
        if !self.beta.is_finite() {
            return bad(format!("beta {} is not finite", self.beta));
        }
        if !(self.group_share > 0.0 && self.group_share < 1.0) {
            return bad(format!("group_share {} is outside (0, 1)", self.group_share));
        }
        if self.levels < 2 {
            return bad(format!("need at least 2 levels, got {}", self.levels));
        }
        Ok(())
    }
}

/// Categorical proxies `p*`, informative features `x*` and one numeric
/// proxy `z`. Labels depend on the `x*` columns and on `s` through `beta`
/// only, so `beta = 0` leaves `y` independent of `s`.
pub fn synth_generate(n: usize, seed: u64, params: &SynthParams) -> Result<DatasetTable, HarnessError> {
    if n < 10 {
        return Err(HarnessError::BadParameters(format!("n must be at least 10, got {n}")));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = params.levels;
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let weights: Vec<f64> = (0..params.n_other).map(|j| 0.6 - 0.25 * j as f64).collect();

    let mut s = Vec::with_capacity(n);
    let mut proxies = vec![Vec::with_capacity(n); params.n_proxies];
    let mut numeric = Vec::with_capacity(n);
    let mut other = vec![Vec::with_capacity(n); params.n_other];
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let si = u8::from(rng.random_bool(params.group_share));
        s.push(si);
        for column in proxies.iter_mut() {
            // Group 1 leans to the low levels, group 0 to the high ones.
            let v = if rng.random_bool(params.rho) {
                let half = levels / 2;
                if si == 1 {
                    rng.random_range(0..half)
                } else {
                    rng.random_range(levels - half..levels)
                }
            } else {
                rng.random_range(0..levels)
            };
            column.push(v);
        }
        let shift = if si == 1 { params.rho } else { -params.rho };
        numeric.push(shift + noise.sample(&mut rng));
        let mut logit = params.beta * (2.0 * f64::from(si) - 1.0);
        for (column, w) in other.iter_mut().zip(&weights) {
            let v = rng.random_range(0..levels);
            column.push(v);
            logit += w * (f64::from(v) - f64::from(levels - 1) / 2.0);
        }
        let p = 1.0 / (1.0 + (-logit).exp());
        y.push(u8::from(rng.random_bool(p)));
    }

    let level_names: Vec<String> = (0..levels).map(|l| l.to_string()).collect();
    let categorical = |codes: Vec<u32>| FeatureColumn::Categorical {
        levels: level_names.clone(),
        codes,
    };
    let mut feature_names = Vec::new();
    let mut features = Vec::new();
    for (j, column) in proxies.into_iter().enumerate() {
        feature_names.push(format!("p{j}"));
        features.push(categorical(column));
    }
    for (j, column) in other.into_iter().enumerate() {
        feature_names.push(format!("x{j}"));
        features.push(categorical(column));
    }
    feature_names.push("z".into());
    features.push(FeatureColumn::Numeric(numeric));

    Ok(DatasetTable {
        ids: (0..n as i64).collect(),
        feature_names,
        features,
        sensitive: SensitiveVector::from_bits(&s)?,
        labels: BinaryVector::new(y)?,
        predictions: None,
    })
}
