//! Categorical naive Bayes with Laplace smoothing.

use super::AdversaryError;

/// Column-major table of category codes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureMatrix {
    columns: Vec<Vec<u32>>,
    rows: usize,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<Vec<u32>>) -> Result<Self, AdversaryError> {
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().position(|c| c.len() != rows) {
            return Err(AdversaryError::RaggedFeatures {
                column: bad,
                expected: rows,
                found: columns[bad].len(),
            });
        }
        Ok(Self { columns, rows })
    }

    /// A matrix with `rows` rows and no columns.
    pub fn empty(rows: usize) -> Self {
        Self {
            columns: Vec::new(),
            rows,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    /// Appends a column; its length must match.
    pub fn push_column(&mut self, column: Vec<u32>) -> Result<(), AdversaryError> {
        if self.columns.is_empty() && self.rows == 0 {
            self.rows = column.len();
        }
        if column.len() != self.rows {
            return Err(AdversaryError::RaggedFeatures {
                column: self.columns.len(),
                expected: self.rows,
                found: column.len(),
            });
        }
        self.columns.push(column);
        Ok(())
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            rows: indices.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassPrior {
    /// Equal weight per class, whatever the class frequencies.
    Uniform,
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalNaiveBayes {
    n_classes: usize,
    log_prior: Vec<f64>,
    /// `[feature][class][level]`; the extra last level covers codes unseen in
    /// training.
    log_likelihood: Vec<Vec<Vec<f64>>>,
}

impl CategoricalNaiveBayes {
    pub fn fit(
        features: &FeatureMatrix,
        targets: &[u32],
        n_classes: usize,
        prior: ClassPrior,
        alpha: f64,
    ) -> Result<Self, AdversaryError> {
        if targets.len() != features.rows() {
            return Err(AdversaryError::RaggedFeatures {
                column: features.n_columns(),
                expected: features.rows(),
                found: targets.len(),
            });
        }
        let mut class_counts = vec![0usize; n_classes];
        for &t in targets {
            class_counts[t as usize] += 1;
        }
        let total = targets.len() as f64;
        let log_prior = class_counts
            .iter()
            .map(|&c| match prior {
                ClassPrior::Uniform => -(n_classes as f64).ln(),
                ClassPrior::Empirical => ((c as f64 + alpha) / (total + alpha * n_classes as f64)).ln(),
            })
            .collect();

        let log_likelihood = features
            .columns()
            .iter()
            .map(|column| {
                let levels = column.iter().max().map_or(0, |&m| m as usize + 1);
                let mut counts = vec![vec![0usize; levels]; n_classes];
                for (&v, &t) in column.iter().zip(targets) {
                    counts[t as usize][v as usize] += 1;
                }
                counts
                    .iter()
                    .zip(&class_counts)
                    .map(|(per_level, &nc)| {
                        let denom = nc as f64 + alpha * (levels as f64 + 1.0);
                        per_level
                            .iter()
                            .map(|&c| ((c as f64 + alpha) / denom).ln())
                            .chain(std::iter::once((alpha / denom).ln()))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            n_classes,
            log_prior,
            log_likelihood,
        })
    }

    pub fn n_features(&self) -> usize {
        self.log_likelihood.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn joint_log(&self, features: &FeatureMatrix, row: usize) -> Vec<f64> {
        let mut scores = self.log_prior.clone();
        for (table, column) in self.log_likelihood.iter().zip(features.columns()) {
            let v = column[row] as usize;
            for (c, score) in scores.iter_mut().enumerate() {
                let levels = &table[c];
                *score += levels[v.min(levels.len() - 1)];
            }
        }
        scores
    }

    /// Posterior class probabilities for every row.
    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Vec<Vec<f64>>, AdversaryError> {
        if features.n_columns() != self.n_features() {
            return Err(AdversaryError::SchemaMismatch {
                expected: self.n_features(),
                found: features.n_columns(),
            });
        }
        Ok((0..features.rows())
            .map(|row| {
                let scores = self.joint_log(features, row);
                if self.n_classes == 2 {
                    // Logistic form keeps the larger posterior >= 0.5 exactly.
                    let p1 = 1.0 / (1.0 + (scores[0] - scores[1]).exp());
                    vec![1.0 - p1, p1]
                } else {
                    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                    let z: f64 = exp.iter().sum();
                    exp.into_iter().map(|e| e / z).collect()
                }
            })
            .collect())
    }

    /// Argmax class (lowest index on ties) and its probability, per row.
    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<(u32, f64)>, AdversaryError> {
        Ok(self
            .predict_proba(features)?
            .into_iter()
            .map(|probs| {
                let mut best = 0;
                for (c, &p) in probs.iter().enumerate() {
                    if p > probs[best] {
                        best = c;
                    }
                }
                (best as u32, probs[best])
            })
            .collect())
    }
}
