use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::r6;
use super::{
    split_dataset, synth_generate, CellReport, DatasetTable, ExperimentReport, ExternalGuesses, FairPredictor,
    FeatureEncoder, HarnessError, ReportMetadata, SynthParams, DEFAULT_FRACTIONS,
};
use crate::adversary::{baseline_guess, scale_scores, AdversaryMode, AttackSet, TargetRows, DEFAULT_K_GRID};
use crate::corrector::{correct, solve_general_bruteforce, CorrectionError};
use crate::estimator::estimate_constraint;
use crate::fairness::{
    reconstruction_accuracy, unfairness, AttackInstance, BinaryVector, FairnessMetric, FairnessSpec,
};

/// Largest slice handed to the brute-force oracle.
pub const ORACLE_SLICE: usize = 14;

/// Where the guess comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackMode {
    Baseline(AdversaryMode),
    /// Guesses for the training rows produced elsewhere. The raw scores are
    /// scaled with the smallest `k` of the grid.
    External(ExternalGuesses),
}

impl AttackMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Baseline(AdversaryMode::A) => "a",
            Self::Baseline(AdversaryMode::APrime) => "aprime",
            Self::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub metrics: Vec<FairnessMetric>,
    pub epsilon_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mode: AttackMode,
    /// Correct under the constraint estimated from the attack set instead of
    /// the released one.
    pub estimate: bool,
    pub fractions: Vec<f64>,
    pub k_grid: Vec<f64>,
    pub oracle_check: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            metrics: vec![FairnessMetric::Sp],
            epsilon_grid: default_epsilon_grid(),
            seeds: vec![0],
            mode: AttackMode::Baseline(AdversaryMode::A),
            estimate: false,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            k_grid: DEFAULT_K_GRID.to_vec(),
            oracle_check: false,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if let Some(bad) = self.epsilon_grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(HarnessError::BadParameters(format!("epsilon {bad} is outside [0, 1]")));
        }
        if self.metrics.is_empty() {
            return Err(HarnessError::BadParameters("no metrics".into()));
        }
        if self.k_grid.is_empty() || self.k_grid.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(HarnessError::BadParameters(format!("bad k grid {:?}", self.k_grid)));
        }
        super::split_sizes(10, &self.fractions).map(|_| ())
    }
}

/// 0 followed by 24 geometrically spaced values from 0.001 to 0.2.
pub fn default_epsilon_grid() -> Vec<f64> {
    let (lo, hi, steps) = (0.001f64, 0.2f64, 23);
    std::iter::once(0.0)
        .chain((0..=steps).map(|i| r6(lo * (hi / lo).powf(i as f64 / steps as f64))))
        .collect()
}

pub enum DataSource<'a> {
    Table(&'a DatasetTable),
    /// A fresh synthetic table of `n` rows per seed, generated with that seed.
    Synthetic { n: usize, params: SynthParams },
}

struct CellJob<'a> {
    table: &'a DatasetTable,
    seed: u64,
    metric: FairnessMetric,
    epsilon: f64,
}

fn accuracy(pred: &BinaryVector, labels: &BinaryVector) -> f64 {
    let hits = pred.iter().zip(labels.iter()).filter(|(a, b)| a == b).count();
    hits as f64 / pred.len().max(1) as f64
}

/// Effective-path and brute-force objectives on a random sub-instance agree,
/// or both are infeasible.
fn oracle_agrees(instance: &AttackInstance, spec: &FairnessSpec, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f72_6163_6c65);
    let size = ORACLE_SLICE.min(instance.len());
    let mut rows = sample(&mut rng, instance.len(), size).into_vec();
    rows.sort_unstable();
    let sub = instance.select(&rows);
    match (correct(&sub, spec), solve_general_bruteforce(&sub, spec, 2)) {
        (Ok(a), Ok(b)) => (a.objective - b.objective).abs() <= 1e-9,
        (Err(CorrectionError::Infeasible), Err(CorrectionError::Infeasible)) => true,
        _ => false,
    }
}

fn run_cell(job: &CellJob<'_>, config: &ExperimentConfig) -> Result<CellReport, HarnessError> {
    let mut cell = CellReport {
        seed: job.seed,
        metric: Some(job.metric),
        epsilon: r6(job.epsilon),
        status: "ok".into(),
        ..Default::default()
    };
    let (train, test, attack) = split_dataset(job.table, &config.fractions, job.seed)?;
    let target_spec = FairnessSpec::new(job.metric, job.epsilon)?;
    let model = FairPredictor::fit(&train, &target_spec)?;
    let yhat_train = model.train_predictions().clone();
    let yhat_test = model.predict(&test)?;
    let yhat_attack = model.predict(&attack)?;
    cell.released_epsilon = Some(r6(model.released_epsilon()));
    cell.train_accuracy = Some(r6(accuracy(&yhat_train, &train.labels)));
    cell.test_accuracy = Some(r6(accuracy(&yhat_test, &test.labels)));
    cell.train_unfairness = Some(r6(unfairness(job.metric, &train.sensitive, &yhat_train, &train.labels)?));
    cell.test_unfairness = unfairness(job.metric, &test.sensitive, &yhat_test, &test.labels)
        .ok()
        .map(r6);

    let spec = if config.estimate {
        let est = estimate_constraint(&attack.sensitive, &yhat_attack, &attack.labels, &FairnessMetric::ALL)?;
        let get = |m| est.per_metric_unfairness.get(&m).cloned().map(r6);
        cell.estimated_sp = get(FairnessMetric::Sp);
        cell.estimated_pe = get(FairnessMetric::Pe);
        cell.estimated_eo = get(FairnessMetric::Eo);
        cell.estimated_eodds = get(FairnessMetric::EOdds);
        est.spec
    } else {
        model.released_spec()
    };
    cell.correction_metric = Some(spec.metric);
    cell.correction_epsilon = Some(r6(spec.epsilon));

    let (guess, confidence, k) = match &config.mode {
        AttackMode::Baseline(mode) => {
            let encoder = FeatureEncoder::fit(&attack);
            let attack_set = AttackSet {
                features: encoder.encode(&attack)?,
                labels: attack.labels.clone(),
                sensitive: attack.sensitive.clone(),
                target_predictions: Some(yhat_attack),
            };
            let train_x = encoder.encode(&train)?;
            let target = TargetRows {
                features: &train_x,
                labels: &train.labels,
                predictions: &yhat_train,
            };
            let g = baseline_guess(&attack_set, *mode, target, &spec, &config.k_grid, job.seed)?;
            (g.guess, g.processed, g.chosen_k)
        }
        AttackMode::External(guesses) => {
            let (guess, raw) = guesses.lookup(&train.ids)?;
            let k = config.k_grid.iter().cloned().fold(f64::INFINITY, f64::min);
            (guess, scale_scores(&raw, k)?, k)
        }
    };
    cell.chosen_k = Some(k);

    let instance = AttackInstance::new(
        yhat_train,
        train.labels.clone(),
        guess,
        confidence,
        Some(train.sensitive.clone()),
    )?;
    let baseline = reconstruction_accuracy(&instance.guess, &train.sensitive)?;
    cell.baseline_accuracy = Some(r6(baseline));
    if config.oracle_check {
        cell.oracle_match = Some(oracle_agrees(&instance, &spec, job.seed));
    }
    let result = correct(&instance, &spec)?;
    let corrected = reconstruction_accuracy(&result.corrected, &train.sensitive)?;
    cell.corrected_accuracy = Some(r6(corrected));
    cell.improvement = Some(r6(corrected - baseline));
    cell.objective = Some(r6(result.objective));
    cell.changed = Some(result.changed_indices.len());
    cell.nodes_expanded = Some(result.stats.nodes_expanded);
    cell.proven_optimal = Some(result.stats.proven_optimal);
    Ok(cell)
}

/// Runs every (seed, metric, ε) cell, in parallel, in a fixed order. A
/// failing cell is reported with its error and does not stop the sweep.
pub fn run_experiment(config: &ExperimentConfig, source: DataSource<'_>) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let tables: Vec<DatasetTable> = match &source {
        DataSource::Table(_) => Vec::new(),
        DataSource::Synthetic { n, params } => config
            .seeds
            .par_iter()
            .map(|&seed| synth_generate(*n, seed, params))
            .collect::<Result<_, _>>()?,
    };
    let mut jobs = Vec::new();
    for (i, &seed) in config.seeds.iter().enumerate() {
        let table = match &source {
            DataSource::Table(t) => *t,
            DataSource::Synthetic { .. } => &tables[i],
        };
        for &metric in &config.metrics {
            for &epsilon in &config.epsilon_grid {
                jobs.push(CellJob {
                    table,
                    seed,
                    metric,
                    epsilon,
                });
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|job| {
            run_cell(job, config).unwrap_or_else(|e| {
                log::warn!("cell seed={} metric={} eps={}: {e}", job.seed, job.metric, job.epsilon);
                CellReport {
                    seed: job.seed,
                    metric: Some(job.metric),
                    epsilon: r6(job.epsilon),
                    status: if e.is_infeasible() { "infeasible" } else { "failed" }.into(),
                    error: Some(e.to_string()),
                    ..Default::default()
                }
            })
        })
        .collect();
    Ok(ExperimentReport {
        metadata: ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            mode: config.mode.name().into(),
            estimate: config.estimate,
            metrics: config.metrics.clone(),
            epsilon_grid: config.epsilon_grid.iter().cloned().map(r6).collect(),
            seeds: config.seeds.clone(),
            grid_note: "approximate non-linear grid: 0 then geometric spacing from 0.001 to 0.2 unless overridden"
                .into(),
        },
        cells,
    })
}
