//! Acceptance suite. Runs as a plain binary (`harness = false`) and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exact_cost, exact_feasible, oracle_optima, random_problem, rational, Problem};
use fairleak::corrector::{correct, solve_general_bruteforce, CorrectionError};
use fairleak::estimator::estimate_constraint;
use fairleak::fairness::{
    satisfies_exact, AttackInstance, BinaryVector, ConfidenceVector, FairnessMetric, FairnessSpec, SensitiveVector,
};
use fairleak::harness::{
    default_epsilon_grid, run_experiment, summarize, DataSource, ExperimentConfig, SynthParams,
};

const FUZZ_EPSILONS: [f64; 4] = [0.0, 0.05, 0.1, 0.25];
const FUZZ_INSTANCES: usize = 500;
const FLOAT_TOLERANCE: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn spec(metric: FairnessMetric, eps: f64) -> FairnessSpec {
    FairnessSpec::new(metric, eps).unwrap()
}

/// Binary instances of 2..=14 rows; half with dyadic confidences.
fn fuzz_corpus() -> Vec<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0001);
    (0..FUZZ_INSTANCES)
        .map(|i| {
            let n = rng.random_range(2..=14);
            random_problem(&mut rng, n, 2, i % 2 == 0)
        })
        .collect()
}

fn criterion_1_oracle(corpus: &[Problem]) -> Outcome {
    let mut solves = 0;
    let mut feasible = 0;
    let mut failures = Vec::new();
    for (i, p) in corpus.iter().enumerate() {
        let inst = p.instance();
        for metric in FairnessMetric::ALL {
            let optima = oracle_optima(p, metric, &FUZZ_EPSILONS);
            for (&eps, optimum) in FUZZ_EPSILONS.iter().zip(&optima) {
                solves += 1;
                let s = spec(metric, eps);
                let got = correct(&inst, &s);
                let lib_brute = solve_general_bruteforce(&inst, &s, 2);
                let ok = match (&got, optimum) {
                    (Ok(r), Some(best)) => {
                        feasible += 1;
                        let exact = exact_cost(&p.guess, r.corrected.values(), &p.conf);
                        let exact_ok = if i % 2 == 0 {
                            exact == *best && rational(r.objective) == *best
                        } else {
                            let diff = (exact - best).abs();
                            diff <= rational(FLOAT_TOLERANCE)
                        };
                        let brute_ok = lib_brute
                            .as_ref()
                            .is_ok_and(|b| (b.objective - r.objective).abs() <= FLOAT_TOLERANCE);
                        exact_ok && brute_ok
                    }
                    (Err(CorrectionError::Infeasible), None) => {
                        matches!(lib_brute, Err(CorrectionError::Infeasible))
                    }
                    _ => false,
                };
                if !ok && failures.len() < 3 {
                    failures.push(format!("instance {i} {metric} eps={eps}: {got:?} vs {optimum:?}"));
                }
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{} instances x 4 metrics x 4 eps = {solves} solves, {feasible} feasible, {}",
            corpus.len(),
            if failures.is_empty() { "all optima equal".to_string() } else { format!("mismatches: {failures:?}") }
        ),
    }
}

fn criterion_2_feasibility(corpus: &[Problem]) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (i, p) in corpus.iter().enumerate() {
        let inst = p.instance();
        for metric in FairnessMetric::ALL {
            for eps in FUZZ_EPSILONS {
                if let Ok(r) = correct(&inst, &spec(metric, eps)) {
                    checked += 1;
                    let s = r.corrected.values();
                    if !exact_feasible(metric, eps, s, 2, &p.yhat, &p.y) {
                        bad.push(format!("binary {i} {metric} {eps}"));
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0002);
    let mut multi = 0;
    let mut multi_feasible = 0;
    while multi < 100 {
        let n = rng.random_range(3..=10);
        let p = random_problem(&mut rng, n, 3, multi % 2 == 0);
        let metric = FairnessMetric::ALL[multi % 4];
        let eps = [0.2, 0.35, 0.5, 0.7][(multi / 4) % 4];
        multi += 1;
        let inst = p.instance();
        let optimum = oracle_optima(&p, metric, &[eps]).remove(0);
        match (solve_general_bruteforce(&inst, &spec(metric, eps), 3), optimum) {
            (Ok(r), Some(best)) => {
                multi_feasible += 1;
                let s = r.corrected.values();
                let cost = exact_cost(&p.guess, s, &p.conf);
                let optimal = (cost - best).abs() <= rational(FLOAT_TOLERANCE);
                if !exact_feasible(metric, eps, s, 3, &p.yhat, &p.y) || !optimal {
                    bad.push(format!("K=3 case {multi} {metric} {eps}"));
                }
            }
            (Err(CorrectionError::Infeasible), None) => {}
            (got, want) => bad.push(format!("K=3 case {multi}: {got:?} vs {want:?}")),
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "{checked} binary results and {multi_feasible} of 100 K=3 results satisfy the spec exactly{}",
            if bad.is_empty() { String::new() } else { format!("; violations: {:?}", &bad[..bad.len().min(3)]) }
        ),
    }
}

fn criterion_3_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let grid = default_epsilon_grid();
    let mut problems = Vec::new();
    let mut solves = 0;
    for case in 0..120 {
        let n = rng.random_range(20..=300);
        let p = random_problem(&mut rng, n, 2, true);
        let inst = p.instance();
        let metric = FairnessMetric::ALL[case % 4];

        // Objective never rises as the tolerance loosens. Dyadic confidences
        // make every float sum exact.
        let mut previous: Option<f64> = None;
        for &eps in &grid {
            solves += 1;
            let current = match correct(&inst, &spec(metric, eps)) {
                Ok(r) => r.objective,
                Err(CorrectionError::Infeasible) => f64::INFINITY,
                Err(e) => {
                    problems.push(format!("case {case}: {e}"));
                    break;
                }
            };
            if previous.is_some_and(|prev| current > prev) {
                problems.push(format!("case {case} {metric}: objective rose at eps {eps}"));
            }
            previous = Some(current);
        }

        let s = spec(metric, 0.02);
        let Ok(base) = correct(&inst, &s) else { continue };
        // Flip count equals the move total.
        if base.changed_indices.len() != base.moves.total() {
            problems.push(format!("case {case}: flip count"));
        }
        for c in [0.5, 3.0, 100.0] {
            let scaled = inst.with_confidence(inst.confidence.scaled(c).unwrap()).unwrap();
            match correct(&scaled, &s) {
                Ok(r) if r.corrected == base.corrected && r.objective == base.objective * c => {}
                other => problems.push(format!("case {case}: scaling by {c} gave {:?}", other.map(|r| r.objective))),
            }
        }
        // Slice isolation: PE leaves y = 1 rows alone, EO leaves y = 0 rows.
        for (metric, protected) in [(FairnessMetric::Pe, 1u8), (FairnessMetric::Eo, 0u8)] {
            if let Ok(r) = correct(&inst, &spec(metric, 0.0)) {
                if r.changed_indices.iter().any(|&i| p.y[i] == protected) {
                    problems.push(format!("case {case}: {metric} touched the other slice"));
                }
            }
        }
    }
    Outcome {
        pass: problems.is_empty(),
        detail: format!(
            "120 instances, {solves} grid solves; monotone, scale-invariant (0.5, 3, 100), slice-isolated, flip counts match{}",
            if problems.is_empty() { String::new() } else { format!("; problems: {:?}", &problems[..problems.len().min(3)]) }
        ),
    }
}

fn benchmark(estimate: bool, grid: Vec<f64>) -> fairleak::harness::ExperimentReport {
    let config = ExperimentConfig {
        metrics: vec![FairnessMetric::Sp],
        epsilon_grid: grid,
        seeds: (0..50).collect(),
        estimate,
        ..Default::default()
    };
    run_experiment(
        &config,
        DataSource::Synthetic {
            n: 30_000,
            params: SynthParams::default(),
        },
    )
    .expect("benchmark runs")
}

fn criterion_4_trend() -> Outcome {
    let started = Instant::now();
    let report = benchmark(false, vec![0.0, 0.2]);
    let summary = summarize(&report);
    let (at0, at20) = (&summary[0], &summary[1]);
    let elapsed = started.elapsed();
    Outcome {
        pass: at0.failed == 0
            && at0.mean_improvement >= 0.01
            && at0.mean_improvement >= at20.mean_improvement
            && elapsed < Duration::from_secs(600),
        detail: format!(
            "n=30000, 50 seeds, SP: baseline {:.4}, mean improvement {:+.4} at eps=0 (>= 0.01) vs {:+.4} at eps=0.2; {} failed cells; {:.1?}",
            at0.mean_baseline, at0.mean_improvement, at20.mean_improvement, at0.failed + at20.failed, elapsed
        ),
    }
}

fn criterion_5_estimation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0005);
    let mut eodds_selected = 0;
    for _ in 0..200 {
        let n = rng.random_range(4..400);
        let bias = rng.random_range(0.0..0.5);
        let s: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        y[0] = 0;
        y[1] = 1;
        let yhat: Vec<u8> = (0..n)
            .map(|i| u8::from(rng.random_bool((0.3 + bias * f64::from(s[i]) + 0.2 * f64::from(y[i])).min(1.0))))
            .collect();
        let est = estimate_constraint(
            &SensitiveVector::from_bits(&s).unwrap(),
            &BinaryVector::new(yhat).unwrap(),
            &BinaryVector::new(y).unwrap(),
            &FairnessMetric::ALL,
        )
        .unwrap();
        if est.spec.metric == FairnessMetric::EOdds {
            eodds_selected += 1;
        }
    }

    let report = benchmark(true, vec![0.0]);
    let ok: Vec<_> = report.cells.iter().filter(|c| c.is_ok()).collect();
    let sp_tightest = ok
        .iter()
        .filter(|c| {
            let sp = c.estimated_sp.unwrap_or(f64::INFINITY);
            sp <= c.estimated_pe.unwrap_or(f64::INFINITY) && sp <= c.estimated_eo.unwrap_or(f64::INFINITY)
        })
        .count();
    let recovered = ok.iter().filter(|c| c.correction_metric == Some(FairnessMetric::Sp)).count();
    let improvement = ok.iter().filter_map(|c| c.improvement).sum::<f64>() / ok.len().max(1) as f64;
    Outcome {
        pass: eodds_selected == 0 && recovered * 10 >= 7 * 50 && improvement > 0.0,
        detail: format!(
            "EOdds chosen in {eodds_selected}/200 fuzzed estimates; SP recovered in {recovered}/50 seeds \
             (SP tightest in {sp_tightest}); mean improvement under the estimate {improvement:+.4}"
        ),
    }
}

fn sp_instance(n: usize, seed: u64) -> AttackInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let yhat: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    // Guess correlated with the predictions, so the SP gap is far above 0.01.
    let guess: Vec<u8> = yhat
        .iter()
        .map(|&v| u8::from(rng.random_bool(if v == 1 { 0.65 } else { 0.35 })))
        .collect();
    AttackInstance::new(
        BinaryVector::new(yhat).unwrap(),
        BinaryVector::new((0..n).map(|_| rng.random_range(0..2)).collect()).unwrap(),
        SensitiveVector::from_bits(&guess).unwrap(),
        ConfidenceVector::new((0..n).map(|_| rng.random::<f64>()).collect()).unwrap(),
        None,
    )
    .unwrap()
}

fn criterion_6_performance() -> Outcome {
    let s = spec(FairnessMetric::Sp, 0.01);
    let mut lines = Vec::new();
    let mut pass = true;
    for (n, limit) in [(100_000, Duration::from_secs(10)), (30_000, Duration::from_secs(2))] {
        let inst = sp_instance(n, n as u64);
        let started = Instant::now();
        let r = correct(&inst, &s);
        let elapsed = started.elapsed();
        let ok = match &r {
            Ok(r) => {
                r.stats.proven_optimal
                    && !r.changed_indices.is_empty()
                    && satisfies_exact(&s, &r.corrected, &inst.predictions, &inst.labels).unwrap()
            }
            Err(_) => false,
        };
        pass &= ok && elapsed < limit;
        lines.push(format!(
            "N={n}: {:.1?} (limit {limit:?}), {} flips",
            elapsed,
            r.map_or(0, |r| r.changed_indices.len())
        ));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
    }
}

fn criterion_7_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_fairleak");
    let data = dir.path().join("data.csv");
    let synth = Command::new(bin)
        .args(["synth", "--n", "3000", "--seed", "11", "--out"])
        .arg(&data)
        .output()
        .unwrap();
    if !synth.status.success() {
        return Outcome {
            pass: false,
            detail: format!("synth failed: {}", String::from_utf8_lossy(&synth.stderr)),
        };
    }
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["attack", "--data"])
            .arg(&data)
            .arg("--schema")
            .arg(dir.path().join("data.schema.json"))
            .args(["--mode", "aprime", "--metric", "sp,eodds", "--seeds", "0,1,2", "--estimate", "--out"])
            .arg(&out)
            .output()
            .unwrap()
            .status;
        (status.success(), std::fs::read(out).unwrap_or_default())
    };
    let mut pass = true;
    let mut sizes = Vec::new();
    for ext in ["csv", "json"] {
        let (ok_a, a) = run(&format!("first.{ext}"));
        let (ok_b, b) = run(&format!("second.{ext}"));
        pass &= ok_a && ok_b && !a.is_empty() && a == b;
        sizes.push(format!("{ext} {} bytes", a.len()));
    }
    Outcome {
        pass,
        detail: format!("two `attack` runs with identical flags, {} identical", sizes.join(" and ")),
    }
}

fn main() -> ExitCode {
    let corpus = fuzz_corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 oracle equivalence", Box::new(|| criterion_1_oracle(&corpus))),
        ("2 exact feasibility", Box::new(|| criterion_2_feasibility(&corpus))),
        ("3 monotonicity and invariance", Box::new(criterion_3_invariants)),
        ("4 trend on the synthetic benchmark", Box::new(criterion_4_trend)),
        ("5 constraint estimation", Box::new(criterion_5_estimation)),
        ("6 performance", Box::new(criterion_6_performance)),
        ("7 determinism", Box::new(criterion_7_determinism)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let started = Instant::now();
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({:.1?}) {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            started.elapsed(),
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
