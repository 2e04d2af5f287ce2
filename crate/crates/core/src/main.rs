use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fairleak::adversary::{AdversaryMode, DEFAULT_K_GRID};
use fairleak::corrector::{
    correct_with, solve_general_bruteforce, CorrectionError, CorrectionResult, CorrectorOptions, Moves,
    SearchStrategy,
};
use fairleak::estimator::estimate_constraint;
use fairleak::fairness::{reconstruction_accuracy, satisfies_exact, FairnessMetric, FairnessSpec};
use fairleak::harness::{
    default_epsilon_grid, emit_report, ingest_csv, read_guess_csv, read_instance_csv, run_experiment, summarize,
    synth_generate, write_corrected_csv, AttackMode, DataSource, DatasetSchema, ExperimentConfig, ExperimentReport,
    HarnessError, ReportFormat, SynthParams,
};

#[derive(Parser)]
#[command(name = "fairleak", version, about = "Correct sensitive-attribute reconstructions against fairness guarantees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correct one instance CSV (`id,y,yhat,s_hat,confidence[,s_true]`).
    Correct(CorrectArgs),
    /// Estimate the hidden constraint from an attack set with predictions.
    Estimate(EstimateArgs),
    /// Run the attack pipeline over seeds and an ε grid.
    Attack(AttackArgs),
    /// Generate a synthetic dataset and its schema.
    Synth(SynthArgs),
    /// Run the synthetic benchmark and print per-ε means.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Sweep,
    BestFirst,
    Exhaustive,
}

#[derive(Args)]
struct CorrectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_metric)]
    metric: FairnessMetric,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    epsilon_lower: Option<f64>,
    /// Corrected vector as `id,s_star,changed`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary of the solve.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sweep")]
    strategy: Strategy,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    attack_set: PathBuf,
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    A,
    Aprime,
    External,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum, default_value = "a")]
    mode: Mode,
    /// `id,s_hat,confidence_raw` for the training rows (mode external).
    #[arg(long)]
    guess_file: Option<PathBuf>,
    /// Comma-separated list; defaults to the 25-point grid.
    #[arg(long, value_delimiter = ',')]
    epsilon_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_metric, default_value = "sp")]
    metric: Vec<FairnessMetric>,
    /// Correct under the constraint estimated from the attack set.
    #[arg(long)]
    estimate: bool,
    /// Comma-separated seeds or a range `a..b`.
    #[arg(long, default_value = "0", value_parser = parse_seeds)]
    seeds: SeedList,
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<f64>>,
    #[arg(long)]
    oracle_check: bool,
    /// Report path; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = SynthParams::default().rho)]
    rho: f64,
    #[arg(long, default_value_t = SynthParams::default().beta)]
    beta: f64,
    /// Dataset CSV; the schema goes next to it as `<stem>.schema.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    oracle_check: bool,
    #[arg(long, default_value_t = 30_000)]
    n: usize,
    /// Number of seeds, starting at 0.
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_metric, default_value = "sp")]
    metric: Vec<FairnessMetric>,
    #[arg(long, value_delimiter = ',')]
    epsilon_grid: Option<Vec<f64>>,
    #[arg(long)]
    estimate: bool,
    #[arg(long, default_value_t = SynthParams::default().rho)]
    rho: f64,
    #[arg(long, default_value_t = SynthParams::default().beta)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_metric(s: &str) -> Result<FairnessMetric, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if b <= a {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|e| format!("{e}")))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

enum Failure {
    Infeasible(String),
    Input(String),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Other(_) => 1,
            Self::Infeasible(_) => 2,
            Self::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Infeasible(m) | Self::Input(m) | Self::Other(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_infeasible() {
            return Self::Infeasible(e.to_string());
        }
        match e {
            HarnessError::Correction(_) | HarnessError::Adversary(_) | HarnessError::Estimation(_) => {
                Self::Other(e.to_string())
            }
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<CorrectionError> for Failure {
    fn from(e: CorrectionError) -> Self {
        match e {
            CorrectionError::Infeasible => Self::Infeasible(e.to_string()),
            CorrectionError::LengthMismatch { .. }
            | CorrectionError::NegativeConfidence { .. }
            | CorrectionError::NotBinary(_)
            | CorrectionError::Metric(_) => Self::Input(e.to_string()),
            _ => Self::Other(e.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct CorrectReport {
    metric: FairnessMetric,
    epsilon: f64,
    epsilon_lower: Option<f64>,
    rows: usize,
    objective: f64,
    changed: usize,
    moves: Moves,
    nodes_expanded: u64,
    proven_optimal: bool,
    satisfied: bool,
    baseline_accuracy: Option<f64>,
    corrected_accuracy: Option<f64>,
}

fn cmd_correct(args: CorrectArgs) -> Result<(), Failure> {
    let table = read_instance_csv(open(&args.input)?)?;
    let spec = FairnessSpec::with_lower(args.metric, args.epsilon, args.epsilon_lower).map_err(input)?;
    let inst = &table.instance;
    let result: CorrectionResult = if inst.guess.is_binary() {
        let strategy = match args.strategy {
            Strategy::Sweep => SearchStrategy::Sweep,
            Strategy::BestFirst => SearchStrategy::best_first(),
            Strategy::Exhaustive => SearchStrategy::exhaustive(),
        };
        correct_with(inst, &spec, &CorrectorOptions { strategy })?
    } else {
        solve_general_bruteforce(inst, &spec, inst.guess.cardinality())?
    };
    log::info!(
        "solved {} rows in {:?} ({} nodes)",
        inst.len(),
        result.stats.wall_time,
        result.stats.nodes_expanded
    );
    let accuracy = |s| inst.truth.as_ref().and_then(|t| reconstruction_accuracy(s, t).ok());
    let report = CorrectReport {
        metric: spec.metric,
        epsilon: spec.epsilon,
        epsilon_lower: spec.epsilon_lower,
        rows: inst.len(),
        objective: result.objective,
        changed: result.changed_indices.len(),
        moves: result.moves.clone(),
        nodes_expanded: result.stats.nodes_expanded,
        proven_optimal: result.stats.proven_optimal,
        satisfied: satisfies_exact(&spec, &result.corrected, &inst.predictions, &inst.labels).map_err(input)?,
        baseline_accuracy: accuracy(&inst.guess),
        corrected_accuracy: accuracy(&result.corrected),
    };
    if let Some(path) = &args.out {
        write_corrected_csv(&table.ids, &inst.guess, &result.corrected, create(path)?)?;
    }
    if let Some(path) = &args.report {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Failure::Other(e.to_string()))?;
        writeln!(w).map_err(|e| Failure::Other(e.to_string()))?;
    }
    println!("objective {:.6}, {} of {} entries changed", report.objective, report.changed, report.rows);
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Failure> {
    let schema = DatasetSchema::load(&args.schema)?;
    let table = ingest_csv(&args.attack_set, &schema)?;
    let predictions = table
        .predictions
        .as_ref()
        .ok_or_else(|| Failure::Input("the schema declares no prediction column".into()))?;
    let est = estimate_constraint(&table.sensitive, predictions, &table.labels, &FairnessMetric::ALL)
        .map_err(input)?;
    println!("{}", serde_json::to_string_pretty(&est).map_err(|e| Failure::Other(e.to_string()))?);
    Ok(())
}

fn write_report(report: &ExperimentReport, path: &Path) -> Result<(), Failure> {
    emit_report(report, path, ReportFormat::from_path(path))?;
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    println!("metric  epsilon   cells  failed  baseline  corrected  improvement");
    for s in summarize(report) {
        println!(
            "{:<7} {:<9.6} {:>5}  {:>6}  {:>8.4}  {:>9.4}  {:>+11.4}",
            s.metric.map_or("-", |m| m.as_str()),
            s.epsilon,
            s.cells,
            s.failed,
            s.mean_baseline,
            s.mean_corrected,
            s.mean_improvement
        );
    }
}

fn cmd_attack(args: AttackArgs) -> Result<(), Failure> {
    let schema = DatasetSchema::load(&args.schema)?;
    let table = ingest_csv(&args.data, &schema)?;
    let mode = match args.mode {
        Mode::A => AttackMode::Baseline(AdversaryMode::A),
        Mode::Aprime => AttackMode::Baseline(AdversaryMode::APrime),
        Mode::External => {
            let path = args
                .guess_file
                .as_ref()
                .ok_or_else(|| Failure::Input("mode external needs --guess-file".into()))?;
            AttackMode::External(read_guess_csv(open(path)?)?)
        }
    };
    let config = ExperimentConfig {
        metrics: args.metric,
        epsilon_grid: args.epsilon_grid.unwrap_or_else(default_epsilon_grid),
        seeds: args.seeds.0,
        mode,
        estimate: args.estimate,
        k_grid: args.k_grid.unwrap_or_else(|| DEFAULT_K_GRID.to_vec()),
        oracle_check: args.oracle_check,
        ..Default::default()
    };
    let report = run_experiment(&config, DataSource::Table(&table))?;
    write_report(&report, &args.out)?;
    print_summary(&report);
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let params = SynthParams {
        rho: args.rho,
        beta: args.beta,
        ..Default::default()
    };
    let table = synth_generate(args.n, args.seed, &params)?;
    table.write_csv(create(&args.out)?)?;
    let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let schema_path = args.out.with_file_name(format!("{stem}.schema.json"));
    table.schema().save(&schema_path)?;
    println!("wrote {} rows to {} and schema to {}", table.len(), args.out.display(), schema_path.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let config = ExperimentConfig {
        metrics: args.metric,
        epsilon_grid: args.epsilon_grid.unwrap_or_else(default_epsilon_grid),
        seeds: (0..args.seeds).collect(),
        estimate: args.estimate,
        oracle_check: args.oracle_check,
        ..Default::default()
    };
    let params = SynthParams {
        rho: args.rho,
        beta: args.beta,
        ..Default::default()
    };
    let report = run_experiment(&config, DataSource::Synthetic { n: args.n, params })?;
    if let Some(path) = &args.out {
        write_report(&report, path)?;
    }
    print_summary(&report);
    if args.oracle_check {
        let mismatches: usize = summarize(&report).iter().map(|s| s.oracle_mismatches).sum();
        let checked: usize = summarize(&report).iter().map(|s| s.oracle_checked).sum();
        println!("oracle check: {mismatches} mismatches in {checked} cells");
        if mismatches > 0 {
            return Err(Failure::Other("oracle mismatch".into()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIRLEAK_LOG", "error")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Correct(a) => cmd_correct(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
