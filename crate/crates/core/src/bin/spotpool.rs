use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spotpool::baselines::BaselineConfig;
use spotpool::gss::{AlphaEvaluation, GssConfig};
use spotpool::harness::{compare_strategies, sweep_alpha};
use spotpool::ingest::{load_candidates, load_events, load_trace};
use spotpool::preprocess::{enrich_with_warnings, ScalingWarning};
use spotpool::resilience::{
    reoptimize, InterruptEvent, UnavailableOfferingsCache, DEFAULT_TTL_SECS,
};
use spotpool::sim::{replay, scenario_grid, Strategy, SCHEMA_VERSION};
use spotpool::{CandidateId, EfficiencyReport, Error, PodSpec, Workload};

/// Spot instance pool selection.
#[derive(Parser)]
#[command(name = "spotpool", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick the node mix for one pod request.
    Optimize(OptimizeArgs),
    /// Evaluate the selection problem on an alpha grid.
    SweepAlpha(SweepArgs),
    /// Run all strategies over the 20-scenario grid.
    Compare(CompareArgs),
    /// Replay a snapshot trace with interrupt events.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SpecArgs {
    /// Number of pods to place.
    #[arg(long)]
    pods: u64,
    /// vCPU per pod.
    #[arg(long)]
    cpu: f64,
    /// Memory per pod, GiB.
    #[arg(long)]
    mem: f64,
    #[arg(long, default_value = "general")]
    workload: Workload,
}

impl SpecArgs {
    fn spec(&self) -> spotpool::Result<PodSpec> {
        PodSpec::new(self.pods, self.cpu, self.mem, self.workload)
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    candidates: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Candidate id to keep out of the allocation; repeatable.
    #[arg(long, num_args = 1..)]
    exclude: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    candidates: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Risk-score cutoff for the SpotVerse baselines.
    #[arg(long, default_value_t = 3.0)]
    threshold: f64,
    /// Per-offering node cap for the SpotVerse baselines.
    #[arg(long)]
    max_nodes_per_type: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// Directory of `<epoch>.csv` snapshots.
    #[arg(long)]
    trace: PathBuf,
    /// JSON-lines interrupt events.
    #[arg(long)]
    events: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_TTL_SECS)]
    ttl: i64,
    /// Directory for report.json and report.csv; the JSON goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct OptimizeOutput {
    schema_version: u32,
    spec: PodSpec,
    allocation: spotpool::Allocation,
    report: EfficiencyReport,
    alpha: f64,
    iteration_count: usize,
    evaluations: Vec<AlphaEvaluation>,
    excluded: Vec<CandidateId>,
    warnings: Vec<String>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn optimize(args: OptimizeArgs) -> spotpool::Result<String> {
    let spec = args.spec.spec()?;
    let config = GssConfig::with_epsilon(args.epsilon);
    config.validate()?;
    let candidates = load_candidates(&args.candidates)?;
    let mut cache = UnavailableOfferingsCache::default();
    let mut excluded = Vec::new();
    for raw in args.exclude {
        let id = CandidateId::new(raw);
        if !candidates.iter().any(|c| c.id == id) {
            return Err(Error::UnknownCandidate(id));
        }
        cache.record(&InterruptEvent::new(0, id.clone()));
        excluded.push(id);
    }
    let enrichment = enrich_with_warnings(&candidates, &spec)?;
    let result = reoptimize(&enrichment.candidates, &spec, &cache, 0, &config)?;
    Ok(to_json(&OptimizeOutput {
        schema_version: SCHEMA_VERSION,
        spec,
        alpha: result.best_alpha(),
        iteration_count: result.iteration_count,
        report: result.best_report,
        allocation: result.best_allocation,
        evaluations: result.evaluations,
        excluded,
        warnings: enrichment
            .warnings
            .iter()
            .map(ScalingWarning::to_string)
            .collect(),
    }))
}

fn sweep(args: SweepArgs) -> spotpool::Result<String> {
    let spec = args.spec.spec()?;
    let candidates = load_candidates(&args.candidates)?;
    let report = sweep_alpha(
        &candidates,
        &spec,
        args.step,
        &GssConfig::with_epsilon(args.epsilon),
    )?;
    Ok(match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    })
}

fn compare(args: CompareArgs) -> spotpool::Result<String> {
    let candidates = load_candidates(&args.candidates)?;
    let baseline = BaselineConfig {
        spotverse_threshold: args.threshold,
        max_nodes_per_type: args.max_nodes_per_type,
    };
    let report = compare_strategies(
        &candidates,
        &scenario_grid(),
        GssConfig::with_epsilon(args.epsilon),
        baseline,
    )?;
    Ok(match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    })
}

fn write(path: &Path, contents: &str) -> spotpool::Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn simulate(args: SimulateArgs) -> spotpool::Result<String> {
    let spec = args.spec.spec()?;
    let config = GssConfig::with_epsilon(args.epsilon);
    config.validate()?;
    let trace = load_trace(&args.trace)?;
    let events = match &args.events {
        Some(path) => load_events(path)?,
        None => Vec::new(),
    };
    let strategies = Strategy::all(config, BaselineConfig::default());
    let report = replay(&trace, &events, &spec, &strategies, args.ttl)?;
    match args.out {
        None => Ok(report.to_json()),
        Some(dir) => {
            fs::create_dir_all(&dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            write(&dir.join("report.json"), &report.to_json())?;
            write(&dir.join("report.csv"), &report.to_csv())?;
            log::info!("wrote {}", dir.display());
            Ok(String::new())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidSpec { .. }
        | Error::Parse { .. }
        | Error::DuplicateId(_)
        | Error::NonMonotonicTimestamps { .. }
        | Error::UnknownCandidate(_)
        | Error::InvalidConfig(_) => 2,
        Error::InsufficientCapacity { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPOT_OPT_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Optimize(a) => optimize(a),
        Command::SweepAlpha(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Simulate(a) => simulate(a),
    };
    match outcome {
        Ok(payload) => {
            if !payload.is_empty() {
                println!("{}", payload.trim_end());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
