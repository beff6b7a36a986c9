//! `rtmplace`: data placement for DBC-organized racetrack memories.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 parse or usage error,
//! 3 infeasible instance, 4 unknown strategy, 5 empty corpus.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rtmplace::bench::{load_corpus, rows_to_csv, run_bench, run_sweep, sweep_to_csv, BenchError, BenchSettings};
use rtmplace::layout::{PlacementFile, RtmGeometry, ShiftReport};
use rtmplace::rtmodel::{builtin_configs, compute_cost, parse_configs, CostReport, RtmConfig, MODEL_NOTE};
use rtmplace::search::GaParams;
use rtmplace::strategy::{run_strategy, Strategy, StrategyError, StrategyOptions};
use rtmplace::synth::{generate, SyntheticParams};
use rtmplace::trace::{parse_trace, AccessSequence};

const THREADS_VAR: &str = "RTMPLACE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "rtmplace", version, about = "Data placement for racetrack memories with domain block clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Place the variables of every sequence in a trace and report shifts.
    Place(PlaceArgs),
    /// Run strategies over a corpus directory and write rows.csv and summary.json.
    Bench(BenchArgs),
    /// Run one strategy under every RTM configuration and print a cost table.
    Sweep(SweepArgs),
    /// Write a synthetic trace with a planted set of lifespan-disjoint variables.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fallback {
    Afd,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Seed for the GA and the random walk.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Place with AFD-OFU when a DMA split is infeasible.
    #[arg(long, value_enum)]
    fallback: Option<Fallback>,
    #[arg(long, default_value_t = GaParams::default().generations)]
    ga_generations: usize,
    #[arg(long, default_value_t = StrategyOptions::default().rw_iterations)]
    rw_iterations: usize,
    /// JSON file with one configuration object or an array of them; replaces the builtins.
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlaceArgs {
    trace: PathBuf,
    #[arg(long)]
    strategy: String,
    #[arg(long, default_value_t = 2)]
    dbcs: usize,
    /// Locations per DBC; defaults to the domain count of the matching configuration.
    #[arg(long)]
    locations: Option<usize>,
    /// Only place the sequence with this name.
    #[arg(long)]
    sequence: Option<String>,
    /// Write the GA per-generation log (JSON lines) to this file.
    #[arg(long, value_name = "PATH")]
    ga_log: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    corpus: PathBuf,
    /// Comma-separated strategy ids.
    #[arg(long, default_value = "afd-ofu,dma-ofu,dma-gg,dma-ls")]
    strategies: String,
    /// Comma-separated DBC counts; defaults to every configuration.
    #[arg(long, value_delimiter = ',')]
    dbcs: Option<Vec<usize>>,
    #[arg(long, default_value = "ga")]
    baseline: String,
    #[arg(long, default_value = "rtmplace-bench")]
    out: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    trace: PathBuf,
    #[arg(long)]
    strategy: String,
    /// Comma-separated DBC counts; defaults to every configuration.
    #[arg(long, value_delimiter = ',')]
    dbcs: Option<Vec<usize>>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    variables: usize,
    #[arg(long)]
    length: usize,
    /// Number of planted disjoint variables.
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    const IO: u8 = 1;
    const USAGE: u8 = 2;
    const INFEASIBLE: u8 = 3;
    const UNKNOWN_STRATEGY: u8 = 4;
    const EMPTY_CORPUS: u8 = 5;

    fn new(code: u8, message: impl Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<StrategyError> for Failure {
    fn from(e: StrategyError) -> Self {
        let code = match &e {
            StrategyError::Unknown(_) => Self::UNKNOWN_STRATEGY,
            _ if e.is_infeasible() => Self::INFEASIBLE,
            StrategyError::Trace(_) => Self::USAGE,
            _ => Self::IO,
        };
        Self::new(code, e)
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        let code = match &e {
            BenchError::Parse { .. } => Self::USAGE,
            BenchError::EmptyCorpus(_) => Self::EMPTY_CORPUS,
            BenchError::Model(_) => Self::USAGE,
            _ if e.is_infeasible() => Self::INFEASIBLE,
            _ => Self::IO,
        };
        Self::new(code, e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_strategy(id: &str) -> CliResult<Strategy> {
    id.trim().parse::<Strategy>().map_err(Failure::from)
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(Failure::IO, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::new(Failure::IO, format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, contents),
        None => std::io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::new(Failure::IO, format!("stdout: {e}"))),
    }
}

fn load_sequences(path: &Path) -> CliResult<Vec<AccessSequence>> {
    let text = read_file(path)?;
    parse_trace(&text).map_err(|e| Failure::new(Failure::USAGE, format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

impl SearchArgs {
    fn options(&self) -> StrategyOptions {
        StrategyOptions {
            ga: GaParams { generations: self.ga_generations, ..GaParams::default() },
            rw_iterations: self.rw_iterations,
            seed: self.seed,
            fallback_afd: self.fallback.is_some(),
        }
    }

    fn configs(&self) -> CliResult<Vec<RtmConfig>> {
        match &self.config {
            None => Ok(builtin_configs()),
            Some(path) => {
                parse_configs(&read_file(path)?).map_err(|e| Failure::new(Failure::USAGE, format!("{}: {e}", path.display())))
            }
        }
    }
}

fn select_configs(all: Vec<RtmConfig>, dbcs: Option<&[usize]>) -> CliResult<Vec<RtmConfig>> {
    let Some(wanted) = dbcs else { return Ok(all) };
    wanted
        .iter()
        .map(|&q| {
            all.iter()
                .find(|c| c.dbc_count == q)
                .copied()
                .ok_or_else(|| Failure::new(Failure::USAGE, format!("no RTM configuration with {q} DBCs")))
        })
        .collect()
}

#[derive(Serialize)]
struct PlacedSequence {
    name: String,
    placement: PlacementFile,
    report: ShiftReport,
    fell_back: bool,
}

#[derive(Serialize)]
struct PlaceOutput {
    strategy: &'static str,
    seed: u64,
    geometry: RtmGeometry,
    sequences: Vec<PlacedSequence>,
    total: ShiftReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<CostReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'static str>,
}

fn cmd_place(args: &PlaceArgs) -> CliResult<()> {
    let strategy = parse_strategy(&args.strategy)?;
    let config = args.search.configs()?.into_iter().find(|c| c.dbc_count == args.dbcs);
    let locations = match (args.locations, config) {
        (Some(n), _) => n,
        (None, Some(c)) => c.domains_per_dbc,
        (None, None) => {
            return Err(Failure::new(
                Failure::USAGE,
                format!("no RTM configuration with {} DBCs; pass --locations", args.dbcs),
            ))
        }
    };
    let geometry = RtmGeometry::new(args.dbcs, locations).map_err(|e| Failure::new(Failure::USAGE, e))?;

    let mut sequences = load_sequences(&args.trace)?;
    if let Some(name) = &args.sequence {
        sequences.retain(|s| s.name() == name);
        if sequences.is_empty() {
            return Err(Failure::new(Failure::USAGE, format!("{}: no sequence named `{name}`", args.trace.display())));
        }
    }

    let opts = args.search.options();
    let mut placed = Vec::with_capacity(sequences.len());
    let mut total = ShiftReport::default();
    let mut log = String::new();
    for seq in &sequences {
        let out = run_strategy(seq, geometry, strategy, &opts)?;
        if let Some(history) = &out.ga_history {
            for record in history {
                log.push_str(&serde_json::to_string(record).expect("record serializes"));
                log.push('\n');
            }
        }
        total = &total + &out.report;
        placed.push(PlacedSequence {
            name: seq.name().to_owned(),
            placement: out.placement.to_file(geometry, seq.variables()),
            report: out.report,
            fell_back: out.fell_back,
        });
    }
    if let Some(path) = &args.ga_log {
        write_file(path, &log)?;
    }

    let cost = config
        .map(|c| compute_cost(&total, &c))
        .transpose()
        .map_err(|e| Failure::new(Failure::IO, e))?;
    let output = PlaceOutput {
        strategy: strategy.id(),
        seed: args.search.seed,
        geometry,
        sequences: placed,
        total,
        model: cost.map(|_| MODEL_NOTE),
        cost,
    };
    emit(None, &to_json(&output))
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let strategies = args.strategies.split(',').filter(|s| !s.trim().is_empty()).map(parse_strategy).collect::<CliResult<Vec<_>>>()?;
    let baseline = parse_strategy(&args.baseline)?;
    let configs = select_configs(args.search.configs()?, args.dbcs.as_deref())?;
    let benchmarks = load_corpus(&args.corpus)?;
    let settings = BenchSettings { strategies, baseline, configs, options: args.search.options() };
    let result = run_bench(&benchmarks, &settings)?;

    fs::create_dir_all(&args.out).map_err(|e| Failure::new(Failure::IO, format!("{}: {e}", args.out.display())))?;
    write_file(&args.out.join("rows.csv"), &rows_to_csv(&result.rows)?)?;
    let summary = to_json(&result.summary);
    write_file(&args.out.join("summary.json"), &summary)?;
    emit(None, &summary)
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let strategy = parse_strategy(&args.strategy)?;
    let configs = select_configs(args.search.configs()?, args.dbcs.as_deref())?;
    let sequences = load_sequences(&args.trace)?;
    let rows = run_sweep(&sequences, strategy, &configs, &args.search.options())?;
    emit(args.out.as_deref(), &sweep_to_csv(&rows)?)
}

fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let params = SyntheticParams { variables: args.variables, length: args.length, clusters: args.clusters, seed: args.seed };
    let trace = generate(&params).map_err(|e| Failure::new(Failure::USAGE, e))?;
    emit(args.out.as_deref(), &trace.to_trace_file(&params))
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::new(Failure::USAGE, format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(Failure::IO, e))
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Place(a) => cmd_place(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rtmplace: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
