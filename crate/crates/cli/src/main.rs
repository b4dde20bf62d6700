//! `telesabre` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 routing deadlock,
//! 3 infeasible instance, 4 verification failed, 5 oracle limit reached.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use telesabre::architecture::generate_grid_architecture;
use telesabre::benchmarks::Benchmark;
use telesabre::circuit::{parse_circuit, CircuitFormat};
use telesabre::schedule::{csv_rows, emit, EmitFormat, RunInfo};
use telesabre::{
    initial_layout, optimize_initial, run_from, run_greedy, solve_exact, verify, Architecture,
    CircuitDag, Layout, Metrics, OracleError, OracleLimits, RouteError, RouterParams,
    RoutingResult, Schedule,
};

#[derive(Parser)]
#[command(
    name = "telesabre",
    version,
    about = "Layout synthesis for multi-core quantum architectures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route a circuit and write the schedule.
    Route(RouteArgs),
    /// Check a schedule against a circuit and architecture.
    Verify(VerifyArgs),
    /// Solve a tiny instance exactly.
    Oracle(OracleArgs),
    /// Run a circuit x architecture x seed matrix.
    Bench(BenchArgs),
    /// Write a generated architecture as JSON.
    GenArch(GenArchArgs),
}

#[derive(Args, Clone)]
struct Instance {
    /// Architecture JSON file or generator spec such as `grid:3x2,4x4,2`.
    #[arg(long)]
    arch: String,
    /// OpenQASM 2 file, gate-list JSON file or `bench:NAME:N[:SEED]`.
    #[arg(long)]
    circuit: String,
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    lookahead_k: Option<f64>,
    #[arg(long)]
    extended_size: Option<usize>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    capacity_penalty: Option<f64>,
    #[arg(long)]
    traffic: Option<f64>,
    #[arg(long)]
    teleport_weight: Option<f64>,
    #[arg(long)]
    max_stall: Option<usize>,
    /// Stalled operations before the greedy fallback; 0 disables it.
    #[arg(long)]
    release_valve: Option<usize>,
}

impl ParamArgs {
    fn params(&self, seed: u64) -> RouterParams {
        let mut p = RouterParams::with_seed(seed);
        if let Some(v) = self.lookahead_k {
            p.lookahead_k = v;
        }
        if let Some(v) = self.extended_size {
            p.extended_size = v;
        }
        if let Some(v) = self.decay {
            p.decay_delta = v;
        }
        if let Some(v) = self.capacity_penalty {
            p.capacity_penalty = Some(v);
        }
        if let Some(v) = self.traffic {
            p.traffic_coeff = v;
        }
        if let Some(v) = self.teleport_weight {
            p.teleport_base_weight = v;
        }
        if let Some(v) = self.max_stall {
            p.max_stall = Some(v);
        }
        if let Some(v) = self.release_valve {
            p.release_valve = (v > 0).then_some(v);
        }
        p
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum InitialOpt {
    None,
    Bidirectional,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mapper {
    Telesabre,
    Greedy,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct Routing {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs with seeds `seed..seed+trials`; the best by
    /// (inter-core ops, swaps, depth) is kept.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, value_enum, default_value_t = InitialOpt::None)]
    initial_opt: InitialOpt,
    #[arg(long, value_enum, default_value_t = Mapper::Telesabre)]
    mapper: Mapper,
    /// Explicit initial layout as comma-separated physical qubits, one per
    /// logical qubit; overrides the packed initial layout.
    #[arg(long, conflicts_with = "initial_opt")]
    layout: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct RouteArgs {
    #[command(flatten)]
    instance: Instance,
    #[command(flatten)]
    routing: Routing,
    /// Schedule output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV summary file. Printed to standard output when `--out` is set.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long)]
    schedule: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: Instance,
    /// Seed of the packed initial layout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit initial layout as comma-separated physical qubits.
    #[arg(long)]
    layout: Option<String>,
    #[arg(long, default_value_t = OracleLimits::default().max_ops)]
    max_ops: usize,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 30.0)]
    time_budget: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Architectures; repeat the flag for several.
    #[arg(long = "arch", required = true)]
    archs: Vec<String>,
    /// Circuits; repeat the flag for several.
    #[arg(long = "circuit", required = true)]
    circuits: Vec<String>,
    /// Number of seeds per pair, starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[command(flatten)]
    routing: Routing,
    /// CSV output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArchArgs {
    /// Generator spec such as `grid:3x2,4x4,2`.
    spec: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Deadlock(String),
    Infeasible(String),
    Verification(String),
    OracleLimit(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Deadlock(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Verification(_) => 4,
            CliError::OracleLimit(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Deadlock(m) => write!(f, "error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible instance: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::OracleLimit(m) => write!(f, "oracle: {m}"),
        }
    }
}

impl From<RouteError> for CliError {
    fn from(e: RouteError) -> Self {
        match e {
            RouteError::Deadlock(d) => CliError::Deadlock(d.to_string()),
            RouteError::Infeasible(m) => CliError::Infeasible(m),
            RouteError::Layout(l) => CliError::Infeasible(l.to_string()),
            RouteError::Params(m) => CliError::Usage(m),
        }
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(usage)
        }
    }
}

/// An existing file wins over the generator syntax.
fn load_arch(arg: &str) -> Result<Architecture, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        return Architecture::from_json(&read(path)?).map_err(usage);
    }
    if arg.starts_with("grid:") {
        let spec = arg.parse().map_err(usage)?;
        return generate_grid_architecture(spec).map_err(usage);
    }
    Err(usage(format!(
        "`{arg}` is neither a file nor a generator spec"
    )))
}

fn load_circuit(arg: &str) -> Result<CircuitDag, CliError> {
    if let Some(rest) = arg.strip_prefix("bench:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let (name, n, seed) = match parts.as_slice() {
            [name, n] => (*name, *n, "0"),
            [name, n, seed] => (*name, *n, *seed),
            _ => return Err(usage(format!("expected bench:NAME:N[:SEED], got `{arg}`"))),
        };
        let bench: Benchmark = name.parse().map_err(usage)?;
        let n: usize = n
            .parse()
            .map_err(|_| usage(format!("bad qubit count `{n}`")))?;
        let seed: u64 = seed
            .parse()
            .map_err(|_| usage(format!("bad seed `{seed}`")))?;
        return Ok(bench.build(n, seed));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{arg}: {e}")))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => CircuitFormat::GateList,
        _ => CircuitFormat::Qasm,
    };
    parse_circuit(&text, format).map_err(|e| usage(format!("{arg}: {e}")))
}

fn load(instance: &Instance) -> Result<(Architecture, CircuitDag), CliError> {
    Ok((load_arch(&instance.arch)?, load_circuit(&instance.circuit)?))
}

/// One routing run with the given seed.
fn route_once(
    dag: &CircuitDag,
    arch: &Architecture,
    routing: &Routing,
    fixed: Option<&Layout>,
    seed: u64,
) -> Result<RoutingResult, RouteError> {
    let params = routing.params.params(seed);
    params.validate().map_err(RouteError::Params)?;
    let initial = match (fixed, routing.initial_opt) {
        (Some(l), _) => l.clone(),
        (None, InitialOpt::None) => initial_layout(arch, dag, seed)?,
        (None, InitialOpt::Bidirectional) => optimize_initial(arch, dag, &params)?,
    };
    match routing.mapper {
        Mapper::Telesabre => run_from(dag, arch, initial, &params),
        Mapper::Greedy => run_greedy(dag, arch, initial, seed),
    }
}

/// Best of `trials` runs; the first error is returned when every run fails.
fn route_best(
    dag: &CircuitDag,
    arch: &Architecture,
    routing: &Routing,
    fixed: Option<&Layout>,
    seed: u64,
) -> Result<(RoutingResult, u64), RouteError> {
    let mut best: Option<(RoutingResult, u64, Metrics)> = None;
    let mut first_err = None;
    for t in 0..routing.trials.max(1) {
        let s = seed.wrapping_add(t);
        match route_once(dag, arch, routing, fixed, s) {
            Ok(r) => {
                let m = r.schedule.metrics();
                if best.as_ref().is_none_or(|b| m.rank() < b.2.rank()) {
                    best = Some((r, s, m));
                }
            }
            Err(e @ (RouteError::Params(_) | RouteError::Infeasible(_))) => return Err(e),
            Err(e) => {
                log::info!("trial with seed {s} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((r, s, _)) => Ok((r, s)),
        None => Err(first_err.expect("at least one trial ran")),
    }
}

fn cmd_route(args: RouteArgs) -> Result<(), CliError> {
    let (arch, dag) = load(&args.instance)?;
    let fixed = args
        .routing
        .layout
        .as_deref()
        .map(|t| parse_layout(&arch, t))
        .transpose()?;
    let started = Instant::now();
    let (result, seed) = route_best(
        &dag,
        &arch,
        &args.routing,
        fixed.as_ref(),
        args.routing.seed,
    )?;
    let info = RunInfo {
        circuit: args.instance.circuit.clone(),
        arch: args.instance.arch.clone(),
        seed,
        runtime_ms: started.elapsed().as_millis(),
    };
    let format = match args.format {
        OutputFormat::Json => EmitFormat::Json,
        OutputFormat::Text => EmitFormat::AnnotatedText,
    };
    let body = emit(&result.schedule, format, &info).map_err(usage)?;
    write_or_print(args.out.as_deref(), &body)?;
    let csv = emit(&result.schedule, EmitFormat::CsvSummary, &info).map_err(usage)?;
    match (&args.csv, &args.out) {
        (Some(path), _) => write_or_print(Some(path), &csv)?,
        (None, Some(_)) => write_or_print(None, &csv)?,
        (None, None) => {}
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let (arch, dag) = load(&args.instance)?;
    let schedule = Schedule::from_json(&read(&args.schedule)?).map_err(usage)?;
    let report = verify(&dag, &arch, &schedule);
    if report.is_ok() {
        let m = schedule.metrics();
        println!(
            "ok: {} swaps, {} teledata, {} telegates, depth {}",
            m.swaps, m.teledata, m.telegate, m.depth
        );
        return Ok(());
    }
    for v in &report.violations {
        eprintln!("{v}");
    }
    Err(CliError::Verification(format!(
        "{} violation(s)",
        report.violations.len()
    )))
}

fn parse_layout(arch: &Architecture, text: &str) -> Result<Layout, CliError> {
    let phys = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad layout entry `{t}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Layout::new(arch, phys).map_err(|e| CliError::Infeasible(e.to_string()))
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let (arch, dag) = load(&args.instance)?;
    let initial = match &args.layout {
        Some(text) => parse_layout(&arch, text)?,
        None => initial_layout(&arch, &dag, args.seed)?,
    };
    if !(args.time_budget.is_finite() && args.time_budget >= 0.0) {
        return Err(usage(
            "time budget must be a non-negative number of seconds",
        ));
    }
    let limits = OracleLimits {
        max_ops: args.max_ops,
        time_budget: Duration::from_secs_f64(args.time_budget),
    };
    let sol = match solve_exact(&dag, &arch, &initial, limits) {
        Ok(sol) => sol,
        Err(OracleError::Instance(e)) => return Err(e.into()),
        Err(e @ OracleError::TooLarge(_)) => return Err(usage(e)),
        Err(e) => return Err(CliError::OracleLimit(e.to_string())),
    };
    let schedule: serde_json::Value =
        serde_json::from_str(&sol.schedule.to_json()).expect("schedule JSON is valid");
    let doc = serde_json::json!({
        "intercore": sol.intercore,
        "swaps": sol.swaps,
        "states": sol.states,
        "schedule": schedule,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    write_or_print(args.out.as_deref(), text.as_bytes())
}

struct BenchRow {
    info: RunInfo,
    metrics: Option<Metrics>,
    error: Option<String>,
}

fn geomean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.max(1.0).ln(), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).exp()
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let archs = args
        .archs
        .iter()
        .map(|a| Ok((a.clone(), load_arch(a)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let circuits = args
        .circuits
        .iter()
        .map(|c| Ok((c.clone(), load_circuit(c)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    args.routing.params.params(0).validate().map_err(usage)?;
    if args.routing.layout.is_some() {
        return Err(usage("--layout is not supported by bench"));
    }
    let mut jobs = Vec::new();
    for (ai, _) in archs.iter().enumerate() {
        for (ci, _) in circuits.iter().enumerate() {
            for s in 0..args.seeds {
                jobs.push((ai, ci, args.routing.seed.wrapping_add(s)));
            }
        }
    }
    let mut rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(ai, ci, seed)| {
            let (arch_name, arch) = &archs[ai];
            let (circuit_name, dag) = &circuits[ci];
            let started = Instant::now();
            let outcome = route_best(dag, arch, &args.routing, None, seed);
            let mut info = RunInfo {
                circuit: circuit_name.clone(),
                arch: arch_name.clone(),
                seed,
                runtime_ms: started.elapsed().as_millis(),
            };
            match outcome {
                Ok((r, s)) => {
                    info.seed = s;
                    BenchRow {
                        info,
                        metrics: Some(r.schedule.metrics()),
                        error: None,
                    }
                }
                Err(e) => BenchRow {
                    info,
                    metrics: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.info.arch, &a.info.circuit, a.info.seed).cmp(&(
            &b.info.arch,
            &b.info.circuit,
            b.info.seed,
        ))
    });
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!(
                "{} on {} seed {}: {e}",
                r.info.circuit, r.info.arch, r.info.seed
            );
        }
    }
    let ok: Vec<(&RunInfo, Metrics)> = rows
        .iter()
        .filter_map(|r| r.metrics.map(|m| (&r.info, m)))
        .collect();
    let csv = csv_rows(ok.iter().map(|&(i, m)| (i, m))).map_err(usage)?;
    write_or_print(args.out.as_deref(), &csv)?;
    for (name, _) in &archs {
        let of_arch: Vec<&Metrics> = ok
            .iter()
            .filter(|(i, _)| &i.arch == name)
            .map(|(_, m)| m)
            .collect();
        eprintln!(
            "{name}: {} runs, geometric mean inter-core {:.2}, swaps {:.2}, depth {:.2}",
            of_arch.len(),
            geomean(of_arch.iter().map(|m| m.intercore_total as f64)),
            geomean(of_arch.iter().map(|m| m.swaps as f64)),
            geomean(of_arch.iter().map(|m| m.depth as f64)),
        );
    }
    let failed = rows.len() - ok.len();
    if failed > 0 {
        return Err(CliError::Deadlock(format!(
            "{failed} of {} runs failed",
            rows.len()
        )));
    }
    Ok(())
}

fn cmd_gen_arch(args: GenArchArgs) -> Result<(), CliError> {
    let spec = args.spec.parse().map_err(usage)?;
    let arch = generate_grid_architecture(spec).map_err(usage)?;
    let mut text = arch.to_json();
    text.push('\n');
    write_or_print(args.out.as_deref(), text.as_bytes())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TELESABRE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Route(a) => cmd_route(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
        Command::GenArch(a) => cmd_gen_arch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
