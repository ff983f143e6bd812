use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetnet_range::association::{associate, OffsetSet, OffsetVector};
use hetnet_range::experiment::{export, run_sweep, summarize, ExperimentSpec, ExportFormat, InitKind, Policy};
use hetnet_range::reduction::{build_gadget, exhaustive_offset_search, mis_bruteforce, verify_bounds, Graph, DEFAULT_EPSILON};
use hetnet_range::tso::{optimize_from, trace_to_jsonl, EvalRecord};
use hetnet_range::{Error, Result, Scenario, ScenarioConfig, SolverOptions};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hetnet", version, about = "Energy-minimizing range assignment for LTE HetNets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario file from a layout config.
    Generate(GenerateArgs),
    /// Evaluate one policy on one scenario.
    Solve(SolveArgs),
    /// Run a demand sweep experiment.
    Sweep(SweepArgs),
    /// Build the gadget for a graph and check it against a brute-force MIS.
    Reduce(ReduceArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Relative convergence tolerance of the power iteration.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Maximum Gauss-Seidel sweeps.
    #[arg(long)]
    max_sweeps: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, mut solver: SolverOptions) -> SolverOptions {
        if let Some(t) = self.tolerance {
            solver.tolerance = t;
        }
        if let Some(s) = self.max_sweeps {
            solver.max_sweeps = s;
        }
        solver
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Layout config (TOML, or JSON by extension). Defaults are used if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-UE demand, bps.
    #[arg(long)]
    demand: Option<f64>,
    /// Output file; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Oo,
    Zo,
    Mo,
    Nl,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Zero,
    Max,
    Random,
    ZeroAndMax,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "oo")]
    policy: PolicyArg,
    /// Evaluate this offset vector instead of a policy, e.g. '[0, 3, "-inf"]'.
    #[arg(long, conflicts_with = "policy")]
    offsets: Option<String>,
    /// Override every UE's demand, bps.
    #[arg(long)]
    demand: Option<f64>,
    /// Offset levels in dB, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9,10")]
    levels: Vec<f64>,
    #[arg(long, value_enum, default_value = "zero-and-max")]
    init: InitArg,
    /// Seed for the random start.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    beta: Option<usize>,
    /// Write the tabu search trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment spec (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    /// First layout seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Demands in bps, comma separated.
    #[arg(long, value_delimiter = ',')]
    demands: Option<Vec<f64>>,
    /// Policies, comma separated (oo, zo, mo, nl).
    #[arg(long, value_delimiter = ',', value_enum)]
    policies: Option<Vec<PolicyArg>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ReduceArgs {
    /// Edge list, one `u v` pair per line; `#` starts a comment.
    #[arg(long)]
    graph: PathBuf,
    /// Node count, if larger than the highest node in the edge list.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Also write the gadget scenario here.
    #[arg(long)]
    scenario_out: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Oo => Policy::OO,
            PolicyArg::Zo => Policy::ZO,
            PolicyArg::Mo => Policy::MO,
            PolicyArg::Nl => Policy::NL,
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    if let Some(demand) = args.demand {
        config.demand = demand;
    }
    emit(args.output.as_deref(), &config.generate()?.to_json()?)
}

#[derive(Serialize)]
struct SolveReport {
    policy: String,
    feasible: bool,
    converged: bool,
    objective: Value,
    offsets_db: Value,
    power: Vec<f64>,
    serving: Vec<usize>,
    outer_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    tso_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluations: Option<usize>,
}

impl SolveReport {
    fn new(policy: &str, record: &EvalRecord, set: &OffsetSet) -> Result<Self> {
        let offsets_db = match &record.offsets {
            Some(x) => serde_json::from_str(&x.to_json(set)?)?,
            None => Value::Null,
        };
        Ok(Self {
            policy: policy.into(),
            feasible: record.feasible,
            converged: record.solve.converged(),
            objective: finite(record.objective),
            offsets_db,
            power: record.solve.power.to_vec(),
            serving: record.association.serving().to_vec(),
            outer_iterations: record.solve.outer_iterations,
            tso_iterations: None,
            evaluations: None,
        })
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(demand) = args.demand {
        scenario = scenario.with_uniform_demand(demand)?;
    }
    let set = OffsetSet::new(args.levels.clone())?;
    let solver = args.solver.apply(SolverOptions::default());
    let m = scenario.num_lpns();

    let report = if let Some(text) = &args.offsets {
        let offsets = OffsetVector::from_json(text, &set)?;
        offsets.check(m, &set)?;
        let association = associate(&scenario, &offsets, &set, true)?;
        let record = EvalRecord::from_association(&scenario, association, Some(offsets), &solver, None);
        SolveReport::new("fixed", &record, &set)?
    } else {
        let policy = Policy::from(args.policy);
        match policy {
            Policy::OO => {
                let settings = hetnet_range::experiment::TsoSettings {
                    alpha: args.alpha,
                    beta: args.beta,
                    offsets_db: args.levels.clone(),
                    init: match args.init {
                        InitArg::Zero => InitKind::ZeroOffset,
                        InitArg::Max => InitKind::MaxOffset,
                        InitArg::Random => InitKind::Random,
                        InitArg::ZeroAndMax => InitKind::ZeroAndMax,
                    },
                    warm_start: false,
                };
                let config = settings.config(m, &solver, args.seed)?;
                let result = optimize_from(&scenario, &config, &settings.starts(args.seed))?;
                if let Some(path) = &args.trace {
                    fs::write(path, trace_to_jsonl(&result.trace)?)?;
                }
                let mut report = SolveReport::new(policy.as_str(), &result.record, &set)?;
                report.feasible = result.is_solved() && result.record.feasible;
                report.tso_iterations = Some(result.iterations());
                report.evaluations = Some(result.evaluations);
                report
            }
            Policy::ZO | Policy::MO | Policy::NL => {
                let (offsets, enabled) = match policy {
                    Policy::ZO => (OffsetVector::all_zero(m), true),
                    Policy::MO => (OffsetVector::all_max(m, &set), true),
                    _ => (OffsetVector::all_zero(m), false),
                };
                let association = associate(&scenario, &offsets, &set, enabled)?;
                let record = EvalRecord::from_association(&scenario, association, enabled.then_some(offsets), &solver, None);
                SolveReport::new(policy.as_str(), &record, &set)?
            }
        }
    };
    emit(args.output.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(n) = args.seeds {
        spec.num_seeds = n;
    }
    if let Some(seed) = args.seed {
        spec.scenario.rng_seed = seed;
    }
    if let Some(demands) = args.demands {
        spec.demands = demands;
    }
    if let Some(policies) = args.policies {
        spec.policies = policies.into_iter().map(Policy::from).collect();
    }
    if let Some(out) = args.out {
        spec.output_dir = Some(out);
    }
    spec.solver = args.solver.apply(spec.solver);

    let table = run_sweep(&spec)?;
    if let Some(dir) = &spec.output_dir {
        let format = match args.format {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Json => ExportFormat::Json,
            FormatArg::Both => ExportFormat::Both,
        };
        for path in export(&table, dir, format)? {
            eprintln!("wrote {}", path.display());
        }
    }
    emit(None, &serde_json::to_string_pretty(&summarize(&table))?)
}

fn reduce(args: ReduceArgs) -> Result<()> {
    let graph = Graph::parse_edge_list(&fs::read_to_string(&args.graph)?, args.nodes)?;
    let gadget = build_gadget(&graph, args.epsilon)?;
    if let Some(path) = &args.scenario_out {
        gadget.scenario.save(path)?;
    }
    let optimum = exhaustive_offset_search(&gadget, &SolverOptions::default())?;
    let (mis_size, mis) = mis_bruteforce(&graph)?;
    let bounds: Vec<_> = (0..graph.num_nodes()).map(|k| verify_bounds(&gadget, k)).collect();
    let independent = graph.is_independent(&optimum.active);
    let report = json!({
        "nodes": graph.num_nodes(),
        "edges": graph.edges().len(),
        "epsilon": args.epsilon,
        "active_lpns": optimum.active,
        "total_power": optimum.energy,
        "independent": independent,
        "mis_size": mis_size,
        "mis": mis,
        "matches_mis": independent && optimum.active.len() == mis_size,
        "bounds": bounds,
        "bounds_hold": bounds.iter().all(|b| b.holds),
    });
    emit(args.output.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Reduce(args) => reduce(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Io(_)) {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
