use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use ots_core::bench::{
    bound_table, build_training_store, emit_report, expand_grid, generate_instances, leave_one_out, load_network,
    write_bound_table, BenchError, EvalSettings, InstanceFamily,
};
use ots_core::grid::{GridError, Network};
use ots_core::knn::{run_method, Instance, Method, MethodError, StoreError, TrainingStore};
use ots_solver::MipConfig;

/// Optimal transmission switching with nearest-neighbour warm information.
#[derive(Debug, Parser)]
#[command(name = "ots", version)]
struct Cli {
    /// Seed for every random choice (demand sampling, branching).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a network file and list every structural violation.
    Validate {
        /// Network file: `.m` case file or native format.
        network: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Solve one demand vector with one method.
    Solve(SolveArgs),
    /// Sample an instance family around the baseline demand.
    Generate {
        #[command(flatten)]
        net: NetworkArgs,
        /// Number of instances.
        #[arg(long)]
        count: usize,
        /// Relative half-width of the uniform band around each bus demand.
        #[arg(long, default_value_t = 0.1)]
        perturbation: f64,
        /// Instance family file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every instance exactly and write a training store.
    Train {
        #[command(flatten)]
        net: NetworkArgs,
        /// Instance family file from `generate`.
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        out_store: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Leave-one-out evaluation of methods over a training store.
    Evaluate {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        store: PathBuf,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        /// Comma-separated neighbourhood sizes.
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..), default_value = "1,5,10")]
        k_grid: Vec<u64>,
        /// Directory for the aggregate, per-instance and curve tables.
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Leave time-limited records out of the training sets.
        #[arg(long)]
        exclude_time_limited: bool,
    },
    /// Format the aggregate table of an evaluation run.
    Report {
        /// Output directory of `evaluate`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare big-M bounds per switchable line over held-out records.
    Bounds {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        store: PathBuf,
        /// Which bounds to show.
        #[arg(long, value_enum, default_value_t = BoundKind::All)]
        method: BoundKind,
        /// Number of neighbours.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// Network file: `.m` case file or native format.
    #[arg(long)]
    network: PathBuf,
    /// Switchable-line annotation for case files (default: `<network>.switch`).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    /// Seconds per MIP solve.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// JSON array of bus demands in MW; defaults to the baseline.
    #[arg(long, conflicts_with = "instances")]
    demand: Option<PathBuf>,
    /// Instance family file; use with --index.
    #[arg(long, requires = "index")]
    instances: Option<PathBuf>,
    /// Position of the instance in the family.
    #[arg(long, requires = "instances")]
    index: Option<usize>,
    /// ben, knn-d, knn-lp, knn-b, knn-m, knn-bm, knn-bhatm or all-hatm.
    #[arg(long)]
    method: String,
    /// Number of neighbours.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Training store, required by every method except ben.
    #[arg(long)]
    store: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Markdown,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum BoundKind {
    All,
    Exact,
    Updated,
    Historic,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const USAGE: u8 = 1;
const INPUT: u8 = 2;
const SOLVER: u8 = 3;
const VALIDATION: u8 = 4;

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

fn bench_code(e: &BenchError) -> u8 {
    match e {
        BenchError::Grid(GridError::Invalid(_)) => VALIDATION,
        BenchError::Method(MethodError::BadK { .. }) => USAGE,
        BenchError::Method(_) | BenchError::Formulation(_) | BenchError::Dominance { .. } => SOLVER,
        BenchError::TooManyTopologies(_) | BenchError::Pool(_) => SOLVER,
        _ => INPUT,
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        fail(bench_code(&e), e)
    }
}

impl From<MethodError> for Failure {
    fn from(e: MethodError) -> Self {
        let code = if matches!(e, MethodError::BadK { .. }) { USAGE } else { SOLVER };
        fail(code, e)
    }
}

type Outcome = Result<(), Failure>;

fn input<T, E: Into<anyhow::Error>>(r: Result<T, E>, what: impl FnOnce() -> String) -> Result<T, Failure> {
    r.map_err(|e| fail(INPUT, e.into().context(what())))
}

fn network(args: &NetworkArgs) -> Result<Network, Failure> {
    load_network(&args.network, args.sidecar.as_deref()).map_err(|e| {
        let code = bench_code(&e);
        fail(code, anyhow!(e).context(format!("loading {}", args.network.display())))
    })
}

fn mip_config(args: &SolverArgs, seed: u64) -> Result<MipConfig, Failure> {
    if !(args.gap > 0.0) || !(args.time_limit > 0.0) || args.workers == 0 {
        return Err(fail(USAGE, anyhow!("--gap, --time-limit and --workers must be positive")));
    }
    Ok(MipConfig {
        gap_tolerance: args.gap,
        time_limit: Duration::from_secs_f64(args.time_limit),
        seed,
        ..MipConfig::default()
    })
}

fn read_store(path: &Path, net: &Network) -> Result<TrainingStore, Failure> {
    let file = input(File::open(path), || format!("opening {}", path.display()))?;
    input::<_, StoreError>(TrainingStore::read(BufReader::new(file), net), || {
        format!("reading store {}", path.display())
    })
}

fn read_family(path: &Path) -> Result<InstanceFamily, Failure> {
    let text = input(fs::read_to_string(path), || format!("reading {}", path.display()))?;
    input(serde_json::from_str(&text), || format!("parsing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        input(fs::create_dir_all(dir), || format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(input(File::create(path), || {
        format!("creating {}", path.display())
    })?))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn parse_method(name: &str) -> Result<Method, Failure> {
    name.parse::<Method>().map_err(|e| {
        let known: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        fail(USAGE, anyhow!("{e}; expected one of {}", known.join(", ")))
    })
}

fn validate(path: &Path, sidecar: Option<&Path>) -> Outcome {
    match load_network(path, sidecar) {
        Ok(net) => {
            println!(
                "{}: ok ({} buses, {} lines, {} switchable)",
                path.display(),
                net.num_buses(),
                net.lines().len(),
                net.num_switchable()
            );
            Ok(())
        }
        Err(BenchError::Grid(GridError::Invalid(violations))) => {
            for v in &violations {
                println!("{}: {v}", path.display());
            }
            Err(fail(VALIDATION, anyhow!("{} violations", violations.len())))
        }
        Err(e) => Err(fail(INPUT, anyhow!(e).context(format!("loading {}", path.display())))),
    }
}

fn solve(args: &SolveArgs, seed: u64) -> Outcome {
    let method = parse_method(&args.method)?;
    let net = network(&args.net)?;
    let cfg = mip_config(&args.solver, seed)?;
    let demand = match (&args.demand, &args.instances, args.index) {
        (Some(path), _, _) => {
            let text = input(fs::read_to_string(path), || format!("reading {}", path.display()))?;
            input::<Vec<f64>, _>(serde_json::from_str(&text), || format!("parsing {}", path.display()))?
        }
        (None, Some(path), Some(i)) => {
            let family = read_family(path)?;
            let len = family.len();
            family
                .demands
                .into_iter()
                .nth(i)
                .ok_or_else(|| fail(USAGE, anyhow!("--index {i} but the family has {len} instances")))?
        }
        _ => net.baseline_demand(),
    };
    if demand.len() != net.num_buses() {
        return Err(fail(
            INPUT,
            anyhow!("demand has {} entries, network has {} buses", demand.len(), net.num_buses()),
        ));
    }
    let store = match (&args.store, method.needs_training()) {
        (Some(path), _) => Some(read_store(path, &net)?),
        (None, true) => return Err(fail(USAGE, anyhow!("method {method} needs --store"))),
        (None, false) => None,
    };
    let training = store.as_ref().map_or(&[][..], |s| &s.records[..]);
    let mut inst = Instance::new(&net, demand, &cfg);
    let out = run_method(method, &mut inst, training, args.k as usize)?;
    let open: Vec<String> = match &out.statuses {
        Some(x) => (0..x.len())
            .filter(|&j| !x[j])
            .map(|j| net.switchable_line(j).id.to_string())
            .collect(),
        None => Vec::new(),
    };
    println!("method {method}");
    println!("cost {}", out.cost);
    match &out.statuses {
        Some(x) => {
            let bits: String = x.iter().map(|&on| if on { '1' } else { '0' }).collect();
            println!("topology {bits}");
            println!("open lines {}", if open.is_empty() { "none".into() } else { open.join(" ") });
        }
        None => println!("topology none"),
    }
    if let Some(status) = out.mip_status {
        println!("mip status {status}, {} nodes", out.nodes);
    }
    println!("time {:.6} s", out.wall_time.as_secs_f64());
    Ok(())
}

fn generate(net_args: &NetworkArgs, count: usize, perturbation: f64, out: &Path, seed: u64) -> Outcome {
    if count == 0 || !(0.0..1.0).contains(&perturbation) {
        return Err(fail(USAGE, anyhow!("--count must be positive and --perturbation in [0, 1)")));
    }
    let net = network(net_args)?;
    let name = net_args.network.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let family = generate_instances(&net, &name, count, seed, perturbation);
    let mut w = create(out)?;
    input(serde_json::to_writer_pretty(&mut w, &family), || format!("writing {}", out.display()))?;
    input(writeln!(w).and_then(|_| w.flush()), || format!("writing {}", out.display()))?;
    info!("wrote {count} instances to {}", out.display());
    Ok(())
}

fn train(net_args: &NetworkArgs, instances: &Path, out_store: &Path, solver: &SolverArgs, seed: u64) -> Outcome {
    let net = network(net_args)?;
    let cfg = mip_config(solver, seed)?;
    let family = read_family(instances)?;
    let (store, summary) = build_training_store(&net, &family, &cfg, solver.workers)?;
    let mut w = create(out_store)?;
    input(store.write(&mut w), || format!("writing {}", out_store.display()))?;
    input(w.flush(), || format!("writing {}", out_store.display()))?;
    eprintln!(
        "{} records, {} infeasible instances skipped, {} time-limited",
        store.records.len(),
        summary.infeasible.len(),
        summary.time_limited
    );
    Ok(())
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, Failure> {
    let text = input(fs::read_to_string(path), || format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

fn format_table(rows: &[Vec<String>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            for r in rows {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        Format::Markdown => {
            for (i, r) in rows.iter().enumerate() {
                out.push_str(&format!("| {} |\n", r.join(" | ")));
                if i == 0 {
                    out.push_str(&format!("|{}\n", "---|".repeat(r.len())));
                }
            }
        }
        Format::Text => {
            let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
            let widths: Vec<usize> = (0..cols)
                .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
                .collect();
            for r in rows {
                let cells: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
        }
    }
    out
}

fn report(run: &Path, format: Format, out: Option<&Path>) -> Outcome {
    let rows = csv_rows(&run.join("aggregate.csv"))?;
    let mut w = sink(out)?;
    input(w.write_all(format_table(&rows, format).as_bytes()).and_then(|_| w.flush()), || {
        "writing report".to_string()
    })
}

fn evaluate(
    net_args: &NetworkArgs,
    store: &Path,
    methods: &[String],
    k_grid: &[u64],
    out_dir: &Path,
    solver: &SolverArgs,
    exclude_time_limited: bool,
    seed: u64,
) -> Outcome {
    let methods = methods.iter().map(|m| parse_method(m)).collect::<Result<Vec<_>, _>>()?;
    let net = network(net_args)?;
    let mip = mip_config(solver, seed)?;
    let store = read_store(store, &net)?;
    let ks: Vec<usize> = k_grid.iter().map(|&k| k as usize).collect();
    let settings = EvalSettings {
        grid: expand_grid(&methods, &ks),
        gap_tolerance: solver.gap,
        mip,
        workers: solver.workers,
        exclude_time_limited,
    };
    let run = leave_one_out(&net, &store, &settings)?;
    emit_report(&run, out_dir)?;
    eprintln!(
        "{} instances x {} grid entries written to {}",
        run.instances,
        run.grid.len(),
        out_dir.display()
    );
    Ok(())
}

fn bounds(net_args: &NetworkArgs, store: &Path, kind: BoundKind, k: u64, out: Option<&Path>) -> Outcome {
    let net = network(net_args)?;
    let store = read_store(store, &net)?;
    let rows = bound_table(&net, &store, k as usize).map_err(|e| match e {
        BenchError::Invalid(_) => fail(USAGE, e),
        e => e.into(),
    })?;
    let mut buf = Vec::new();
    write_bound_table(&rows, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    let keep = |col: &str| match kind {
        BoundKind::All => true,
        BoundKind::Exact => col == "exact_m",
        BoundKind::Updated => col.starts_with("updated"),
        BoundKind::Historic => col.starts_with("historic"),
    };
    let table: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    let cols: Vec<usize> = (0..table[0].len())
        .filter(|&c| c < 3 || keep(table[0][c]))
        .collect();
    let mut w = sink(out)?;
    let body: String = table
        .iter()
        .map(|r| cols.iter().map(|&c| r[c]).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    input(w.write_all(body.as_bytes()).and_then(|_| w.flush()), || "writing bound table".to_string())
}

fn run(cli: Cli) -> Outcome {
    let seed = cli.seed;
    match &cli.command {
        Command::Validate { network, sidecar } => validate(network, sidecar.as_deref()),
        Command::Solve(args) => solve(args, seed),
        Command::Generate {
            net,
            count,
            perturbation,
            out,
        } => generate(net, *count, *perturbation, out, seed),
        Command::Train {
            net,
            instances,
            out_store,
            solver,
        } => train(net, instances, out_store, solver, seed),
        Command::Evaluate {
            net,
            store,
            methods,
            k_grid,
            out_dir,
            solver,
            exclude_time_limited,
        } => evaluate(net, store, methods, k_grid, out_dir, solver, *exclude_time_limited, seed),
        Command::Report { run, format, out } => report(run, *format, out.as_deref()),
        Command::Bounds {
            net,
            store,
            method,
            k,
            out,
        } => bounds(net, store, *method, *k, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
