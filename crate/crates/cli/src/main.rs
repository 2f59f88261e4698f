use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use testbed_slicing::harness::{emit_results, run_scenario, Algorithm, HarnessError, RequestSource, Scenario};
use testbed_slicing::request::{generate_requests, requests_to_json, GeneratorParams};
use testbed_slicing::testbed::{build_grid, build_random, default_interface_types};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUN: u8 = 2;

#[derive(Parser)]
#[command(name = "map", version, about = "Map concurrent requests onto a shared wireless testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write per-run CSV and aggregate JSON.
    Run(RunArgs),
    /// Write a grid or random testbed topology file.
    Topo(TopoArgs),
    /// Write a generated request batch.
    GenRequests(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Overrides the scenario's base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mapping_limit: Option<usize>,
    /// Comma-separated subset of {ga, bf}.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Report wall_ms as 0 so the CSV is byte-stable across runs.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("shape").required(true).args(["grid", "random"])))]
struct TopoArgs {
    /// Grid dimensions, e.g. 6x6.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Node count and edge probability, e.g. 25,0.3.
    #[arg(long, value_parser = parse_random)]
    random: Option<(usize, f64)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Scenario config providing the topology and generator parameters.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got `{s}`"))?;
    Ok((
        r.trim().parse().map_err(|e| format!("rows: {e}"))?,
        c.trim().parse().map_err(|e| format!("cols: {e}"))?,
    ))
}

fn parse_random(s: &str) -> Result<(usize, f64), String> {
    let (n, p) = s.split_once(',').ok_or_else(|| format!("expected N,P, got `{s}`"))?;
    Ok((
        n.trim().parse().map_err(|e| format!("node count: {e}"))?,
        p.trim().parse().map_err(|e| format!("edge probability: {e}"))?,
    ))
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn harness_failure(e: HarnessError) -> ExitCode {
    fail(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUN }, e)
}

fn run(args: RunArgs) -> ExitCode {
    let mut scenario = match Scenario::load(&args.config) {
        Ok(s) => s,
        Err(e) => return harness_failure(e),
    };
    if let Some(seed) = args.seed {
        scenario.base_seed = seed;
    }
    if let Some(limit) = args.mapping_limit {
        scenario.mapping_limit = Some(limit);
    }
    if let Some(algorithms) = args.algorithms {
        scenario.algorithms = algorithms;
    }
    if args.no_timing {
        scenario.record_timing = false;
    }
    let report = match run_scenario(&scenario) {
        Ok(r) => r,
        Err(e) => return harness_failure(e),
    };
    if let Err(e) = emit_results(&report, args.out_csv.as_deref(), args.out_json.as_deref()) {
        return fail(EXIT_RUN, e);
    }
    if args.out_json.is_none() {
        print!("{}", report.aggregates_json());
    }
    ExitCode::SUCCESS
}

fn topo(args: TopoArgs) -> ExitCode {
    let built = match (args.grid, args.random) {
        (Some((rows, cols)), _) => build_grid(rows, cols, default_interface_types()),
        (None, Some((n, p))) => build_random(n, p, args.seed, default_interface_types()),
        (None, None) => unreachable!("clap enforces one shape"),
    };
    let topology = match built {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    match std::fs::write(&args.out, topology.to_json() + "\n") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_RUN, format!("writing {}: {e}", args.out.display())),
    }
}

fn gen_requests(args: GenArgs) -> ExitCode {
    let scenario = match Scenario::load(&args.config) {
        Ok(s) => s,
        Err(e) => return harness_failure(e),
    };
    let testbed = match scenario.testbed(args.seed) {
        Ok(t) => t,
        Err(e) => return harness_failure(e),
    };
    let base = match &scenario.requests {
        RequestSource::Generate { params, .. } => params.clone(),
        RequestSource::File { .. } => GeneratorParams::default(),
    };
    let params = GeneratorParams {
        node_kind: if scenario.virtualization {
            testbed_slicing::NodeKind::Virtual
        } else {
            testbed_slicing::NodeKind::Physical
        },
        ..base
    };
    let requests = match generate_requests(args.count, &testbed, args.seed, &params) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    match std::fs::write(&args.out, requests_to_json(&requests) + "\n") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_RUN, format!("writing {}: {e}", args.out.display())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Topo(args) => topo(args),
        Command::GenRequests(args) => gen_requests(args),
    }
}
