//! Scenario runner: builds the testbed, draws request batches, runs the GA
//! and/or the exhaustive search per repetition and aggregates the metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brute_force::{brute_force_search, BruteForceError, DEFAULT_SEARCH_CAP};
use crate::ga::{run_ga, GaConfig, MapperError, MapperSolution, MappingProblem};
use crate::request::{
    generate_requests, load_requests, validate_batch, GeneratorError, GeneratorParams, NodeKind, Request,
    RequestError, RequestFileError,
};
use crate::testbed::{
    build_grid, build_random, default_interface_types, load_topology, InterfaceType, TestbedTopology, TopologyError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Grid {
        rows: usize,
        cols: usize,
    },
    Random {
        n: usize,
        #[serde(default = "default_edge_prob")]
        edge_prob: f64,
        /// Fixed topology seed; when absent each repetition uses its own seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
    },
}

fn default_edge_prob() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RequestSource {
    Generate {
        count: usize,
        #[serde(default)]
        params: GeneratorParams,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ga,
    Bf,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ga => "ga",
            Algorithm::Bf => "bf",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ga" => Ok(Algorithm::Ga),
            "bf" => Ok(Algorithm::Bf),
            other => Err(format!("unknown algorithm `{other}` (expected ga or bf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: TopologySpec,
    #[serde(default = "default_interface_types")]
    pub interface_types: Vec<InterfaceType>,
    pub requests: RequestSource,
    #[serde(default)]
    pub mapping_limit: Option<usize>,
    /// Generated requests ask for virtual nodes instead of physical ones.
    #[serde(default)]
    pub virtualization: bool,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_cap")]
    pub bf_search_cap: u64,
    /// When false, `wall_ms` is reported as 0 so output is byte-stable.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_repetitions() -> usize {
    10
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Ga]
}

fn default_cap() -> u64 {
    DEFAULT_SEARCH_CAP as u64
}

fn default_true() -> bool {
    true
}

impl Scenario {
    pub fn new(topology: TopologySpec, requests: RequestSource) -> Self {
        Self {
            topology,
            interface_types: default_interface_types(),
            requests,
            mapping_limit: None,
            virtualization: false,
            ga: GaConfig::default(),
            repetitions: default_repetitions(),
            base_seed: 0,
            algorithms: default_algorithms(),
            bf_search_cap: default_cap(),
            record_timing: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a scenario file; relative data paths inside it are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
        let mut s = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            s.resolve_paths(dir);
        }
        Ok(s)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let TopologySpec::File { path } = &mut self.topology {
            fix(path);
        }
        if let RequestSource::File { path } = &mut self.requests {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm must be selected".into());
        }
        if self.mapping_limit == Some(0) {
            return bad("mapping_limit must be positive when given".into());
        }
        if let RequestSource::Generate { count: 0, .. } = self.requests {
            return bad("request count must be positive".into());
        }
        if let RequestSource::Generate { params, .. } = &self.requests {
            params.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        self.ga.validate(&[]).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    fn node_kind(&self) -> NodeKind {
        if self.virtualization {
            NodeKind::Virtual
        } else {
            NodeKind::Physical
        }
    }

    /// Testbed for the repetition with seed `seed`.
    pub fn testbed(&self, seed: u64) -> Result<TestbedTopology, HarnessError> {
        let types = self.interface_types.clone();
        Ok(match &self.topology {
            TopologySpec::Grid { rows, cols } => build_grid(*rows, *cols, types)?,
            TopologySpec::Random { n, edge_prob, seed: fixed } => build_random(*n, *edge_prob, fixed.unwrap_or(seed), types)?,
            TopologySpec::File { path } => load_topology(path)?,
        })
    }

    /// Request batch for the repetition with seed `seed`.
    pub fn request_batch(&self, testbed: &TestbedTopology, seed: u64) -> Result<Vec<Request>, HarnessError> {
        let requests = match &self.requests {
            RequestSource::Generate { count, params } => {
                let params = GeneratorParams { node_kind: self.node_kind(), ..params.clone() };
                generate_requests(*count, testbed, seed, &params)?
            }
            RequestSource::File { path } => load_requests(path)?,
        };
        validate_batch(&requests, testbed)?;
        Ok(requests)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    RequestFile(#[from] RequestFileError),
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Problems with the inputs, as opposed to failures while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Topology(_)
                | HarnessError::RequestFile(_)
                | HarnessError::Request(_)
                | HarnessError::Generator(_)
                | HarnessError::Mapper(MapperError::Config(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunOutcome {
    Completed {
        served: usize,
        fitness: f64,
        feasible: bool,
        wall_ms: f64,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub outcome: RunOutcome,
    #[serde(skip)]
    pub solution: Option<MapperSolution>,
}

impl RunRow {
    pub fn served(&self) -> Option<usize> {
        match self.outcome {
            RunOutcome::Completed { served, .. } => Some(served),
            RunOutcome::Skipped { .. } => None,
        }
    }

    pub fn fitness(&self) -> Option<f64> {
        match self.outcome {
            RunOutcome::Completed { fitness, .. } => Some(fitness),
            RunOutcome::Skipped { .. } => None,
        }
    }

    pub fn wall_ms(&self) -> Option<f64> {
        match self.outcome {
            RunOutcome::Completed { wall_ms, .. } => Some(wall_ms),
            RunOutcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub skipped: usize,
    pub mean_served: f64,
    pub variance_served: f64,
    pub mean_fitness: f64,
    pub feasible_rate: f64,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub summaries: Vec<AlgorithmSummary>,
    /// Runs where both algorithms completed.
    pub compared_runs: usize,
    pub optimality_rate: Option<f64>,
    pub served_match_rate: Option<f64>,
    /// Mean GA served count over the one-request-per-slot baseline.
    pub slicing_revenue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<RunRow>,
    pub aggregates: Aggregates,
}

/// Equal up to floating-point summation order.
pub fn fitness_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population variance.
fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn aggregate(rows: &[RunRow], algorithms: &[Algorithm]) -> Aggregates {
    let mut algos = algorithms.to_vec();
    algos.sort();
    algos.dedup();
    let summaries = algos
        .iter()
        .map(|&algorithm| {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.algorithm == algorithm).collect();
            let done: Vec<&RunRow> = mine.iter().copied().filter(|r| r.served().is_some()).collect();
            let served: Vec<f64> = done.iter().filter_map(|r| r.served()).map(|s| s as f64).collect();
            let fitness: Vec<f64> = done.iter().filter_map(|r| r.fitness()).collect();
            let wall: Vec<f64> = done.iter().filter_map(|r| r.wall_ms()).collect();
            let feasible = done
                .iter()
                .filter(|r| matches!(r.outcome, RunOutcome::Completed { feasible: true, .. }))
                .count();
            AlgorithmSummary {
                algorithm,
                runs: mine.len(),
                skipped: mine.len() - done.len(),
                mean_served: mean(&served),
                variance_served: variance(&served),
                mean_fitness: mean(&fitness),
                feasible_rate: if done.is_empty() { 0.0 } else { feasible as f64 / done.len() as f64 },
                mean_wall_ms: mean(&wall),
            }
        })
        .collect::<Vec<_>>();

    let mut pairs = Vec::new();
    for ga in rows.iter().filter(|r| r.algorithm == Algorithm::Ga && r.served().is_some()) {
        if let Some(bf) = rows
            .iter()
            .find(|r| r.algorithm == Algorithm::Bf && r.seed == ga.seed && r.served().is_some())
        {
            pairs.push((ga, bf));
        }
    }
    let rate = |pred: &dyn Fn(&RunRow, &RunRow) -> bool| {
        (!pairs.is_empty()).then(|| pairs.iter().filter(|(g, b)| pred(g, b)).count() as f64 / pairs.len() as f64)
    };
    let optimality_rate = rate(&|g, b| fitness_equal(g.fitness().unwrap(), b.fitness().unwrap()));
    let served_match_rate = rate(&|g, b| g.served() == b.served());
    let slicing_revenue = summaries
        .iter()
        .find(|s| s.algorithm == Algorithm::Ga && s.runs > s.skipped)
        .map(|s| s.mean_served);
    Aggregates { summaries, compared_runs: pairs.len(), optimality_rate, served_match_rate, slicing_revenue }
}

fn solve(
    algorithm: Algorithm,
    problem: &MappingProblem<'_>,
    cfg: &GaConfig,
    cap: u64,
) -> Result<Result<MapperSolution, String>, HarnessError> {
    match algorithm {
        Algorithm::Ga => Ok(Ok(run_ga(problem, cfg)?)),
        Algorithm::Bf => match brute_force_search(problem, cfg, u128::from(cap)) {
            Ok(sol) => Ok(Ok(sol)),
            Err(e @ BruteForceError::SearchSpaceTooLarge { .. }) => Ok(Err(e.to_string())),
            Err(BruteForceError::Config(e)) => Err(MapperError::Config(e).into()),
        },
    }
}

fn run_repetition(s: &Scenario, seed: u64, algorithms: &[Algorithm]) -> Result<Vec<RunRow>, HarnessError> {
    let testbed = s.testbed(seed)?;
    let requests = s.request_batch(&testbed, seed)?;
    let problem = MappingProblem::new(&requests, &testbed, s.mapping_limit);
    let cfg = GaConfig { seed, ..s.ga.clone() };
    algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            let result = solve(algorithm, &problem, &cfg, s.bf_search_cap)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let wall_ms = if s.record_timing { elapsed } else { 0.0 };
            Ok(match result {
                Ok(sol) => RunRow {
                    seed,
                    algorithm,
                    outcome: RunOutcome::Completed {
                        served: sol.served_count(),
                        fitness: sol.fitness.total,
                        feasible: sol.feasible,
                        wall_ms,
                    },
                    solution: Some(sol),
                },
                Err(reason) => RunRow { seed, algorithm, outcome: RunOutcome::Skipped { reason }, solution: None },
            })
        })
        .collect()
}

/// Runs every repetition (seed `base_seed + k`) and aggregates. Rows come
/// out ordered by (seed, algorithm) whatever the execution order.
pub fn run_scenario(s: &Scenario) -> Result<MetricsReport, HarnessError> {
    s.validate()?;
    let mut algorithms = s.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let per_rep: Vec<Vec<RunRow>> = (0..s.repetitions as u64)
        .into_par_iter()
        .map(|k| run_repetition(s, s.base_seed.wrapping_add(k), &algorithms))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<RunRow> = per_rep.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.seed, r.algorithm));
    let aggregates = aggregate(&rows, &algorithms);
    Ok(MetricsReport { rows, aggregates })
}

/// `%g`-style rendering with 6 significant digits.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_sig6(x: f64) -> f64 {
    format_sig6(x).parse().unwrap_or(x)
}

pub const CSV_HEADER: &str = "seed,algorithm,served,fitness,feasible,wall_ms";

impl MetricsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            match &r.outcome {
                RunOutcome::Completed { served, fitness, feasible, wall_ms } => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.seed,
                        r.algorithm.as_str(),
                        served,
                        format_sig6(*fitness),
                        feasible,
                        format_sig6(*wall_ms)
                    );
                }
                RunOutcome::Skipped { .. } => {
                    let _ = writeln!(out, "{},{},,,skipped,", r.seed, r.algorithm.as_str());
                }
            }
        }
        out
    }

    pub fn aggregates_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary {
            algorithm: Algorithm,
            runs: usize,
            skipped: usize,
            mean_served: f64,
            variance_served: f64,
            mean_fitness: f64,
            feasible_rate: f64,
            mean_wall_ms: f64,
        }
        #[derive(Serialize)]
        struct Out {
            summaries: Vec<Summary>,
            compared_runs: usize,
            optimality_rate: Option<f64>,
            served_match_rate: Option<f64>,
            slicing_revenue: Option<f64>,
        }
        let a = &self.aggregates;
        let out = Out {
            summaries: a
                .summaries
                .iter()
                .map(|s| Summary {
                    algorithm: s.algorithm,
                    runs: s.runs,
                    skipped: s.skipped,
                    mean_served: round_sig6(s.mean_served),
                    variance_served: round_sig6(s.variance_served),
                    mean_fitness: round_sig6(s.mean_fitness),
                    feasible_rate: round_sig6(s.feasible_rate),
                    mean_wall_ms: round_sig6(s.mean_wall_ms),
                })
                .collect(),
            compared_runs: a.compared_runs,
            optimality_rate: a.optimality_rate.map(round_sig6),
            served_match_rate: a.served_match_rate.map(round_sig6),
            slicing_revenue: a.slicing_revenue.map(round_sig6),
        };
        let mut text = serde_json::to_string_pretty(&out).expect("aggregates serialize");
        text.push('\n');
        text
    }
}

/// Writes the per-run CSV and/or the aggregate JSON.
pub fn emit_results(report: &MetricsReport, csv_path: Option<&Path>, json_path: Option<&Path>) -> Result<(), HarnessError> {
    if let Some(p) = csv_path {
        std::fs::write(p, report.to_csv())?;
    }
    if let Some(p) = json_path {
        std::fs::write(p, report.aggregates_json())?;
    }
    Ok(())
}
