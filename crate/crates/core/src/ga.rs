//! Genetic selection of the requests to serve.
//!
//! Each gene pairs a serve bit with an index into the request's candidate
//! placements. Fitness is minimized:
//!
//! ```text
//! total = large_number * (resource_conflicts + channel_conflicts)
//!       + sum over unserved requests of (w1 / priority_rank + w2 * duration_slots)
//! ```
//!
//! so any conflict-free selection beats any conflicting one, and among
//! conflict-free selections, serving more (and higher-priority, longer)
//! requests is preferred.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conflict::{assign_channels, ChannelFootprint, ConflictCounter, ConflictReport, InterfaceChannels};
use crate::isomorphism::{enumerate_induced_mappings, PlacementMapping};
use crate::request::{Request, RequestId};
use crate::rng::{seeded_rng, Stream};
use crate::testbed::TestbedTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gene {
    pub serve: bool,
    /// `None` only for requests without candidate placements.
    pub mapping_index: Option<usize>,
}

impl Gene {
    pub const UNPLACEABLE: Gene = Gene { serve: false, mapping_index: None };
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<Gene>,
}

impl Chromosome {
    pub fn served_count(&self) -> usize {
        self.genes.iter().filter(|g| g.serve).count()
    }

    /// Checks gene count and that serve bits only point at real candidates.
    pub fn is_consistent(&self, candidate_counts: &[usize]) -> bool {
        self.genes.len() == candidate_counts.len()
            && self.genes.iter().zip(candidate_counts).all(|(g, &m)| match g.mapping_index {
                None => m == 0 && !g.serve,
                Some(i) => i < m,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub stall_rel_tolerance: f64,
    pub w1: f64,
    pub w2: f64,
    pub large_number: f64,
    pub elitism_count: usize,
    /// Skip per-chromosome channel counting when serving every request at
    /// once is already channel-conflict free.
    pub channel_precheck: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 60,
            crossover_prob: 0.8,
            mutation_prob: 0.2,
            max_generations: 500,
            stall_generations: 50,
            stall_rel_tolerance: 1e-6,
            w1: 1.0,
            w2: 1.0,
            large_number: 1e6,
            elitism_count: 1,
            channel_precheck: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("population_size must be positive")]
    Population,
    #[error("{name} = {value} must lie in [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("max_generations and stall_generations must be positive")]
    Generations,
    #[error("weights must be finite and non-negative (w1 = {w1}, w2 = {w2})")]
    Weights { w1: f64, w2: f64 },
    #[error("elitism_count {elitism} exceeds population_size {population}")]
    Elitism { elitism: usize, population: usize },
    #[error("stall_rel_tolerance must be finite and non-negative")]
    StallTolerance,
    #[error("large_number {large_number} must exceed the largest possible rejection cost {bound}")]
    LargeNumber { large_number: f64, bound: f64 },
}

impl GaConfig {
    /// Checks the configuration, including that one conflict outweighs
    /// rejecting every request in `requests`.
    pub fn validate(&self, requests: &[Request]) -> Result<(), ConfigError> {
        if self.population_size == 0 {
            return Err(ConfigError::Population);
        }
        for (name, value) in [("crossover_prob", self.crossover_prob), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Probability { name, value });
            }
        }
        if self.max_generations == 0 || self.stall_generations == 0 {
            return Err(ConfigError::Generations);
        }
        if !(self.w1.is_finite() && self.w2.is_finite() && self.w1 >= 0.0 && self.w2 >= 0.0) {
            return Err(ConfigError::Weights { w1: self.w1, w2: self.w2 });
        }
        if self.elitism_count > self.population_size {
            return Err(ConfigError::Elitism { elitism: self.elitism_count, population: self.population_size });
        }
        if !(self.stall_rel_tolerance.is_finite() && self.stall_rel_tolerance >= 0.0) {
            return Err(ConfigError::StallTolerance);
        }
        let max_ts = requests.iter().map(|r| r.duration_slots).max().unwrap_or(0) as f64;
        let bound = requests.len() as f64 * (self.w1 + self.w2 * max_ts);
        if !(self.large_number > bound) {
            return Err(ConfigError::LargeNumber { large_number: self.large_number, bound });
        }
        Ok(())
    }

    pub fn rejection_cost(&self, r: &Request) -> f64 {
        self.w1 / f64::from(r.priority_rank) + self.w2 * f64::from(r.duration_slots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub rejection_cost: f64,
    pub resource_conflicts: u64,
    pub channel_conflicts: u64,
    pub total: f64,
}

impl FitnessBreakdown {
    pub fn new(report: ConflictReport, rejection_cost: f64, large_number: f64) -> Self {
        Self {
            rejection_cost,
            resource_conflicts: report.resource_conflicts,
            channel_conflicts: report.channel_conflicts,
            total: large_number * report.total() as f64 + rejection_cost,
        }
    }

    pub fn conflicts(&self) -> u64 {
        self.resource_conflicts + self.channel_conflicts
    }
}

/// Requests, their candidate placements and everything precomputed for
/// fast fitness evaluation. Shared read-only by the GA and the exhaustive
/// search.
#[derive(Debug, Clone)]
pub struct MappingProblem<'a> {
    requests: &'a [Request],
    testbed: &'a TestbedTopology,
    candidates: Vec<Vec<PlacementMapping>>,
    units: Vec<Vec<Vec<u32>>>,
    footprints: Vec<ChannelFootprint>,
    counter: ConflictCounter,
    channels_clear: bool,
}

impl<'a> MappingProblem<'a> {
    /// Runs placement enumeration for every request.
    pub fn new(requests: &'a [Request], testbed: &'a TestbedTopology, mapping_limit: Option<usize>) -> Self {
        let candidates = requests
            .iter()
            .map(|r| enumerate_induced_mappings(r, testbed, mapping_limit))
            .collect();
        Self::with_candidates(requests, testbed, candidates)
    }

    pub fn with_candidates(
        requests: &'a [Request],
        testbed: &'a TestbedTopology,
        candidates: Vec<Vec<PlacementMapping>>,
    ) -> Self {
        assert_eq!(requests.len(), candidates.len(), "one candidate list per request");
        let counter = ConflictCounter::new(testbed);
        let units = requests
            .iter()
            .zip(&candidates)
            .map(|(r, ms)| ms.iter().map(|m| counter.units(testbed, r, m)).collect())
            .collect();
        let footprints: Vec<ChannelFootprint> = requests.iter().map(ChannelFootprint::of).collect();
        let all: Vec<&Request> = requests.iter().collect();
        let channels_clear = crate::conflict::count_channel_conflicts(&all, testbed) == 0;
        Self { requests, testbed, candidates, units, footprints, counter, channels_clear }
    }

    pub fn requests(&self) -> &'a [Request] {
        self.requests
    }

    pub fn testbed(&self) -> &'a TestbedTopology {
        self.testbed
    }

    pub fn candidates(&self) -> &[Vec<PlacementMapping>] {
        &self.candidates
    }

    pub fn candidate_counts(&self) -> Vec<usize> {
        self.candidates.iter().map(Vec::len).collect()
    }

    /// Whether serving every request at once has no channel conflicts.
    pub fn channels_clear(&self) -> bool {
        self.channels_clear
    }

    pub fn evaluator(&self, cfg: &GaConfig) -> Evaluator<'_, 'a> {
        Evaluator {
            problem: self,
            counter: self.counter.clone(),
            count_channels: !(cfg.channel_precheck && self.channels_clear),
            rejection: self.requests.iter().map(|r| cfg.rejection_cost(r)).collect(),
            large_number: cfg.large_number,
        }
    }
}

/// Fitness evaluator with its own scratch space.
pub struct Evaluator<'p, 'a> {
    problem: &'p MappingProblem<'a>,
    counter: ConflictCounter,
    count_channels: bool,
    rejection: Vec<f64>,
    large_number: f64,
}

impl Evaluator<'_, '_> {
    pub fn conflicts(&mut self, c: &Chromosome) -> ConflictReport {
        let p = self.problem;
        let active = c.genes.iter().enumerate().filter(|(_, g)| g.serve).map(|(i, g)| {
            let m = g.mapping_index.expect("served gene has a mapping");
            (p.units[i][m].as_slice(), &p.footprints[i])
        });
        self.counter.count(active, self.count_channels)
    }

    pub fn rejection_cost(&self, c: &Chromosome) -> f64 {
        c.genes
            .iter()
            .zip(&self.rejection)
            .filter(|(g, _)| !g.serve)
            .map(|(_, cost)| cost)
            .sum()
    }

    pub fn evaluate(&mut self, c: &Chromosome) -> FitnessBreakdown {
        let report = self.conflicts(c);
        FitnessBreakdown::new(report, self.rejection_cost(c), self.large_number)
    }

    pub fn request_rejection_cost(&self, index: usize) -> f64 {
        self.rejection[index]
    }
}

/// One-shot fitness of `c`. Builds a throwaway [`MappingProblem`]; use
/// [`MappingProblem::evaluator`] in loops.
pub fn evaluate_fitness(
    c: &Chromosome,
    requests: &[Request],
    candidates: &[Vec<PlacementMapping>],
    testbed: &TestbedTopology,
    cfg: &GaConfig,
) -> FitnessBreakdown {
    let problem = MappingProblem::with_candidates(requests, testbed, candidates.to_vec());
    problem.evaluator(cfg).evaluate(c)
}

fn random_gene<R: Rng + ?Sized>(candidates: usize, rng: &mut R) -> Gene {
    let serve = rng.random_bool(0.5);
    if candidates == 0 {
        return Gene::UNPLACEABLE;
    }
    Gene { serve, mapping_index: Some(rng.random_range(0..candidates)) }
}

/// Random population. Per gene the serve bit is drawn first, then the
/// mapping index (skipped for unplaceable requests, which stay unserved).
pub fn initialize_population<R: Rng + ?Sized>(
    candidate_counts: &[usize],
    cfg: &GaConfig,
    rng: &mut R,
) -> Vec<Chromosome> {
    (0..cfg.population_size)
        .map(|_| Chromosome { genes: candidate_counts.iter().map(|&m| random_gene(m, rng)).collect() })
        .collect()
}

/// Swaps gene tails from `cut` onward.
pub fn single_point_crossover(a: &mut Chromosome, b: &mut Chromosome, cut: usize) {
    let n = a.genes.len();
    a.genes[cut..n].swap_with_slice(&mut b.genes[cut..n]);
}

/// Picks one gene; with probability 0.5 toggles its serve bit, otherwise
/// redraws its mapping index uniformly among the request's candidates.
pub fn mutate<R: Rng + ?Sized>(c: &mut Chromosome, candidate_counts: &[usize], rng: &mut R) {
    if c.genes.is_empty() {
        return;
    }
    let i = rng.random_range(0..c.genes.len());
    let toggle = rng.random_bool(0.5);
    let m = candidate_counts[i];
    if m == 0 {
        return;
    }
    let g = &mut c.genes[i];
    if toggle {
        g.serve = !g.serve;
    } else {
        g.mapping_index = Some(rng.random_range(0..m));
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[b] < fitness[a] {
        b
    } else {
        a
    }
}

/// Indices sorted by ascending fitness, ties by index.
fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    idx
}

/// One generation: elitism, then size-2 tournament parents, single-point
/// crossover with probability `crossover_prob` and per-offspring mutation
/// with probability `mutation_prob`.
pub fn ga_step<R: Rng + ?Sized>(
    population: &[Chromosome],
    fitness: &[f64],
    candidate_counts: &[usize],
    cfg: &GaConfig,
    rng: &mut R,
) -> Vec<Chromosome> {
    assert!(!population.is_empty(), "population must not be empty");
    assert_eq!(population.len(), fitness.len());
    let size = population.len();
    let n = candidate_counts.len();
    let mut next: Vec<Chromosome> = ranking(fitness)
        .into_iter()
        .take(cfg.elitism_count.min(size))
        .map(|i| population[i].clone())
        .collect();
    while next.len() < size {
        let mut a = population[tournament(fitness, rng)].clone();
        let mut b = population[tournament(fitness, rng)].clone();
        if rng.random_bool(cfg.crossover_prob) && n >= 2 {
            let cut = rng.random_range(1..n);
            single_point_crossover(&mut a, &mut b, cut);
        }
        for child in [&mut a, &mut b] {
            if rng.random_bool(cfg.mutation_prob) {
                mutate(child, candidate_counts, rng);
            }
        }
        next.push(a);
        if next.len() < size {
            next.push(b);
        }
    }
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServedRequest {
    pub request_id: RequestId,
    pub assignment: Vec<usize>,
    pub channels: Vec<InterfaceChannels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperSolution {
    pub served: Vec<ServedRequest>,
    pub fitness: FitnessBreakdown,
    pub generations_run: usize,
    pub feasible: bool,
    /// The best chromosome had conflicts and serve bits were dropped.
    pub repaired: bool,
    pub chromosome: Chromosome,
    /// Best-ever total fitness after initialization and after each generation.
    #[serde(skip)]
    pub best_history: Vec<f64>,
}

impl MapperSolution {
    pub fn served_count(&self) -> usize {
        self.served.len()
    }

    /// Solution for `c`, with concrete channels when it is conflict-free.
    pub fn from_chromosome(
        problem: &MappingProblem<'_>,
        c: Chromosome,
        fitness: FitnessBreakdown,
        generations_run: usize,
        repaired: bool,
    ) -> Self {
        let chosen: Vec<(usize, usize)> = c
            .genes
            .iter()
            .enumerate()
            .filter(|(_, g)| g.serve)
            .map(|(i, g)| (i, g.mapping_index.expect("served gene has a mapping")))
            .collect();
        let served_requests: Vec<&Request> = chosen.iter().map(|&(i, _)| &problem.requests[i]).collect();
        let grants = if fitness.conflicts() == 0 {
            assign_channels(&served_requests, problem.testbed)
        } else {
            None
        };
        let feasible = grants.is_some();
        let served = chosen
            .iter()
            .enumerate()
            .map(|(k, &(i, m))| ServedRequest {
                request_id: problem.requests[i].id,
                assignment: problem.candidates[i][m].assignment.clone(),
                channels: grants.as_ref().map(|g| g[k].interfaces.clone()).unwrap_or_default(),
            })
            .collect();
        Self { served, fitness, generations_run, feasible, repaired, chromosome: c, best_history: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// Drops served requests until no conflicts remain: each round removes the
/// request whose removal leaves the fewest conflicts, breaking ties by lower
/// rejection cost, then lower request id.
pub fn repair(evaluator: &mut Evaluator<'_, '_>, mut c: Chromosome) -> Chromosome {
    loop {
        if evaluator.conflicts(&c).is_clear() {
            return c;
        }
        let requests = evaluator.problem.requests;
        let mut best: Option<(u64, f64, RequestId, usize)> = None;
        for i in 0..c.genes.len() {
            if !c.genes[i].serve {
                continue;
            }
            c.genes[i].serve = false;
            let left = evaluator.conflicts(&c).total();
            c.genes[i].serve = true;
            let key = (left, evaluator.request_rejection_cost(i), requests[i].id, i);
            let better = match &best {
                None => true,
                Some(b) => (key.0, key.1, key.2) < (b.0, b.1, b.2),
            };
            if better {
                best = Some(key);
            }
        }
        let (_, _, _, drop) = best.expect("conflicts imply at least one served request");
        c.genes[drop].serve = false;
    }
}

#[derive(Debug, Error)]
pub enum MapperError {
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Runs the GA on a prepared problem.
pub fn run_ga(problem: &MappingProblem<'_>, cfg: &GaConfig) -> Result<MapperSolution, MapperError> {
    cfg.validate(problem.requests)?;
    let counts = problem.candidate_counts();
    let mut rng: ChaCha8Rng = seeded_rng(cfg.seed, Stream::Genetic);
    let mut eval = problem.evaluator(cfg);

    let mut population = initialize_population(&counts, cfg, &mut rng);
    let mut fitness: Vec<f64> = population.iter().map(|c| eval.evaluate(c).total).collect();
    let first = ranking(&fitness)[0];
    let mut best = population[first].clone();
    let mut best_fitness = fitness[first];
    let mut generations = 0;
    let mut stalled = 0;
    let mut history = vec![best_fitness];

    while generations < cfg.max_generations && best_fitness > 0.0 {
        population = ga_step(&population, &fitness, &counts, cfg, &mut rng);
        fitness = population.iter().map(|c| eval.evaluate(c).total).collect();
        generations += 1;
        let top = ranking(&fitness)[0];
        let mut improvement = 0.0;
        if fitness[top] < best_fitness {
            improvement = (best_fitness - fitness[top]) / best_fitness.abs().max(f64::MIN_POSITIVE);
            best_fitness = fitness[top];
            best = population[top].clone();
        }
        history.push(best_fitness);
        if improvement < cfg.stall_rel_tolerance {
            stalled += 1;
            if stalled >= cfg.stall_generations {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let repaired = !eval.conflicts(&best).is_clear();
    if repaired {
        best = repair(&mut eval, best);
    }
    let breakdown = eval.evaluate(&best);
    let mut solution = MapperSolution::from_chromosome(problem, best, breakdown, generations, repaired);
    solution.best_history = history;
    Ok(solution)
}

/// Enumerates placements (capped at `mapping_limit`) and runs the GA.
pub fn run_mapper(
    requests: &[Request],
    testbed: &TestbedTopology,
    mapping_limit: Option<usize>,
    cfg: &GaConfig,
) -> Result<MapperSolution, MapperError> {
    let problem = MappingProblem::new(requests, testbed, mapping_limit);
    run_ga(&problem, cfg)
}
