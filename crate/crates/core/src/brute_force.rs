//! Exhaustive reference search over every serve/placement combination.
//!
//! Every gene ranges over `{off, mapping 0, .., mapping m-1}` and each
//! combination is scored with the same fitness as the GA. The winner is the
//! minimum under (total fitness, conflicts, most served, smallest gene
//! vector), so the result is unique and independent of how the enumeration
//! is split across workers.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::ga::{Chromosome, ConfigError, FitnessBreakdown, GaConfig, Gene, MapperSolution, MappingProblem};
use crate::request::Request;
use crate::testbed::TestbedTopology;

pub const DEFAULT_SEARCH_CAP: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("search space of {product} combinations exceeds the cap of {cap}")]
    SearchSpaceTooLarge { product: u128, cap: u128 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Product of `(candidates + 1)` over all requests.
pub fn search_space_size(problem: &MappingProblem<'_>) -> u128 {
    problem
        .candidates()
        .iter()
        .map(|c| c.len() as u128 + 1)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .unwrap_or(u128::MAX)
}

/// Gene value 0 is "off", value k > 0 is "serve with mapping k - 1".
fn gene_of(value: usize) -> Gene {
    match value {
        0 => Gene { serve: false, mapping_index: None },
        k => Gene { serve: true, mapping_index: Some(k - 1) },
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    fitness: FitnessBreakdown,
    served: usize,
    values: Vec<usize>,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    a.fitness
        .total
        .total_cmp(&b.fitness.total)
        .then(a.fitness.conflicts().cmp(&b.fitness.conflicts()))
        .then(b.served.cmp(&a.served))
        .then(a.values.cmp(&b.values))
}

/// Off genes keep mapping 0 when one exists so the chromosome stays
/// consistent with the GA's representation.
fn chromosome_of(values: &[usize], counts: &[usize]) -> Chromosome {
    Chromosome {
        genes: values
            .iter()
            .zip(counts)
            .map(|(&v, &m)| match (v, m) {
                (_, 0) => Gene::UNPLACEABLE,
                (0, _) => Gene { serve: false, mapping_index: Some(0) },
                (v, _) => gene_of(v),
            })
            .collect(),
    }
}

/// Scans every gene vector whose first gene is `lead`, in lexicographic order.
fn scan_partition(problem: &MappingProblem<'_>, cfg: &GaConfig, counts: &[usize], lead: usize) -> Option<Candidate> {
    let n = counts.len();
    let mut eval = problem.evaluator(cfg);
    let mut values = vec![0usize; n];
    values[0] = lead;
    let mut c = chromosome_of(&values, counts);
    let mut best: Option<Candidate> = None;
    loop {
        let fitness = eval.evaluate(&c);
        let cand = Candidate { fitness, served: c.served_count(), values: values.clone() };
        if best.as_ref().is_none_or(|b| rank(&cand, b) == Ordering::Less) {
            best = Some(cand);
        }
        // odometer over genes 1..n, last gene fastest
        let mut pos = n;
        loop {
            if pos == 1 {
                return best;
            }
            pos -= 1;
            if values[pos] < counts[pos] {
                values[pos] += 1;
                c.genes[pos] = gene_of(values[pos]);
                break;
            }
            values[pos] = 0;
            c.genes[pos] = chromosome_of(&[0], &counts[pos..=pos]).genes[0];
        }
    }
}

/// Optimal selection over a prepared problem.
pub fn brute_force_search(problem: &MappingProblem<'_>, cfg: &GaConfig, cap: u128) -> Result<MapperSolution, BruteForceError> {
    cfg.validate(problem.requests())?;
    let product = search_space_size(problem);
    if product > cap {
        return Err(BruteForceError::SearchSpaceTooLarge { product, cap });
    }
    let counts = problem.candidate_counts();
    if counts.is_empty() {
        let c = Chromosome { genes: Vec::new() };
        let fitness = problem.evaluator(cfg).evaluate(&c);
        return Ok(MapperSolution::from_chromosome(problem, c, fitness, 0, false));
    }
    let best = (0..=counts[0])
        .into_par_iter()
        .filter_map(|lead| scan_partition(problem, cfg, &counts, lead))
        .min_by(rank)
        .expect("at least one partition");
    let c = chromosome_of(&best.values, &counts);
    Ok(MapperSolution::from_chromosome(problem, c, best.fitness, 0, false))
}

/// Enumerates placements (capped at `mapping_limit`) and searches exhaustively.
pub fn brute_force_optimum(
    requests: &[Request],
    testbed: &TestbedTopology,
    mapping_limit: Option<usize>,
    cfg: &GaConfig,
    cap: u128,
) -> Result<MapperSolution, BruteForceError> {
    let problem = MappingProblem::new(requests, testbed, mapping_limit);
    brute_force_search(&problem, cfg, cap)
}
