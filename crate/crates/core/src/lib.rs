//! Mapping of concurrent user requests onto a shared wireless testbed.
//!
//! The mapper works in two stages. First, every request topology is placed
//! onto the testbed by enumerating its induced-subgraph isomorphisms
//! ([`isomorphism`]). Second, a genetic algorithm ([`ga`]) picks which
//! requests to serve and with which placement, penalizing node, interface
//! and channel conflicts ([`conflict`]). An exhaustive search
//! ([`brute_force`]) provides the optimum for comparison, and [`harness`]
//! runs repeated seeded experiments and writes metrics.

pub mod brute_force;
pub mod conflict;
pub mod ga;
pub mod harness;
pub mod isomorphism;
pub mod matrix;
pub mod request;
pub mod rng;
pub mod testbed;

pub use brute_force::{brute_force_optimum, brute_force_search, BruteForceError, DEFAULT_SEARCH_CAP};
pub use conflict::{assign_channels, claims_of, count_conflicts, ConflictReport, ResourceClaim};
pub use ga::{
    evaluate_fitness, run_ga, run_mapper, Chromosome, FitnessBreakdown, GaConfig, Gene, MapperSolution,
    MappingProblem,
};
pub use harness::{emit_results, run_scenario, Algorithm, MetricsReport, Scenario};
pub use isomorphism::{brute_force_induced_mappings, enumerate_induced_mappings, PlacementMapping};
pub use matrix::AdjacencyMatrix;
pub use request::{generate_requests, validate_request, ChannelDemand, GeneratorParams, NodeKind, Request};
pub use testbed::{build_grid, build_random, load_topology, InterfaceType, TestbedTopology};
