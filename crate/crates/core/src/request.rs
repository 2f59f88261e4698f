//! Reservation requests and the randomized request generator.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::AdjacencyMatrix;
use crate::rng::{seeded_rng, Stream};
use crate::testbed::TestbedTopology;

pub type RequestId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Each assigned node is taken whole, with all of its interfaces.
    Physical,
    /// Each assigned node contributes only the demanded interfaces.
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ChannelMode {
    Fixed { channels: Vec<usize> },
    Flexible { count: usize },
}

/// Channels wanted on one interface type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDemand {
    pub interface_type: usize,
    #[serde(flatten)]
    pub mode: ChannelMode,
}

impl ChannelDemand {
    pub fn fixed(interface_type: usize, channels: Vec<usize>) -> Self {
        Self { interface_type, mode: ChannelMode::Fixed { channels } }
    }

    pub fn flexible(interface_type: usize, count: usize) -> Self {
        Self { interface_type, mode: ChannelMode::Flexible { count } }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub n_nodes: usize,
    pub topology: AdjacencyMatrix,
    pub demands: Vec<ChannelDemand>,
    pub node_kind: NodeKind,
    pub duration_slots: u32,
    /// 1 is the highest priority, 5 the lowest.
    pub priority_rank: u8,
}

impl Request {
    /// Demanded interface type ids in demand order.
    pub fn interface_types(&self) -> impl Iterator<Item = usize> + '_ {
        self.demands.iter().map(|d| d.interface_type)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("request {id}: must ask for at least one node")]
    NoNodes { id: RequestId },
    #[error("request {id}: n_nodes is {n_nodes} but topology is {matrix}x{matrix}")]
    NodeCountMismatch { id: RequestId, n_nodes: usize, matrix: usize },
    #[error("request {id}: no channel demands")]
    NoDemands { id: RequestId },
    #[error("request {id}: interface type {interface} demanded twice")]
    DuplicateInterface { id: RequestId, interface: usize },
    #[error("request {id}: interface type {interface} does not exist on the testbed")]
    UnknownInterface { id: RequestId, interface: usize },
    #[error("request {id}: fixed demand on interface {interface} lists no channels")]
    EmptyFixedChannels { id: RequestId, interface: usize },
    #[error("request {id}: channel {channel} listed twice on interface {interface}")]
    DuplicateFixedChannel { id: RequestId, interface: usize, channel: usize },
    #[error("request {id}: channel {channel} out of range for interface {interface} ({max_channels} channels)")]
    ChannelOutOfRange { id: RequestId, interface: usize, channel: usize, max_channels: usize },
    #[error("request {id}: flexible count {count} on interface {interface} must be in 1..={max_channels}")]
    FlexibleCount { id: RequestId, interface: usize, count: usize, max_channels: usize },
    #[error("request {id}: duration must be at least one slot")]
    ZeroDuration { id: RequestId },
    #[error("request {id}: priority rank {rank} outside 1..=5")]
    PriorityRank { id: RequestId, rank: u8 },
    #[error("request id {id} used more than once")]
    DuplicateId { id: RequestId },
}

#[derive(Debug, Error)]
pub enum RequestFileError {
    #[error("reading request file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing request file: {0}")]
    Parse(#[from] serde_json::Error),
}

pub fn validate_request(r: &Request, testbed: &TestbedTopology) -> Result<(), RequestError> {
    let id = r.id;
    if r.n_nodes == 0 {
        return Err(RequestError::NoNodes { id });
    }
    if r.topology.len() != r.n_nodes {
        return Err(RequestError::NodeCountMismatch { id, n_nodes: r.n_nodes, matrix: r.topology.len() });
    }
    if r.demands.is_empty() {
        return Err(RequestError::NoDemands { id });
    }
    let mut seen = BTreeSet::new();
    for d in &r.demands {
        let interface = d.interface_type;
        if !seen.insert(interface) {
            return Err(RequestError::DuplicateInterface { id, interface });
        }
        let max_channels = testbed
            .interface_type(interface)
            .ok_or(RequestError::UnknownInterface { id, interface })?
            .max_channels;
        match &d.mode {
            ChannelMode::Fixed { channels } => {
                if channels.is_empty() {
                    return Err(RequestError::EmptyFixedChannels { id, interface });
                }
                let mut distinct = BTreeSet::new();
                for &channel in channels {
                    if channel >= max_channels {
                        return Err(RequestError::ChannelOutOfRange { id, interface, channel, max_channels });
                    }
                    if !distinct.insert(channel) {
                        return Err(RequestError::DuplicateFixedChannel { id, interface, channel });
                    }
                }
            }
            &ChannelMode::Flexible { count } => {
                if count == 0 || count > max_channels {
                    return Err(RequestError::FlexibleCount { id, interface, count, max_channels });
                }
            }
        }
    }
    if r.duration_slots == 0 {
        return Err(RequestError::ZeroDuration { id });
    }
    if !(1..=5).contains(&r.priority_rank) {
        return Err(RequestError::PriorityRank { id, rank: r.priority_rank });
    }
    Ok(())
}

/// Validates each request and rejects duplicate ids.
pub fn validate_batch(requests: &[Request], testbed: &TestbedTopology) -> Result<(), RequestError> {
    let mut ids = BTreeSet::new();
    for r in requests {
        validate_request(r, testbed)?;
        if !ids.insert(r.id) {
            return Err(RequestError::DuplicateId { id: r.id });
        }
    }
    Ok(())
}

/// Distribution parameters for [`generate_requests`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub topology_edge_prob: f64,
    pub min_interfaces: usize,
    pub max_interfaces: usize,
    /// Mean flexible channel count as a fraction of the type's budget.
    pub channel_mean_fraction: f64,
    /// Standard deviation of the flexible count as a fraction of the budget.
    pub channel_sd_fraction: f64,
    /// Upper clamp on the flexible count as a fraction of the budget (floored).
    pub channel_cap_fraction: f64,
    pub duration_mean: f64,
    pub duration_sd: f64,
    pub node_kind: NodeKind,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            min_nodes: 3,
            max_nodes: 5,
            topology_edge_prob: 0.5,
            min_interfaces: 1,
            max_interfaces: 3,
            channel_mean_fraction: 0.25,
            channel_sd_fraction: 1.0 / 6.0,
            channel_cap_fraction: 0.5,
            duration_mean: 2.0,
            duration_sd: 5.0,
            node_kind: NodeKind::Physical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("request count must be positive")]
    ZeroCount,
    #[error("invalid generator parameters: {0}")]
    Params(String),
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |msg: &str| Err(GeneratorError::Params(msg.to_string()));
        if self.min_nodes == 0 || self.min_nodes > self.max_nodes {
            return bad("need 1 <= min_nodes <= max_nodes");
        }
        if self.min_interfaces == 0 || self.min_interfaces > self.max_interfaces {
            return bad("need 1 <= min_interfaces <= max_interfaces");
        }
        if !(0.0..=1.0).contains(&self.topology_edge_prob) {
            return bad("topology_edge_prob must lie in [0, 1]");
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.channel_mean_fraction)
            || !finite_nonneg(self.channel_sd_fraction)
            || !finite_nonneg(self.channel_cap_fraction)
            || !self.duration_mean.is_finite()
            || !finite_nonneg(self.duration_sd)
        {
            return bad("distribution parameters must be finite and non-negative");
        }
        Ok(())
    }

    /// Inclusive clamp range for a flexible count on a type with `max_channels`.
    pub fn flexible_bounds(&self, max_channels: usize) -> (usize, usize) {
        let cap = (self.channel_cap_fraction * max_channels as f64).floor() as usize;
        (1, cap.clamp(1, max_channels))
    }

    pub fn sample_flexible_count<R: Rng + ?Sized>(&self, max_channels: usize, rng: &mut R) -> usize {
        let m = max_channels as f64;
        let (lo, hi) = self.flexible_bounds(max_channels);
        let draw = Normal::new(self.channel_mean_fraction * m, self.channel_sd_fraction * m)
            .expect("validated sd")
            .sample(rng)
            .round();
        clamp_round(draw, lo, hi)
    }

    pub fn sample_duration<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let draw = Normal::new(self.duration_mean, self.duration_sd)
            .expect("validated sd")
            .sample(rng)
            .round();
        clamp_round(draw, 1, u32::MAX as usize) as u32
    }
}

fn clamp_round(x: f64, lo: usize, hi: usize) -> usize {
    if x <= lo as f64 {
        lo
    } else if x >= hi as f64 {
        hi
    } else {
        x as usize
    }
}

/// Draws `count` requests with ids `0..count`.
///
/// Per request the draw order is: node count, topology edges in (a, b)
/// pair order, number of interface types, the types themselves, one
/// flexible count per type (ascending type id), priority, duration.
pub fn generate_requests(
    count: usize,
    testbed: &TestbedTopology,
    seed: u64,
    params: &GeneratorParams,
) -> Result<Vec<Request>, GeneratorError> {
    if count == 0 {
        return Err(GeneratorError::ZeroCount);
    }
    params.validate()?;
    let available = testbed.n_interface_types();
    let mut rng = seeded_rng(seed, Stream::Requests);
    let mut out = Vec::with_capacity(count);
    for id in 0..count {
        let n_nodes = rng.random_range(params.min_nodes..=params.max_nodes);
        let mut topology = AdjacencyMatrix::empty(n_nodes);
        for a in 0..n_nodes {
            for b in (a + 1)..n_nodes {
                if rng.random::<f64>() < params.topology_edge_prob {
                    topology.set_edge(a, b, true);
                }
            }
        }
        let n_types = rng
            .random_range(params.min_interfaces..=params.max_interfaces)
            .min(available);
        let mut types: Vec<usize> = sample(&mut rng, available, n_types).into_vec();
        types.sort_unstable();
        let demands = types
            .into_iter()
            .map(|t| {
                let max = testbed.interface_types()[t].max_channels;
                ChannelDemand::flexible(t, params.sample_flexible_count(max, &mut rng))
            })
            .collect();
        let priority_rank = rng.random_range(1..=5u8);
        let duration_slots = params.sample_duration(&mut rng);
        out.push(Request {
            id: id as RequestId,
            n_nodes,
            topology,
            demands,
            node_kind: params.node_kind,
            duration_slots,
            priority_rank,
        });
    }
    Ok(out)
}

pub fn requests_to_json(requests: &[Request]) -> String {
    serde_json::to_string_pretty(requests).expect("requests serialize")
}

pub fn requests_from_json(text: &str) -> Result<Vec<Request>, RequestFileError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_requests(path: impl AsRef<Path>) -> Result<Vec<Request>, RequestFileError> {
    requests_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbed::{build_grid, default_interface_types};

    fn grid3() -> TestbedTopology {
        build_grid(3, 3, default_interface_types()).unwrap()
    }

    fn base_request() -> Request {
        Request {
            id: 0,
            n_nodes: 2,
            topology: AdjacencyMatrix::complete(2),
            demands: vec![ChannelDemand::flexible(0, 3)],
            node_kind: NodeKind::Virtual,
            duration_slots: 2,
            priority_rank: 1,
        }
    }

    #[test]
    fn generated_batch_shape() {
        let reqs = generate_requests(5, &grid3(), 11, &GeneratorParams::default()).unwrap();
        assert_eq!(reqs.len(), 5);
        for r in &reqs {
            assert!((3..=5).contains(&r.n_nodes));
            validate_request(r, &grid3()).unwrap();
        }
        validate_batch(&reqs, &grid3()).unwrap();
    }

    #[test]
    fn generator_is_deterministic() {
        let p = GeneratorParams::default();
        assert_eq!(
            generate_requests(20, &grid3(), 5, &p).unwrap(),
            generate_requests(20, &grid3(), 5, &p).unwrap()
        );
        assert_ne!(
            generate_requests(20, &grid3(), 5, &p).unwrap(),
            generate_requests(20, &grid3(), 6, &p).unwrap()
        );
    }

    #[test]
    fn zero_count_rejected() {
        assert_eq!(generate_requests(0, &grid3(), 1, &GeneratorParams::default()), Err(GeneratorError::ZeroCount));
    }

    #[test]
    fn flexible_counts_respect_half_budget() {
        let p = GeneratorParams::default();
        let mut rng = seeded_rng(9, Stream::Requests);
        for max in [13usize, 40] {
            for _ in 0..10_000 {
                let c = p.sample_flexible_count(max, &mut rng);
                assert!(c >= 1 && c <= max / 2, "{c} for budget {max}");
            }
        }
    }

    #[test]
    fn unknown_interface_rejected() {
        let mut r = base_request();
        r.demands = vec![ChannelDemand::flexible(5, 1)];
        assert_eq!(validate_request(&r, &grid3()), Err(RequestError::UnknownInterface { id: 0, interface: 5 }));
    }

    #[test]
    fn fixed_channel_bound_is_exclusive() {
        let mut r = base_request();
        r.demands = vec![ChannelDemand::fixed(0, vec![13])];
        assert!(matches!(validate_request(&r, &grid3()), Err(RequestError::ChannelOutOfRange { channel: 13, .. })));
        r.demands = vec![ChannelDemand::fixed(0, vec![12])];
        validate_request(&r, &grid3()).unwrap();
    }

    #[test]
    fn each_violation_reported() {
        let tb = grid3();
        let check = |f: &dyn Fn(&mut Request), want: fn(&RequestError) -> bool| {
            let mut r = base_request();
            f(&mut r);
            let err = validate_request(&r, &tb).unwrap_err();
            assert!(want(&err), "unexpected {err:?}");
        };
        check(&|r| r.demands.clear(), |e| matches!(e, RequestError::NoDemands { .. }));
        check(
            &|r| r.demands = vec![ChannelDemand::flexible(0, 1), ChannelDemand::flexible(0, 2)],
            |e| matches!(e, RequestError::DuplicateInterface { .. }),
        );
        check(&|r| r.demands = vec![ChannelDemand::fixed(1, vec![])], |e| matches!(e, RequestError::EmptyFixedChannels { .. }));
        check(&|r| r.demands = vec![ChannelDemand::fixed(1, vec![2, 2])], |e| matches!(e, RequestError::DuplicateFixedChannel { .. }));
        check(&|r| r.demands = vec![ChannelDemand::flexible(2, 0)], |e| matches!(e, RequestError::FlexibleCount { .. }));
        check(&|r| r.demands = vec![ChannelDemand::flexible(2, 41)], |e| matches!(e, RequestError::FlexibleCount { .. }));
        check(&|r| r.duration_slots = 0, |e| matches!(e, RequestError::ZeroDuration { .. }));
        check(&|r| r.priority_rank = 0, |e| matches!(e, RequestError::PriorityRank { .. }));
        check(&|r| r.priority_rank = 6, |e| matches!(e, RequestError::PriorityRank { .. }));
        check(&|r| r.n_nodes = 3, |e| matches!(e, RequestError::NodeCountMismatch { .. }));
        check(
            &|r| {
                r.n_nodes = 0;
                r.topology = AdjacencyMatrix::empty(0);
            },
            |e| matches!(e, RequestError::NoNodes { .. }),
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let reqs = vec![base_request(), base_request()];
        assert_eq!(validate_batch(&reqs, &grid3()), Err(RequestError::DuplicateId { id: 0 }));
    }

    #[test]
    fn json_shape() {
        let mut r = base_request();
        r.demands.push(ChannelDemand::fixed(1, vec![6]));
        let text = requests_to_json(std::slice::from_ref(&r));
        assert!(text.contains("\"mode\": \"fixed\""));
        assert!(text.contains("\"node_kind\": \"virtual\""));
        assert_eq!(requests_from_json(&text).unwrap(), vec![r]);
    }

    #[test]
    fn interface_count_clamped_to_available() {
        let one_type = build_grid(3, 3, vec![crate::testbed::InterfaceType::new(0, 13)]).unwrap();
        let reqs = generate_requests(50, &one_type, 3, &GeneratorParams::default()).unwrap();
        assert!(reqs.iter().all(|r| r.demands.len() == 1 && r.demands[0].interface_type == 0));
    }
}
