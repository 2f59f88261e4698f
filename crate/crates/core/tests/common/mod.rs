//! Independent re-implementations used as oracles by the integration tests.
//! Nothing here calls into the library's conflict or fitness code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use testbed_slicing::conflict::InterfaceChannels;
use testbed_slicing::request::{ChannelMode, NodeKind};
use testbed_slicing::testbed::InterfaceType;
use testbed_slicing::{AdjacencyMatrix, ChannelDemand, GaConfig, Request, TestbedTopology};

/// Direct recount of (resource, channel) conflicts from the definitions.
pub fn recount_conflicts(active: &[(&Request, &[usize])], testbed: &TestbedTopology) -> (u64, u64) {
    let mut claimants: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (r, nodes) in active {
        for &node in nodes.iter() {
            let ifaces: Vec<usize> = match r.node_kind {
                NodeKind::Physical => (0..testbed.n_interface_types())
                    .filter(|&t| testbed.has_interface(node, t))
                    .collect(),
                NodeKind::Virtual => r.demands.iter().map(|d| d.interface_type).collect(),
            };
            for t in ifaces {
                *claimants.entry((node, t)).or_default() += 1;
            }
        }
    }
    let resource = claimants.values().map(|&c| c.saturating_sub(1)).sum();

    let mut channel = 0;
    for it in testbed.interface_types() {
        let mut fixed: BTreeMap<usize, u64> = BTreeMap::new();
        let mut flexible = 0u64;
        for (r, _) in active {
            for d in r.demands.iter().filter(|d| d.interface_type == it.id) {
                match &d.mode {
                    ChannelMode::Fixed { channels } => {
                        for &c in channels {
                            *fixed.entry(c).or_default() += 1;
                        }
                    }
                    ChannelMode::Flexible { count } => flexible += *count as u64,
                }
            }
        }
        channel += fixed.values().map(|&m| m - 1).sum::<u64>();
        let demand = fixed.len() as u64 + flexible;
        channel += demand.saturating_sub(it.max_channels as u64);
    }
    (resource, channel)
}

/// Sum of `w1 / P + w2 * TS` over the requests not in `served`.
pub fn rejection_oracle(requests: &[Request], served: &[bool], cfg: &GaConfig) -> f64 {
    requests
        .iter()
        .zip(served)
        .filter(|(_, &s)| !s)
        .map(|(r, _)| cfg.w1 / r.priority_rank as f64 + cfg.w2 * r.duration_slots as f64)
        .sum()
}

/// Checks that granted channels match demands, stay in budget, and never
/// repeat within an interface type across all served requests.
pub fn check_channel_grants(
    served: &[(&Request, &[InterfaceChannels])],
    testbed: &TestbedTopology,
) -> Result<(), String> {
    let mut used: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (r, grants) in served {
        if grants.len() != r.demands.len() {
            return Err(format!("request {} has {} grants for {} demands", r.id, grants.len(), r.demands.len()));
        }
        for (d, g) in r.demands.iter().zip(grants.iter()) {
            if d.interface_type != g.interface_type {
                return Err(format!("request {} grant order mismatch", r.id));
            }
            match &d.mode {
                ChannelMode::Fixed { channels } if channels != &g.channels => {
                    return Err(format!("request {} fixed channels not honoured", r.id));
                }
                ChannelMode::Flexible { count } if *count != g.channels.len() => {
                    return Err(format!("request {} got {} of {} channels", r.id, g.channels.len(), count));
                }
                _ => {}
            }
            let budget = testbed.interface_types()[g.interface_type].max_channels;
            for &c in &g.channels {
                if c >= budget {
                    return Err(format!("channel {c} outside budget {budget}"));
                }
                if !used.entry(g.interface_type).or_default().insert(c) {
                    return Err(format!("channel {c} on interface {} granted twice", g.interface_type));
                }
            }
        }
    }
    Ok(())
}

pub fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> AdjacencyMatrix {
    let mut g = AdjacencyMatrix::empty(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(p) {
                g.set_edge(a, b, true);
            }
        }
    }
    g
}

/// Random testbed with per-interface connectivity and interface inventory.
pub fn random_testbed<R: Rng>(n: usize, rng: &mut R) -> TestbedTopology {
    let n_types = rng.random_range(1..=3);
    let types: Vec<InterfaceType> = (0..n_types).map(|i| InterfaceType::new(i, rng.random_range(2..=13))).collect();
    let carriers: Vec<Vec<bool>> = (0..n).map(|_| (0..n_types).map(|_| rng.random_bool(0.85)).collect()).collect();
    let shared = rng.random_bool(0.5);
    let density = rng.random_range(0.0..=1.0);
    let base = random_graph(n, density, rng);
    let connectivity = (0..n_types)
        .map(|t| {
            let mut g = if shared { base.clone() } else { random_graph(n, density, rng) };
            for a in 0..n {
                for b in 0..n {
                    if a != b && !(carriers[a][t] && carriers[b][t]) {
                        g.set_edge(a, b, false);
                    }
                }
            }
            g
        })
        .collect();
    TestbedTopology::new(types, connectivity, carriers).expect("valid random testbed")
}

pub fn random_request<R: Rng>(id: u32, max_nodes: usize, testbed: &TestbedTopology, rng: &mut R) -> Request {
    let n = rng.random_range(1..=max_nodes);
    let density = rng.random_range(0.0..=1.0);
    let topology = random_graph(n, density, rng);
    let n_types = testbed.n_interface_types();
    let mut types: Vec<usize> = (0..n_types).filter(|_| rng.random_bool(0.6)).collect();
    if types.is_empty() {
        types.push(rng.random_range(0..n_types));
    }
    let demands = types
        .into_iter()
        .map(|t| {
            let max = testbed.interface_types()[t].max_channels;
            if rng.random_bool(0.3) {
                let mut chans: Vec<usize> = (0..max).filter(|_| rng.random_bool(0.2)).collect();
                if chans.is_empty() {
                    chans.push(rng.random_range(0..max));
                }
                ChannelDemand::fixed(t, chans)
            } else {
                ChannelDemand::flexible(t, rng.random_range(1..=max.div_ceil(2)))
            }
        })
        .collect();
    Request {
        id,
        n_nodes: n,
        topology,
        demands,
        node_kind: if rng.random_bool(0.5) { NodeKind::Virtual } else { NodeKind::Physical },
        duration_slots: rng.random_range(1..=12),
        priority_rank: rng.random_range(1..=5),
    }
}
