//! Resource and channel conflict accounting for a set of served placements.
//!
//! Resources are counted per (node, interface) unit. A physical request
//! claims every unit of each node it occupies; a virtual request claims only
//! the units of its demanded interfaces. Each unit contributes
//! `claimants - 1` conflicts when contended.
//!
//! Channels are a single pool of `max_channels` orthogonal channels per
//! interface type, shared by all served requests. Each type contributes
//! fixed-channel collisions (`multiplicity - 1` per channel) plus any excess
//! of total demand (distinct fixed channels + flexible counts) over the
//! budget.

use serde::{Deserialize, Serialize};

use crate::isomorphism::PlacementMapping;
use crate::request::{ChannelMode, NodeKind, Request, RequestId};
use crate::testbed::TestbedTopology;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClaimedInterfaces {
    WholeNode,
    Interfaces(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceClaim {
    pub request_id: RequestId,
    pub node: usize,
    pub claimed: ClaimedInterfaces,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConflictReport {
    pub resource_conflicts: u64,
    pub channel_conflicts: u64,
}

impl ConflictReport {
    pub fn total(&self) -> u64 {
        self.resource_conflicts + self.channel_conflicts
    }

    pub fn is_clear(&self) -> bool {
        self.total() == 0
    }
}

/// One claim per assigned node, in request-node order.
pub fn claims_of(r: &Request, m: &PlacementMapping) -> Vec<ResourceClaim> {
    m.assignment
        .iter()
        .map(|&node| ResourceClaim {
            request_id: r.id,
            node,
            claimed: match r.node_kind {
                NodeKind::Physical => ClaimedInterfaces::WholeNode,
                NodeKind::Virtual => ClaimedInterfaces::Interfaces(r.interface_types().collect()),
            },
        })
        .collect()
}

/// Per-type channel footprint of a request, independent of its placement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct ChannelFootprint {
    /// (interface type, fixed channels, flexible count)
    per_type: Vec<(usize, Vec<usize>, usize)>,
}

impl ChannelFootprint {
    pub(crate) fn of(r: &Request) -> Self {
        let per_type = r
            .demands
            .iter()
            .map(|d| match &d.mode {
                ChannelMode::Fixed { channels } => (d.interface_type, channels.clone(), 0),
                &ChannelMode::Flexible { count } => (d.interface_type, Vec::new(), count),
            })
            .collect();
        Self { per_type }
    }
}

/// Reusable counter over a fixed testbed. Requests are pre-reduced to unit
/// index lists and channel footprints so repeated counting allocates nothing.
#[derive(Debug, Clone)]
pub(crate) struct ConflictCounter {
    n_types: usize,
    max_channels: Vec<usize>,
    unit_claims: Vec<u32>,
    fixed_claims: Vec<Vec<u32>>,
    distinct_fixed: Vec<u64>,
    flexible: Vec<u64>,
}

impl ConflictCounter {
    pub(crate) fn new(testbed: &TestbedTopology) -> Self {
        let n_types = testbed.n_interface_types();
        let max_channels: Vec<usize> = testbed.interface_types().iter().map(|t| t.max_channels).collect();
        Self {
            n_types,
            unit_claims: vec![0; testbed.n_nodes() * n_types],
            fixed_claims: max_channels.iter().map(|&m| vec![0; m]).collect(),
            distinct_fixed: vec![0; n_types],
            flexible: vec![0; n_types],
            max_channels,
        }
    }

    /// Unit indices claimed by placing `r` at `m`.
    pub(crate) fn units(&self, testbed: &TestbedTopology, r: &Request, m: &PlacementMapping) -> Vec<u32> {
        let mut units = Vec::new();
        for claim in claims_of(r, m) {
            let base = claim.node * self.n_types;
            match claim.claimed {
                ClaimedInterfaces::WholeNode => {
                    units.extend(testbed.interfaces_of(claim.node).map(|t| (base + t) as u32))
                }
                ClaimedInterfaces::Interfaces(ts) => units.extend(ts.into_iter().map(|t| (base + t) as u32)),
            }
        }
        units
    }

    /// Counts conflicts over an active set given as (units, footprint) pairs.
    pub(crate) fn count<'a>(
        &mut self,
        active: impl Iterator<Item = (&'a [u32], &'a ChannelFootprint)> + Clone,
        count_channels: bool,
    ) -> ConflictReport {
        let mut report = ConflictReport::default();
        for (units, _) in active.clone() {
            for &u in units {
                let c = &mut self.unit_claims[u as usize];
                if *c > 0 {
                    report.resource_conflicts += 1;
                }
                *c += 1;
            }
        }
        for (units, _) in active.clone() {
            for &u in units {
                self.unit_claims[u as usize] = 0;
            }
        }
        if !count_channels {
            return report;
        }
        for (_, fp) in active.clone() {
            for (t, fixed, flex) in &fp.per_type {
                for &ch in fixed {
                    let c = &mut self.fixed_claims[*t][ch];
                    if *c > 0 {
                        report.channel_conflicts += 1;
                    } else {
                        self.distinct_fixed[*t] += 1;
                    }
                    *c += 1;
                }
                self.flexible[*t] += *flex as u64;
            }
        }
        for t in 0..self.n_types {
            let demand = self.distinct_fixed[t] + self.flexible[t];
            report.channel_conflicts += demand.saturating_sub(self.max_channels[t] as u64);
            self.distinct_fixed[t] = 0;
            self.flexible[t] = 0;
        }
        for (_, fp) in active {
            for (t, fixed, _) in &fp.per_type {
                for &ch in fixed {
                    self.fixed_claims[*t][ch] = 0;
                }
            }
        }
        report
    }
}

pub fn count_conflicts(active: &[(&Request, &PlacementMapping)], testbed: &TestbedTopology) -> ConflictReport {
    let mut counter = ConflictCounter::new(testbed);
    let prepared: Vec<(Vec<u32>, ChannelFootprint)> = active
        .iter()
        .map(|(r, m)| (counter.units(testbed, r, m), ChannelFootprint::of(r)))
        .collect();
    counter.count(prepared.iter().map(|(u, f)| (u.as_slice(), f)), true)
}

/// Channel conflicts alone; placement does not affect them.
pub fn count_channel_conflicts(requests: &[&Request], testbed: &TestbedTopology) -> u64 {
    let mut counter = ConflictCounter::new(testbed);
    let prints: Vec<ChannelFootprint> = requests.iter().map(|r| ChannelFootprint::of(r)).collect();
    counter.count(prints.iter().map(|f| (&[][..], f)), true).channel_conflicts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceChannels {
    pub interface_type: usize,
    pub channels: Vec<usize>,
}

/// Concrete channels granted to one served request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelGrant {
    pub request_id: RequestId,
    pub interfaces: Vec<InterfaceChannels>,
}

/// Assigns concrete channels to a conflict-free set: fixed channels are
/// reserved first, then flexible demands take the lowest free indices in
/// request order. Returns `None` if the set has channel conflicts.
pub fn assign_channels(requests: &[&Request], testbed: &TestbedTopology) -> Option<Vec<ChannelGrant>> {
    if count_channel_conflicts(requests, testbed) > 0 {
        return None;
    }
    let mut taken: Vec<Vec<bool>> = testbed.interface_types().iter().map(|t| vec![false; t.max_channels]).collect();
    for r in requests {
        for d in &r.demands {
            if let ChannelMode::Fixed { channels } = &d.mode {
                for &ch in channels {
                    taken[d.interface_type][ch] = true;
                }
            }
        }
    }
    let grants = requests
        .iter()
        .map(|r| ChannelGrant {
            request_id: r.id,
            interfaces: r
                .demands
                .iter()
                .map(|d| {
                    let channels = match &d.mode {
                        ChannelMode::Fixed { channels } => channels.clone(),
                        &ChannelMode::Flexible { count } => {
                            let pool = &mut taken[d.interface_type];
                            let picked: Vec<usize> = (0..pool.len()).filter(|&ch| !pool[ch]).take(count).collect();
                            for &ch in &picked {
                                pool[ch] = true;
                            }
                            picked
                        }
                    };
                    InterfaceChannels { interface_type: d.interface_type, channels }
                })
                .collect(),
        })
        .collect();
    Some(grants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::AdjacencyMatrix;
    use crate::request::ChannelDemand;
    use crate::testbed::{build_grid, default_interface_types};

    fn req(id: RequestId, kind: NodeKind, n: usize, demands: Vec<ChannelDemand>) -> Request {
        Request {
            id,
            n_nodes: n,
            topology: AdjacencyMatrix::empty(n),
            demands,
            node_kind: kind,
            duration_slots: 1,
            priority_rank: 1,
        }
    }

    fn at(r: &Request, nodes: &[usize]) -> PlacementMapping {
        PlacementMapping { request_id: r.id, assignment: nodes.to_vec() }
    }

    fn grid() -> TestbedTopology {
        build_grid(3, 3, default_interface_types()).unwrap()
    }

    #[test]
    fn claims_by_kind() {
        let phys = req(0, NodeKind::Physical, 3, vec![ChannelDemand::flexible(0, 1)]);
        let claims = claims_of(&phys, &at(&phys, &[0, 4, 8]));
        assert_eq!(claims.len(), 3);
        assert!(claims.iter().all(|c| c.claimed == ClaimedInterfaces::WholeNode));

        let virt = req(1, NodeKind::Virtual, 4, vec![ChannelDemand::flexible(0, 1), ChannelDemand::flexible(2, 1)]);
        let claims = claims_of(&virt, &at(&virt, &[0, 2, 6, 8]));
        assert_eq!(claims.len(), 4);
        assert!(claims.iter().all(|c| c.claimed == ClaimedInterfaces::Interfaces(vec![0, 2])));
    }

    #[test]
    fn virtual_disjoint_interfaces_share_a_node() {
        let a = req(0, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(0, 1)]);
        let b = req(1, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(1, 1)]);
        let (ma, mb) = (at(&a, &[4]), at(&b, &[4]));
        assert_eq!(count_conflicts(&[(&a, &ma), (&b, &mb)], &grid()), ConflictReport::default());
    }

    #[test]
    fn physical_sharing_counts_every_interface_unit() {
        let a = req(0, NodeKind::Physical, 2, vec![ChannelDemand::flexible(0, 1)]);
        let b = req(1, NodeKind::Physical, 2, vec![ChannelDemand::flexible(1, 1)]);
        let (ma, mb) = (at(&a, &[0, 4]), at(&b, &[4, 8]));
        let report = count_conflicts(&[(&a, &ma), (&b, &mb)], &grid());
        assert_eq!(report, ConflictReport { resource_conflicts: 3, channel_conflicts: 0 });
    }

    #[test]
    fn physical_against_virtual() {
        let a = req(0, NodeKind::Physical, 1, vec![ChannelDemand::flexible(0, 1)]);
        let b = req(1, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(2, 1)]);
        let c = req(2, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(2, 1)]);
        let (ma, mb, mc) = (at(&a, &[4]), at(&b, &[4]), at(&c, &[4]));
        let report = count_conflicts(&[(&a, &ma), (&b, &mb), (&c, &mc)], &grid());
        // unit (4, 2) has three claimants
        assert_eq!(report.resource_conflicts, 2);
    }

    #[test]
    fn fixed_channel_collision() {
        let a = req(0, NodeKind::Virtual, 1, vec![ChannelDemand::fixed(0, vec![6])]);
        let b = req(1, NodeKind::Virtual, 1, vec![ChannelDemand::fixed(0, vec![6])]);
        let (ma, mb) = (at(&a, &[0]), at(&b, &[8]));
        let report = count_conflicts(&[(&a, &ma), (&b, &mb)], &grid());
        assert_eq!(report, ConflictReport { resource_conflicts: 0, channel_conflicts: 1 });
    }

    #[test]
    fn flexible_budget_excess() {
        let a = req(0, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(0, 7)]);
        let b = req(1, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(0, 7)]);
        let (ma, mb) = (at(&a, &[0]), at(&b, &[8]));
        assert_eq!(count_conflicts(&[(&a, &ma), (&b, &mb)], &grid()).channel_conflicts, 1);
        assert_eq!(count_channel_conflicts(&[&a, &b], &grid()), 1);
        assert_eq!(count_channel_conflicts(&[&a], &grid()), 0);
    }

    #[test]
    fn fixed_and_flexible_share_the_pool() {
        let a = req(0, NodeKind::Virtual, 1, vec![ChannelDemand::fixed(0, vec![0, 1, 2])]);
        let b = req(1, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(0, 10)]);
        let c = req(2, NodeKind::Virtual, 1, vec![ChannelDemand::fixed(0, vec![2])]);
        assert_eq!(count_channel_conflicts(&[&a, &b], &grid()), 0);
        // channel 2 collides once; distinct fixed stays 3 so no budget excess
        assert_eq!(count_channel_conflicts(&[&a, &b, &c], &grid()), 1);
    }

    #[test]
    fn empty_active_set() {
        assert_eq!(count_conflicts(&[], &grid()), ConflictReport::default());
    }

    #[test]
    fn channel_assignment_fixed_then_lowest_free() {
        let a = req(0, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(0, 3)]);
        let b = req(1, NodeKind::Virtual, 1, vec![ChannelDemand::fixed(0, vec![1, 5]), ChannelDemand::flexible(2, 2)]);
        let grants = assign_channels(&[&a, &b], &grid()).unwrap();
        assert_eq!(grants[0].interfaces[0].channels, vec![0, 2, 3]);
        assert_eq!(grants[1].interfaces[0].channels, vec![1, 5]);
        assert_eq!(grants[1].interfaces[1].channels, vec![0, 1]);

        let c = req(2, NodeKind::Virtual, 1, vec![ChannelDemand::flexible(0, 9)]);
        assert!(assign_channels(&[&a, &b, &c], &grid()).is_none());
    }
}
