//! Candidate placements of a request topology onto the testbed.
//!
//! A placement is an injective map from request nodes to testbed nodes that
//! is an induced subgraph isomorphism on the connectivity graph of every
//! interface type the request demands: request edges must be links and
//! request non-edges must be non-links.
//!
//! The enumerator is VF2-style backtracking. Request nodes are matched in
//! descending-degree order (ties by index), candidate testbed nodes are
//! tried in ascending index, and both edge and non-edge consistency with
//! every previously matched pair is checked at each extension.

use serde::{Deserialize, Serialize};

use crate::request::{Request, RequestId};
use crate::testbed::TestbedTopology;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlacementMapping {
    pub request_id: RequestId,
    /// `assignment[p]` is the testbed node hosting request node `p`.
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairRelation {
    /// Linked on every demanded interface.
    Link,
    /// Linked on none of the demanded interfaces.
    Gap,
    /// Linked on some but not all; no request pair can sit here.
    Mixed,
}

/// Testbed view restricted to the interface types one request demands.
struct DemandedView {
    n: usize,
    relation: Vec<PairRelation>,
    eligible: Vec<bool>,
    degree: Vec<usize>,
}

impl DemandedView {
    fn new(r: &Request, testbed: &TestbedTopology) -> Self {
        let n = testbed.n_nodes();
        let types: Vec<usize> = r.interface_types().collect();
        let eligible: Vec<bool> = (0..n)
            .map(|v| types.iter().all(|&t| testbed.has_interface(v, t)))
            .collect();
        let mut relation = vec![PairRelation::Gap; n * n];
        let mut degree = vec![0; n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let links = types.iter().filter(|&&t| testbed.connectivity(t).has_edge(a, b)).count();
                relation[a * n + b] = if links == 0 {
                    PairRelation::Gap
                } else if links == types.len() {
                    degree[a] += 1;
                    PairRelation::Link
                } else {
                    PairRelation::Mixed
                };
            }
        }
        Self { n, relation, eligible, degree }
    }

    #[inline]
    fn relation(&self, a: usize, b: usize) -> PairRelation {
        self.relation[a * self.n + b]
    }
}

struct Matcher<'a> {
    request: &'a Request,
    view: DemandedView,
    order: Vec<usize>,
    request_degree: Vec<usize>,
    assignment: Vec<usize>,
    used: Vec<bool>,
    limit: usize,
    out: Vec<PlacementMapping>,
}

impl Matcher<'_> {
    fn feasible(&self, depth: usize, p: usize, v: usize) -> bool {
        if self.used[v] || !self.view.eligible[v] || self.view.degree[v] < self.request_degree[p] {
            return false;
        }
        self.order[..depth].iter().all(|&q| {
            let w = self.assignment[q];
            match self.view.relation(v, w) {
                PairRelation::Link => self.request.topology.has_edge(p, q),
                PairRelation::Gap => !self.request.topology.has_edge(p, q),
                PairRelation::Mixed => false,
            }
        })
    }

    fn extend(&mut self, depth: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            self.out.push(PlacementMapping {
                request_id: self.request.id,
                assignment: self.assignment.clone(),
            });
            return;
        }
        let p = self.order[depth];
        for v in 0..self.view.n {
            if !self.feasible(depth, p, v) {
                continue;
            }
            self.assignment[p] = v;
            self.used[v] = true;
            self.extend(depth + 1);
            self.used[v] = false;
            if self.out.len() >= self.limit {
                return;
            }
        }
    }
}

/// All induced placements of `r` on `testbed` in deterministic DFS order,
/// truncated to the first `limit` when given.
///
/// Automorphic placements (same node set, different assignment) are
/// reported separately.
pub fn enumerate_induced_mappings(r: &Request, testbed: &TestbedTopology, limit: Option<usize>) -> Vec<PlacementMapping> {
    let n_r = r.topology.len();
    if n_r == 0 || n_r > testbed.n_nodes() || limit == Some(0) {
        return Vec::new();
    }
    let request_degree: Vec<usize> = (0..n_r).map(|p| r.topology.degree(p)).collect();
    let mut order: Vec<usize> = (0..n_r).collect();
    order.sort_by_key(|&p| (std::cmp::Reverse(request_degree[p]), p));
    let mut matcher = Matcher {
        request: r,
        view: DemandedView::new(r, testbed),
        order,
        request_degree,
        assignment: vec![usize::MAX; n_r],
        used: vec![false; testbed.n_nodes()],
        limit: limit.unwrap_or(usize::MAX),
        out: Vec::new(),
    };
    matcher.extend(0);
    matcher.out
}

/// Checks a complete assignment directly against the placement definition.
pub fn is_valid_placement(r: &Request, testbed: &TestbedTopology, assignment: &[usize]) -> bool {
    let n = testbed.n_nodes();
    if assignment.len() != r.topology.len() {
        return false;
    }
    for (i, &a) in assignment.iter().enumerate() {
        if a >= n || assignment[..i].contains(&a) {
            return false;
        }
    }
    r.interface_types().all(|t| {
        let g = testbed.connectivity(t);
        assignment.iter().all(|&v| testbed.has_interface(v, t))
            && (0..assignment.len()).all(|p| {
                (0..assignment.len())
                    .filter(|&q| q != p)
                    .all(|q| r.topology.has_edge(p, q) == g.has_edge(assignment[p], assignment[q]))
            })
    })
}

/// Exhaustive oracle: every injective map of request nodes into testbed
/// nodes, filtered by [`is_valid_placement`]. Output is sorted by assignment.
/// Intended for small inputs only.
pub fn brute_force_induced_mappings(r: &Request, testbed: &TestbedTopology) -> Vec<PlacementMapping> {
    fn injective_maps(n: usize, k: usize, prefix: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
        if prefix.len() == k {
            emit(prefix);
            return;
        }
        for v in 0..n {
            if !prefix.contains(&v) {
                prefix.push(v);
                injective_maps(n, k, prefix, emit);
                prefix.pop();
            }
        }
    }
    let n_r = r.topology.len();
    let mut out = Vec::new();
    if n_r == 0 || n_r > testbed.n_nodes() {
        return out;
    }
    injective_maps(testbed.n_nodes(), n_r, &mut Vec::with_capacity(n_r), &mut |a| {
        if is_valid_placement(r, testbed, a) {
            out.push(PlacementMapping { request_id: r.id, assignment: a.to_vec() });
        }
    });
    out
}
