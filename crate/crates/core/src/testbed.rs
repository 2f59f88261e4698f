//! Physical testbed model: per-interface connectivity graphs plus the
//! radio and spectrum inventory of every node.
//!
//! Generators replicate a single connectivity matrix across all interface
//! types. Heterogeneous per-interface connectivity is only available through
//! topology files.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{AdjacencyMatrix, MatrixError};
use crate::rng::{seeded_rng, Stream};

/// A class of wireless interface with its orthogonal channel budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InterfaceType {
    pub id: usize,
    pub max_channels: usize,
}

impl InterfaceType {
    pub fn new(id: usize, max_channels: usize) -> Self {
        Self { id, max_channels }
    }
}

/// Three interface types with 13, 13 and 40 orthogonal channels.
pub fn default_interface_types() -> Vec<InterfaceType> {
    vec![
        InterfaceType::new(0, 13),
        InterfaceType::new(1, 13),
        InterfaceType::new(2, 40),
    ]
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("testbed must have at least one node")]
    NoNodes,
    #[error("edge probability {0} is outside [0, 1]")]
    EdgeProbability(f64),
    #[error("testbed must have at least one interface type")]
    NoInterfaceTypes,
    #[error("interface type ids must be contiguous from 0; position {position} has id {id}")]
    InterfaceIds { position: usize, id: usize },
    #[error("interface type {id} has zero channels")]
    ZeroChannels { id: usize },
    #[error("expected {expected} connectivity matrices (one per interface type), got {got}")]
    ConnectivityCount { expected: usize, got: usize },
    #[error("connectivity matrix for interface {interface} is {got}x{got}, expected {expected}x{expected}")]
    ConnectivitySize { interface: usize, got: usize, expected: usize },
    #[error("invalid connectivity matrix for interface {interface}: {source}")]
    Matrix {
        interface: usize,
        #[source]
        source: MatrixError,
    },
    #[error("node_interfaces has shape mismatch at row {row}")]
    NodeInterfacesShape { row: usize },
    #[error("node_interfaces entry ({node},{interface}) is {value}, expected 0 or 1")]
    NodeInterfacesValue { node: usize, interface: usize, value: u8 },
    #[error("link {a}-{b} on interface {interface} but node {node} lacks that interface")]
    MissingInterface { interface: usize, a: usize, b: usize, node: usize },
    #[error("reading topology file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing topology file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Immutable description of a wireless testbed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestbedTopology {
    interface_types: Vec<InterfaceType>,
    connectivity: Vec<AdjacencyMatrix>,
    node_interfaces: Vec<Vec<bool>>,
}

impl TestbedTopology {
    /// Validates every structural invariant and builds the topology.
    pub fn new(
        interface_types: Vec<InterfaceType>,
        connectivity: Vec<AdjacencyMatrix>,
        node_interfaces: Vec<Vec<bool>>,
    ) -> Result<Self, TopologyError> {
        if interface_types.is_empty() {
            return Err(TopologyError::NoInterfaceTypes);
        }
        for (position, it) in interface_types.iter().enumerate() {
            if it.id != position {
                return Err(TopologyError::InterfaceIds { position, id: it.id });
            }
            if it.max_channels == 0 {
                return Err(TopologyError::ZeroChannels { id: it.id });
            }
        }
        if connectivity.len() != interface_types.len() {
            return Err(TopologyError::ConnectivityCount {
                expected: interface_types.len(),
                got: connectivity.len(),
            });
        }
        let n = node_interfaces.len();
        if n == 0 {
            return Err(TopologyError::NoNodes);
        }
        for (row, ifaces) in node_interfaces.iter().enumerate() {
            if ifaces.len() != interface_types.len() {
                return Err(TopologyError::NodeInterfacesShape { row });
            }
        }
        for (t, m) in connectivity.iter().enumerate() {
            if m.len() != n {
                return Err(TopologyError::ConnectivitySize { interface: t, got: m.len(), expected: n });
            }
            for a in 0..n {
                for b in m.neighbors(a).filter(|&b| b > a) {
                    for node in [a, b] {
                        if !node_interfaces[node][t] {
                            return Err(TopologyError::MissingInterface { interface: t, a, b, node });
                        }
                    }
                }
            }
        }
        Ok(Self { interface_types, connectivity, node_interfaces })
    }

    /// Same graph on every interface type; every node carries every type.
    pub fn uniform(graph: AdjacencyMatrix, interface_types: Vec<InterfaceType>) -> Result<Self, TopologyError> {
        let n = graph.len();
        let connectivity = vec![graph; interface_types.len()];
        let node_interfaces = vec![vec![true; interface_types.len()]; n];
        Self::new(interface_types, connectivity, node_interfaces)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_interfaces.len()
    }

    pub fn n_interface_types(&self) -> usize {
        self.interface_types.len()
    }

    pub fn interface_types(&self) -> &[InterfaceType] {
        &self.interface_types
    }

    pub fn interface_type(&self, id: usize) -> Option<&InterfaceType> {
        self.interface_types.get(id)
    }

    pub fn connectivity(&self, interface: usize) -> &AdjacencyMatrix {
        &self.connectivity[interface]
    }

    pub fn has_interface(&self, node: usize, interface: usize) -> bool {
        self.node_interfaces[node][interface]
    }

    /// Interface ids carried by `node`, ascending.
    pub fn interfaces_of(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.node_interfaces[node]
            .iter()
            .enumerate()
            .filter_map(|(t, &has)| has.then_some(t))
    }

    pub fn edge_count(&self, interface: usize) -> usize {
        self.connectivity[interface].edge_count()
    }

    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            n_nodes: self.n_nodes(),
            interface_types: self.interface_types.clone(),
            connectivity: self.connectivity.iter().map(AdjacencyMatrix::to_rows).collect(),
            node_interfaces: Some(
                self.node_interfaces
                    .iter()
                    .map(|row| row.iter().map(|&b| u8::from(b)).collect())
                    .collect(),
            ),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile = serde_json::from_str(text)?;
        file.into_topology()
    }
}

/// On-disk topology description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyFile {
    pub n_nodes: usize,
    pub interface_types: Vec<InterfaceType>,
    pub connectivity: Vec<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_interfaces: Option<Vec<Vec<u8>>>,
}

impl TopologyFile {
    pub fn into_topology(self) -> Result<TestbedTopology, TopologyError> {
        let n = self.n_nodes;
        if n == 0 {
            return Err(TopologyError::NoNodes);
        }
        let types = self.interface_types.len();
        if self.connectivity.len() != types {
            return Err(TopologyError::ConnectivityCount { expected: types, got: self.connectivity.len() });
        }
        let connectivity = self
            .connectivity
            .iter()
            .enumerate()
            .map(|(t, rows)| {
                if rows.len() != n {
                    return Err(TopologyError::ConnectivitySize { interface: t, got: rows.len(), expected: n });
                }
                AdjacencyMatrix::from_rows(rows).map_err(|source| TopologyError::Matrix { interface: t, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let node_interfaces = match self.node_interfaces {
            None => vec![vec![true; types]; n],
            Some(rows) => {
                if rows.len() != n {
                    return Err(TopologyError::NodeInterfacesShape { row: rows.len().min(n) });
                }
                rows.iter()
                    .enumerate()
                    .map(|(node, row)| {
                        if row.len() != types {
                            return Err(TopologyError::NodeInterfacesShape { row: node });
                        }
                        row.iter()
                            .enumerate()
                            .map(|(interface, &value)| match value {
                                0 => Ok(false),
                                1 => Ok(true),
                                _ => Err(TopologyError::NodeInterfacesValue { node, interface, value }),
                            })
                            .collect()
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        TestbedTopology::new(self.interface_types, connectivity, node_interfaces)
    }
}

/// 4-neighbour grid, node index `row * cols + col`.
pub fn build_grid(rows: usize, cols: usize, interface_types: Vec<InterfaceType>) -> Result<TestbedTopology, TopologyError> {
    if rows == 0 || cols == 0 {
        return Err(TopologyError::ZeroDimension { rows, cols });
    }
    let mut g = AdjacencyMatrix::empty(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                g.set_edge(v, v + 1, true);
            }
            if r + 1 < rows {
                g.set_edge(v, v + cols, true);
            }
        }
    }
    TestbedTopology::uniform(g, interface_types)
}

/// Independent-edge random graph. Pairs are visited in (a, b), a < b
/// lexicographic order, one uniform draw each, so the result is a pure
/// function of `(n, edge_prob, seed)`.
pub fn build_random(
    n: usize,
    edge_prob: f64,
    seed: u64,
    interface_types: Vec<InterfaceType>,
) -> Result<TestbedTopology, TopologyError> {
    if n == 0 {
        return Err(TopologyError::NoNodes);
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(TopologyError::EdgeProbability(edge_prob));
    }
    let mut rng = seeded_rng(seed, Stream::Topology);
    let mut g = AdjacencyMatrix::empty(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random::<f64>() < edge_prob {
                g.set_edge(a, b, true);
            }
        }
    }
    TestbedTopology::uniform(g, interface_types)
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<TestbedTopology, TopologyError> {
    let text = std::fs::read_to_string(path)?;
    TestbedTopology::from_json(&text)
}
