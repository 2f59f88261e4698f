//! Dense square 0/1 adjacency matrices.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("matrix entry ({row},{col}) is {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },
    #[error("matrix is not symmetric at ({row},{col})")]
    Asymmetric { row: usize, col: usize },
    #[error("matrix diagonal entry ({node},{node}) is nonzero")]
    SelfLoop { node: usize },
}

/// Symmetric binary adjacency matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdjacencyMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self { n, bits: vec![false; n * n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut m = Self::empty(n);
        for a in 0..n {
            for b in (a + 1)..n {
                m.set_edge(a, b, true);
            }
        }
        m
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, MatrixError> {
        let mut m = Self::empty(n);
        for &(a, b) in edges {
            if a == b {
                return Err(MatrixError::SelfLoop { node: a });
            }
            m.set_edge(a, b, true);
        }
        Ok(m)
    }

    /// Builds from nested rows, checking shape, binarity, symmetry and the diagonal.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, MatrixError> {
        let n = rows.len();
        let mut m = Self::empty(n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::Ragged { row: r, len: row.len(), expected: n });
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(MatrixError::NotBinary { row: r, col: c, value: v });
                }
                m.bits[r * n + c] = v == 1;
            }
        }
        for a in 0..n {
            if m.has_edge(a, a) {
                return Err(MatrixError::SelfLoop { node: a });
            }
            for b in (a + 1)..n {
                if m.has_edge(a, b) != m.has_edge(b, a) {
                    return Err(MatrixError::Asymmetric { row: a, col: b });
                }
            }
        }
        Ok(m)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| u8::from(self.has_edge(r, c))).collect())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.n + b]
    }

    /// Sets both (a,b) and (b,a). Panics on a == b when `present` is true.
    pub fn set_edge(&mut self, a: usize, b: usize, present: bool) {
        assert!(!(present && a == b), "self loops are not allowed");
        self.bits[a * self.n + b] = present;
        self.bits[b * self.n + a] = present;
    }

    pub fn degree(&self, node: usize) -> usize {
        (0..self.n).filter(|&o| self.has_edge(node, o)).count()
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count() / 2
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&o| self.has_edge(node, o))
    }
}

impl Serialize for AdjacencyMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AdjacencyMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<u8>>::deserialize(deserializer)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
