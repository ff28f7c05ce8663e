//! Undirected simple graphs, edge-list ingestion and degree statistics.

use std::fs;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric 0/1 adjacency matrix with zero diagonal.
///
/// Stored densely alongside sorted neighbour lists; both views are fixed at
/// construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyMatrix {
    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidAdjacency(
                "node count must be at least 1".into(),
            ));
        }
        Ok(Self {
            n,
            entries: vec![0; n * n],
            neighbors: vec![Vec::new(); n],
        })
    }

    /// Builds an undirected simple graph from an edge iterator. Duplicate
    /// pairs (in either orientation) collapse and self-loops are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = Self::empty(n)?;
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidAdjacency(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i != j {
                adj.entries[i * n + j] = 1;
                adj.entries[j * n + i] = 1;
            }
        }
        adj.rebuild_neighbors();
        Ok(adj)
    }

    /// Validates a dense row-major matrix.
    pub fn from_dense(n: usize, entries: Vec<u8>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidAdjacency(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0 {
                return Err(Error::InvalidAdjacency(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if v > 1 {
                    return Err(Error::InvalidAdjacency(format!("entry ({i}, {j}) = {v}")));
                }
                if v != entries[j * n + i] {
                    return Err(Error::InvalidAdjacency(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        let mut adj = Self {
            n,
            entries,
            neighbors: vec![Vec::new(); n],
        };
        adj.rebuild_neighbors();
        Ok(adj)
    }

    fn rebuild_neighbors(&mut self) {
        let n = self.n;
        for (i, list) in self.neighbors.iter_mut().enumerate() {
            list.clear();
            let row = &self.entries[i * n..(i + 1) * n];
            list.extend(
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 1)
                    .map(|(j, _)| j),
            );
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Sorted neighbours of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        Self::from_edges(self.n, self.edges().map(|(i, j)| (perm[i], perm[j])))
    }
}

/// Node degrees and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
    total: usize,
}

impl DegreeProfile {
    pub fn average(&self) -> f64 {
        self.total as f64 / self.degrees.len() as f64
    }

    /// Sum of all degrees, i.e. twice the edge count.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn min(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }
}

pub fn degree_profile(adj: &AdjacencyMatrix) -> DegreeProfile {
    let degrees: Vec<usize> = (0..adj.n()).map(|i| adj.degree(i)).collect();
    let total = degrees.iter().sum();
    DegreeProfile { degrees, total }
}

/// Edge-list dialects accepted by [`load_edge_list`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeListFormat {
    /// Two whitespace-separated identifiers per line.
    #[default]
    Whitespace,
    /// Two comma-separated identifiers per line.
    Csv,
}

/// Mapping from original node labels to 0-based indices, in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeMap {
    labels: IndexMap<String, usize>,
}

impl NodeMap {
    fn intern(&mut self, label: &str) -> usize {
        let next = self.labels.len();
        *self.labels.entry(label.to_owned()).or_insert(next)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    /// Original label of node `index`.
    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get_index(index).map(|(k, _)| k.as_str())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// A graph loaded from disk together with its label map.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub adjacency: AdjacencyMatrix,
    pub nodes: NodeMap,
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_edge_list(&text, format)
}

/// Parses edge-list text. Blank lines and lines starting with `#` or `%`
/// are skipped.
pub fn parse_edge_list(text: &str, format: EdgeListFormat) -> Result<LoadedGraph> {
    let mut nodes = NodeMap::default();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = match format {
            EdgeListFormat::Whitespace => line.split_whitespace().collect(),
            EdgeListFormat::Csv => line.split(',').map(str::trim).collect(),
        };
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected two node identifiers, found {:?}", raw),
            });
        }
        let i = nodes.intern(fields[0]);
        let j = nodes.intern(fields[1]);
        edges.push((i, j));
    }
    if nodes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let adjacency = AdjacencyMatrix::from_edges(nodes.len(), edges)?;
    if adjacency.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(LoadedGraph { adjacency, nodes })
}
