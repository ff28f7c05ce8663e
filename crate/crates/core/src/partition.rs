use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeMap;

/// Assignment of `n` nodes to `k` labelled groups.
///
/// Generated memberships may leave groups empty; partitions used for
/// estimation are checked with [`Partition::require_nonempty`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    k: usize,
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "partition needs at least one group".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&g| g >= k) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {k} groups"
            )));
        }
        Ok(Self { k, labels })
    }

    /// Every node in group 0.
    pub fn single(n: usize) -> Self {
        Self {
            k: 1,
            labels: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &g in &self.labels {
            sizes[g] += 1;
        }
        sizes
    }

    /// Member lists per group, each in ascending node order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (i, &g) in self.labels.iter().enumerate() {
            groups[g].push(i);
        }
        groups
    }

    pub fn empty_groups(&self) -> Vec<usize> {
        self.sizes()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 0)
            .map(|(g, _)| g)
            .collect()
    }

    pub fn require_nonempty(&self) -> Result<()> {
        match self.empty_groups().first() {
            Some(&g) => Err(Error::EmptyGroup(g)),
            None => Ok(()),
        }
    }

    /// True when every group of `self` lies inside a single group of `coarse`.
    pub fn refines(&self, coarse: &Partition) -> bool {
        if self.n() != coarse.n() {
            return false;
        }
        let mut parent = vec![usize::MAX; self.k];
        self.labels.iter().zip(coarse.labels()).all(|(&fine, &c)| {
            if parent[fine] == usize::MAX {
                parent[fine] = c;
            }
            parent[fine] == c
        })
    }

    /// Same grouping relabelled through a node permutation: node `i` moves
    /// to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut labels = vec![0; self.n()];
        for (i, &g) in self.labels.iter().enumerate() {
            labels[perm[i]] = g;
        }
        Self { k: self.k, labels }
    }

    /// Writes `node_label,group` rows. Labels come from `nodes` when given,
    /// otherwise the 0-based index is used.
    pub fn write_csv<W: Write>(&self, writer: W, nodes: Option<&NodeMap>) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["node_label", "group"])?;
        for (i, &g) in self.labels.iter().enumerate() {
            let label = nodes
                .and_then(|m| m.label(i))
                .map(str::to_owned)
                .unwrap_or_else(|| i.to_string());
            out.write_record([label, g.to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
