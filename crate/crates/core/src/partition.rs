use crate::error::{Error, Result};

/// Hard assignment of every node to one of `k` clusters.
///
/// Cluster indices are dense: each of `0..k` has at least one member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates an already dense labelling.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition must cover at least one node"));
        }
        if k == 0 {
            return Err(Error::invalid("partition must have at least one cluster"));
        }
        let mut used = vec![false; k];
        for (i, &c) in labels.iter().enumerate() {
            if c >= k {
                return Err(Error::invalid(format!(
                    "node {i} has cluster index {c} >= K = {k}"
                )));
            }
            used[c] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("cluster {empty} has no members")));
        }
        Ok(Self { labels, k })
    }

    /// Relabels arbitrary cluster ids onto `0..k`, preserving their order.
    pub fn compact(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("partition must cover at least one node"));
        }
        let mut distinct: Vec<usize> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let dense = labels
            .iter()
            .map(|c| distinct.binary_search(c).expect("label present"))
            .collect();
        Ok(Self {
            labels: dense,
            k: distinct.len(),
        })
    }

    /// Every node in cluster 0.
    pub fn single(n_nodes: usize) -> Result<Self> {
        Self::new(vec![0; n_nodes], 1)
    }

    /// Every node in its own cluster.
    pub fn singletons(n_nodes: usize) -> Result<Self> {
        Self::new((0..n_nodes).collect(), n_nodes)
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(Self::new(labels.clone(), k).is_ok());
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }

    /// Same partition with cluster `c` renamed to `perm[c]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::invalid("permutation length must equal K"));
        }
        Self::new(self.labels.iter().map(|&c| perm[c]).collect(), self.k)
    }

    /// Canonical labelling: clusters numbered by first appearance.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect();
        Self { labels, k: self.k }
    }
}
