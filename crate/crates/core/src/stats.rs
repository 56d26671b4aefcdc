//! Block sufficient statistics and the ICL evaluators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::partition::Partition;
use crate::special::{ln_beta, ln_gamma};

/// Shared conjugate hyperparameters: Dirichlet `n0` for the cluster
/// proportions, Beta `(eta0, zeta0)` for every block connection probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub n0: f64,
    pub eta0: f64,
    pub zeta0: f64,
}

impl Priors {
    pub fn new(n0: f64, eta0: f64, zeta0: f64) -> Result<Self> {
        for (name, v) in [("n0", n0), ("eta0", eta0), ("zeta0", zeta0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("prior {name} must be positive, got {v}")));
            }
        }
        Ok(Self { n0, eta0, zeta0 })
    }

    /// All hyperparameters 1.
    pub fn uniform() -> Self {
        Self {
            n0: 1.0,
            eta0: 1.0,
            zeta0: 1.0,
        }
    }

    /// All hyperparameters 1/2.
    pub fn jeffreys() -> Self {
        Self {
            n0: 0.5,
            eta0: 0.5,
            zeta0: 0.5,
        }
    }
}

impl Default for Priors {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Ordered pairs of distinct nodes between clusters of the given sizes.
#[inline]
pub fn block_pairs(size_k: usize, size_l: usize, same: bool) -> usize {
    if same {
        size_k * size_k.saturating_sub(1)
    } else {
        size_k * size_l
    }
}

/// Cluster sizes `m_k` and block edge counts `e_kl` of a (graph, partition)
/// pair. Non-edge counts are derived from sizes and never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    n_nodes: usize,
    k: usize,
    sizes: Vec<usize>,
    /// Row-major `k x k`.
    edges: Vec<usize>,
}

impl BlockStats {
    pub(crate) fn from_parts(n_nodes: usize, sizes: Vec<usize>, edges: Vec<usize>) -> Self {
        let k = sizes.len();
        debug_assert_eq!(edges.len(), k * k);
        Self {
            n_nodes,
            k,
            sizes,
            edges,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, k: usize) -> usize {
        self.sizes[k]
    }

    /// `e_kl`: edges from cluster `k` to cluster `l`.
    pub fn edge_count(&self, k: usize, l: usize) -> usize {
        self.edges[k * self.k + l]
    }

    /// Ordered node pairs `(i, j)`, `i != j`, with `i` in `k` and `j` in `l`.
    pub fn pairs(&self, k: usize, l: usize) -> usize {
        block_pairs(self.sizes[k], self.sizes[l], k == l)
    }

    pub fn non_edge_count(&self, k: usize, l: usize) -> usize {
        self.pairs(k, l) - self.edge_count(k, l)
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().sum()
    }
}

/// Exact counts in `O(N + L + K^2)`.
pub fn compute_stats(g: &DirectedGraph, z: &Partition) -> Result<BlockStats> {
    if g.n_nodes() == 0 {
        return Err(Error::invalid("graph has no nodes"));
    }
    if z.n_nodes() != g.n_nodes() {
        return Err(Error::invalid(format!(
            "partition covers {} nodes, graph has {}",
            z.n_nodes(),
            g.n_nodes()
        )));
    }
    let k = z.k();
    let labels = z.labels();
    let mut edges = vec![0usize; k * k];
    for (s, d) in g.edges() {
        edges[labels[s] * k + labels[d]] += 1;
    }
    Ok(BlockStats::from_parts(g.n_nodes(), z.sizes(), edges))
}

/// `ln p(Z | K) = ln C(n) - ln C(n0)` with `n_k = n0 + m_k` and
/// `ln C(x) = Σ lnΓ(x_k) - lnΓ(Σ x_k)`.
pub fn ln_partition_marginal(sizes: &[usize], n0: f64) -> f64 {
    let k = sizes.len() as f64;
    let n: usize = sizes.iter().sum();
    let with_counts: f64 = sizes.iter().map(|&m| ln_gamma(n0 + m as f64)).sum::<f64>()
        - ln_gamma(k * n0 + n as f64);
    let prior = k * ln_gamma(n0) - ln_gamma(k * n0);
    with_counts - prior
}

/// Exact integrated complete-data log likelihood `ln p(X, Z | K)`.
///
/// `Σ_kl [ln B(η_kl, ζ_kl) - ln B(η0, ζ0)] + ln C(n) - ln C(n0)`, where
/// `η_kl = η0 + e_kl` and `ζ_kl = ζ0 + pairs(k, l) - e_kl`.
pub fn icl_exact(s: &BlockStats, p: &Priors) -> f64 {
    let prior_block = ln_beta(p.eta0, p.zeta0);
    let mut blocks = 0.0;
    for k in 0..s.k() {
        for l in 0..s.k() {
            let e = s.edge_count(k, l) as f64;
            let non = s.non_edge_count(k, l) as f64;
            blocks += ln_beta(p.eta0 + e, p.zeta0 + non) - prior_block;
        }
    }
    blocks + ln_partition_marginal(s.sizes(), p.n0)
}

#[inline]
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Asymptotic ICL: maximized complete-data log likelihood penalized by
/// `K^2/2 ln(N(N-1)) + (K-1)/2 ln N`.
///
/// Plug-in estimates are `α_k = m_k / N` and `Π_kl = e_kl / pairs(k, l)`,
/// with `0 ln 0 = 0` and empty blocks contributing nothing.
pub fn icl_asymptotic(g: &DirectedGraph, z: &Partition) -> Result<f64> {
    let s = compute_stats(g, z)?;
    let n = s.n_nodes();
    if n < 2 {
        return Err(Error::invalid("asymptotic ICL needs at least two nodes"));
    }
    let nf = n as f64;
    let mut loglik: f64 = s.sizes().iter().map(|&m| xlogy(m as f64, m as f64 / nf)).sum();
    for k in 0..s.k() {
        for l in 0..s.k() {
            let pairs = s.pairs(k, l);
            if pairs == 0 {
                continue;
            }
            let e = s.edge_count(k, l) as f64;
            let non = pairs as f64 - e;
            let pi = e / pairs as f64;
            loglik += xlogy(e, pi) + xlogy(non, 1.0 - pi);
        }
    }
    let kf = s.k() as f64;
    Ok(loglik - 0.5 * kf * kf * (nf * (nf - 1.0)).ln() - 0.5 * (kf - 1.0) * nf.ln())
}
