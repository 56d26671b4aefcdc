//! Starting partitions and multi-restart fitting.

use std::cmp::Ordering;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::greedy::{FitOptions, FitResult, FitState};
use crate::partition::Partition;
use crate::stats::Priors;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Random,
    Kmeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitConfig {
    /// Upper bound on the number of clusters, used as the starting K.
    pub k_up: usize,
    pub method: InitMethod,
    pub kmeans_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            k_up: 20,
            method: InitMethod::Kmeans,
            kmeans_iters: 5,
            restarts: 10,
            seed: 0,
        }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_up < 1 {
            return Err(Error::invalid("k_up must be at least 1"));
        }
        if self.restarts < 1 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.kmeans_iters < 1 {
            return Err(Error::invalid("kmeans_iters must be at least 1"));
        }
        Ok(())
    }

    /// Starting partition for restart `index`.
    pub fn initial_partition(&self, g: &DirectedGraph, index: usize) -> Result<Partition> {
        let seed = self.restart_seed(index);
        match self.method {
            InitMethod::Random => random_init(g.n_nodes(), self.k_up, seed),
            InitMethod::Kmeans => kmeans_init(g, self.k_up, self.kmeans_iters, seed),
        }
    }

    pub fn restart_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// Uniform labels in `0..k_up`, with unused labels compacted away.
pub fn random_init(n_nodes: usize, k_up: usize, seed: u64) -> Result<Partition> {
    if k_up < 1 {
        return Err(Error::invalid("k_up must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n_nodes).map(|_| rng.random_range(0..k_up)).collect();
    Partition::compact(&labels)
}

/// Squared distance between the out/in incidence vectors of `i` and a node
/// whose neighbors are flagged in `mark_out` / `mark_in`.
struct SeedDistances<'a> {
    g: &'a DirectedGraph,
    common: Vec<usize>,
    touched: Vec<usize>,
}

impl<'a> SeedDistances<'a> {
    fn new(g: &'a DirectedGraph) -> Self {
        Self {
            g,
            common: vec![0; g.n_nodes()],
            touched: Vec::new(),
        }
    }

    /// Shared successors plus shared predecessors of every node with `c`,
    /// accumulated into `self.common` (only `self.touched` entries are non-zero).
    fn overlap_with(&mut self, c: usize) {
        for &t in &self.touched {
            self.common[t] = 0;
        }
        self.touched.clear();
        let g = self.g;
        for &j in g.successors(c) {
            for &i in g.predecessors(j as usize) {
                let i = i as usize;
                if self.common[i] == 0 {
                    self.touched.push(i);
                }
                self.common[i] += 1;
            }
        }
        for &j in g.predecessors(c) {
            for &i in g.successors(j as usize) {
                let i = i as usize;
                if self.common[i] == 0 {
                    self.touched.push(i);
                }
                self.common[i] += 1;
            }
        }
    }
}

/// A few Lloyd iterations on the concatenated out-row / in-column incidence
/// vectors (dimension `2N`, stored sparsely), seeded k-means++ style.
///
/// `iters = 1` is the assignment step right after seeding.
pub fn kmeans_init(g: &DirectedGraph, k_up: usize, iters: usize, seed: u64) -> Result<Partition> {
    let n = g.n_nodes();
    if n == 0 {
        return Err(Error::invalid("graph has no nodes"));
    }
    if k_up < 1 {
        return Err(Error::invalid("k_up must be at least 1"));
    }
    if iters < 1 {
        return Err(Error::invalid("k-means needs at least one iteration"));
    }
    let k = if k_up > n {
        warn!("k_up = {k_up} exceeds the node count; clamped to {n}");
        n
    } else {
        k_up
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norms: Vec<f64> = (0..n).map(|i| (g.out_degree(i) + g.in_degree(i)) as f64).collect();

    // k-means++ seeding over nodes.
    let mut seeds = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let mut dist = SeedDistances::new(g);
    let first = rng.random_range(0..n);
    seeds.push(first);
    chosen[first] = true;
    dist.overlap_with(first);
    let mut d2: Vec<f64> = (0..n)
        .map(|i| norms[i] + norms[first] - 2.0 * dist.common[i] as f64)
        .collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // Every node coincides with a seed; fall back to an unused node.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        seeds.push(next);
        chosen[next] = true;
        dist.overlap_with(next);
        for i in 0..n {
            let d = norms[i] + norms[next] - 2.0 * dist.common[i] as f64;
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    // Centers stored feature-major: `centers[f * k + c]`, features
    // `0..n` for successors and `n..2n` for predecessors.
    let mut centers = vec![0.0f64; 2 * n * k];
    for (c, &s) in seeds.iter().enumerate() {
        for &j in g.successors(s) {
            centers[j as usize * k + c] = 1.0;
        }
        for &j in g.predecessors(s) {
            centers[(n + j as usize) * k + c] = 1.0;
        }
    }
    let mut center_norms: Vec<f64> = seeds.iter().map(|&s| norms[s]).collect();

    let mut assignment = vec![0usize; n];
    let mut scores = vec![0.0f64; k];
    for it in 0..iters {
        for (i, slot) in assignment.iter_mut().enumerate() {
            scores.copy_from_slice(&center_norms);
            for &j in g.successors(i) {
                let col = &centers[j as usize * k..j as usize * k + k];
                for (s, &v) in scores.iter_mut().zip(col) {
                    *s -= 2.0 * v;
                }
            }
            for &j in g.predecessors(i) {
                let f = n + j as usize;
                let col = &centers[f * k..f * k + k];
                for (s, &v) in scores.iter_mut().zip(col) {
                    *s -= 2.0 * v;
                }
            }
            let mut best = 0;
            for c in 1..k {
                if scores[c] < scores[best] {
                    best = c;
                }
            }
            *slot = best;
        }
        if it + 1 == iters {
            break;
        }

        let mut counts = vec![0usize; k];
        for &c in &assignment {
            counts[c] += 1;
        }
        let mut next = vec![0.0f64; 2 * n * k];
        for (i, &c) in assignment.iter().enumerate() {
            for &j in g.successors(i) {
                next[j as usize * k + c] += 1.0;
            }
            for &j in g.predecessors(i) {
                next[(n + j as usize) * k + c] += 1.0;
            }
        }
        for f in 0..2 * n {
            for c in 0..k {
                let ix = f * k + c;
                next[ix] = if counts[c] == 0 {
                    centers[ix]
                } else {
                    next[ix] / counts[c] as f64
                };
            }
        }
        centers = next;
        center_norms.iter_mut().for_each(|v| *v = 0.0);
        for f in 0..2 * n {
            for c in 0..k {
                let v = centers[f * k + c];
                center_norms[c] += v * v;
            }
        }
    }
    Partition::compact(&assignment)
}

/// Per-restart outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    pub seed: u64,
    pub initial_k: usize,
    pub k: usize,
    pub icl: f64,
    pub sweeps: usize,
    pub moves: usize,
    pub merges: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct RestartsResult {
    pub best: FitResult,
    pub best_index: usize,
    pub restarts: Vec<RestartSummary>,
}

impl RestartsResult {
    pub fn partition(&self) -> &Partition {
        &self.best.partition
    }

    pub fn k(&self) -> usize {
        self.best.k()
    }

    pub fn icl(&self) -> f64 {
        self.best.icl
    }
}

/// Runs one optimization from restart `index` of `cfg`.
pub fn fit_single(
    g: &DirectedGraph,
    priors: &Priors,
    cfg: &InitConfig,
    opts: &FitOptions,
    index: usize,
) -> Result<(FitResult, RestartSummary)> {
    let z0 = cfg.initial_partition(g, index)?;
    let seed = cfg.restart_seed(index);
    let mut state = FitState::new(g, &z0, *priors, seed)?;
    let converged = state.optimize(opts);
    let result = state.into_result(converged);
    debug!(
        "restart {index}: K {} -> {}, icl {:.6}, {} sweeps",
        z0.k(),
        result.k(),
        result.icl,
        result.sweeps
    );
    let summary = RestartSummary {
        index,
        seed,
        initial_k: z0.k(),
        k: result.k(),
        icl: result.icl,
        sweeps: result.sweeps,
        moves: result.moves,
        merges: result.merges,
        converged,
    };
    Ok((result, summary))
}

/// Best of `cfg.restarts` independent fits by final ICL; ties go to the
/// smaller K, then to the earlier restart.
pub fn fit_with_restarts(
    g: &DirectedGraph,
    priors: &Priors,
    cfg: &InitConfig,
    opts: &FitOptions,
) -> Result<RestartsResult> {
    cfg.validate()?;
    let runs: Vec<(FitResult, RestartSummary)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| fit_single(g, priors, cfg, opts, r))
        .collect::<Result<_>>()?;

    let best_index = (0..runs.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&runs[a].0, &runs[b].0);
            rb.icl
                .partial_cmp(&ra.icl)
                .unwrap_or(Ordering::Equal)
                .then(ra.k().cmp(&rb.k()))
                .then(a.cmp(&b))
        })
        .expect("at least one restart");
    let restarts = runs.iter().map(|(_, s)| s.clone()).collect();
    let best = runs.into_iter().nth(best_index).expect("index in range").0;
    Ok(RestartsResult {
        best,
        best_index,
        restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_init_basics() {
        let one = random_init(10, 1, 4).unwrap();
        assert_eq!(one.k(), 1);
        assert!(random_init(10, 0, 4).is_err());
        assert_eq!(random_init(50, 7, 9).unwrap(), random_init(50, 7, 9).unwrap());
        let big = random_init(1000, 20, 11).unwrap();
        assert_eq!(big.k(), 20);
    }

    fn two_cliques() -> DirectedGraph {
        let mut edges = Vec::new();
        for block in [0..6usize, 6..12] {
            for i in block.clone() {
                for j in block.clone() {
                    if i != j {
                        edges.push((i, j));
                    }
                }
            }
        }
        DirectedGraph::from_edges(12, edges).unwrap()
    }

    #[test]
    fn kmeans_separates_cliques() {
        let g = two_cliques();
        for seed in 0..10 {
            let z = kmeans_init(&g, 2, 3, seed).unwrap();
            assert_eq!(z.k(), 2);
            assert!((0..6).all(|i| z.label(i) == z.label(0)));
            assert!((6..12).all(|i| z.label(i) == z.label(6)));
            assert_ne!(z.label(0), z.label(6));
        }
    }

    #[test]
    fn kmeans_clamps_and_is_deterministic() {
        let g = two_cliques();
        assert!(kmeans_init(&g, 50, 2, 0).unwrap().k() <= 12);
        assert_eq!(kmeans_init(&g, 4, 2, 5).unwrap(), kmeans_init(&g, 4, 2, 5).unwrap());
        assert!(kmeans_init(&g, 0, 2, 5).is_err());
    }

    #[test]
    fn kmeans_on_empty_graph_collapses() {
        let g = DirectedGraph::from_edges(8, []).unwrap();
        assert_eq!(kmeans_init(&g, 3, 2, 1).unwrap().k(), 1);
    }
}
