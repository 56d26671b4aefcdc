//! Greedy label-swap optimization of the exact ICL.
//!
//! A [`FitState`] owns a partition together with its block statistics and a
//! cache of the per-block Beta marginals, so the change in ICL caused by
//! moving one node is available in `O(degree + K)` per candidate cluster and
//! applied in `O(degree + K)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{fill_cluster_counts, DirectedGraph};
use crate::merge;
use crate::partition::Partition;
use crate::special::{ln_gamma, BlockLnBeta};
use crate::stats::{block_pairs, ln_partition_marginal, BlockStats, Priors};

/// Minimum ICL increase for a move to be accepted.
pub const ACCEPT_EPSILON: f64 = 1e-10;

/// Change in ICL for moving one node to `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapDelta {
    pub target: usize,
    pub delta: f64,
    /// The moving node is the only member of its cluster, which disappears.
    pub empties_source: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Swap,
    Merge,
}

/// One sweep or merge pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub pass: usize,
    pub accepted: usize,
    pub k: usize,
    pub icl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    /// Run the merge pass after swap convergence.
    pub merge: bool,
    /// After accepted merges, go back to swap sweeps until neither move
    /// type improves. When false, a single merge pass ends the fit.
    pub alternate: bool,
    /// Hard cap on swap sweeps per fit.
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            merge: true,
            alternate: true,
            max_sweeps: 1000,
        }
    }
}

/// Outcome of a single optimization run.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub partition: Partition,
    pub icl: f64,
    pub sweeps: usize,
    pub moves: usize,
    pub merges: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.partition.k()
    }
}

/// Mutable optimization state over a shared graph.
pub struct FitState<'g> {
    pub(crate) graph: &'g DirectedGraph,
    pub(crate) priors: Priors,
    pub(crate) lnb: BlockLnBeta,
    pub(crate) lnb_prior: f64,
    pub(crate) labels: Vec<usize>,
    pub(crate) k: usize,
    /// Row stride of `edges` and `block_lnb`; the initial K.
    pub(crate) cap: usize,
    pub(crate) sizes: Vec<usize>,
    pub(crate) edges: Vec<usize>,
    /// `ln B(η_kl, ζ_kl)` for the current counts.
    pub(crate) block_lnb: Vec<f64>,
    pub(crate) members: Vec<Vec<usize>>,
    position: Vec<usize>,
    pub(crate) icl: f64,
    rng: ChaCha8Rng,
    pub(crate) trace: Vec<TraceEntry>,
    pub(crate) sweeps: usize,
    pub(crate) moves: usize,
    pub(crate) merges: usize,
    out_counts: Vec<usize>,
    in_counts: Vec<usize>,
}

impl<'g> FitState<'g> {
    pub fn new(graph: &'g DirectedGraph, z0: &Partition, priors: Priors, seed: u64) -> Result<Self> {
        let n = graph.n_nodes();
        if n == 0 {
            return Err(Error::invalid("graph has no nodes"));
        }
        if z0.n_nodes() != n {
            return Err(Error::invalid(format!(
                "initial partition covers {} nodes, graph has {n}",
                z0.n_nodes()
            )));
        }
        let priors = Priors::new(priors.n0, priors.eta0, priors.zeta0)?;
        let cap = z0.k();
        let labels = z0.labels().to_vec();

        let mut sizes = vec![0; cap];
        let mut members = vec![Vec::new(); cap];
        let mut position = vec![0; n];
        for (i, &c) in labels.iter().enumerate() {
            sizes[c] += 1;
            position[i] = members[c].len();
            members[c].push(i);
        }
        let mut edges = vec![0; cap * cap];
        for (s, d) in graph.edges() {
            edges[labels[s] * cap + labels[d]] += 1;
        }

        let lnb = BlockLnBeta::new(priors.eta0, priors.zeta0, n * (n - 1));
        let lnb_prior = lnb.eval(0, 0);
        let mut state = Self {
            graph,
            priors,
            lnb,
            lnb_prior,
            labels,
            k: cap,
            cap,
            sizes,
            edges,
            block_lnb: vec![0.0; cap * cap],
            members,
            position,
            icl: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            trace: Vec::new(),
            sweeps: 0,
            moves: 0,
            merges: 0,
            out_counts: vec![0; cap],
            in_counts: vec![0; cap],
        };
        for k in 0..cap {
            for l in 0..cap {
                state.refresh_block(k, l);
            }
        }
        state.resync_icl();
        Ok(state)
    }

    pub fn graph(&self) -> &'g DirectedGraph {
        self.graph
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Tracked ICL of the current partition.
    pub fn icl(&self) -> f64 {
        self.icl
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn partition(&self) -> Partition {
        Partition::from_parts_unchecked(self.labels.clone(), self.k)
    }

    pub fn stats(&self) -> BlockStats {
        let k = self.k;
        let mut edges = Vec::with_capacity(k * k);
        for a in 0..k {
            edges.extend_from_slice(&self.edges[a * self.cap..a * self.cap + k]);
        }
        BlockStats::from_parts(self.graph.n_nodes(), self.sizes[..k].to_vec(), edges)
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    #[inline]
    pub(crate) fn idx(&self, k: usize, l: usize) -> usize {
        k * self.cap + l
    }

    #[inline]
    pub(crate) fn pairs(&self, k: usize, l: usize) -> usize {
        block_pairs(self.sizes[k], self.sizes[l], k == l)
    }

    #[inline]
    pub(crate) fn edge(&self, k: usize, l: usize) -> usize {
        self.edges[self.idx(k, l)]
    }

    /// `ln B` of block `(k, l)` with new counts, minus its cached value.
    #[inline]
    pub(crate) fn term(&self, k: usize, l: usize, edges: usize, pairs: usize) -> f64 {
        self.lnb.eval(edges, pairs) - self.block_lnb[self.idx(k, l)]
    }

    pub(crate) fn refresh_block(&mut self, k: usize, l: usize) {
        let v = self.lnb.eval(self.edge(k, l), self.pairs(k, l));
        let ix = self.idx(k, l);
        self.block_lnb[ix] = v;
    }

    pub(crate) fn refresh_cross(&mut self, c: usize) {
        for x in 0..self.k {
            self.refresh_block(c, x);
            self.refresh_block(x, c);
        }
    }

    /// ICL recomputed from the cached block terms and the cluster sizes.
    pub(crate) fn cached_icl(&self) -> f64 {
        let k = self.k;
        let mut blocks = 0.0;
        for a in 0..k {
            let row = &self.block_lnb[a * self.cap..a * self.cap + k];
            blocks += row.iter().sum::<f64>();
        }
        blocks - (k * k) as f64 * self.lnb_prior + ln_partition_marginal(&self.sizes[..k], self.priors.n0)
    }

    pub(crate) fn resync_icl(&mut self) {
        self.icl = self.cached_icl();
    }

    /// Change in the Dirichlet normalizing terms when K drops by one.
    pub(crate) fn dimension_drop_term(&self) -> f64 {
        let n0 = self.priors.n0;
        let kf = self.k as f64;
        let nf = self.graph.n_nodes() as f64;
        ln_gamma((kf - 1.0) * n0) + ln_gamma(kf * n0 + nf) - ln_gamma(kf * n0) - ln_gamma((kf - 1.0) * n0 + nf)
    }

    fn load_counts(&mut self, i: usize, out: &mut [usize], inn: &mut [usize]) {
        out[..self.k].fill(0);
        inn[..self.k].fill(0);
        fill_cluster_counts(self.graph, &self.labels, i, out, inn);
    }

    fn check_move(&self, i: usize, h: usize) -> Result<usize> {
        if i >= self.labels.len() {
            return Err(Error::invalid(format!("node {i} out of range")));
        }
        if h >= self.k {
            return Err(Error::invalid(format!("cluster {h} out of range (K = {})", self.k)));
        }
        let g = self.labels[i];
        if g == h {
            return Err(Error::invalid(format!("node {i} is already in cluster {h}")));
        }
        Ok(g)
    }

    /// Change in ICL for moving node `i` from its cluster to `h`.
    pub fn delta_swap(&self, i: usize, h: usize) -> Result<SwapDelta> {
        let g = self.check_move(i, h)?;
        let mut out = vec![0; self.k];
        let mut inn = vec![0; self.k];
        fill_cluster_counts(self.graph, &self.labels, i, &mut out, &mut inn);
        let source = SourceTerms::new(self, g, &out, &inn);
        Ok(self.target_delta(&source, h, &out, &inn))
    }

    /// Every candidate target of node `i`, in increasing cluster order.
    pub fn all_swap_deltas(&self, i: usize) -> Vec<SwapDelta> {
        let g = self.labels[i];
        let mut out = vec![0; self.k];
        let mut inn = vec![0; self.k];
        fill_cluster_counts(self.graph, &self.labels, i, &mut out, &mut inn);
        let source = SourceTerms::new(self, g, &out, &inn);
        (0..self.k)
            .filter(|&h| h != g)
            .map(|h| self.target_delta(&source, h, &out, &inn))
            .collect()
    }

    fn target_delta(&self, src: &SourceTerms, h: usize, out: &[usize], inn: &[usize]) -> SwapDelta {
        let g = src.g;
        let k = self.k;
        let mg = self.sizes[g];
        let mh = self.sizes[h];

        // Row and column of the target, excluding the g/h corners.
        let mut target_terms = 0.0;
        for l in 0..k {
            if l == g || l == h {
                continue;
            }
            let ml = self.sizes[l];
            target_terms += self.term(h, l, self.edge(h, l) + out[l], (mh + 1) * ml);
            target_terms += self.term(l, h, self.edge(l, h) + inn[l], ml * (mh + 1));
        }
        target_terms += self.term(h, h, self.edge(h, h) + out[h] + inn[h], (mh + 1) * mh);

        let n0 = self.priors.n0;
        let delta = if src.empties {
            (n0 + mh as f64).ln() - n0.ln() + src.dirichlet + src.blocks + target_terms
        } else {
            // Source row/column terms were summed over every l != g; swap the
            // l = h entries for the true corner blocks.
            let row_gh_generic = self.term(g, h, self.edge(g, h) - out[h], (mg - 1) * mh);
            let col_hg_generic = self.term(h, g, self.edge(h, g) - inn[h], mh * (mg - 1));
            let corner_gh = self.term(g, h, self.edge(g, h) - out[h] + inn[g], (mg - 1) * (mh + 1));
            let corner_hg = self.term(h, g, self.edge(h, g) + out[g] - inn[h], (mh + 1) * (mg - 1));
            (n0 + mh as f64).ln() - (n0 + mg as f64 - 1.0).ln()
                + src.blocks
                + (corner_gh - row_gh_generic)
                + (corner_hg - col_hg_generic)
                + target_terms
        };
        SwapDelta {
            target: h,
            delta,
            empties_source: src.empties,
        }
    }

    /// Best strictly improving move for node `i`, if any. Ties go to the
    /// smallest cluster index.
    fn best_swap(&mut self, i: usize, out: &[usize], inn: &[usize]) -> Option<SwapDelta> {
        let g = self.labels[i];
        let source = SourceTerms::new(self, g, out, inn);
        let mut best: Option<SwapDelta> = None;
        for h in 0..self.k {
            if h == g {
                continue;
            }
            let d = self.target_delta(&source, h, out, inn);
            if best.is_none_or(|b| d.delta > b.delta) {
                best = Some(d);
            }
        }
        best.filter(|b| b.delta > ACCEPT_EPSILON)
    }

    /// Moves node `i` to cluster `h` and returns the ICL change applied.
    pub fn apply_swap(&mut self, i: usize, h: usize) -> Result<SwapDelta> {
        let d = self.delta_swap(i, h)?;
        let mut out = std::mem::take(&mut self.out_counts);
        let mut inn = std::mem::take(&mut self.in_counts);
        self.load_counts(i, &mut out, &mut inn);
        self.move_node(i, h, &out, &inn, d.delta);
        self.out_counts = out;
        self.in_counts = inn;
        Ok(d)
    }

    fn move_node(&mut self, i: usize, h: usize, out: &[usize], inn: &[usize], delta: f64) {
        let g = self.labels[i];
        let k = self.k;
        for l in 0..k {
            let (gl, hl) = (self.idx(g, l), self.idx(h, l));
            self.edges[gl] -= out[l];
            self.edges[hl] += out[l];
        }
        for x in 0..k {
            let (xg, xh) = (self.idx(x, g), self.idx(x, h));
            self.edges[xg] -= inn[x];
            self.edges[xh] += inn[x];
        }
        self.sizes[g] -= 1;
        self.sizes[h] += 1;

        let pos = self.position[i];
        self.members[g].swap_remove(pos);
        if let Some(&moved) = self.members[g].get(pos) {
            self.position[moved] = pos;
        }
        self.position[i] = self.members[h].len();
        self.members[h].push(i);
        self.labels[i] = h;

        self.refresh_cross(g);
        self.refresh_cross(h);
        if self.sizes[g] == 0 {
            self.remove_empty_cluster(g);
        }
        self.icl += delta;
        self.moves += 1;
    }

    pub(crate) fn reindex_members(&mut self, c: usize) {
        for (p, &node) in self.members[c].iter().enumerate() {
            self.position[node] = p;
        }
    }

    /// Drops empty cluster `g`, renaming the last cluster to `g`.
    pub(crate) fn remove_empty_cluster(&mut self, g: usize) {
        debug_assert_eq!(self.sizes[g], 0);
        let last = self.k - 1;
        if g != last {
            for l in 0..self.k {
                let (src, dst) = (self.idx(last, l), self.idx(g, l));
                self.edges[dst] = self.edges[src];
                self.block_lnb[dst] = self.block_lnb[src];
            }
            for x in 0..self.k {
                let (src, dst) = (self.idx(x, last), self.idx(x, g));
                self.edges[dst] = self.edges[src];
                self.block_lnb[dst] = self.block_lnb[src];
            }
            self.sizes[g] = self.sizes[last];
            self.members[g] = std::mem::take(&mut self.members[last]);
            for &node in &self.members[g] {
                self.labels[node] = g;
            }
        }
        for x in 0..self.k {
            let (a, b) = (self.idx(last, x), self.idx(x, last));
            self.edges[a] = 0;
            self.edges[b] = 0;
        }
        self.sizes[last] = 0;
        self.k -= 1;
    }

    /// One pass over all nodes in a fresh random order; returns the number
    /// of accepted moves.
    pub fn greedy_sweep(&mut self) -> usize {
        let n = self.graph.n_nodes();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);

        let mut out = std::mem::take(&mut self.out_counts);
        let mut inn = std::mem::take(&mut self.in_counts);
        let mut accepted = 0;
        for &i in &order {
            if self.k < 2 {
                break;
            }
            self.load_counts(i, &mut out, &mut inn);
            if let Some(best) = self.best_swap(i, &out, &inn) {
                self.move_node(i, best.target, &out, &inn, best.delta);
                accepted += 1;
            }
        }
        self.out_counts = out;
        self.in_counts = inn;

        self.resync_icl();
        self.sweeps += 1;
        self.trace.push(TraceEntry {
            phase: Phase::Swap,
            pass: self.sweeps,
            accepted,
            k: self.k,
            icl: self.icl,
        });
        accepted
    }

    /// Sweeps until one accepts no move or `max_sweeps` total sweeps ran.
    /// Returns whether the swap phase converged.
    pub fn run_sweeps(&mut self, max_sweeps: usize) -> bool {
        while self.sweeps < max_sweeps {
            if self.greedy_sweep() == 0 {
                return true;
            }
        }
        false
    }

    /// Swap sweeps to convergence, then merges, alternating per `opts`.
    pub fn optimize(&mut self, opts: &FitOptions) -> bool {
        loop {
            if !self.run_sweeps(opts.max_sweeps) {
                return false;
            }
            if !opts.merge {
                return true;
            }
            let merged = merge::merge_pass(self);
            if merged == 0 || !opts.alternate {
                return true;
            }
        }
    }

    pub fn into_result(self, converged: bool) -> FitResult {
        FitResult {
            partition: self.partition(),
            icl: self.icl,
            sweeps: self.sweeps,
            moves: self.moves,
            merges: self.merges,
            converged,
            trace: self.trace,
        }
    }
}

/// Terms of a candidate move that do not depend on the target cluster.
struct SourceTerms {
    g: usize,
    empties: bool,
    /// Case 1: source row and column with the moving node removed, summed
    /// over every other cluster, plus the (g, g) block. Case 2: removal of
    /// the source row and column.
    blocks: f64,
    /// Case 2 only: Dirichlet change from the drop in dimension.
    dirichlet: f64,
}

impl SourceTerms {
    fn new(s: &FitState<'_>, g: usize, out: &[usize], inn: &[usize]) -> Self {
        let mg = s.sizes[g];
        if mg == 1 {
            let mut blocks = 0.0;
            for x in 0..s.k {
                blocks += s.lnb_prior - s.block_lnb[s.idx(g, x)];
                if x != g {
                    blocks += s.lnb_prior - s.block_lnb[s.idx(x, g)];
                }
            }
            return Self {
                g,
                empties: true,
                blocks,
                dirichlet: s.dimension_drop_term(),
            };
        }
        let mut blocks = s.term(g, g, s.edge(g, g) - out[g] - inn[g], (mg - 1) * (mg - 2));
        for l in 0..s.k {
            if l == g {
                continue;
            }
            let ml = s.sizes[l];
            blocks += s.term(g, l, s.edge(g, l) - out[l], (mg - 1) * ml);
            blocks += s.term(l, g, s.edge(l, g) - inn[l], ml * (mg - 1));
        }
        Self {
            g,
            empties: false,
            blocks,
            dirichlet: 0.0,
        }
    }
}

/// Swap sweeps from `z0` until a full pass accepts no move (no merges).
pub fn greedy_fit(g: &DirectedGraph, z0: &Partition, p: &Priors, seed: u64) -> Result<FitResult> {
    let mut state = FitState::new(g, z0, *p, seed)?;
    let converged = state.run_sweeps(FitOptions::default().max_sweeps);
    Ok(state.into_result(converged))
}
