//! Shared oracles and fixtures for the integration suites.
#![allow(dead_code)]

pub mod props;

use greedy_icl::{compute_stats, make_setting, sample_sbm, DirectedGraph, Partition, Priors, SettingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

/// Dense adjacency, used only by the oracles.
pub struct Dense {
    pub n: usize,
    pub adj: Vec<Vec<bool>>,
}

impl Dense {
    pub fn of(g: &DirectedGraph) -> Self {
        let n = g.n_nodes();
        let mut adj = vec![vec![false; n]; n];
        for (s, d) in g.edges() {
            adj[s][d] = true;
        }
        Self { n, adj }
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Exact ICL straight from its closed form: every ordered pair is visited,
/// and block counts are never cached.
pub fn oracle_icl(d: &Dense, labels: &[usize], p: &Priors) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let n = d.n;
    let mut sizes = vec![0usize; k];
    for &c in labels {
        sizes[c] += 1;
    }
    let mut ones = vec![vec![0usize; k]; k];
    let mut zeros = vec![vec![0usize; k]; k];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if d.adj[i][j] {
                ones[labels[i]][labels[j]] += 1;
            } else {
                zeros[labels[i]][labels[j]] += 1;
            }
        }
    }
    let kf = k as f64;
    let mut v = ln_gamma(kf * p.n0) - kf * ln_gamma(p.n0) - ln_gamma(kf * p.n0 + n as f64);
    for &m in &sizes {
        v += ln_gamma(p.n0 + m as f64);
    }
    for a in 0..k {
        for b in 0..k {
            v += ln_beta(p.eta0 + ones[a][b] as f64, p.zeta0 + zeros[a][b] as f64)
                - ln_beta(p.eta0, p.zeta0);
        }
    }
    v
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            grow(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    grow(&mut vec![0], 0, n, &mut out);
    out
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> DirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::from_edges(n, edges).unwrap()
}

/// Two-community graph with dense diagonal blocks.
pub fn planted_pair(n: usize, p_in: f64, p_out: f64, seed: u64) -> DirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = if (i < n / 2) == (j < n / 2) { p_in } else { p_out };
            if i != j && rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::from_edges(n, edges).unwrap()
}

/// Uniform labels in `0..k` with every cluster occupied (requires `n >= k`).
pub fn random_partition(n: usize, k: usize, rng: &mut impl Rng) -> Partition {
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    for i in (1..n).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    Partition::new(labels, k).unwrap()
}

pub fn random_priors(rng: &mut impl Rng) -> Priors {
    let pick = |rng: &mut dyn rand::RngCore| [0.5, 1.0, 2.0][rng.random_range(0..3)];
    Priors::new(pick(rng), pick(rng), pick(rng)).unwrap()
}

pub fn toy() -> DirectedGraph {
    DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
}

/// Mean within- and between-community densities of setting 1 over the
/// planted partitions of `seeds` samples.
pub fn setting_one_mean_densities(seeds: u64) -> (f64, f64) {
    let (mut within, mut between) = (0.0, 0.0);
    for seed in 0..seeds {
        let cfg = SettingConfig::new(1).unwrap().with_seed(seed);
        let (g, planted) = sample_sbm(&make_setting(&cfg).unwrap()).unwrap();
        let s = compute_stats(&g, &planted).unwrap();
        let (mut e_in, mut p_in, mut e_out, mut p_out) = (0, 0, 0, 0);
        for a in 0..s.k() {
            for b in 0..s.k() {
                if a == b {
                    e_in += s.edge_count(a, b);
                    p_in += s.pairs(a, b);
                } else {
                    e_out += s.edge_count(a, b);
                    p_out += s.pairs(a, b);
                }
            }
        }
        within += e_in as f64 / p_in as f64;
        between += e_out as f64 / p_out as f64;
    }
    (within / seeds as f64, between / seeds as f64)
}

/// Blocks of a 500-node, 4-cluster setting-4 sample whose observed density
/// is more than three standard errors from its probability.
pub fn density_outliers(seed: u64) -> Vec<String> {
    let cfg = SettingConfig::new(4).unwrap().with_size(500, 4).with_seed(seed);
    let params = make_setting(&cfg).unwrap();
    let (g, planted) = sample_sbm(&params).unwrap();
    let s = compute_stats(&g, &planted).unwrap();
    let mut off = Vec::new();
    for a in 0..s.k() {
        for b in 0..s.k() {
            let pairs = s.pairs(a, b) as f64;
            let pi = params.pi[a][b];
            let se = (pi * (1.0 - pi) / pairs).sqrt();
            let observed = s.edge_count(a, b) as f64 / pairs;
            if (observed - pi).abs() > 3.0 * se + 1e-12 {
                off.push(format!("block ({a},{b}): {observed:.4} vs {pi:.4}"));
            }
        }
    }
    off
}
