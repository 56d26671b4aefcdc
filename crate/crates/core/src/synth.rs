//! Planted-partition SBM sampling and the four benchmark settings.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    /// Cluster proportions, summing to 1.
    pub alpha: Vec<f64>,
    /// `pi[k][l]`: probability of an edge from a node of `k` to a node of `l`.
    pub pi: Vec<Vec<f64>>,
    pub n_nodes: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SbmParams {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.alpha.len();
        if k == 0 {
            return Err(Error::invalid("alpha must have at least one entry"));
        }
        if self.n_nodes == 0 {
            return Err(Error::invalid("n_nodes must be at least 1"));
        }
        if self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::invalid("alpha entries must be non-negative"));
        }
        let total: f64 = self.alpha.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("alpha sums to {total}, expected 1")));
        }
        if self.pi.len() != k || self.pi.iter().any(|row| row.len() != k) {
            return Err(Error::invalid(format!("pi must be {k} x {k}")));
        }
        if self.pi.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("pi entries must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Positions of successes among `n` Bernoulli(`p`) trials, generated by
/// geometric skips so the cost is proportional to the number of successes.
fn bernoulli_hits<R: Rng>(rng: &mut R, n: usize, p: f64, mut hit: impl FnMut(usize)) {
    if p <= 0.0 || n == 0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(hit);
        return;
    }
    let log_q = (-p).ln_1p();
    let mut pos = 0usize;
    loop {
        // U in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (n - pos) as f64 {
            return;
        }
        pos += skip as usize;
        hit(pos);
        pos += 1;
        if pos >= n {
            return;
        }
    }
}

/// Draws memberships i.i.d. from `alpha`, then every ordered pair `(i, j)`,
/// `i != j`, independently with probability `pi[z_i][z_j]`.
///
/// The planted partition has empty clusters compacted away.
pub fn sample_sbm(p: &SbmParams) -> Result<(DirectedGraph, Partition)> {
    p.validate()?;
    let k = p.k();
    let n = p.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let membership = WeightedIndex::new(&p.alpha)
        .map_err(|e| Error::invalid(format!("alpha: {e}")))?;
    let labels: Vec<usize> = (0..n).map(|_| membership.sample(&mut rng)).collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        let row = &p.pi[labels[i]];
        for (l, block) in members.iter().enumerate() {
            bernoulli_hits(&mut rng, block.len(), row[l], |t| {
                let j = block[t];
                if j != i {
                    edges.push((i, j));
                }
            });
        }
    }
    let graph = DirectedGraph::from_edges(n, edges)?;
    Ok((graph, Partition::compact(&labels)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingConfig {
    pub setting_id: u8,
    /// Community (and hub) connection probability. In setting 4 it is the
    /// upper end of the uniform draw for active blocks.
    pub beta: f64,
    pub epsilon: f64,
    pub n_nodes: usize,
    pub k: usize,
    pub seed: u64,
}

impl SettingConfig {
    /// Defaults of the named setting: `beta = 0.45`, `epsilon = 0.01`, and
    /// `(N, K)` of `(100, 5)`, `(100, 5)`, `(500, 10)`, `(10000, 50)`.
    pub fn new(setting_id: u8) -> Result<Self> {
        let (n_nodes, k) = match setting_id {
            1 | 2 => (100, 5),
            3 => (500, 10),
            4 => (10_000, 50),
            other => return Err(Error::invalid(format!("unknown setting {other}, expected 1-4"))),
        };
        Ok(Self {
            setting_id,
            beta: 0.45,
            epsilon: 0.01,
            n_nodes,
            k,
            seed: 0,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_size(mut self, n_nodes: usize, k: usize) -> Self {
        self.n_nodes = n_nodes;
        self.k = k;
        self
    }
}

/// Probability of one active block in setting 4.
fn uniform_block<R: Rng>(rng: &mut R, upper: f64) -> f64 {
    rng.random::<f64>() * upper
}

/// Full parameterization of a benchmark setting, with uniform proportions.
pub fn make_setting(cfg: &SettingConfig) -> Result<SbmParams> {
    let k = cfg.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let (beta, eps) = (cfg.beta, cfg.epsilon);
    let pi = match cfg.setting_id {
        1 | 3 => (0..k)
            .map(|a| (0..k).map(|b| if a == b { beta } else { eps }).collect())
            .collect(),
        2 => (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| if a == b || a == 0 || b == 0 { beta } else { eps })
                    .collect()
            })
            .collect(),
        4 => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut pi = vec![vec![eps; k]; k];
            for (a, row) in pi.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    if a == b || rng.random_bool(0.1) {
                        *cell = uniform_block(&mut rng, beta);
                    }
                }
            }
            pi
        }
        other => return Err(Error::invalid(format!("unknown setting {other}, expected 1-4"))),
    };
    let params = SbmParams {
        alpha: vec![1.0 / k as f64; k],
        pi,
        n_nodes: cfg.n_nodes,
        seed: cfg.seed,
    };
    params.validate()?;
    Ok(params)
}

/// `0.45, 0.43, ..., 0.03, 0.01`.
pub fn beta_grid() -> Vec<f64> {
    (0..23).map(|i| (45 - 2 * i) as f64 / 100.0).collect()
}
