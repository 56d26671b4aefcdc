//! Partition comparison: entropy, mutual information and NMI, in nats.

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Joint cluster counts of two partitions of the same nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTable {
    n: usize,
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    counts: Vec<usize>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
}

impl ConfusionTable {
    pub fn new(est: &Partition, truth: &Partition) -> Result<Self> {
        if est.n_nodes() != truth.n_nodes() {
            return Err(Error::invalid(format!(
                "partitions cover {} and {} nodes",
                est.n_nodes(),
                truth.n_nodes()
            )));
        }
        let (rows, cols) = (est.k(), truth.k());
        let mut counts = vec![0usize; rows * cols];
        for (&a, &b) in est.labels().iter().zip(truth.labels()) {
            counts[a * cols + b] += 1;
        }
        Ok(Self {
            n: est.n_nodes(),
            rows,
            cols,
            counts,
            row_sums: est.sizes(),
            col_sums: truth.sizes(),
        })
    }

    pub fn count(&self, k: usize, l: usize) -> usize {
        self.counts[k * self.cols + l]
    }

    /// `p_kl`: fraction of nodes in cluster `k` of the estimate and `l` of
    /// the truth.
    pub fn joint(&self, k: usize, l: usize) -> f64 {
        self.count(k, l) as f64 / self.n as f64
    }

    pub fn marginal_est(&self, k: usize) -> f64 {
        self.row_sums[k] as f64 / self.n as f64
    }

    pub fn marginal_truth(&self, l: usize) -> f64 {
        self.col_sums[l] as f64 / self.n as f64
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(ix, &c)| (ix / self.cols, ix % self.cols, c))
    }

    /// Both partitions agree up to a relabelling.
    fn is_bijection(&self) -> bool {
        self.rows == self.cols && self.nonzero().count() == self.rows
    }
}

/// Summed in sorted order, independent of how clusters are numbered.
fn entropy_of_counts(counts: &[usize], n: usize) -> f64 {
    let nf = n as f64;
    let mut sorted: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    let h: f64 = sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

pub fn entropy(z: &Partition) -> f64 {
    entropy_of_counts(&z.sizes(), z.n_nodes())
}

/// Terms are summed in sorted order so that swapping the arguments gives a
/// bit-identical result.
fn mutual_information_of(t: &ConfusionTable) -> f64 {
    let nf = t.n as f64;
    let mut terms: Vec<f64> = t
        .nonzero()
        .map(|(k, l, c)| {
            let c = c as f64;
            let outer = t.row_sums[k] as f64 * t.col_sums[l] as f64;
            c / nf * (c * nf / outer).ln()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().max(0.0)
}

pub fn mutual_information(a: &Partition, b: &Partition) -> Result<f64> {
    Ok(mutual_information_of(&ConfusionTable::new(a, b)?))
}

/// `I(est, truth) / max(H(est), H(truth))`, defined as 0 when both
/// partitions are a single cluster.
pub fn nmi(est: &Partition, truth: &Partition) -> Result<f64> {
    let t = ConfusionTable::new(est, truth)?;
    let h = entropy_of_counts(&t.row_sums, t.n).max(entropy_of_counts(&t.col_sums, t.n));
    if h == 0.0 {
        return Ok(0.0);
    }
    if t.is_bijection() {
        return Ok(1.0);
    }
    Ok((mutual_information_of(&t) / h).clamp(0.0, 1.0))
}
