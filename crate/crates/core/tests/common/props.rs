//! Property checks shared by the proptest suite and the acceptance runner.
#![allow(dead_code)]

use greedy_icl::merge::{apply_merge, delta_merge};
use greedy_icl::{
    compute_stats, fit_with_restarts, icl_exact, nmi, DirectedGraph, FitOptions, FitState, InitConfig,
    InitMethod, Partition, ACCEPT_EPSILON,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_partition, random_priors};

/// A random graph, a starting partition and a stream seed.
#[derive(Debug, Clone)]
pub struct Case {
    pub n: usize,
    pub density: f64,
    pub k: usize,
    pub seed: u64,
}

impl Case {
    pub fn graph(&self) -> DirectedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && rng.random_bool(self.density) {
                    edges.push((i, j));
                }
            }
        }
        DirectedGraph::from_edges(self.n, edges).unwrap()
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed)
    }
}

pub fn cases(max_n: usize, max_k: usize) -> impl Strategy<Value = Case> {
    (2..=max_n, 0.0..0.6f64, 1..=max_k, any::<u64>()).prop_map(|(n, density, k, seed)| Case {
        n,
        density,
        k: k.min(n),
        seed,
    })
}

fn exact(state: &FitState<'_>) -> f64 {
    icl_exact(&compute_stats(state.graph(), &state.partition()).unwrap(), state.priors())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Tallies of the incremental-delta check.
#[derive(Debug, Default, Clone, Copy)]
pub struct DeltaTally {
    pub swaps: usize,
    pub singleton_swaps: usize,
    pub merges: usize,
    pub worst: f64,
}

/// Random swaps and merges; every incremental delta must match the change
/// in exact ICL to 1e-8.
pub fn incremental_deltas(c: &Case, moves: usize, tally: &mut DeltaTally) -> Result<(), TestCaseError> {
    let g = c.graph();
    let mut rng = c.rng();
    let priors = random_priors(&mut rng);
    let z = random_partition(c.n, c.k, &mut rng);
    let mut s = FitState::new(&g, &z, priors, c.seed).unwrap();
    let mut before = exact(&s);
    for _ in 0..moves {
        if s.k() < 2 {
            break;
        }
        let merge = rng.random_bool(0.2);
        let delta = if merge {
            let a = rng.random_range(0..s.k());
            let mut b = rng.random_range(0..s.k() - 1);
            if b >= a {
                b += 1;
            }
            let predicted = delta_merge(&s, a, b).unwrap();
            let applied = apply_merge(&mut s, a, b).unwrap();
            prop_assert_eq!(predicted, applied.delta);
            tally.merges += 1;
            applied.delta
        } else {
            // Bias towards small clusters so that emptying moves are common.
            let i = if rng.random_bool(0.3) {
                let sizes = s.partition().sizes();
                let small = (0..s.k()).min_by_key(|&c| sizes[c]).unwrap();
                (0..c.n).find(|&i| s.label(i) == small).unwrap()
            } else {
                rng.random_range(0..c.n)
            };
            let mut h = rng.random_range(0..s.k() - 1);
            if h >= s.label(i) {
                h += 1;
            }
            let predicted = s.delta_swap(i, h).unwrap();
            let applied = s.apply_swap(i, h).unwrap();
            prop_assert_eq!(predicted.delta, applied.delta);
            tally.swaps += 1;
            if applied.empties_source {
                tally.singleton_swaps += 1;
            }
            applied.delta
        };
        let after = exact(&s);
        let err = (delta - (after - before)).abs();
        tally.worst = tally.worst.max(err);
        prop_assert!(err <= 1e-8, "delta {} vs exact difference {}", delta, after - before);
        prop_assert!(close(s.icl(), after, 1e-9), "tracked {} vs exact {}", s.icl(), after);
        before = after;
    }
    Ok(())
}

/// ICL does not depend on how clusters are numbered.
pub fn permutation_invariance(c: &Case) -> Result<(), TestCaseError> {
    let g = c.graph();
    let mut rng = c.rng();
    let priors = random_priors(&mut rng);
    let z = random_partition(c.n, c.k, &mut rng);
    let mut perm: Vec<usize> = (0..c.k).collect();
    for i in (1..c.k).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let a = icl_exact(&compute_stats(&g, &z).unwrap(), &priors);
    let b = icl_exact(&compute_stats(&g, &z.permuted(&perm).unwrap()).unwrap(), &priors);
    prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    Ok(())
}

/// Sizes sum to N, edge counts to L, and edges plus non-edges to N(N-1),
/// both from scratch and after incremental updates.
pub fn conservation(c: &Case) -> Result<(), TestCaseError> {
    let g = c.graph();
    let mut rng = c.rng();
    let z = random_partition(c.n, c.k, &mut rng);
    let mut s = FitState::new(&g, &z, random_priors(&mut rng), c.seed).unwrap();
    for _ in 0..20 {
        if s.k() < 2 {
            break;
        }
        let i = rng.random_range(0..c.n);
        let h = (s.label(i) + 1 + rng.random_range(0..s.k() - 1)) % s.k();
        s.apply_swap(i, h).unwrap();
    }
    let tracked = s.stats();
    let recount = compute_stats(&g, &s.partition()).unwrap();
    prop_assert_eq!(&tracked, &recount);
    for st in [&tracked, &compute_stats(&g, &z).unwrap()] {
        prop_assert_eq!(st.sizes().iter().sum::<usize>(), c.n);
        prop_assert_eq!(st.total_edges(), g.n_edges());
        let mut both = 0;
        for a in 0..st.k() {
            for b in 0..st.k() {
                both += st.edge_count(a, b) + st.non_edge_count(a, b);
            }
        }
        prop_assert_eq!(both, c.n * (c.n - 1));
    }
    Ok(())
}

/// Tracked ICL never decreases across sweeps and merge passes.
pub fn monotonicity(c: &Case) -> Result<(), TestCaseError> {
    let g = c.graph();
    let mut rng = c.rng();
    let z = random_partition(c.n, c.k, &mut rng);
    let mut s = FitState::new(&g, &z, random_priors(&mut rng), c.seed).unwrap();
    let start = s.icl();
    prop_assert!(s.optimize(&FitOptions::default()));
    let mut prev = start;
    for t in s.trace() {
        prop_assert!(t.icl >= prev - 1e-9, "ICL fell from {} to {}", prev, t.icl);
        if t.accepted > 0 {
            prop_assert!(t.icl > prev, "accepted moves without gain");
        }
        prev = t.icl;
    }
    Ok(())
}

/// After a full fit no single swap and no merge improves by more than
/// the acceptance threshold.
pub fn local_maximum_certificate(c: &Case) -> Result<(), TestCaseError> {
    let g = c.graph();
    let mut rng = c.rng();
    let z = random_partition(c.n, c.k, &mut rng);
    let mut s = FitState::new(&g, &z, random_priors(&mut rng), c.seed).unwrap();
    prop_assert!(s.optimize(&FitOptions::default()));
    for a in 0..s.k() {
        for b in 0..s.k() {
            if a != b {
                let d = delta_merge(&s, a, b).unwrap();
                prop_assert!(d <= ACCEPT_EPSILON, "merge ({}, {}) still gains {}", a, b, d);
            }
        }
    }
    for i in 0..c.n {
        for d in s.all_swap_deltas(i) {
            prop_assert!(d.delta <= ACCEPT_EPSILON, "swap of {} still gains {}", i, d.delta);
        }
    }
    Ok(())
}

pub fn label_pairs(max_n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>, u64)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(0..6usize, n),
            proptest::collection::vec(0..6usize, n),
            any::<u64>(),
        )
    })
}

/// NMI lies in [0, 1], is exactly symmetric, ignores relabelling and
/// equals 1 on a partition compared with a relabelled copy of itself.
pub fn nmi_properties(input: &(Vec<usize>, Vec<usize>, u64)) -> Result<(), TestCaseError> {
    let (a, b, seed) = input;
    let za = Partition::compact(a).unwrap();
    let zb = Partition::compact(b).unwrap();
    let v = nmi(&za, &zb).unwrap();
    prop_assert!((0.0..=1.0).contains(&v));
    prop_assert_eq!(v, nmi(&zb, &za).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
    let mut perm: Vec<usize> = (0..za.k()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let relabelled = za.permuted(&perm).unwrap();
    prop_assert_eq!(v, nmi(&relabelled, &zb).unwrap());
    if za.k() > 1 {
        prop_assert_eq!(nmi(&relabelled, &za).unwrap(), 1.0);
    }
    Ok(())
}

/// Identical seeds give identical fits.
pub fn fit_determinism(c: &Case) -> Result<(), TestCaseError> {
    let g = c.graph();
    let cfg = InitConfig {
        k_up: c.k,
        method: if c.seed.is_multiple_of(2) { InitMethod::Kmeans } else { InitMethod::Random },
        kmeans_iters: 3,
        restarts: 3,
        seed: c.seed,
    };
    let p = greedy_icl::Priors::uniform();
    let a = fit_with_restarts(&g, &p, &cfg, &FitOptions::default()).unwrap();
    let b = fit_with_restarts(&g, &p, &cfg, &FitOptions::default()).unwrap();
    prop_assert_eq!(a.partition(), b.partition());
    prop_assert_eq!(a.icl().to_bits(), b.icl().to_bits());
    prop_assert_eq!(a.best_index, b.best_index);
    Ok(())
}
