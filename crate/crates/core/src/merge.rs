//! Hierarchical merge pass run after swap convergence.

use crate::error::{Error, Result};
use crate::greedy::{FitState, Phase, TraceEntry, ACCEPT_EPSILON};
use crate::special::ln_gamma;

/// Change in ICL for fusing `source` into `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeDelta {
    pub source: usize,
    pub target: usize,
    pub delta: f64,
}

/// ICL of the partition with clusters `g` and `h` fused, minus the current
/// ICL. `O(K)`.
pub fn delta_merge(state: &FitState<'_>, g: usize, h: usize) -> Result<f64> {
    let k = state.k();
    if g >= k || h >= k {
        return Err(Error::invalid(format!("cluster index out of range (K = {k})")));
    }
    if g == h {
        return Err(Error::invalid("cannot merge a cluster with itself"));
    }
    Ok(merge_delta_unchecked(state, g, h))
}

fn merge_delta_unchecked(s: &FitState<'_>, g: usize, h: usize) -> f64 {
    let n0 = s.priors.n0;
    let (mg, mh) = (s.sizes[g], s.sizes[h]);
    let dirichlet = ln_gamma(n0 + (mg + mh) as f64) - ln_gamma(n0 + mg as f64) - ln_gamma(n0 + mh as f64)
        + ln_gamma(n0)
        + s.dimension_drop_term();

    let mut blocks = 0.0;
    // The row and column of g vanish.
    for x in 0..s.k {
        blocks += s.lnb_prior - s.block_lnb[s.idx(g, x)];
        if x != g {
            blocks += s.lnb_prior - s.block_lnb[s.idx(x, g)];
        }
    }
    // The row and column of h absorb them.
    let merged = mg + mh;
    for l in 0..s.k {
        if l == g || l == h {
            continue;
        }
        let ml = s.sizes[l];
        blocks += s.term(h, l, s.edge(h, l) + s.edge(g, l), merged * ml);
        blocks += s.term(l, h, s.edge(l, h) + s.edge(l, g), ml * merged);
    }
    let inner = s.edge(h, h) + s.edge(g, h) + s.edge(h, g) + s.edge(g, g);
    blocks += s.term(h, h, inner, merged * (merged - 1));

    dirichlet + blocks
}

/// Fuses cluster `g` into `h`, keeping counts, cache and ICL in sync.
pub fn apply_merge(state: &mut FitState<'_>, g: usize, h: usize) -> Result<MergeDelta> {
    let delta = delta_merge(state, g, h)?;
    let k = state.k;
    for l in 0..k {
        let (gl, hl) = (state.idx(g, l), state.idx(h, l));
        state.edges[hl] += state.edges[gl];
        state.edges[gl] = 0;
    }
    for x in 0..k {
        let (xg, xh) = (state.idx(x, g), state.idx(x, h));
        state.edges[xh] += state.edges[xg];
        state.edges[xg] = 0;
    }
    state.sizes[h] += state.sizes[g];
    state.sizes[g] = 0;
    let moved = std::mem::take(&mut state.members[g]);
    for &node in &moved {
        state.labels[node] = h;
    }
    state.members[h].extend(moved);
    state.reindex_members(h);

    state.refresh_cross(g);
    state.refresh_cross(h);
    state.remove_empty_cluster(g);
    state.icl += delta;
    state.merges += 1;
    Ok(MergeDelta {
        source: g,
        target: h,
        delta,
    })
}

/// Best merge over all unordered pairs `g < h`; ties go to the
/// lexicographically smallest pair.
pub fn best_merge(state: &FitState<'_>) -> Option<MergeDelta> {
    let mut best: Option<MergeDelta> = None;
    for g in 0..state.k {
        for h in g + 1..state.k {
            let delta = merge_delta_unchecked(state, g, h);
            if best.is_none_or(|b| delta > b.delta) {
                best = Some(MergeDelta {
                    source: g,
                    target: h,
                    delta,
                });
            }
        }
    }
    best
}

/// Repeatedly applies the best strictly improving merge. Returns the number
/// of merges.
pub fn merge_pass(state: &mut FitState<'_>) -> usize {
    let mut accepted = 0;
    while let Some(best) = best_merge(state) {
        if best.delta <= ACCEPT_EPSILON {
            break;
        }
        apply_merge(state, best.source, best.target).expect("indices from best_merge are valid");
        accepted += 1;
    }
    state.resync_icl();
    let pass = state.trace.iter().filter(|t| t.phase == Phase::Merge).count() + 1;
    state.trace.push(TraceEntry {
        phase: Phase::Merge,
        pass,
        accepted,
        k: state.k,
        icl: state.icl,
    });
    accepted
}
