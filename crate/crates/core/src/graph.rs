//! Sparse directed binary graphs without self-loops.
//!
//! Both successor and predecessor lists are kept in CSR form with sorted
//! neighbor ids, so a graph with 10^4 nodes and 10^6 edges costs a few
//! megabytes and never materializes the adjacency matrix.

use std::fmt::Write as _;
use std::io::BufRead;

use log::warn;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Immutable directed graph on nodes `0..n_nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n_nodes: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl DirectedGraph {
    /// Builds a graph from `(src, dst)` pairs. Duplicate edges are collapsed
    /// and self-loops dropped; ids outside `0..n_nodes` are an error.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n_nodes > u32::MAX as usize {
            return Err(Error::invalid(format!("too many nodes: {n_nodes}")));
        }
        let mut list = Vec::new();
        for (s, d) in edges {
            if s >= n_nodes || d >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({s}, {d}) out of range for {n_nodes} nodes"
                )));
            }
            if s != d {
                list.push((s as u32, d as u32));
            }
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted_unique(n_nodes, &list))
    }

    /// `edges` must be sorted, duplicate-free, loop-free and in range.
    fn from_sorted_unique(n_nodes: usize, edges: &[(u32, u32)]) -> Self {
        let mut out_offsets = vec![0usize; n_nodes + 1];
        let mut in_offsets = vec![0usize; n_nodes + 1];
        for &(s, d) in edges {
            out_offsets[s as usize + 1] += 1;
            in_offsets[d as usize + 1] += 1;
        }
        for i in 0..n_nodes {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = edges.iter().map(|&(_, d)| d).collect();

        // Sources come out sorted per target because `edges` is sorted by source.
        let mut in_sources = vec![0u32; edges.len()];
        let mut cursor = in_offsets.clone();
        for &(s, d) in edges {
            in_sources[cursor[d as usize]] = s;
            cursor[d as usize] += 1;
        }

        Self {
            n_nodes,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of directed edges `L`.
    pub fn n_edges(&self) -> usize {
        self.out_targets.len()
    }

    /// Sorted successors of `i`.
    #[inline]
    pub fn successors(&self, i: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// Sorted predecessors of `i`.
    #[inline]
    pub fn predecessors(&self, i: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        src < self.n_nodes && self.successors(src).binary_search(&(dst as u32)).is_ok()
    }

    /// All edges in `(src, dst)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes).flat_map(move |i| self.successors(i).iter().map(move |&j| (i, j as usize)))
    }
}

/// Result of reading an edge list, with the counts of lines that did not
/// contribute a new edge.
#[derive(Debug, Clone)]
pub struct ParsedEdgeList {
    pub graph: DirectedGraph,
    pub duplicates: usize,
    pub self_loops: usize,
}

fn parse_header(comment: &str) -> Option<&str> {
    let body = comment.trim_start_matches('#').trim();
    let (key, value) = body.split_once('=')?;
    (key.trim() == "nodes").then(|| value.trim())
}

fn parse_id(token: &str, line: usize) -> Result<usize> {
    let value: i64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("expected integer node id, got {token:?}")))?;
    if value < 0 {
        return Err(Error::parse(line, format!("negative node id {value}")));
    }
    usize::try_from(value).map_err(|_| Error::parse(line, format!("node id {value} too large")))
}

/// Reads a `src dst` edge list.
///
/// Tokens are separated by whitespace or commas, lines starting with `#` are
/// comments, and a `# nodes=N` comment fixes the node count (otherwise it is
/// one past the largest id). Duplicates are collapsed and self-loops dropped;
/// both are counted in the returned report.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<ParsedEdgeList> {
    let mut declared: Option<usize> = None;
    let mut max_id: Option<usize> = None;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut self_loops = 0;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(value) = parse_header(trimmed) {
                let n = value
                    .parse::<usize>()
                    .map_err(|_| Error::parse(lineno, format!("bad node count {value:?}")))?;
                declared = Some(n);
            }
            continue;
        }
        let tokens: Vec<&str> = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("expected 2 node ids, found {} tokens", tokens.len()),
            ));
        }
        let src = parse_id(tokens[0], lineno)?;
        let dst = parse_id(tokens[1], lineno)?;
        if src > u32::MAX as usize - 1 || dst > u32::MAX as usize - 1 {
            return Err(Error::parse(lineno, "node id exceeds 32-bit range"));
        }
        if let Some(n) = declared {
            if src >= n || dst >= n {
                return Err(Error::parse(
                    lineno,
                    format!("node id out of range for declared nodes={n}"),
                ));
            }
        }
        max_id = Some(max_id.map_or(src.max(dst), |m: usize| m.max(src).max(dst)));
        if src == dst {
            self_loops += 1;
            continue;
        }
        edges.push((src as u32, dst as u32));
    }

    let n_nodes = match (declared, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::invalid(format!("node id {m} exceeds declared nodes={n}")));
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };

    let raw = edges.len();
    edges.sort_unstable();
    edges.dedup();
    let duplicates = raw - edges.len();
    if self_loops > 0 {
        warn!("dropped {self_loops} self-loop(s)");
    }
    if duplicates > 0 {
        warn!("collapsed {duplicates} duplicate edge(s)");
    }

    Ok(ParsedEdgeList {
        graph: DirectedGraph::from_sorted_unique(n_nodes, &edges),
        duplicates,
        self_loops,
    })
}

/// Convenience wrapper over [`parse_edge_list`] for in-memory text.
pub fn parse_edge_list_str(text: &str) -> Result<ParsedEdgeList> {
    parse_edge_list(text.as_bytes())
}

/// One `src dst` line per edge, sorted by `(src, dst)`.
pub fn write_edge_list(g: &DirectedGraph) -> String {
    let mut out = String::with_capacity(g.n_edges() * 10);
    for (s, d) in g.edges() {
        let _ = writeln!(out, "{s} {d}");
    }
    out
}

/// Same as [`write_edge_list`] with a leading `# nodes=N` header, so that
/// isolated high-id nodes survive a round trip.
pub fn write_edge_list_with_header(g: &DirectedGraph) -> String {
    format!("# nodes={}\n{}", g.n_nodes(), write_edge_list(g))
}

/// Per-cluster counts of the successors and predecessors of node `i`.
///
/// `out_counts[l]` is the number of edges `i -> j` with `j` in cluster `l`;
/// `in_counts[k]` the number of edges `j -> i` with `j` in cluster `k`.
pub fn node_cluster_edge_counts(
    g: &DirectedGraph,
    z: &Partition,
    i: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if z.n_nodes() != g.n_nodes() {
        return Err(Error::invalid(format!(
            "partition covers {} nodes, graph has {}",
            z.n_nodes(),
            g.n_nodes()
        )));
    }
    if i >= g.n_nodes() {
        return Err(Error::invalid(format!("node {i} out of range")));
    }
    let mut out_counts = vec![0; z.k()];
    let mut in_counts = vec![0; z.k()];
    fill_cluster_counts(g, z.labels(), i, &mut out_counts, &mut in_counts);
    Ok((out_counts, in_counts))
}

/// Adds the neighbor cluster counts of `i` into zeroed buffers.
#[inline]
pub(crate) fn fill_cluster_counts(
    g: &DirectedGraph,
    labels: &[usize],
    i: usize,
    out_counts: &mut [usize],
    in_counts: &mut [usize],
) {
    for &j in g.successors(i) {
        out_counts[labels[j as usize]] += 1;
    }
    for &j in g.predecessors(i) {
        in_counts[labels[j as usize]] += 1;
    }
}
