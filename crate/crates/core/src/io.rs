//! Partition files: one `node cluster` pair per line.
//!
//! Lines may use whitespace or commas as separators; `#` starts a comment.
//! Every node `0..N` must appear exactly once. Cluster ids need not be
//! dense and are compacted in increasing order.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Reads a partition file. With `n_nodes` given, node ids must cover exactly
/// `0..n_nodes`; otherwise `N` is one past the largest id.
pub fn read_partition<R: BufRead>(reader: R, n_nodes: Option<usize>) -> Result<Partition> {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (ix, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = ix + 1;
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("expected `node cluster`, found {} fields", tokens.len()),
            ));
        }
        let parse = |t: &str, what: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("{what} `{t}` is not a non-negative integer")))
        };
        pairs.push((parse(tokens[0], "node")?, parse(tokens[1], "cluster")?, lineno));
    }
    let n = match n_nodes {
        Some(n) => n,
        None => pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0),
    };
    if n == 0 {
        return Err(Error::invalid("partition file assigns no nodes"));
    }
    let mut labels = vec![usize::MAX; n];
    for (node, cluster, lineno) in pairs {
        if node >= n {
            return Err(Error::parse(lineno, format!("node {node} out of range for N = {n}")));
        }
        if labels[node] != usize::MAX {
            return Err(Error::parse(lineno, format!("node {node} assigned twice")));
        }
        labels[node] = cluster;
    }
    if let Some(missing) = labels.iter().position(|&c| c == usize::MAX) {
        return Err(Error::invalid(format!("node {missing} has no cluster")));
    }
    Partition::compact(&labels)
}

pub fn read_partition_str(text: &str, n_nodes: Option<usize>) -> Result<Partition> {
    read_partition(text.as_bytes(), n_nodes)
}

pub fn write_partition(z: &Partition) -> String {
    let mut out = String::with_capacity(z.n_nodes() * 8);
    for (i, c) in z.labels().iter().enumerate() {
        out.push_str(&format!("{i} {c}\n"));
    }
    out
}
