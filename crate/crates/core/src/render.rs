//! Block-sorted adjacency images as binary portable graymaps.

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::partition::Partition;

pub const DEFAULT_MAX_NODES: usize = 5000;

pub const EDGE: u8 = 0;
pub const BACKGROUND: u8 = 255;
pub const BOUNDARY: u8 = 160;

/// Raster of the adjacency matrix with nodes ordered by cluster, then id.
/// A one-pixel line separates consecutive clusters, so the side is
/// `N + K - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockImage {
    pub side: usize,
    pub pixels: Vec<u8>,
}

impl BlockImage {
    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.side + col]
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.side, self.side).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

pub fn render_blocks(g: &DirectedGraph, z: &Partition, max_nodes: usize) -> Result<BlockImage> {
    let n = g.n_nodes();
    if z.n_nodes() != n {
        return Err(Error::invalid(format!(
            "partition covers {} nodes, graph has {n}",
            z.n_nodes()
        )));
    }
    if n > max_nodes {
        return Err(Error::invalid(format!(
            "{n} nodes exceed the raster cap of {max_nodes}; render a subgraph or raise the cap"
        )));
    }
    let k = z.k();
    let sizes = z.sizes();
    // First pixel of each cluster's band.
    let mut start = vec![0usize; k];
    for c in 1..k {
        start[c] = start[c - 1] + sizes[c - 1] + 1;
    }
    let mut pos = vec![0usize; n];
    let mut fill = start.clone();
    for (i, &c) in z.labels().iter().enumerate() {
        pos[i] = fill[c];
        fill[c] += 1;
    }

    let side = n + k - 1;
    let mut pixels = vec![BACKGROUND; side * side];
    for c in 1..k {
        let line = start[c] - 1;
        pixels[line * side..(line + 1) * side].fill(BOUNDARY);
        for row in 0..side {
            pixels[row * side + line] = BOUNDARY;
        }
    }
    for (s, d) in g.edges() {
        pixels[pos[s] * side + pos[d]] = EDGE;
    }
    Ok(BlockImage { side, pixels })
}
