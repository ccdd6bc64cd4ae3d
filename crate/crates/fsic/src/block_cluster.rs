//! Deterministic one-dimensional k-means over each block's pixels, producing
//! the per-block cluster identifier tables and the identifier grid.
//!
//! Determinism is load-bearing: the encoder and decoder must agree bit-exactly
//! on the stored means, and clustering the same block on any thread schedule
//! must give the same table. Centroids are therefore seeded from the sorted
//! distinct pixel values (no RNG), distances use the rounded means, and ties
//! always resolve to the lower cluster identifier.

use rayon::prelude::*;
use thiserror::Error;

use crate::pixel_grid::{merge_tiles, Block, ImageError};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("identifier {symbol} out of range for a {clusters}-cluster table")]
    CorruptSymbol { symbol: u8, clusters: usize },
}

/// Per-block map from cluster identifier (0..k-1) to its 8-bit mean intensity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTable {
    pub block_index: usize,
    /// Exactly k entries; identifiers index into this list. Entries for
    /// clusters that ended up empty keep their seed value and are unused.
    pub means: Vec<u8>,
}

/// A full channel after every pixel was replaced by its block-local cluster
/// identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifierGrid {
    width: usize,
    height: usize,
    symbols: Vec<u8>,
}

impl IdentifierGrid {
    pub fn new(width: usize, height: usize, symbols: Vec<u8>) -> Self {
        assert_eq!(symbols.len(), width * height);
        Self {
            width,
            height,
            symbols,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Rows top to bottom; the sequence database rows fed to the miner.
    pub fn rows(&self) -> Vec<&[u8]> {
        self.symbols.chunks(self.width).collect()
    }
}

fn nearest_cluster(pixel: u8, means: &[u8]) -> u8 {
    let mut best = 0usize;
    let mut best_dist = i32::MAX;
    for (id, &mean) in means.iter().enumerate() {
        let dist = (i32::from(pixel) - i32::from(mean)).abs();
        if dist < best_dist {
            best = id;
            best_dist = dist;
        }
    }
    best as u8
}

fn assign_all(samples: &[u8], means: &[u8]) -> Vec<u8> {
    samples.iter().map(|&p| nearest_cluster(p, means)).collect()
}

/// Seeds at evenly spaced positions over the sorted distinct values,
/// endpoints included; duplicates appear when there are fewer distinct
/// values than clusters.
fn seed_means(distinct: &[u8], k: usize) -> Vec<u8> {
    if k == 1 {
        return vec![distinct[distinct.len() / 2]];
    }
    (0..k)
        .map(|i| {
            // round(i * (d-1) / (k-1)), half-up in integer arithmetic
            let idx = (2 * i * (distinct.len() - 1) + (k - 1)) / (2 * (k - 1));
            distinct[idx]
        })
        .collect()
}

fn rounded_mean(sum: u32, count: u32) -> u8 {
    ((sum + count / 2) / count) as u8
}

/// Moves the pixel farthest from its current centroid into each empty
/// cluster. A pixel qualifies only if its cluster keeps at least one member
/// and it sits at a nonzero distance; when no pixel qualifies the cluster
/// stays unused with its previous mean.
fn repair_empty_clusters(samples: &[u8], assignment: &mut [u8], means: &mut [u8], k: usize) {
    let mut counts = vec![0u32; k];
    for &c in assignment.iter() {
        counts[c as usize] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut candidate: Option<(usize, i32)> = None;
        for (i, &p) in samples.iter().enumerate() {
            let owner = assignment[i] as usize;
            if counts[owner] < 2 {
                continue;
            }
            let dist = (i32::from(p) - i32::from(means[owner])).abs();
            if dist > 0 && candidate.is_none_or(|(_, best)| dist > best) {
                candidate = Some((i, dist));
            }
        }
        if let Some((i, _)) = candidate {
            counts[assignment[i] as usize] -= 1;
            counts[empty] += 1;
            means[empty] = samples[i];
            assignment[i] = empty as u8;
        }
    }
}

fn update_means(samples: &[u8], assignment: &[u8], means: &mut [u8], k: usize) {
    let mut sums = vec![0u32; k];
    let mut counts = vec![0u32; k];
    for (&p, &c) in samples.iter().zip(assignment) {
        sums[c as usize] += u32::from(p);
        counts[c as usize] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            means[c] = rounded_mean(sums[c], counts[c]);
        }
    }
}

/// Lloyd iteration over one block's pixels.
///
/// Returns the k-entry table and the block's identifier tile. The returned
/// assignment always maps every pixel to the nearest stored mean, ties to
/// the lower identifier, even when the iteration cap was hit.
pub fn kmeans_block(block: &Block, k: usize) -> (ClusterTable, Vec<u8>) {
    assert!((1..=256).contains(&k), "cluster count must be in 1..=256");
    assert!(!block.samples.is_empty(), "block must be nonempty");

    let mut distinct: Vec<u8> = block.samples.clone();
    distinct.sort_unstable();
    distinct.dedup();

    let mut means = seed_means(&distinct, k);
    let mut prev: Option<Vec<u8>> = None;
    for _ in 0..MAX_ITERATIONS {
        let mut assignment = assign_all(&block.samples, &means);
        repair_empty_clusters(&block.samples, &mut assignment, &mut means, k);
        if prev.as_ref() == Some(&assignment) {
            break;
        }
        update_means(&block.samples, &assignment, &mut means, k);
        prev = Some(assignment);
    }

    let tile = assign_all(&block.samples, &means);
    (
        ClusterTable {
            block_index: block.block_index,
            means,
        },
        tile,
    )
}

/// Clusters every block independently and merges the identifier tiles into
/// the channel-wide identifier grid.
///
/// Blocks fan out to parallel workers; the result is identical to clustering
/// them sequentially because each block is a pure, isolated problem.
pub fn cluster_all_blocks(
    blocks: &[Block],
    k: usize,
    width: usize,
    height: usize,
) -> Result<(Vec<ClusterTable>, IdentifierGrid), ImageError> {
    let side = match blocks.first() {
        Some(b) => b.side,
        None => return Err(ImageError::MergeGeometry(0)),
    };
    let tiles_fit = blocks.iter().all(|b| b.side == side)
        && width.is_multiple_of(side)
        && height.is_multiple_of(side)
        && (width / side) * (height / side) == blocks.len();
    if !tiles_fit {
        return Err(ImageError::MergeGeometry(blocks.len()));
    }

    let results: Vec<(ClusterTable, Vec<u8>)> = blocks
        .par_iter()
        .map(|block| kmeans_block(block, k))
        .collect();
    let (tables, tiles): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let symbols = merge_tiles(&tiles, width, height, side);
    Ok((tables, IdentifierGrid::new(width, height, symbols)))
}

/// Replaces each identifier in a tile with its table mean (decompressor side).
pub fn reconstruct_block(
    tile: &[u8],
    side: usize,
    table: &ClusterTable,
) -> Result<Block, ClusterError> {
    let mut samples = Vec::with_capacity(tile.len());
    for &symbol in tile {
        let mean = *table
            .means
            .get(symbol as usize)
            .ok_or(ClusterError::CorruptSymbol {
                symbol,
                clusters: table.means.len(),
            })?;
        samples.push(mean);
    }
    Ok(Block {
        block_index: table.block_index,
        side,
        samples,
    })
}
