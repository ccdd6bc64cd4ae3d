//! Shared fixtures and independent reference implementations for the
//! integration suites.

use rand::rngs::StdRng;
use rand::Rng;

use fsic::pixel_grid::PixelGrid;
use fsic::seq_mine::Pattern;

/// Identifier grid of the worked 8x8 trace (4x4 blocks, 4 clusters).
pub const A_PRIME: [[u8; 8]; 8] = [
    [3, 1, 1, 1, 3, 3, 3, 0],
    [2, 2, 1, 3, 2, 2, 0, 3],
    [0, 2, 3, 3, 1, 2, 3, 3],
    [0, 2, 1, 2, 1, 1, 3, 3],
    [3, 3, 0, 3, 3, 1, 2, 2],
    [2, 0, 2, 0, 1, 0, 0, 1],
    [2, 1, 1, 0, 2, 2, 0, 3],
    [1, 0, 2, 2, 2, 2, 1, 2],
];

/// The 23 closed frequent sequences of `A_PRIME` at support 2, in priority
/// order, with (support, adjusted frequency).
pub const TRACE_PATTERNS: [(&[u8], usize, usize); 23] = [
    (&[1, 0, 2, 2], 2, 2),
    (&[1, 1, 3, 3], 2, 2),
    (&[2, 2, 0, 3], 2, 1),
    (&[3, 3, 1, 2], 2, 2),
    (&[2, 1, 1], 2, 0),
    (&[2, 1, 2], 2, 2),
    (&[2, 2, 1], 2, 1),
    (&[3, 3, 0], 2, 1),
    (&[0, 2], 5, 2),
    (&[1, 2], 4, 0),
    (&[2, 1], 4, 1),
    (&[2, 2], 4, 0),
    (&[3, 3], 4, 1),
    (&[0, 3], 3, 1),
    (&[1, 0], 3, 1),
    (&[1, 1], 3, 0),
    (&[1, 3], 3, 0),
    (&[2, 0], 3, 0),
    (&[3, 1], 3, 1),
    (&[0], 8, 4),
    (&[1], 8, 1),
    (&[2], 7, 3),
    (&[3], 6, 2),
];

pub fn a_prime_rows() -> Vec<Vec<u8>> {
    A_PRIME.iter().map(|row| row.to_vec()).collect()
}

fn contains(needle: &[u8], haystack: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn row_support(needle: &[u8], rows: &[Vec<u8>]) -> usize {
    rows.iter().filter(|row| contains(needle, row)).count()
}

/// Brute-force closed frequent substring miner: enumerate every distinct
/// contiguous substring, keep those meeting the support threshold, drop any
/// with an equal-support longer frequent super-string, and force-include all
/// occurring symbols. Output uses the codec's priority order.
pub fn brute_force_closed(rows: &[Vec<u8>], min_support: usize) -> Vec<Pattern> {
    use std::collections::BTreeSet;
    let mut substrings = BTreeSet::new();
    for row in rows {
        for start in 0..row.len() {
            for end in start + 1..=row.len() {
                substrings.insert(row[start..end].to_vec());
            }
        }
    }
    let frequent: Vec<(Vec<u8>, usize)> = substrings
        .iter()
        .map(|s| (s.clone(), row_support(s, rows)))
        .filter(|&(_, support)| support >= min_support)
        .collect();
    let mut keep: Vec<(Vec<u8>, usize)> = frequent
        .iter()
        .filter(|(symbols, support)| {
            !frequent.iter().any(|(other, other_support)| {
                other.len() > symbols.len() && other_support == support && contains(symbols, other)
            })
        })
        .cloned()
        .collect();
    for s in substrings.iter().filter(|s| s.len() == 1) {
        if !keep.iter().any(|(symbols, _)| symbols == s) {
            keep.push((s.clone(), row_support(s, rows)));
        }
    }
    let mut patterns: Vec<Pattern> = keep
        .into_iter()
        .map(|(symbols, support)| Pattern::new(symbols, support))
        .collect();
    patterns.sort_by(fsic::seq_mine::priority_order);
    patterns
}

/// Independent replay of the greedy removal: patterns in priority order
/// erase their matches from an Option-cell grid; returns claimed counts in
/// pattern order.
pub fn replay_removal(patterns: &[Pattern], rows: &[Vec<u8>]) -> Vec<usize> {
    let mut cells: Vec<Vec<Option<u8>>> = rows
        .iter()
        .map(|r| r.iter().map(|&s| Some(s)).collect())
        .collect();
    let mut counts = Vec::with_capacity(patterns.len());
    for pattern in patterns {
        let mut claimed = 0usize;
        for row in cells.iter_mut() {
            let mut col = 0;
            while col + pattern.symbols.len() <= row.len() {
                let hit = row[col..col + pattern.symbols.len()]
                    .iter()
                    .zip(&pattern.symbols)
                    .all(|(cell, &s)| *cell == Some(s));
                if hit {
                    row[col..col + pattern.symbols.len()]
                        .iter_mut()
                        .for_each(|c| *c = None);
                    claimed += 1;
                    col += pattern.symbols.len();
                } else {
                    col += 1;
                }
            }
        }
        counts.push(claimed);
    }
    counts
}

pub fn random_rows(rng: &mut StdRng) -> Vec<Vec<u8>> {
    let nrows = rng.gen_range(1..=8);
    let ncols = rng.gen_range(1..=8);
    (0..nrows)
        .map(|_| (0..ncols).map(|_| rng.gen_range(0..4)).collect())
        .collect()
}

pub fn random_image(rng: &mut StdRng, max_side_blocks: usize, channels: usize) -> PixelGrid {
    let width = 8 * rng.gen_range(1..=max_side_blocks);
    let height = 8 * rng.gen_range(1..=max_side_blocks);
    let samples = (0..width * height * channels).map(|_| rng.gen()).collect();
    PixelGrid::new(width, height, channels, samples).unwrap()
}

/// An image whose every side x side block uses at most `palette` distinct
/// values, so clustering those blocks with k >= palette is lossless.
pub fn blockwise_limited_image(rng: &mut StdRng, side: usize, palette: usize) -> PixelGrid {
    let width = side * rng.gen_range(1..=4);
    let height = side * rng.gen_range(1..=4);
    let mut samples = vec![0u8; width * height];
    for by in 0..height / side {
        for bx in 0..width / side {
            let values: Vec<u8> = (0..palette).map(|_| rng.gen()).collect();
            for dy in 0..side {
                for dx in 0..side {
                    let v = values[rng.gen_range(0..values.len())];
                    samples[(by * side + dy) * width + bx * side + dx] = v;
                }
            }
        }
    }
    PixelGrid::new(width, height, 1, samples).unwrap()
}

fn hash_noise(x: usize, y: usize) -> u8 {
    let mut h = (x as u32).wrapping_mul(0x9E37_79B9) ^ (y as u32).wrapping_mul(0x85EB_CA6B);
    h ^= h >> 13;
    h = h.wrapping_mul(0xC2B2_AE35);
    h ^= h >> 16;
    (h & 0xFF) as u8
}

/// Deterministic 64x64 grayscale crop with natural-image texture: a smooth
/// stepped motif over the top-left region and busier detail elsewhere.
pub fn test_crop_64() -> PixelGrid {
    let levels = [40u8, 90, 150, 210];
    let motif = |x: usize| levels[[0, 0, 1, 2, 2, 3, 1, 0][x % 8]];
    let mut samples = Vec::with_capacity(64 * 64);
    for y in 0..64usize {
        for x in 0..64usize {
            let v = if y < 40 && x < 24 {
                motif(x)
            } else {
                hash_noise(x / 2, y)
            };
            samples.push(v);
        }
    }
    PixelGrid::new(64, 64, 1, samples).unwrap()
}
