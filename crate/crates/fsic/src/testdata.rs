//! Shared fixtures for the 8x8 worked trace used across module tests.

/// 8x8 grayscale source matrix.
pub(crate) const MATRIX_A: [[u8; 8]; 8] = [
    [139, 108, 108, 108, 108, 108, 108, 121],
    [177, 165, 121, 139, 139, 139, 121, 95],
    [239, 183, 139, 139, 165, 139, 108, 108],
    [225, 165, 121, 165, 165, 151, 108, 108],
    [165, 139, 121, 152, 151, 134, 121, 121],
    [113, 121, 108, 121, 139, 165, 183, 139],
    [108, 90, 95, 134, 121, 121, 165, 151],
    [95, 121, 108, 108, 108, 121, 139, 121],
];

/// Identifier grid obtained from MATRIX_A with 4x4 blocks and 4 clusters,
/// using the cluster tables in `CLUSTER_TABLES`.
pub(crate) const A_PRIME: [[u8; 8]; 8] = [
    [3, 1, 1, 1, 3, 3, 3, 0],
    [2, 2, 1, 3, 2, 2, 0, 3],
    [0, 2, 3, 3, 1, 2, 3, 3],
    [0, 2, 1, 2, 1, 1, 3, 3],
    [3, 3, 0, 3, 3, 1, 2, 2],
    [2, 0, 2, 0, 1, 0, 0, 1],
    [2, 1, 1, 0, 2, 2, 0, 3],
    [1, 0, 2, 2, 2, 2, 1, 2],
];

/// Per-block identifier -> mean tables matching `A_PRIME`, row-major block
/// order (top-left, top-right, bottom-left, bottom-right).
pub(crate) const CLUSTER_TABLES: [[u8; 4]; 4] = [
    [232, 113, 171, 139],
    [121, 160, 139, 106],
    [123, 93, 109, 152],
    [171, 137, 119, 151],
];

/// The 23 closed frequent sequences of `A_PRIME` at support 2 with their
/// row-presence supports and greedy-removal adjusted frequencies.
pub(crate) const TRACE_PATTERNS: [(&[u8], usize, usize); 23] = [
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

pub(crate) fn a_prime_rows() -> Vec<Vec<u8>> {
    A_PRIME.iter().map(|row| row.to_vec()).collect()
}
