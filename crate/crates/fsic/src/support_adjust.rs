//! Adjusted pattern frequencies via greedy longest-first removal.
//!
//! Mined supports overlap: a row containing `3312` also contains `33`, so
//! coding both at full support would inflate the code table. The fix is a
//! single deterministic parse of the identifier grid: patterns claim
//! non-overlapping cell runs in priority order (longest first), and a
//! pattern's adjusted frequency is the number of instances it actually
//! claimed. The same parse doubles as the token stream fed to the encoder.

use thiserror::Error;

use crate::seq_mine::{priority_order, Pattern, PatternSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdjustError {
    #[error("cell ({row}, {col}) has no covering pattern; pattern set is corrupt")]
    UncoveredCell { row: usize, col: usize },
}

/// One claimed pattern instance: which pattern (by index into the adjusted
/// pattern set) and the column where it starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub pattern: usize,
    pub start: usize,
}

/// The grid re-expressed as pattern instances. Per row, token spans are
/// disjoint, cover every column exactly once, and are stored in ascending
/// start order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedGrid {
    pub rows: Vec<Vec<Token>>,
    /// Claimed instances per pattern, indexed like the adjusted pattern set.
    pub instance_counts: Vec<usize>,
}

impl ParsedGrid {
    /// Total number of tokens across all rows.
    pub fn token_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Runs the removal pass: patterns in priority order claim greedy
/// left-to-right non-overlapping matches over still-unclaimed cells, rows
/// scanned top to bottom. Returns the pattern set with `psi_mod` set to the
/// claimed instance counts, plus the parse itself.
///
/// Token `pattern` indices refer to the returned (priority-sorted) set.
pub fn compute_modified_support<R: AsRef<[u8]>>(
    patterns: &PatternSet,
    rows: &[R],
) -> Result<(PatternSet, ParsedGrid), AdjustError> {
    let mut ordered: Vec<Pattern> = patterns.patterns.clone();
    ordered.sort_by(priority_order);

    let mut claimed: Vec<Vec<bool>> = rows
        .iter()
        .map(|row| vec![false; row.as_ref().len()])
        .collect();
    let mut parsed_rows: Vec<Vec<Token>> = vec![Vec::new(); rows.len()];
    let mut counts = vec![0usize; ordered.len()];

    for (pattern_idx, pattern) in ordered.iter().enumerate() {
        let needle = &pattern.symbols;
        for (row_idx, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            let taken = &mut claimed[row_idx];
            if needle.len() > row.len() {
                continue;
            }
            let mut col = 0;
            while col + needle.len() <= row.len() {
                let fits = row[col..col + needle.len()] == needle[..]
                    && taken[col..col + needle.len()].iter().all(|&t| !t);
                if fits {
                    taken[col..col + needle.len()]
                        .iter_mut()
                        .for_each(|t| *t = true);
                    parsed_rows[row_idx].push(Token {
                        pattern: pattern_idx,
                        start: col,
                    });
                    counts[pattern_idx] += 1;
                    col += needle.len();
                } else {
                    col += 1;
                }
            }
        }
    }

    for (row_idx, taken) in claimed.iter().enumerate() {
        if let Some(col) = taken.iter().position(|&t| !t) {
            return Err(AdjustError::UncoveredCell { row: row_idx, col });
        }
    }

    for row in &mut parsed_rows {
        row.sort_by_key(|t| t.start);
    }
    let adjusted: Vec<Pattern> = ordered
        .into_iter()
        .zip(&counts)
        .map(|(mut p, &count)| {
            p.psi_mod = count;
            p
        })
        .collect();

    Ok((
        PatternSet {
            patterns: adjusted,
            min_support: patterns.min_support,
            alphabet_size: patterns.alphabet_size,
        },
        ParsedGrid {
            rows: parsed_rows,
            instance_counts: counts,
        },
    ))
}

/// Flattens the parse row by row, left to right — the emission order for
/// encoding.
pub fn tokens_in_order(parse: &ParsedGrid) -> impl Iterator<Item = Token> + '_ {
    parse.rows.iter().flat_map(|row| row.iter().copied())
}

/// Expands the parse back into symbol rows; the inverse of parsing.
pub fn expand_tokens(parse: &ParsedGrid, patterns: &PatternSet) -> Vec<Vec<u8>> {
    parse
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .flat_map(|t| patterns.patterns[t.pattern].symbols.iter().copied())
                .collect()
        })
        .collect()
}
