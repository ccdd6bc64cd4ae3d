//! Closed frequent sequence mining over the rows of an identifier grid.
//!
//! A sequence here is contiguous: a run of symbols at consecutive columns
//! within one row. Mining is level-wise: singletons, then all symbol pairs,
//! then suffix/prefix joins, with a closure pass after each level that drops
//! any pattern whose one-longer contiguous super-pattern has equal support.
//! Singletons are exempt from every pruning rule so that the downstream
//! parse can always cover the grid.

use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MineError {
    #[error("minimum support must be at least 1")]
    SupportTooSmall,
}

/// A contiguous symbol sequence with its row-presence support and its
/// adjusted frequency (equal to `support` until the greedy parse fills it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub symbols: Vec<u8>,
    pub support: usize,
    pub psi_mod: usize,
}

impl Pattern {
    pub fn new(symbols: Vec<u8>, support: usize) -> Self {
        Self {
            symbols,
            support,
            psi_mod: support,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Priority order shared by the greedy parse and all tie-breaking downstream:
/// longer first, then higher support, then lexicographically smaller symbols.
pub fn priority_order(a: &Pattern, b: &Pattern) -> Ordering {
    b.symbols
        .len()
        .cmp(&a.symbols.len())
        .then(b.support.cmp(&a.support))
        .then(a.symbols.cmp(&b.symbols))
}

/// The mined pattern collection, sorted by [`priority_order`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    pub patterns: Vec<Pattern>,
    pub min_support: usize,
    pub alphabet_size: usize,
}

/// True iff `needle` occurs as a contiguous run somewhere in `haystack`.
pub fn contains_contiguous(needle: &[u8], haystack: &[u8]) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Number of rows that contain `needle` at least once (presence, not
/// occurrence count).
pub fn count_support<R: AsRef<[u8]>>(needle: &[u8], rows: &[R]) -> usize {
    rows.iter()
        .filter(|row| contains_contiguous(needle, row.as_ref()))
        .count()
}

/// Level-wise candidate generation: for every ordered pair whose length-(l-2)
/// suffix and prefix agree, emit the left pattern extended by the right one's
/// last symbol. Input patterns must share one length of at least 2.
pub fn join_candidates(frequent_prev: &[Pattern]) -> Vec<Vec<u8>> {
    let mut candidates = BTreeSet::new();
    for left in frequent_prev {
        debug_assert!(left.len() >= 2);
        debug_assert_eq!(left.len(), frequent_prev[0].len());
        for right in frequent_prev {
            if left.symbols[1..] == right.symbols[..right.len() - 1] {
                let mut extended = left.symbols.clone();
                extended.push(*right.symbols.last().expect("patterns are nonempty"));
                candidates.insert(extended);
            }
        }
    }
    candidates.into_iter().collect()
}

fn frequent_from_candidates<R: AsRef<[u8]> + Sync>(
    candidates: Vec<Vec<u8>>,
    rows: &[R],
    min_support: usize,
) -> Vec<Pattern> {
    candidates
        .into_par_iter()
        .map(|symbols| {
            let support = count_support(&symbols, rows);
            Pattern::new(symbols, support)
        })
        .filter(|p| p.support >= min_support)
        .collect()
}

/// Mines the closed frequent contiguous sequences of `rows` at the given
/// absolute support threshold.
///
/// Every symbol occurring in the input is returned regardless of support;
/// patterns of length two and up are returned iff they are frequent and no
/// one-longer frequent super-pattern shares their support.
pub fn mine_closed_frequent<R: AsRef<[u8]> + Sync>(
    rows: &[R],
    min_support: usize,
) -> Result<PatternSet, MineError> {
    if min_support < 1 {
        return Err(MineError::SupportTooSmall);
    }

    let singles: BTreeSet<u8> = rows
        .iter()
        .flat_map(|row| row.as_ref().iter().copied())
        .collect();
    let alphabet_size = singles.iter().next_back().map_or(0, |&s| s as usize + 1);
    let singletons: Vec<Pattern> = singles
        .iter()
        .map(|&s| Pattern::new(vec![s], count_support(&[s], rows)))
        .collect();

    let pairs: Vec<Vec<u8>> = singles
        .iter()
        .flat_map(|&a| singles.iter().map(move |&b| vec![a, b]))
        .collect();
    let mut levels: Vec<Vec<Pattern>> = vec![frequent_from_candidates(pairs, rows, min_support)];

    while !levels.last().expect("at least one level").is_empty() {
        let prev = levels.last().expect("at least one level");
        let candidates = join_candidates(prev);
        let next = frequent_from_candidates(candidates, rows, min_support);
        let prev = levels.last_mut().expect("at least one level");
        prev.retain(|shorter| {
            !next.iter().any(|longer| {
                longer.support == shorter.support
                    && contains_contiguous(&shorter.symbols, &longer.symbols)
            })
        });
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }

    let mut patterns = singletons;
    patterns.extend(levels.into_iter().flatten());
    patterns.sort_by(priority_order);
    Ok(PatternSet {
        patterns,
        min_support,
        alphabet_size,
    })
}
