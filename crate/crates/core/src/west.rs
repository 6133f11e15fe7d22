//! The rank-preserving refill bijection `f : S_n(G_k) -> S_n(H_k, Q_k)` and
//! its inverse `g`.
//!
//! Entries of rank `k-2` or less stay where they are. The remaining entries
//! (the pool) are redistributed block by block: each block's high-rank
//! positions receive the largest (for `f`) or smallest (for `g`) unplaced
//! pool values that exceed the block's threshold, written in increasing
//! order.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::pattern::{contains_classical, contains_h, contains_q, PatternSpec};
use crate::perm::Permutation;

/// Everything the refill needs, computed once from the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefillPlan {
    pub k: usize,
    /// For each block, the positions holding an entry of rank `>= k-1`.
    /// Always a contiguous suffix of the block.
    pub high_positions: Vec<Vec<usize>>,
    /// Values of all entries of rank `>= k-1`, ascending.
    pub pool: Vec<usize>,
    /// For each block with high positions, the value of the rightmost
    /// rank-`(k-2)` entry left of them.
    pub thresholds: Vec<Option<usize>>,
}

impl RefillPlan {
    pub fn new(p: &Permutation, k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::BadParameter(format!("k must be at least 3, got {k}")));
        }
        let ranks = p.ranks();
        let high = |i: usize| ranks[i - 1] + 1 >= k;
        let mut high_positions = Vec::new();
        let mut thresholds = Vec::new();
        if !p.is_empty() {
            for block in p.blocks()?.blocks() {
                let positions: Vec<usize> = block.positions().filter(|&i| high(i)).collect();
                let threshold = match positions.first() {
                    None => None,
                    Some(&first) => {
                        let j = (1..first).rev().find(|&j| ranks[j - 1] == k - 2).ok_or_else(|| {
                            Error::Invariant(format!("no rank-{} entry left of position {first} in {p}", k - 2))
                        })?;
                        Some(p.value(j))
                    }
                };
                high_positions.push(positions);
                thresholds.push(threshold);
            }
        }
        let mut pool: Vec<usize> = (1..=p.len()).filter(|&i| high(i)).map(|i| p.value(i)).collect();
        pool.sort_unstable();
        Ok(RefillPlan {
            k,
            high_positions,
            pool,
            thresholds,
        })
    }

    fn fill(&self, p: &Permutation, take_largest: bool) -> Result<Permutation> {
        let mut values = p.values().to_vec();
        let mut remaining: BTreeSet<usize> = self.pool.iter().copied().collect();
        for (block, (positions, threshold)) in self.high_positions.iter().zip(&self.thresholds).enumerate() {
            let Some(threshold) = *threshold else {
                continue;
            };
            let eligible = remaining.range(threshold + 1..);
            let mut chosen: Vec<usize> = if take_largest {
                eligible.rev().take(positions.len()).copied().collect()
            } else {
                eligible.take(positions.len()).copied().collect()
            };
            if chosen.len() < positions.len() {
                return Err(Error::InternalExhaustion { block: block + 1 });
            }
            chosen.sort_unstable();
            for (&pos, &v) in positions.iter().zip(&chosen) {
                remaining.remove(&v);
                values[pos - 1] = v;
            }
        }
        Permutation::new(values)
    }
}

/// `f`: sends a `G_k`-avoider to an `(H_k, Q_k)`-avoider with the same
/// descent set.
pub fn f_map(p: &Permutation, k: usize) -> Result<Permutation> {
    let plan = RefillPlan::new(p, k)?;
    let g = PatternSpec::g(k);
    if let Some(witness) = contains_classical(p, &g) {
        return Err(Error::InputContainsPattern {
            pattern: format!("G{k} ({g})"),
            input: p.to_string(),
            witness,
        });
    }
    plan.fill(p, true)
}

/// `g`: the inverse of [`f_map`].
pub fn g_map(q: &Permutation, k: usize) -> Result<Permutation> {
    let plan = RefillPlan::new(q, k)?;
    if let Some(witness) = contains_h(q, k)? {
        return Err(Error::InputContainsPattern {
            pattern: format!("H:{k}"),
            input: q.to_string(),
            witness,
        });
    }
    if let Some(witness) = contains_q(q, k)? {
        return Err(Error::InputContainsPattern {
            pattern: format!("Q:{k}"),
            input: q.to_string(),
            witness,
        });
    }
    plan.fill(q, false)
}
