//! Pattern containment and avoidance classes.
//!
//! Besides classical patterns this covers two bespoke predicates:
//!
//! * `H_k`: an occurrence of `12…k` whose last two entries sit in different
//!   blocks, i.e. some descent `j` satisfies `i_{k-1} <= j < i_k`.
//! * `Q_k`: an occurrence of `12…(k-2)k(k-1)` where the entries from
//!   position `i_{k-1}` up to `i_k - 1` climb strictly and then drop into
//!   the entry at `i_k`.
//!
//! Searches run depth-first over position tuples in lexicographic order, so
//! the first witness reported is always the lexicographically least one.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::perm::{write_joined, Permutation};

/// Strictly increasing 1-indexed positions witnessing a containment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occurrence(Vec<usize>);

impl Occurrence {
    pub fn new(positions: Vec<usize>) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        Occurrence(positions)
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values_in(&self, p: &Permutation) -> Vec<usize> {
        self.0.iter().map(|&i| p.value(i)).collect()
    }
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.0)
    }
}

impl Serialize for Occurrence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PatternSpec {
    Classical(Permutation),
    H(usize),
    Q(usize),
}

impl PatternSpec {
    /// `J_k = 12…k`.
    pub fn j(k: usize) -> Permutation {
        Permutation::identity(k)
    }

    /// `F_k = 23…k1`.
    pub fn f(k: usize) -> Permutation {
        let values = (2..=k).chain((k >= 1).then_some(1)).collect();
        Permutation::from_values_unchecked(values)
    }

    /// `G_k = 12…(k-2)k(k-1)`.
    pub fn g(k: usize) -> Permutation {
        let mut values: Vec<usize> = (1..=k).collect();
        if k >= 2 {
            values.swap(k - 2, k - 1);
        }
        Permutation::from_values_unchecked(values)
    }

    pub fn h(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(PatternSpec::H(k))
    }

    pub fn q(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(PatternSpec::Q(k))
    }

    pub fn contains(&self, p: &Permutation) -> Option<Occurrence> {
        match self {
            PatternSpec::Classical(pat) => contains_classical(p, pat),
            PatternSpec::H(k) => find_h(p, *k),
            PatternSpec::Q(k) => find_q(p, *k),
        }
    }

    pub fn is_avoided_by(&self, p: &Permutation) -> bool {
        self.contains(p).is_none()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternSpec::Classical(p) => write!(f, "{p}"),
            PatternSpec::H(k) => write!(f, "H:{k}"),
            PatternSpec::Q(k) => write!(f, "Q:{k}"),
        }
    }
}

impl FromStr for PatternSpec {
    type Err = Error;

    /// Accepts `"132"`, `"1,3,2"`, `"H:5"`, `"Q:5"`, `"J4"`, `"F4"`, `"G4"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::BadPatternSpec(s.to_string());
        let param = |rest: &str| rest.parse::<usize>().map_err(|_| bad());
        if let Some(rest) = s.strip_prefix("H:") {
            return PatternSpec::h(param(rest)?);
        }
        if let Some(rest) = s.strip_prefix("Q:") {
            return PatternSpec::q(param(rest)?);
        }
        if let Some(kind) = s.chars().next().filter(|c| matches!(c, 'J' | 'F' | 'G')) {
            let k = param(&s[1..])?;
            if k == 0 || (kind != 'J' && k < 2) {
                return Err(bad());
            }
            return Ok(PatternSpec::Classical(match kind {
                'J' => PatternSpec::j(k),
                'F' => PatternSpec::f(k),
                _ => PatternSpec::g(k),
            }));
        }
        let pat = Permutation::parse(s).map_err(|_| bad())?;
        if pat.is_empty() {
            return Err(bad());
        }
        Ok(PatternSpec::Classical(pat))
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::BadParameter(format!("k must be at least 3, got {k}")));
    }
    Ok(())
}

/// Calls `visit` on every occurrence of `pat` in `values` (0-indexed
/// positions, lexicographic order) until it returns `true`. With
/// `pin_last`, only occurrences using the final position are visited.
fn search<F>(values: &[usize], pat: &[usize], pin_last: bool, visit: &mut F) -> bool
where
    F: FnMut(&[usize]) -> bool,
{
    fn rec<F>(
        values: &[usize],
        pat: &[usize],
        pin_last: bool,
        chosen: &mut Vec<usize>,
        start: usize,
        visit: &mut F,
    ) -> bool
    where
        F: FnMut(&[usize]) -> bool,
    {
        let j = chosen.len();
        let m = pat.len();
        if j == m {
            return visit(chosen);
        }
        let n = values.len();
        let (lo, hi) = if pin_last && j == m - 1 {
            (n - 1, n - 1)
        } else {
            (start, n - (m - j))
        };
        for pos in lo.max(start)..=hi {
            let v = values[pos];
            let consistent = chosen.iter().zip(pat).all(|(&c, &pc)| (values[c] < v) == (pc < pat[j]));
            if consistent {
                chosen.push(pos);
                let stop = rec(values, pat, pin_last, chosen, pos + 1, visit);
                chosen.pop();
                if stop {
                    return true;
                }
            }
        }
        false
    }

    if pat.len() > values.len() {
        return false;
    }
    if pat.is_empty() {
        return visit(&[]);
    }
    let mut chosen = Vec::with_capacity(pat.len());
    rec(values, pat, pin_last, &mut chosen, 0, visit)
}

fn to_occurrence(zero_based: &[usize]) -> Occurrence {
    Occurrence(zero_based.iter().map(|&i| i + 1).collect())
}

/// Lexicographically least occurrence of `pat` in `p`, if any.
pub fn contains_classical(p: &Permutation, pat: &Permutation) -> Option<Occurrence> {
    let mut found = None;
    search(p.values(), pat.values(), false, &mut |c| {
        found = Some(to_occurrence(c));
        true
    });
    found
}

pub fn all_classical(p: &Permutation, pat: &Permutation) -> Vec<Occurrence> {
    let mut out = Vec::new();
    search(p.values(), pat.values(), false, &mut |c| {
        out.push(to_occurrence(c));
        false
    });
    out
}

/// Whether some occurrence of `pat` in `prefix` uses its last entry.
pub(crate) fn ends_with_occurrence(prefix: &[usize], pat: &[usize]) -> bool {
    !pat.is_empty() && search(prefix, pat, true, &mut |_| true)
}

/// `positions` (1-indexed, assumed to carry a `J_k`) form an `H_k`.
pub fn is_h_occurrence(p: &Permutation, positions: &[usize]) -> bool {
    let k = positions.len();
    k >= 2 && (positions[k - 2]..positions[k - 1]).any(|j| p.is_descent(j))
}

/// `positions` (1-indexed, assumed to carry a `G_k`) form a `Q_k`.
pub fn is_q_occurrence(p: &Permutation, positions: &[usize]) -> bool {
    let k = positions.len();
    if k < 2 {
        return false;
    }
    let (a, b) = (positions[k - 2], positions[k - 1]);
    (a..b - 1).all(|i| p.is_ascent(i)) && p.is_descent(b - 1)
}

fn find_h(p: &Permutation, k: usize) -> Option<Occurrence> {
    let mut found = None;
    search(p.values(), PatternSpec::j(k).values(), false, &mut |c| {
        let occ = to_occurrence(c);
        let hit = is_h_occurrence(p, occ.positions());
        if hit {
            found = Some(occ);
        }
        hit
    });
    found
}

fn find_q(p: &Permutation, k: usize) -> Option<Occurrence> {
    let mut found = None;
    search(p.values(), PatternSpec::g(k).values(), false, &mut |c| {
        let occ = to_occurrence(c);
        let hit = is_q_occurrence(p, occ.positions());
        if hit {
            found = Some(occ);
        }
        hit
    });
    found
}

pub fn contains_h(p: &Permutation, k: usize) -> Result<Option<Occurrence>> {
    check_k(k)?;
    Ok(find_h(p, k))
}

pub fn contains_q(p: &Permutation, k: usize) -> Result<Option<Occurrence>> {
    check_k(k)?;
    Ok(find_q(p, k))
}

pub fn all_h(p: &Permutation, k: usize) -> Vec<Occurrence> {
    all_classical(p, &PatternSpec::j(k))
        .into_iter()
        .filter(|o| is_h_occurrence(p, o.positions()))
        .collect()
}

pub fn all_q(p: &Permutation, k: usize) -> Vec<Occurrence> {
    all_classical(p, &PatternSpec::g(k))
        .into_iter()
        .filter(|o| is_q_occurrence(p, o.positions()))
        .collect()
}

/// Rank-based `H_k` test: some `u < v` with `p_u < p_v`, `rank(p_u) >= k-1`
/// and a descent in `[u, v)`.
pub fn contains_h_fast(p: &Permutation, k: usize) -> Result<bool> {
    check_k(k)?;
    let ranks = p.ranks();
    let n = p.len();
    for u in 1..=n {
        if ranks[u - 1] + 1 < k {
            continue;
        }
        let mut crossed = false;
        for v in u + 1..=n {
            crossed |= p.is_descent(v - 1);
            if crossed && p.value(u) < p.value(v) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Every permutation of `1..=n` avoiding all `specs`, in lexicographic
/// order. Classical specs prune prefixes; `H`/`Q` specs are checked on
/// completed permutations only, since a later descent can activate an
/// earlier prefix.
pub fn avoiders(n: usize, specs: &[PatternSpec]) -> Avoiders {
    Avoiders::new(n, specs, 1..=n.max(1))
}

/// The slice of [`avoiders`] whose first entry is `first`.
pub fn avoiders_starting_with(n: usize, specs: &[PatternSpec], first: usize) -> Avoiders {
    Avoiders::new(n, specs, first..=first)
}

pub struct Avoiders {
    n: usize,
    classical: Vec<Vec<usize>>,
    special: Vec<PatternSpec>,
    first_hi: usize,
    prefix: Vec<usize>,
    used: Vec<bool>,
    // cand[d] is the next value to try at depth d; cand.len() == prefix.len() + 1
    cand: Vec<usize>,
    done: bool,
}

impl Avoiders {
    fn new(n: usize, specs: &[PatternSpec], first: std::ops::RangeInclusive<usize>) -> Self {
        let mut classical = Vec::new();
        let mut special = Vec::new();
        for spec in specs {
            match spec {
                PatternSpec::Classical(p) => classical.push(p.values().to_vec()),
                other => special.push(other.clone()),
            }
        }
        let (first_lo, first_hi) = (*first.start(), (*first.end()).min(n));
        Avoiders {
            n,
            classical,
            special,
            first_hi,
            prefix: Vec::with_capacity(n),
            used: vec![false; n + 1],
            cand: vec![first_lo],
            done: n > 0 && first_lo > first_hi,
        }
    }

    fn advance(&mut self, depth: usize) -> bool {
        let hi = if depth == 0 { self.first_hi } else { self.n };
        let mut v = self.cand[depth];
        while v <= hi {
            if !self.used[v] {
                self.prefix.push(v);
                let pruned = self.classical.iter().any(|pat| ends_with_occurrence(&self.prefix, pat));
                if !pruned {
                    self.cand[depth] = v + 1;
                    self.used[v] = true;
                    self.cand.push(1);
                    return true;
                }
                self.prefix.pop();
            }
            v += 1;
        }
        self.cand[depth] = v;
        false
    }

    fn retreat(&mut self) -> bool {
        self.cand.pop();
        match self.prefix.pop() {
            Some(v) => {
                self.used[v] = false;
                true
            }
            None => false,
        }
    }
}

impl Iterator for Avoiders {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        while !self.done {
            let depth = self.prefix.len();
            if depth == self.n {
                let p = Permutation::from_values_unchecked(self.prefix.clone());
                let keep = self.special.iter().all(|s| s.is_avoided_by(&p));
                if !self.retreat() {
                    self.done = true;
                }
                if keep {
                    return Some(p);
                }
                continue;
            }
            if !self.advance(depth) && !self.retreat() {
                self.done = true;
            }
        }
        None
    }
}
