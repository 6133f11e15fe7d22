//! Permutations in one-line notation and the statistics built on them.
//!
//! Positions and values are 1-indexed everywhere in the public surface; the
//! storage underneath is a plain `Vec`. A permutation can also be viewed as a
//! permutation matrix: position `i` holding value `v` fills the square
//! `(row = v, col = i)`, rows counted from the bottom.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from its one-line values, rejecting anything that
    /// is not a bijection on `1..=n`.
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n + 1];
        for &v in &values {
            if v == 0 || v > n {
                return Err(Error::ValueOutOfRange { value: v, n });
            }
            if seen[v] {
                return Err(Error::RepeatedValue(v));
            }
            seen[v] = true;
        }
        Ok(Permutation { values })
    }

    pub(crate) fn from_values_unchecked(values: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(values.clone()).is_ok());
        Permutation { values }
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n).collect(),
        }
    }

    pub fn decreasing(n: usize) -> Self {
        Permutation {
            values: (1..=n).rev().collect(),
        }
    }

    /// Parses canonical comma form (`"1,3,2"`) or, when every entry is a
    /// single digit, the digit-string shorthand (`"132"`).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Permutation::identity(0));
        }
        let values = if text.contains(',') {
            text.split(',')
                .map(|tok| {
                    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(Error::MalformedToken(tok.to_string()));
                    }
                    tok.parse::<usize>().map_err(|_| Error::MalformedToken(tok.to_string()))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            text.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::MalformedToken(c.to_string()))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Permutation::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at 1-indexed position `pos`.
    pub fn value(&self, pos: usize) -> usize {
        self.values[pos - 1]
    }

    /// One-line values; index 0 holds the value at position 1.
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn into_values(self) -> Vec<usize> {
        self.values
    }

    /// `true` when `i` (in `1..n`) is a descent.
    pub fn is_descent(&self, i: usize) -> bool {
        i >= 1 && i < self.len() && self.value(i) > self.value(i + 1)
    }

    /// `true` when `i` (in `1..n`) is an ascent.
    pub fn is_ascent(&self, i: usize) -> bool {
        i >= 1 && i < self.len() && self.value(i) < self.value(i + 1)
    }

    pub fn descent_set(&self) -> PositionSet {
        PositionSet((1..self.len()).filter(|&i| self.is_descent(i)).collect())
    }

    pub fn ascent_set(&self) -> PositionSet {
        PositionSet((1..self.len()).filter(|&i| self.is_ascent(i)).collect())
    }

    pub fn major_index(&self) -> usize {
        self.descent_set().sum()
    }

    pub fn inversion_number(&self) -> usize {
        let v = &self.values;
        (0..v.len())
            .map(|i| v[i + 1..].iter().filter(|&&w| w < v[i]).count())
            .sum()
    }

    /// Maximal ascending runs, left to right.
    pub fn blocks(&self) -> Result<BlockDecomposition> {
        if self.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut blocks = Vec::new();
        let mut start = 1;
        for i in self.descent_set().iter() {
            blocks.push(Block { start, end: i });
            start = i + 1;
        }
        blocks.push(Block { start, end: self.len() });
        Ok(BlockDecomposition { blocks })
    }

    /// `ranks()[i - 1]` is the length of the longest increasing subsequence
    /// ending at position `i`.
    pub fn ranks(&self) -> Vec<usize> {
        let v = &self.values;
        let mut ranks = vec![1; v.len()];
        for j in 0..v.len() {
            for i in 0..j {
                if v[i] < v[j] && ranks[i] + 1 > ranks[j] {
                    ranks[j] = ranks[i] + 1;
                }
            }
        }
        ranks
    }

    /// Filled squares of the permutation matrix, by column.
    pub fn squares(&self) -> impl Iterator<Item = Square> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| Square::new(v, i + 1))
    }

    pub fn square_at(&self, col: usize) -> Square {
        Square::new(self.value(col), col)
    }

    pub fn is_filled(&self, sq: Square) -> bool {
        sq.col >= 1 && sq.col <= self.len() && self.value(sq.col) == sq.row
    }

    /// Rebuilds a permutation from a transversal of the `n`×`n` square.
    pub fn from_squares<I: IntoIterator<Item = Square>>(n: usize, squares: I) -> Result<Self> {
        let mut values = vec![0; n];
        for sq in squares {
            if sq.col == 0 || sq.col > n {
                return Err(Error::ValueOutOfRange { value: sq.col, n });
            }
            if values[sq.col - 1] != 0 {
                return Err(Error::Invariant(format!("column {} filled twice", sq.col)));
            }
            values[sq.col - 1] = sq.row;
        }
        if let Some(col) = values.iter().position(|&v| v == 0) {
            return Err(Error::Invariant(format!("column {} left empty", col + 1)));
        }
        Permutation::new(values)
    }

    /// All of `S_n` in lexicographic order.
    pub fn all(n: usize) -> AllPermutations {
        AllPermutations {
            next: Some((1..=n).collect()),
        }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.values)
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Permutation::parse(s)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub struct AllPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if next_lexicographic(&mut succ) {
            self.next = Some(succ);
        }
        Some(Permutation { values: current })
    }
}

fn next_lexicographic(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A sorted, duplicate-free subset of `{1..n-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositionSet(Vec<usize>);

impl PositionSet {
    pub fn new<I: IntoIterator<Item = usize>>(positions: I) -> Self {
        let mut v: Vec<usize> = positions.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PositionSet(v)
    }

    /// Bit `i - 1` of the mask stands for position `i`.
    pub fn from_mask(mask: u64) -> Self {
        PositionSet((1..=64).filter(|&i| mask >> (i - 1) & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &i| m | 1 << (i - 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for PositionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.0)
    }
}

impl Serialize for PositionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn positions(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecomposition {
    blocks: Vec<Block>,
}

impl BlockDecomposition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index (0-based) of the block holding `pos`.
    pub fn block_of(&self, pos: usize) -> usize {
        self.blocks.partition_point(|b| b.end < pos)
    }
}

/// A cell of the permutation matrix: `row` is a value, `col` a position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Square {
    pub row: usize,
    pub col: usize,
}

impl Square {
    pub fn new(row: usize, col: usize) -> Self {
        Square { row, col }
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

pub(crate) fn write_joined(f: &mut fmt::Formatter<'_>, items: &[usize]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(text: &str) -> Permutation {
        Permutation::parse(text).unwrap()
    }

    const EXAMPLE: &str = "1,3,5,7,6,8,9,4,10,2,11";

    /// Patience sorting: the pile an entry lands on is its rank.
    fn ranks_by_patience(p: &Permutation) -> Vec<usize> {
        let mut tops: Vec<usize> = Vec::new();
        p.values()
            .iter()
            .map(|&v| {
                let pile = tops.partition_point(|&t| t < v);
                if pile == tops.len() {
                    tops.push(v);
                } else {
                    tops[pile] = v;
                }
                pile + 1
            })
            .collect()
    }

    #[test]
    fn parse_forms() {
        assert_eq!(perm("1,3,2").values(), &[1, 3, 2]);
        assert_eq!(perm("4321").values(), &[4, 3, 2, 1]);
        assert_eq!(perm("").len(), 0);
        assert_eq!(Permutation::parse("1,3,3"), Err(Error::RepeatedValue(3)));
        assert_eq!(
            Permutation::parse("1,4,2"),
            Err(Error::ValueOutOfRange { value: 4, n: 3 })
        );
        assert!(matches!(Permutation::parse("1,,2"), Err(Error::MalformedToken(_))));
        assert!(matches!(Permutation::parse("1, 2"), Err(Error::MalformedToken(_))));
        assert!(matches!(Permutation::parse("12a"), Err(Error::MalformedToken(_))));
        assert_eq!(
            Permutation::parse("120"),
            Err(Error::ValueOutOfRange { value: 0, n: 3 })
        );
    }

    #[test]
    fn statistics_on_worked_example() {
        let p = perm(EXAMPLE);
        assert_eq!(p.descent_set().as_slice(), &[4, 7, 9]);
        assert_eq!(p.ascent_set().as_slice(), &[1, 2, 3, 5, 6, 8, 10]);
        assert_eq!(p.major_index(), 20);
        let blocks: Vec<_> = p.blocks().unwrap().blocks().iter().map(|b| (b.start, b.end)).collect();
        assert_eq!(blocks, vec![(1, 4), (5, 7), (8, 9), (10, 11)]);
        let high: Vec<usize> = p
            .ranks()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r >= 5)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(high, vec![6, 7, 9, 11]);
    }

    #[test]
    fn statistics_small_cases() {
        assert!(Permutation::identity(6).descent_set().is_empty());
        assert_eq!(perm("4321").descent_set().as_slice(), &[1, 2, 3]);
        assert_eq!(perm("123").ascent_set().as_slice(), &[1, 2]);
        assert!(perm("21").ascent_set().is_empty());
        assert_eq!(Permutation::identity(5).major_index(), 0);
        assert_eq!(perm("321").major_index(), 3);
        assert_eq!(perm("4321").inversion_number(), 6);
        assert_eq!(Permutation::identity(4).inversion_number(), 0);
        assert_eq!(perm("132").inversion_number(), 1);
        assert_eq!(Permutation::identity(4).ranks(), vec![1, 2, 3, 4]);
        assert_eq!(perm("4321").ranks(), vec![1, 1, 1, 1]);
        assert_eq!(Permutation::identity(4).blocks().unwrap().len(), 1);
        assert_eq!(perm("321").blocks().unwrap().len(), 3);
        assert_eq!(Permutation::identity(0).blocks(), Err(Error::EmptyInput));
        assert!(Permutation::identity(0).descent_set().is_empty());
        assert_eq!(Permutation::identity(0).major_index(), 0);
    }

    #[test]
    fn ranks_match_patience_sorting_exhaustively() {
        for n in 0..=7 {
            for p in Permutation::all(n) {
                assert_eq!(p.ranks(), ranks_by_patience(&p), "{p}");
            }
        }
    }

    #[test]
    fn all_is_lexicographic_and_complete() {
        let all: Vec<_> = Permutation::all(4).collect();
        assert_eq!(all.len(), 24);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Permutation::all(0).count(), 1);
    }

    #[test]
    fn matrix_view_round_trips() {
        let p = perm(EXAMPLE);
        assert!(p.is_filled(Square::new(7, 4)));
        assert!(!p.is_filled(Square::new(4, 7)));
        let back = Permutation::from_squares(p.len(), p.squares()).unwrap();
        assert_eq!(back, p);
        assert!(Permutation::from_squares(2, [Square::new(1, 1), Square::new(2, 1)]).is_err());
    }

    #[test]
    fn block_of_finds_containing_block() {
        let b = perm(EXAMPLE).blocks().unwrap();
        assert_eq!(b.block_of(1), 0);
        assert_eq!(b.block_of(5), 1);
        assert_eq!(b.block_of(9), 2);
        assert_eq!(b.block_of(11), 3);
    }

    fn arb_perm() -> impl Strategy<Value = Permutation> {
        (0usize..12)
            .prop_flat_map(|n| Just((1..=n).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|v| Permutation::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(p in arb_perm()) {
            prop_assert_eq!(Permutation::parse(&p.to_string()).unwrap(), p);
        }

        #[test]
        fn descents_and_ascents_partition(p in arb_perm()) {
            let d = p.descent_set();
            let a = p.ascent_set();
            prop_assert_eq!(d.mask() & a.mask(), 0);
            let full = if p.len() < 2 { 0 } else { (1u64 << (p.len() - 1)) - 1 };
            prop_assert_eq!(d.mask() | a.mask(), full);
            prop_assert_eq!(p.major_index(), d.iter().sum::<usize>());
            prop_assert_eq!(PositionSet::from_mask(d.mask()), d);
        }

        #[test]
        fn blocks_rebuild_and_ranks_climb(p in arb_perm().prop_filter("nonempty", |p| !p.is_empty())) {
            let blocks = p.blocks().unwrap();
            prop_assert_eq!(blocks.len(), p.descent_set().len() + 1);
            let ranks = p.ranks();
            let mut rebuilt = Vec::new();
            for b in blocks.blocks() {
                for i in b.positions() {
                    rebuilt.push(p.value(i));
                    if i > b.start {
                        prop_assert!(p.value(i - 1) < p.value(i));
                        prop_assert!(ranks[i - 2] < ranks[i - 1]);
                    }
                }
            }
            prop_assert_eq!(rebuilt.as_slice(), p.values());
        }
    }
}
