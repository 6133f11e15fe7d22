//! The composed bijections `S_n(G_k) <-> S_n(F_k)` and descent-set /
//! major-index distributions over avoidance classes.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pattern::{avoiders, avoiders_starting_with, PatternSpec};
use crate::perm::{Permutation, PositionSet};
use crate::slide::{phi_map, psi_map};
use crate::west::{f_map, g_map};

/// `Psi ∘ f`: `S_n(G_k) -> S_n(F_k)`, preserving the descent set.
pub fn theta_g_to_f(p: &Permutation, k: usize) -> Result<Permutation> {
    psi_map(&f_map(p, k)?, k)
}

/// `g ∘ Phi`: `S_n(F_k) -> S_n(G_k)`, the inverse of [`theta_g_to_f`].
pub fn theta_f_to_g(q: &Permutation, k: usize) -> Result<Permutation> {
    g_map(&phi_map(q, k)?, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum KeyKind {
    DescentSet,
    MajorIndex,
}

impl KeyKind {
    fn key(self, p: &Permutation) -> u64 {
        match self {
            KeyKind::DescentSet => p.descent_set().mask(),
            KeyKind::MajorIndex => p.major_index() as u64,
        }
    }
}

/// Which avoidance class to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// `S_n(12…(k-2)k(k-1))`
    G,
    /// `S_n(23…k1)`
    F,
    /// `S_n(H_k, Q_k)`
    HQ,
}

impl Side {
    pub fn specs(self, k: usize) -> Vec<PatternSpec> {
        match self {
            Side::G => vec![PatternSpec::Classical(PatternSpec::g(k))],
            Side::F => vec![PatternSpec::Classical(PatternSpec::f(k))],
            Side::HQ => vec![PatternSpec::H(k), PatternSpec::Q(k)],
        }
    }
}

/// Counts of permutations grouped by descent set (stored as a position
/// bitmask) or by major index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    pub key_kind: KeyKind,
    pub n: usize,
    pub k: Option<usize>,
    pub pattern: String,
    pub entries: BTreeMap<u64, u64>,
}

impl CountTable {
    pub fn new(key_kind: KeyKind, n: usize, k: Option<usize>, pattern: impl Into<String>) -> Self {
        CountTable {
            key_kind,
            n,
            k,
            pattern: pattern.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, p: &Permutation) {
        *self.entries.entry(self.key_kind.key(p)).or_insert(0) += 1;
    }

    pub fn merge(mut self, other: CountTable) -> CountTable {
        for (key, count) in other.entries {
            *self.entries.entry(key).or_insert(0) += count;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn get(&self, key: u64) -> u64 {
        self.entries.get(&key).copied().unwrap_or(0)
    }

    /// Same key kind, `n` and counts; labels may differ.
    pub fn same_counts(&self, other: &CountTable) -> bool {
        self.key_kind == other.key_kind && self.n == other.n && self.entries == other.entries
    }

    pub fn render_key(&self, key: u64) -> String {
        match self.key_kind {
            KeyKind::DescentSet => PositionSet::from_mask(key).to_string(),
            KeyKind::MajorIndex => key.to_string(),
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["key", "count"])?;
        for (&key, count) in &self.entries {
            w.write_record([self.render_key(key), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct RenderedEntries<'a>(&'a CountTable);

impl Serialize for RenderedEntries<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.entries.len()))?;
        for (&key, count) in &self.0.entries {
            map.serialize_entry(&self.0.render_key(key), count)?;
        }
        map.end()
    }
}

impl Serialize for CountTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CountTable", 5)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("pattern", &self.pattern)?;
        st.serialize_field("key_kind", &self.key_kind)?;
        st.serialize_field("entries", &RenderedEntries(self))?;
        st.end()
    }
}

impl fmt::Display for CountTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (&key, count) in &self.entries {
            writeln!(f, "{{{}}}\t{count}", self.render_key(key))?;
        }
        Ok(())
    }
}

pub fn specs_label(specs: &[PatternSpec]) -> String {
    specs.iter().map(|s| s.label()).collect::<Vec<_>>().join(" ")
}

/// Runs `visit` over `S_n(specs)` split by first value, in parallel, and
/// merges the per-slice results with `merge`.
pub fn par_fold_avoiders<T, F, M>(n: usize, specs: &[PatternSpec], init: impl Fn() -> T + Sync, visit: F, merge: M) -> T
where
    T: Send,
    F: Fn(&mut T, Permutation) + Sync,
    M: Fn(T, T) -> T + Sync,
{
    if n == 0 {
        let mut acc = init();
        for p in avoiders(0, specs) {
            visit(&mut acc, p);
        }
        return acc;
    }
    (1..=n)
        .into_par_iter()
        .map(|first| {
            let mut acc = init();
            for p in avoiders_starting_with(n, specs, first) {
                visit(&mut acc, p);
            }
            acc
        })
        .reduce(&init, &merge)
}

/// Tallies `S_n(specs)` by `key_kind`.
pub fn tally_avoiders(n: usize, k: Option<usize>, specs: &[PatternSpec], key_kind: KeyKind) -> CountTable {
    let label = specs_label(specs);
    par_fold_avoiders(
        n,
        specs,
        || CountTable::new(key_kind, n, k, label.clone()),
        |t, p| t.add(&p),
        CountTable::merge,
    )
}

/// Tallies one side of the equivalence by enumeration.
pub fn distribution(n: usize, k: usize, side: Side, key_kind: KeyKind) -> Result<CountTable> {
    check_k(k)?;
    Ok(tally_avoiders(n, Some(k), &side.specs(k), key_kind))
}

/// Tallies the images of `S_n(G_k)` under [`theta_g_to_f`], keyed by the
/// image's statistic. Equals `distribution(n, k, Side::F, key_kind)` exactly
/// when the map is a statistic-preserving bijection onto `S_n(F_k)`.
pub fn image_distribution(n: usize, k: usize, key_kind: KeyKind) -> Result<CountTable> {
    check_k(k)?;
    let specs = Side::G.specs(k);
    let label = format!("theta({})", specs_label(&specs));
    par_fold_avoiders(
        n,
        &specs,
        || Ok(CountTable::new(key_kind, n, Some(k), label.clone())),
        |acc: &mut Result<CountTable>, p| {
            if let Ok(t) = acc {
                match theta_g_to_f(&p, k) {
                    Ok(image) => t.add(&image),
                    Err(e) => *acc = Err(e),
                }
            }
        },
        |a, b| Ok(a?.merge(b?)),
    )
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::BadParameter(format!("k must be at least 3, got {k}")));
    }
    Ok(())
}

/// `D^t_n = {t, 2t, 3t, …} ∩ {1, …, n-1}`.
pub fn dt_set(n: usize, t: usize) -> Result<PositionSet> {
    if t == 0 {
        return Err(Error::BadParameter("t must be at least 1".into()));
    }
    Ok(PositionSet::new((1..n).filter(|i| i % t == 0).collect::<Vec<_>>()))
}

/// Avoiders of `specs` in `S_n` whose descent set is exactly `D^t_n`.
pub fn dt_count(n: usize, specs: &[PatternSpec], t: usize) -> Result<u64> {
    let target = dt_set(n, t)?.mask();
    Ok(par_fold_avoiders(
        n,
        specs,
        || 0u64,
        |c, p| {
            if p.descent_set().mask() == target {
                *c += 1;
            }
        },
        |a, b| a + b,
    ))
}

/// `(|S^t_n(G_k)|, |S^t_n(F_k)|)`.
pub fn dt_counts(n: usize, k: usize, t: usize) -> Result<(u64, u64)> {
    check_k(k)?;
    Ok((dt_count(n, &Side::G.specs(k), t)?, dt_count(n, &Side::F.specs(k), t)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(text: &str) -> Permutation {
        Permutation::parse(text).unwrap()
    }

    #[test]
    fn theta_small_examples() {
        assert_eq!(theta_f_to_g(&perm("1324"), 3).unwrap(), perm("3412"));
        assert_eq!(theta_g_to_f(&perm("3412"), 3).unwrap(), perm("1324"));
        let d = Permutation::decreasing(7);
        assert_eq!(theta_g_to_f(&d, 4).unwrap(), d);
        assert_eq!(theta_f_to_g(&d, 4).unwrap(), d);
    }

    #[test]
    fn theta_rejects_wrong_class() {
        assert!(theta_g_to_f(&perm("132"), 3).unwrap_err().is_precondition());
        assert!(theta_f_to_g(&perm("231"), 3).unwrap_err().is_precondition());
    }

    #[test]
    fn distributions_small() {
        let g = distribution(4, 3, Side::G, KeyKind::MajorIndex).unwrap();
        let f = distribution(4, 3, Side::F, KeyKind::MajorIndex).unwrap();
        assert!(g.same_counts(&f));
        assert_eq!(g.total(), 14);
        let empty = distribution(0, 3, Side::G, KeyKind::DescentSet).unwrap();
        assert_eq!(empty.entries, BTreeMap::from([(0, 1)]));
        let empty = distribution(0, 3, Side::F, KeyKind::MajorIndex).unwrap();
        assert_eq!(empty.entries, BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn image_matches_enumeration() {
        for n in 0..=6 {
            for k in 3..=4 {
                let img = image_distribution(n, k, KeyKind::DescentSet).unwrap();
                let f = distribution(n, k, Side::F, KeyKind::DescentSet).unwrap();
                assert!(img.same_counts(&f), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn dt() {
        assert_eq!(dt_set(7, 2).unwrap().as_slice(), &[2, 4, 6]);
        assert!(dt_set(3, 5).unwrap().is_empty());
        assert!(dt_set(3, 0).is_err());
        for n in 1..=6 {
            assert_eq!(dt_counts(n, 3, 1).unwrap(), (1, 1));
            assert_eq!(dt_counts(n, 3, n).unwrap(), (1, 1));
        }
        let (a, b) = dt_counts(6, 3, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_and_csv_shapes() {
        let t = distribution(3, 3, Side::G, KeyKind::DescentSet).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["k"], 3);
        assert_eq!(v["pattern"], "1,3,2");
        assert_eq!(v["key_kind"], "DescentSet");
        // 123 | 213, 312 | 231 | 321 ; 132 is excluded
        assert_eq!(v["entries"][""], 1);
        assert_eq!(v["entries"]["1"], 2);
        assert_eq!(v["entries"]["2"], 1);
        assert_eq!(v["entries"]["1,2"], 1);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "key,count\n,1\n1,2\n2,1\n\"1,2\",1\n");
    }
}
