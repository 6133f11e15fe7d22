//! Exhaustive verification suites over a small parameter grid.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::equivalence::{dt_count, tally_avoiders, CountTable, KeyKind, Side};
use crate::error::{Error, Result};
use crate::pattern::{avoiders, PatternSpec};
use crate::perm::Permutation;
use crate::slide::{audit_phi_trajectory, audit_psi_trajectory, phi_map, phi_trajectory, psi_map, psi_trajectory};
use crate::west::{f_map, g_map};

/// Stored failures are capped; `failure_count` keeps the full number.
pub const MAX_REPORTED_FAILURES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Roundtrip,
    Descents,
    Image,
    Counts,
    Dt,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [
        Suite::Roundtrip,
        Suite::Descents,
        Suite::Image,
        Suite::Counts,
        Suite::Dt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Roundtrip => "roundtrip",
            Suite::Descents => "descents",
            Suite::Image => "image",
            Suite::Counts => "counts",
            Suite::Dt => "dt",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(&[Suite::All])
            .copied()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::BadParameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub n_max: usize,
    pub ks: Vec<usize>,
    pub ts: Vec<usize>,
    /// Cap on `n` for `k >= 5`, where the classes grow fastest.
    pub large_k_n_max: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            n_max: 7,
            ks: vec![3, 4, 5],
            ts: vec![1, 2, 3],
            large_k_n_max: 6,
        }
    }
}

impl Grid {
    pub fn n_max_for(&self, k: usize) -> usize {
        if k >= 5 {
            self.n_max.min(self.large_k_n_max)
        } else {
            self.n_max
        }
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        self.ks
            .iter()
            .flat_map(|&k| (0..=self.n_max_for(k)).map(move |n| (n, k)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub check: String,
    pub n: usize,
    pub k: usize,
    pub input: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub grid: Grid,
    pub checks: u64,
    pub failure_count: u64,
    pub failures: Vec<Failure>,
    pub wall_time_ms: u128,
    pub passed: bool,
}

pub type MapFn = fn(&Permutation, usize) -> Result<Permutation>;

/// The four maps under test. Swapping one out lets the harness be checked
/// against a deliberately broken implementation.
#[derive(Clone, Copy)]
pub struct Maps {
    pub f: MapFn,
    pub g: MapFn,
    pub phi: MapFn,
    pub psi: MapFn,
}

impl Default for Maps {
    fn default() -> Self {
        Maps {
            f: f_map,
            g: g_map,
            phi: phi_map,
            psi: psi_map,
        }
    }
}

impl Maps {
    fn theta(&self, p: &Permutation, k: usize) -> Result<Permutation> {
        (self.psi)(&(self.f)(p, k)?, k)
    }

    fn theta_inv(&self, q: &Permutation, k: usize) -> Result<Permutation> {
        (self.g)(&(self.phi)(q, k)?, k)
    }
}

#[derive(Default)]
struct Tally {
    checks: u64,
    failure_count: u64,
    failures: Vec<Failure>,
}

impl Tally {
    fn record(&mut self, ok: bool, fail: impl FnOnce() -> Failure) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < MAX_REPORTED_FAILURES {
                self.failures.push(fail());
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.failure_count += other.failure_count;
        let room = MAX_REPORTED_FAILURES - self.failures.len();
        self.failures.extend(other.failures.into_iter().take(room));
        self
    }
}

/// Per-cell context so checks can be written as one-liners.
struct Cell<'a> {
    n: usize,
    k: usize,
    tally: &'a mut Tally,
}

impl Cell<'_> {
    fn expect_eq(
        &mut self,
        check: &str,
        input: &dyn fmt::Display,
        expected: &dyn fmt::Display,
        actual: Result<String>,
    ) {
        let expected = expected.to_string();
        let actual = actual.unwrap_or_else(|e| format!("error: {e}"));
        let (n, k) = (self.n, self.k);
        self.tally.record(actual == expected, || Failure {
            check: check.to_string(),
            n,
            k,
            input: input.to_string(),
            expected,
            actual,
        });
    }

    fn expect(&mut self, check: &str, input: &dyn fmt::Display, ok: std::result::Result<(), String>) {
        let (n, k) = (self.n, self.k);
        let ok_flag = ok.is_ok();
        self.tally.record(ok_flag, || Failure {
            check: check.to_string(),
            n,
            k,
            input: input.to_string(),
            expected: "ok".into(),
            actual: ok.err().unwrap_or_default(),
        });
    }
}

fn class(n: usize, k: usize, side: Side) -> Vec<Permutation> {
    avoiders(n, &side.specs(k)).collect()
}

fn each(n: usize, k: usize, perms: &[Permutation], body: impl Fn(&Permutation, &mut Cell) + Sync) -> Tally {
    perms
        .par_iter()
        .fold(Tally::default, |mut tally, p| {
            body(
                p,
                &mut Cell {
                    n,
                    k,
                    tally: &mut tally,
                },
            );
            tally
        })
        .reduce(Tally::default, Tally::merge)
}

fn avoids_all(p: &Permutation, specs: &[PatternSpec]) -> std::result::Result<(), String> {
    match specs.iter().find(|s| !s.is_avoided_by(p)) {
        None => Ok(()),
        Some(s) => Err(format!("contains {s}")),
    }
}

fn shown(r: Result<Permutation>) -> Result<String> {
    r.map(|p| p.to_string())
}

fn roundtrip_cell(n: usize, k: usize, maps: &Maps) -> Tally {
    let hq = Side::HQ.specs(k);
    let f_spec = Side::F.specs(k);
    let g_side = each(n, k, &class(n, k, Side::G), |p, c| {
        match (maps.f)(p, k) {
            Ok(q) => {
                c.expect("f(p) avoids H_k and Q_k", p, avoids_all(&q, &hq));
                c.expect_eq("g(f(p)) = p", p, p, shown((maps.g)(&q, k)));
            }
            Err(e) => c.expect("f(p) defined", p, Err(e.to_string())),
        }
        match maps.theta(p, k) {
            Ok(r) => {
                c.expect("theta(p) avoids F_k", p, avoids_all(&r, &f_spec));
                c.expect_eq("theta_inv(theta(p)) = p", p, p, shown(maps.theta_inv(&r, k)));
            }
            Err(e) => c.expect("theta(p) defined", p, Err(e.to_string())),
        }
    });
    let f_side = each(n, k, &class(n, k, Side::F), |p, c| {
        c.expect_eq(
            "Psi(Phi(p)) = p",
            p,
            p,
            (maps.phi)(p, k).and_then(|q| shown((maps.psi)(&q, k))),
        );
        let audit = phi_trajectory(p, k)
            .map_err(|e| e.to_string())
            .and_then(|t| audit_phi_trajectory(&t, k));
        c.expect("Phi trajectory steps", p, audit);
    });
    let hq_side = each(n, k, &class(n, k, Side::HQ), |q, c| {
        c.expect_eq("f(g(q)) = q", q, q, (maps.g)(q, k).and_then(|p| shown((maps.f)(&p, k))));
        c.expect_eq(
            "Phi(Psi(q)) = q",
            q,
            q,
            (maps.psi)(q, k).and_then(|p| shown((maps.phi)(&p, k))),
        );
        let audit = psi_trajectory(q, k)
            .map_err(|e| e.to_string())
            .and_then(|t| audit_psi_trajectory(&t, k));
        c.expect("Psi trajectory steps", q, audit);
    });
    g_side.merge(f_side).merge(hq_side)
}

fn descents_cell(n: usize, k: usize, maps: &Maps) -> Tally {
    let d = |r: Result<Permutation>| r.map(|p| p.descent_set().to_string());
    let g_side = each(n, k, &class(n, k, Side::G), |p, c| {
        let want = p.descent_set();
        c.expect_eq("D(f(p)) = D(p)", p, &want, d((maps.f)(p, k)));
        c.expect_eq("D(theta(p)) = D(p)", p, &want, d(maps.theta(p, k)));
    });
    let f_side = each(n, k, &class(n, k, Side::F), |p, c| {
        let want = p.descent_set();
        c.expect_eq("D(Phi(p)) = D(p)", p, &want, d((maps.phi)(p, k)));
        c.expect_eq("D(theta_inv(p)) = D(p)", p, &want, d(maps.theta_inv(p, k)));
    });
    let hq_side = each(n, k, &class(n, k, Side::HQ), |q, c| {
        let want = q.descent_set();
        c.expect_eq("D(g(q)) = D(q)", q, &want, d((maps.g)(q, k)));
        c.expect_eq("D(Psi(q)) = D(q)", q, &want, d((maps.psi)(q, k)));
    });
    g_side.merge(f_side).merge(hq_side)
}

/// Compares the image of `domain` under `map` with `target`, both as sets
/// and in size (so a non-injective map fails even if it is onto).
fn image_check(
    cell: &mut Cell,
    check: &str,
    domain: &[Permutation],
    target: &[Permutation],
    map: impl Fn(&Permutation) -> Result<Permutation> + Sync + Send,
) {
    let images: Vec<Result<Permutation>> = domain.par_iter().map(map).collect();
    if let Some((p, Err(e))) = domain.iter().zip(&images).find(|(_, r)| r.is_err()) {
        cell.expect(check, p, Err(e.to_string()));
        return;
    }
    let image: BTreeSet<Permutation> = images.into_iter().map(|r| r.unwrap()).collect();
    let target_set: BTreeSet<Permutation> = target.iter().cloned().collect();
    let ctx = format!("n={} k={}", cell.n, cell.k);
    let verdict = if image.len() != domain.len() {
        Err(format!("{} distinct images of {} inputs", image.len(), domain.len()))
    } else if let Some(extra) = image.difference(&target_set).next() {
        Err(format!("{extra} is an image outside the target class"))
    } else if let Some(missed) = target_set.difference(&image).next() {
        Err(format!("{missed} is not an image"))
    } else {
        Ok(())
    };
    cell.expect(check, &ctx, verdict);
}

fn image_cell(n: usize, k: usize, maps: &Maps) -> Tally {
    let (g, f, hq) = (class(n, k, Side::G), class(n, k, Side::F), class(n, k, Side::HQ));
    let mut tally = Tally::default();
    let mut c = Cell {
        n,
        k,
        tally: &mut tally,
    };
    image_check(&mut c, "f: S_n(G_k) onto S_n(H_k,Q_k)", &g, &hq, |p| (maps.f)(p, k));
    image_check(&mut c, "g: S_n(H_k,Q_k) onto S_n(G_k)", &hq, &g, |q| (maps.g)(q, k));
    image_check(&mut c, "Phi: S_n(F_k) onto S_n(H_k,Q_k)", &f, &hq, |p| (maps.phi)(p, k));
    image_check(&mut c, "Psi: S_n(H_k,Q_k) onto S_n(F_k)", &hq, &f, |q| (maps.psi)(q, k));
    image_check(&mut c, "theta: S_n(G_k) onto S_n(F_k)", &g, &f, |p| maps.theta(p, k));
    tally
}

pub fn catalan(n: usize) -> u64 {
    let mut c = vec![1u64];
    for m in 1..=n {
        c.push((0..m).map(|i| c[i] * c[m - 1 - i]).sum());
    }
    c[n]
}

fn counts_cell(n: usize, k: usize, maps: &Maps) -> Tally {
    let mut tally = Tally::default();
    let mut c = Cell {
        n,
        k,
        tally: &mut tally,
    };
    let ctx = format!("n={n} k={k}");
    let table = |side: Side, kind| tally_avoiders(n, Some(k), &side.specs(k), kind);
    let show = |t: &CountTable| serde_json::to_string(&t.entries).unwrap_or_default();
    for kind in [KeyKind::DescentSet, KeyKind::MajorIndex] {
        let (g, f) = (table(Side::G, kind), table(Side::F, kind));
        let name = format!("{kind:?} distribution of S_n(G_k) = S_n(F_k)");
        c.expect_eq(&name, &ctx, &show(&g), Ok(show(&f)));
        let mut image = CountTable::new(kind, n, Some(k), "image");
        let mut broken = None;
        for p in avoiders(n, &Side::G.specs(k)) {
            match maps.theta(&p, k) {
                Ok(q) => image.add(&q),
                Err(e) => {
                    broken = Some(e);
                    break;
                }
            }
        }
        let name = format!("{kind:?} distribution of theta(S_n(G_k)) = S_n(F_k)");
        let got = match broken {
            Some(e) => Err(e),
            None => Ok(show(&image)),
        };
        c.expect_eq(&name, &ctx, &show(&f), got);
        if kind == KeyKind::DescentSet {
            let hq = avoiders(n, &Side::HQ.specs(k)).count() as u64;
            c.expect_eq("|S_n(H_k,Q_k)| = |S_n(G_k)|", &ctx, &g.total(), Ok(hq.to_string()));
            let raw = avoiders(n, &Side::G.specs(k)).count() as u64;
            c.expect_eq("table total = class size", &ctx, &raw, Ok(g.total().to_string()));
            if k == 3 {
                c.expect_eq("|S_n(132)| = Catalan(n)", &ctx, &catalan(n), Ok(g.total().to_string()));
                c.expect_eq("|S_n(231)| = Catalan(n)", &ctx, &catalan(n), Ok(f.total().to_string()));
            }
        }
    }
    tally
}

fn dt_cell(n: usize, k: usize, ts: &[usize]) -> Tally {
    let mut tally = Tally::default();
    let mut c = Cell {
        n,
        k,
        tally: &mut tally,
    };
    for &t in ts {
        let ctx = format!("n={n} k={k} t={t}");
        let g = dt_count(n, &Side::G.specs(k), t);
        let f = dt_count(n, &Side::F.specs(k), t);
        match (g, f) {
            (Ok(g), Ok(f)) => {
                c.expect_eq("|S^t_n(G_k)| = |S^t_n(F_k)|", &ctx, &g, Ok(f.to_string()));
                if t == 1 || t >= n {
                    c.expect_eq("|S^t_n(G_k)| = 1 when t = 1 or t >= n", &ctx, &1, Ok(g.to_string()));
                }
            }
            (Err(e), _) | (_, Err(e)) => c.expect("dt counts", &ctx, Err(e.to_string())),
        }
    }
    tally
}

fn run_one(suite: Suite, grid: &Grid, maps: &Maps) -> Tally {
    grid.cells()
        .into_iter()
        .map(|(n, k)| match suite {
            Suite::Roundtrip => roundtrip_cell(n, k, maps),
            Suite::Descents => descents_cell(n, k, maps),
            Suite::Image => image_cell(n, k, maps),
            Suite::Counts => counts_cell(n, k, maps),
            Suite::Dt => dt_cell(n, k, &grid.ts),
            Suite::All => Suite::EACH.iter().fold(Tally::default(), |acc, &s| {
                acc.merge(run_one(
                    s,
                    &Grid {
                        n_max: n,
                        ..single(grid, n, k)
                    },
                    maps,
                ))
            }),
        })
        .fold(Tally::default(), Tally::merge)
}

fn single(grid: &Grid, n: usize, k: usize) -> Grid {
    Grid {
        n_max: n,
        ks: vec![k],
        ts: grid.ts.clone(),
        large_k_n_max: n,
    }
}

/// Runs `suite` over `grid` with the maps in `maps`. `n` ranges over
/// `0..=grid.n_max_for(k)` for each `k`; every `(n, k)` cell runs only its
/// own size.
pub fn run_suite_with(suite: Suite, grid: &Grid, maps: &Maps) -> Result<VerifyReport> {
    if let Some(&k) = grid.ks.iter().find(|&&k| k < 3) {
        return Err(Error::BadParameter(format!("k must be at least 3, got {k}")));
    }
    if grid.ts.contains(&0) {
        return Err(Error::BadParameter("t must be at least 1".into()));
    }
    let start = Instant::now();
    let tally = run_one(suite, grid, maps);
    Ok(VerifyReport {
        suite,
        grid: grid.clone(),
        checks: tally.checks,
        failure_count: tally.failure_count,
        passed: tally.failure_count == 0,
        failures: tally.failures,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

pub fn run_suite(suite: Suite, grid: &Grid) -> Result<VerifyReport> {
    run_suite_with(suite, grid, &Maps::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Grid {
        Grid {
            n_max: 5,
            ks: vec![3, 4],
            ts: vec![1, 2, 3],
            large_k_n_max: 5,
        }
    }

    #[test]
    fn catalan_numbers() {
        let seq: Vec<u64> = (0..=8).map(catalan).collect();
        assert_eq!(seq, vec![1, 1, 2, 5, 14, 42, 132, 429, 1430]);
    }

    #[test]
    fn suite_names() {
        for s in Suite::EACH.iter().chain(&[Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn every_suite_passes_on_small_grid() {
        for s in Suite::EACH {
            let r = run_suite(s, &small()).unwrap();
            assert!(r.passed, "{s}: {:?}", r.failures);
            assert!(r.checks > 0, "{s}");
        }
        let all = run_suite(Suite::All, &small()).unwrap();
        assert!(all.passed);
    }

    #[test]
    fn vacuous_grid() {
        let g = Grid { n_max: 0, ..small() };
        let r = run_suite(Suite::Roundtrip, &g).unwrap();
        assert!(r.passed);
        assert!(run_suite(Suite::Roundtrip, &Grid { ks: vec![2], ..small() }).is_err());
    }

    fn corrupted_g(q: &Permutation, k: usize) -> Result<Permutation> {
        let p = g_map(q, k)?;
        if p.len() >= 3 && p.value(1) < p.value(2) {
            let mut v = p.into_values();
            v.swap(0, 1);
            return Permutation::new(v);
        }
        Ok(p)
    }

    #[test]
    fn corrupted_map_is_caught() {
        let maps = Maps {
            g: corrupted_g,
            ..Maps::default()
        };
        let r = run_suite_with(Suite::Roundtrip, &small(), &maps).unwrap();
        assert!(!r.passed);
        let f = &r.failures[0];
        assert_ne!(f.expected, f.actual);
        assert!(!f.input.is_empty());
        assert!(r.failure_count >= r.failures.len() as u64);
    }
}
