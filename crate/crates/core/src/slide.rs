//! The slide bijection `Phi : S_n(F_k) -> S_n(H_k, Q_k)` and its inverse
//! `Psi`, built from single steps `phi` and `psi`.
//!
//! Each `phi` step picks one `H_k` or `Q_k` occurrence by extremal rules and
//! rewrites a submatrix of the permutation matrix so that occurrence becomes
//! an `F_k`; `psi` goes the other way. The steps work on squares
//! `(row = value, col = position)`, rows counted from the bottom, so
//! "highest" means largest value and "lowest" smallest.
//!
//! Case pairing between the two directions:
//!
//! | phi case | rewrite            | undone by psi case |
//! |----------|--------------------|--------------------|
//! | 1 (H)    | alpha              | 2 (delta)          |
//! | 2 (H)    | beta               | 3 (gamma)          |
//! | 3 (Q)    | theta              | 1 (theta inverse)  |
//! | 4 (Q)    | beta, `q_{k-1}` out | 4 (gamma, `q_{k-1}` out) |

use std::fmt;

use crate::error::{Error, Result};
use crate::pattern::{all_classical, all_h, all_q, contains_classical, contains_h, contains_q, PatternSpec};
use crate::perm::{Permutation, Square};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    H,
    Q,
    F,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::H => "H",
            Kind::Q => "Q",
            Kind::F => "F",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    One,
    Two,
    Three,
    Four,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::One => 1,
            Case::Two => 2,
            Case::Three => 3,
            Case::Four => 4,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Common view of the two selection types, used for tracing.
pub trait Selection {
    fn kind(&self) -> Kind;
    fn case(&self) -> Case;
    fn squares(&self) -> &[Square];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiSelection {
    /// `(p_1,q_1), …, (p_k,q_k)` left to right.
    pub squares: Vec<Square>,
    pub kind: Kind,
    pub case: Case,
    /// Start of the ascending run moved by case 1.
    pub s: Option<usize>,
    /// End of the descending run moved by cases 2 and 4.
    pub t: Option<usize>,
}

impl Selection for PhiSelection {
    fn kind(&self) -> Kind {
        self.kind
    }
    fn case(&self) -> Case {
        self.case
    }
    fn squares(&self) -> &[Square] {
        &self.squares
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiSelection {
    /// `(p_1,q_1), …, (p_k,q_k)` left to right; they form an `F_k`.
    pub squares: Vec<Square>,
    pub case: Case,
    pub t: Option<usize>,
}

impl Selection for PsiSelection {
    fn kind(&self) -> Kind {
        Kind::F
    }
    fn case(&self) -> Case {
        self.case
    }
    fn squares(&self) -> &[Square] {
        &self.squares
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step<S> {
    /// 1-based iteration number.
    pub index: usize,
    pub selection: S,
    pub result: Permutation,
}

impl<S: Selection> Step<S> {
    /// `index<TAB>kind<TAB>case<TAB>(row,col) …<TAB>result`
    pub fn trace_line(&self) -> String {
        let squares: Vec<String> = self.selection.squares().iter().map(|s| s.to_string()).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.index,
            self.selection.kind(),
            self.selection.case(),
            squares.join(" "),
            self.result
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory<S> {
    pub input: Permutation,
    pub steps: Vec<Step<S>>,
}

impl<S> Trajectory<S> {
    pub fn output(&self) -> &Permutation {
        self.steps.last().map_or(&self.input, |s| &s.result)
    }

    /// The permutation before step `i` (0-based).
    pub fn before(&self, i: usize) -> &Permutation {
        if i == 0 {
            &self.input
        } else {
            &self.steps[i - 1].result
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::BadParameter(format!("k must be at least 3, got {k}")));
    }
    Ok(())
}

fn first_ascent_after(p: &Permutation, q: usize) -> usize {
    (q + 1..p.len()).find(|&t| p.is_ascent(t)).unwrap_or(p.len())
}

fn first_descent_after(p: &Permutation, q: usize) -> usize {
    (q + 1..p.len()).find(|&t| p.is_descent(t)).unwrap_or(p.len())
}

/// Keeps the candidates whose `key` is extremal. Each row and column holds
/// exactly one filled square, so the survivors agree on the chosen entry.
fn retain_extremal<T>(cands: &mut Vec<T>, key: impl Fn(&T) -> usize, maximise: bool) {
    let best = if maximise {
        cands.iter().map(&key).max()
    } else {
        cands.iter().map(&key).min()
    };
    if let Some(best) = best {
        cands.retain(|c| key(c) == best);
    }
}

/// Chooses the `H_k`/`Q_k` occurrence that `phi` rewrites, or `None` when
/// `p` avoids both.
///
/// The first square is the highest one that starts some occurrence; squares
/// two through `k-1` are then taken leftmost, one at a time, among
/// occurrences of either kind that extend the squares fixed so far. If an
/// `H_k` completes them, the highest completing square wins; otherwise the
/// leftmost square completing a `Q_k`.
pub fn phi_select(p: &Permutation, k: usize) -> Result<Option<PhiSelection>> {
    check_k(k)?;
    let mut cands: Vec<(Kind, Vec<usize>)> = all_h(p, k)
        .into_iter()
        .map(|o| (Kind::H, o.positions().to_vec()))
        .chain(all_q(p, k).into_iter().map(|o| (Kind::Q, o.positions().to_vec())))
        .collect();
    if cands.is_empty() {
        return Ok(None);
    }
    retain_extremal(&mut cands, |(_, pos)| p.value(pos[0]), true);
    for idx in 1..k - 1 {
        retain_extremal(&mut cands, |(_, pos)| pos[idx], false);
    }
    let (kind, cols) = if cands.iter().any(|(kind, _)| *kind == Kind::H) {
        cands.retain(|(kind, _)| *kind == Kind::H);
        retain_extremal(&mut cands, |(_, pos)| p.value(pos[k - 1]), true);
        cands.swap_remove(0)
    } else {
        retain_extremal(&mut cands, |(_, pos)| pos[k - 1], false);
        cands.swap_remove(0)
    };

    let n = p.len();
    let qk = cols[k - 1];
    let (case, s, t) = match kind {
        Kind::H => {
            let prev = cols[k - 2];
            let s = (prev + 1..qk).rev().find(|&s| p.is_descent(s - 1)).ok_or_else(|| {
                Error::Invariant(format!(
                    "no descent strictly inside ({prev}, {qk}) for H selection in {p}"
                ))
            })?;
            if qk == n || p.value(qk - 1) > p.value(qk + 1) {
                (Case::One, Some(s), None)
            } else {
                (Case::Two, None, Some(first_ascent_after(p, qk)))
            }
        }
        _ => {
            if p.is_ascent(qk) {
                (Case::Three, None, None)
            } else {
                (Case::Four, None, Some(first_ascent_after(p, qk)))
            }
        }
    };
    Ok(Some(PhiSelection {
        squares: cols.iter().map(|&c| p.square_at(c)).collect(),
        kind,
        case,
        s,
        t,
    }))
}

/// Chooses the `F_k` occurrence that `psi` rewrites, or `None` when `q`
/// avoids `F_k`.
///
/// Squares are fixed from the right: the lowest square ending some `F_k`,
/// then the lowest possible `k-1`-th square, and so on down to the first.
/// Fails with [`Error::HypothesisViolation`] if an `H_k` or `Q_k` lies
/// entirely above the row of the last selected square.
pub fn psi_select(q: &Permutation, k: usize) -> Result<Option<PsiSelection>> {
    check_k(k)?;
    let mut cands: Vec<Vec<usize>> = all_classical(q, &PatternSpec::f(k))
        .into_iter()
        .map(|o| o.positions().to_vec())
        .collect();
    if cands.is_empty() {
        return Ok(None);
    }
    retain_extremal(&mut cands, |pos| q.value(pos[k - 1]), false);
    for idx in (0..k - 1).rev() {
        retain_extremal(&mut cands, |pos| q.value(pos[idx]), false);
    }
    let cols = cands.swap_remove(0);
    let rows: Vec<usize> = cols.iter().map(|&c| q.value(c)).collect();
    let bottom = rows[k - 1];

    let above = all_h(q, k)
        .into_iter()
        .chain(all_q(q, k))
        .any(|o| q.value(o.positions()[0]) > bottom);
    if above {
        return Err(Error::HypothesisViolation {
            input: q.to_string(),
            row: bottom,
        });
    }

    let n = q.len();
    let (prev, qk) = (cols[k - 2], cols[k - 1]);
    let (case, t) = if qk < n && q.value(qk - 1) > q.value(qk + 1) {
        let climbs = (prev..qk - 1).all(|i| q.is_ascent(i));
        if climbs && q.value(qk + 1) > rows[k - 3] {
            (Case::One, None)
        } else {
            (Case::Two, Some(first_descent_after(q, qk)))
        }
    } else {
        let valley = (prev + 1..qk).any(|s| q.value(s - 1) > q.value(s) && q.value(s) < q.value(s + 1));
        let t = if valley {
            // the last descending run ends at q_k and starts at t
            (prev + 1..=qk)
                .rev()
                .find(|&t| q.is_ascent(t - 1))
                .map(|t| (Case::Three, t))
        } else {
            // entries climb from q_{k-1} to a peak at t-1, then fall to q_k
            (prev + 1..=qk).find(|&t| q.is_descent(t - 1)).map(|t| (Case::Four, t))
        };
        let (case, t) = t.ok_or_else(|| Error::Invariant(format!("no run break between {prev} and {qk} in {q}")))?;
        (case, Some(t))
    };
    Ok(Some(PsiSelection {
        squares: cols.iter().map(|&c| q.square_at(c)).collect(),
        case,
        t,
    }))
}

/// Replaces the filled squares in the columns named by `squares` with
/// `squares`. The rows used must be exactly the rows vacated.
fn rewrite(p: &Permutation, squares: &[Square]) -> Result<Permutation> {
    let mut old: Vec<usize> = squares.iter().map(|s| p.value(s.col)).collect();
    let mut new: Vec<usize> = squares.iter().map(|s| s.row).collect();
    old.sort_unstable();
    new.sort_unstable();
    if old != new {
        return Err(Error::Invariant(format!(
            "rewrite of {p} does not preserve the rows of its submatrix"
        )));
    }
    let mut values = p.values().to_vec();
    for sq in squares {
        values[sq.col - 1] = sq.row;
    }
    Permutation::new(values)
}

fn rows_at(p: &Permutation, cols: &[usize]) -> Vec<usize> {
    cols.iter().map(|&c| p.value(c)).collect()
}

fn shift_up_into(out: &mut Vec<Square>, r: &[usize], cols: &[usize]) {
    for i in 0..cols.len() - 1 {
        out.push(Square::new(r[i + 1], cols[i]));
    }
}

/// `theta`: a `J_m` at `cols` becomes the `F_m` with `r_1` moved last.
fn theta(p: &Permutation, cols: &[usize]) -> Result<Permutation> {
    let r = rows_at(p, cols);
    let mut sq = Vec::with_capacity(cols.len());
    shift_up_into(&mut sq, &r, cols);
    sq.push(Square::new(r[0], cols[cols.len() - 1]));
    rewrite(p, &sq)
}

/// `alpha`: like `theta` but `r_1` lands at column `s`, and the ascending
/// run in columns `s..c_m` slides one column right.
fn alpha(p: &Permutation, cols: &[usize], s: usize) -> Result<Permutation> {
    let m = cols.len();
    if !(cols[m - 2] < s && s < cols[m - 1]) {
        return Err(Error::Invariant(format!(
            "alpha needs {} < s < {}, got s = {s}",
            cols[m - 2],
            cols[m - 1]
        )));
    }
    let r = rows_at(p, cols);
    let mut sq = Vec::new();
    shift_up_into(&mut sq, &r, cols);
    sq.push(Square::new(r[0], s));
    sq.extend((s..cols[m - 1]).map(|j| Square::new(p.value(j), j + 1)));
    rewrite(p, &sq)
}

/// `beta`: the descending run in columns `c_m+1..=t` slides one column
/// left and `r_1` lands at column `t`.
fn beta(p: &Permutation, cols: &[usize], t: usize) -> Result<Permutation> {
    let m = cols.len();
    let r = rows_at(p, cols);
    let mut sq = Vec::new();
    shift_up_into(&mut sq, &r, cols);
    sq.extend((cols[m - 1]..t).map(|j| Square::new(p.value(j + 1), j)));
    sq.push(Square::new(r[0], t));
    rewrite(p, &sq)
}

/// `theta` inverse: the rows of an `F_m` at `cols` are laid out increasing.
fn theta_inverse(p: &Permutation, cols: &[usize]) -> Result<Permutation> {
    let mut r = rows_at(p, cols);
    r.sort_unstable();
    let sq: Vec<Square> = r.iter().zip(cols).map(|(&row, &col)| Square::new(row, col)).collect();
    rewrite(p, &sq)
}

fn shift_down_into(out: &mut Vec<Square>, r: &[usize], cols: &[usize]) {
    let m = cols.len();
    out.push(Square::new(r[m - 1], cols[0]));
    for i in 1..m - 1 {
        out.push(Square::new(r[i - 1], cols[i]));
    }
}

/// `delta`: undoes `alpha`. `r_m` goes first, the ascending run in columns
/// `c_m+1..=t` slides left, and `r_{m-1}` lands at `t`.
fn delta(p: &Permutation, cols: &[usize], t: usize) -> Result<Permutation> {
    let m = cols.len();
    let r = rows_at(p, cols);
    let mut sq = Vec::new();
    shift_down_into(&mut sq, &r, cols);
    sq.extend((cols[m - 1]..t).map(|j| Square::new(p.value(j + 1), j)));
    sq.push(Square::new(r[m - 2], t));
    rewrite(p, &sq)
}

/// `gamma`: undoes `beta`. `r_{m-1}` lands at `t` and the descending run in
/// columns `t..c_m` slides one column right.
fn gamma(p: &Permutation, cols: &[usize], t: usize) -> Result<Permutation> {
    let m = cols.len();
    if !(cols[m - 2] < t && t <= cols[m - 1]) {
        return Err(Error::Invariant(format!(
            "gamma needs {} < t <= {}, got t = {t}",
            cols[m - 2],
            cols[m - 1]
        )));
    }
    let r = rows_at(p, cols);
    let mut sq = Vec::new();
    shift_down_into(&mut sq, &r, cols);
    sq.push(Square::new(r[m - 2], t));
    sq.extend((t..cols[m - 1]).map(|j| Square::new(p.value(j), j + 1)));
    rewrite(p, &sq)
}

fn skip_penultimate(cols: &[usize]) -> Vec<usize> {
    let k = cols.len();
    cols[..k - 2].iter().chain(&cols[k - 1..]).copied().collect()
}

fn missing(what: &str) -> Error {
    Error::Invariant(format!("selection is missing {what}"))
}

fn apply_phi(p: &Permutation, sel: &PhiSelection) -> Result<Permutation> {
    let cols: Vec<usize> = sel.squares.iter().map(|s| s.col).collect();
    match sel.case {
        Case::One => alpha(p, &cols, sel.s.ok_or_else(|| missing("s"))?),
        Case::Two => beta(p, &cols, sel.t.ok_or_else(|| missing("t"))?),
        Case::Three => theta(p, &skip_penultimate(&cols)),
        Case::Four => beta(p, &skip_penultimate(&cols), sel.t.ok_or_else(|| missing("t"))?),
    }
}

fn apply_psi(q: &Permutation, sel: &PsiSelection) -> Result<Permutation> {
    let cols: Vec<usize> = sel.squares.iter().map(|s| s.col).collect();
    let t = || sel.t.ok_or_else(|| missing("t"));
    match sel.case {
        Case::One => theta_inverse(q, &skip_penultimate(&cols)),
        Case::Two => delta(q, &cols, t()?),
        Case::Three => gamma(q, &cols, t()?),
        Case::Four => gamma(q, &skip_penultimate(&cols), t()?),
    }
}

/// One `phi` step with a caller-supplied selection, which must be the one
/// [`phi_select`] produces for `p`.
pub fn phi_step(p: &Permutation, k: usize, sel: &PhiSelection) -> Result<Permutation> {
    if phi_select(p, k)?.as_ref() != Some(sel) {
        return Err(Error::SelectionMismatch(p.to_string()));
    }
    apply_phi(p, sel)
}

/// One `psi` step; `sel` must be what [`psi_select`] produces for `q`.
pub fn psi_step(q: &Permutation, k: usize, sel: &PsiSelection) -> Result<Permutation> {
    if psi_select(q, k)?.as_ref() != Some(sel) {
        return Err(Error::SelectionMismatch(q.to_string()));
    }
    apply_psi(q, sel)
}

fn iterate<S>(
    input: &Permutation,
    select: impl Fn(&Permutation) -> Result<Option<S>>,
    apply: impl Fn(&Permutation, &S) -> Result<Permutation>,
) -> Result<Trajectory<S>> {
    let limit = input.len() * input.len();
    let mut steps: Vec<Step<S>> = Vec::new();
    let mut current = input.clone();
    while let Some(selection) = select(&current)? {
        if steps.len() == limit {
            return Err(Error::NonTermination {
                input: input.to_string(),
                limit,
            });
        }
        let result = apply(&current, &selection)?;
        current = result.clone();
        steps.push(Step {
            index: steps.len() + 1,
            selection,
            result,
        });
    }
    Ok(Trajectory {
        input: input.clone(),
        steps,
    })
}

/// Iterates `phi` from an `F_k`-avoider until no `H_k`/`Q_k` is left,
/// recording every step.
pub fn phi_trajectory(p: &Permutation, k: usize) -> Result<Trajectory<PhiSelection>> {
    check_k(k)?;
    let f = PatternSpec::f(k);
    if let Some(witness) = contains_classical(p, &f) {
        return Err(Error::InputContainsPattern {
            pattern: format!("F{k} ({f})"),
            input: p.to_string(),
            witness,
        });
    }
    iterate(p, |x| phi_select(x, k), apply_phi)
}

/// Iterates `psi` from an `(H_k, Q_k)`-avoider until no `F_k` is left.
pub fn psi_trajectory(q: &Permutation, k: usize) -> Result<Trajectory<PsiSelection>> {
    check_k(k)?;
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
    iterate(q, |x| psi_select(x, k), apply_psi)
}

/// `Phi`: `S_n(F_k) -> S_n(H_k, Q_k)`.
pub fn phi_map(p: &Permutation, k: usize) -> Result<Permutation> {
    Ok(phi_trajectory(p, k)?.output().clone())
}

/// `Psi`: `S_n(H_k, Q_k) -> S_n(F_k)`.
pub fn psi_map(q: &Permutation, k: usize) -> Result<Permutation> {
    Ok(psi_trajectory(q, k)?.output().clone())
}

/// The `F_k` a `phi` step leaves behind, as squares left to right, and the
/// `psi` case expected to undo it.
pub fn expected_inverse(sel: &PhiSelection) -> (Vec<Square>, Case) {
    let sq = &sel.squares;
    let k = sq.len();
    let row = |i: usize| sq[i].row;
    let col = |i: usize| sq[i].col;
    match sel.case {
        Case::One | Case::Two => {
            let mut out: Vec<Square> = (0..k - 1).map(|i| Square::new(row(i + 1), col(i))).collect();
            let last = if sel.case == Case::One { sel.s } else { sel.t };
            out.push(Square::new(row(0), last.unwrap_or(0)));
            (out, if sel.case == Case::One { Case::Two } else { Case::Three })
        }
        Case::Three | Case::Four => {
            let mut out: Vec<Square> = (0..k - 3).map(|i| Square::new(row(i + 1), col(i))).collect();
            out.push(Square::new(row(k - 1), col(k - 3)));
            out.push(sq[k - 2]);
            let last = if sel.case == Case::Three {
                Some(col(k - 1))
            } else {
                sel.t
            };
            out.push(Square::new(row(0), last.unwrap_or(0)));
            (out, if sel.case == Case::Three { Case::One } else { Case::Four })
        }
    }
}

/// Checks the step-level claims along a `Phi` trajectory: each `phi` step
/// preserves descents, is undone by exactly one `psi` step on the matching
/// `F_k`, leaves no `F_k` ending below the selection's first row, and the
/// first selected square only moves down, or right within the same row.
/// Returns a description of the first failure.
pub fn audit_phi_trajectory(traj: &Trajectory<PhiSelection>, k: usize) -> std::result::Result<(), String> {
    let n = traj.input.len();
    if traj.steps.len() > n * n {
        return Err(format!("{} steps exceed n^2 = {}", traj.steps.len(), n * n));
    }
    let f = PatternSpec::f(k);
    let mut last_anchor: Option<Square> = None;
    for (i, step) in traj.steps.iter().enumerate() {
        let before = traj.before(i);
        let after = &step.result;
        let sel = &step.selection;
        let ctx = || format!("step {} ({} -> {})", step.index, before, after);

        if before.descent_set() != after.descent_set() {
            return Err(format!("{}: descent set changed", ctx()));
        }
        let back = psi_select(after, k).map_err(|e| format!("{}: psi_select failed: {e}", ctx()))?;
        let back = back.ok_or_else(|| format!("{}: psi finds no F_k", ctx()))?;
        let (want_squares, want_case) = expected_inverse(sel);
        if back.squares != want_squares || back.case != want_case {
            return Err(format!(
                "{}: psi selected case {} at {:?}, expected case {} at {:?}",
                ctx(),
                back.case,
                back.squares,
                want_case,
                want_squares
            ));
        }
        let undone = apply_psi(after, &back).map_err(|e| format!("{}: psi failed: {e}", ctx()))?;
        if &undone != before {
            return Err(format!("{}: psi gives {undone}", ctx()));
        }
        let anchor = sel.squares[0];
        if let Some(prev) = last_anchor {
            let ok = anchor.row < prev.row || (anchor.row == prev.row && anchor.col > prev.col);
            if !ok {
                return Err(format!(
                    "{}: anchor {anchor} did not move down or right of {prev}",
                    ctx()
                ));
            }
        }
        last_anchor = Some(anchor);
        let low_f = all_classical(after, &f)
            .into_iter()
            .find(|o| after.value(o.positions()[k - 1]) < anchor.row);
        if let Some(o) = low_f {
            return Err(format!("{}: F_k at {o} ends below row {}", ctx(), anchor.row));
        }
    }
    Ok(())
}

/// Step-level claims along a `Psi` trajectory: descents preserved and each
/// `psi` step undone by the next `phi` step.
pub fn audit_psi_trajectory(traj: &Trajectory<PsiSelection>, k: usize) -> std::result::Result<(), String> {
    let n = traj.input.len();
    if traj.steps.len() > n * n {
        return Err(format!("{} steps exceed n^2 = {}", traj.steps.len(), n * n));
    }
    for (i, step) in traj.steps.iter().enumerate() {
        let before = traj.before(i);
        let after = &step.result;
        let ctx = || format!("step {} ({} -> {})", step.index, before, after);
        if before.descent_set() != after.descent_set() {
            return Err(format!("{}: descent set changed", ctx()));
        }
        let sel = phi_select(after, k)
            .map_err(|e| format!("{}: phi_select failed: {e}", ctx()))?
            .ok_or_else(|| format!("{}: phi finds no H_k/Q_k", ctx()))?;
        let undone = apply_phi(after, &sel).map_err(|e| format!("{}: phi failed: {e}", ctx()))?;
        if &undone != before {
            return Err(format!("{}: phi gives {undone}", ctx()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::avoiders;

    fn perm(text: &str) -> Permutation {
        Permutation::parse(text).unwrap()
    }

    fn sq(row: usize, col: usize) -> Square {
        Square::new(row, col)
    }

    #[test]
    fn phi_selection_hand_case() {
        let sel = phi_select(&perm("1324"), 3).unwrap().unwrap();
        assert_eq!(sel.kind, Kind::H);
        assert_eq!(sel.squares, vec![sq(1, 1), sq(3, 2), sq(4, 4)]);
        assert_eq!(sel.case, Case::One);
        assert_eq!(sel.s, Some(3));
        assert_eq!(phi_step(&perm("1324"), 3, &sel).unwrap(), perm("3412"));
    }

    #[test]
    fn phi_selection_absent_on_avoider() {
        assert_eq!(phi_select(&perm("3412"), 3).unwrap(), None);
        assert!(matches!(phi_select(&perm("3412"), 2), Err(Error::BadParameter(_))));
    }

    #[test]
    fn phi_selection_q5_fixture() {
        let p = perm("1,3,5,8,10,6,7,4,9,2,11");
        let sel = phi_select(&p, 5).unwrap().unwrap();
        assert_eq!(sel.kind, Kind::H);
        assert_eq!(sel.squares, vec![sq(5, 3), sq(6, 6), sq(7, 7), sq(9, 9), sq(11, 11)]);
        assert_eq!(sel.case, Case::One);
        assert_eq!(sel.s, Some(10));
        assert_eq!(sel, brute_force_phi_choice(&p, 5));
    }

    /// Reads the selection rules off the complete list of occurrences of
    /// both kinds, without the incremental filtering used above.
    fn brute_force_phi_choice(p: &Permutation, k: usize) -> PhiSelection {
        let n = p.len();
        let mut occ: Vec<(Kind, Vec<usize>)> = Vec::new();
        for pos in subsets(n, k) {
            let vals: Vec<usize> = pos.iter().map(|&i| p.value(i)).collect();
            let j = vals.windows(2).all(|w| w[0] < w[1]);
            let g = vals[..k - 1].windows(2).all(|w| w[0] < w[1])
                && vals[k - 1] < vals[k - 2]
                && vals[k - 1] > vals.get(k.wrapping_sub(3)).copied().unwrap_or(0);
            if j && (pos[k - 2]..pos[k - 1]).any(|d| p.value(d) > p.value(d + 1)) {
                occ.push((Kind::H, pos.clone()));
            }
            if g {
                let run: Vec<usize> = (pos[k - 2]..pos[k - 1]).map(|i| p.value(i)).collect();
                if run.windows(2).all(|w| w[0] < w[1]) && *run.last().unwrap() > vals[k - 1] {
                    occ.push((Kind::Q, pos.clone()));
                }
            }
        }
        let top = occ.iter().map(|(_, pos)| p.value(pos[0])).max().unwrap();
        let mut fixed = vec![occ.iter().find(|(_, pos)| p.value(pos[0]) == top).unwrap().1[0]];
        for idx in 1..k - 1 {
            let best = occ
                .iter()
                .filter(|(_, pos)| pos[..idx] == fixed[..])
                .map(|(_, pos)| pos[idx])
                .min()
                .unwrap();
            fixed.push(best);
        }
        let ext: Vec<_> = occ.iter().filter(|(_, pos)| pos[..k - 1] == fixed[..]).collect();
        let hs: Vec<_> = ext.iter().filter(|(kind, _)| *kind == Kind::H).collect();
        let (kind, last) = if !hs.is_empty() {
            (
                Kind::H,
                hs.iter().max_by_key(|(_, pos)| p.value(pos[k - 1])).unwrap().1[k - 1],
            )
        } else {
            (Kind::Q, ext.iter().map(|(_, pos)| pos[k - 1]).min().unwrap())
        };
        fixed.push(last);
        let mut expected = phi_select(p, k).unwrap().unwrap();
        expected.squares = fixed.iter().map(|&c| p.square_at(c)).collect();
        expected.kind = kind;
        expected
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|s| s.count_ones() as usize == k)
            .map(|s| (1..=n).filter(|&i| s >> (i - 1) & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn phi_selection_matches_brute_force() {
        for n in 0..=7 {
            for k in 3..=4 {
                for p in Permutation::all(n) {
                    if let Some(sel) = phi_select(&p, k).unwrap() {
                        let bf = brute_force_phi_choice(&p, k);
                        assert_eq!(sel.squares, bf.squares, "{p} k={k}");
                        assert_eq!(sel.kind, bf.kind, "{p} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn psi_selection_hand_case() {
        let q = perm("3412");
        let sel = psi_select(&q, 3).unwrap().unwrap();
        assert_eq!(sel.squares, vec![sq(3, 1), sq(4, 2), sq(1, 3)]);
        assert_eq!(sel.case, Case::Two);
        assert_eq!(sel.t, Some(4));
        assert_eq!(psi_step(&q, 3, &sel).unwrap(), perm("1324"));
        assert_eq!(psi_select(&Permutation::identity(5), 3).unwrap(), None);
    }

    #[test]
    fn psi_refuses_when_hypothesis_fails() {
        // 2,3,1 is the F_3 ending lowest; 2,5,4 is a Q_3 above row 1
        let q = perm("2,3,1,5,4");
        assert!(matches!(psi_select(&q, 3), Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn step_rejects_foreign_selection() {
        let sel = phi_select(&perm("1324"), 3).unwrap().unwrap();
        assert!(matches!(
            phi_step(&perm("1243"), 3, &sel),
            Err(Error::SelectionMismatch(_))
        ));
        let psel = psi_select(&perm("3412"), 3).unwrap().unwrap();
        assert!(matches!(
            psi_step(&perm("231"), 3, &psel),
            Err(Error::SelectionMismatch(_))
        ));
    }

    #[test]
    fn iterated_maps_small_cases() {
        assert_eq!(phi_map(&perm("1324"), 3).unwrap(), perm("3412"));
        assert_eq!(psi_map(&perm("3412"), 3).unwrap(), perm("1324"));
        let t = phi_trajectory(&Permutation::identity(4), 3).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(psi_map(&Permutation::identity(4), 3).unwrap(), Permutation::identity(4));
        assert!(matches!(
            phi_map(&perm("231"), 3),
            Err(Error::InputContainsPattern { .. })
        ));
        assert!(matches!(
            psi_map(&perm("1324"), 3),
            Err(Error::InputContainsPattern { .. })
        ));
    }

    #[test]
    fn trace_line_format() {
        let t = phi_trajectory(&perm("1324"), 3).unwrap();
        assert_eq!(t.steps[0].trace_line(), "1\tH\t1\t(1,1) (3,2) (4,4)\t3,4,1,2");
    }

    #[test]
    fn rewrites_are_inverse_pairs() {
        let p = perm("1,2,3,4,5,6");
        assert_eq!(theta(&p, &[1, 3, 5]).unwrap(), perm("3,2,5,4,1,6"));
        assert_eq!(theta_inverse(&perm("3,2,5,4,1,6"), &[1, 3, 5]).unwrap(), p);
    }

    #[test]
    fn exhaustive_roundtrips_small() {
        for k in 3..=4 {
            for n in 0..=6 {
                for p in avoiders(n, &[PatternSpec::Classical(PatternSpec::f(k))]) {
                    let traj = phi_trajectory(&p, k).unwrap();
                    audit_phi_trajectory(&traj, k).unwrap_or_else(|e| panic!("k={k} {p}: {e}"));
                    let out = traj.output();
                    assert_eq!(&psi_map(out, k).unwrap(), &p, "k={k}");
                }
                for q in avoiders(n, &[PatternSpec::H(k), PatternSpec::Q(k)]) {
                    let traj = psi_trajectory(&q, k).unwrap();
                    audit_psi_trajectory(&traj, k).unwrap_or_else(|e| panic!("k={k} {q}: {e}"));
                    assert_eq!(phi_map(traj.output(), k).unwrap(), q);
                }
            }
        }
    }
}
