//! Frozen values and randomized properties beyond the exhaustive grid.

use proptest::prelude::*;

use wilfrefine_core::equivalence::{distribution, dt_counts, image_distribution};
use wilfrefine_core::pattern::{contains_classical, contains_h, contains_q, PatternSpec};
use wilfrefine_core::slide::{
    audit_phi_trajectory, audit_psi_trajectory, phi_select, phi_trajectory, psi_trajectory, Case, Kind,
};
use wilfrefine_core::{f_map, g_map, phi_map, psi_map, theta_f_to_g, theta_g_to_f, KeyKind, Permutation, Side};

fn perm(text: &str) -> Permutation {
    Permutation::parse(text).unwrap()
}

#[test]
fn theta_on_the_refill_example() {
    let p = perm("1,3,5,7,6,8,9,4,10,2,11");
    let out = theta_g_to_f(&p, 6).unwrap();
    assert_eq!(out, perm("1,2,3,7,5,6,10,4,9,8,11"));
    assert_eq!(out.descent_set(), p.descent_set());
    assert!(contains_classical(&out, &PatternSpec::f(6)).is_none());
    assert_eq!(theta_f_to_g(&out, 6).unwrap(), p);
}

#[test]
fn theta_inverse_small_example() {
    assert_eq!(theta_f_to_g(&perm("1,3,2,4"), 3).unwrap(), perm("3,4,1,2"));
}

#[test]
fn psi_trace_on_the_refill_image() {
    let q = perm("1,3,5,7,6,10,11,4,9,2,8");
    let traj = psi_trajectory(&q, 6).unwrap();
    let lines: Vec<String> = traj.steps.iter().map(|s| s.trace_line()).collect();
    assert_eq!(
        lines,
        ["1\tF\t2\t(3,2) (5,3) (6,5) (10,6) (11,7) (2,10)\t1,2,3,7,5,6,10,4,9,8,11"]
    );
}

#[test]
fn phi_selection_on_the_q5_example() {
    let p = perm("1,3,5,8,10,6,7,4,9,2,11");
    let sel = phi_select(&p, 5).unwrap().unwrap();
    assert_eq!(sel.kind, Kind::H);
    assert_eq!(sel.case, Case::One);
    let cols: Vec<usize> = sel.squares.iter().map(|s| s.col).collect();
    assert_eq!(cols, [3, 6, 7, 9, 11]);
}

#[test]
fn small_distribution_tables() {
    let g = distribution(4, 3, Side::G, KeyKind::MajorIndex).unwrap();
    let f = distribution(4, 3, Side::F, KeyKind::MajorIndex).unwrap();
    assert!(g.same_counts(&f));
    let counts: Vec<(u64, u64)> = g.entries.iter().map(|(&k, &v)| (k, v)).collect();
    assert_eq!(counts, [(0, 1), (1, 3), (2, 2), (3, 4), (4, 2), (5, 1), (6, 1)]);
    assert_eq!(dt_counts(6, 3, 2).unwrap(), (5, 5));
    assert_eq!(dt_counts(6, 3, 3).unwrap(), (3, 3));
}

#[test]
fn image_tally_for_k5() {
    for n in 0..=7 {
        let img = image_distribution(n, 5, KeyKind::DescentSet).unwrap();
        let f = distribution(n, 5, Side::F, KeyKind::DescentSet).unwrap();
        assert!(img.same_counts(&f), "n={n}");
    }
}

fn shuffled(n: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::new(v).unwrap())
}

fn any_perm() -> impl Strategy<Value = Permutation> {
    (0usize..=11).prop_flat_map(shuffled)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn refill_roundtrip_random(p in any_perm(), k in 3usize..=6) {
        if contains_classical(&p, &PatternSpec::g(k)).is_none() {
            let q = f_map(&p, k).unwrap();
            prop_assert_eq!(q.descent_set(), p.descent_set());
            prop_assert!(contains_h(&q, k).unwrap().is_none());
            prop_assert!(contains_q(&q, k).unwrap().is_none());
            prop_assert_eq!(g_map(&q, k).unwrap(), p);
        } else {
            prop_assert!(f_map(&p, k).unwrap_err().is_precondition());
        }
    }

    #[test]
    fn slide_roundtrip_random(p in any_perm(), k in 4usize..=6) {
        if contains_classical(&p, &PatternSpec::f(k)).is_none() {
            let traj = phi_trajectory(&p, k).unwrap();
            prop_assert!(audit_phi_trajectory(&traj, k).is_ok(), "{:?}", audit_phi_trajectory(&traj, k));
            prop_assert_eq!(&psi_map(traj.output(), k).unwrap(), &p);
        }
        if contains_h(&p, k).unwrap().is_none() && contains_q(&p, k).unwrap().is_none() {
            let traj = psi_trajectory(&p, k).unwrap();
            prop_assert!(audit_psi_trajectory(&traj, k).is_ok(), "{:?}", audit_psi_trajectory(&traj, k));
            prop_assert_eq!(&phi_map(traj.output(), k).unwrap(), &p);
        }
    }
}
