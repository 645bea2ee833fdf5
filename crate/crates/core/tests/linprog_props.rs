//! LP invariants: duality, exact residuals, vertex rank, determinism, and a
//! brute-force vertex-enumeration oracle for two-variable programs.

use mixvol::linprog::{solve_to_vertex, LinearProgram, LpStatus};
use mixvol::num::{self, int};
use mixvol::Rat;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn rats(xs: &[i64]) -> Vec<Rat> {
    xs.iter().map(|&x| int(x)).collect()
}

/// `max c·x, Ax ≤ b, x ≥ 0` with `b ≥ 0` and a bounding row `Σx ≤ 20`.
fn program(c: &[i64], a: &[Vec<i64>], b: &[i64]) -> LinearProgram {
    let n = c.len();
    let mut lp = LinearProgram::new(n);
    lp.maximize(rats(c)).unwrap();
    for (row, &rhs) in a.iter().zip(b) {
        lp.add_le(rats(row), int(rhs)).unwrap();
    }
    lp.add_le(vec![int(1); n], int(20)).unwrap();
    lp
}

fn data(n: usize) -> impl Strategy<Value = (Vec<i64>, Vec<Vec<i64>>, Vec<i64>)> {
    (1usize..5).prop_flat_map(move |m| {
        (
            prop::collection::vec(-5i64..=5, n),
            prop::collection::vec(prop::collection::vec(-4i64..=4, n), m),
            prop::collection::vec(0i64..=12, m),
        )
    })
}

/// Maximum over all basic solutions of a 2-variable program, by enumerating
/// every pair of tight constraints (including the nonnegativity bounds).
fn brute_force_2d(c: &[i64], a: &[Vec<i64>], b: &[i64]) -> Rat {
    let mut rows: Vec<(Vec<Rat>, Rat)> =
        a.iter().zip(b).map(|(r, &rhs)| (rats(r), int(rhs))).collect();
    rows.push((rats(&[1, 1]), int(20)));
    rows.push((rats(&[-1, 0]), int(0)));
    rows.push((rats(&[0, -1]), int(0)));
    let mut best: Option<Rat> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let m = vec![rows[i].0.clone(), rows[j].0.clone()];
            if let Some(x) = num::solve(&m, &[rows[i].1.clone(), rows[j].1.clone()]) {
                if rows.iter().all(|(r, rhs)| &num::dot(r, &x) <= rhs) {
                    let v = num::dot(&rats(c), &x);
                    if best.as_ref().is_none_or(|b| &v > b) {
                        best = Some(v);
                    }
                }
            }
        }
    }
    best.expect("origin is always feasible")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_duality((c, a, b) in data(3)) {
        let primal = solve_to_vertex(&program(&c, &a, &b));
        prop_assert_eq!(primal.status, LpStatus::Optimal);
        // dual: min b·y + 20·t  s.t.  Aᵀy + t·1 ≥ c, y, t ≥ 0, posed as a maximization
        let m = a.len();
        let mut dual = LinearProgram::new(m + 1);
        let mut obj: Vec<Rat> = b.iter().map(|&x| int(-x)).collect();
        obj.push(int(-20));
        dual.maximize(obj).unwrap();
        for j in 0..c.len() {
            let mut row: Vec<Rat> = a.iter().map(|r| int(-r[j])).collect();
            row.push(int(-1));
            dual.add_le(row, int(-c[j])).unwrap();
        }
        let d = solve_to_vertex(&dual);
        prop_assert_eq!(d.status, LpStatus::Optimal);
        prop_assert_eq!(primal.objective_value, -d.objective_value);
    }

    #[test]
    fn feasible_vertex_with_zero_residual((c, a, b) in data(3)) {
        let lp = program(&c, &a, &b);
        let s = solve_to_vertex(&lp);
        prop_assert!(s.is_vertex);
        prop_assert_eq!(lp.active_rank(&s.point), 3);
        for (row, &rhs) in a.iter().zip(&b) {
            prop_assert!(num::dot(&rats(row), &s.point) <= int(rhs));
        }
        prop_assert!(s.point.iter().all(|x| !x.is_negative()));
        prop_assert_eq!(solve_to_vertex(&lp), s);
    }

    #[test]
    fn matches_vertex_enumeration((c, a, b) in data(2)) {
        let s = solve_to_vertex(&program(&c, &a, &b));
        prop_assert_eq!(s.objective_value, brute_force_2d(&c, &a, &b));
    }
}

#[test]
fn equality_constrained_program_is_exact() {
    let mut lp = LinearProgram::new(3);
    lp.maximize(vec![int(1), int(2), int(3)]).unwrap();
    lp.add_eq(vec![int(1), int(1), int(1)], num::rat(7, 3)).unwrap();
    lp.add_eq(vec![int(1), int(-1), int(0)], num::rat(1, 5)).unwrap();
    let s = solve_to_vertex(&lp);
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(&s.point[0] + &s.point[1] + &s.point[2], num::rat(7, 3));
    assert_eq!(&s.point[0] - &s.point[1], num::rat(1, 5));
    assert!(s.point.iter().all(|x| !x.is_negative()));
    assert!(s.point[1].is_zero());
}
