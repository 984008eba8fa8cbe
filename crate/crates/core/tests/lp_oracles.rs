use chprice::lp::{solve_lp, LinearProgram, LpStatus, RowSense};
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;

/// Solve the square system by Gaussian elimination; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// `min c x` over `A x <= b, 0 <= x <= u` by trying every basis of active
/// hyperplanes.
fn vertex_minimum(c: &[f64], a: &[Vec<f64>], b: &[f64], u: &[f64]) -> f64 {
    let n = c.len();
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, u[j]));
    }
    let feasible = |x: &[f64]| {
        x.iter().zip(u).all(|(&v, &hi)| v >= -1e-9 && v <= hi + 1e-9)
            && a.iter().zip(b).all(|(row, &rhs)| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9)
    };
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let m = pick.iter().map(|&k| planes[k].0.clone()).collect();
        let r = pick.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(m, r) {
            if feasible(&x) {
                best = best.min(c.iter().zip(&x).map(|(p, q)| p * q).sum());
            }
        }
        // next n-subset in lexicographic order
        let mut i = n;
        while i > 0 && pick[i - 1] == planes.len() - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for k in i..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

fn small_int(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(f64::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_vertex_enumeration(
        c in prop::collection::vec(small_int(-10, 10), 4),
        a in prop::collection::vec(prop::collection::vec(small_int(-5, 5), 4), 6),
        b in prop::collection::vec(small_int(0, 20), 6),
        u in prop::collection::vec(small_int(1, 8), 4),
    ) {
        let mut lp = LinearProgram::new();
        for j in 0..4 {
            lp.add_col(c[j], 0.0, u[j]);
        }
        for (row, &rhs) in a.iter().zip(&b) {
            let coefs: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            lp.add_row(RowSense::Le, rhs, &coefs);
        }
        let sol = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let oracle = vertex_minimum(&c, &a, &b, &u);
        prop_assert!((sol.objective - oracle).abs() <= 1e-6 * oracle.abs().max(1.0), "{} vs {}", sol.objective, oracle);
        prop_assert!(sol.duality_residual(&lp) <= 1e-6);
        prop_assert!(sol.duals.iter().all(|&y| y <= 1e-9), "<= rows need non-positive duals: {:?}", sol.duals);
        let act = lp.activities(&sol.primal);
        prop_assert!(act.iter().zip(&b).all(|(x, r)| *x <= r + 1e-7));
    }

    #[test]
    fn matches_reference_solver(
        c in prop::collection::vec(small_int(-6, 12), 8),
        a in prop::collection::vec(prop::collection::vec(small_int(-4, 6), 8), 10),
        b in prop::collection::vec(small_int(-5, 30), 10),
        senses in prop::collection::vec(0u8..3, 10),
        u in prop::collection::vec(prop_oneof![small_int(1, 9), Just(f64::INFINITY)], 8),
        x0 in prop::collection::vec(small_int(0, 5), 8),
        around_point in prop::bool::weighted(0.75),
    ) {
        // most right-hand sides are built around a point inside the bounds
        let b: Vec<f64> = if around_point {
            (0..10)
                .map(|i| {
                    let act: f64 = a[i].iter().zip(&x0).zip(&u).map(|((v, x), hi)| v * x.min(*hi)).sum();
                    match senses[i] {
                        0 => act + b[i].abs() % 4.0,
                        1 => act - b[i].abs() % 4.0,
                        _ => act,
                    }
                })
                .collect()
        } else {
            b
        };
        let mut lp = LinearProgram::new();
        let mut reference = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..8)
            .map(|j| {
                lp.add_col(c[j], 0.0, u[j]);
                reference.add_var(c[j], (0.0, u[j]))
            })
            .collect();
        for i in 0..10 {
            let coefs: Vec<(usize, f64)> = a[i].iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            let (ours, theirs) = match senses[i] {
                0 => (RowSense::Le, ComparisonOp::Le),
                1 => (RowSense::Ge, ComparisonOp::Ge),
                _ => (RowSense::Eq, ComparisonOp::Eq),
            };
            lp.add_row(ours, b[i], &coefs);
            reference.add_constraint(coefs.iter().map(|&(j, v)| (vars[j], v)).collect::<Vec<_>>(), theirs, b[i]);
        }
        let sol = solve_lp(&lp).unwrap();
        match reference.solve() {
            Ok(outcome) => {
                let expected = outcome.into_solution().unwrap().objective();
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - expected).abs() <= 1e-6 * expected.abs().max(1.0), "{} vs {}", sol.objective, expected);
                prop_assert!(sol.duality_residual(&lp) <= 1e-6 * expected.abs().max(1.0));
                for (i, &y) in sol.duals.iter().enumerate() {
                    match senses[i] {
                        0 => prop_assert!(y <= 1e-9),
                        1 => prop_assert!(y >= -1e-9),
                        _ => {}
                    }
                }
                let optimal_signs = sol.reduced_costs.iter().zip(&sol.primal).zip(&u).all(|((&d, &x), &hi)| {
                    (x > 1e-9 || d >= -1e-7) && (x < hi - 1e-9 || d <= 1e-7)
                });
                prop_assert!(optimal_signs, "reduced costs {:?}", sol.reduced_costs);
            }
            Err(microlp::Error::Infeasible) => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Err(microlp::Error::Unbounded) => prop_assert_eq!(sol.status, LpStatus::Unbounded),
            Err(e) => prop_assert!(false, "reference solver failed: {:?}", e),
        }
    }
}
