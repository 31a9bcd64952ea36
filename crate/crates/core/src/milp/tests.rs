use super::*;
use crate::rational::{q, qi};
use proptest::prelude::*;

fn max_obj(m: &MilpModel) -> f64 {
    let s = solve(m, &SolverOptions::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!(m.max_violation(&s.values) <= 1e-9);
    s.objective
}

#[test]
fn single_binary() {
    let mut m = MilpModel::new();
    let b = m.add_binary("b");
    m.set_objective(LinExpr::new().with(b, qi(1)));
    assert_eq!(max_obj(&m), 1.0);
}

#[test]
fn forced_branching() {
    let mut m = MilpModel::new();
    let b = m.add_binary("b");
    let x = m.add_continuous("x", qi(0), qi(10));
    m.add_constraint("link", LinExpr::new().with(x, qi(1)).with(b, qi(-10)), Sense::Le, qi(0));
    m.add_constraint("low", LinExpr::new().with(x, qi(1)), Sense::Ge, qi(3));
    let s = solve(&m, &SolverOptions::default()).unwrap();
    assert!(s.is_feasible());
    assert_eq!(s.value(b), qi(1));
}

#[test]
fn infeasible_model() {
    let mut m = MilpModel::new();
    let a = m.add_binary("a");
    let b = m.add_binary("b");
    m.add_constraint("sum", LinExpr::new().with(a, qi(1)).with(b, qi(1)), Sense::Eq, q(1, 2));
    assert_eq!(solve(&m, &SolverOptions::default()).unwrap().status, Status::Infeasible);
    // The relaxation is feasible.
    assert!(lp_relax(&m, &SolverOptions::default()).unwrap().is_feasible());
}

#[test]
fn knapsack_matches_enumeration() {
    let w = [3i64, 4, 5, 9, 2, 7];
    let v = [4i64, 5, 7, 11, 3, 8];
    let cap = 15i64;
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..6).map(|i| m.add_binary(alloc::format!("x{}", i))).collect();
    m.add_constraint("cap", LinExpr::from_terms(xs.iter().zip(w).map(|(&x, w)| (x, qi(w)))), Sense::Le, qi(cap));
    m.set_objective(LinExpr::from_terms(xs.iter().zip(v).map(|(&x, v)| (x, qi(v)))));
    let mut best = 0;
    for mask in 0..64 {
        let (tw, tv) = (0..6).filter(|i| mask >> i & 1 == 1).fold((0, 0), |(a, b), i| (a + w[i], b + v[i]));
        if tw <= cap {
            best = best.max(tv);
        }
    }
    assert!((max_obj(&m) - best as f64).abs() < 1e-9);
    let relax = lp_relax(&m, &SolverOptions::default()).unwrap();
    assert!(relax.objective >= best as f64 - 1e-9);
}

#[test]
fn epsilon_objective() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", qi(0), qi(1));
    let e = m.add_epsilon("eps", qi(1));
    m.add_constraint("strict", LinExpr::new().with(x, qi(1)).with(e, qi(1)), Sense::Le, q(1, 2));
    m.add_constraint("lowx", LinExpr::new().with(x, qi(1)), Sense::Ge, q(1, 4));
    let s = solve(&m, &SolverOptions::default()).unwrap();
    assert!((s.values[e] - 0.25).abs() < 1e-9);
}

#[test]
fn bad_bounds_rejected() {
    let mut m = MilpModel::new();
    m.add_continuous("x", qi(2), qi(1));
    assert_eq!(solve(&m, &SolverOptions::default()), Err(MilpError::BadBounds(0)));
}

#[test]
fn stop_callback() {
    let mut m = MilpModel::new();
    let a = m.add_binary("a");
    let b = m.add_binary("b");
    m.add_constraint("c", LinExpr::new().with(a, qi(2)).with(b, qi(2)), Sense::Eq, qi(1));
    let opts = SolverOptions { stop: Some(Arc::new(|| true)), ..SolverOptions::default() };
    assert_eq!(solve(&m, &opts), Err(MilpError::Stopped));
}

#[test]
fn one_variable_lp_file() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", qi(0), qi(1));
    m.set_objective(LinExpr::new().with(x, qi(1)));
    let text = export_lp(&m);
    assert_eq!(text, "Maximize\n obj: x\nSubject To\nBounds\n 0 <= x <= 1\nEnd\n");
    assert_eq!(read_lp(&text).unwrap(), m);
}

#[test]
fn lp_file_round_trip() {
    let mut m = MilpModel::new();
    let a = m.add_binary("a_s1_alpha");
    let x = m.add_continuous("x_s1_0", qi(0), q(7, 2));
    let y = m.add_continuous("bad name", qi(-3), qi(5));
    m.add_constraint("c1", LinExpr::new().with(a, qi(-2)).with(x, q(1, 4)), Sense::Ge, q(-1, 8));
    m.add_constraint("c2", LinExpr::new().with(x, qi(1)).with(y, qi(1)), Sense::Eq, qi(3));
    m.add_constraint("c3", LinExpr::new().with(y, q(1, 3)), Sense::Le, qi(1));
    m.set_objective(LinExpr::new().with(x, qi(1)).with(a, q(-1, 2)));
    let text = export_lp(&m);
    assert!(text.contains("\\ exact c3: 1/3 bad_name <= 1"), "{}", text);
    let back = read_lp(&text).unwrap();
    assert_eq!(back.variables.len(), 3);
    assert_eq!(back.variables[2].name, "bad_name");
    assert_eq!(back.constraints[0], m.constraints[0]);
    assert_eq!(back.constraints[1], m.constraints[1]);
    assert!((to_f64(&back.constraints[2].expr.terms[0].1) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(back.objective, m.objective);
    assert_eq!(back.variables[0].kind, VarKind::Binary);
    let (s1, s2) = (solve(&m, &SolverOptions::default()).unwrap(), solve(&back, &SolverOptions::default()).unwrap());
    assert!((s1.objective - s2.objective).abs() < 1e-9);
}

#[test]
fn duplicate_names_made_unique() {
    let mut m = MilpModel::new();
    m.add_continuous("v", qi(0), qi(1));
    m.add_continuous("v", qi(0), qi(1));
    let back = read_lp(&export_lp(&m)).unwrap();
    assert_eq!(back.variables.len(), 2);
    assert_ne!(back.variables[0].name, back.variables[1].name);
}

/// Oracle for tiny problems: enumerate binary assignments; for each, maximize the
/// continuous part by trying every vertex defined by tight constraints or bounds.
fn oracle(m: &MilpModel) -> Option<f64> {
    let n = m.variables.len();
    let bins: Vec<usize> = (0..n).filter(|&v| m.variables[v].is_binary()).collect();
    let cont: Vec<usize> = (0..n).filter(|&v| !m.variables[v].is_binary()).collect();
    let k = cont.len();
    // Candidate hyperplanes over the continuous variables: (coefs, rhs).
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << bins.len()) {
        let mut fixed = alloc::vec![0.0; n];
        for (i, &b) in bins.iter().enumerate() {
            fixed[b] = (mask >> i & 1) as f64;
        }
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for c in &m.constraints {
            let mut coefs = alloc::vec![0.0; k];
            let mut rhs = to_f64(&c.rhs);
            for (v, a) in &c.expr.terms {
                match cont.iter().position(|x| x == v) {
                    Some(j) => coefs[j] = to_f64(a),
                    None => rhs -= to_f64(a) * fixed[*v],
                }
            }
            planes.push((coefs, rhs));
        }
        for (j, &v) in cont.iter().enumerate() {
            let (lo, hi) = m.variables[v].bounds();
            let mut e = alloc::vec![0.0; k];
            e[j] = 1.0;
            planes.push((e.clone(), to_f64(&lo)));
            planes.push((e, to_f64(&hi)));
        }
        // Choose k planes, solve, check feasibility.
        let p = planes.len();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if let Some(sol) = solve_dense(&idx.iter().map(|&i| planes[i].clone()).collect::<Vec<_>>(), k) {
                let mut x = fixed.clone();
                for (j, &v) in cont.iter().enumerate() {
                    x[v] = sol[j];
                }
                if m.max_violation(&x) <= 1e-7 {
                    let val = m.objective.as_ref().map_or(0.0, |o| o.eval(&x));
                    best = Some(best.map_or(val, |b: f64| b.max(val)));
                }
            }
            // Next combination.
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if idx[i] < p - k + i {
                    idx[i] += 1;
                    for t in i + 1..k {
                        idx[t] = idx[t - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if k == 0 || i == usize::MAX {
                break;
            }
        }
    }
    best
}

fn solve_dense(rows: &[(Vec<f64>, f64)], k: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = rows.iter().map(|(c, r)| c.iter().copied().chain([*r]).collect()).collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

fn small_model() -> impl Strategy<Value = MilpModel> {
    (1usize..=3, 0usize..=2, 1usize..=3).prop_flat_map(|(nc, nb, nr)| {
        let n = nc + nb;
        (
            proptest::collection::vec((-4i64..=4, 1i64..=4), nc),
            proptest::collection::vec((proptest::collection::vec(-3i64..=3, n), -4i64..=8, 0u8..3), nr),
            proptest::collection::vec(-3i64..=3, n),
        )
            .prop_map(move |(bounds, rows, obj)| {
                let mut m = MilpModel::new();
                for (i, (lo, w)) in bounds.iter().enumerate() {
                    m.add_continuous(alloc::format!("x{}", i), qi(*lo), qi(lo + w));
                }
                for i in 0..nb {
                    m.add_binary(alloc::format!("b{}", i));
                }
                for (r, (coefs, rhs, s)) in rows.iter().enumerate() {
                    let sense = [Sense::Le, Sense::Ge, Sense::Eq][*s as usize];
                    let e = LinExpr::from_terms(coefs.iter().enumerate().map(|(v, c)| (v, qi(*c))));
                    m.add_constraint(alloc::format!("r{}", r), e, sense, qi(*rhs));
                }
                m.set_objective(LinExpr::from_terms(obj.iter().enumerate().map(|(v, c)| (v, qi(*c)))));
                m
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn solver_matches_vertex_oracle(m in small_model()) {
        let expected = oracle(&m);
        let got = solve(&m, &SolverOptions::default()).unwrap();
        match expected {
            None => prop_assert_eq!(got.status, Status::Infeasible),
            Some(v) => {
                prop_assert_eq!(got.status, Status::Optimal);
                prop_assert!((got.objective - v).abs() < 1e-6, "solver {} oracle {}", got.objective, v);
                prop_assert!(m.max_violation(&got.values) <= 1e-9);
            }
        }
    }

    #[test]
    fn relaxation_bounds_integer_optimum(m in small_model()) {
        let int = solve(&m, &SolverOptions::default()).unwrap();
        let rel = lp_relax(&m, &SolverOptions::default()).unwrap();
        if int.is_feasible() {
            prop_assert!(rel.is_feasible());
            prop_assert!(rel.objective >= int.objective - 1e-6);
        }
    }

    #[test]
    fn lp_round_trip_preserves_optimum(m in small_model()) {
        let back = read_lp(&export_lp(&m)).unwrap();
        prop_assert_eq!(&back, &m);
    }
}
