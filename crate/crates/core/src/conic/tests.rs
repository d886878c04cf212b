use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::scalar::Cx;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn c1(x: f64) -> Cx<f64> {
    Cx::new(x, 0.0)
}

fn weak_duality_holds(p: &ConicProblem<f64>, s: &ConicSolution<f64>) -> bool {
    match p.sense {
        ObjectiveSense::Minimize => s.primal_objective >= s.dual_objective - 1e-12,
        ObjectiveSense::Maximize => s.primal_objective <= s.dual_objective + 1e-12,
    }
}

/// max Tr(C X) s.t. Tr X = 1, X ⪰ 0.
fn max_eig_problem(c: &DMatrix<Cx<f64>>) -> ConicProblem<f64> {
    let n = c.nrows();
    let mut p = ConicProblem::new();
    let x = p.add_block(n);
    p.maximize(LinExpr::new().block(x, HermCoeff::dense(c.clone())));
    p.constrain(LinExpr::new().block(x, HermCoeff::identity(1.0)), Sense::Eq, 1.0);
    p
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> DMatrix<Cx<f64>> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        let im = if complex { rng.random::<f64>() - 0.5 } else { 0.0 };
        Cx::new(rng.random::<f64>() - 0.5, im)
    });
    (&a + a.adjoint()) * c1(0.5)
}

#[test]
fn scalar_lower_bound() {
    let mut p = ConicProblem::new();
    let x = p.add_free_var();
    p.minimize(LinExpr::from_var(x));
    p.constrain(LinExpr::from_var(x), Sense::Ge, 1.0);
    let s = solve(&p, &opts()).unwrap();
    assert!(s.is_optimal(), "{:?}", s.status);
    assert_relative_eq!(s.value(x), 1.0, epsilon = 1e-6);
    assert!(weak_duality_holds(&p, &s));
}

#[test]
fn trace_with_pinned_corner() {
    let mut p = ConicProblem::new();
    let x = p.add_block(2);
    p.minimize(LinExpr::new().block(x, HermCoeff::identity(1.0)));
    p.constrain(
        LinExpr::new().block(x, HermCoeff::entry(0, 0, c1(1.0))),
        Sense::Eq,
        1.0,
    );
    let s = solve(&p, &opts()).unwrap();
    assert!(s.is_optimal());
    assert_relative_eq!(s.primal_objective, 1.0, epsilon = 1e-6);
    let xm = s.block(x);
    assert_relative_eq!(xm[(0, 0)].re, 1.0, epsilon = 1e-6);
    assert!(xm[(1, 1)].re.abs() < 1e-6);
    assert!(xm[(0, 1)].norm() < 1e-3);
}

#[test]
fn bounded_lp() {
    // max x + 2y s.t. x + y ≤ 4, 0 ≤ x ≤ 3, 1 ≤ y ≤ 2.5
    let mut p = ConicProblem::new();
    let x = p.add_var(Some(0.0), Some(3.0));
    let y = p.add_var(Some(1.0), Some(2.5));
    p.maximize(LinExpr::from_var(x).var(y, 2.0));
    p.constrain(LinExpr::from_var(x).var(y, 1.0), Sense::Le, 4.0);
    let s = solve(&p, &opts()).unwrap();
    assert!(s.is_optimal());
    assert_relative_eq!(s.value(y), 2.5, epsilon = 1e-6);
    assert_relative_eq!(s.value(x), 1.5, epsilon = 1e-6);
    assert_relative_eq!(s.primal_objective, 6.5, epsilon = 1e-6);
    assert!(weak_duality_holds(&p, &s));
}

#[test]
fn fixed_variable_and_constant_offset() {
    let mut p = ConicProblem::new();
    let x = p.add_var(Some(2.0), Some(2.0));
    let y = p.add_nonneg_var();
    p.minimize(LinExpr::from_var(y).plus_constant(5.0));
    p.constrain(LinExpr::from_var(y).var(x, -1.0), Sense::Ge, 0.0);
    let s = solve(&p, &opts()).unwrap();
    assert!(s.is_optimal());
    assert_relative_eq!(s.primal_objective, 7.0, epsilon = 1e-6);
    assert_relative_eq!(s.value(x), 2.0);
}

#[test]
fn max_eigenvalue_oracle_real_and_complex() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let n = 1 + trial % 10;
        let c = random_hermitian(&mut rng, n, trial % 2 == 1);
        let lmax = c.symmetric_eigenvalues().max();
        let p = max_eig_problem(&c);
        let s = solve(&p, &opts()).unwrap();
        assert!(s.is_optimal(), "trial {trial}: {:?}", s.status);
        assert!((s.primal_objective - lmax).abs() <= 1e-6, "trial {trial}");
        assert!(weak_duality_holds(&p, &s));
        assert!(s.residuals.gap <= 1e-7);
    }
}

#[test]
fn structured_and_dense_coefficients_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 5;
    let c = DVector::from_fn(n, |_, _| Cx::new(rng.random::<f64>(), rng.random::<f64>() - 0.5));
    let d = DVector::from_fn(n, |_, _| Cx::new(rng.random::<f64>(), rng.random::<f64>()));
    let mut structured = HermCoeff::rank_one(1.0, c.clone());
    structured.push_rank_one(-0.5, d.clone());
    structured.push_entry(1, 3, Cx::new(0.2, -0.4));
    structured.push_entry(2, 2, c1(0.7));
    structured.identity = 0.3;
    let dense = HermCoeff::dense(structured.to_dense(n));

    let build = |coef: HermCoeff<f64>| {
        let mut p = ConicProblem::new();
        let x = p.add_block(n);
        p.maximize(LinExpr::new().block(x, coef));
        p.constrain(LinExpr::new().block(x, HermCoeff::identity(1.0)), Sense::Le, 2.0);
        p.constrain(
            LinExpr::new().block(x, HermCoeff::rank_one(1.0, d.clone())),
            Sense::Ge,
            0.1,
        );
        p
    };
    let a = solve(&build(structured), &opts()).unwrap();
    let b = solve(&build(dense), &opts()).unwrap();
    assert!(a.is_optimal() && b.is_optimal());
    assert_relative_eq!(a.primal_objective, b.primal_objective, max_relative = 1e-6);
}

#[test]
fn hyperbolic_constraint_examples() {
    let eval = |s: f64, tr: f64| {
        hyperbolic_constraint::<f64>(LinExpr::constant_expr(s), LinExpr::constant_expr(tr))
            .is_satisfied(&[], &[], 0.0)
    };
    assert!(eval(2.0, 0.5));
    assert!(!eval(1.0, 0.5));
}

/// Feasibility of `u = a, v = b, u·v ≥ c²` as decided by the solver.
fn cone_feasible(a: f64, b: f64, c: f64) -> SolveStatus {
    let mut p = ConicProblem::new();
    let u = p.add_free_var();
    let v = p.add_free_var();
    p.minimize(LinExpr::new());
    p.constrain(LinExpr::from_var(u), Sense::Eq, a);
    p.constrain(LinExpr::from_var(v), Sense::Eq, b);
    p.add_cone(RotatedCone {
        u: LinExpr::from_var(u),
        v: LinExpr::from_var(v),
        z: vec![LinExpr::constant_expr(c)],
    });
    solve(&p, &opts()).unwrap().status
}

#[test]
fn rotated_cone_feasibility_matches_product() {
    assert_eq!(cone_feasible(2.0, 0.5, 0.9), SolveStatus::Optimal);
    assert_eq!(cone_feasible(1.0, 0.5, 1.0), SolveStatus::Infeasible);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let a = rng.random::<f64>() * 3.0;
        let b = rng.random::<f64>() * 3.0;
        let c = rng.random::<f64>() * 2.0;
        let expected = a * b >= c * c;
        let got = cone_feasible(a, b, c);
        assert_eq!(got == SolveStatus::Optimal, expected, "a={a} b={b} c={c}: {got:?}");
    }
}

#[test]
fn hyperbolic_minimum() {
    // min s + t s.t. s·t ≥ 1 → 2 at s = t = 1.
    let mut p = ConicProblem::new();
    let s = p.add_nonneg_var();
    let t = p.add_nonneg_var();
    p.minimize(LinExpr::from_var(s).var(t, 1.0));
    p.add_cone(hyperbolic_constraint(LinExpr::from_var(s), LinExpr::from_var(t)));
    let sol = solve(&p, &opts()).unwrap();
    assert!(sol.is_optimal());
    assert_relative_eq!(sol.primal_objective, 2.0, epsilon = 1e-6);
    assert_relative_eq!(sol.value(s), 1.0, epsilon = 1e-4);
}

#[test]
fn multi_component_cone() {
    // min u s.t. u·1 ≥ 3² + 4² → 25.
    let mut p = ConicProblem::new();
    let u = p.add_free_var();
    p.minimize(LinExpr::from_var(u));
    p.add_cone(RotatedCone {
        u: LinExpr::from_var(u),
        v: LinExpr::constant_expr(1.0),
        z: vec![LinExpr::constant_expr(3.0), LinExpr::constant_expr(4.0)],
    });
    let s = solve(&p, &opts()).unwrap();
    assert!(s.is_optimal());
    assert_relative_eq!(s.primal_objective, 25.0, max_relative = 1e-6);
}

#[test]
fn infeasible_and_unbounded_are_flagged() {
    let mut p = ConicProblem::new();
    let x = p.add_nonneg_var();
    p.minimize(LinExpr::from_var(x));
    p.constrain(LinExpr::from_var(x), Sense::Le, -1.0);
    assert_eq!(solve(&p, &opts()).unwrap().status, SolveStatus::Infeasible);

    let mut p = ConicProblem::new();
    let x = p.add_nonneg_var();
    p.maximize(LinExpr::from_var(x));
    p.constrain(LinExpr::from_var(x), Sense::Ge, 1.0);
    assert_eq!(solve(&p, &opts()).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn malformed_problem_is_an_error() {
    let mut p = ConicProblem::<f64>::new();
    let b = p.add_block(2);
    p.minimize(LinExpr::new().block(b, HermCoeff::rank_one(1.0, DVector::zeros(3))));
    assert!(solve(&p, &opts()).is_err());
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = random_hermitian(&mut rng, 6, true);
    let p = max_eig_problem(&c);
    let a = solve(&p, &opts()).unwrap();
    let b = solve(&p, &opts()).unwrap();
    assert!((a.primal_objective - b.primal_objective).abs() <= 1e-9);
}

#[test]
fn dump_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = max_eig_problem(&random_hermitian(&mut rng, 3, true));
    let v = p.add_var(Some(-1.0), None);
    let mut coef = HermCoeff::rank_one(0.5, DVector::from_element(3, Cx::new(0.1, 0.2)));
    coef.push_entry(2, 0, Cx::new(0.3, 0.4));
    p.constrain(LinExpr::from_var(v).block(BlockId(0), coef), Sense::Ge, -3.0);
    p.add_cone(hyperbolic_constraint(
        LinExpr::from_var(v).plus_constant(2.0),
        LinExpr::constant_expr(1.0),
    ));
    let text = dump_problem(&p);
    let q: ConicProblem<f64> = parse_problem(&text).unwrap();
    assert_eq!(dump_problem(&q), text);
    let a = solve(&p, &opts()).unwrap();
    let b = solve(&q, &opts()).unwrap();
    assert_eq!(a.primal_objective, b.primal_objective);
    assert!(parse_problem::<f64>("qwsr-conic 1\nblock 2\nminimize\nx\nend\n").is_err());
}

#[test]
fn single_precision_solve() {
    let mut p = ConicProblem::<f32>::new();
    let x = p.add_block(2);
    p.minimize(LinExpr::new().block(x, HermCoeff::identity(1.0)));
    p.constrain(LinExpr::new().block(x, HermCoeff::entry(0, 0, Cx::new(1.0, 0.0))), Sense::Eq, 1.0);
    let s = solve(&p, &SolverOptions { tol: 1e-4, max_iter: 100 }).unwrap();
    assert!(s.is_optimal());
    assert!((s.primal_objective - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn weak_duality_on_random_sdps(seed in 0u64..10_000, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_hermitian(&mut rng, n, true);
        let mut p = max_eig_problem(&c);
        let d = DVector::from_fn(n, |_, _| Cx::new(rng.random::<f64>(), 0.0));
        // Feasible at X = I/n.
        let rhs = d.norm_squared() / n as f64;
        p.constrain(
            LinExpr::new().block(BlockId(0), HermCoeff::rank_one(1.0, d)),
            Sense::Le,
            rhs,
        );
        let s = solve(&p, &opts()).unwrap();
        prop_assert!(s.is_optimal());
        prop_assert!(weak_duality_holds(&p, &s));
        prop_assert!(s.residuals.gap <= 1e-7);
    }
}
