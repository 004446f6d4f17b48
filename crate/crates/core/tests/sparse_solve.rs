mod common;

use common::{a_norm_sq, dominant_spd, norm, random_vec, rel_err, rng, spectral_spd, sub};
use proptest::prelude::*;
use sparse_aib::dense::dense_solve;
use sparse_aib::sparse_solve::{project_update, sparse_approx_solve, sparse_approx_solve_traced};
use sparse_aib::{IndexSet, SparseSolveParams, SparseVector, SymSparseMatrix};

/// Checks the per-step A-norm error reduction bound against a dense solve.
fn check_error_reduction(a: &SymSparseMatrix, b: &[f64], params: &SparseSolveParams) -> usize {
    let dense = a.to_dense();
    let exact = dense_solve(&dense, b).unwrap();
    let diag = a.diagonal();
    let mut prev = vec![0.0; a.dim()];
    let mut steps = 0;
    sparse_approx_solve_traced(a.full(), b, params, |step| {
        let x = step.x.to_dense();
        let before = a_norm_sq(&dense, &sub(&exact, &prev));
        let after = a_norm_sq(&dense, &sub(&exact, &x));
        let num: f64 = step.residual_on_indices.iter().map(|r| r * r).sum();
        let den: f64 = step.indices.iter().map(|&i| diag[i]).sum();
        assert!(
            before - after >= num / den - 1e-12,
            "step {}: reduction {} below bound {}",
            step.step,
            before - after,
            num / den
        );
        prev = x;
        steps += 1;
    })
    .unwrap();
    steps
}

#[test]
fn error_reduction_bound_holds_every_step() {
    let mut g = rng(11);
    let mut total = 0;
    for case in 0..50 {
        let a = if case % 2 == 0 {
            SymSparseMatrix::from_dense(&spectral_spd(&mut g, 30, 1e3)).unwrap()
        } else {
            dominant_spd(&mut g, 30, 4, 0.1)
        };
        let b = random_vec(&mut g, 30);
        let m = 1 + case % 3;
        total += check_error_reduction(&a, &b, &SparseSolveParams::new(m, 1e-6, 30).with_max_steps(200));
    }
    assert!(total > 500);
}

#[test]
fn galerkin_condition_on_selected_indices() {
    let mut g = rng(12);
    for _ in 0..30 {
        let a = dominant_spd(&mut g, 25, 5, 0.2);
        let b = random_vec(&mut g, 25);
        let bnorm = norm(&b);
        let mut x = SparseVector::new(25);
        let mut r = b.clone();
        for _ in 0..10 {
            let set = sparse_aib::sparse_solve::select_indices(&r, 3, 25);
            if set.is_empty() {
                break;
            }
            project_update(a.full(), &mut x, &mut r, &set).unwrap();
            for i in set.iter() {
                assert!(r[i].abs() <= 1e-12 * bnorm, "r[{i}] = {}", r[i]);
            }
        }
    }
}

#[test]
fn recomputed_residual_matches_recurrence() {
    let mut g = rng(13);
    for case in 0..40 {
        let a = dominant_spd(&mut g, 50, 6, 0.05);
        let b = random_vec(&mut g, 50);
        let params = SparseSolveParams::new(1 + case % 4, 1e-3, 5 + case % 20);
        let res = sparse_approx_solve(a.full(), &b, &params).unwrap();
        let true_r = sub(&b, &a.matvec(&res.x.to_dense()).unwrap());
        assert!(norm(&sub(&true_r, &res.residual)) <= 1e-11 * norm(&b));
        assert!((res.residual_norm - norm(&res.residual)).abs() <= 1e-15 * norm(&b).max(1.0));
    }
}

#[test]
fn small_dense_system_solved_to_high_accuracy() {
    let mut g = rng(14);
    let a = SymSparseMatrix::from_dense(&spectral_spd(&mut g, 10, 10.0)).unwrap();
    let b = random_vec(&mut g, 10);
    let params = SparseSolveParams::new(2, 1e-14, 10).with_max_steps(5_000);
    let res = sparse_approx_solve(a.full(), &b, &params).unwrap();
    let exact = dense_solve(&a.to_dense(), &b).unwrap();
    assert!(rel_err(&res.x.to_dense(), &exact) <= 1e-10);
}

#[test]
fn coordinate_descent_converges() {
    let mut g = rng(15);
    for _ in 0..10 {
        let a = dominant_spd(&mut g, 20, 4, 0.5);
        let b = random_vec(&mut g, 20);
        let params = SparseSolveParams::new(1, 0.0, 20).with_max_steps(50 * 20);
        let res = sparse_approx_solve(a.full(), &b, &params).unwrap();
        assert!(res.residual_norm <= 1e-10 * norm(&b), "{}", res.residual_norm);
    }
}

#[test]
fn leading_block_solve_ignores_trailing_rows() {
    let mut g = rng(16);
    let a = dominant_spd(&mut g, 30, 5, 0.5);
    let k = 12;
    let b = random_vec(&mut g, k);
    let res = sparse_approx_solve(a.leading_block(k), &b, &SparseSolveParams::new(2, 0.0, k).with_max_steps(2_000)).unwrap();
    assert!(res.x.indices().iter().all(|&i| i < k));
    let dense = a.to_dense();
    let block = sparse_aib::dense::DenseMatrix::from_fn(k, |i, j| dense.get(i, j));
    let exact = dense_solve(&block, &b).unwrap();
    assert!(rel_err(&res.x.to_dense(), &exact) <= 1e-10);
}

#[test]
fn select_indices_excludes_zero_residual() {
    assert_eq!(sparse_aib::sparse_solve::select_indices(&[0.0, 0.0, 0.0], 2, 2), IndexSet::empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solution_never_exceeds_fill_budget(
        seed in any::<u64>(),
        n in 2usize..60,
        m in 1usize..5,
        lfil in 1usize..20,
        eps in prop_oneof![Just(0.0), 1e-8f64..1.0],
    ) {
        let mut g = rng(seed);
        let a = dominant_spd(&mut g, n, 4, 0.1);
        let b = random_vec(&mut g, n);
        let res = sparse_approx_solve(a.full(), &b, &SparseSolveParams::new(m, eps, lfil)).unwrap();
        prop_assert!(res.x.nnz() <= lfil);
        prop_assert!(res.steps <= 10 * lfil);
    }

    #[test]
    fn error_reduction_bound_on_small_instances(seed in any::<u64>(), m in 1usize..4) {
        let mut g = rng(seed);
        let a = dominant_spd(&mut g, 15, 3, 0.1);
        let b = random_vec(&mut g, 15);
        check_error_reduction(&a, &b, &SparseSolveParams::new(m, 0.0, 15).with_max_steps(40));
    }
}
