use degenspec::eigensolve::{count_below, count_curve, dense_all, lowest_k, nearest_k, SolveOptions};
use degenspec::grid::{
    add_diagonal_potential, axis_laplacian, kinetic_on_grid, kron_assemble, richardson, Axis, BoundaryCondition, Grid,
    SparseSymMatrix,
};
use degenspec::par::Execution;
use degenspec::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sparse(n: usize, density: f64, seed: u64) -> SparseSymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, rng.random_range(-4.0..4.0)));
        for j in 0..i {
            if rng.random_bool(density) {
                let v = rng.random_range(-1.0..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
            }
        }
    }
    SparseSymMatrix::from_triplets(n, &t).unwrap()
}

fn dense_count(values: &[f64], lambda: f64) -> usize {
    values.iter().filter(|&&v| v < lambda).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn inertia_matches_dense_counts(n in 2usize..60, density in 0.02f64..0.4, seed in any::<u64>(), lambda in -6.0f64..6.0) {
        let a = random_sparse(n, density, seed);
        let all = dense_all(&a).unwrap().values;
        // keep clear of eigenvalues so the count is well defined
        prop_assume!(all.iter().all(|v| (v - lambda).abs() > 1e-8));
        prop_assert_eq!(count_below(&a, lambda).unwrap(), dense_count(&all, lambda));
    }

    #[test]
    fn lowest_k_matches_dense(n in 12usize..80, seed in any::<u64>()) {
        let a = random_sparse(n, 0.1, seed);
        let all = dense_all(&a).unwrap().values;
        let low = lowest_k(&a, &SolveOptions::with_k(4)).unwrap();
        prop_assert!(low.converged);
        for (x, y) in low.values.iter().zip(&all) {
            prop_assert!((x - y).abs() < 1e-7 * (1.0 + y.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn larger_potential_raises_every_level(c in 0.0f64..3.0, seed in any::<u64>()) {
        let grid = Grid::new(vec![Axis::new(-4.0, 4.0, 120).unwrap()]).unwrap();
        let kin = kinetic_on_grid(&grid, &[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bump: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..c)).collect();
        let base = add_diagonal_potential(&kin, &grid, |x| x[0] * x[0]).unwrap();
        let raised = base.add_diagonal(&bump);
        let lo = lowest_k(&base, &SolveOptions::with_k(5)).unwrap().values;
        let hi = lowest_k(&raised, &SolveOptions::with_k(5)).unwrap().values;
        for (l, h) in lo.iter().zip(&hi) {
            prop_assert!(h >= &(l - 1e-9));
        }
    }
}

#[test]
fn kronecker_sum_spectrum_is_sum_of_factors() {
    let a = axis_laplacian(&Axis::new(0.0, 1.0, 7).unwrap());
    let b = axis_laplacian(&Axis::new(0.0, 2.0, 5).unwrap().with_bc(BoundaryCondition::Neumann, BoundaryCondition::Dirichlet));
    let sum = kron_assemble(&[(a.clone(), 1.0), (b.clone(), 0.5)]).unwrap();
    let ea = dense_all(&a).unwrap().values;
    let eb = dense_all(&b).unwrap().values;
    let mut expect: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x + 0.5 * y)).collect();
    expect.sort_by(f64::total_cmp);
    let got = dense_all(&sum).unwrap().values;
    for (g, e) in got.iter().zip(&expect) {
        assert!((g - e).abs() < 1e-9 * e.abs().max(1.0));
    }
}

#[test]
fn dirichlet_levels_bracket_neumann_levels() {
    let v = |x: &[f64]| x[0] * x[0];
    let level = |bc| {
        let axis = Axis::new(-3.0, 3.0, 300).unwrap().with_bc(bc, bc);
        let grid = Grid::new(vec![axis]).unwrap();
        let a = add_diagonal_potential(&kinetic_on_grid(&grid, &[1.0]).unwrap(), &grid, v).unwrap();
        lowest_k(&a, &SolveOptions::with_k(3)).unwrap().values
    };
    let (d, n) = (level(BoundaryCondition::Dirichlet), level(BoundaryCondition::Neumann));
    for (j, (dj, nj)) in d.iter().zip(&n).enumerate() {
        assert!(dj > nj, "level {j}: {dj} <= {nj}");
        // the box walls move levels of the whole line up (Dirichlet) or down (Neumann)
        let exact = (2 * j + 1) as f64;
        assert!(*dj > exact - 1e-3 && *nj < exact + 1e-3, "level {j}: {nj} .. {dj}");
    }
}

#[test]
fn richardson_removes_quadratic_error() {
    let exact = 3.0;
    let f = |h: f64| exact + 0.7 * h * h;
    let (v, c) = richardson(&[f(0.1), f(0.05)], &[0.1, 0.05], 2).unwrap();
    assert!((v - exact).abs() < 1e-12);
    assert!((c - 0.7 * 0.05f64.powi(2)).abs() < 1e-12);
}

#[test]
fn interior_levels_and_parallel_counts() {
    let grid = Grid::new(vec![Axis::new(-8.0, 8.0, 800).unwrap()]).unwrap();
    let a = add_diagonal_potential(&kinetic_on_grid(&grid, &[1.0]).unwrap(), &grid, |x| x[0] * x[0]).unwrap();
    let near = nearest_k(&a, 10.2, &SolveOptions::with_k(2)).unwrap();
    let mut v = near.spectrum.values.clone();
    v.sort_by(f64::total_cmp);
    assert!((v[0] - 9.0).abs() < 1e-2 && (v[1] - 11.0).abs() < 1e-2, "{v:?}");
    let ls: Vec<f64> = (1..=12).map(|i| 2.0 * i as f64).collect();
    let seq: Vec<usize> = count_curve(&a, &ls, Execution::Sequential).into_iter().map(|r| r.unwrap()).collect();
    let par: Vec<usize> = count_curve(&a, &ls, Execution::Parallel).into_iter().map(|r| r.unwrap()).collect();
    assert_eq!(seq, par);
    assert_eq!(seq, (1..=12).collect::<Vec<_>>());
}

#[test]
fn threshold_on_an_eigenvalue_is_reported() {
    let a = SparseSymMatrix::diagonal_matrix(&[1.0, 2.0, 3.0]).unwrap();
    assert!(matches!(count_below(&a, 2.0), Err(Error::NearSingular { .. })));
    assert_eq!(count_below(&a, 2.0 + 1e-6).unwrap(), 2);
}
