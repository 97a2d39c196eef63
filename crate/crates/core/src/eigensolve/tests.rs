use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::assembly::{assemble_fullgrid, assemble_tubular, build_patch_grid, AxisBox, FullGridOptions, PatchGrid,
    PatchOptions};
use crate::geometry::{BoundaryCurve, CurveSpec, PatchGeometry, TubularPatch};
use crate::sparse::CsrMatrix;

fn laplacian_1d(n: usize) -> WeightedOperator {
    let dx = 1.0 / (n + 1) as f64;
    let c = 1.0 / (dx * dx);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0 * c));
        if i > 0 {
            t.push((i, i - 1, -c));
        }
        if i + 1 < n {
            t.push((i, i + 1, -c));
        }
    }
    let grid = PatchGrid::new(0.5, 1.0, n, 1);
    WeightedOperator::from_parts(CsrMatrix::from_triplets(n, &t), vec![1.0; n], 0.0, 1.0, grid).unwrap()
}

fn disk_operator(h: f64) -> WeightedOperator {
    let curve = BoundaryCurve::new(CurveSpec::Circle {
        center: [0.0, 0.0],
        radius: 1.0,
    })
    .unwrap();
    let patch = TubularPatch::new(curve).unwrap();
    let grid = build_patch_grid(h, patch.kappa0(), patch.bounds(), &PatchOptions::default()).unwrap();
    assemble_tubular(&patch, &grid, h).unwrap()
}

#[test]
fn dirichlet_laplacian_ground_state() {
    let op = laplacian_1d(200);
    let res = smallest_sym(&op, 3, 1e-10).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((res.eigenvalues[0] - pi2).abs() < 2e-3, "{}", res.eigenvalues[0]);
    // discrete closed form 4 (n+1)^2 sin^2(k pi / (2(n+1)))
    for (k, l) in res.eigenvalues.iter().enumerate() {
        let x = (k + 1) as f64 * std::f64::consts::PI / 402.0;
        let exact = 4.0 * 201.0f64.powi(2) * x.sin().powi(2);
        assert!((l - exact).abs() < 1e-8 * exact, "{l} vs {exact}");
    }
}

#[test]
fn identity_pencil() {
    let n = 50;
    let grid = PatchGrid::new(0.5, 1.0, n, 1);
    let op = WeightedOperator::from_parts(CsrMatrix::identity(n), vec![1.0; n], 0.0, 1.0, grid).unwrap();
    let res = smallest_sym(&op, 5, 1e-10).unwrap();
    for l in &res.eigenvalues {
        assert!((l - 1.0).abs() < 1e-12);
    }
}

#[test]
fn disk_pairs_are_certified() {
    let op = disk_operator(0.05);
    let res = smallest_sym(&op, 4, 1e-10).unwrap();
    assert!(res.residuals.iter().all(|&r| r <= 1e-10));
    assert!(res.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(res.eigenvalues[0] > op.x_min);
    // independent recomputation of the certificate
    let again = recompute_residuals(&op, &res).unwrap();
    for (a, b) in again.iter().zip(&res.residuals) {
        assert!((a - b).abs() <= 1e-14);
    }
    // weighted orthonormality
    for i in 0..4 {
        for j in 0..4 {
            let g = op.weighted_dot(&res.eigenvectors[i], &res.eigenvectors[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-8, "({i},{j}) {g}");
        }
    }
    // odd modes are found: the second eigenvector is odd in s
    let v = &res.eigenvectors[1];
    let grid = &op.grid;
    let (i, j) = (grid.ns / 4, grid.nt / 6);
    let a = v[grid.index(i, j)];
    let b = v[grid.index(grid.ns - 1 - i, j)];
    assert!((a + b).abs() < 1e-6 * a.abs().max(b.abs()) + 1e-12);
}

#[test]
fn solves_are_bitwise_deterministic() {
    let op = disk_operator(0.05);
    let a = smallest_sym(&op, 3, 1e-10).unwrap();
    let b = smallest_sym(&op, 3, 1e-10).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
    assert_eq!(a.eigenvectors, b.eigenvectors);
}

#[test]
fn ground_state_minimizes_rayleigh_quotient() {
    let op = disk_operator(0.05);
    let res = smallest_sym(&op, 1, 1e-10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let v: Vec<f64> = (0..op.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(op.rayleigh(&v) >= res.eigenvalues[0]);
    }
    let smooth: Vec<f64> = res.eigenvectors[0]
        .iter()
        .enumerate()
        .map(|(k, x)| x * (1.0 + 0.1 * (k as f64).sin()))
        .collect();
    assert!(op.rayleigh(&smooth) >= res.eigenvalues[0]);
}

#[test]
fn inner_solvers_agree() {
    let op = laplacian_1d(120);
    let d = smallest_sym_with(
        &op,
        2,
        1e-10,
        &SolveOptions {
            inner: InnerSolver::Direct,
            shift: None,
        },
    )
    .unwrap();
    let i = smallest_sym_with(
        &op,
        2,
        1e-10,
        &SolveOptions {
            inner: InnerSolver::Iterative,
            shift: None,
        },
    )
    .unwrap();
    assert!(i.inner_iterations > 0 && d.inner_iterations == 0);
    for (a, b) in d.eigenvalues.iter().zip(&i.eigenvalues) {
        assert!((a - b).abs() < 1e-9 * a.abs());
    }
}

#[test]
fn nonsym_matches_sym_on_square() {
    let dom = AxisBox {
        lo: [0.0, 0.0],
        hi: [0.4, 0.4],
    };
    let h = 0.05;
    let full = assemble_fullgrid(&dom, h, &FullGridOptions { spacing: 0.01, x_max: None }).unwrap();
    assert_eq!(full.matrix.asymmetry(), 0.0);
    let n = full.size();
    let grid = PatchGrid::new(0.2, 0.4, full.nx - 2, full.ny - 2);
    assert_eq!(grid.len(), n);
    let sym_op = WeightedOperator::from_parts(full.matrix.clone(), vec![1.0; n], 0.0, h, grid).unwrap();
    let a = smallest_sym(&sym_op, 3, 1e-10).unwrap();
    for inner in [InnerSolver::Direct, InnerSolver::Iterative] {
        let b = smallest_nonsym_with(
            &full,
            3,
            1e-10,
            &SolveOptions {
                inner,
                shift: Some(a.eigenvalues[0] - 0.05),
            },
        )
        .unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }
}

#[test]
fn nonsym_disk_is_real_with_oscillator_gap() {
    let curve = BoundaryCurve::new(CurveSpec::Circle {
        center: [0.0, 0.0],
        radius: 1.0,
    })
    .unwrap();
    let h = 0.2;
    let full = assemble_fullgrid(&curve, h, &FullGridOptions { spacing: 0.02, x_max: None }).unwrap();
    assert!(full.matrix.asymmetry() > 0.0);
    let res = smallest_nonsym(&full, 2, 1e-10, -1.0 + 2.0 * h.powf(2.0 / 3.0) - 5.0 * h.powf(2.0 / 3.0)).unwrap();
    assert!(res.eigenvalues[1] > res.eigenvalues[0] + 0.1 * h);
    assert!(res.residuals.iter().all(|&r| r <= 1e-10));
}

#[test]
fn rejects_bad_requests() {
    let op = laplacian_1d(20);
    assert!(smallest_sym(&op, 0, 1e-10).is_err());
    assert!(smallest_sym(&op, 33, 1e-10).is_err());
    assert!(smallest_sym(&op, 2, 1e-12).is_err());
}

#[test]
fn shift_above_spectrum_is_detected() {
    let op = laplacian_1d(20);
    let r = smallest_sym_with(
        &op,
        1,
        1e-10,
        &SolveOptions {
            inner: InnerSolver::Direct,
            shift: Some(20.0),
        },
    );
    assert!(matches!(r, Err(StarkError::ShiftNotDefinite)));
}
