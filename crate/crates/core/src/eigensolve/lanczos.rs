use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_request, iteration_cap, normalize_sign, sym_residual, InnerSolver, SolveOptions, SpectralResult,
    DIRECT_MEMORY_LIMIT};
use crate::assembly::WeightedOperator;
use crate::error::{Result, StarkError};
use crate::sparse::{axpy, dot, norm, BandCholesky, CsrMatrix};
use super::krylov::conjugate_gradient;

/// Basis storage ceiling in bytes.
const BASIS_MEMORY_LIMIT: usize = 1_200_000_000;
/// Ritz extraction runs every this many steps once enough vectors exist.
const CHECK_EVERY: usize = 4;

enum Inner {
    Direct(BandCholesky),
    Iterative { matrix: CsrMatrix, max_iter: usize },
}

impl Inner {
    fn solve(&self, rhs: &[f64], rtol: f64) -> Result<(Vec<f64>, usize)> {
        match self {
            Inner::Direct(f) => {
                let mut x = rhs.to_vec();
                f.solve_in_place(&mut x);
                Ok((x, 0))
            }
            Inner::Iterative { matrix, max_iter } => {
                let mut x = vec![0.0; rhs.len()];
                let it = conjugate_gradient(matrix, rhs, &mut x, rtol, *max_iter)?;
                Ok((x, it))
            }
        }
    }
}

/// Seeded start vector `1 + r/2`, `r` uniform on `[-1, 1)`. The plain
/// all-ones vector is orthogonal to every odd mode of a symmetric domain.
pub(crate) fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + seed);
    let mut v: Vec<f64> = (0..n).map(|_| 1.0 + 0.5 * rng.random_range(-1.0..1.0)).collect();
    let s = 1.0 / norm(&v);
    v.iter_mut().for_each(|x| *x *= s);
    v
}

/// Two-pass classical Gram-Schmidt of `w` against `basis`; returns the
/// accumulated coefficients.
pub(crate) fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (q, c) in basis.iter().zip(coef.iter_mut()) {
            let p = dot(q, w);
            *c += p;
            axpy(-p, q, w);
        }
    }
    coef
}

pub fn smallest_sym_with(op: &WeightedOperator, count: usize, tol: f64, opts: &SolveOptions) -> Result<SpectralResult> {
    check_request(count, tol)?;
    let n = op.size();
    if count > n {
        return Err(StarkError::OutOfRange {
            value: count as f64,
            lo: 1.0,
            hi: n as f64,
        });
    }
    let sigma = opts.shift.unwrap_or(op.x_min - op.h.powf(2.0 / 3.0));
    let inv_sqrt: Vec<f64> = op.weight.iter().map(|m| 1.0 / m.sqrt()).collect();
    let b = op.stiffness.congruence_shift(&inv_sqrt, sigma);
    let band_bytes = n * (b.bandwidth() + 1) * 8;
    let cap = iteration_cap(count, n);
    let direct = match opts.inner {
        InnerSolver::Direct => true,
        InnerSolver::Iterative => false,
        InnerSolver::Auto => band_bytes <= DIRECT_MEMORY_LIMIT,
    };
    let inner = if direct {
        Inner::Direct(BandCholesky::factor(&b)?)
    } else {
        Inner::Iterative {
            matrix: b,
            max_iter: 20 * n,
        }
    };
    let max_dim = n.min(cap).min((BASIS_MEMORY_LIMIT / (8 * n)).max(count + 1));

    let mut basis: Vec<Vec<f64>> = vec![start_vector(n, 0)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut inner_total = 0usize;
    let mut restarts = 0u64;
    let mut best = f64::INFINITY;
    loop {
        let k = alpha.len();
        let (mut w, it) = inner.solve(&basis[k], tol / 100.0)?;
        inner_total += it;
        let coef = orthogonalize(&basis, &mut w);
        alpha.push(coef[k]);
        let mut b_k = norm(&w);
        let scale = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let exhausted = k + 1 == n;
        let breakdown = !exhausted && b_k <= 1e-10 * scale;
        if breakdown {
            // Invariant subspace: continue with a fresh direction.
            restarts += 1;
            w = start_vector(n, restarts);
            orthogonalize(&basis, &mut w);
            b_k = 0.0;
        }
        let steps = k + 1;
        if steps >= count && (steps % CHECK_EVERY == 0 || exhausted || breakdown || steps == max_dim) {
            if let Some(res) = extract(op, &basis, &alpha, &beta, b_k, sigma, &inv_sqrt, count, tol, &mut best) {
                return Ok(SpectralResult {
                    iterations: steps,
                    inner_iterations: inner_total,
                    shift: sigma,
                    grid_id: op.grid.id(),
                    ..res
                });
            }
        }
        if exhausted || steps >= max_dim {
            return Err(StarkError::NoConvergence {
                iterations: steps,
                residual: best,
            });
        }
        let s = norm(&w);
        w.iter_mut().for_each(|x| *x /= s);
        beta.push(b_k);
        basis.push(w);
    }
}

/// Ritz pairs of the current tridiagonal matrix; `Some` once `count` of
/// them pass the true residual test.
#[allow(clippy::too_many_arguments)]
fn extract(
    op: &WeightedOperator,
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    b_next: f64,
    sigma: f64,
    inv_sqrt: &[f64],
    count: usize,
    tol: f64,
    best: &mut f64,
) -> Option<SpectralResult> {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let wanted = &order[..count];
    // Cheap screen: Ritz residual of the inverted operator, in eigenvalue units.
    for &i in wanted {
        let theta = eig.eigenvalues[i];
        if !(theta > 0.0) {
            return None;
        }
        let est = (b_next * eig.eigenvectors[(k - 1, i)]).abs() / theta;
        if est > tol {
            *best = best.min(est);
            return None;
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(count);
    let mut max_res: f64 = 0.0;
    for &i in wanted {
        let theta = eig.eigenvalues[i];
        let lambda = sigma + 1.0 / theta;
        let mut y = vec![0.0; basis[0].len()];
        for (j, q) in basis.iter().enumerate() {
            axpy(eig.eigenvectors[(j, i)], q, &mut y);
        }
        let mut v: Vec<f64> = y.iter().zip(inv_sqrt).map(|(a, s)| a * s).collect();
        let vn = op.weighted_dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= vn);
        normalize_sign(&mut v);
        let r = sym_residual(op, lambda, &v);
        max_res = max_res.max(r);
        pairs.push((lambda, v, r));
    }
    if max_res > tol {
        *best = best.min(max_res);
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = SpectralResult {
        eigenvalues: Vec::with_capacity(count),
        eigenvectors: Vec::with_capacity(count),
        residuals: Vec::with_capacity(count),
        iterations: 0,
        inner_iterations: 0,
        shift: sigma,
        grid_id: String::new(),
    };
    for (l, v, r) in pairs {
        out.eigenvalues.push(l);
        out.eigenvectors.push(v);
        out.residuals.push(r);
    }
    Some(out)
}
