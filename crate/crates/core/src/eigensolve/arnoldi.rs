use nalgebra::DMatrix;

use super::krylov::bicgstab;
use super::lanczos::{orthogonalize, start_vector};
use super::{check_request, iteration_cap, nonsym_residual, normalize_sign, InnerSolver, SolveOptions, SpectralResult,
    DIRECT_MEMORY_LIMIT};
use crate::assembly::FullGridOperator;
use crate::error::{Result, StarkError};
use crate::sparse::{axpy, norm, BandLu, CsrMatrix, Ilu0};

const BASIS_MEMORY_LIMIT: usize = 1_200_000_000;
const CHECK_EVERY: usize = 4;
/// Largest imaginary part accepted for a returned eigenvalue.
const IMAG_LIMIT: f64 = 1e-10;

enum Inner {
    Direct(BandLu),
    Iterative { matrix: CsrMatrix, pre: Ilu0, max_iter: usize },
}

impl Inner {
    fn solve(&self, rhs: &[f64], rtol: f64) -> Result<(Vec<f64>, usize)> {
        match self {
            Inner::Direct(f) => {
                let mut x = rhs.to_vec();
                f.solve_in_place(&mut x);
                Ok((x, 0))
            }
            Inner::Iterative { matrix, pre, max_iter } => {
                let mut x = vec![0.0; rhs.len()];
                let it = bicgstab(matrix, pre, rhs, &mut x, rtol, *max_iter)?;
                Ok((x, it))
            }
        }
    }
}

enum Extraction {
    Done(SpectralResult),
    Complex { re: f64, im: f64 },
    Pending(f64),
}

pub fn smallest_nonsym_with(op: &FullGridOperator, count: usize, tol: f64, opts: &SolveOptions) -> Result<SpectralResult> {
    check_request(count, tol)?;
    let n = op.size();
    if count > n {
        return Err(StarkError::OutOfRange {
            value: count as f64,
            lo: 1.0,
            hi: n as f64,
        });
    }
    let sigma = opts
        .shift
        .unwrap_or(op.x_lower - op.h.powf(2.0 / 3.0));
    let m = op.matrix.shifted(sigma);
    let band_bytes = n * (2 * m.bandwidth() + 1) * 8;
    let direct = match opts.inner {
        InnerSolver::Direct => true,
        InnerSolver::Iterative => false,
        InnerSolver::Auto => band_bytes <= DIRECT_MEMORY_LIMIT,
    };
    let inner = if direct {
        Inner::Direct(BandLu::factor(&m)?)
    } else {
        let pre = Ilu0::factor(&m)?;
        Inner::Iterative {
            matrix: m,
            pre,
            max_iter: 20 * n,
        }
    };
    let cap = iteration_cap(count, n);
    let max_dim = n.min(cap).min((BASIS_MEMORY_LIMIT / (8 * n)).max(count + 1));

    let mut basis: Vec<Vec<f64>> = vec![start_vector(n, 0)];
    // Column k holds H[0..=k+1, k].
    let mut hcols: Vec<Vec<f64>> = Vec::new();
    let mut inner_total = 0usize;
    let mut restarts = 0u64;
    let mut best = f64::INFINITY;
    let mut last_complex = None;
    loop {
        let k = hcols.len();
        let (mut w, it) = inner.solve(&basis[k], tol / 100.0)?;
        inner_total += it;
        let mut col = orthogonalize(&basis, &mut w);
        let mut h_next = norm(&w);
        let scale = col.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let exhausted = k + 1 == n;
        let breakdown = !exhausted && h_next <= 1e-10 * scale;
        if breakdown {
            restarts += 1;
            w = start_vector(n, restarts);
            orthogonalize(&basis, &mut w);
            h_next = 0.0;
        }
        col.push(h_next);
        hcols.push(col);
        let steps = k + 1;
        if steps >= count && (steps % CHECK_EVERY == 0 || exhausted || breakdown || steps == max_dim) {
            match extract(op, &basis, &hcols, sigma, count, tol) {
                Extraction::Done(res) => {
                    return Ok(SpectralResult {
                        iterations: steps,
                        inner_iterations: inner_total,
                        grid_id: format!("fullgrid-{}x{}-a{:e}", op.nx, op.ny, op.spacing),
                        ..res
                    })
                }
                Extraction::Complex { re, im } => last_complex = Some((re, im)),
                Extraction::Pending(r) => {
                    last_complex = None;
                    best = best.min(r);
                }
            }
        }
        if exhausted || steps >= max_dim {
            if let Some((re, im)) = last_complex {
                return Err(StarkError::ComplexRitzValue { re, im });
            }
            return Err(StarkError::NoConvergence {
                iterations: steps,
                residual: best,
            });
        }
        let s = norm(&w);
        w.iter_mut().for_each(|x| *x /= s);
        basis.push(w);
    }
}

/// Eigenvector of the Hessenberg matrix for a real Ritz value by two steps
/// of inverse iteration.
fn hessenberg_vector(h: &DMatrix<f64>, mu: f64) -> Option<Vec<f64>> {
    let k = h.nrows();
    let shift = mu + 1e-12 * mu.abs().max(f64::MIN_POSITIVE);
    let a = h - DMatrix::identity(k, k) * shift;
    let lu = a.lu();
    let mut z = nalgebra::DVector::from_element(k, 1.0);
    for _ in 0..3 {
        z = lu.solve(&z)?;
        let s = z.norm();
        if !(s.is_finite() && s > 0.0) {
            return None;
        }
        z /= s;
    }
    Some(z.iter().copied().collect())
}

fn extract(
    op: &FullGridOperator,
    basis: &[Vec<f64>],
    hcols: &[Vec<f64>],
    sigma: f64,
    count: usize,
    tol: f64,
) -> Extraction {
    let k = hcols.len();
    let mut h = DMatrix::<f64>::zeros(k, k);
    for (j, col) in hcols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate().take(k) {
            h[(i, j)] = v;
        }
    }
    let h_next = hcols[k - 1][k];
    let mus = h.complex_eigenvalues();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (mus[a].norm(), mus[b].norm());
        mb.total_cmp(&ma).then(mus[b].re.total_cmp(&mus[a].re))
    });
    for &i in &order[..count] {
        let lam = mus[i].inv();
        if lam.im.abs() > IMAG_LIMIT {
            return Extraction::Complex {
                re: sigma + lam.re,
                im: lam.im,
            };
        }
    }
    let mut pairs = Vec::with_capacity(count);
    let mut max_res: f64 = 0.0;
    for &i in &order[..count] {
        let mu = mus[i].re;
        if !(mu > 0.0) {
            return Extraction::Pending(f64::INFINITY);
        }
        let Some(z) = hessenberg_vector(&h, mu) else {
            return Extraction::Pending(f64::INFINITY);
        };
        let est = (h_next * z[k - 1]).abs() / mu;
        if est > tol {
            return Extraction::Pending(est);
        }
        let lambda = sigma + 1.0 / mu;
        let mut v = vec![0.0; basis[0].len()];
        for (j, q) in basis.iter().enumerate() {
            axpy(z[j], q, &mut v);
        }
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        normalize_sign(&mut v);
        let r = nonsym_residual(op, lambda, &v);
        max_res = max_res.max(r);
        pairs.push((lambda, v, r));
    }
    if max_res > tol {
        return Extraction::Pending(max_res);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = SpectralResult {
        eigenvalues: Vec::new(),
        eigenvectors: Vec::new(),
        residuals: Vec::new(),
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
    Extraction::Done(out)
}
