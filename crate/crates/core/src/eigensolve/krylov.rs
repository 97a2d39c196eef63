//! Inner linear solvers for the shift-invert iterations.

use crate::error::{Result, StarkError};
use crate::sparse::{axpy, dot, norm, CsrMatrix, Ilu0};

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite `A`. Starts from the given `x`; returns the iteration count.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<usize> {
    let n = a.size();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = b.to_vec();
    let ax = a.mul(x);
    axpy(-1.0, &ax, &mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if norm(&r) <= rtol * bnorm {
            return Ok(it);
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(StarkError::ShiftNotDefinite);
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * d;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if norm(&r) <= rtol * bnorm {
        return Ok(max_iter);
    }
    Err(StarkError::InnerSolve(format!(
        "conjugate gradients stalled at relative residual {:e} after {max_iter} iterations",
        norm(&r) / bnorm
    )))
}

/// Right-preconditioned BiCGSTAB. Starts from the given `x`; returns the
/// iteration count.
pub fn bicgstab(a: &CsrMatrix, pre: &Ilu0, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<usize> {
    let n = a.size();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = b.to_vec();
    axpy(-1.0, &a.mul(x), &mut r);
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = norm(&r);
        if rnorm <= rtol * bnorm {
            return Ok(it);
        }
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(StarkError::InnerSolve("BiCGSTAB breakdown".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        phat.copy_from_slice(&p);
        pre.apply_in_place(&mut phat);
        a.matvec(&phat, &mut v);
        let r0v = dot(&r0, &v);
        if r0v == 0.0 {
            return Err(StarkError::InnerSolve("BiCGSTAB breakdown".into()));
        }
        alpha = rho / r0v;
        // r becomes s
        axpy(-alpha, &v, &mut r);
        axpy(alpha, &phat, x);
        if norm(&r) <= rtol * bnorm {
            return Ok(it + 1);
        }
        shat.copy_from_slice(&r);
        pre.apply_in_place(&mut shat);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &r) / tt } else { 0.0 };
        axpy(omega, &shat, x);
        axpy(-omega, &t, &mut r);
    }
    if norm(&r) <= rtol * bnorm {
        return Ok(max_iter);
    }
    Err(StarkError::InnerSolve(format!(
        "BiCGSTAB stalled at relative residual {:e} after {max_iter} iterations",
        norm(&r) / bnorm
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lower: f64, diag: f64, upper: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, diag));
            if i > 0 {
                t.push((i, i - 1, lower));
            }
            if i + 1 < n {
                t.push((i, i + 1, upper));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = tridiag(100, -1.0, 2.5, -1.0);
        let x_true: Vec<f64> = (0..100).map(|k| (k as f64 * 0.1).cos()).collect();
        let b = a.mul(&x_true);
        let mut x = vec![0.0; 100];
        conjugate_gradient(&a, &b, &mut x, 1e-13, 1000).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn cg_detects_indefinite() {
        let a = tridiag(20, -1.0, 1.0, -1.0).shifted(1.0);
        let mut x = vec![0.0; 20];
        let b = vec![1.0; 20];
        assert!(conjugate_gradient(&a, &b, &mut x, 1e-12, 100).is_err());
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let a = tridiag(200, -1.3, 3.0, -0.7);
        let pre = Ilu0::factor(&a).unwrap();
        let x_true: Vec<f64> = (0..200).map(|k| 1.0 + (k as f64 * 0.05).sin()).collect();
        let b = a.mul(&x_true);
        let mut x = vec![0.0; 200];
        bicgstab(&a, &pre, &b, &mut x, 1e-13, 500).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
