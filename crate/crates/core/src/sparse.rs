//! Compressed-row sparse matrices, a banded Cholesky factorization and an
//! incomplete LU preconditioner.

use crate::error::{Result, StarkError};

/// Square sparse matrix in compressed-row layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row constructor; entries within a row may repeat and are summed.
#[derive(Debug)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    scratch: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        CsrBuilder {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz_hint),
            vals: Vec::with_capacity(nnz_hint),
            scratch: Vec::new(),
        }
    }

    pub fn add(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.n);
        self.scratch.push((col, val));
    }

    /// Closes the current row.
    pub fn finish_row(&mut self) {
        self.scratch.sort_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(c, v) in &self.scratch {
            if c == last {
                *self.vals.last_mut().expect("entry exists") += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = c;
            }
        }
        self.scratch.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.n + 1, "every row must be finished");
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Square matrix from `(row, col, value)` triplets, duplicates summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|e| (e.0, e.1));
        let mut b = CsrBuilder::new(n, sorted.len());
        let mut it = sorted.into_iter().peekable();
        for row in 0..n {
            while let Some(&(r, c, v)) = it.peek() {
                if r != row {
                    break;
                }
                b.add(c, v);
                it.next();
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `max |a_ij - a_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|i - j|` over nonzero entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// `diag(scale) A diag(scale) - shift I`, each entry formed as
    /// `a_ij * (s_i * s_j)` so a symmetric input stays exactly symmetric.
    pub fn congruence_shift(&self, scale: &[f64], shift: f64) -> CsrMatrix {
        let mut out = self.clone();
        let mut has_diag = true;
        for i in 0..self.n {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut seen = false;
            for k in r {
                let j = self.cols[k];
                out.vals[k] = self.vals[k] * (scale[i] * scale[j]);
                if i == j {
                    out.vals[k] -= shift;
                    seen = true;
                }
            }
            has_diag &= seen;
        }
        if has_diag || shift == 0.0 {
            return out;
        }
        let mut b = CsrBuilder::new(self.n, self.nnz() + self.n);
        for i in 0..self.n {
            let (c, v) = out.row(i);
            for (&j, &a) in c.iter().zip(v) {
                b.add(j, a);
            }
            if self.get(i, i) == 0.0 && c.binary_search(&i).is_err() {
                b.add(i, -shift);
            }
            b.finish_row();
        }
        b.build()
    }

    /// `A - shift I`.
    pub fn shifted(&self, shift: f64) -> CsrMatrix {
        self.congruence_shift(&vec![1.0; self.n], shift)
    }
}

/// Lower-triangular band Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    band: usize,
    /// Row `i` holds `L[i][i - band ..= i]` (left-padded with zeros).
    rows: Vec<f64>,
}

impl BandCholesky {
    /// Factors a symmetric positive definite matrix. Returns
    /// [`StarkError::ShiftNotDefinite`] on a non-positive pivot.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.size();
        let band = a.bandwidth();
        let w = band + 1;
        let mut rows = vec![0.0; n * w];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j <= i {
                    rows[i * w + band - (i - j)] = x;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(band);
            for j in lo..=i {
                let k0 = lo.max(j.saturating_sub(band));
                let len = j - k0;
                let ri = i * w + band - (i - k0);
                let rj = j * w + band - (j - k0);
                let mut dot = 0.0;
                for k in 0..len {
                    dot += rows[ri + k] * rows[rj + k];
                }
                let idx = i * w + band - (i - j);
                let val = rows[idx] - dot;
                if i == j {
                    if !(val > 0.0) {
                        return Err(StarkError::ShiftNotDefinite);
                    }
                    rows[idx] = val.sqrt();
                } else {
                    rows[idx] = val / rows[j * w + band];
                }
            }
        }
        Ok(BandCholesky { n, band, rows })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, band, w) = (self.n, self.band, self.band + 1);
        for i in 0..n {
            let lo = i.saturating_sub(band);
            let base = i * w + band - (i - lo);
            let mut acc = x[i];
            for (k, j) in (lo..i).enumerate() {
                acc -= self.rows[base + k] * x[j];
            }
            x[i] = acc / self.rows[i * w + band];
        }
        for i in (0..n).rev() {
            x[i] /= self.rows[i * w + band];
            let xi = x[i];
            let lo = i.saturating_sub(band);
            let base = i * w + band - (i - lo);
            for (k, j) in (lo..i).enumerate() {
                x[j] -= self.rows[base + k] * xi;
            }
        }
    }
}

/// Banded LU factorization without pivoting. Intended for shifted
/// M-matrices, where the pivots stay positive.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    band: usize,
    /// Row `i` holds `A[i][i - band ..= i + band]`, overwritten by `L` and `U`.
    rows: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.size();
        let band = a.bandwidth();
        let w = 2 * band + 1;
        let mut rows = vec![0.0; n * w];
        for i in 0..n {
            let (c, v) = a.row(i);
            for (&j, &x) in c.iter().zip(v) {
                rows[i * w + band + j - i] = x;
            }
        }
        for k in 0..n {
            let pivot = rows[k * w + band];
            if !(pivot.abs() > 0.0) || !pivot.is_finite() {
                return Err(StarkError::InnerSolve(format!("zero pivot in row {k}")));
            }
            let hi = (k + band + 1).min(n);
            let (head, tail) = rows.split_at_mut((k + 1) * w);
            let urow = &head[k * w + band + 1..k * w + band + (hi - k)];
            for i in k + 1..hi {
                let base = (i - k - 1) * w;
                let lpos = base + band + k - i;
                let l = tail[lpos] / pivot;
                tail[lpos] = l;
                if l != 0.0 {
                    let dst = &mut tail[lpos + 1..lpos + 1 + urow.len()];
                    for (d, u) in dst.iter_mut().zip(urow) {
                        *d -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { n, band, rows })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, band, w) = (self.n, self.band, 2 * self.band + 1);
        for i in 0..n {
            let lo = i.saturating_sub(band);
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.rows[i * w + band + j - i] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + band + 1).min(n);
            let mut acc = x[i];
            for j in i + 1..hi {
                acc -= self.rows[i * w + band + j - i] * x[j];
            }
            x[i] = acc / self.rows[i * w + band];
        }
    }
}

/// Zero-fill incomplete LU factorization on the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag_pos = vec![usize::MAX; n];
        for (i, d) in diag_pos.iter_mut().enumerate() {
            let (c, _) = lu.row(i);
            *d = lu.row_ptr[i]
                + c.binary_search(&i).map_err(|_| {
                    StarkError::InnerSolve(format!("row {i} has no diagonal entry"))
                })?;
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for k in start..end {
                let j = lu.cols[k];
                if j >= i {
                    break;
                }
                let pivot = lu.vals[diag_pos[j]];
                let lij = lu.vals[k] / pivot;
                lu.vals[k] = lij;
                for q in diag_pos[j] + 1..lu.row_ptr[j + 1] {
                    let p = pos[lu.cols[q]];
                    if p != usize::MAX {
                        lu.vals[p] -= lij * lu.vals[q];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            if lu.vals[diag_pos[i]] == 0.0 {
                return Err(StarkError::InnerSolve(format!("zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag_pos })
    }

    /// Applies `(LU)^{-1}` in place.
    pub fn apply_in_place(&self, x: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = x[i];
            for k in lu.row_ptr[i]..self.diag_pos[i] {
                acc -= lu.vals[k] * x[lu.cols[k]];
            }
            x[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = x[i];
            for k in self.diag_pos[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.vals[k] * x[lu.cols[k]];
            }
            x[i] = acc / lu.vals[self.diag_pos[i]];
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
