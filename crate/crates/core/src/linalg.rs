//! Dense column-major matrices and the few factorizations the fitting code needs.
//!
//! Only what is required by the sphere approximants lives here: a blocked
//! Householder QR with explicit thin `Q`, triangular solves/inverse and a
//! `gemm` wrapper over `matrixmultiply`.

use alloc::vec;
use alloc::vec::Vec;

/// Column-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "storage size mismatch");
        Self { rows, cols, data }
    }

    /// Builds a matrix from a generator `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(j)) {
                *o += a * vj;
            }
        }
        out
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|j| dot(self.column(j), v)).collect()
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(1.0, self, false, other, false, 0.0, &mut out);
        out
    }

    /// `selfᵀ · other`.
    pub fn tr_matmul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.cols, other.cols);
        gemm(1.0, self, true, other, false, 0.0, &mut out);
        out
    }

    /// Largest absolute entry of `self − I` (square matrices only).
    pub fn identity_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0_f64;
        for j in 0..self.cols {
            for i in 0..self.rows {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(libm::fabs(self[(i, j)] - target));
            }
        }
        worst
    }

    /// Copy of the leading `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> Matrix {
        assert!(cols <= self.cols);
        Matrix::from_col_major(self.rows, cols, self.data[..self.rows * cols].to_vec())
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `c ← alpha·op(a)·op(b) + beta·c` on whole matrices.
pub fn gemm(alpha: f64, a: &Matrix, ta: bool, b: &Matrix, tb: bool, beta: f64, c: &mut Matrix) {
    let (m, k) = if ta { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (kb, n) = if tb { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.rows, c.cols), (m, n), "output shape mismatch");
    let strides = |mat: &Matrix, t: bool| -> (isize, isize) {
        if t {
            (mat.rows as isize, 1)
        } else {
            (1, mat.rows as isize)
        }
    };
    let (rsa, csa) = strides(a, ta);
    let (rsb, csb) = strides(b, tb);
    raw_gemm(
        m,
        k,
        n,
        alpha,
        a.data.as_ptr(),
        rsa,
        csa,
        b.data.as_ptr(),
        rsb,
        csb,
        beta,
        c.data.as_mut_ptr(),
        1,
        c.rows as isize,
    );
}

#[allow(clippy::too_many_arguments)]
fn raw_gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    rsa: isize,
    csa: isize,
    b: *const f64,
    rsb: isize,
    csb: isize,
    beta: f64,
    c: *mut f64,
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: callers pass pointers into live buffers whose extents cover the
    // strided m×k, k×n and m×n views; `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// Thin Householder QR factorization `A = Q·R` of an `m × n` matrix with `m ≥ n`.
#[derive(Clone, Debug)]
pub struct ThinQr {
    /// `m × n`, orthonormal columns.
    pub q: Matrix,
    /// `n × n`, upper triangular.
    pub r: Matrix,
}

const PANEL: usize = 48;

/// Blocked Householder QR of an `m × n` matrix with `m ≥ n`, kept in
/// factored form. Panels are factored column by column and the trailing
/// matrix is updated with the compact WY form `I − V·T·Vᵀ`.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    work: Matrix,
    // (start column, V block, T block) for each panel
    blocks: Vec<(usize, Matrix, Matrix)>,
}

impl HouseholderQr {
    pub fn factor(a: &Matrix) -> Self {
        let (m, n) = (a.rows, a.cols);
        assert!(m >= n, "QR needs rows >= cols");
        let mut work = a.clone();
        let mut taus = vec![0.0; n];
        let mut blocks = Vec::new();
        let mut j0 = 0;
        while j0 < n {
            let jb = PANEL.min(n - j0);
            for (j, slot) in taus.iter_mut().enumerate().skip(j0).take(jb) {
                let tau = householder_column(&mut work, j);
                *slot = tau;
                if tau != 0.0 {
                    apply_reflector(&mut work, j, tau, j + 1, j0 + jb);
                }
            }
            let v = panel_vectors(&work, j0, jb);
            let t = panel_t(&v, &taus[j0..j0 + jb]);
            if j0 + jb < n {
                apply_block_transposed(&mut work, j0, &v, &t, j0 + jb, n);
            }
            blocks.push((j0, v, t));
            j0 += jb;
        }
        Self { work, blocks }
    }

    /// Upper-triangular factor, `n × n`.
    pub fn r(&self) -> Matrix {
        let n = self.work.cols;
        let mut r = Matrix::zeros(n, n);
        for j in 0..n {
            r.column_mut(j)[..=j].copy_from_slice(&self.work.column(j)[..=j]);
        }
        r
    }

    /// Explicit thin `Q`, `m × n` with orthonormal columns.
    pub fn thin_q(&self) -> Matrix {
        let (m, n) = (self.work.rows, self.work.cols);
        let mut q = Matrix::zeros(m, n);
        for j in 0..n {
            q[(j, j)] = 1.0;
        }
        for (start, v, t) in self.blocks.iter().rev() {
            apply_block(&mut q, *start, *start, v, t);
        }
        q
    }

    /// `Q·y` for `y` of length `n` (result has length `m`).
    pub fn q_mul(&self, y: &[f64]) -> Vec<f64> {
        let (m, n) = (self.work.rows, self.work.cols);
        assert_eq!(y.len(), n);
        let mut q = Matrix::zeros(m, 1);
        q.column_mut(0)[..n].copy_from_slice(y);
        for (start, v, t) in self.blocks.iter().rev() {
            apply_block(&mut q, *start, 0, v, t);
        }
        q.data
    }

    /// First `n` entries of `Qᵀ·b` for `b` of length `m`.
    pub fn qt_mul(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = (self.work.rows, self.work.cols);
        assert_eq!(b.len(), m);
        let mut c = Matrix::from_col_major(m, 1, b.to_vec());
        for (start, v, t) in &self.blocks {
            apply_block_transposed_cols(&mut c, *start, v, t);
        }
        c.data.truncate(n);
        c.data
    }
}

/// Thin QR factorization `A = Q·R` of an `m × n` matrix with `m ≥ n`.
pub fn thin_qr(a: &Matrix) -> ThinQr {
    let f = HouseholderQr::factor(a);
    ThinQr {
        q: f.thin_q(),
        r: f.r(),
    }
}

/// Overwrites column `j` (rows `j..`) with `beta` on the diagonal and the
/// reflector tail below it; returns `tau`.
fn householder_column(work: &mut Matrix, j: usize) -> f64 {
    let m = work.rows;
    let col = &mut work.column_mut(j)[j..m];
    let alpha = col[0];
    let tail_norm2 = dot(&col[1..], &col[1..]);
    if tail_norm2 == 0.0 {
        return 0.0;
    }
    let norm = libm::sqrt(alpha * alpha + tail_norm2);
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for x in col[1..].iter_mut() {
        *x *= scale;
    }
    col[0] = beta;
    tau
}

/// Applies `H_j = I − tau·v·vᵀ` to columns `from..to` of `work`.
fn apply_reflector(work: &mut Matrix, j: usize, tau: f64, from: usize, to: usize) {
    let m = work.rows;
    let (head, tail) = work.data.split_at_mut(from * m);
    let v_tail = &head[j * m + j + 1..(j + 1) * m];
    for c in 0..(to - from) {
        let col = &mut tail[c * m + j..(c + 1) * m];
        let w = tau * (col[0] + dot(v_tail, &col[1..]));
        col[0] -= w;
        axpy(-w, v_tail, &mut col[1..]);
    }
}

/// Explicit `(m − j0) × jb` reflector block with unit diagonal.
fn panel_vectors(work: &Matrix, j0: usize, jb: usize) -> Matrix {
    let rows = work.rows - j0;
    let mut v = Matrix::zeros(rows, jb);
    for c in 0..jb {
        let j = j0 + c;
        let dst = v.column_mut(c);
        dst[c] = 1.0;
        dst[c + 1..].copy_from_slice(&work.column(j)[j + 1..]);
    }
    v
}

/// Upper-triangular `T` with `H_1⋯H_k = I − V·T·Vᵀ`.
fn panel_t(v: &Matrix, taus: &[f64]) -> Matrix {
    let k = taus.len();
    let mut t = Matrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = taus[i];
        if i == 0 || taus[i] == 0.0 {
            continue;
        }
        let vi = v.column(i);
        let z: Vec<f64> = (0..i).map(|p| dot(&v.column(p)[i..], &vi[i..])).collect();
        for r in 0..i {
            let mut s = 0.0;
            for p in r..i {
                s += t[(r, p)] * z[p];
            }
            t[(r, i)] = -taus[i] * s;
        }
    }
    t
}

/// `C ← (I − V·T·Vᵀ)ᵀ·C` on rows `j0..` and columns `from..to` of `work`.
fn apply_block_transposed(work: &mut Matrix, j0: usize, v: &Matrix, t: &Matrix, from: usize, to: usize) {
    let m = work.rows;
    let rows = m - j0;
    let nc = to - from;
    let jb = v.cols;
    let c_ptr = unsafe { work.data.as_mut_ptr().add(from * m + j0) };
    // W = Vᵀ C
    let mut w = Matrix::zeros(jb, nc);
    raw_gemm(jb, rows, nc, 1.0, v.data.as_ptr(), rows as isize, 1, c_ptr, 1, m as isize, 0.0, w.data.as_mut_ptr(), 1, jb as isize);
    // W ← Tᵀ W
    let tw = t.transpose().matmul(&w);
    // C ← C − V W
    raw_gemm(rows, jb, nc, -1.0, v.data.as_ptr(), 1, rows as isize, tw.data.as_ptr(), 1, jb as isize, 1.0, c_ptr, 1, m as isize);
}

/// `Q[j0.., c0..] ← (I − V·T·Vᵀ)·Q[j0.., c0..]`.
fn apply_block(q: &mut Matrix, j0: usize, c0: usize, v: &Matrix, t: &Matrix) {
    let m = q.rows;
    let rows = m - j0;
    let nc = q.cols - c0;
    let jb = v.cols;
    let c_ptr = unsafe { q.data.as_mut_ptr().add(c0 * m + j0) };
    let mut w = Matrix::zeros(jb, nc);
    raw_gemm(jb, rows, nc, 1.0, v.data.as_ptr(), rows as isize, 1, c_ptr, 1, m as isize, 0.0, w.data.as_mut_ptr(), 1, jb as isize);
    let tw = t.matmul(&w);
    raw_gemm(rows, jb, nc, -1.0, v.data.as_ptr(), 1, rows as isize, tw.data.as_ptr(), 1, jb as isize, 1.0, c_ptr, 1, m as isize);
}

/// `C ← (I − V·T·Vᵀ)ᵀ·C` on rows `j0..` of every column of `c`.
fn apply_block_transposed_cols(c: &mut Matrix, j0: usize, v: &Matrix, t: &Matrix) {
    let cols = c.cols;
    apply_block_transposed(c, j0, v, t, 0, cols);
}

/// Solves `R·x = b` for upper-triangular `R`.
pub fn solve_upper(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.cols;
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for j in (0..n).rev() {
        x[j] /= r[(j, j)];
        let xj = x[j];
        axpy(-xj, &r.column(j)[..j], &mut x[..j]);
    }
    x
}

/// Solves `Rᵀ·x = b` for upper-triangular `R`.
pub fn solve_upper_transposed(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.cols;
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for j in 0..n {
        let s = dot(&r.column(j)[..j], &x[..j]);
        x[j] = (x[j] - s) / r[(j, j)];
    }
    x
}

/// Inverse of an upper-triangular matrix (itself upper triangular).
pub fn invert_upper(r: &Matrix) -> Matrix {
    let n = r.cols;
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; j + 1];
        e[j] = 1.0;
        for i in (0..=j).rev() {
            e[i] /= r[(i, i)];
            let ei = e[i];
            axpy(-ei, &r.column(i)[..i], &mut e[..i]);
        }
        inv.column_mut(j)[..=j].copy_from_slice(&e);
    }
    inv
}
