//! Dense linear algebra: row-major matrices, top-k symmetric
//! eigendecomposition by subspace iteration, and truncated SVD through the
//! smaller Gram matrix.
//!
//! Matrix products are split by output row, so results are bit-identical for
//! any number of threads.

use std::io::Write;

use rand::Rng as _;

use crate::{numfmt, par, rng, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;
const START_SEED: u64 = 0x5eed_0f_1a_c0de;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::arg(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::arg("ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        let width = other.cols;
        par::for_each_row_mut(&mut out.data, width, |i, row| {
            for (l, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, &b) in row.iter_mut().zip(other.row(l)) {
                        *o += a * b;
                    }
                }
            }
        });
        out
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_t shape mismatch");
        let mut out = Self::zeros(self.rows, other.rows);
        par::for_each_row_mut(&mut out.data, other.rows, |i, row| {
            let a = self.row(i);
            for (j, o) in row.iter_mut().enumerate() {
                *o = dot(a, other.row(j));
            }
        });
        out
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        self.transpose().matmul(other)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// CSV dump: optional row labels, a header of column labels, 12
    /// significant digits.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        row_labels: Option<&[String]>,
        col_labels: &[String],
    ) -> std::io::Result<()> {
        let mut header = Vec::with_capacity(self.cols + 1);
        if row_labels.is_some() {
            header.push("doc_id".to_string());
        }
        header.extend(col_labels.iter().cloned());
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.rows {
            let mut line = String::new();
            if let Some(labels) = row_labels {
                line.push_str(&labels[i]);
                line.push(',');
            }
            let cells: Vec<String> = self.row(i).iter().map(|&x| numfmt::g12(x)).collect();
            line.push_str(&cells.join(","));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Column-oriented view used by the iterative solvers: `cols` vectors of
/// length `len`, stored contiguously.
#[derive(Debug, Clone)]
struct Block {
    len: usize,
    vecs: Vec<Vec<f64>>,
}

impl Block {
    fn from_matrix_columns(m: &DenseMatrix) -> Self {
        Block {
            len: m.rows,
            vecs: (0..m.cols).map(|j| m.column(j)).collect(),
        }
    }

    fn to_matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.len, self.vecs.len());
        for (j, v) in self.vecs.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    /// `a * self`, one output column per block vector.
    fn apply(&self, a: &DenseMatrix) -> Block {
        let q = self.to_matrix();
        Block::from_matrix_columns(&a.matmul(&q))
    }

    /// Right-multiplies by a small `b x b` matrix.
    fn rotate(&self, w: &DenseMatrix) -> Block {
        let vecs = (0..w.cols)
            .map(|j| {
                let mut out = vec![0.0; self.len];
                for (l, v) in self.vecs.iter().enumerate() {
                    let c = w.get(l, j);
                    if c != 0.0 {
                        for (o, x) in out.iter_mut().zip(v) {
                            *o += c * x;
                        }
                    }
                }
                out
            })
            .collect();
        Block { len: self.len, vecs }
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns that
/// vanish (rank deficiency) are replaced by the first coordinate vector that
/// is sufficiently independent of the columns already accepted.
fn orthonormalize(block: &mut Block) {
    let len = block.len;
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(block.vecs.len());
    for v in block.vecs.drain(..) {
        let scale = norm(&v);
        let mut w = v;
        for _ in 0..2 {
            for q in &accepted {
                let c = dot(&w, q);
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let mut n = norm(&w);
        if !(n > 1e-12 * scale.max(f64::MIN_POSITIVE)) || scale == 0.0 {
            // Replace with the coordinate direction least covered by the
            // accepted vectors; its residual norm is at least 1/sqrt(len).
            let (e, en) = (0..len)
                .map(|i| {
                    let mut e = vec![0.0; len];
                    e[i] = 1.0;
                    for _ in 0..2 {
                        for q in &accepted {
                            let c = dot(&e, q);
                            for (x, y) in e.iter_mut().zip(q) {
                                *x -= c * y;
                            }
                        }
                    }
                    let en = norm(&e);
                    (e, en)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty block");
            assert!(en > 1e-8, "cannot complete an orthonormal basis");
            w = e;
            n = en;
        }
        for x in &mut w {
            *x /= n;
        }
        accepted.push(w);
    }
    block.vecs = accepted;
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix. Returns
/// eigenvalues (unsorted) and the matrix whose columns are eigenvectors.
pub(crate) fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let total: f64 = m.as_slice().iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| m.get(i, i)).collect(), v)
}

/// Flips `v` (and `partner`, if given) so the largest-magnitude entry of `v`
/// is positive. The first maximal entry wins ties.
fn fix_sign(v: &mut [f64], partner: Option<&mut [f64]>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
        if let Some(p) = partner {
            p.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Top-k eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Descending.
    pub values: Vec<f64>,
    /// `n x k`, one eigenvector per column.
    pub vectors: DenseMatrix,
    pub iterations: usize,
    /// Largest `‖A v − λ v‖` over the returned pairs.
    pub residual: f64,
}

/// Top-k eigenpairs of a symmetric matrix by subspace iteration with
/// Rayleigh-Ritz projection.
///
/// The iteration tracks the dominant (largest-magnitude) invariant subspace,
/// so for positive semidefinite input (Gram and covariance matrices) the
/// result is the k algebraically largest pairs. Eigenvectors are normalized
/// so their largest-magnitude entry is positive.
pub fn sym_eigen_topk(a: &DenseMatrix, k: usize, tol: f64, max_iter: usize) -> Result<EigenResult> {
    let n = a.rows;
    if a.rows != a.cols {
        return Err(Error::arg(format!("expected a square matrix, got {}x{}", a.rows, a.cols)));
    }
    if k == 0 || k > n {
        return Err(Error::arg(format!("k must be in 1..={n}, got {k}")));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if !a.is_symmetric(1e-10) {
        return Err(Error::arg("matrix is not symmetric"));
    }

    let width = n.min(k + k.max(10));
    let mut q = if width == n {
        Block::from_matrix_columns(&DenseMatrix::identity(n))
    } else {
        let mut r = rng::seeded(START_SEED);
        Block {
            len: n,
            vecs: (0..width)
                .map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect())
                .collect(),
        }
    };
    orthonormalize(&mut q);
    let mut aq = q.apply(a);

    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        if iter > 1 {
            q = aq;
            orthonormalize(&mut q);
            aq = q.apply(a);
        }
        // Rayleigh-Ritz on span(q)
        let mut proj = DenseMatrix::zeros(width, width);
        for i in 0..width {
            for j in 0..=i {
                let v = 0.5 * (dot(&q.vecs[i], &aq.vecs[j]) + dot(&q.vecs[j], &aq.vecs[i]));
                proj.set(i, j, v);
                proj.set(j, i, v);
            }
        }
        let (vals, w) = jacobi_eigen(&proj);
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]).then(x.cmp(&y)));
        let mut w_sorted = DenseMatrix::zeros(width, width);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..width {
                w_sorted.set(r, dst, w.get(r, src));
            }
        }
        let values: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        q = q.rotate(&w_sorted);
        aq = aq.rotate(&w_sorted);

        let scale = values.iter().take(k).fold(0.0f64, |m, v| m.max(v.abs()));
        residual = (0..k)
            .map(|i| {
                let r: f64 = aq.vecs[i]
                    .iter()
                    .zip(&q.vecs[i])
                    .map(|(x, y)| (x - values[i] * y).powi(2))
                    .sum();
                r.sqrt()
            })
            .fold(0.0, f64::max);
        if residual <= tol * scale || scale == 0.0 {
            let mut vecs: Vec<Vec<f64>> = q.vecs.into_iter().take(k).collect();
            for v in &mut vecs {
                fix_sign(v, None);
            }
            let vectors = Block { len: n, vecs }.to_matrix();
            return Ok(EigenResult {
                values: values.into_iter().take(k).collect(),
                vectors,
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `n x k`.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    /// `m x k`.
    pub v: DenseMatrix,
}

impl SvdResult {
    /// `U diag(S) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        us.matmul_t(&self.v)
    }
}

/// Top-k singular triplets of `a`.
///
/// The eigenproblem is solved on whichever of `AᵀA` and `AAᵀ` is smaller;
/// the other factor follows by one multiplication and is re-orthonormalized.
/// Each `V` column has its largest-magnitude entry positive.
pub fn truncated_svd(a: &DenseMatrix, k: usize, tol: f64, max_iter: usize) -> Result<SvdResult> {
    let (n, m) = a.shape();
    let limit = n.min(m);
    if k == 0 || k > limit {
        return Err(Error::arg(format!("k must be in 1..={limit}, got {k}")));
    }
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let wide = m > n;
    let gram = if wide { a.matmul_t(a) } else { a.t_matmul(a) };
    let eig = sym_eigen_topk(&gram, k, tol, max_iter)?;
    // `near` spans the Gram side; `far` = A (or Aᵀ) * near / sigma.
    let mut near = Block::from_matrix_columns(&eig.vectors);
    let mut far_raw = if wide {
        Block::from_matrix_columns(&a.t_matmul(&eig.vectors))
    } else {
        Block::from_matrix_columns(&a.matmul(&eig.vectors))
    };
    // |A v| resolves small singular values to eps * |A|; sqrt of a Gram
    // eigenvalue only to sqrt(eps) * |A|.
    let norms: Vec<f64> = far_raw.vecs.iter().map(|v| norm(v)).collect();
    let top = norms.iter().cloned().fold(0.0f64, f64::max);
    let floor = top * 1e-12 * (n.max(m) as f64);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    near.vecs = order.iter().map(|&i| std::mem::take(&mut near.vecs[i])).collect();
    far_raw.vecs = order.iter().map(|&i| std::mem::take(&mut far_raw.vecs[i])).collect();
    let s: Vec<f64> = order
        .iter()
        .map(|&i| if norms[i] > floor { norms[i] } else { 0.0 })
        .collect();
    let far_len = far_raw.len;
    let mut far = Block {
        len: far_len,
        vecs: far_raw
            .vecs
            .into_iter()
            .zip(&s)
            .map(|(v, &sig)| {
                if sig > floor {
                    v.into_iter().map(|x| x / sig).collect()
                } else {
                    vec![0.0; far_len]
                }
            })
            .collect(),
    };
    orthonormalize(&mut far);

    let (mut u, mut v) = if wide { (near, far) } else { (far, near) };
    for (uc, vc) in u.vecs.iter_mut().zip(v.vecs.iter_mut()) {
        fix_sign(vc, Some(uc));
    }
    Ok(SvdResult {
        u: u.to_matrix(),
        s,
        v: v.to_matrix(),
    })
}
