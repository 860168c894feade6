//! Dense linear algebra for small symmetric problems.
//!
//! Everything here is row-major `f64` and sized for desk-scale dimensions
//! (tens to a few hundred). The symmetric eigensolver is the exact reference
//! the rest of the crate measures against, so it favours accuracy over speed:
//! Householder tridiagonalization followed by implicit QL with Wilkinson-style
//! shifts, accumulating the orthogonal transforms.

use std::ops::{Index, IndexMut};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {asymmetry:e}")]
    NotSymmetric { row: usize, col: usize, asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigensolver did not converge after {iterations} iterations (off-diagonal residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("columns are rank deficient at column {column}")]
    RankDeficient { column: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("query budget of {budget} matrix-vector products exhausted")]
    BudgetExhausted { budget: usize },
    #[error("operator of dimension {expected} applied to a vector of length {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Something that can be applied to a vector. Krylov methods only ever see
/// the matrix through this trait, which lets a caller meter the products.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError>;

    /// Largest entry magnitude, when the operator is willing to reveal it.
    fn max_abs_hint(&self) -> Option<f64> {
        None
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch { expected: c, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>], rows: usize) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            if col.len() != rows {
                return Err(LinalgError::DimensionMismatch { expected: rows, found: col.len() });
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, found: x.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rectangular sub-block `[r0, r0+nr) x [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix {
        let mut b = Matrix::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                b[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        b
    }

    /// `‖selfᵀ·self − I‖_max`, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.transpose().matmul(self).expect("square gram");
        gram.sub(&Matrix::identity(self.cols)).expect("same shape").max_abs()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense real symmetric matrix of dimension at least one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Validates squareness, finiteness and symmetry to
    /// `1e-12 · max(1, |a_ij|)`.
    pub fn new(m: Matrix) -> Result<Self, LinalgError> {
        if m.rows == 0 || m.cols == 0 {
            return Err(LinalgError::Empty);
        }
        if m.rows != m.cols {
            return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
        }
        let n = m.rows;
        for i in 0..n {
            for j in 0..n {
                if !m[(i, j)].is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = m[(i, j)];
                let asym = (a - m[(j, i)]).abs();
                if asym > 1e-12 * a.abs().max(1.0) {
                    return Err(LinalgError::NotSymmetric { row: i, col: j, asymmetry: asym });
                }
            }
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m + mᵀ)/2`; returns the matrix and the largest
    /// asymmetry that was removed.
    pub fn symmetrized(m: &Matrix) -> Result<(Self, f64), LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
        }
        let n = m.rows;
        let mut out = m.clone();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        Ok((Self::new(out)?, worst))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(Matrix::from_diagonal(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)]).sum()
    }

    /// `A·x`; panics on a length mismatch.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.0.matvec(x).expect("vector length must equal matrix dimension")
    }

    /// `Mᵀ·A·M` for a `d x k` matrix `M`, symmetrized against rounding.
    pub fn congruence(&self, m: &Matrix) -> Result<SymMatrix, LinalgError> {
        let am = self.0.matmul(m)?;
        let projected = m.transpose().matmul(&am)?;
        Ok(SymMatrix::symmetrized(&projected)?.0)
    }
}

impl LinearOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.0.rows
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if x.len() != self.dim() {
            return Err(OperatorError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.mul_vec(x))
    }

    fn max_abs_hint(&self) -> Option<f64> {
        Some(self.max_abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigvals: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigvecs: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn min(&self) -> f64 {
        self.eigvals[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigvals.last().expect("nonempty spectrum")
    }

    /// `V·diag(λ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.map_spectrum(|x| x)
    }

    /// `V·diag(f(λ))·Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.dim();
        let fl: Vec<f64> = self.eigvals.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = fl.iter().enumerate().map(|(k, v)| self.eigvecs[(i, k)] * v * self.eigvecs[(j, k)]).sum();
            }
        }
        out
    }

    /// `V·diag(f(λ))·Vᵀ·z` without forming the matrix.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64, z: &[f64]) -> Vec<f64> {
        let coords = self.eigvecs.matvec_transpose(z).expect("length matches");
        let scaled: Vec<f64> = coords.iter().zip(&self.eigvals).map(|(c, &l)| c * f(l)).collect();
        self.eigvecs.matvec(&scaled).expect("length matches")
    }

    /// `Σ f(λ_j)`.
    pub fn trace_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.eigvals.iter().map(|&l| f(l)).sum()
    }
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = a.dim();
    let mut v = a.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    // tridiagonalize leaves the subdiagonal in e[1..n]; the QL sweep wants e[0..n-1].
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tridiagonal_ql(&mut d, &mut e, &mut v)?;
    Ok(sorted(d, v))
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `offdiag` (`offdiag.len() == diag.len() - 1`).
pub fn sym_tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<EigenDecomposition, LinalgError> {
    let n = diag.len();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    if offdiag.len() + 1 != n {
        return Err(LinalgError::DimensionMismatch { expected: n - 1, found: offdiag.len() });
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut v = Matrix::identity(n);
    tridiagonal_ql(&mut d, &mut e, &mut v)?;
    Ok(sorted(d, v))
}

fn sorted(d: Vec<f64>, v: Matrix) -> EigenDecomposition {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigvals = order.iter().map(|&i| d[i]).collect();
    let mut eigvecs = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            eigvecs[(r, new)] = v[(r, old)];
        }
    }
    EigenDecomposition { eigvals, eigvecs }
}

/// Householder reduction to tridiagonal form (EISPACK tred2 ordering).
/// On exit `v` holds the accumulated orthogonal transform, `d` the diagonal
/// and `e[1..n]` the subdiagonal.
fn tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on a symmetric tridiagonal matrix (EISPACK tql2 ordering).
/// `e[i]` couples rows `i` and `i+1`; `e[n-1]` must be zero. Rotations are
/// accumulated into the columns of `v`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], v: &mut Matrix) -> Result<(), LinalgError> {
    let n = d.len();
    let cap = 64 * n.max(1);
    let mut iterations = 0;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > cap {
                    return Err(LinalgError::NoConvergence { iterations: cap, residual: e[l].abs() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..v.rows() {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Lower-triangular `L` with `L·Lᵀ = S`.
pub fn cholesky(s: &SymMatrix) -> Result<Matrix, LinalgError> {
    let n = s.dim();
    let tol = 1e-12 * s.max_abs();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = s.get(j, j);
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot <= tol {
            return Err(LinalgError::NotPositiveDefinite { pivot: j + 1, value: pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Thin QR of a `d x n` matrix (`n ≤ d`) by modified Gram–Schmidt with one
/// full reorthogonalization pass. `R` has a positive diagonal.
pub fn qr_columns(m: &Matrix) -> Result<(Matrix, Matrix), LinalgError> {
    let (d, n) = (m.rows(), m.cols());
    if n > d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: n });
    }
    let tol = 1e-10 * m.max_abs();
    let mut q_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = Matrix::zeros(n, n);
    for k in 0..n {
        let mut v = m.column(k);
        for _pass in 0..2 {
            for (i, qi) in q_cols.iter().enumerate() {
                let c = dot(qi, &v);
                r[(i, k)] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let norm = norm2(&v);
        if norm <= tol {
            return Err(LinalgError::RankDeficient { column: k + 1 });
        }
        r[(k, k)] = norm;
        v.iter_mut().for_each(|x| *x /= norm);
        q_cols.push(v);
    }
    Ok((Matrix::from_columns(&q_cols, d)?, r))
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`
/// (assumed orthonormal), as a `d x (d - n)` matrix. Candidates are the
/// standard basis vectors, taken greedily by largest remaining component,
/// so an empty `q` yields the identity.
pub fn orthonormal_complement(q: &Matrix) -> Matrix {
    let d = q.rows();
    let mut basis: Vec<Vec<f64>> = (0..q.cols()).map(|j| q.column(j)).collect();
    let mut complement: Vec<Vec<f64>> = Vec::with_capacity(d - q.cols());
    let mut used = vec![false; d];
    while basis.len() < d {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for i in (0..d).filter(|&i| !used[i]) {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            for _pass in 0..2 {
                for b in &basis {
                    let c = dot(b, &v);
                    axpy(-c, b, &mut v);
                }
            }
            let nv = norm2(&v);
            if best.as_ref().is_none_or(|(_, _, bn)| nv > *bn + 1e-12) {
                best = Some((i, v, nv));
            }
        }
        let (i, mut v, nv) = best.expect("complement candidate exists while basis is incomplete");
        used[i] = true;
        v.iter_mut().for_each(|x| *x /= nv);
        basis.push(v.clone());
        complement.push(v);
    }
    Matrix::from_columns(&complement, d).expect("columns have length d")
}

/// Solves `L·X = B` for lower-triangular `L`.
pub fn solve_lower_triangular(l: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    let n = l.rows();
    if l.cols() != n {
        return Err(LinalgError::NotSquare { rows: n, cols: l.cols() });
    }
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: b.rows() });
    }
    let mut x = Matrix::zeros(n, b.cols());
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = b[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Matrix of i.i.d. standard normals, filled row by row.
pub fn sample_gaussian_matrix(rows: usize, cols: usize, rng: RngState) -> Matrix {
    let mut g = rng.generator();
    let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut g)).collect();
    Matrix { rows, cols, data }
}

/// `W = (1/d)·G·Gᵀ` with `G` a `d x d` standard Gaussian matrix.
pub fn sample_wishart(d: usize, rng: RngState) -> SymMatrix {
    sample_wishart_scaled(d, d as f64, rng)
}

/// `(1/normalizer)·G·Gᵀ` with `G` a `dim x dim` standard Gaussian matrix.
pub fn sample_wishart_scaled(dim: usize, normalizer: f64, rng: RngState) -> SymMatrix {
    let g = sample_gaussian_matrix(dim, dim, rng);
    let mut w = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = dot(g.row(i), g.row(j)) / normalizer;
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    SymMatrix(w)
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal absorbed).
pub fn random_orthogonal(d: usize, rng: RngState) -> Matrix {
    let g = sample_gaussian_matrix(d, d, rng);
    let (q, _) = qr_columns(&g).expect("Gaussian matrices have full rank almost surely");
    q
}

/// `Q·diag(eigvals)·Qᵀ` with Haar-random `Q`.
pub fn random_symmetric_with_spectrum(eigvals: &[f64], rng: RngState) -> SymMatrix {
    let d = eigvals.len();
    let q = random_orthogonal(d, rng);
    let mut out = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..d {
                s += q[(i, k)] * eigvals[k] * q[(j, k)];
            }
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    SymMatrix(out)
}
