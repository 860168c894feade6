//! Krylov-subspace matrix-function products.
//!
//! After `m` steps every method here returns a vector of the form
//! `Q(A)·z` with `deg Q ≤ m - 1` (Lanczos) or exactly `deg p` products
//! (explicit Chebyshev polynomials), and each reports the number of
//! operator applications it spent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    axpy, dot, norm2, sym_eigen, sym_tridiagonal_eigen, EigenDecomposition, LinalgError, LinearOperator, Matrix,
    OperatorError, SymMatrix,
};
use crate::poly::ChebPoly;

/// Residual norm, relative to the operator scale, at which Lanczos stops.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-12;

/// Relative residual below which a block-Krylov column is deflated.
pub const DEFLATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("starting vector or block is zero")]
    ZeroStart,
    #[error("{steps} steps requested for dimension {dim} (block size {block})")]
    InvalidSteps { steps: usize, dim: usize, block: usize },
    #[error("Ritz value {value:e} is not positive, but {function} needs a positive spectrum")]
    NonPositiveRitz { value: f64, function: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Scalar functions that can be lifted to symmetric matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFunction {
    Inv,
    InvSqrt,
    /// `x^{-p}` for `p > 0`.
    InvPower(f64),
    Exp,
    Identity,
    Monomial(u32),
}

impl MatrixFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MatrixFunction::Inv => 1.0 / x,
            MatrixFunction::InvSqrt => 1.0 / x.sqrt(),
            MatrixFunction::InvPower(p) => x.powf(-p),
            MatrixFunction::Exp => x.exp(),
            MatrixFunction::Identity => x,
            MatrixFunction::Monomial(s) => x.powi(s as i32),
        }
    }

    pub fn needs_positive_spectrum(&self) -> bool {
        matches!(self, MatrixFunction::Inv | MatrixFunction::InvSqrt | MatrixFunction::InvPower(_))
    }

    pub fn name(&self) -> String {
        match self {
            MatrixFunction::Inv => "inv".into(),
            MatrixFunction::InvSqrt => "inv_sqrt".into(),
            MatrixFunction::InvPower(p) => format!("inv_power({p})"),
            MatrixFunction::Exp => "exp".into(),
            MatrixFunction::Identity => "identity".into(),
            MatrixFunction::Monomial(s) => format!("monomial({s})"),
        }
    }

    /// Errors if `f` needs a positive spectrum and `eig` is not positive.
    pub fn check_spectrum(&self, eig: &EigenDecomposition) -> Result<(), KrylovError> {
        if self.needs_positive_spectrum() && eig.min() <= 0.0 {
            return Err(KrylovError::NonPositiveRitz { value: eig.min(), function: self.name() });
        }
        Ok(())
    }
}

/// `f(A)·z` (or a polynomial stand-in) and the number of products spent.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionAction {
    pub vector: Vec<f64>,
    pub mvp_count: usize,
}

/// `A·Q = Q·T + r·e_mᵀ` with `Q` orthonormal and `T` tridiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosFactorization {
    /// Columns `q_1..q_m`.
    pub basis: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub next_residual_norm: f64,
    /// `r = A·q_m - α_m·q_m - β_{m-1}·q_{m-1}` after reorthogonalization.
    pub next_residual: Vec<f64>,
    pub requested_steps: usize,
    /// Set when the residual fell below the breakdown tolerance, i.e. the
    /// Krylov space became invariant. If this happened before the last
    /// requested step, `steps() < requested_steps`.
    pub breakdown: bool,
    pub mvp_count: usize,
}

impl LanczosFactorization {
    /// Realized number of steps.
    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn basis_matrix(&self) -> Matrix {
        let d = self.basis[0].len();
        Matrix::from_columns(&self.basis, d).expect("basis columns share a length")
    }

    pub fn tridiagonal(&self) -> Matrix {
        let m = self.steps();
        let mut t = Matrix::from_diagonal(&self.alpha);
        for i in 0..m.saturating_sub(1) {
            t[(i, i + 1)] = self.beta[i];
            t[(i + 1, i)] = self.beta[i];
        }
        t
    }

    pub fn ritz(&self) -> Result<EigenDecomposition, LinalgError> {
        sym_tridiagonal_eigen(&self.alpha, &self.beta)
    }
}

/// `m` steps of symmetric Lanczos from `z`, with full reorthogonalization.
pub fn lanczos<O: LinearOperator + ?Sized>(op: &O, z: &[f64], m: usize) -> Result<LanczosFactorization, KrylovError> {
    let d = op.dim();
    if z.len() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: z.len() }.into());
    }
    if m == 0 || m > d {
        return Err(KrylovError::InvalidSteps { steps: m, dim: d, block: 1 });
    }
    let znorm = norm2(z);
    if znorm == 0.0 || !znorm.is_finite() {
        return Err(KrylovError::ZeroStart);
    }

    let hint = op.max_abs_hint();
    let mut scale = hint.unwrap_or(0.0);
    let mut basis: Vec<Vec<f64>> = vec![z.iter().map(|x| x / znorm).collect()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut mvp_count = 0;

    loop {
        let j = basis.len() - 1;
        let mut w = op.apply(&basis[j])?;
        mvp_count += 1;
        if hint.is_none() {
            scale = scale.max(w.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
        }
        let mut a = dot(&basis[j], &w);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        for _pass in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
                if i == j {
                    a += c;
                }
            }
        }
        alpha.push(a);
        let b = norm2(&w);
        let invariant = b <= BREAKDOWN_TOLERANCE * scale;
        if j + 1 == m || invariant {
            return Ok(LanczosFactorization {
                basis,
                alpha,
                beta,
                next_residual_norm: b,
                next_residual: w,
                requested_steps: m,
                breakdown: invariant,
                mvp_count,
            });
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Lanczos approximation `‖z‖·Q·f(T)·e_1` of `f(A)·z`.
pub fn fa_times_vec_lanczos<O: LinearOperator + ?Sized>(
    op: &O,
    z: &[f64],
    m: usize,
    f: MatrixFunction,
) -> Result<FunctionAction, KrylovError> {
    let fact = lanczos(op, z, m)?;
    let ritz = fact.ritz()?;
    f.check_spectrum(&ritz)?;
    let k = fact.steps();
    // f(T)·e_1 = S·f(Λ)·Sᵀ·e_1
    let first_row: Vec<f64> = (0..k).map(|i| ritz.eigvecs[(0, i)]).collect();
    let weighted: Vec<f64> = first_row.iter().zip(&ritz.eigvals).map(|(s, &l)| s * f.eval(l)).collect();
    let coeffs = ritz.eigvecs.matvec(&weighted)?;
    let znorm = norm2(z);
    let mut vector = vec![0.0; z.len()];
    for (q, c) in fact.basis.iter().zip(&coeffs) {
        axpy(znorm * c, q, &mut vector);
    }
    Ok(FunctionAction { vector, mvp_count: fact.mvp_count })
}

/// `p(A)·z` by the matrix Clenshaw recurrence on
/// `u(A) = (2A - (a+b)I)/(b - a)`. Uses exactly `deg p` products.
pub fn poly_times_vec<O: LinearOperator + ?Sized>(
    op: &O,
    p: &ChebPoly,
    z: &[f64],
) -> Result<FunctionAction, KrylovError> {
    let d = op.dim();
    if z.len() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: z.len() }.into());
    }
    let (a, b) = p.interval();
    let c = p.coeffs();
    let deg = p.degree();
    let mut mvp_count = 0;
    let mut apply_u = |v: &[f64]| -> Result<Vec<f64>, KrylovError> {
        let av = op.apply(v)?;
        mvp_count += 1;
        Ok(av.iter().zip(v).map(|(x, y)| (2.0 * x - (a + b) * y) / (b - a)).collect())
    };
    if deg == 0 {
        return Ok(FunctionAction { vector: z.iter().map(|x| c[0] * x).collect(), mvp_count: 0 });
    }
    // b_{k} = c_k z + 2u(A) b_{k+1} - b_{k+2}; starting at k = deg needs no product.
    let mut b1: Vec<f64> = z.iter().map(|x| c[deg] * x).collect();
    let mut b2 = vec![0.0; d];
    for k in (1..deg).rev() {
        let ub1 = apply_u(&b1)?;
        let b0: Vec<f64> = (0..d).map(|i| c[k] * z[i] + 2.0 * ub1[i] - b2[i]).collect();
        b2 = std::mem::replace(&mut b1, b0);
    }
    let ub1 = apply_u(&b1)?;
    let vector = (0..d).map(|i| c[0] * z[i] + ub1[i] - b2[i]).collect();
    Ok(FunctionAction { vector, mvp_count })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deflation {
    /// Zero-based block step at which the column vanished.
    pub step: usize,
    /// Column index within that step's block.
    pub column: usize,
}

/// Orthonormal basis of `span{V, AV, …, A^{m-1}V}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKrylovBasis {
    pub basis: Matrix,
    pub block_size: usize,
    pub requested_steps: usize,
    /// Steps that contributed at least one new direction.
    pub steps: usize,
    pub deflations: Vec<Deflation>,
    pub mvp_count: usize,
}

impl BlockKrylovBasis {
    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// `Q·f(QᵀAQ)·QᵀV`, the Rayleigh–Ritz approximation of `f(A)·V`.
    pub fn project_function(&self, a: &SymMatrix, v: &Matrix, f: MatrixFunction) -> Result<Matrix, KrylovError> {
        let h = a.congruence(&self.basis)?;
        let eig = sym_eigen(&h)?;
        f.check_spectrum(&eig)?;
        let fh = eig.map_spectrum(|x| f.eval(x));
        let coords = self.basis.transpose().matmul(v)?;
        Ok(self.basis.matmul(&fh.matmul(&coords)?)?)
    }
}

/// Block Krylov basis with two-pass block Gram–Schmidt. Columns whose
/// residual falls below `1e-10` of their pre-orthogonalization norm are
/// deflated and logged; the iteration stops once a whole block deflates.
pub fn block_krylov_basis<O: LinearOperator + ?Sized>(
    op: &O,
    v: &Matrix,
    m: usize,
) -> Result<BlockKrylovBasis, KrylovError> {
    let d = op.dim();
    let b = v.cols();
    if v.rows() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: v.rows() }.into());
    }
    if m == 0 || b == 0 || m * b > d {
        return Err(KrylovError::InvalidSteps { steps: m, dim: d, block: b });
    }
    if v.max_abs() == 0.0 {
        return Err(KrylovError::ZeroStart);
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m * b);
    let mut deflations = Vec::new();
    let mut mvp_count = 0;
    let mut steps = 0;
    let mut block: Vec<Vec<f64>> = (0..b).map(|j| v.column(j)).collect();

    for step in 0..m {
        if step > 0 {
            block = block.iter().map(|q| op.apply(q)).collect::<Result<_, _>>()?;
            mvp_count += block.len();
        }
        let mut added = Vec::new();
        for (column, mut w) in block.into_iter().enumerate() {
            let before = norm2(&w);
            for _pass in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let after = norm2(&w);
            if before == 0.0 || after <= DEFLATION_TOLERANCE * before || basis.len() == d {
                deflations.push(Deflation { step, column });
                continue;
            }
            w.iter_mut().for_each(|x| *x /= after);
            basis.push(w.clone());
            added.push(w);
        }
        if added.is_empty() {
            break;
        }
        steps += 1;
        block = added;
    }

    Ok(BlockKrylovBasis {
        basis: Matrix::from_columns(&basis, d)?,
        block_size: b,
        requested_steps: m,
        steps,
        deflations,
        mvp_count,
    })
}
