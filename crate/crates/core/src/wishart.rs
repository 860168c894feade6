//! Monte-Carlo laboratory for Wishart matrices `W = (1/d)·G·Gᵀ`: posterior
//! structure after matrix-vector queries, extreme-eigenvalue laws,
//! inverse-power traces, and a metered query game.
//!
//! Trial `t` of every experiment draws from `rng.child(t)` (or a labelled
//! fork of it), so results are independent of thread scheduling.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krylov::{fa_times_vec_lanczos, KrylovError, MatrixFunction};
use crate::linalg::{
    cholesky, orthonormal_complement, qr_columns, sample_wishart, sample_wishart_scaled, solve_lower_triangular,
    sym_eigen, LinalgError, LinearOperator, Matrix, OperatorError, SymMatrix,
};
use crate::rng::RngState;
use crate::stats::{ks_two_sample, quantile_sorted, KsResult};
use crate::trace::ProbeKind;

/// Reference constant for the `λ_max` tail: the bulk edge of `(1/d)·G·Gᵀ`.
pub const LAMBDA_MAX_EDGE: f64 = 4.0;
/// Significance level of the distributional tests.
pub const KS_ALPHA: f64 = 0.01;
/// Eigenvalues below this make a draw numerically singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;
/// Relative tolerance for checking recorded responses against `W`.
pub const RESPONSE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WishartError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transcript has {queries} queries but {responses} responses")]
    TranscriptLength { queries: usize, responses: usize },
    #[error("{count} queries in dimension {dim}: at most dim - 1 are allowed")]
    TooManyQueries { count: usize, dim: usize },
    #[error("query {index} has length {found}, expected {expected}")]
    QueryLength { index: usize, expected: usize, found: usize },
    #[error("queries are linearly dependent at query {index}")]
    DependentQueries { index: usize },
    #[error("revealed block is not numerically positive definite (pivot {pivot} = {value:e})")]
    IllConditioned { pivot: usize, value: f64 },
    #[error("response {index} differs from W·v by {residual:e}")]
    InconsistentResponse { index: usize, residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn invalid(msg: impl Into<String>) -> WishartError {
    WishartError::InvalidParameter(msg.into())
}

/// Queries `v_1..v_n` and responses `w_i = W·v_i`, `n < d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTranscript {
    dim: usize,
    queries: Vec<Vec<f64>>,
    responses: Vec<Vec<f64>>,
}

impl QueryTranscript {
    pub fn new(dim: usize, queries: Vec<Vec<f64>>, responses: Vec<Vec<f64>>) -> Result<Self, WishartError> {
        if queries.len() != responses.len() {
            return Err(WishartError::TranscriptLength { queries: queries.len(), responses: responses.len() });
        }
        if queries.len() >= dim {
            return Err(WishartError::TooManyQueries { count: queries.len(), dim });
        }
        for (index, v) in queries.iter().chain(&responses).enumerate() {
            if v.len() != dim {
                return Err(WishartError::QueryLength { index: index % queries.len(), expected: dim, found: v.len() });
            }
        }
        Ok(Self { dim, queries, responses })
    }

    /// Records `W·v` for each query.
    pub fn observe(w: &SymMatrix, queries: Vec<Vec<f64>>) -> Result<Self, WishartError> {
        let d = w.dim();
        for (index, v) in queries.iter().enumerate() {
            if v.len() != d {
                return Err(WishartError::QueryLength { index, expected: d, found: v.len() });
            }
        }
        let responses = queries.iter().map(|v| w.mul_vec(v)).collect();
        Self::new(d, queries, responses)
    }

    /// Queries `e_1..e_n`.
    pub fn canonical(w: &SymMatrix, n: usize) -> Result<Self, WishartError> {
        let d = w.dim();
        let queries = (0..n)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect();
        Self::observe(w, queries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn queries(&self) -> &[Vec<f64>] {
        &self.queries
    }

    pub fn responses(&self) -> &[Vec<f64>] {
        &self.responses
    }

    /// Checks `w_i = W·v_i` to `1e-10` relative to `‖W‖_max·‖v_i‖_1`.
    pub fn check_consistent(&self, w: &SymMatrix) -> Result<(), WishartError> {
        if w.dim() != self.dim {
            return Err(LinalgError::DimensionMismatch { expected: self.dim, found: w.dim() }.into());
        }
        for (index, (v, r)) in self.queries.iter().zip(&self.responses).enumerate() {
            let wv = w.mul_vec(v);
            let residual = wv.iter().zip(r).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = w.max_abs() * v.iter().map(|x| x.abs()).sum::<f64>();
            if residual > RESPONSE_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
                return Err(WishartError::InconsistentResponse { index, residual });
            }
        }
        Ok(())
    }
}

/// The part of the posterior that depends only on the transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct RevealedBlocks {
    /// `d x d` orthogonal; the first `n` rows span the queries.
    pub v: Matrix,
    /// `n x n` lower triangular.
    pub y1: Matrix,
    /// `(d-n) x n`.
    pub y2: Matrix,
    /// `d x (d-n)` orthonormal complement of the query span.
    complement: Matrix,
}

/// Computes `V`, `Y1`, `Y2` from queries and responses alone.
pub fn revealed_blocks(t: &QueryTranscript) -> Result<RevealedBlocks, WishartError> {
    let d = t.dim;
    let n = t.len();
    if n == 0 {
        return Ok(RevealedBlocks {
            v: Matrix::identity(d),
            y1: Matrix::zeros(0, 0),
            y2: Matrix::zeros(d, 0),
            complement: Matrix::identity(d),
        });
    }
    let queries = Matrix::from_columns(&t.queries, d)?;
    let (q, r) = qr_columns(&queries).map_err(|e| match e {
        LinalgError::RankDeficient { column } => WishartError::DependentQueries { index: column },
        other => other.into(),
    })?;
    let complement = orthonormal_complement(&q);
    let responses = Matrix::from_columns(&t.responses, d)?;
    // W·Q = responses·R⁻¹, obtained from Rᵀ·(W·Q)ᵀ = responsesᵀ.
    let wq = solve_lower_triangular(&r.transpose(), &responses.transpose())?.transpose();
    let s = q.transpose().matmul(&wq)?;
    let (s, _) = SymMatrix::symmetrized(&s)?;
    let y1 = cholesky(&s).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { pivot, value } => WishartError::IllConditioned { pivot, value },
        other => other.into(),
    })?;
    let cross = complement.transpose().matmul(&wq)?;
    // Y2·Y1ᵀ = cross  ⇔  Y1·Y2ᵀ = crossᵀ.
    let y2 = solve_lower_triangular(&y1, &cross.transpose())?.transpose();
    let mut v = Matrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            v[(i, k)] = if i < n { q[(k, i)] } else { complement[(k, i - n)] };
        }
    }
    Ok(RevealedBlocks { v, y1, y2, complement })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDecomposition {
    pub v: Matrix,
    pub y1: Matrix,
    pub y2: Matrix,
    /// The unrevealed part, of dimension `d - n`.
    pub wtilde: SymMatrix,
}

impl PosteriorDecomposition {
    pub fn queries(&self) -> usize {
        self.y1.rows()
    }

    /// `‖V·Vᵀ - I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.v.transpose().orthonormality_defect()
    }

    /// The block matrix `[[Y1Y1ᵀ, Y1Y2ᵀ], [Y2Y1ᵀ, Y2Y2ᵀ + W̃]]`.
    pub fn block_matrix(&self) -> Result<Matrix, LinalgError> {
        let n = self.queries();
        let d = self.v.rows();
        let y1t = self.y1.transpose();
        let y2t = self.y2.transpose();
        let top_left = self.y1.matmul(&y1t)?;
        let top_right = self.y1.matmul(&y2t)?;
        let bottom = self.y2.matmul(&y2t)?;
        let mut out = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = match (i < n, j < n) {
                    (true, true) => top_left[(i, j)],
                    (true, false) => top_right[(i, j - n)],
                    (false, true) => top_right[(j, i - n)],
                    (false, false) => bottom[(i - n, j - n)] + self.wtilde.get(i - n, j - n),
                };
            }
        }
        Ok(out)
    }

    /// `‖V·W·Vᵀ - block_matrix‖_max`.
    pub fn block_identity_residual(&self, w: &SymMatrix) -> Result<f64, LinalgError> {
        let rotated = self.v.matmul(&w.as_matrix().matmul(&self.v.transpose())?)?;
        Ok(rotated.sub(&self.block_matrix()?)?.max_abs())
    }

    /// `λ_min(W̃) - λ_min(W)`; nonnegative by interlacing.
    pub fn interlacing_gap(&self, w: &SymMatrix) -> Result<f64, LinalgError> {
        Ok(sym_eigen(&self.wtilde)?.min() - sym_eigen(w)?.min())
    }
}

/// Splits `W` into revealed and unrevealed parts relative to the transcript.
pub fn posterior_decompose(w: &SymMatrix, t: &QueryTranscript) -> Result<PosteriorDecomposition, WishartError> {
    t.check_consistent(w)?;
    let blocks = revealed_blocks(t)?;
    let trailing = w.congruence(&blocks.complement)?;
    let correction = blocks.y2.matmul(&blocks.y2.transpose())?;
    let (wtilde, _) = SymMatrix::symmetrized(&trailing.as_matrix().sub(&correction)?)?;
    Ok(PosteriorDecomposition { v: blocks.v, y1: blocks.y1, y2: blocks.y2, wtilde })
}

/// One trial of [`posterior_distribution_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub trial: usize,
    pub posterior_trace: f64,
    /// `λ_min(W̃)·(d-n)²`.
    pub posterior_lambda_min: f64,
    /// Trace of the trailing block without the `Y2·Y2ᵀ` correction.
    pub uncorrected_trace: f64,
    pub reference_trace: f64,
    pub reference_lambda_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTestReport {
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub trace_ks: KsResult,
    pub lambda_min_ks: KsResult,
    /// Uncorrected trailing block against the same reference; should reject.
    pub control_trace_ks: KsResult,
    pub samples: Vec<PosteriorSample>,
}

impl PosteriorTestReport {
    pub fn posterior_matches(&self) -> bool {
        self.trace_ks.p_value > KS_ALPHA && self.lambda_min_ks.p_value > KS_ALPHA
    }

    pub fn control_rejects(&self) -> bool {
        self.control_trace_ks.p_value < KS_ALPHA
    }
}

/// Compares `W̃` after the queries `e_1..e_n` with fresh
/// `(d-n) x (d-n)` Wishart draws carrying the parent's `1/d` normalization.
pub fn posterior_distribution_test(
    d: usize,
    n: usize,
    trials: usize,
    rng: RngState,
) -> Result<PosteriorTestReport, WishartError> {
    if n >= d {
        return Err(invalid(format!("need n < d, got n = {n}, d = {d}")));
    }
    if trials < 1000 {
        return Err(invalid(format!("need at least 1000 trials, got {trials}")));
    }
    let m = (d - n) as f64;
    let posterior_rng = rng.fork(0);
    let reference_rng = rng.fork(1);
    let samples: Vec<PosteriorSample> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let w = sample_wishart(d, posterior_rng.child(trial as u64));
            let t = QueryTranscript::canonical(&w, n)?;
            let post = posterior_decompose(&w, &t)?;
            let blocks = revealed_blocks(&t)?;
            let uncorrected = w.congruence(&blocks.complement)?;
            let reference = sample_wishart_scaled(d - n, d as f64, reference_rng.child(trial as u64));
            Ok(PosteriorSample {
                trial,
                posterior_trace: post.wtilde.trace(),
                posterior_lambda_min: sym_eigen(&post.wtilde)?.min() * m * m,
                uncorrected_trace: uncorrected.trace(),
                reference_trace: reference.trace(),
                reference_lambda_min: sym_eigen(&reference)?.min() * m * m,
            })
        })
        .collect::<Result<_, WishartError>>()?;
    let col = |f: fn(&PosteriorSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    let reference_trace = col(|s| s.reference_trace);
    Ok(PosteriorTestReport {
        d,
        n,
        trials,
        trace_ks: ks_two_sample(&col(|s| s.posterior_trace), &reference_trace),
        lambda_min_ks: ks_two_sample(&col(|s| s.posterior_lambda_min), &col(|s| s.reference_lambda_min)),
        control_trace_ks: ks_two_sample(&col(|s| s.uncorrected_trace), &reference_trace),
        samples,
    })
}

/// Extreme eigenvalues of `trials` Wishart draws, in trial order.
fn extreme_eigenvalues(d: usize, trials: usize, rng: RngState) -> Result<Vec<(f64, f64)>, WishartError> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let eig = sym_eigen(&sample_wishart(d, rng.child(t as u64)))?;
            Ok((eig.min(), eig.max()))
        })
        .collect()
}

fn binomial_std_error(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigCdfRow {
    pub x: f64,
    pub count: usize,
    /// Empirical `Pr{λ_min ≤ x/d²}`.
    pub probability: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigCdfTable {
    pub d: usize,
    pub trials: usize,
    pub rows: Vec<EigCdfRow>,
}

impl EigCdfTable {
    pub fn probability_at(&self, x: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.x == x).map(|r| r.probability)
    }

    /// Nondecreasing in `x`.
    pub fn is_monotone(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        rows.windows(2).all(|w| w[0].probability <= w[1].probability)
    }
}

/// Empirical CDF of `d²·λ_min(W)` at each `x`.
pub fn eig_cdf_experiment(
    d: usize,
    trials: usize,
    x_values: &[f64],
    rng: RngState,
) -> Result<EigCdfTable, WishartError> {
    if d == 0 || trials == 0 {
        return Err(invalid("d and trials must be positive"));
    }
    if let Some(x) = x_values.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(invalid(format!("x values must be finite and nonnegative, got {x}")));
    }
    let mut scaled: Vec<f64> =
        extreme_eigenvalues(d, trials, rng)?.into_iter().map(|(lo, _)| lo * (d * d) as f64).collect();
    scaled.sort_by(f64::total_cmp);
    let rows = x_values
        .iter()
        .map(|&x| {
            let count = scaled.partition_point(|&v| v <= x);
            let probability = count as f64 / trials as f64;
            EigCdfRow { x, count, probability, std_error: binomial_std_error(probability, trials) }
        })
        .collect();
    Ok(EigCdfTable { d, trials, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMaxRow {
    pub t: f64,
    /// `C₀·(1 + t)`.
    pub threshold: f64,
    pub count: usize,
    pub probability: f64,
    pub std_error: f64,
    /// `2·exp(-d·t)`.
    pub bound: f64,
    /// Whether the bound is asserted (`t > 0`).
    pub checked: bool,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMaxTable {
    pub d: usize,
    pub trials: usize,
    pub edge: f64,
    pub rows: Vec<LambdaMaxRow>,
}

impl LambdaMaxTable {
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.within_bound)
    }
}

/// Empirical `Pr{λ_max ≥ 4(1+t)}` against `2·exp(-d·t)` plus three
/// binomial standard errors.
pub fn lambda_max_tail_experiment(
    d: usize,
    trials: usize,
    t_values: &[f64],
    rng: RngState,
) -> Result<LambdaMaxTable, WishartError> {
    if d == 0 || trials == 0 {
        return Err(invalid("d and trials must be positive"));
    }
    if let Some(t) = t_values.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(invalid(format!("t values must be finite and nonnegative, got {t}")));
    }
    let mut tops: Vec<f64> = extreme_eigenvalues(d, trials, rng)?.into_iter().map(|(_, hi)| hi).collect();
    tops.sort_by(f64::total_cmp);
    let rows = t_values
        .iter()
        .map(|&t| {
            let threshold = LAMBDA_MAX_EDGE * (1.0 + t);
            let count = trials - tops.partition_point(|&v| v < threshold);
            let probability = count as f64 / trials as f64;
            let std_error = binomial_std_error(probability, trials);
            let bound = 2.0 * (-(d as f64) * t).exp();
            let checked = t > 0.0;
            LambdaMaxRow {
                t,
                threshold,
                count,
                probability,
                std_error,
                bound,
                checked,
                within_bound: !checked || probability <= bound + 3.0 * std_error,
            }
        })
        .collect();
    Ok(LambdaMaxTable { d, trials, edge: LAMBDA_MAX_EDGE, rows })
}

pub const INV_TRACE_QUANTILES: [f64; 3] = [0.5, 0.9, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvTraceReport {
    pub d: usize,
    pub p: f64,
    pub trials: usize,
    /// Numerically singular draws, excluded from the statistics.
    pub dropped: usize,
    /// `(q, quantile of tr(W^{-p})/d^{2p})` for q in 0.5, 0.9, 0.99.
    pub quantiles: Vec<(f64, f64)>,
    /// Entry `j-1`: 0.99-quantile of `(1/λ_j)·(j²/d²)`, eigenvalues ascending.
    pub per_index_q99: Vec<f64>,
    /// `tr(W^{-p})/d^{2p}` per trial; `None` for dropped trials.
    pub normalized: Vec<Option<f64>>,
}

impl InvTraceReport {
    pub fn median(&self) -> f64 {
        self.quantiles[0].1
    }
}

/// Tail quantiles of `tr(W^{-p})/d^{2p}` and the per-eigenvalue profile.
pub fn inv_trace_tail_experiment(
    d: usize,
    trials: usize,
    p: f64,
    rng: RngState,
) -> Result<InvTraceReport, WishartError> {
    if !(p > 0.5 && p.is_finite()) {
        return Err(invalid(format!("power must exceed 1/2, got {p}")));
    }
    if d < 2 {
        return Err(invalid(format!("need d >= 2, got {d}")));
    }
    if trials < 1000 {
        return Err(invalid(format!("need at least 1000 trials, got {trials}")));
    }
    let dd = (d * d) as f64;
    let spectra: Vec<Option<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let eig = sym_eigen(&sample_wishart(d, rng.child(t as u64)))?;
            Ok((eig.min() >= SINGULAR_THRESHOLD).then_some(eig.eigvals))
        })
        .collect::<Result<_, WishartError>>()?;
    let normalized: Vec<Option<f64>> =
        spectra.iter().map(|s| s.as_ref().map(|l| l.iter().map(|x| x.powf(-p)).sum::<f64>() / dd.powf(p))).collect();
    let kept: Vec<&Vec<f64>> = spectra.iter().flatten().collect();
    if kept.is_empty() {
        return Err(invalid("every draw was numerically singular"));
    }
    let mut values: Vec<f64> = normalized.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    let quantiles = INV_TRACE_QUANTILES.iter().map(|&q| (q, quantile_sorted(&values, q))).collect();
    let per_index_q99 = (0..d)
        .map(|j| {
            let weight = ((j + 1) * (j + 1)) as f64 / dd;
            let mut col: Vec<f64> = kept.iter().map(|l| weight / l[j]).collect();
            col.sort_by(f64::total_cmp);
            quantile_sorted(&col, 0.99)
        })
        .collect();
    Ok(InvTraceReport { d, p, trials, dropped: trials - kept.len(), quantiles, per_index_q99, normalized })
}

/// `v ↦ W·v` with a hard query budget. Exposes nothing else about `W`.
pub struct MeteredOracle<'a> {
    matrix: &'a SymMatrix,
    budget: usize,
    used: Cell<usize>,
}

impl<'a> MeteredOracle<'a> {
    pub fn new(matrix: &'a SymMatrix, budget: usize) -> Self {
        Self { matrix, budget, used: Cell::new(0) }
    }

    pub fn used(&self) -> usize {
        self.used.get()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }
}

impl LinearOperator for MeteredOracle<'_> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if self.used.get() >= self.budget {
            return Err(OperatorError::BudgetExhausted { budget: self.budget });
        }
        let y = self.matrix.apply(x)?;
        self.used.set(self.used.get() + 1);
        Ok(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameAlgorithm {
    /// Queries `e_1..e_d` and computes the trace exactly. Needs `n ≥ d`.
    ExactRecovery,
    /// Outputs `value` without querying.
    ConstantGuess { value: f64 },
    /// Hutchinson with `probes` Rademacher probes, each pushed through
    /// `steps` Lanczos steps for `x^{-p}`.
    HutchinsonKrylov { probes: usize, steps: usize },
}

impl GameAlgorithm {
    /// Spends the budget on Krylov depth first: `m = min(d, n)`,
    /// `N_v = max(1, n/m)`.
    pub fn hutchinson_krylov_for_budget(d: usize, budget: usize) -> Self {
        let steps = d.min(budget).max(1);
        GameAlgorithm::HutchinsonKrylov { probes: (budget / steps).max(1), steps }
    }

    pub fn name(&self) -> String {
        match self {
            GameAlgorithm::ExactRecovery => "exact_recovery".into(),
            GameAlgorithm::ConstantGuess { value } => format!("constant_guess({value})"),
            GameAlgorithm::HutchinsonKrylov { probes, steps } => format!("hutchinson_krylov(N_v={probes}, m={steps})"),
        }
    }

    fn validate(&self, d: usize, budget: usize) -> Result<(), WishartError> {
        match *self {
            GameAlgorithm::ExactRecovery if budget < d => {
                Err(invalid(format!("exact recovery needs a budget of at least d = {d}, got {budget}")))
            }
            GameAlgorithm::ConstantGuess { value } if !(value.is_finite() && value > 0.0) => {
                Err(invalid(format!("constant guess must be positive and finite, got {value}")))
            }
            GameAlgorithm::HutchinsonKrylov { probes, steps } => {
                if probes == 0 || steps == 0 || steps > d {
                    Err(invalid(format!("need N_v >= 1 and 1 <= m <= d, got N_v = {probes}, m = {steps}")))
                } else if probes * steps > budget {
                    Err(invalid(format!("N_v·m = {} exceeds the budget {budget}", probes * steps)))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn run(&self, oracle: &MeteredOracle, p: f64, rng: RngState) -> Result<f64, KrylovError> {
        let d = oracle.dim();
        match *self {
            GameAlgorithm::ExactRecovery => {
                let mut columns = Vec::with_capacity(d);
                for i in 0..d {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    columns.push(oracle.apply(&e)?);
                }
                let (w, _) = SymMatrix::symmetrized(&Matrix::from_columns(&columns, d)?)?;
                let eig = sym_eigen(&w)?;
                MatrixFunction::InvPower(p).check_spectrum(&eig)?;
                Ok(eig.trace_fn(|x| x.powf(-p)))
            }
            GameAlgorithm::ConstantGuess { value } => Ok(value),
            GameAlgorithm::HutchinsonKrylov { probes, steps } => {
                let mut total = 0.0;
                for s in 0..probes {
                    let z = ProbeKind::Rademacher.draw(d, rng.child(s as u64));
                    let fz = fa_times_vec_lanczos(oracle, &z, steps, MatrixFunction::InvPower(p))?;
                    total += z.iter().zip(&fz.vector).map(|(a, b)| a * b).sum::<f64>();
                }
                Ok(total / probes as f64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrial {
    pub trial: usize,
    /// `None` when the algorithm failed.
    pub estimate: Option<f64>,
    pub true_trace: f64,
    pub success: bool,
    pub queries_used: usize,
    /// The algorithm tried to exceed its budget.
    pub violation: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub d: usize,
    pub p: f64,
    pub c: f64,
    pub budget: usize,
    pub algorithm: GameAlgorithm,
    pub trials: usize,
    pub success_count: usize,
    pub violations: usize,
    pub records: Vec<GameTrial>,
}

impl GameResult {
    pub fn success_rate(&self) -> f64 {
        self.success_count as f64 / self.trials as f64
    }

    pub fn max_queries_used(&self) -> usize {
        self.records.iter().map(|r| r.queries_used).max().unwrap_or(0)
    }
}

/// Runs `trials` rounds of: draw `W`, let the algorithm query it through a
/// metered oracle with budget `n`, and score a `C`-factor approximation of
/// `tr(W^{-p})`.
pub fn query_game(
    d: usize,
    p: f64,
    c: f64,
    algorithm: GameAlgorithm,
    budget: usize,
    trials: usize,
    rng: RngState,
) -> Result<GameResult, WishartError> {
    if d == 0 || trials == 0 {
        return Err(invalid("d and trials must be positive"));
    }
    if !(p > 0.5 && p.is_finite()) {
        return Err(invalid(format!("power must exceed 1/2, got {p}")));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(invalid(format!("approximation factor must exceed 1, got {c}")));
    }
    algorithm.validate(d, budget)?;
    let records: Vec<GameTrial> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_rng = rng.child(trial as u64);
            let w = sample_wishart(d, trial_rng.fork(0));
            let true_trace = sym_eigen(&w)?.trace_fn(|x| x.powf(-p));
            let oracle = MeteredOracle::new(&w, budget);
            let outcome = algorithm.run(&oracle, p, trial_rng.fork(1));
            let violation = matches!(outcome, Err(KrylovError::Operator(OperatorError::BudgetExhausted { .. })));
            let (estimate, error) = match outcome {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let success = estimate.is_some_and(|e| e >= true_trace / c && e <= c * true_trace);
            Ok(GameTrial { trial, estimate, true_trace, success, queries_used: oracle.used(), violation, error })
        })
        .collect::<Result<_, WishartError>>()?;
    Ok(GameResult {
        d,
        p,
        c,
        budget,
        algorithm,
        trials,
        success_count: records.iter().filter(|r| r.success).count(),
        violations: records.iter().filter(|r| r.violation).count(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;

    #[test]
    fn diagonal_single_query() {
        let w = SymMatrix::from_diagonal(&[3.0, 5.0]);
        let t = QueryTranscript::canonical(&w, 1).unwrap();
        let post = posterior_decompose(&w, &t).unwrap();
        assert!((post.y1[(0, 0)] - 3f64.sqrt()).abs() < 1e-14);
        assert!(post.y2[(0, 0)].abs() < 1e-14);
        assert!((post.wtilde.get(0, 0) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn empty_transcript_is_identity() {
        let w = sample_wishart(5, RngState::from_seed(4));
        let t = QueryTranscript::canonical(&w, 0).unwrap();
        let post = posterior_decompose(&w, &t).unwrap();
        assert_eq!(post.v, Matrix::identity(5));
        assert_eq!(post.wtilde, w);
    }

    #[test]
    fn random_queries_block_identity() {
        let rng = RngState::from_seed(12);
        let w = sample_wishart(12, rng.fork(0));
        let g = crate::linalg::sample_gaussian_matrix(12, 4, rng.fork(1));
        let queries = (0..4).map(|j| g.column(j)).collect();
        let t = QueryTranscript::observe(&w, queries).unwrap();
        let post = posterior_decompose(&w, &t).unwrap();
        assert!(post.orthogonality_defect() <= 1e-10);
        assert!(post.block_identity_residual(&w).unwrap() <= 1e-8 * w.max_abs());
        assert!(post.interlacing_gap(&w).unwrap() >= -1e-10);
    }

    #[test]
    fn transcript_errors() {
        let w = SymMatrix::identity(3);
        assert!(matches!(QueryTranscript::canonical(&w, 3), Err(WishartError::TooManyQueries { .. })));
        let t = QueryTranscript::observe(&w, vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(posterior_decompose(&w, &t), Err(WishartError::DependentQueries { index: 2 })));
        let t = QueryTranscript::new(3, vec![vec![1.0, 0.0, 0.0]], vec![vec![1.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(posterior_decompose(&w, &t), Err(WishartError::InconsistentResponse { .. })));
        let t = QueryTranscript::new(3, vec![vec![1.0, 0.0, 0.0]], vec![vec![-1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(revealed_blocks(&t), Err(WishartError::IllConditioned { .. })));
    }

    #[test]
    fn one_dimensional_cdf() {
        let x = 0.25;
        let table = eig_cdf_experiment(1, 20_000, &[0.0, x], RngState::from_seed(5)).unwrap();
        let expected = 2.0 * normal_cdf(0.5) - 1.0;
        let row = table.rows[1];
        assert!((row.probability - expected).abs() <= 3.0 * row.std_error);
        assert_eq!(table.rows[0].count, 0);
        assert!(table.is_monotone());
    }

    #[test]
    fn lambda_max_far_tail_is_empty() {
        let table = lambda_max_tail_experiment(16, 2000, &[0.0, 1.0], RngState::from_seed(6)).unwrap();
        assert!(!table.rows[0].checked);
        assert_eq!(table.rows[1].count, 0);
        assert!(table.all_within_bound());
    }

    #[test]
    fn inv_trace_two_by_two() {
        let rng = RngState::from_seed(8);
        let report = inv_trace_tail_experiment(2, 1000, 1.0, rng).unwrap();
        for (t, value) in report.normalized.iter().enumerate() {
            let w = sample_wishart(2, rng.child(t as u64));
            let (a, b, c) = (w.get(0, 0), w.get(0, 1), w.get(1, 1));
            let bb = b * b;
            let det = a.mul_add(c, -bb) - b.mul_add(b, -bb);
            let direct = (a + c) / det / 4.0;
            // Relative accuracy of the small eigenvalue degrades with κ(W).
            let cond = (a + c) * (a + c) / det;
            let tol = 1e-10_f64.max(64.0 * f64::EPSILON * cond);
            let v = value.unwrap();
            assert!((v - direct).abs() <= tol * direct, "trial {t}: {v} vs {direct}");
        }
        assert_eq!(report.dropped, 0);
        assert_eq!(report.per_index_q99.len(), 2);
    }

    #[test]
    fn exact_recovery_always_succeeds() {
        let res = query_game(6, 1.0, 1.5, GameAlgorithm::ExactRecovery, 6, 20, RngState::from_seed(1)).unwrap();
        assert_eq!(res.success_count, 20);
        assert_eq!(res.max_queries_used(), 6);
        assert_eq!(res.violations, 0);
    }

    #[test]
    fn game_parameter_checks() {
        let rng = RngState::from_seed(0);
        assert!(query_game(6, 1.0, 2.0, GameAlgorithm::ExactRecovery, 5, 1, rng).is_err());
        assert!(query_game(6, 0.5, 2.0, GameAlgorithm::ExactRecovery, 6, 1, rng).is_err());
        assert!(query_game(6, 1.0, 1.0, GameAlgorithm::ExactRecovery, 6, 1, rng).is_err());
        let hk = GameAlgorithm::HutchinsonKrylov { probes: 3, steps: 3 };
        assert!(query_game(6, 1.0, 2.0, hk, 8, 1, rng).is_err());
    }

    #[test]
    fn oracle_enforces_budget() {
        let w = SymMatrix::identity(3);
        let oracle = MeteredOracle::new(&w, 2);
        oracle.apply(&[1.0, 0.0, 0.0]).unwrap();
        oracle.apply(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(oracle.apply(&[1.0, 0.0, 0.0]), Err(OperatorError::BudgetExhausted { budget: 2 }));
        assert_eq!(oracle.used(), 2);
        assert!(oracle.max_abs_hint().is_none());
    }

    #[test]
    fn budget_policy() {
        assert_eq!(
            GameAlgorithm::hutchinson_krylov_for_budget(64, 8),
            GameAlgorithm::HutchinsonKrylov { probes: 1, steps: 8 }
        );
        assert_eq!(
            GameAlgorithm::hutchinson_krylov_for_budget(64, 256),
            GameAlgorithm::HutchinsonKrylov { probes: 4, steps: 64 }
        );
    }
}
