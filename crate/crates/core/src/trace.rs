//! Hutchinson trace estimation with a matrix-vector product ledger.
//!
//! `tr(g(A)) ≈ (1/N)·Σ_s z_sᵀ·g(A)·z_s` where `g(A)·z_s` comes from one of
//! three backends: an exact spectral product (reference only, no products
//! charged), `m` Lanczos steps (`m` products per probe), or an explicit
//! Chebyshev polynomial (`deg p` products per probe). The total cost is
//! therefore `N·m` or `N·deg p` products, recorded exactly.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::krylov::{fa_times_vec_lanczos, poly_times_vec, KrylovError, MatrixFunction};
use crate::linalg::{dot, sym_eigen, EigenDecomposition, LinalgError, SymMatrix};
use crate::poly::{ApproxTarget, ChebPoly, PolyError};
use crate::rng::RngState;
use crate::stats::{mean, sample_stddev};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("at least one probe vector is required")]
    NoProbes,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    #[default]
    Rademacher,
    Gaussian,
}

impl ProbeKind {
    pub fn draw(&self, d: usize, rng: RngState) -> Vec<f64> {
        let mut g = rng.generator();
        match self {
            ProbeKind::Rademacher => (0..d).map(|_| if g.random::<bool>() { 1.0 } else { -1.0 }).collect(),
            ProbeKind::Gaussian => (0..d).map(|_| StandardNormal.sample(&mut g)).collect(),
        }
    }
}

/// Probe `s` is drawn from `rng.child(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub count: usize,
    pub rng: RngState,
}

impl ProbeSpec {
    pub fn rademacher(count: usize, rng: RngState) -> Self {
        Self { kind: ProbeKind::Rademacher, count, rng }
    }

    pub fn probe(&self, s: usize, d: usize) -> Vec<f64> {
        self.kind.draw(d, self.rng.child(s as u64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    /// Spectral reference `V·f(Λ)·Vᵀ·z`; charges no products.
    Exact(MatrixFunction),
    Lanczos {
        f: MatrixFunction,
        steps: usize,
    },
    Chebyshev(ChebPoly),
}

impl Backend {
    pub fn descriptor(&self) -> String {
        match self {
            Backend::Exact(f) => format!("exact({})", f.name()),
            Backend::Lanczos { f, steps } => format!("lanczos({}, m={steps})", f.name()),
            Backend::Chebyshev(p) => {
                let (a, b) = p.interval();
                format!("cheb(degree={}, interval=[{a}, {b}])", p.degree())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub value: f64,
    /// `z_sᵀ·ĝ(A)·z_s` per probe; empty when suppressed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quadratic_forms: Vec<f64>,
    pub mvp_count: usize,
    pub backend: String,
    /// Per-probe sample standard deviation of the quadratic forms.
    pub sample_stddev: f64,
}

impl TraceEstimate {
    pub fn from_quadratic_forms(quadratic_forms: Vec<f64>, mvp_count: usize, backend: String) -> Self {
        Self {
            value: mean(&quadratic_forms),
            sample_stddev: sample_stddev(&quadratic_forms),
            quadratic_forms,
            mvp_count,
            backend,
        }
    }

    pub fn num_probes(&self) -> usize {
        self.quadratic_forms.len()
    }

    /// `sample_stddev / √N`; needs the quadratic forms.
    pub fn standard_error(&self) -> f64 {
        self.sample_stddev / (self.quadratic_forms.len() as f64).sqrt()
    }

    pub fn without_quadratic_forms(mut self) -> Self {
        self.quadratic_forms.clear();
        self
    }
}

/// A backend bound to a matrix, with any spectral precomputation done once.
pub struct PreparedBackend<'a> {
    matrix: &'a SymMatrix,
    backend: &'a Backend,
    eig: Option<EigenDecomposition>,
}

impl<'a> PreparedBackend<'a> {
    pub fn new(matrix: &'a SymMatrix, backend: &'a Backend) -> Result<Self, TraceError> {
        let eig = match backend {
            Backend::Exact(f) => {
                let eig = sym_eigen(matrix)?;
                f.check_spectrum(&eig)?;
                Some(eig)
            }
            _ => None,
        };
        Ok(Self { matrix, backend, eig })
    }

    /// `(zᵀ·ĝ(A)·z, products spent)`.
    pub fn quadratic_form(&self, z: &[f64]) -> Result<(f64, usize), TraceError> {
        match self.backend {
            Backend::Exact(f) => {
                let eig = self.eig.as_ref().expect("prepared for exact backend");
                Ok((dot(z, &eig.apply_fn(|x| f.eval(x), z)), 0))
            }
            Backend::Lanczos { f, steps } => {
                let out = fa_times_vec_lanczos(self.matrix, z, *steps, *f)?;
                Ok((dot(z, &out.vector), out.mvp_count))
            }
            Backend::Chebyshev(p) => {
                let out = poly_times_vec(self.matrix, p, z)?;
                Ok((dot(z, &out.vector), out.mvp_count))
            }
        }
    }
}

/// Hutchinson estimate from explicitly supplied probe vectors.
pub fn hutchinson_with_probes(
    a: &SymMatrix,
    backend: &Backend,
    probes: &[Vec<f64>],
) -> Result<TraceEstimate, TraceError> {
    if probes.is_empty() {
        return Err(TraceError::NoProbes);
    }
    let prepared = PreparedBackend::new(a, backend)?;
    let results: Vec<(f64, usize)> = probes.par_iter().map(|z| prepared.quadratic_form(z)).collect::<Result<_, _>>()?;
    let mvp_count = results.iter().map(|r| r.1).sum();
    let forms = results.into_iter().map(|r| r.0).collect();
    Ok(TraceEstimate::from_quadratic_forms(forms, mvp_count, backend.descriptor()))
}

/// Hutchinson estimate with `probes.count` random probes. Probes are
/// evaluated in parallel; the result does not depend on scheduling.
pub fn hutchinson(a: &SymMatrix, backend: &Backend, probes: &ProbeSpec) -> Result<TraceEstimate, TraceError> {
    if probes.count == 0 {
        return Err(TraceError::NoProbes);
    }
    let prepared = PreparedBackend::new(a, backend)?;
    let d = a.dim();
    let results: Vec<(f64, usize)> = (0..probes.count)
        .into_par_iter()
        .map(|s| prepared.quadratic_form(&probes.probe(s, d)))
        .collect::<Result<_, _>>()?;
    let mvp_count = results.iter().map(|r| r.1).sum();
    let forms = results.into_iter().map(|r| r.0).collect();
    Ok(TraceEstimate::from_quadratic_forms(forms, mvp_count, backend.descriptor()))
}

/// The trace the backend's estimator is unbiased for: `Σ f(λ)` for the
/// exact and Lanczos backends (the latter only once the Krylov space is
/// saturated), `Σ p(λ)` for a Chebyshev polynomial.
pub fn backend_trace(a: &SymMatrix, backend: &Backend) -> Result<f64, TraceError> {
    let eig = sym_eigen(a)?;
    Ok(match backend {
        Backend::Exact(f) | Backend::Lanczos { f, .. } => eig.trace_fn(|x| f.eval(x)),
        Backend::Chebyshev(p) => eig.trace_fn(|x| p.eval(x)),
    })
}

/// Builds the certified polynomial for `target` and runs Hutchinson with
/// Rademacher probes. Costs `num_probes · degree` products.
pub fn estimate_tr_f(
    a: &SymMatrix,
    target: &ApproxTarget,
    num_probes: usize,
    rng: RngState,
) -> Result<TraceEstimate, TraceError> {
    let poly = target.build()?;
    let degree = poly.degree();
    let backend = Backend::Chebyshev(poly);
    let mut est = hutchinson(a, &backend, &ProbeSpec::rademacher(num_probes, rng))?;
    est.backend = match *target {
        ApproxTarget::InvSqrt { kappa, delta } | ApproxTarget::Inv { kappa, delta } => {
            format!("cheb({}, kappa={kappa}, delta={delta}, degree={degree})", target.name())
        }
        ApproxTarget::Monomial { s, delta } => format!("cheb(monomial, s={s}, delta={delta}, degree={degree})"),
    };
    Ok(est)
}

/// Certified bound on `|tr(p(A)) - tr(f(A))|` for a spectrum inside
/// `[1, κ]`: `d·δ/√κ` for the inverse square root, `d·δ/κ` for the inverse.
pub fn bias_bound(target: &ApproxTarget, d: usize) -> Result<f64, TraceError> {
    match target {
        ApproxTarget::InvSqrt { .. } | ApproxTarget::Inv { .. } => {
            target.validate()?;
            Ok(d as f64 * target.error_bound())
        }
        ApproxTarget::Monomial { .. } => {
            Err(TraceError::Unsupported("no trace bias bound is defined for monomial targets".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::poly::inv_poly;

    #[test]
    fn rademacher_identity_is_exact() {
        let est = hutchinson(
            &SymMatrix::identity(7),
            &Backend::Exact(MatrixFunction::Identity),
            &ProbeSpec::rademacher(16, RngState::from_seed(1)),
        )
        .unwrap();
        assert!((est.value - 7.0).abs() < 1e-12);
        assert!(est.sample_stddev < 1e-12);
        assert_eq!(est.mvp_count, 0);
    }

    #[test]
    fn exhaustive_two_by_two() {
        let a = SymMatrix::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap()).unwrap();
        let signs: Vec<Vec<f64>> =
            [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]].iter().map(|s| s.to_vec()).collect();
        let est = hutchinson_with_probes(&a, &Backend::Exact(MatrixFunction::Identity), &signs).unwrap();
        assert!((est.value - 5.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_backend_diagonal() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        let p = inv_poly(4.0, 0.1).unwrap();
        let deg = p.degree();
        let est =
            hutchinson(&a, &Backend::Chebyshev(p), &ProbeSpec::rademacher(10_000, RngState::from_seed(3))).unwrap();
        assert_eq!(est.mvp_count, 10_000 * deg);
        assert!((est.value - 1.75).abs() <= 3.0 * est.standard_error() + 3.0 * 0.1 / 4.0);
    }

    #[test]
    fn estimate_identity() {
        let target = ApproxTarget::Inv { kappa: 2.0, delta: 0.1 };
        let est = estimate_tr_f(&SymMatrix::identity(5), &target, 3, RngState::from_seed(2)).unwrap();
        assert!((est.value - 5.0).abs() <= bias_bound(&target, 5).unwrap());
        let deg = target.build().unwrap().degree();
        assert_eq!(est.mvp_count, 3 * deg);
        assert!(est.backend.contains("degree="));
    }

    #[test]
    fn bias_bound_examples() {
        let b = bias_bound(&ApproxTarget::Inv { kappa: 4.0, delta: 0.1 }, 10).unwrap();
        assert!((b - 0.25).abs() < 1e-15);
        let b = bias_bound(&ApproxTarget::InvSqrt { kappa: 16.0, delta: 0.4 }, 1).unwrap();
        assert!((b - 0.1).abs() < 1e-15);
        assert!(matches!(bias_bound(&ApproxTarget::Monomial { s: 3, delta: 0.1 }, 4), Err(TraceError::Unsupported(_))));
    }

    #[test]
    fn zero_probes_rejected() {
        let a = SymMatrix::identity(2);
        let b = Backend::Exact(MatrixFunction::Identity);
        assert_eq!(hutchinson(&a, &b, &ProbeSpec::rademacher(0, RngState::from_seed(0))), Err(TraceError::NoProbes));
        assert_eq!(hutchinson_with_probes(&a, &b, &[]), Err(TraceError::NoProbes));
    }

    #[test]
    fn probes_are_reproducible() {
        let spec = ProbeSpec { kind: ProbeKind::Gaussian, count: 4, rng: RngState::from_seed(9) };
        assert_eq!(spec.probe(2, 5), spec.probe(2, 5));
        assert_ne!(spec.probe(2, 5), spec.probe(3, 5));
    }
}
