//! Chebyshev-basis polynomials and the explicit approximants of `x^s`,
//! `x^{-1/2}` and `x^{-1}`.
//!
//! The inverse-power approximants are built in three stages:
//!
//! 1. Expand `(1+y)^{-1/2}` (binomial series, `c_t = C(-1/2, t)`) or
//!    `(1+y)^{-1}` (geometric series, `c_t = (-1)^t`) and keep `T + 1` terms,
//!    where `T` is the smallest length with `κ(1 - 1/κ)^{T+1} ≤ δ/2`.
//! 2. Replace each monomial `y^t` by its compressed approximant
//!    `p_{t,δ_t}` of degree `⌈√(2t·ln(2/δ_t))⌉` (the truncated Chebyshev
//!    expansion of `y^t`), with `δ_t = δ/(4t²)` for the inverse square root
//!    and `δ_t = δ/(2T)` for the inverse.
//! 3. Substitute `y = x/κ - 1` and rescale by `1/√κ` (resp. `1/κ`), which
//!    maps `[1, κ]` into `|y| ≤ 1 - 1/κ`.
//!
//! Stage 3 is carried out by Chebyshev interpolation on `[1, κ]` at
//! `degree + 1` nodes, which is exact for polynomials and never touches the
//! monomial basis. Every construction is certified on a dense Chebyshev grid
//! before it is returned.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound on the number of grid points used by [`sup_error`].
pub const MIN_GRID: usize = 1024;

/// Grid used to certify constructions.
pub const CERTIFICATE_GRID: usize = 4096;

/// Documented constant of the degree law `degree ≤ c₀·√κ·ln(κ/δ)` satisfied
/// by [`inv_sqrt_poly`] and [`inv_poly`] for `κ ≥ 2`, `δ < 1/2`.
pub const DEGREE_LAW_CONSTANT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("coefficient list is empty")]
    EmptyCoefficients,
    #[error("coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("certificate failed: grid sup-error {achieved:e} exceeds bound {bound:e} (degree {degree})")]
    CertificateViolation { achieved: f64, bound: f64, degree: usize },
}

/// `Σ_j c_j·T_j(u)` with `u = 2(x - a)/(b - a) - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChebPoly")]
pub struct ChebPoly {
    interval: (f64, f64),
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawChebPoly {
    interval: (f64, f64),
    coeffs: Vec<f64>,
}

impl TryFrom<RawChebPoly> for ChebPoly {
    type Error = PolyError;
    fn try_from(raw: RawChebPoly) -> Result<Self, PolyError> {
        ChebPoly::new(raw.interval.0, raw.interval.1, raw.coeffs)
    }
}

/// Value of a Chebyshev series together with whether `x` was inside the
/// polynomial's interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebValue {
    pub value: f64,
    pub in_interval: bool,
}

impl ChebPoly {
    /// Trailing coefficients with magnitude at most `1e-300` are dropped
    /// (one coefficient is always kept).
    pub fn new(a: f64, b: f64, mut coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(PolyError::InvalidInterval { a, b });
        }
        if coeffs.is_empty() {
            return Err(PolyError::EmptyCoefficients);
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFiniteCoefficient { index });
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.abs() <= 1e-300) {
            coeffs.pop();
        }
        Ok(Self { interval: (a, b), coeffs })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval.0 <= x && x <= self.interval.1
    }

    /// Affine map of `[a, b]` onto `[-1, 1]`.
    pub fn to_unit(&self, x: f64) -> f64 {
        let (a, b) = self.interval;
        (2.0 * x - (a + b)) / (b - a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.to_unit(x))
    }

    /// Keeps coefficients `c_0..=c_{max_degree}`.
    pub fn truncated(&self, max_degree: usize) -> ChebPoly {
        let keep = (max_degree + 1).min(self.coeffs.len());
        ChebPoly { interval: self.interval, coeffs: self.coeffs[..keep].to_vec() }
    }

    /// Interpolant of `f` at the `degree + 1` Chebyshev points of the first
    /// kind on `[a, b]`. Exact (up to rounding) when `f` is itself a
    /// polynomial of at most that degree.
    pub fn interpolate(a: f64, b: f64, degree: usize, f: impl Fn(f64) -> f64) -> Result<ChebPoly, PolyError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(PolyError::InvalidInterval { a, b });
        }
        let n = degree + 1;
        let angles: Vec<f64> = (0..n).map(|k| PI * (k as f64 + 0.5) / n as f64).collect();
        let values: Vec<f64> = angles
            .iter()
            .map(|th| {
                let u = th.cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * u)
            })
            .collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values.iter().zip(&angles).map(|(v, th)| v * (j as f64 * th).cos()).sum();
                let w = if j == 0 { 1.0 } else { 2.0 };
                w * s / n as f64
            })
            .collect();
        ChebPoly::new(a, b, coeffs)
    }
}

/// Clenshaw recurrence for `Σ_j c_j·T_j(u)`.
pub fn clenshaw(coeffs: &[f64], u: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + 2.0 * u * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + u * b1 - b2
}

/// Evaluates `p` at `x`, flagging evaluations outside its interval.
pub fn eval_cheb(p: &ChebPoly, x: f64) -> ChebValue {
    ChebValue { value: p.eval(x), in_interval: p.contains(x) }
}

/// The function a polynomial is meant to approximate, with its accuracy
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxTarget {
    /// `x^{-1/2}` on `[1, κ]`.
    InvSqrt { kappa: f64, delta: f64 },
    /// `x^{-1}` on `[1, κ]`.
    Inv { kappa: f64, delta: f64 },
    /// `x^s` on `[-1, 1]`.
    Monomial { s: u32, delta: f64 },
}

impl ApproxTarget {
    pub fn validate(&self) -> Result<(), PolyError> {
        match *self {
            ApproxTarget::InvSqrt { kappa, delta } | ApproxTarget::Inv { kappa, delta } => {
                if !(kappa.is_finite() && kappa >= 2.0) {
                    return Err(PolyError::InvalidParameter(format!("kappa must be >= 2, got {kappa}")));
                }
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(PolyError::InvalidParameter(format!("delta must lie in (0, 1/2), got {delta}")));
                }
            }
            ApproxTarget::Monomial { s, delta } => {
                if s < 1 {
                    return Err(PolyError::InvalidParameter("monomial power must be >= 1".into()));
                }
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(PolyError::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> (f64, f64) {
        match *self {
            ApproxTarget::InvSqrt { kappa, .. } | ApproxTarget::Inv { kappa, .. } => (1.0, kappa),
            ApproxTarget::Monomial { .. } => (-1.0, 1.0),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ApproxTarget::InvSqrt { .. } => 1.0 / x.sqrt(),
            ApproxTarget::Inv { .. } => 1.0 / x,
            ApproxTarget::Monomial { s, .. } => x.powi(s as i32),
        }
    }

    pub fn delta(&self) -> f64 {
        match *self {
            ApproxTarget::InvSqrt { delta, .. }
            | ApproxTarget::Inv { delta, .. }
            | ApproxTarget::Monomial { delta, .. } => delta,
        }
    }

    /// Guaranteed sup-norm accuracy over [`domain`](Self::domain):
    /// `δ/√κ`, `δ/κ` or `δ`.
    pub fn error_bound(&self) -> f64 {
        match *self {
            ApproxTarget::InvSqrt { kappa, delta } => delta / kappa.sqrt(),
            ApproxTarget::Inv { kappa, delta } => delta / kappa,
            ApproxTarget::Monomial { delta, .. } => delta,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ApproxTarget::InvSqrt { .. } => "inv_sqrt",
            ApproxTarget::Inv { .. } => "inv",
            ApproxTarget::Monomial { .. } => "monomial",
        }
    }

    /// Builds the certified approximant for this target.
    pub fn build(&self) -> Result<ChebPoly, PolyError> {
        match *self {
            ApproxTarget::InvSqrt { kappa, delta } => inv_sqrt_poly(kappa, delta),
            ApproxTarget::Inv { kappa, delta } => inv_poly(kappa, delta),
            ApproxTarget::Monomial { s, delta } => monomial_cheb_approx(s, delta),
        }
    }
}

/// Largest `|p(x) - f(x)|` over `max(grid_size, 1024, 10·degree)`
/// Chebyshev–Lobatto points of the target's domain (endpoints included).
/// This is a lower bound on the true sup-norm error.
pub fn sup_error(p: &ChebPoly, target: &ApproxTarget, grid_size: usize) -> f64 {
    let (a, b) = target.domain();
    let n = grid_size.max(MIN_GRID).max(10 * p.degree());
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n)
        .map(|k| {
            let x = if k == 0 {
                b
            } else if k == n - 1 {
                a
            } else {
                mid + half * (PI * k as f64 / (n - 1) as f64).cos()
            };
            (p.eval(x) - target.value(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `⌈√(2s·ln(2/δ))⌉`, the degree at which the Chebyshev expansion of `x^s`
/// may be cut while staying within `δ` on `[-1, 1]`.
pub fn monomial_degree_cap(s: u32, delta: f64) -> usize {
    (2.0 * s as f64 * (2.0 / delta).ln()).sqrt().ceil() as usize
}

/// Compressed approximant of `x^s` on `[-1, 1]`.
///
/// `x^s = Σ_j a_j T_j(x)` where `a_j` is the probability that a simple
/// random walk of `s` steps ends at `±j`; dropping `|j| > D` costs at most
/// the tail mass `2·exp(-D²/(2s))`, which is `δ` at `D = ⌈√(2s·ln(2/δ))⌉`.
pub fn monomial_cheb_approx(s: u32, delta: f64) -> Result<ChebPoly, PolyError> {
    ApproxTarget::Monomial { s, delta }.validate()?;
    let degree = monomial_degree_cap(s, delta).min(s as usize);
    let coeffs = monomial_cheb_coeffs(s as usize, degree);
    ChebPoly::new(-1.0, 1.0, coeffs)
}

/// Coefficients `a_0..=a_degree` of `x^s` in the Chebyshev basis.
fn monomial_cheb_coeffs(s: usize, degree: usize) -> Vec<f64> {
    let pmf = binomial_half_pmf(s);
    let mut coeffs = vec![0.0; degree + 1];
    for (j, c) in coeffs.iter_mut().enumerate() {
        if j > s || !(s - j).is_multiple_of(2) {
            continue;
        }
        let k = (s - j) / 2;
        *c = if j == 0 { pmf[k] } else { 2.0 * pmf[k] };
    }
    coeffs
}

/// `C(s, k)/2^s` for `k = 0..=s`.
fn binomial_half_pmf(s: usize) -> Vec<f64> {
    if s <= 1000 {
        // 2^{-s} is a normal float here; the forward recurrence is exact for small s.
        let mut pmf = Vec::with_capacity(s + 1);
        let mut p = 0.5_f64.powi(s as i32);
        for k in 0..=s {
            pmf.push(p);
            p *= (s - k) as f64 / (k + 1) as f64;
        }
        pmf
    } else {
        let mut ln_fact = vec![0.0; s + 1];
        for i in 1..=s {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        let ln_half_pow = -(s as f64) * std::f64::consts::LN_2;
        (0..=s).map(|k| (ln_fact[s] - ln_fact[k] - ln_fact[s - k] + ln_half_pow).exp()).collect()
    }
}

/// Smallest `T ≥ 0` with `κ·(1 - 1/κ)^{T+1} ≤ delta_half`.
pub fn taylor_truncation_length(kappa: f64, delta_half: f64) -> usize {
    assert!(kappa >= 2.0 && kappa.is_finite(), "kappa must be >= 2");
    assert!(delta_half > 0.0, "delta_half must be positive");
    let ratio = 1.0 - 1.0 / kappa;
    let bound = |t: usize| kappa * ratio.powf((t + 1) as f64);
    let estimate = ((delta_half / kappa).ln() / ratio.ln()).ceil() - 1.0;
    let mut t = if estimate.is_finite() && estimate > 0.0 { estimate as usize } else { 0 };
    while t > 0 && bound(t - 1) <= delta_half {
        t -= 1;
    }
    while bound(t) > delta_half {
        t += 1;
    }
    t
}

/// Full record of a series-based construction, kept for auditing the
/// error budget term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesConstruction {
    pub target: ApproxTarget,
    /// Index `T` of the last series term kept.
    pub truncation: usize,
    /// `c_0..=c_T`.
    pub series_coeffs: Vec<f64>,
    /// Accuracy demanded of each monomial approximant (`0` for `t = 0`).
    pub term_tolerances: Vec<f64>,
    pub term_degrees: Vec<usize>,
    /// The composite polynomial in `y` on `[-1, 1]`.
    pub unit_poly: ChebPoly,
    /// The final approximant on `[1, κ]`.
    pub poly: ChebPoly,
    /// Grid sup-error of `poly` against the target on `[1, κ]`.
    pub certified_error: f64,
}

impl SeriesConstruction {
    /// `Σ_t |c_t|·δ_t`, the certified cost of compressing the monomials.
    pub fn compression_budget(&self) -> f64 {
        self.series_coeffs.iter().zip(&self.term_tolerances).map(|(c, d)| c.abs() * d).sum()
    }

    /// `κ(1 - 1/κ)^{T+1}`, the bound on the series tail over `|y| ≤ 1 - 1/κ`.
    pub fn truncation_bound(&self) -> f64 {
        let (_, kappa) = self.target.domain();
        kappa * (1.0 - 1.0 / kappa).powf((self.truncation + 1) as f64)
    }
}

/// Approximant of `x^{-1/2}` on `[1, κ]` with sup-error at most `δ/√κ`.
pub fn inv_sqrt_poly(kappa: f64, delta: f64) -> Result<ChebPoly, PolyError> {
    inv_sqrt_construction(kappa, delta).map(|c| c.poly)
}

/// Approximant of `x^{-1}` on `[1, κ]` with sup-error at most `δ/κ`.
pub fn inv_poly(kappa: f64, delta: f64) -> Result<ChebPoly, PolyError> {
    inv_construction(kappa, delta).map(|c| c.poly)
}

pub fn inv_sqrt_construction(kappa: f64, delta: f64) -> Result<SeriesConstruction, PolyError> {
    let target = ApproxTarget::InvSqrt { kappa, delta };
    target.validate()?;
    let truncation = taylor_truncation_length(kappa, delta / 2.0);
    // C(-1/2, t) = C(-1/2, t-1)·(-1/2 - t + 1)/t
    let mut series_coeffs = Vec::with_capacity(truncation + 1);
    let mut c = 1.0;
    series_coeffs.push(c);
    for t in 1..=truncation {
        c *= (0.5 - t as f64) / t as f64;
        series_coeffs.push(c);
    }
    let tolerances = (0..=truncation).map(|t| if t == 0 { 0.0 } else { delta / (4.0 * (t * t) as f64) }).collect();
    build_series(target, truncation, series_coeffs, tolerances, 1.0 / kappa.sqrt())
}

pub fn inv_construction(kappa: f64, delta: f64) -> Result<SeriesConstruction, PolyError> {
    let target = ApproxTarget::Inv { kappa, delta };
    target.validate()?;
    let truncation = taylor_truncation_length(kappa, delta / 2.0);
    let series_coeffs = (0..=truncation).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let per_term = delta / (2.0 * truncation as f64);
    let tolerances = (0..=truncation).map(|t| if t == 0 { 0.0 } else { per_term }).collect();
    build_series(target, truncation, series_coeffs, tolerances, 1.0 / kappa)
}

fn build_series(
    target: ApproxTarget,
    truncation: usize,
    series_coeffs: Vec<f64>,
    term_tolerances: Vec<f64>,
    outer_scale: f64,
) -> Result<SeriesConstruction, PolyError> {
    let (_, kappa) = target.domain();
    let term_degrees: Vec<usize> = (0..=truncation)
        .map(|t| if t == 0 { 0 } else { monomial_degree_cap(t as u32, term_tolerances[t]).min(t) })
        .collect();
    let unit_degree = term_degrees.iter().copied().max().unwrap_or(0);

    let mut unit_coeffs = vec![0.0; unit_degree + 1];
    unit_coeffs[0] = series_coeffs[0];
    let pmf_cache = PmfCache::new(truncation);
    for t in 1..=truncation {
        let ct = series_coeffs[t];
        let pmf = pmf_cache.get(t);
        for j in (t % 2..=term_degrees[t]).step_by(2) {
            let k = (t - j) / 2;
            let a = if j == 0 { pmf[k] } else { 2.0 * pmf[k] };
            unit_coeffs[j] += ct * a;
        }
    }
    let unit_poly = ChebPoly::new(-1.0, 1.0, unit_coeffs)?;

    let poly =
        ChebPoly::interpolate(1.0, kappa, unit_poly.degree(), |x| outer_scale * unit_poly.eval(x / kappa - 1.0))?;
    let certified_error = sup_error(&poly, &target, CERTIFICATE_GRID);
    let bound = target.error_bound();
    if certified_error > bound {
        return Err(PolyError::CertificateViolation { achieved: certified_error, bound, degree: poly.degree() });
    }
    Ok(SeriesConstruction {
        target,
        truncation,
        series_coeffs,
        term_tolerances,
        term_degrees,
        unit_poly,
        poly,
        certified_error,
    })
}

/// Binomial pmfs for every `t ≤ max`, computed once per construction.
struct PmfCache {
    ln_fact: Vec<f64>,
}

impl PmfCache {
    fn new(max: usize) -> Self {
        let mut ln_fact = vec![0.0; max + 1];
        for i in 1..=max {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        Self { ln_fact }
    }

    fn get(&self, t: usize) -> Vec<f64> {
        if t <= 1000 {
            return binomial_half_pmf(t);
        }
        let ln_half_pow = -(t as f64) * std::f64::consts::LN_2;
        let f = &self.ln_fact;
        (0..=t).map(|k| (f[t] - f[k] - f[t - k] + ln_half_pow).exp()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power-basis coefficients of `Σ c_j T_j(u)` via `T_{j+1} = 2u·T_j - T_{j-1}`.
    fn cheb_to_power(coeffs: &[f64]) -> Vec<f64> {
        let n = coeffs.len();
        let mut out = vec![0.0; n];
        let mut prev = vec![0.0; n];
        let mut cur = vec![0.0; n];
        cur[0] = 1.0;
        for (j, &c) in coeffs.iter().enumerate() {
            if j == 1 {
                prev = cur.clone();
                cur = vec![0.0; n];
                cur[1] = 1.0;
            } else if j > 1 {
                let mut next = vec![0.0; n];
                for k in 0..n - 1 {
                    next[k + 1] += 2.0 * cur[k];
                }
                for k in 0..n {
                    next[k] -= prev[k];
                }
                prev = std::mem::replace(&mut cur, next);
            }
            for k in 0..n {
                out[k] += c * cur[k];
            }
        }
        out
    }

    #[test]
    fn clenshaw_examples() {
        let t3 = ChebPoly::new(-1.0, 1.0, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((t3.eval(0.5) - (-1.0)).abs() < 1e-15);
        let lin = ChebPoly::new(0.0, 2.0, vec![0.0, 1.0]).unwrap();
        assert!((lin.eval(1.5) - 0.5).abs() < 1e-15);
        let flagged = eval_cheb(&lin, 3.0);
        assert!(!flagged.in_interval);
        assert!((flagged.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn clenshaw_matches_power_basis() {
        let coeffs = [0.3, -1.2, 0.7, 0.05, -0.4, 0.9, -0.25];
        let p = ChebPoly::new(-1.0, 1.0, coeffs.to_vec()).unwrap();
        let power = cheb_to_power(&coeffs);
        for i in 0..=40 {
            let u = -1.0 + i as f64 / 20.0;
            let direct: f64 = power.iter().rev().fold(0.0, |acc, &c| acc * u + c);
            assert!((p.eval(u) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn constructor_validation_and_trimming() {
        assert!(matches!(ChebPoly::new(1.0, 1.0, vec![1.0]), Err(PolyError::InvalidInterval { .. })));
        assert_eq!(ChebPoly::new(0.0, 1.0, vec![]), Err(PolyError::EmptyCoefficients));
        let p = ChebPoly::new(0.0, 1.0, vec![1.0, 2.0, 0.0, 1e-310]).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(ChebPoly::new(0.0, 1.0, vec![0.0, 0.0]).unwrap().degree(), 0);
    }

    #[test]
    fn monomial_small_cases_are_exact() {
        assert_eq!(monomial_cheb_approx(2, 0.1).unwrap().coeffs(), &[0.5, 0.0, 0.5]);
        assert_eq!(monomial_cheb_approx(1, 0.3).unwrap().coeffs(), &[0.0, 1.0]);
        assert_eq!(monomial_degree_cap(8, 0.01), 10);
        assert_eq!(monomial_cheb_approx(8, 0.01).unwrap().degree(), 8);
        let p = monomial_cheb_approx(2, 0.1).unwrap();
        assert!(sup_error(&p, &ApproxTarget::Monomial { s: 2, delta: 0.1 }, 1024) < 1e-14);
    }

    #[test]
    fn monomial_fifty_is_compressed() {
        let p = monomial_cheb_approx(50, 0.1).unwrap();
        assert_eq!(p.degree(), 18);
        assert_eq!(monomial_degree_cap(50, 0.1), 18);
        // Dense uniform grid, independent of the Chebyshev certification grid.
        let worst =
            (0..=20000).map(|i| -1.0 + i as f64 / 10000.0).map(|x| (p.eval(x) - x.powi(50)).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.1, "{worst}");
    }

    #[test]
    fn large_power_pmf_paths_agree() {
        // Above 1000 the pmf is computed in log space; both paths must agree
        // where they overlap.
        let direct = binomial_half_pmf(1000);
        let cache = PmfCache::new(1000);
        let ln_fact = &cache.ln_fact;
        for k in [400usize, 480, 500, 520] {
            let via_logs = (ln_fact[1000] - ln_fact[k] - ln_fact[1000 - k] - 1000.0 * std::f64::consts::LN_2).exp();
            assert!((via_logs - direct[k]).abs() <= 1e-10 * direct[k]);
        }
        let big = binomial_half_pmf(3001);
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncation_length_examples() {
        assert_eq!(taylor_truncation_length(2.0, 0.25), 2);
        assert_eq!(taylor_truncation_length(2.0, 2.0), 0);
        let scan = |kappa: f64, dh: f64| {
            let mut t = 0usize;
            while kappa * (1.0 - 1.0 / kappa).powf((t + 1) as f64) > dh {
                t += 1;
            }
            t
        };
        for (k, dh) in [(16.0, 0.05), (3.5, 0.01), (64.0, 0.2), (256.0, 0.005)] {
            let t = taylor_truncation_length(k, dh);
            assert_eq!(t, scan(k, dh));
            assert!(t as f64 <= (k * (2.0 * k / dh).ln()).ceil() + 1.0);
        }
    }

    #[test]
    fn inv_sqrt_examples() {
        let p = inv_sqrt_poly(2.0, 0.4).unwrap();
        assert!((p.eval(1.0) - 1.0).abs() <= 0.4 / 2f64.sqrt());
        let p = inv_sqrt_poly(4.0, 0.1).unwrap();
        assert!((p.eval(4.0) - 0.5).abs() <= 0.05);
        let c16 = inv_sqrt_construction(16.0, 0.1).unwrap();
        let target = ApproxTarget::InvSqrt { kappa: 16.0, delta: 0.1 };
        assert!(sup_error(&c16.poly, &target, 4096) <= 0.025);
        let c64 = inv_sqrt_construction(64.0, 0.1).unwrap();
        let growth = c64.poly.degree() as f64 / c16.poly.degree() as f64;
        assert!(growth <= 2.0 * 1.6, "degree growth {growth}");
    }

    #[test]
    fn inv_examples() {
        let p = inv_poly(2.0, 0.4).unwrap();
        assert!((p.eval(1.0) - 1.0).abs() <= 0.2);
        let p = inv_poly(4.0, 0.1).unwrap();
        assert!((p.eval(2.0) - 0.5).abs() <= 0.025);
        let p = inv_poly(64.0, 0.1).unwrap();
        assert!(p.degree() as f64 <= DEGREE_LAW_CONSTANT * 8.0 * 640f64.ln());
        assert!(sup_error(&p, &ApproxTarget::Inv { kappa: 64.0, delta: 0.1 }, 4096) <= 0.1 / 64.0);
    }

    #[test]
    fn sup_error_examples() {
        let zero = ChebPoly::new(1.0, 2.0, vec![0.0]).unwrap();
        let e = sup_error(&zero, &ApproxTarget::Inv { kappa: 2.0, delta: 0.1 }, 1024);
        assert_eq!(e, 1.0);
    }

    #[test]
    fn invalid_targets_rejected() {
        assert!(inv_sqrt_poly(2.0, 0.6).is_err());
        assert!(inv_poly(1.5, 0.1).is_err());
        assert!(monomial_cheb_approx(0, 0.1).is_err());
        assert!(monomial_cheb_approx(3, 1.0).is_err());
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let p = ChebPoly::new(-1.0, 1.0, vec![0.2, -0.3, 0.0, 0.8, 0.1]).unwrap();
        let q = ChebPoly::interpolate(1.0, 7.0, 4, |x| p.eval(x / 7.0 - 1.0)).unwrap();
        for i in 0..=30 {
            let x = 1.0 + 6.0 * i as f64 / 30.0;
            assert!((q.eval(x) - p.eval(x / 7.0 - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn json_shape() {
        let p = ChebPoly::new(1.0, 4.0, vec![0.1, -0.2]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"interval":[1.0,4.0],"coeffs":[0.1,-0.2]}"#);
        assert!(serde_json::from_str::<ChebPoly>(r#"{"interval":[2.0,1.0],"coeffs":[1.0]}"#).is_err());
    }
}
