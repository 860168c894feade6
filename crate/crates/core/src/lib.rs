//! Polynomial approximation of `x^{-1/2}` and `x^{-1}`, Lanczos and
//! block-Krylov matrix-function products, Hutchinson trace estimation with
//! exact matrix-vector product accounting, and a Monte-Carlo laboratory for
//! the Wishart constructions behind query lower bounds for `tr(W^{-p})`.
//!
//! Wishart convention used throughout: `W = (1/d)·G·Gᵀ` with `G` a `d x d`
//! matrix of i.i.d. standard normals, so that `λ_max(W) ≈ 4` and
//! `λ_min(W)` lives on the `1/d²` scale.

pub mod krylov;
pub mod linalg;
pub mod poly;
pub mod rng;
pub mod stats;
pub mod trace;
pub mod wishart;

pub use linalg::{EigenDecomposition, LinalgError, LinearOperator, Matrix, SymMatrix};
pub use poly::{ApproxTarget, ChebPoly};
pub use rng::RngState;
