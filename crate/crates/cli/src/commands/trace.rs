use serde::{Deserialize, Serialize};
use tracebounds::krylov::MatrixFunction;
use tracebounds::linalg::{random_symmetric_with_spectrum, sym_eigen};
use tracebounds::trace::{bias_bound, hutchinson, Backend, ProbeKind, ProbeSpec};
use tracebounds::{RngState, SymMatrix};

use crate::args::{BackendKind, Func, ProbeKindArg, TraceArgs};
use crate::commands::poly::target_from_flags;
use crate::error::CliError;
use crate::matrix_file::parse_matrix_file;
use crate::output::{emit, Format, Report, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub dim: usize,
    pub backend: String,
    pub probes: usize,
    pub estimate: f64,
    pub sample_stddev: f64,
    pub standard_error: f64,
    /// Certified `|tr(p(A)) - tr(f(A))|` bound; cheb backend only.
    pub bias_bound: Option<f64>,
    pub mvp_count: usize,
    /// `tr(f(A))` from a dense eigendecomposition.
    pub reference_trace: f64,
    /// Asymmetry removed when reading a matrix file.
    pub asymmetry: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quadratic_forms: Vec<f64>,
}

/// Random SPD matrix with geometrically spaced spectrum from 1 to `kappa`.
pub fn random_spd(d: usize, kappa: f64, rng: RngState) -> SymMatrix {
    let spectrum: Vec<f64> = (0..d).map(|i| if d == 1 { 1.0 } else { kappa.powf(i as f64 / (d - 1) as f64) }).collect();
    random_symmetric_with_spectrum(&spectrum, rng)
}

pub fn run(args: TraceArgs) -> Result<(), CliError> {
    let rng = RngState::from_seed(args.seed);
    let (a, asymmetry) = match (&args.matrix, args.random_spd) {
        (Some(path), _) => {
            let parsed = parse_matrix_file(path)?;
            (parsed.matrix, Some(parsed.asymmetry))
        }
        (None, Some(d)) => {
            let kappa = args.kappa.ok_or_else(|| CliError::Usage("--random-spd needs --kappa".into()))?;
            if d == 0 || !(kappa >= 1.0 && kappa.is_finite()) {
                return Err(CliError::Usage("--random-spd needs d >= 1 and a finite --kappa >= 1".into()));
            }
            (random_spd(d, kappa, rng.fork(0)), None)
        }
        (None, None) => return Err(CliError::Usage("one of --matrix or --random-spd is required".into())),
    };
    let f = match args.func {
        Func::Inv => MatrixFunction::Inv,
        Func::Invsqrt => MatrixFunction::InvSqrt,
        Func::Monomial => return Err(CliError::Usage("trace supports --func inv or invsqrt".into())),
    };
    let d = a.dim();
    let (backend, bias) = match args.backend {
        BackendKind::Cheb => {
            if args.kappa.is_none() {
                return Err(CliError::Usage("--backend cheb needs --kappa (spectrum bound)".into()));
            }
            let target = target_from_flags(args.func, args.kappa, args.delta, None)?;
            (Backend::Chebyshev(target.build()?), Some(bias_bound(&target, d)?))
        }
        BackendKind::Lanczos => {
            let steps = args.steps.unwrap_or(d.min(30));
            if steps == 0 || steps > d {
                return Err(CliError::Usage(format!("--steps must lie in 1..={d}")));
            }
            (Backend::Lanczos { f, steps }, None)
        }
        BackendKind::Exact => (Backend::Exact(f), None),
    };
    if args.probes == 0 {
        return Err(CliError::Usage("--probes must be positive".into()));
    }
    let kind = match args.probe_kind {
        ProbeKindArg::Rademacher => ProbeKind::Rademacher,
        ProbeKindArg::Gaussian => ProbeKind::Gaussian,
    };
    let est = hutchinson(&a, &backend, &ProbeSpec { kind, count: args.probes, rng: rng.fork(1) })?;
    let reference_trace = sym_eigen(&a)?.trace_fn(|x| f.eval(x));
    let report = TraceReport {
        dim: d,
        backend: est.backend.clone(),
        probes: args.probes,
        estimate: est.value,
        sample_stddev: est.sample_stddev,
        standard_error: est.standard_error(),
        bias_bound: bias,
        mvp_count: est.mvp_count,
        reference_trace,
        asymmetry,
        quadratic_forms: if args.keep_forms { est.quadratic_forms } else { Vec::new() },
    };
    let config = RunConfig::new("trace", &args, Some(args.seed), args.out.as_deref(), Format::Json);
    emit(args.out.as_deref(), &Report::new(config, report).to_json())
}
