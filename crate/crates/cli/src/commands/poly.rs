use std::path::Path;

use serde::{Deserialize, Serialize};
use tracebounds::poly::sup_error;
use tracebounds::{ApproxTarget, ChebPoly};

use crate::args::{Func, PolyBuildArgs, PolyCommand, PolyErrorArgs};
use crate::error::CliError;
use crate::output::{emit, Format, Report, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub target: ApproxTarget,
    pub degree: usize,
    pub grid: usize,
    pub grid_sup_error: f64,
    pub bound: f64,
}

impl Certificate {
    pub fn compute(poly: &ChebPoly, target: ApproxTarget, grid: usize) -> Self {
        Self {
            target,
            degree: poly.degree(),
            grid,
            grid_sup_error: sup_error(poly, &target, grid),
            bound: target.error_bound(),
        }
    }

    pub fn holds(&self) -> bool {
        self.grid_sup_error <= self.bound
    }
}

/// Contents of a polynomial file written by `poly build`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyArtifact {
    pub poly: ChebPoly,
    pub certificate: Certificate,
}

pub fn run(cmd: PolyCommand) -> Result<(), CliError> {
    match cmd {
        PolyCommand::Build(args) => build(args),
        PolyCommand::Error(args) => recertify(args),
    }
}

fn check_grid(grid: usize) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Usage(format!("--grid must be at least 2, got {grid}")));
    }
    Ok(())
}

pub fn target_from_flags(func: Func, kappa: Option<f64>, delta: f64, s: Option<u32>) -> Result<ApproxTarget, CliError> {
    let need_kappa = || kappa.ok_or_else(|| CliError::Usage("--kappa is required for this function".into()));
    let target = match func {
        Func::Inv => ApproxTarget::Inv { kappa: need_kappa()?, delta },
        Func::Invsqrt => ApproxTarget::InvSqrt { kappa: need_kappa()?, delta },
        Func::Monomial => ApproxTarget::Monomial {
            s: s.ok_or_else(|| CliError::Usage("--s is required for --func monomial".into()))?,
            delta,
        },
    };
    target.validate()?;
    Ok(target)
}

fn build(args: PolyBuildArgs) -> Result<(), CliError> {
    check_grid(args.grid)?;
    let target = target_from_flags(args.func, args.kappa, args.delta, args.s)?;
    let poly = target.build()?;
    let certificate = Certificate::compute(&poly, target, args.grid);
    if !certificate.holds() {
        return Err(CliError::Check(format!(
            "grid sup-error {:e} exceeds bound {:e} at degree {}",
            certificate.grid_sup_error, certificate.bound, certificate.degree
        )));
    }
    let config = RunConfig::new("poly build", &args, None, Some(&args.out), Format::Json);
    emit(Some(&args.out), &Report::new(config, PolyArtifact { poly, certificate }).to_json())
}

pub fn read_artifact(path: &Path) -> Result<PolyArtifact, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let report: Report<PolyArtifact> = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(report.result)
}

fn recertify(args: PolyErrorArgs) -> Result<(), CliError> {
    check_grid(args.grid)?;
    let artifact = read_artifact(&args.poly)?;
    let certificate = Certificate::compute(&artifact.poly, artifact.certificate.target, args.grid);
    let config = RunConfig::new("poly error", &args, None, args.out.as_deref(), Format::Json);
    emit(args.out.as_deref(), &Report::new(config, certificate.clone()).to_json())?;
    if !certificate.holds() {
        return Err(CliError::Check(format!(
            "grid sup-error {:e} exceeds bound {:e}",
            certificate.grid_sup_error, certificate.bound
        )));
    }
    Ok(())
}
