use serde::Serialize;
use tracebounds::wishart::{
    eig_cdf_experiment, inv_trace_tail_experiment, lambda_max_tail_experiment, posterior_distribution_test, query_game,
    GameAlgorithm,
};
use tracebounds::RngState;

use crate::args::{Algo, EigCdfArgs, ExperimentOpts, GameArgs, InvTraceArgs, LmaxArgs, PosteriorArgs, WishartCommand};
use crate::error::CliError;
use crate::output::{emit, render_csv, Format, Report, RunConfig};

pub const EIGCDF_HEADER: [&str; 4] = ["x", "count", "probability", "std_error"];
pub const LMAX_HEADER: [&str; 8] =
    ["t", "threshold", "count", "probability", "std_error", "bound", "checked", "within_bound"];
pub const INVTRACE_HEADER: [&str; 3] = ["trial", "normalized_trace", "dropped"];
pub const POSTERIOR_HEADER: [&str; 6] = [
    "trial",
    "posterior_trace",
    "posterior_lambda_min",
    "uncorrected_trace",
    "reference_trace",
    "reference_lambda_min",
];
pub const GAME_HEADER: [&str; 7] = ["trial", "estimate", "true_trace", "success", "queries_used", "violation", "error"];

#[derive(Serialize)]
struct InvTraceRow {
    trial: usize,
    normalized_trace: Option<f64>,
    dropped: bool,
}

pub fn run(cmd: WishartCommand) -> Result<(), CliError> {
    match cmd {
        WishartCommand::Eigcdf(a) => eigcdf(a),
        WishartCommand::Lmax(a) => lmax(a),
        WishartCommand::Invtrace(a) => invtrace(a),
        WishartCommand::Posterior(a) => posterior(a),
        WishartCommand::Game(a) => game(a),
    }
}

fn config(command: &str, args: &impl Serialize, opts: &ExperimentOpts) -> RunConfig {
    RunConfig::new(command, args, Some(opts.seed), opts.out.as_deref(), opts.format)
}

fn write<T: Serialize, R: Serialize>(
    cfg: RunConfig,
    opts: &ExperimentOpts,
    header: &[&str],
    rows: &[R],
    result: T,
) -> Result<(), CliError> {
    let text = match opts.format {
        Format::Csv => render_csv(&cfg, header, rows),
        Format::Json => Report::new(cfg, result).to_json(),
    };
    emit(opts.out.as_deref(), &text)
}

fn eigcdf(args: EigCdfArgs) -> Result<(), CliError> {
    let cfg = config("wishart eigcdf", &args, &args.opts);
    let table = eig_cdf_experiment(args.d, args.trials, &args.x, RngState::from_seed(args.opts.seed))?;
    write(cfg, &args.opts, &EIGCDF_HEADER, &table.rows, &table)?;
    if !table.is_monotone() {
        return Err(CliError::Check("empirical CDF is not monotone in x".into()));
    }
    Ok(())
}

fn lmax(args: LmaxArgs) -> Result<(), CliError> {
    let cfg = config("wishart lmax", &args, &args.opts);
    let table = lambda_max_tail_experiment(args.d, args.trials, &args.t, RngState::from_seed(args.opts.seed))?;
    write(cfg, &args.opts, &LMAX_HEADER, &table.rows, &table)?;
    if let Some(row) = table.rows.iter().find(|r| !r.within_bound) {
        return Err(CliError::Check(format!(
            "tail at t = {} is {} > 2·exp(-d·t) + 3σ = {}",
            row.t,
            row.probability,
            row.bound + 3.0 * row.std_error
        )));
    }
    Ok(())
}

fn invtrace(args: InvTraceArgs) -> Result<(), CliError> {
    let cfg = config("wishart invtrace", &args, &args.opts);
    let report = inv_trace_tail_experiment(args.d, args.trials, args.p, RngState::from_seed(args.opts.seed))?;
    let rows: Vec<InvTraceRow> = report
        .normalized
        .iter()
        .enumerate()
        .map(|(trial, v)| InvTraceRow { trial, normalized_trace: *v, dropped: v.is_none() })
        .collect();
    write(cfg, &args.opts, &INVTRACE_HEADER, &rows, &report)
}

fn posterior(args: PosteriorArgs) -> Result<(), CliError> {
    if args.n >= args.d {
        return Err(CliError::Usage(format!("--n must be smaller than --d (got n = {}, d = {})", args.n, args.d)));
    }
    let cfg = config("wishart posterior", &args, &args.opts);
    let report = posterior_distribution_test(args.d, args.n, args.trials, RngState::from_seed(args.opts.seed))?;
    write(cfg, &args.opts, &POSTERIOR_HEADER, &report.samples, &report)?;
    if !report.posterior_matches() {
        return Err(CliError::Check(format!(
            "posterior differs from the reference: trace p = {:e}, lambda_min p = {:e}",
            report.trace_ks.p_value, report.lambda_min_ks.p_value
        )));
    }
    if args.n > 0 && !report.control_rejects() {
        return Err(CliError::Check(format!(
            "negative control not rejected: p = {:e}",
            report.control_trace_ks.p_value
        )));
    }
    Ok(())
}

fn game(args: GameArgs) -> Result<(), CliError> {
    let algorithm = match args.algo {
        Algo::Exact => GameAlgorithm::ExactRecovery,
        Algo::Constant => GameAlgorithm::ConstantGuess {
            value: args.guess.ok_or_else(|| CliError::Usage("--algo constant needs --guess".into()))?,
        },
        Algo::Hk => match (args.probes, args.steps) {
            (None, None) => GameAlgorithm::hutchinson_krylov_for_budget(args.d, args.budget),
            (probes, steps) => {
                let steps = steps.unwrap_or(args.d.min(args.budget).max(1));
                GameAlgorithm::HutchinsonKrylov { probes: probes.unwrap_or((args.budget / steps).max(1)), steps }
            }
        },
    };
    let cfg = config("wishart game", &args, &args.opts);
    let result =
        query_game(args.d, args.p, args.c, algorithm, args.budget, args.trials, RngState::from_seed(args.opts.seed))?;
    write(cfg, &args.opts, &GAME_HEADER, &result.records, &result)?;
    if result.violations > 0 {
        return Err(CliError::Check(format!("{} trials exceeded the query budget", result.violations)));
    }
    Ok(())
}
