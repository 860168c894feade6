//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use tracebounds::krylov::{fa_times_vec_lanczos, MatrixFunction};
use tracebounds::linalg::{norm2, random_symmetric_with_spectrum, sample_gaussian_matrix, sample_wishart, sym_eigen};
use tracebounds::poly::{inv_poly, inv_sqrt_poly, sup_error, CERTIFICATE_GRID};
use tracebounds::trace::{backend_trace, bias_bound, estimate_tr_f, hutchinson_with_probes, Backend};
use tracebounds::wishart::{
    eig_cdf_experiment, inv_trace_tail_experiment, posterior_decompose, posterior_distribution_test, query_game,
    GameAlgorithm, QueryTranscript,
};
use tracebounds::{ApproxTarget, ChebPoly, RngState, SymMatrix};
use tracebounds_cli::commands::trace::random_spd;

const LATTICE_KAPPAS: [f64; 4] = [2.0, 4.0, 16.0, 64.0];
const LATTICE_DELTAS: [f64; 3] = [0.4, 0.1, 0.01];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn lattice(build: fn(f64, f64) -> Result<ChebPoly, tracebounds::poly::PolyError>, inverse: bool) -> Outcome {
    let mut worst = 0.0_f64;
    for kappa in LATTICE_KAPPAS {
        for delta in LATTICE_DELTAS {
            let target =
                if inverse { ApproxTarget::Inv { kappa, delta } } else { ApproxTarget::InvSqrt { kappa, delta } };
            let p = match build(kappa, delta) {
                Ok(p) => p,
                Err(e) => return outcome(false, format!("κ={kappa} δ={delta}: {e}")),
            };
            let ratio = sup_error(&p, &target, CERTIFICATE_GRID) / target.error_bound();
            if ratio > 1.0 {
                return outcome(false, format!("κ={kappa} δ={delta}: error/bound = {ratio:.4}"));
            }
            worst = worst.max(ratio);
        }
    }
    outcome(true, format!("12 certificates, worst error/bound = {worst:.3}"))
}

fn criterion_1() -> Outcome {
    lattice(inv_sqrt_poly, false)
}

fn criterion_2() -> Outcome {
    lattice(inv_poly, true)
}

fn criterion_3() -> Outcome {
    let mut ratios = Vec::new();
    for kappa in [4.0f64, 16.0, 64.0, 256.0] {
        match inv_poly(kappa, 0.1) {
            Ok(p) => ratios.push(p.degree() as f64 / (kappa.sqrt() * (kappa / 0.1).ln())),
            Err(e) => return outcome(false, format!("κ={kappa}: {e}")),
        }
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    outcome(spread <= 4.0, format!("ratios [{}], spread {spread:.2} (limit 4)", shown.join(", ")))
}

fn criterion_4() -> Outcome {
    let rng = RngState::from_seed(4004);
    let mut worst = 0.0_f64;
    let cheb = inv_poly(4.0, 0.1).expect("certified");
    for k in 0..20u64 {
        let d = 1 + (k as usize % 4);
        let r = rng.child(k);
        let g = sample_gaussian_matrix(d, 1, r.fork(0));
        let spectrum: Vec<f64> = (0..d).map(|i| 1.0 + 3.0 * (0.5 + 0.5 * g[(i, 0)].tanh())).collect();
        let a = random_symmetric_with_spectrum(&spectrum, r.fork(1));
        let signs: Vec<Vec<f64>> =
            (0..1usize << d).map(|m| (0..d).map(|i| if m >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()).collect();
        let backends = [
            Backend::Exact(MatrixFunction::Inv),
            Backend::Lanczos { f: MatrixFunction::Inv, steps: d },
            Backend::Chebyshev(cheb.clone()),
        ];
        for b in &backends {
            let (est, truth) = match (hutchinson_with_probes(&a, b, &signs), backend_trace(&a, b)) {
                (Ok(e), Ok(t)) => (e.value, t),
                (Err(e), _) => return outcome(false, e.to_string()),
                (_, Err(e)) => return outcome(false, e.to_string()),
            };
            let err = (est - truth).abs();
            worst = worst.max(err);
            if err > 1e-10 {
                return outcome(false, format!("matrix {k} (d={d}) {}: error {err:e}", b.descriptor()));
            }
        }
    }
    outcome(true, format!("20 matrices x 3 backends, worst error {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let (kappa, delta, probes) = (16.0, 0.01, 1024);
    let target = ApproxTarget::Inv { kappa, delta };
    let bias = bias_bound(&target, 64).expect("inverse target");
    let rng = RngState::from_seed(5005);
    let mut passed = 0;
    for s in 0..20u64 {
        let a = random_spd(64, kappa, rng.child(s).fork(0));
        let truth = sym_eigen(&a).expect("eigen").trace_fn(|x| 1.0 / x);
        let est = match estimate_tr_f(&a, &target, probes, rng.child(s).fork(1)) {
            Ok(e) => e,
            Err(e) => return outcome(false, e.to_string()),
        };
        if (est.value - truth).abs() <= 3.0 * est.standard_error() + bias {
            passed += 1;
        }
    }
    outcome(passed >= 19, format!("{passed}/20 seeds within 3·stderr + {bias} (need 19)"))
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0_f64;
    for kappa in [4.0f64, 16.0] {
        let family: Vec<ChebPoly> = (0..40).filter_map(|k| inv_poly(kappa, 0.49 * 0.7f64.powi(k)).ok()).collect();
        let target = ApproxTarget::Inv { kappa, delta: 0.49 };
        let d = 64;
        let diag: Vec<f64> = (0..d).map(|i| 1.0 + (kappa - 1.0) * i as f64 / (d - 1) as f64).collect();
        let a = SymMatrix::from_diagonal(&diag);
        let probes = [vec![1.0; d], sample_gaussian_matrix(d, 1, RngState::from_seed(6006)).column(0)];
        for z in &probes {
            for m in 2..=20 {
                let cert = family
                    .iter()
                    .map(|p| sup_error(&p.truncated(m - 1), &target, CERTIFICATE_GRID))
                    .fold(f64::INFINITY, f64::min);
                let fa = match fa_times_vec_lanczos(&a, z, m, MatrixFunction::Inv) {
                    Ok(v) => v,
                    Err(e) => return outcome(false, e.to_string()),
                };
                let err: Vec<f64> = fa.vector.iter().zip(z).zip(&diag).map(|((y, x), l)| x / l - y).collect();
                let ratio = norm2(&err) / (norm2(z) * cert);
                worst = worst.max(ratio);
                if ratio > 1.0 + 1e-6 {
                    return outcome(false, format!("κ={kappa} m={m}: error/(‖z‖·certificate) = {ratio:.4}"));
                }
            }
        }
    }
    outcome(true, format!("κ ∈ {{4, 16}}, m = 2..20, worst error/(‖z‖·certificate) = {worst:.3}"))
}

fn criterion_7() -> Outcome {
    let rng = RngState::from_seed(7007);
    let mut worst_residual = 0.0_f64;
    let mut worst_gap = f64::INFINITY;
    for (k, (d, n)) in [(8usize, 2usize), (12, 4), (16, 8)].into_iter().enumerate() {
        for trial in 0..500u64 {
            let r = rng.fork(k as u64).child(trial);
            let w = sample_wishart(d, r.fork(0));
            let g = sample_gaussian_matrix(d, n, r.fork(1));
            let t = QueryTranscript::observe(&w, (0..n).map(|j| g.column(j)).collect()).expect("transcript");
            let post = match posterior_decompose(&w, &t) {
                Ok(p) => p,
                Err(e) => return outcome(false, format!("(d,n)=({d},{n}) trial {trial}: {e}")),
            };
            let residual = post.block_identity_residual(&w).expect("residual") / w.max_abs();
            let gap = post.interlacing_gap(&w).expect("gap");
            worst_residual = worst_residual.max(residual);
            worst_gap = worst_gap.min(gap);
            if residual > 1e-8 || gap < -1e-10 {
                return outcome(false, format!("(d,n)=({d},{n}) trial {trial}: residual {residual:e}, gap {gap:e}"));
            }
        }
    }
    outcome(true, format!("1500 trials, worst relative residual {worst_residual:.1e}, min gap {worst_gap:.1e}"))
}

fn criterion_8() -> Outcome {
    match posterior_distribution_test(12, 4, 2000, RngState::from_seed(8008)) {
        Ok(r) => outcome(
            r.posterior_matches() && r.control_rejects(),
            format!(
                "trace p = {:.3}, scaled λ_min p = {:.3}, uncorrected control p = {:.1e}",
                r.trace_ks.p_value, r.lambda_min_ks.p_value, r.control_trace_ks.p_value
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_9() -> Outcome {
    let xs = [0.01, 0.04, 0.16, 0.64];
    match eig_cdf_experiment(16, 20_000, &xs, RngState::from_seed(9009)) {
        Ok(t) => {
            let ratio = t.rows[1].probability / t.rows[0].probability;
            let probs: Vec<String> = t.rows.iter().map(|r| format!("{:.4}", r.probability)).collect();
            outcome(
                (1.4..=2.8).contains(&ratio) && t.is_monotone(),
                format!("F̂ = [{}], F̂(0.04)/F̂(0.01) = {ratio:.3}", probs.join(", ")),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_10() -> Outcome {
    let rng = RngState::from_seed(10010);
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, p) in [0.75, 1.0, 2.0].into_iter().enumerate() {
        let mut medians = Vec::new();
        for d in [8usize, 16, 32] {
            match inv_trace_tail_experiment(d, 2000, p, rng.fork(i as u64).child(d as u64)) {
                Ok(r) => medians.push(r.median()),
                Err(e) => return outcome(false, e.to_string()),
            }
        }
        let spread =
            medians.iter().cloned().fold(0.0, f64::max) / medians.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= spread <= 4.0;
        parts.push(format!("p={p}: spread {spread:.2}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_11() -> Outcome {
    let rng = RngState::from_seed(11011);
    let d = 64;
    let games = [
        ("exact n=d", GameAlgorithm::ExactRecovery, d, 50),
        ("hk n=d/8", GameAlgorithm::hutchinson_krylov_for_budget(d, d / 8), d / 8, 200),
        ("hk n=4d", GameAlgorithm::hutchinson_krylov_for_budget(d, 4 * d), 4 * d, 200),
    ];
    let mut rates = Vec::new();
    for (i, (name, algorithm, budget, trials)) in games.into_iter().enumerate() {
        match query_game(d, 1.0, 2.0, algorithm, budget, trials, rng.fork(i as u64)) {
            Ok(r) => {
                if r.violations > 0 || r.max_queries_used() > budget {
                    return outcome(false, format!("{name}: meter exceeded"));
                }
                rates.push((name, r.success_rate()));
            }
            Err(e) => return outcome(false, format!("{name}: {e}")),
        }
    }
    let pass = rates[0].1 == 1.0 && rates[2].1 > rates[1].1;
    let shown: Vec<String> = rates.iter().map(|(n, r)| format!("{n}: {r:.3}")).collect();
    outcome(pass, format!("{}; no budget violations", shown.join(", ")))
}

fn criterion_12() -> Outcome {
    let runs: [&[&str]; 5] = [
        &["wishart", "eigcdf", "--d", "16", "--trials", "20000", "--seed", "7"],
        &["wishart", "lmax", "--d", "16", "--trials", "10000", "--seed", "7"],
        &["wishart", "invtrace", "--d", "16", "--trials", "2000", "--p", "0.75", "--seed", "7"],
        &["wishart", "posterior", "--d", "12", "--n", "4", "--trials", "2000", "--seed", "7"],
        &["wishart", "game", "--d", "32", "--budget", "64", "--algo", "hk", "--trials", "100", "--seed", "7"],
    ];
    for args in runs {
        let run = || Command::new(env!("CARGO_BIN_EXE_tracebounds")).args(args).output().expect("binary runs");
        let (a, b) = (run(), run());
        if !a.status.success() || !b.status.success() {
            return outcome(false, format!("{} exited with {:?}", args[1], a.status.code()));
        }
        if a.stdout != b.stdout {
            return outcome(false, format!("{} output differs between runs", args[1]));
        }
    }
    outcome(true, "eigcdf, lmax, invtrace, posterior, game: byte-identical CSV on repeat")
}

fn main() -> ExitCode {
    type Criterion = fn() -> Outcome;
    let criteria: [(&str, Criterion, u64); 12] = [
        ("inverse square root certificates", criterion_1, 10),
        ("inverse certificates", criterion_2, 10),
        ("degree scaling", criterion_3, 30),
        ("exhaustive Hutchinson exactness", criterion_4, 5),
        ("trace pipeline end to end", criterion_5, 60),
        ("Krylov-polynomial equivalence", criterion_6, 30),
        ("posterior block identity and interlacing", criterion_7, 60),
        ("posterior distribution", criterion_8, 300),
        ("λ_min CDF scaling", criterion_9, 180),
        ("inverse-trace collapse", criterion_10, 300),
        ("query game sanity", criterion_11, 600),
        ("determinism", criterion_12, 600),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(limit) {
            result.pass = false;
            result.detail.push_str(&format!("; exceeded {limit} s"));
        }
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {name}: {} ({:.2} s)", i + 1, result.detail, elapsed.as_secs_f64());
        if !result.pass {
            failures += 1;
        }
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
