//! Invariant suite on small seeded instances.

use tracebounds::krylov::{fa_times_vec_lanczos, poly_times_vec, MatrixFunction};
use tracebounds::linalg::{
    cholesky, norm2, random_symmetric_with_spectrum, sample_gaussian_matrix, sample_wishart, sym_eigen,
};
use tracebounds::poly::{inv_poly, inv_sqrt_poly, monomial_cheb_approx, sup_error, CERTIFICATE_GRID};
use tracebounds::trace::{backend_trace, hutchinson, hutchinson_with_probes, Backend, ProbeSpec};
use tracebounds::wishart::{eig_cdf_experiment, posterior_decompose, query_game, GameAlgorithm, QueryTranscript};
use tracebounds::{ApproxTarget, ChebPoly, Matrix, RngState, SymMatrix};

use crate::args::VerifyArgs;
use crate::error::CliError;

type Check = fn(RngState) -> Result<(), String>;

const CHECKS: [(&str, Check); 9] = [
    ("eigendecomposition reconstructs", eigen_reconstruction),
    ("cholesky round trip", cholesky_round_trip),
    ("polynomial certificates", certificates),
    ("monomial compression", monomials),
    ("lanczos within polynomial certificate", krylov_equivalence),
    ("matrix-vector product ledger", ledger),
    ("exhaustive hutchinson is exact", exhaustive_hutchinson),
    ("posterior block identity and interlacing", posterior),
    ("metering and monotone cdf", metering_and_cdf),
];

pub fn run(args: VerifyArgs) -> Result<(), CliError> {
    let rng = RngState::from_seed(args.seed);
    let mut failed = Vec::new();
    for (i, (name, check)) in CHECKS.iter().enumerate() {
        match check(rng.fork(i as u64)) {
            Ok(()) => println!("[PASS] {name}"),
            Err(why) => {
                println!("[FAIL] {name}: {why}");
                failed.push(*name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spd(d: usize, kappa: f64, rng: RngState) -> SymMatrix {
    let spectrum: Vec<f64> = (0..d).map(|i| 1.0 + (kappa - 1.0) * i as f64 / (d.max(2) - 1) as f64).collect();
    random_symmetric_with_spectrum(&spectrum, rng)
}

fn eigen_reconstruction(rng: RngState) -> Result<(), String> {
    for (k, d) in [1usize, 2, 5, 17, 40].into_iter().enumerate() {
        let g = sample_gaussian_matrix(d, d, rng.child(k as u64));
        let (a, _) = SymMatrix::symmetrized(&g).map_err(|e| e.to_string())?;
        let eig = sym_eigen(&a).map_err(|e| e.to_string())?;
        let r = a.as_matrix().sub(&eig.reconstruct()).map_err(|e| e.to_string())?.max_abs();
        ensure(r <= 1e-8 * a.max_abs().max(1e-12) * d as f64, || format!("d={d}: residual {r:e}"))?;
    }
    Ok(())
}

fn cholesky_round_trip(rng: RngState) -> Result<(), String> {
    for d in 1..=8 {
        let g = sample_gaussian_matrix(d, d, rng.child(d as u64));
        let mut l = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..i {
                l[(i, j)] = g[(i, j)];
            }
            l[(i, i)] = 0.5 + g[(i, i)].abs();
        }
        let (a, _) = SymMatrix::symmetrized(&l.matmul(&l.transpose()).unwrap()).map_err(|e| e.to_string())?;
        let back = cholesky(&a).map_err(|e| e.to_string())?;
        let r = back.sub(&l).unwrap().max_abs();
        ensure(r <= 1e-10 * l.max_abs().max(1.0), || format!("d={d}: {r:e}"))?;
    }
    Ok(())
}

fn certificates(_: RngState) -> Result<(), String> {
    for kappa in [2.0, 4.0, 16.0, 64.0] {
        for delta in [0.4, 0.1, 0.01] {
            let p = inv_sqrt_poly(kappa, delta).map_err(|e| e.to_string())?;
            let t = ApproxTarget::InvSqrt { kappa, delta };
            let e = sup_error(&p, &t, CERTIFICATE_GRID);
            ensure(e <= t.error_bound(), || format!("inv_sqrt κ={kappa} δ={delta}: {e:e}"))?;
            let p = inv_poly(kappa, delta).map_err(|e| e.to_string())?;
            let t = ApproxTarget::Inv { kappa, delta };
            let e = sup_error(&p, &t, CERTIFICATE_GRID);
            ensure(e <= t.error_bound(), || format!("inv κ={kappa} δ={delta}: {e:e}"))?;
        }
    }
    Ok(())
}

fn monomials(_: RngState) -> Result<(), String> {
    for s in (1..=12).chain([25, 50]) {
        for delta in [0.1, 0.01] {
            let p = monomial_cheb_approx(s, delta).map_err(|e| e.to_string())?;
            let e = sup_error(&p, &ApproxTarget::Monomial { s, delta }, CERTIFICATE_GRID);
            ensure(e <= delta, || format!("s={s} δ={delta}: {e:e}"))?;
        }
    }
    Ok(())
}

fn krylov_equivalence(rng: RngState) -> Result<(), String> {
    for kappa in [4.0, 16.0] {
        let d = 48;
        let diag: Vec<f64> = (0..d).map(|i| 1.0 + (kappa - 1.0) * i as f64 / (d - 1) as f64).collect();
        let a = SymMatrix::from_diagonal(&diag);
        let z = sample_gaussian_matrix(d, 1, rng).column(0);
        let target = ApproxTarget::Inv { kappa, delta: 0.49 };
        for m in 2..=20 {
            let fa = fa_times_vec_lanczos(&a, &z, m, MatrixFunction::Inv).map_err(|e| e.to_string())?;
            let err: Vec<f64> = fa.vector.iter().zip(&z).zip(&diag).map(|((y, x), l)| x / l - y).collect();
            let p = ChebPoly::interpolate(1.0, kappa, m - 1, |x| 1.0 / x).map_err(|e| e.to_string())?;
            let bound = norm2(&z) * sup_error(&p, &target, CERTIFICATE_GRID) * (1.0 + 1e-6);
            ensure(norm2(&err) <= bound, || format!("κ={kappa} m={m}: {:e} > {bound:e}", norm2(&err)))?;
        }
    }
    Ok(())
}

fn ledger(rng: RngState) -> Result<(), String> {
    let a = spd(20, 8.0, rng);
    let spec = ProbeSpec::rademacher(7, rng.fork(1));
    let est =
        hutchinson(&a, &Backend::Lanczos { f: MatrixFunction::Inv, steps: 5 }, &spec).map_err(|e| e.to_string())?;
    ensure(est.mvp_count == 35, || format!("lanczos ledger {}", est.mvp_count))?;
    let p = inv_poly(8.0, 0.1).map_err(|e| e.to_string())?;
    let deg = p.degree();
    let z = vec![1.0; 20];
    let pz = poly_times_vec(&a, &p, &z).map_err(|e| e.to_string())?;
    ensure(pz.mvp_count == deg, || format!("poly ledger {} vs degree {deg}", pz.mvp_count))?;
    let est = hutchinson(&a, &Backend::Chebyshev(p), &spec).map_err(|e| e.to_string())?;
    ensure(est.mvp_count == 7 * deg, || format!("cheb ledger {}", est.mvp_count))
}

fn exhaustive_hutchinson(rng: RngState) -> Result<(), String> {
    for d in 1..=4 {
        let a = spd(d, 4.0, rng.child(d as u64));
        let signs: Vec<Vec<f64>> =
            (0..1usize << d).map(|m| (0..d).map(|i| if m >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()).collect();
        let backends = [
            Backend::Exact(MatrixFunction::Inv),
            Backend::Lanczos { f: MatrixFunction::Inv, steps: d },
            Backend::Chebyshev(inv_poly(4.0, 0.1).map_err(|e| e.to_string())?),
        ];
        for b in &backends {
            let est = hutchinson_with_probes(&a, b, &signs).map_err(|e| e.to_string())?;
            let truth = backend_trace(&a, b).map_err(|e| e.to_string())?;
            ensure((est.value - truth).abs() <= 1e-10 * truth.abs().max(1.0), || {
                format!("d={d} {}: {} vs {truth}", b.descriptor(), est.value)
            })?;
        }
    }
    Ok(())
}

fn posterior(rng: RngState) -> Result<(), String> {
    for (k, (d, n)) in [(8usize, 2usize), (12, 4), (16, 8)].into_iter().enumerate() {
        for trial in 0..20u64 {
            let r = rng.fork(k as u64).child(trial);
            let w = sample_wishart(d, r.fork(0));
            let g = sample_gaussian_matrix(d, n, r.fork(1));
            let t = QueryTranscript::observe(&w, (0..n).map(|j| g.column(j)).collect()).map_err(|e| e.to_string())?;
            let post = posterior_decompose(&w, &t).map_err(|e| e.to_string())?;
            let res = post.block_identity_residual(&w).map_err(|e| e.to_string())?;
            ensure(res <= 1e-8 * w.max_abs(), || format!("(d,n)=({d},{n}): residual {res:e}"))?;
            let gap = post.interlacing_gap(&w).map_err(|e| e.to_string())?;
            ensure(gap >= -1e-10, || format!("(d,n)=({d},{n}): interlacing gap {gap:e}"))?;
        }
    }
    Ok(())
}

fn metering_and_cdf(rng: RngState) -> Result<(), String> {
    for budget in [1, 5, 16, 40] {
        let res = query_game(16, 1.0, 2.0, GameAlgorithm::hutchinson_krylov_for_budget(16, budget), budget, 10, rng)
            .map_err(|e| e.to_string())?;
        ensure(res.violations == 0 && res.max_queries_used() <= budget, || format!("budget {budget} exceeded"))?;
    }
    let table =
        eig_cdf_experiment(8, 2000, &[0.0, 0.01, 0.04, 0.16, 0.64, 1.0], rng.fork(1)).map_err(|e| e.to_string())?;
    ensure(table.is_monotone(), || "empirical CDF not monotone".into())
}
