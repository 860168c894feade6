use std::sync::OnceLock;

use proptest::prelude::*;
use tracebounds::krylov::{fa_times_vec_lanczos, poly_times_vec, MatrixFunction};
use tracebounds::linalg::{norm2, random_symmetric_with_spectrum, sample_gaussian_matrix};
use tracebounds::poly::{inv_poly, sup_error, CERTIFICATE_GRID};
use tracebounds::{ApproxTarget, ChebPoly, RngState, SymMatrix};

/// Inverse approximants on `[1, κ]` over a sweep of accuracies.
fn inverse_family(kappa: f64) -> &'static [ChebPoly] {
    static SMALL: OnceLock<Vec<ChebPoly>> = OnceLock::new();
    static LARGE: OnceLock<Vec<ChebPoly>> = OnceLock::new();
    let cell = if kappa == 4.0 { &SMALL } else { &LARGE };
    cell.get_or_init(|| (0..40).filter_map(|k| inv_poly(kappa, 0.49 * 0.7f64.powi(k)).ok()).collect())
}

/// Smallest certified sup-error of a degree-`deg` inverse approximant.
fn best_certificate(kappa: f64, deg: usize) -> f64 {
    let target = ApproxTarget::Inv { kappa, delta: 0.49 };
    let interpolant = ChebPoly::interpolate(1.0, kappa, deg, |x| 1.0 / x).unwrap();
    inverse_family(kappa)
        .iter()
        .map(|p| p.truncated(deg))
        .chain(std::iter::once(interpolant))
        .map(|p| sup_error(&p, &target, CERTIFICATE_GRID))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lanczos_within_polynomial_certificate(
        use_large in any::<bool>(),
        d in 24usize..=64,
        seed in any::<u64>(),
    ) {
        let kappa = if use_large { 16.0 } else { 4.0 };
        let rng = RngState::from_seed(seed);
        let g = sample_gaussian_matrix(d + 1, 1, rng);
        let mut diag: Vec<f64> = (0..d).map(|i| 1.0 + (kappa - 1.0) * (g[(i, 0)].tanh() * 0.5 + 0.5)).collect();
        diag[0] = 1.0;
        diag[d - 1] = kappa;
        let a = SymMatrix::from_diagonal(&diag);
        let z = sample_gaussian_matrix(d, 1, rng.fork(1)).column(0);
        let exact: Vec<f64> = z.iter().zip(&diag).map(|(x, l)| x / l).collect();
        for m in 2..=20 {
            let fa = fa_times_vec_lanczos(&a, &z, m, MatrixFunction::Inv).unwrap();
            let err: Vec<f64> = exact.iter().zip(&fa.vector).map(|(x, y)| x - y).collect();
            let bound = norm2(&z) * best_certificate(kappa, m - 1) * (1.0 + 1e-6);
            prop_assert!(norm2(&err) <= bound, "κ={} m={}: {} > {}", kappa, m, norm2(&err), bound);
        }
    }

    #[test]
    fn mvp_ledger(d in 4usize..=40, seed in any::<u64>(), deg in 0usize..30) {
        let rng = RngState::from_seed(seed);
        let spectrum: Vec<f64> = (0..d).map(|i| 1.0 + 3.0 * i as f64 / d as f64).collect();
        let a = random_symmetric_with_spectrum(&spectrum, rng);
        let z = sample_gaussian_matrix(d, 1, rng.fork(1)).column(0);
        let m = 1 + (seed as usize % d);
        let fa = fa_times_vec_lanczos(&a, &z, m, MatrixFunction::InvSqrt).unwrap();
        prop_assert_eq!(fa.mvp_count, m);
        let p = ChebPoly::interpolate(1.0, 4.0, deg, |x| x.sqrt()).unwrap();
        prop_assert_eq!(poly_times_vec(&a, &p, &z).unwrap().mvp_count, p.degree());
    }

    #[test]
    fn exact_at_saturation(d in 2usize..=24, seed in any::<u64>()) {
        let rng = RngState::from_seed(seed);
        let spectrum: Vec<f64> = (0..d).map(|i| 1.0 + 15.0 * i as f64 / (d - 1) as f64).collect();
        let a = random_symmetric_with_spectrum(&spectrum, rng);
        let z = sample_gaussian_matrix(d, 1, rng.fork(1)).column(0);
        let eig = tracebounds::linalg::sym_eigen(&a).unwrap();
        for f in [MatrixFunction::Inv, MatrixFunction::InvSqrt, MatrixFunction::Exp] {
            let exact = eig.apply_fn(|x| f.eval(x), &z);
            let fa = fa_times_vec_lanczos(&a, &z, d, f).unwrap();
            let err: Vec<f64> = exact.iter().zip(&fa.vector).map(|(x, y)| x - y).collect();
            prop_assert!(norm2(&err) <= 1e-6 * norm2(&exact));
        }
    }
}
