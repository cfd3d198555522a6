//! Random instances and property checks shared by the property suite and the
//! acceptance runner. Each check returns `Err` with a description on failure.

#![allow(dead_code)]

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ptsm::linalg::{spectral_radius, sym_power};
use ptsm::macromodels::dmp::DmpCalibration;
use ptsm::macromodels::fg::nk_forward_guidance;
use ptsm::macromodels::nk::{basis_map, NkCalibration, NkEquilibrium};
use ptsm::pseudotrue::{omega_lambda_max, omega_matrix, reaction_report};
use ptsm::ssm::{mse_w, predictive_variance, riccati_residual, subjective_moments};
use ptsm::*;

pub type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn pd_matrix(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let l = normal_matrix(rng, n, n);
    &l * l.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

/// Latent VAR with a dense transition of spectral radius in `[0.3, 0.9]`.
pub fn random_process(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LatentVarProcess {
    let mut f = normal_matrix(rng, m, m);
    let target = rng.random_range(0.3..0.9);
    f *= target / spectral_radius(&f);
    let h = normal_matrix(rng, m, n);
    let sigma = pd_matrix(rng, m, 0.1);
    LatentVarProcess::new(f, h, sigma).expect("random process")
}

/// Latent VAR with independent AR(1) factors, so every `Gamma_l` is symmetric.
pub fn random_diagonal_process(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LatentVarProcess {
    let alphas = distinct_persistences(rng, m);
    let f = DMatrix::from_diagonal(&DVector::from_vec(alphas));
    let h = normal_matrix(rng, m, n);
    let sigma = DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| rng.random_range(0.2..1.0)));
    LatentVarProcess::new(f, h, sigma).expect("random diagonal process")
}

/// Persistences in `(-0.6, 0.95)` at least 0.1 apart in magnitude.
pub fn distinct_persistences(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-0.6..0.95)).collect();
        let ok = (0..m).all(|i| (0..i).all(|j| (v[i].abs() - v[j].abs()).abs() > 0.1));
        if ok {
            return v;
        }
    }
}

pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let t = normal_matrix(rng, n, n);
        let sv = t.clone().svd(false, false).singular_values;
        if sv.min() > 0.05 * sv.max() {
            return t;
        }
    }
}

/// Stable `d`-state model with full-rank noise.
pub fn random_model(rng: &mut ChaCha8Rng, d: usize, n: usize) -> StateSpaceModel {
    let mut a = normal_matrix(rng, d, d);
    let target = rng.random_range(0.2..0.9);
    a *= target / spectral_radius(&a);
    let b = normal_matrix(rng, d, n);
    StateSpaceModel::new(a, b, pd_matrix(rng, d, 0.1), pd_matrix(rng, n, 0.1)).expect("random model")
}

pub fn scalar_two_factor(alphas: (f64, f64), shares: (f64, f64)) -> AutocovSeq {
    let p = LatentVarProcess::new(
        DMatrix::from_diagonal(&DVector::from_vec(vec![alphas.0, alphas.1])),
        DMatrix::from_element(2, 1, 1.0),
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            shares.0 * (1.0 - alphas.0 * alphas.0),
            shares.1 * (1.0 - alphas.1 * alphas.1),
        ])),
    )
    .expect("two-factor process");
    autocov_from_var(&p, 200).expect("two-factor autocovariances")
}

/// Two independent ARMA(1,1) observables written as a four-state VAR.
pub fn two_arma(phi: [f64; 2], theta: [f64; 2]) -> AutocovSeq {
    let mut f = DMatrix::zeros(4, 4);
    let mut h = DMatrix::zeros(4, 2);
    let mut sigma = DMatrix::zeros(4, 4);
    for i in 0..2 {
        f[(2 * i, 2 * i)] = phi[i];
        f[(2 * i, 2 * i + 1)] = theta[i];
        h[(2 * i, i)] = 1.0;
        for r in 0..2 {
            for c in 0..2 {
                sigma[(2 * i + r, 2 * i + c)] = 1.0;
            }
        }
    }
    let p = LatentVarProcess::new(f, h, sigma).expect("ARMA process");
    autocov_from_var(&p, 200).expect("ARMA autocovariances")
}

pub fn arma_lag_one(phi: f64, theta: f64) -> f64 {
    (phi + theta) * (1.0 + phi * theta) / (1.0 + 2.0 * phi * theta + theta * theta)
}

/// The NK preset and its equilibrium, solved once per test binary.
pub fn nk_fixture() -> &'static (NkCalibration, NkEquilibrium) {
    static CELL: OnceLock<(NkCalibration, NkEquilibrium)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cal = ptsm::presets::nk_paper();
        let eq = solve_nk(&cal).expect("NK preset equilibrium");
        (cal, eq)
    })
}

/// Autocovariances of `f = (x, pi, i)` at the NK fixed point.
pub fn nk_f_autocov(eq: &NkEquilibrium) -> AutocovSeq {
    eq.shocks.autocov_of(&basis_map(&eq.loadings))
}

fn rel_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).amax() / y.amax().max(1.0)
}

// ---------------------------------------------------------------- procspec

pub fn check_autocorr_radii(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 3, 4), 40).map_err(|e| e.to_string())?;
    let acs = autocorr(&acv).map_err(|e| e.to_string())?;
    let rho1 = spectral_radius(&acs.cs[0]);
    ensure!(rho1 < 1.0, "rho(C_1) = {rho1}");
    for (l, c) in acs.cs.iter().enumerate() {
        let rho = spectral_radius(c);
        ensure!(rho <= 1.0 + 1e-12, "rho(C_{}) = {rho}", l + 1);
    }
    Ok(())
}

pub fn check_decomposition_reconstructs(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 3, 4), 5).map_err(|e| e.to_string())?;
    let dec = decompose_persistence(&acv).map_err(|e| e.to_string())?;
    for _ in 0..100 {
        let y = DVector::from_fn(3, |_, _| r.sample::<f64, _>(StandardNormal) * 10.0);
        let err = (dec.reconstruct(&y) - &y).norm();
        ensure!(err < 1e-9 * y.norm(), "reconstruction error {err:.3e} for |y| = {:.3}", y.norm());
    }
    Ok(())
}

pub fn check_transform_keeps_radii(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 3, 4), 20).map_err(|e| e.to_string())?;
    let t = random_invertible(&mut r, 3);
    let moved = transform_process(&acv, &t).map_err(|e| e.to_string())?;
    let (c0, c1) = (autocorr(&acv).unwrap(), autocorr(&moved).unwrap());
    for l in 0..c0.cs.len() {
        let (x, y) = (spectral_radius(&c0.cs[l]), spectral_radius(&c1.cs[l]));
        ensure!((x - y).abs() < 1e-9, "lag {}: {x} vs {y}", l + 1);
    }
    Ok(())
}

/// Batch-means standard error of the time average of `series`.
pub fn batch_se(series: &[f64], batches: usize) -> f64 {
    let len = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Sample cross products `x_{t,i} x_{t-l,j}` of a zero-mean path.
pub fn lag_products(path: &DMatrix<f64>, l: usize, i: usize, j: usize) -> Vec<f64> {
    (l..path.nrows()).map(|t| path[(t, i)] * path[(t - l, j)]).collect()
}

/// Population versus sample autocovariances of a simulated path, lags `0..=lags`.
/// Returns the largest deviation measured in standard errors.
pub fn max_z_score(law: &LinearLaw, pop: impl Fn(usize) -> DMatrix<f64>, periods: usize, seed: u64, lags: usize) -> std::result::Result<f64, String> {
    let path = simulate(law, periods, seed).map_err(|e| e.to_string())?;
    let k = path.ncols();
    let mut worst: f64 = 0.0;
    for l in 0..=lags {
        let g = pop(l);
        for i in 0..k {
            for j in 0..k {
                let prods = lag_products(&path, l, i, j);
                let mean = prods.iter().sum::<f64>() / prods.len() as f64;
                let se = batch_se(&prods, 100);
                worst = worst.max((mean - g[(i, j)]).abs() / se);
            }
        }
    }
    Ok(worst)
}

pub fn check_monte_carlo_autocov(seed: u64) -> Check {
    let mut r = rng(seed);
    let p = random_process(&mut r, 2, 3);
    let acv = autocov_from_var(&p, 3).map_err(|e| e.to_string())?;
    let law = LinearLaw::new(p.f.clone(), p.sigma.clone(), p.h.transpose(), vec!["y1".into(), "y2".into()])
        .map_err(|e| e.to_string())?;
    let z = max_z_score(&law, |l| acv.gammas[l].clone(), 1_000_000, seed, 3)?;
    ensure!(z < 3.0, "largest deviation {z:.2} standard errors");
    Ok(())
}

// --------------------------------------------------------------------- ssm

pub fn check_filter_identities(seed: u64) -> Check {
    let mut r = rng(seed);
    let d = 1 + (seed % 3) as usize;
    let m = random_model(&mut r, d, 3);
    let filt = solve_riccati(&m).map_err(|e| e.to_string())?;
    let res = riccati_residual(&m, &filt);
    ensure!(res < 1e-10, "Riccati residual {res:.3e}");
    let sb = &filt.sigma_z * &m.b;
    let gain = &m.a * &sb * filt.sigma_y.clone().try_inverse().ok_or("singular predictive variance")?;
    let gerr = (&gain - &filt.gain).amax();
    ensure!(gerr < 1e-10, "gain identity error {gerr:.3e}");
    let rho = spectral_radius(&(&m.a - &filt.gain * m.b.transpose()));
    ensure!(rho < 1.0, "closed loop radius {rho}");
    Ok(())
}

pub fn check_kldr_nonnegative(seed: u64) -> Check {
    let mut r = rng(seed);
    let truth = autocov_from_var(&random_process(&mut r, 2, 3), 200).map_err(|e| e.to_string())?;
    let d = 1 + (seed % 2) as usize;
    let m = random_model(&mut r, d, 2);
    let k = kldr(&m, &truth, KldrMode::ExactGaussian).map_err(|e| e.to_string())?;
    ensure!(k >= -1e-9, "negative divergence {k}");
    Ok(())
}

pub fn check_correct_specification(seed: u64, d: usize) -> Check {
    let mut r = rng(seed);
    let m = random_model(&mut r, d, 3);
    let truth = subjective_moments(&m, 300).map_err(|e| e.to_string())?;
    let k = kldr(&m, &truth, KldrMode::ExactGaussian).map_err(|e| e.to_string())?;
    ensure!(k.abs() < 1e-8, "d = {d}: divergence of the true model is {k:.3e}");
    Ok(())
}

// -------------------------------------------------------------- pseudotrue

pub fn check_linear_invariance(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 3, 4), 200).map_err(|e| e.to_string())?;
    let t = random_invertible(&mut r, 3);
    let moved = transform_process(&acv, &t).map_err(|e| e.to_string())?;
    let s0 = solve_one_state_general(&acv).map_err(|e| e.to_string())?;
    let s1 = solve_one_state_general(&moved).map_err(|e| e.to_string())?;
    let drift = (s0.a - s1.a).abs().max((s0.eta - s1.eta).abs()).max((s0.lambda_max - s1.lambda_max).abs());
    ensure!(drift < 1e-7, "(a, eta, lambda) drift {drift:.3e}: {:?} vs {:?}", (s0.a, s0.eta), (s1.a, s1.eta));
    let ti = t.clone().try_inverse().ok_or("singular transform")?;
    let want = &t * &s0.q * s0.p.transpose() * &ti;
    let got = &s1.q * s1.p.transpose();
    let err = rel_diff(&got, &want);
    ensure!(err < 1e-7, "forecast operator differs by {err:.3e}");
    Ok(())
}

pub fn check_variance_matching(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 3, 4), 200).map_err(|e| e.to_string())?;
    let sol = solve_one_state(&acv).map_err(|e| e.to_string())?;
    let model = to_state_space(&sol, &acv.gammas[0]).map_err(|e| e.to_string())?;
    let implied = subjective_moments(&model, 0).map_err(|e| e.to_string())?;
    let err = rel_diff(&implied.gammas[0], &acv.gammas[0]);
    ensure!(err < 1e-8, "subjective Gamma_0 differs by {err:.3e}");
    ensure!(sol.a.abs() <= 1.0 - 1e-8 || sol.eta == 1.0, "|a| = {}", sol.a.abs());
    Ok(())
}

pub fn check_mio_variance_matching(seed: u64, d: usize) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_diagonal_process(&mut r, 3, 3), 50).map_err(|e| e.to_string())?;
    let sol = solve_mio_d_state(&acv, d).map_err(|e| e.to_string())?;
    let model = ptsm::pseudotrue::SubjectiveModel::state_space(&sol, &acv.gammas[0]).map_err(|e| e.to_string())?;
    let implied = subjective_moments(&model, 0).map_err(|e| e.to_string())?;
    let err = rel_diff(&implied.gammas[0], &acv.gammas[0]);
    ensure!(err < 1e-8, "d = {d}: subjective Gamma_0 differs by {err:.3e}");
    Ok(())
}

pub fn check_exp_ergodic_consistency(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 2, 3), 200).map_err(|e| e.to_string())?;
    let rep = check_exponential_ergodicity(&autocorr(&acv).unwrap());
    if !rep.is_exp_ergodic {
        return Ok(());
    }
    let closed = solve_one_state_exp_erg(&acv).map_err(|e| e.to_string())?;
    let general = solve_one_state_general(&acv).map_err(|e| e.to_string())?;
    ensure!(closed.eta == 0.0, "closed form eta = {}", closed.eta);
    let gap = (closed.a - general.a).abs().max((closed.eta - general.eta).abs());
    ensure!(gap < 1e-6, "closed form {:?} vs general {:?}", (closed.a, closed.eta), (general.a, general.eta));
    Ok(())
}

pub fn check_optimality_certificate(seed: u64) -> Check {
    let mut r = rng(seed);
    let acv = autocov_from_var(&random_process(&mut r, 2, 3), 200).map_err(|e| e.to_string())?;
    let sol = solve_one_state_general(&acv).map_err(|e| e.to_string())?;
    let acs = autocorr(&acv).unwrap();
    let scan = ptsm::pseudotrue::scan_omega(&acs, 401, 201);
    let best = scan.values.max();
    ensure!(sol.lambda_max >= best - 1e-9, "solver value {} below grid value {best}", sol.lambda_max);
    Ok(())
}

pub fn check_two_factor_noise(seed: u64) -> Check {
    let mut r = rng(seed);
    let a1 = r.random_range(0.3..0.95);
    let a2 = r.random_range(-0.8..(a1 - 0.2));
    let w = r.random_range(0.2..0.8);
    let acv = scalar_two_factor((a1, a2), (w, 1.0 - w));
    let sol = solve_one_state(&acv).map_err(|e| e.to_string())?;
    ensure!(
        sol.eta > 0.001 && sol.eta < 0.999,
        "alphas ({a1:.3}, {a2:.3}), share {w:.3}: eta = {}",
        sol.eta
    );
    ensure!(sol.a.abs() < 1.0, "a = {}", sol.a);
    Ok(())
}

pub fn check_arma_pair_reactions() -> Check {
    let (phi, theta) = ([0.9, 0.5], [0.3, 0.3]);
    let acv = two_arma(phi, theta);
    let sol = solve_one_state(&acv).map_err(|e| e.to_string())?;
    let rows = reaction_report(&sol, &acv, 20).map_err(|e| e.to_string())?;
    let first = arma_lag_one(phi[0], theta[0]);
    for row in &rows {
        match row.component {
            1 => {
                let truth = first * phi[0].powi(row.lag as i32 - 1);
                ensure!((row.true_autocorr - truth).abs() < 1e-10, "lag {}: true autocorr {}", row.lag, row.true_autocorr);
                ensure!(
                    row.subjective_autocorr >= row.true_autocorr - 1e-12,
                    "lag {}: subjective {} below true {}",
                    row.lag,
                    row.subjective_autocorr,
                    row.true_autocorr
                );
            }
            _ => ensure!(row.subjective_autocorr.abs() < 1e-12, "lag {}: last component subjective {}", row.lag, row.subjective_autocorr),
        }
    }
    Ok(())
}

/// Singular values of the action matrix beyond `d`, relative to the largest.
pub fn comovement_tail(seed: u64, d: usize) -> std::result::Result<(f64, f64), String> {
    let mut r = rng(seed);
    let p = random_diagonal_process(&mut r, 3, 3);
    let acv = autocov_from_var(&p, 50).map_err(|e| e.to_string())?;
    let model = solve_mio_d_state(&acv, d).map_err(|e| e.to_string())?;
    let beta = 0.95;
    let mut weights = DMatrix::zeros(5, 3);
    for j in 0..5 {
        let c = DVector::from_fn(3, |_, _| r.sample::<f64, _>(StandardNormal));
        let mut row = DMatrix::zeros(1, 3);
        let mut disc = beta;
        for s in 1..2000 {
            row += c.transpose() * model.forecast(s) * disc;
            disc *= beta;
        }
        weights.set_row(j, &row.row(0));
    }
    let law = LinearLaw::new(p.f.clone(), p.sigma.clone(), p.h.transpose(), vec!["y1".into(), "y2".into(), "y3".into()])
        .map_err(|e| e.to_string())?;
    let y = simulate(&law, 10_000, seed).map_err(|e| e.to_string())?;
    let actions = y * weights.transpose();
    let sv = actions.svd(false, false).singular_values;
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok((sv[d] / sv[0], sv[d - 1] / sv[0]))
}

pub fn check_comovement_rank(seed: u64, d: usize) -> Check {
    let (tail, last) = comovement_tail(seed, d)?;
    ensure!(tail < 1e-8, "d = {d}: singular value beyond d is {tail:.3e} of the top");
    ensure!(last > 1e-6, "d = {d}: rank below d ({last:.3e})");
    Ok(())
}

/// One-state model at `(a, eta)` with the best attention direction.
pub fn grid_model(acs: &AutocorrSeq, g0: &DMatrix<f64>, a: f64, eta: f64) -> Option<StateSpaceModel> {
    let om = omega_matrix(acs, a, eta);
    let eig = om.symmetric_eigen();
    let i = eig.eigenvalues.imax();
    let u = eig.eigenvectors.column(i).into_owned();
    let sol = OneStatePseudoTrue {
        a,
        eta,
        p: sym_power(g0, -0.5) * &u,
        q: sym_power(g0, 0.5) * &u,
        lambda_max: eig.eigenvalues[i],
        paired_root: false,
    };
    to_state_space(&sol, g0).ok()
}

/// KLDR ranking versus objective ranking, and MSE/KLDR argmin agreement,
/// on a 41 x 21 grid for the NK fixture.
pub fn check_grid_rankings() -> Check {
    let (_, eq) = nk_fixture();
    let acv = nk_f_autocov(eq);
    let acs = autocorr(&acv).map_err(|e| e.to_string())?;
    let g0 = &acv.gammas[0];
    let sol = &eq.solution;
    let star = to_state_space(sol, g0).map_err(|e| e.to_string())?;
    let w = predictive_variance(&star).map_err(|e| e.to_string())?.try_inverse().ok_or("singular predictive variance")?;
    let mse_star = mse_w(&star, &acv, &w).map_err(|e| e.to_string())?;
    let k_star = kldr(&star, &acv, KldrMode::Relative).map_err(|e| e.to_string())?;
    let mut pts: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
    for i in 0..41 {
        let a = -0.95 + 1.9 * i as f64 / 40.0;
        for j in 0..21 {
            let eta = 0.95 * j as f64 / 20.0;
            if let Some(m) = grid_model(&acs, g0, a, eta) {
                let lam = omega_lambda_max(&acs, a, eta);
                let k = kldr(&m, &acv, KldrMode::Relative).map_err(|e| e.to_string())?;
                let e = mse_w(&m, &acv, &w).map_err(|e| e.to_string())?;
                pts.push((a, eta, lam, k, e));
            }
        }
    }
    ensure!(pts.len() > 41 * 21 / 2, "only {} grid models were constructible", pts.len());
    for x in &pts {
        for y in &pts {
            if x.2 > y.2 + 1e-9 {
                ensure!(x.3 < y.3 + 1e-9, "objective ranks {:?} above {:?} but divergence does not", (x.0, x.1), (y.0, y.1));
            }
        }
        ensure!(x.3 >= k_star - 1e-9, "grid divergence {} below the pseudo-true value {k_star}", x.3);
        ensure!(x.4 >= mse_star - 1e-9, "grid MSE {} below the pseudo-true value {mse_star}", x.4);
    }
    let by = |f: fn(&(f64, f64, f64, f64, f64)) -> f64| {
        pts.iter().min_by(|x, y| f(x).total_cmp(&f(y))).map(|p| (p.0, p.1)).unwrap()
    };
    let (kmin, emin) = (by(|p| p.3), by(|p| p.4));
    ensure!(kmin == emin, "KLDR argmin {kmin:?} differs from MSE argmin {emin:?}");
    Ok(())
}

// ------------------------------------------------------------ macromodels

pub fn check_nk_path_residuals() -> Check {
    let (cal, eq) = nk_fixture();
    let path = simulate(&eq.law(), 2_000, 7).map_err(|e| e.to_string())?;
    let scale = path.amax();
    for t in 0..path.nrows() {
        let s = DVector::from_vec(vec![path[(t, 2)], path[(t, 3)], path[(t, 4)]]);
        let (is, pc) = eq.structural_residuals(cal, &s).map_err(|e| e.to_string())?;
        ensure!(is.abs().max(pc.abs()) < 1e-7 * scale, "period {t}: residuals ({is:.3e}, {pc:.3e})");
    }
    Ok(())
}

pub fn check_divine_coincidence(kappa: f64, sigma: f64, rho: f64, var: f64) -> Check {
    let g0 = DMatrix::from_row_slice(3, 3, &[var, var, 0.0, var, var, 0.0, 0.0, 0.0, 0.0]);
    let cal = NkCalibration { beta: 0.99, sigma, delta: 0.75, kappa, shock_gamma1: &g0 * rho, shock_gamma0: g0.clone() };
    let eq = solve_nk(&cal).map_err(|e| e.to_string())?;
    let sd = (&eq.loadings * &g0 * eq.loadings.transpose()).amax().sqrt();
    ensure!(sd < 1e-8, "output gap and inflation move with sd {sd:.3e}");
    Ok(())
}

pub fn check_dmp_steady_state(cal: &DmpCalibration) -> Check {
    let ss = cal.steady_state();
    let res = ss.identity_residual(cal);
    ensure!(res < 1e-10, "steady-state identity residual {res:.3e}");
    Ok(())
}

pub fn check_fg_consistency(horizon: usize, shock: [f64; 3]) -> Check {
    let (cal, eq) = nk_fixture();
    let s = DVector::from_vec(shock.to_vec());
    let base = &eq.loadings * &s;
    let f = DVector::from_vec(vec![base[0], base[1], s[0]]);
    let sol = &eq.solution;
    let r = nk_forward_guidance(eq, cal, horizon).map_err(|e| e.to_string())?;
    let mut v = DVector::zeros(3 + horizon);
    v.rows_mut(0, 3).copy_from(&s);
    for tau in 1..=horizon {
        v[2 + tau] = sol.a.powi(tau as i32) * sol.q[2] * sol.p.dot(&f);
    }
    let (x, pi) = r.response(&v);
    let err = (x - base[0]).abs().max((pi - base[1]).abs());
    ensure!(err < 1e-8, "T = {horizon}: announced expected path moves the economy by {err:.3e}");
    Ok(())
}

/// `eta` at every fixed point the macro solvers report, recomputed independently.
pub fn check_macro_eta() -> Check {
    let (cal, eq) = nk_fixture();
    ensure!(eq.eta_check == 0.0, "NK eta check {}", eq.eta_check);
    for other in &eq.other_fixed_points {
        let acv = eq.shocks.autocov_of(&basis_map(other));
        let s = solve_one_state_general(&acv).map_err(|e| e.to_string())?;
        ensure!(s.eta < 1e-6, "NK alternative fixed point has eta {}", s.eta);
    }
    let _ = cal;
    let rbc = ptsm::presets::rbc_paper();
    let e = solve_rbc(&rbc, Mode::CreeD1).map_err(|e| e.to_string())?;
    let acv = e.law(&rbc).state_autocov().map_err(|e| e.to_string())?;
    let s = solve_one_state_general(&acv).map_err(|e| e.to_string())?;
    ensure!(s.eta < 1e-6 && e.eta_check == Some(0.0), "RBC eta {} (reported {:?})", s.eta, e.eta_check);
    let dmp = ptsm::presets::dmp_paper();
    let e = solve_dmp(&dmp, Mode::CreeD1).map_err(|e| e.to_string())?;
    let acv = e.law(&dmp).state_autocov().map_err(|e| e.to_string())?;
    let s = solve_one_state_general(&acv).map_err(|e| e.to_string())?;
    ensure!(s.eta < 1e-6 && e.eta_check == Some(0.0), "DMP eta {} (reported {:?})", s.eta, e.eta_check);
    Ok(())
}

pub fn check_simulation_determinism(seed: u64) -> Check {
    let mut r = rng(seed);
    let p = random_process(&mut r, 2, 3);
    let law = LinearLaw::new(p.f, p.sigma, p.h.transpose(), vec!["y1".into(), "y2".into()]).map_err(|e| e.to_string())?;
    let (x, y) = (simulate(&law, 500, seed).unwrap(), simulate(&law, 500, seed).unwrap());
    ensure!(x.as_slice().iter().zip(y.as_slice()).all(|(u, v)| u.to_bits() == v.to_bits()), "paths differ");
    Ok(())
}
