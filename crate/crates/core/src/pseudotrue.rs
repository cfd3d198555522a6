//! Pseudo-true model solvers: the general one-state optimizer, the
//! closed forms under exponential ergodicity and for Markovian-in-observables
//! models, explicit state-space reconstruction, and reaction tables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, sign_normalize, sym_eigen, sym_max_eigenvalue, sym_power};
use crate::optim::{nelder_mead_box, NelderMeadOptions};
use crate::procspec::{
    autocorr, check_exponential_ergodicity, decompose_persistence, ordered_eigenpairs, AutocorrSeq,
    AutocovSeq,
};
use crate::ssm::{subjective_moments, MioComponent, MioDStateModel, OneStatePseudoTrue, StateSpaceModel};

/// Settings of the general one-state solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralSolverOptions {
    /// Grid points for `a` on `[-1, 1]`.
    pub grid_a: usize,
    /// Grid points for `eta` on `[0, 1]`.
    pub grid_eta: usize,
    /// Number of best grid points refined locally.
    pub top_k: usize,
    /// Box tolerance of the local refinement.
    pub tol: f64,
}

impl Default for GeneralSolverOptions {
    fn default() -> Self {
        Self { grid_a: 201, grid_eta: 101, top_k: 5, tol: 1e-10 }
    }
}

/// Tolerance under which refined optima count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// `sum_{t>=1} a^t eta^{t-1} C_t`.
pub fn weighted_lag_sum(acs: &AutocorrSeq, a: f64, eta: f64) -> DMatrix<f64> {
    let n = acs.dim();
    if let Some(g) = &acs.geometric {
        if let Ok(s) = g.weighted_sum(a, eta) {
            return s;
        }
    }
    let mut out = DMatrix::zeros(n, n);
    let mut w = a;
    for c in &acs.cs {
        if w.abs() < 1e-17 {
            break;
        }
        out += c * w;
        w *= a * eta;
    }
    out
}

/// The objective matrix whose top eigenvalue the pseudo-true one-state model maximizes.
pub fn omega_matrix(acs: &AutocorrSeq, a: f64, eta: f64) -> DMatrix<f64> {
    let n = acs.dim();
    if eta >= 1.0 {
        return DMatrix::zeros(n, n);
    }
    let den = 1.0 - a * a * eta * eta;
    let diag = -a * a * (1.0 - eta) * (1.0 - eta) / den;
    let scale = 2.0 * (1.0 - eta) * (1.0 - a * a * eta) / den;
    let mut out = weighted_lag_sum(acs, a, eta) * scale;
    for i in 0..n {
        out[(i, i)] += diag;
    }
    out
}

/// `lambda_max(Omega(a, eta))`.
pub fn omega_lambda_max(acs: &AutocorrSeq, a: f64, eta: f64) -> f64 {
    sym_max_eigenvalue(&omega_matrix(acs, a, eta))
}

/// Grid evaluation of the objective surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaObjective {
    /// Sampled `a` values.
    pub grid_a: Vec<f64>,
    /// Sampled `eta` values.
    pub grid_eta: Vec<f64>,
    /// `values[(i, j)] = lambda_max(Omega(grid_a[i], grid_eta[j]))`.
    pub values: DMatrix<f64>,
    /// Best grid point, or the refined optimum when produced by the solver.
    pub argmax: (f64, f64),
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluates the objective on an `na x ne` grid over `[-1,1] x [0,1]`.
pub fn scan_omega(acs: &AutocorrSeq, na: usize, ne: usize) -> OmegaObjective {
    let grid_a = linspace(-1.0, 1.0, na);
    let grid_eta = linspace(0.0, 1.0, ne);
    let values = DMatrix::from_fn(na, ne, |i, j| omega_lambda_max(acs, grid_a[i], grid_eta[j]));
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for j in 0..ne {
        for i in 0..na {
            if values[(i, j)] > best.0 {
                best = (values[(i, j)], i, j);
            }
        }
    }
    OmegaObjective { argmax: (grid_a[best.1], grid_eta[best.2]), grid_a, grid_eta, values }
}

fn prefer(a: &(f64, f64, f64), b: &(f64, f64, f64)) -> bool {
    if (a.2 - b.2).abs() > TIE_TOL {
        return a.2 > b.2;
    }
    if (a.1 - b.1).abs() > 1e-12 {
        return a.1 < b.1;
    }
    if (a.0.abs() - b.0.abs()).abs() > 1e-12 {
        return a.0.abs() < b.0.abs();
    }
    a.0 > b.0
}

/// Gradient of `lambda_max` from central differences of the objective matrix
/// weighted by its top eigenvector.
fn objective_gradient(acs: &AutocorrSeq, a: f64, eta: f64, h: f64) -> [f64; 2] {
    let (_, vecs) = sym_eigen(&omega_matrix(acs, a, eta));
    let u = vecs.column(0);
    let slope = |plus: DMatrix<f64>, minus: DMatrix<f64>| (u.transpose() * (plus - minus) * u)[(0, 0)] / (2.0 * h);
    [
        slope(omega_matrix(acs, a + h, eta), omega_matrix(acs, a - h, eta)),
        slope(omega_matrix(acs, a, eta + h), omega_matrix(acs, a, eta - h)),
    ]
}

/// Newton steps on the first-order conditions from a refined optimum. Only `a`
/// moves when `eta` sits at zero. Steps that leave the interior, grow large, or
/// lower the objective are rejected.
fn polish(acs: &AutocorrSeq, mut a: f64, mut eta: f64) -> (f64, f64) {
    const H: f64 = 1e-6;
    const HH: f64 = 1e-4;
    let margin = 10.0 * HH;
    if a.abs() > 1.0 - margin || eta > 1.0 - margin || (eta > 0.0 && eta < margin) {
        return (a, eta);
    }
    let free_eta = eta > 0.0;
    let mut value = omega_lambda_max(acs, a, eta);
    for _ in 0..4 {
        let g = objective_gradient(acs, a, eta, H);
        let ga = objective_gradient(acs, a + HH, eta, H);
        let gb = objective_gradient(acs, a - HH, eta, H);
        let haa = (ga[0] - gb[0]) / (2.0 * HH);
        let (da, de) = if free_eta {
            let ge = objective_gradient(acs, a, eta + HH, H);
            let gf = objective_gradient(acs, a, eta - HH, H);
            let hee = (ge[1] - gf[1]) / (2.0 * HH);
            let hae = 0.25 * (ge[0] - gf[0] + ga[1] - gb[1]) / HH;
            let det = haa * hee - hae * hae;
            if !(haa < 0.0 && det > 0.0) {
                break;
            }
            ((hae * g[1] - hee * g[0]) / det, (hae * g[0] - haa * g[1]) / det)
        } else {
            if !(haa < 0.0) {
                break;
            }
            (-g[0] / haa, 0.0)
        };
        let (na, ne) = (a + da, eta + de);
        if da.abs().max(de.abs()) > 1e-4 || na.abs() > 1.0 - margin || (free_eta && !(ne > margin && ne < 1.0 - margin)) {
            break;
        }
        let next = omega_lambda_max(acs, na, ne);
        if next < value - 1e-14 * value.abs().max(1.0) {
            break;
        }
        (a, eta, value) = (na, ne, next.max(value));
        if da.abs().max(de.abs()) < 1e-13 {
            break;
        }
    }
    (a, eta)
}

fn finish(acv: &AutocovSeq, acs: &AutocorrSeq, a: f64, eta: f64, paired_root: bool) -> OneStatePseudoTrue {
    let om = omega_matrix(acs, a, eta);
    let (vals, vecs) = sym_eigen(&om);
    let mut u = vecs.column(0).into_owned();
    sign_normalize(&mut u, 1e-12);
    let g0 = &acv.gammas[0];
    OneStatePseudoTrue {
        a,
        eta,
        p: sym_power(g0, -0.5) * &u,
        q: sym_power(g0, 0.5) * &u,
        lambda_max: vals[0],
        paired_root,
    }
}

/// General one-state pseudo-true model with default settings.
pub fn solve_one_state_general(acv: &AutocovSeq) -> Result<OneStatePseudoTrue> {
    solve_one_state_general_with(acv, &GeneralSolverOptions::default()).map(|(s, _)| s)
}

/// General one-state solver: grid scan, local refinement of the best `top_k`
/// grid points, deterministic tie-break (smallest `eta`, then smallest `|a|`).
pub fn solve_one_state_general_with(
    acv: &AutocovSeq,
    opts: &GeneralSolverOptions,
) -> Result<(OneStatePseudoTrue, OmegaObjective)> {
    if opts.grid_a < 2 || opts.grid_eta < 2 || opts.top_k == 0 || opts.tol <= 0.0 {
        return Err(Error::Validation("solver grid sizes, top_k and tol must be positive".into()));
    }
    let acs = autocorr(acv)?;
    let mut scan = scan_omega(&acs, opts.grid_a, opts.grid_eta);
    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity(opts.grid_a * opts.grid_eta);
    for j in 0..opts.grid_eta {
        for i in 0..opts.grid_a {
            cells.push((scan.values[(i, j)], i, j));
        }
    }
    cells.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.2.cmp(&y.2)).then(x.1.cmp(&y.1)));
    let step = [2.0 / (opts.grid_a - 1) as f64, 1.0 / (opts.grid_eta - 1) as f64];
    let nm = NelderMeadOptions { xtol: opts.tol, ..Default::default() };
    let objective = |x: &[f64]| -omega_lambda_max(&acs, x[0], x[1]);
    let mut refined: Vec<(f64, f64, f64)> = Vec::new();
    for &(_, i, j) in cells.iter().take(opts.top_k) {
        let x0 = [scan.grid_a[i], scan.grid_eta[j]];
        let (x, fx) = nelder_mead_box(objective, &x0, &step, &[-1.0, 0.0], &[1.0, 1.0], &nm);
        let (a, mut eta, mut val) = (x[0], x[1], -fx);
        if eta > 0.0 && eta < 1e-6 {
            let at_zero = omega_lambda_max(&acs, a, 0.0);
            if at_zero >= val - 1e-14 * val.abs().max(1.0) {
                eta = 0.0;
                val = at_zero;
            }
        }
        refined.push((a, eta, val));
    }
    // Collapse refinements that found the same optimum, keeping the best value.
    let mut optima: Vec<(f64, f64, f64)> = Vec::new();
    for r in refined {
        match optima
            .iter_mut()
            .find(|o| (o.0 - r.0).abs() < 1e-4 && (o.1 - r.1).abs() < 1e-4)
        {
            Some(o) => {
                if r.2 > o.2 {
                    *o = r;
                }
            }
            None => optima.push(r),
        }
    }
    let best_val = optima.iter().map(|o| o.2).fold(f64::NEG_INFINITY, f64::max);
    let mut chosen = optima[0];
    for o in &optima {
        if o.2 >= best_val - TIE_TOL && prefer(o, &chosen) {
            chosen = *o;
        }
    }
    if chosen.2 < best_val - TIE_TOL {
        chosen = *optima.iter().find(|o| o.2 == best_val).expect("best exists");
    }
    let paired = optima
        .iter()
        .any(|o| o.2 >= best_val - TIE_TOL && (o.0 + chosen.0).abs() < 1e-6 && chosen.0.abs() > 1e-6 && (o.1 - chosen.1).abs() < 1e-6);
    let (a, eta) = polish(&acs, chosen.0, chosen.1);
    scan.argmax = (a, eta);
    Ok((finish(acv, &acs, a, eta, paired), scan))
}

/// Closed-form one-state model for exponentially ergodic truths.
pub fn solve_one_state_exp_erg(acv: &AutocovSeq) -> Result<OneStatePseudoTrue> {
    let acs = autocorr(acv)?;
    let rep = check_exponential_ergodicity(&acs);
    if let Some(lag) = rep.first_violation_lag {
        return Err(Error::NotExponentiallyErgodic { lag });
    }
    Ok(one_state_from_c1(acv, &acs.cs[0]))
}

/// Closed-form one-state model from the top eigenpair of `C_1`, without the ergodicity check.
pub(crate) fn one_state_from_c1(acv: &AutocovSeq, c1: &DMatrix<f64>) -> OneStatePseudoTrue {
    let pairs = ordered_eigenpairs(c1);
    let (a, u) = pairs[0].clone();
    let paired_root = pairs.len() > 1 && a.abs() > 1e-12 && (pairs[1].0 + a).abs() <= 1e-12;
    let g0 = &acv.gammas[0];
    OneStatePseudoTrue {
        a,
        eta: 0.0,
        p: sym_power(g0, -0.5) * &u,
        q: sym_power(g0, 0.5) * &u,
        lambda_max: a * a,
        paired_root,
    }
}

/// Exponential-ergodicity fast path with the general solver as fallback.
pub fn solve_one_state(acv: &AutocovSeq) -> Result<OneStatePseudoTrue> {
    match solve_one_state_exp_erg(acv) {
        Err(Error::NotExponentiallyErgodic { .. }) => solve_one_state_general(acv),
        other => other,
    }
}

/// Pseudo-true Markovian-in-observables `d`-state model (requires symmetric `Gamma_1`).
pub fn solve_mio_d_state(acv: &AutocovSeq, d: usize) -> Result<MioDStateModel> {
    let n = acv.dim();
    if d == 0 || d > n {
        return Err(Error::InvalidD { d, n });
    }
    if acv.gammas.len() < 2 {
        return Err(Error::Validation("Gamma_1 is required".into()));
    }
    let norm = asymmetry(&acv.gammas[1]);
    if norm > 1e-8 * acv.gammas[0].norm().max(1.0) {
        return Err(Error::AsymmetricGamma1 { norm });
    }
    let acs = autocorr(acv)?;
    let g0 = &acv.gammas[0];
    let gi = sym_power(g0, -0.5);
    let gh = sym_power(g0, 0.5);
    let components = ordered_eigenpairs(&acs.cs[0])
        .into_iter()
        .take(d)
        .map(|(a, u)| MioComponent { a, p: &gi * &u, q: &gh * &u })
        .collect();
    Ok(MioDStateModel { components })
}

/// Models that can be written as an explicit `(A, B, Q, R)`.
pub trait SubjectiveModel {
    /// Explicit state-space representation given the true `Gamma_0`.
    fn state_space(&self, gamma0: &DMatrix<f64>) -> Result<StateSpaceModel>;
}

impl SubjectiveModel for OneStatePseudoTrue {
    fn state_space(&self, gamma0: &DMatrix<f64>) -> Result<StateSpaceModel> {
        to_state_space(self, gamma0)
    }
}

impl SubjectiveModel for MioDStateModel {
    fn state_space(&self, gamma0: &DMatrix<f64>) -> Result<StateSpaceModel> {
        let d = self.d();
        let n = gamma0.nrows();
        let gh = sym_power(gamma0, 0.5);
        let mut a = DMatrix::zeros(d, d);
        let mut b = DMatrix::zeros(d, n);
        let mut proj = DMatrix::identity(n, n);
        for (i, c) in self.components.iter().enumerate() {
            if c.a.abs() >= 1.0 {
                return Err(Error::InvalidSolution(format!("component {i} has |a| >= 1")));
            }
            let u = &gh * &c.p;
            a[(i, i)] = c.a;
            b.set_row(i, &((u.transpose() * &gh) * (1.0 - c.a * c.a).sqrt()));
            proj -= &u * u.transpose();
        }
        let r = crate::linalg::symmetrize(&(&gh * proj * &gh));
        check_psd(&r)?;
        StateSpaceModel::new(a, b, DMatrix::identity(d, d), r)
            .map_err(|e| Error::InvalidSolution(e.to_string()))
    }
}

fn check_psd(r: &DMatrix<f64>) -> Result<()> {
    let (vals, _) = sym_eigen(r);
    let min = vals[vals.len() - 1];
    if min < -1e-10 * vals[0].abs().max(1.0) {
        return Err(Error::InvalidSolution(format!("reconstructed R has eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Explicit one-state model reproducing the pseudo-true forecasts.
pub fn to_state_space(sol: &OneStatePseudoTrue, gamma0: &DMatrix<f64>) -> Result<StateSpaceModel> {
    let n = gamma0.nrows();
    if sol.p.len() != n {
        return Err(Error::Validation("solution and Gamma_0 dimensions differ".into()));
    }
    let gh = sym_power(gamma0, 0.5);
    let u: DVector<f64> = &gh * &sol.p;
    let (a, eta, lam) = (sol.a, sol.eta, sol.lambda_max);
    let q = 1.0 - a * a * eta;
    if q <= 0.0 {
        return Err(Error::InvalidSolution("state noise 1 - a^2 eta is not positive".into()));
    }
    let b_scale = ((1.0 - eta) * (1.0 - lam)).max(0.0).sqrt();
    let row = (u.transpose() * &gh) * b_scale;
    let b = DMatrix::from_row_slice(1, n, row.as_slice());
    let inner = DMatrix::identity(n, n) - &u * u.transpose() * (1.0 - eta + eta * lam);
    let r = crate::linalg::symmetrize(&(&gh * inner * &gh));
    check_psd(&r)?;
    StateSpaceModel::new(
        DMatrix::from_element(1, 1, a),
        b,
        DMatrix::from_element(1, 1, q),
        r,
    )
    .map_err(|e| Error::InvalidSolution(e.to_string()))
}

/// One row of a reaction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionRow {
    /// Persistence rank of the component (1 = most persistent).
    pub component: usize,
    /// Lag.
    pub lag: usize,
    /// Autocorrelation under the truth.
    pub true_autocorr: f64,
    /// Autocorrelation under the subjective model.
    pub subjective_autocorr: f64,
}

/// True versus subjective autocorrelations of each persistence component.
pub fn reaction_report<M: SubjectiveModel>(sol: &M, acv: &AutocovSeq, lags: usize) -> Result<Vec<ReactionRow>> {
    let dec = decompose_persistence(acv)?;
    let model = sol.state_space(&acv.gammas[0])?;
    let subj = subjective_moments(&model, lags)?;
    let mut rows = Vec::with_capacity(dec.components.len() * lags);
    for (i, c) in dec.components.iter().enumerate() {
        let var_s = c.p.dot(&(&subj.gammas[0] * &c.p));
        let var_t = c.p.dot(&(&acv.gammas[0] * &c.p));
        for l in 1..=lags {
            let t = c.p.dot(&(acv.gamma(l) * &c.p)) / var_t;
            let s = c.p.dot(&(&subj.gammas[l] * &c.p)) / var_s;
            rows.push(ReactionRow {
                component: i + 1,
                lag: l,
                true_autocorr: t,
                subjective_autocorr: s,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;
    use crate::procspec::{autocov_from_var, LatentVarProcess};
    use crate::ssm::forecast_weights;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn ar1(phi: f64) -> AutocovSeq {
        let p = LatentVarProcess::new(scalar(phi), scalar(1.0), scalar(1.0)).unwrap();
        autocov_from_var(&p, 60).unwrap()
    }

    fn two_factor() -> AutocovSeq {
        let p = LatentVarProcess::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.5])),
            from_rows(&[&[1.0], &[1.0]]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.19, 0.75])),
        )
        .unwrap();
        autocov_from_var(&p, 200).unwrap()
    }

    #[test]
    fn omega_special_values() {
        let acs = autocorr(&ar1(0.9)).unwrap();
        assert_eq!(omega_matrix(&acs, 0.4, 1.0)[(0, 0)], 0.0);
        assert!((omega_matrix(&acs, 0.9, 0.0)[(0, 0)] - 0.81).abs() < 1e-12);
        let a = 0.3;
        let want = -a * a + 2.0 * a * 0.9;
        assert!((omega_matrix(&acs, a, 0.0)[(0, 0)] - want).abs() < 1e-12);
    }

    #[test]
    fn general_solver_recovers_ar1() {
        let acv = ar1(0.9);
        let s = solve_one_state_general(&acv).unwrap();
        assert!((s.a - 0.9).abs() < 1e-7, "{}", s.a);
        assert_eq!(s.eta, 0.0);
        let g0 = 1.0 / 0.19f64;
        assert!((s.p[0] - g0.powf(-0.5)).abs() < 1e-10);
        assert!((s.q[0] - g0.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn two_factor_truth_has_interior_noise() {
        let s = solve_one_state_general(&two_factor()).unwrap();
        assert!(s.eta > 0.0 && s.eta < 1.0, "{}", s.eta);
        assert!(s.a.abs() < 1.0);
    }

    #[test]
    fn diagonal_truth_tracks_most_persistent_element() {
        let p = LatentVarProcess::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.6, 0.95, 0.2])),
            DMatrix::identity(3, 3),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.01, 4.0])),
        )
        .unwrap();
        let acv = autocov_from_var(&p, 50).unwrap();
        let s = solve_one_state_exp_erg(&acv).unwrap();
        assert!((s.a - 0.95).abs() < 1e-12);
        let f = s.forecast_coefficient(3, 0);
        assert!((f[(1, 1)] - 0.95f64.powi(3)).abs() < 1e-10);
        assert!(f[(0, 0)].abs() < 1e-12 && f[(2, 2)].abs() < 1e-12);
    }

    #[test]
    fn white_noise_has_zero_persistence() {
        let acv = AutocovSeq::from_gammas(vec![from_rows(&[&[1.0, 0.2], &[0.2, 2.0]]), DMatrix::zeros(2, 2)], 0.0).unwrap();
        let s = solve_one_state_exp_erg(&acv).unwrap();
        assert_eq!(s.a, 0.0);
        let g = solve_one_state_general(&acv).unwrap();
        assert!(g.a.abs() < 1e-8 && g.eta == 0.0);
        let m = to_state_space(&s, &acv.gammas[0]).unwrap();
        let subj = subjective_moments(&m, 1).unwrap();
        assert!((&subj.gammas[0] - &acv.gammas[0]).norm() < 1e-12);
    }

    #[test]
    fn exp_erg_rejects_two_factor() {
        assert!(matches!(
            solve_one_state_exp_erg(&two_factor()),
            Err(Error::NotExponentiallyErgodic { lag: 2 })
        ));
    }

    #[test]
    fn state_space_of_ar1_is_exact() {
        let acv = ar1(0.9);
        let s = solve_one_state_exp_erg(&acv).unwrap();
        let m = to_state_space(&s, &acv.gammas[0]).unwrap();
        assert!((m.a[(0, 0)] - 0.9).abs() < 1e-12);
        assert!(m.r[(0, 0)].abs() < 1e-12);
        assert!((m.b[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_one_state_forecasts_match_closed_form() {
        let acv = two_factor();
        let s = solve_one_state_general(&acv).unwrap();
        let m = to_state_space(&s, &acv.gammas[0]).unwrap();
        let w = forecast_weights(&m, 6).unwrap();
        for sh in 1..=3 {
            for tau in 0..=6 {
                let d = (w.coefficient(sh, tau) - s.forecast_coefficient(sh, tau)).norm();
                assert!(d < 1e-9, "s={sh} tau={tau} diff={d}");
            }
        }
    }

    #[test]
    fn mio_rejects_bad_dimension_and_asymmetry() {
        let acv = ar1(0.5);
        assert!(matches!(solve_mio_d_state(&acv, 2), Err(Error::InvalidD { d: 2, n: 1 })));
        let asym = AutocovSeq::from_gammas(
            vec![DMatrix::identity(2, 2), from_rows(&[&[0.5, 0.2], &[0.0, 0.3]])],
            0.5,
        )
        .unwrap();
        assert!(matches!(solve_mio_d_state(&asym, 1), Err(Error::AsymmetricGamma1 { .. })));
    }

    #[test]
    fn mio_keeps_top_components() {
        let p = LatentVarProcess::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.6, 0.95, 0.2])),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let acv = autocov_from_var(&p, 5).unwrap();
        let m = solve_mio_d_state(&acv, 2).unwrap();
        assert!((m.components[0].a - 0.95).abs() < 1e-12);
        assert!((m.components[1].a - 0.6).abs() < 1e-12);
        let f = m.forecast(1);
        assert!(f.row(2).norm() < 1e-12 && f.column(2).norm() < 1e-12);
        let one = solve_one_state_exp_erg(&acv).unwrap();
        let m1 = solve_mio_d_state(&acv, 1).unwrap();
        assert!((m1.components[0].a - one.a).abs() < 1e-15);
        assert!((&m1.components[0].p - &one.p).norm() < 1e-15);
    }
}
