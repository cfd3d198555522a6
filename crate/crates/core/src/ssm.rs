//! Subjective state-space models, steady-state Kalman filtering, forecasts,
//! divergence-rate and weighted-MSE evaluation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    lyapunov, pinv, spectral_radius, sym_condition, sym_eigen, symmetrize, EIGEN_FLOOR,
};
use crate::procspec::{AutocovSeq, LatentVarProcess, VarSource, GAMMA0_CONDITION_CAP};

/// Default iteration cap of the Riccati fixed point.
pub const RICCATI_MAX_ITER: usize = 100_000;

/// Convergence threshold on successive Riccati iterates (Frobenius norm).
pub const RICCATI_TOL: f64 = 1e-12;

/// Subjective model `z_t = A z_{t-1} + w_t`, `y_t = B' z_t + v_t`,
/// `w ~ (0, Q)`, `v ~ (0, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceModel {
    /// State transition, `d x d`.
    pub a: DMatrix<f64>,
    /// Observation loading, `d x n`.
    pub b: DMatrix<f64>,
    /// State noise covariance, `d x d`.
    pub q: DMatrix<f64>,
    /// Observation noise covariance, `n x n`.
    pub r: DMatrix<f64>,
}

impl StateSpaceModel {
    /// Validates shapes, stability, `Q > 0`, `R >= 0` and a nonsingular implied `Var(y)`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let model = Self { a, b, q, r };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let d = self.a.nrows();
        let n = self.b.ncols();
        if d == 0
            || self.a.ncols() != d
            || self.b.nrows() != d
            || self.q.shape() != (d, d)
            || self.r.shape() != (n, n)
        {
            return Err(Error::Validation("state-space model shapes are inconsistent".into()));
        }
        let rho = spectral_radius(&self.a);
        if rho >= 1.0 {
            return Err(Error::Validation(format!("A has spectral radius {rho:.6} >= 1")));
        }
        let (qv, _) = sym_eigen(&self.q);
        if qv[d - 1] <= 0.0 {
            return Err(Error::Validation("Q must be positive definite".into()));
        }
        let (rv, _) = sym_eigen(&self.r);
        if rv[n - 1] < -1e-10 * rv[0].abs().max(1.0) {
            return Err(Error::Validation("R must be positive semidefinite".into()));
        }
        let var = self.subjective_variance()?;
        let condition = sym_condition(&var);
        if condition > GAMMA0_CONDITION_CAP {
            return Err(Error::Validation(format!(
                "subjective Var(y) is singular (condition number {condition:.3e})"
            )));
        }
        Ok(())
    }

    /// State dimension `d`.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Observable dimension `n`.
    pub fn obs_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `Var^theta(y) = B' P B + R` with `P = sum A^t Q A'^t`.
    pub fn subjective_variance(&self) -> Result<DMatrix<f64>> {
        let p = lyapunov(&self.a, &self.q)?;
        Ok(symmetrize(&(self.b.transpose() * p * &self.b + &self.r)))
    }

    /// The model written as a latent VAR with state `(z_t, v_t)`.
    pub fn as_latent_process(&self) -> LatentVarProcess {
        let d = self.state_dim();
        let n = self.obs_dim();
        let mut f = DMatrix::zeros(d + n, d + n);
        f.view_mut((0, 0), (d, d)).copy_from(&self.a);
        let mut h = DMatrix::zeros(d + n, n);
        h.view_mut((0, 0), (d, n)).copy_from(&self.b);
        h.view_mut((d, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        let mut sigma = DMatrix::zeros(d + n, d + n);
        sigma.view_mut((0, 0), (d, d)).copy_from(&symmetrize(&self.q));
        sigma.view_mut((d, d), (n, n)).copy_from(&symmetrize(&self.r));
        LatentVarProcess { f, h, sigma }
    }
}

/// Steady-state Kalman filter of a [`StateSpaceModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateFilter {
    /// Kalman gain `K`, `d x n`.
    pub gain: DMatrix<f64>,
    /// Predicted state variance solving the Riccati equation.
    pub sigma_z: DMatrix<f64>,
    /// One-step predictive variance of `y`.
    pub sigma_y: DMatrix<f64>,
    /// `A - K B'`.
    pub closed_loop: DMatrix<f64>,
    /// Iterations used.
    pub iterations: usize,
}

fn riccati_step(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let sb = s * b;
    let inner = pinv(&(b.transpose() * &sb + r));
    let post = s - &sb * inner * sb.transpose();
    symmetrize(&(a * post * a.transpose() + q))
}

/// Riccati fixed point without model validation; used for truths with singular noise.
pub(crate) fn riccati_raw(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    max_iter: usize,
) -> Result<SteadyStateFilter> {
    let mut s = lyapunov(a, q)?;
    let scale = s.norm().max(1.0);
    for it in 1..=max_iter {
        let next = riccati_step(a, b, q, r, &s);
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::NumericalFailure("Riccati iterate is not finite".into()));
        }
        let diff = (&next - &s).norm();
        s = next;
        if diff < RICCATI_TOL * scale {
            let sb = &s * b;
            let sigma_y = symmetrize(&(b.transpose() * &sb + r));
            let gain = a * &sb * pinv(&sigma_y);
            let closed_loop = a - &gain * b.transpose();
            return Ok(SteadyStateFilter { gain, sigma_z: s, sigma_y, closed_loop, iterations: it });
        }
    }
    Err(Error::NonConvergent(format!("Riccati iteration exceeded {max_iter} steps")))
}

/// Steady-state filter by fixed-point iteration on the Riccati equation.
pub fn solve_riccati(model: &StateSpaceModel) -> Result<SteadyStateFilter> {
    solve_riccati_with(model, RICCATI_MAX_ITER)
}

/// [`solve_riccati`] with an explicit iteration cap.
pub fn solve_riccati_with(model: &StateSpaceModel, max_iter: usize) -> Result<SteadyStateFilter> {
    let filt = riccati_raw(&model.a, &model.b, &model.q, &model.r, max_iter)?;
    let rho = spectral_radius(&filt.closed_loop);
    if rho >= 1.0 {
        return Err(Error::NonConvergent(format!("filter closed loop has spectral radius {rho:.6}")));
    }
    Ok(filt)
}

/// Riccati residual `||S - A(S - SB(B'SB+R)^+B'S)A' - Q||_F`.
pub fn riccati_residual(model: &StateSpaceModel, filt: &SteadyStateFilter) -> f64 {
    (riccati_step(&model.a, &model.b, &model.q, &model.r, &filt.sigma_z) - &filt.sigma_z).norm()
}

/// Linear forecast operator of a filtered model.
///
/// `E_t[y_{t+s}] = sum_{tau>=0} coefficient(s, tau) y_{t-tau}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastWeights {
    /// `(A - KB')^tau K` for `tau = 0..=tau_max`: weights of the state estimate on lags.
    pub state_weights: Vec<DMatrix<f64>>,
    /// Transition `A`.
    pub a: DMatrix<f64>,
    /// Loading `B`.
    pub b: DMatrix<f64>,
}

impl ForecastWeights {
    /// `B' A^{s-1}` mapping the state estimate to the `s`-step forecast.
    pub fn horizon(&self, s: usize) -> DMatrix<f64> {
        assert!(s >= 1, "forecast horizons start at one");
        self.b.transpose() * crate::linalg::mat_pow(&self.a, s - 1)
    }

    /// Weight on `y_{t-tau}` in `E_t[y_{t+s}]`.
    pub fn coefficient(&self, s: usize, tau: usize) -> DMatrix<f64> {
        self.horizon(s) * &self.state_weights[tau]
    }

    /// Largest lag stored.
    pub fn tau_max(&self) -> usize {
        self.state_weights.len() - 1
    }
}

/// Forecast weights of `model` up to lag `tau_max`.
pub fn forecast_weights(model: &StateSpaceModel, tau_max: usize) -> Result<ForecastWeights> {
    let filt = solve_riccati(model)?;
    Ok(weights_from_filter(model, &filt, tau_max))
}

fn weights_from_filter(model: &StateSpaceModel, filt: &SteadyStateFilter, tau_max: usize) -> ForecastWeights {
    let mut state_weights = Vec::with_capacity(tau_max + 1);
    let mut w = filt.gain.clone();
    for _ in 0..=tau_max {
        state_weights.push(w.clone());
        w = &filt.closed_loop * w;
    }
    ForecastWeights { state_weights, a: model.a.clone(), b: model.b.clone() }
}

/// Which constant the divergence rate carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KldrMode {
    /// Drops the model-independent constant; adequate for ranking models.
    Relative,
    /// Subtracts the Gaussian entropy rate of the truth so a correct model scores zero.
    ExactGaussian,
}

/// Divergence value with a bound on the lag-truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    /// The divergence rate.
    pub value: f64,
    /// Upper bound on the truncation error (zero for closed-form evaluation).
    pub truncation_bound: f64,
}

/// One-step forecast-error covariance `E[e e']` of the model's predictor under the truth.
fn forecast_error_cov(
    model: &StateSpaceModel,
    filt: &SteadyStateFilter,
    truth: &AutocovSeq,
) -> Result<(DMatrix<f64>, f64)> {
    let n = truth.dim();
    if model.obs_dim() != n {
        return Err(Error::Validation(format!(
            "model has {} observables, truth has {n}",
            model.obs_dim()
        )));
    }
    if let Some(src) = &truth.source {
        return Ok((closed_form_error_cov(model, filt, src)?, 0.0));
    }
    let l_max = truth.max_lag();
    let w = weights_from_filter(model, filt, l_max);
    let bt = model.b.transpose();
    let phis: Vec<DMatrix<f64>> = (1..=l_max).map(|t| &bt * &w.state_weights[t - 1]).collect();
    let gamma = |k: isize| -> DMatrix<f64> {
        if k >= 0 {
            truth.gammas[k as usize].clone()
        } else {
            truth.gammas[(-k) as usize].transpose()
        }
    };
    let mut e = truth.gammas[0].clone();
    for (i, phi) in phis.iter().enumerate() {
        let cross = phi * truth.gammas[i + 1].transpose();
        e -= &cross + cross.transpose();
    }
    for (s, phi_s) in phis.iter().enumerate() {
        for (t, phi_t) in phis.iter().enumerate() {
            let lag = t as isize - s as isize;
            if lag.unsigned_abs() > l_max {
                continue;
            }
            e += phi_s * gamma(lag) * phi_t.transpose();
        }
    }
    let r = truth.tail_rate;
    let phi_rate = spectral_radius(&filt.closed_loop);
    let phi_sum: f64 = phis.iter().map(|p| p.norm()).sum();
    let g0 = truth.gammas[0].norm();
    let tail = r.powi(l_max as i32 + 1) / (1.0 - r).max(1e-12);
    let phi_tail = phis.last().map(|p| p.norm()).unwrap_or(0.0) * phi_rate / (1.0 - phi_rate).max(1e-12);
    let bound = g0 * (2.0 * phi_sum * tail + (phi_sum + phi_tail) * (phi_sum + phi_tail) * tail + 2.0 * phi_tail * (1.0 + phi_sum));
    Ok((symmetrize(&e), bound))
}

fn closed_form_error_cov(model: &StateSpaceModel, filt: &SteadyStateFilter, src: &VarSource) -> Result<DMatrix<f64>> {
    let p = &src.process;
    let m = p.latent_dim();
    let d = model.state_dim();
    let mut trans = DMatrix::zeros(m + d, m + d);
    trans.view_mut((0, 0), (m, m)).copy_from(&p.f);
    trans.view_mut((m, 0), (d, m)).copy_from(&(&filt.gain * p.h.transpose()));
    trans.view_mut((m, m), (d, d)).copy_from(&filt.closed_loop);
    let mut noise = DMatrix::zeros(m + d, m + d);
    noise.view_mut((0, 0), (m, m)).copy_from(&p.sigma);
    let v = lyapunov(&trans, &noise)?;
    let n = p.obs_dim();
    let mut g = DMatrix::zeros(n, m + d);
    g.view_mut((0, 0), (n, m)).copy_from(&p.h.transpose());
    g.view_mut((0, m), (n, d)).copy_from(&(-model.b.transpose()));
    Ok(symmetrize(&(&g * v * g.transpose())))
}

/// Pseudo-determinant and pseudo-inverse of a PSD matrix, plus its null-space projector.
fn psd_pseudo(s: &DMatrix<f64>) -> (f64, DMatrix<f64>, DMatrix<f64>) {
    let (vals, vecs) = sym_eigen(s);
    let n = vals.len();
    let cutoff = crate::linalg::PINV_RTOL * vals[0].max(0.0);
    let mut logdet = 0.0;
    let mut inv = DMatrix::zeros(n, n);
    let mut null = DMatrix::zeros(n, n);
    for i in 0..n {
        let u = vecs.column(i);
        if vals[i] > cutoff && vals[i] > 0.0 {
            logdet += vals[i].ln();
            inv += u * u.transpose() / vals[i];
        } else {
            null += u * u.transpose();
        }
    }
    (logdet, inv, null)
}

/// Gaussian entropy-rate constant `n/2 log(2 pi e) + 1/2 log det(innovation variance)`.
pub fn gaussian_entropy_rate(process: &LatentVarProcess) -> Result<f64> {
    let r = DMatrix::zeros(process.obs_dim(), process.obs_dim());
    let filt = riccati_raw(&process.f, &process.h, &process.sigma, &r, RICCATI_MAX_ITER)?;
    let (vals, _) = sym_eigen(&filt.sigma_y);
    let n = vals.len();
    if vals[n - 1] <= EIGEN_FLOOR * vals[0].max(1.0) {
        return Err(Error::SupportMismatch);
    }
    let logdet: f64 = vals.iter().map(|v| v.ln()).sum();
    Ok(0.5 * n as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + 0.5 * logdet)
}

/// Divergence rate of `model` from `truth` with its truncation bound.
pub fn kldr_detailed(model: &StateSpaceModel, truth: &AutocovSeq, mode: KldrMode) -> Result<DivergenceValue> {
    let filt = solve_riccati(model)?;
    let (e, bound) = forecast_error_cov(model, &filt, truth)?;
    let (logdet, inv, null) = psd_pseudo(&filt.sigma_y);
    let leak = (&null * &e * &null).trace();
    if leak > 1e-10 * e.trace().abs().max(1e-300) {
        return Err(Error::SupportMismatch);
    }
    let n = truth.dim() as f64;
    let relative = 0.5 * logdet + 0.5 * n * (2.0 * std::f64::consts::PI).ln() + 0.5 * (&inv * &e).trace();
    let value = match mode {
        KldrMode::Relative => relative,
        KldrMode::ExactGaussian => {
            let src = truth.source.as_ref().ok_or_else(|| {
                Error::Validation("exact divergence needs a truth with a latent VAR source".into())
            })?;
            relative - gaussian_entropy_rate(&src.process)?
        }
    };
    let spread = inv.norm() * 0.5;
    Ok(DivergenceValue { value, truncation_bound: bound * spread })
}

/// Divergence rate of `model` from `truth`.
pub fn kldr(model: &StateSpaceModel, truth: &AutocovSeq, mode: KldrMode) -> Result<f64> {
    kldr_detailed(model, truth, mode).map(|d| d.value)
}

/// Weighted mean squared one-step forecast error `E[e'We]` under the truth.
pub fn mse_w(model: &StateSpaceModel, truth: &AutocovSeq, w: &DMatrix<f64>) -> Result<f64> {
    if crate::linalg::asymmetry(w) > 1e-10 * w.norm().max(1.0) {
        return Err(Error::Validation("weight matrix must be symmetric".into()));
    }
    let filt = solve_riccati(model)?;
    let (e, _) = forecast_error_cov(model, &filt, truth)?;
    Ok((w * e).trace())
}

/// One-step predictive variance of the model.
pub fn predictive_variance(model: &StateSpaceModel) -> Result<DMatrix<f64>> {
    Ok(solve_riccati(model)?.sigma_y)
}

/// Autocovariances implied by the subjective model itself.
pub fn subjective_moments(model: &StateSpaceModel, lags: usize) -> Result<AutocovSeq> {
    let p = lyapunov(&model.a, &model.q)?;
    let bt = model.b.transpose();
    let mut gammas = Vec::with_capacity(lags + 1);
    gammas.push(symmetrize(&(&bt * &p * &model.b + &model.r)));
    let mut ap = p.clone();
    for _ in 1..=lags {
        ap = &model.a * ap;
        gammas.push(&bt * &ap * &model.b);
    }
    let rho = spectral_radius(&model.a);
    let process = model.as_latent_process();
    let state_cov = lyapunov(&process.f, &process.sigma)?;
    Ok(AutocovSeq {
        gammas,
        tail_rate: (rho + 1e-3 * (1.0 - rho)).min(1.0 - 1e-12),
        source: Some(VarSource { process, state_cov }),
    })
}

/// Pseudo-true one-state model `(a, eta, p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStatePseudoTrue {
    /// Perceived persistence.
    pub a: f64,
    /// Perceived noise share.
    pub eta: f64,
    /// Relative attention.
    pub p: DVector<f64>,
    /// Relative sensitivity.
    pub q: DVector<f64>,
    /// Attained maximum eigenvalue of the objective matrix.
    pub lambda_max: f64,
    /// Set when both `+a` and `-a` attain the optimum and the positive branch was chosen.
    pub paired_root: bool,
}

impl OneStatePseudoTrue {
    /// `E_t[y_{t+s}]` weight on `y_{t-tau}`: `a^{s+tau} (1-eta) eta^tau q p'`.
    pub fn forecast_coefficient(&self, s: usize, tau: usize) -> DMatrix<f64> {
        let scale = self.a.powi((s + tau) as i32) * (1.0 - self.eta) * self.eta.powi(tau as i32);
        &self.q * self.p.transpose() * scale
    }

    /// Flips `p` and `q` jointly.
    pub fn flip(&mut self) {
        self.p.neg_mut();
        self.q.neg_mut();
    }
}

/// Component of a Markovian-in-observables `d`-state model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MioComponent {
    /// Persistence.
    pub a: f64,
    /// Attention direction.
    pub p: DVector<f64>,
    /// Sensitivity direction.
    pub q: DVector<f64>,
}

/// Pseudo-true Markovian-in-observables `d`-state model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MioDStateModel {
    /// Components sorted by `|a|` descending.
    pub components: Vec<MioComponent>,
}

impl MioDStateModel {
    /// State dimension.
    pub fn d(&self) -> usize {
        self.components.len()
    }

    /// `E_t[y_{t+s}] = (sum_i a_i^s q_i p_i') y_t`.
    pub fn forecast(&self, s: usize) -> DMatrix<f64> {
        let n = self.components[0].p.len();
        self.components.iter().fold(DMatrix::zeros(n, n), |acc, c| {
            acc + &c.q * c.p.transpose() * c.a.powi(s as i32)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procspec::autocov_from_var;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn ar1_truth(phi: f64) -> AutocovSeq {
        let p = LatentVarProcess::new(scalar(phi), scalar(1.0), scalar(1.0)).unwrap();
        autocov_from_var(&p, 50).unwrap()
    }

    #[test]
    fn no_observation_riccati_is_lyapunov() {
        let m = StateSpaceModel::new(scalar(0.5), scalar(0.0), scalar(2.0), scalar(1.0)).unwrap();
        let f = solve_riccati(&m).unwrap();
        assert!((f.sigma_z[(0, 0)] - 2.0 / 0.75).abs() < 1e-12);
        assert!(f.gain[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn correct_ar1_model_scores_zero() {
        let m = StateSpaceModel::new(scalar(0.9), scalar(1.0), scalar(1.0), scalar(0.0)).unwrap();
        let v = kldr(&m, &ar1_truth(0.9), KldrMode::ExactGaussian).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn iid_model_against_ar1() {
        let g0 = 1.0 / 0.19;
        let m = StateSpaceModel::new(scalar(0.0), scalar(0.0), scalar(1.0), scalar(g0)).unwrap();
        let v = kldr(&m, &ar1_truth(0.9), KldrMode::ExactGaussian).unwrap();
        assert!((v - 0.830_365_603_410_825_5).abs() < 1e-9, "{v}");
        let mse = mse_w(&m, &ar1_truth(0.9), &scalar(1.0)).unwrap();
        assert!((mse - g0).abs() < 1e-9);
    }

    #[test]
    fn truncated_and_closed_form_agree() {
        let truth = ar1_truth(0.7);
        let mut truncated = truth.clone();
        truncated.source = None;
        let m = StateSpaceModel::new(scalar(0.5), scalar(0.8), scalar(1.0), scalar(0.4)).unwrap();
        let a = kldr(&m, &truth, KldrMode::Relative).unwrap();
        let b = kldr_detailed(&m, &truncated, KldrMode::Relative).unwrap();
        assert!((a - b.value).abs() < 1e-9, "{a} {}", b.value);
    }

    #[test]
    fn subjective_moments_of_pure_noise() {
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        let m = StateSpaceModel::new(scalar(0.0), DMatrix::zeros(1, 2), scalar(1.0), r.clone()).unwrap();
        let mom = subjective_moments(&m, 2).unwrap();
        assert!((&mom.gammas[0] - r).norm() < 1e-15);
        assert!(mom.gammas[1].norm() < 1e-15);
    }

    #[test]
    fn zero_transition_forecasts_vanish() {
        let m = StateSpaceModel::new(scalar(0.0), scalar(1.0), scalar(1.0), scalar(1.0)).unwrap();
        let w = forecast_weights(&m, 3).unwrap();
        for tau in 0..=3 {
            assert!(w.coefficient(1, tau).norm() < 1e-15);
        }
    }
}
