//! Search-and-matching labor market in which firms and workers forecast using a
//! pseudo-true one-state model of `f_t = (u_t, a_t, s_t)`: unemployment,
//! labor productivity and the separation rate, all in log deviations.
//!
//! Tightness and the wage bill are linear in `f`:
//! `theta = psi_theta' f` and `w * w_hat = psi_w' f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::law::LinearLaw;
use super::{one_state_closed_form, solve_fixed_point, unit_l1, verify_eta, FixedPointMethod, FixedPointOptions, Mode};
use crate::error::{Error, Result};
use crate::linalg::{inverse, spectral_radius};
use crate::ssm::OneStatePseudoTrue;

/// Names of the reported variables, in order.
pub const DMP_VARIABLES: [&str; 8] = ["a", "s", "theta", "v", "u", "p", "q", "w"];

/// Primitive parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpCalibration {
    /// Discount factor.
    pub beta: f64,
    /// Steady-state separation rate.
    pub s: f64,
    /// Steady-state job-finding rate.
    pub p: f64,
    /// Matching-function elasticity with respect to unemployment.
    pub alpha: f64,
    /// Worker bargaining power.
    pub delta: f64,
    /// Productivity persistence.
    pub rho_a: f64,
    /// Separation-rate persistence.
    pub rho_s: f64,
    /// Flow value of unemployment.
    pub b: f64,
    /// Unconditional correlation of productivity and the separation rate.
    pub corr_as: f64,
    /// Ratio of the standard deviation of productivity to that of the separation rate.
    pub sd_ratio: f64,
}

/// Steady state with tightness normalized to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmpSteadyState {
    /// Wage.
    pub w: f64,
    /// Value of a filled job.
    pub j: f64,
    /// Unemployment rate.
    pub u: f64,
    /// Job-finding rate.
    pub p: f64,
    /// Market tightness.
    pub theta: f64,
    /// Matching efficiency.
    pub mu: f64,
    /// Vacancy cost.
    pub k: f64,
    /// Vacancy-filling rate.
    pub q: f64,
    /// Weight of the continuation gap in the wage equation.
    pub chi: f64,
    /// Weight of separations in the job value.
    pub zeta: f64,
}

impl DmpSteadyState {
    /// Largest violation of the steady-state identities: unemployment flow
    /// balance, free entry, and the bargaining condition.
    pub fn identity_residual(&self, cal: &DmpCalibration) -> f64 {
        let (b, s, dl) = (cal.beta, cal.s, cal.delta);
        let flows = s * (1.0 - self.u) / self.u - self.p;
        let entry = self.mu / (self.k * self.theta.powf(cal.alpha)) - 1.0 / (b * self.j);
        let bargain = (1.0 - dl) * (self.w - cal.b) / (1.0 - b * (1.0 - s - self.p))
            - dl * (1.0 - self.w) / (1.0 - b * (1.0 - s));
        let job = self.j - (1.0 - self.w) / (1.0 - b * (1.0 - s));
        flows.abs().max(entry.abs()).max(bargain.abs()).max(job.abs())
    }
}

impl DmpCalibration {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        if !open01(self.beta) || !open01(self.alpha) || !open01(self.delta) {
            return Err(Error::Validation("beta, alpha and delta must lie in (0,1)".into()));
        }
        if !(self.s > 0.0 && self.p > 0.0 && self.s + self.p < 1.0) {
            return Err(Error::Validation("s and p must be positive with s + p < 1".into()));
        }
        if !(self.b < 1.0) {
            return Err(Error::Validation("b must be below steady-state productivity 1".into()));
        }
        if !(self.rho_a.abs() < 1.0 && self.rho_s.abs() < 1.0) {
            return Err(Error::Validation("shock persistences must lie in (-1,1)".into()));
        }
        if !(self.corr_as.abs() <= 1.0 && self.sd_ratio > 0.0) {
            return Err(Error::Validation("corr_as must lie in [-1,1] and sd_ratio must be positive".into()));
        }
        Ok(())
    }

    /// Steady state with `theta = 1`.
    pub fn steady_state(&self) -> DmpSteadyState {
        let (b, s, p, dl) = (self.beta, self.s, self.p, self.delta);
        let w = (dl * (1.0 - b * (1.0 - s - p)) + (1.0 - dl) * (1.0 - b * (1.0 - s)) * self.b)
            / (1.0 - b * (1.0 - s - dl * p));
        let j = (1.0 - w) / (1.0 - b * (1.0 - s));
        let chi = b * (1.0 - dl) * (w - self.b) / (1.0 - b * (1.0 - s - p));
        let zeta = b * s * (1.0 - w) / (1.0 - b * (1.0 - s));
        let mu = p;
        DmpSteadyState { w, j, u: s / (s + p), p, theta: 1.0, mu, k: b * j * mu, q: mu, chi, zeta }
    }

    /// Innovation covariance of `(u, a, s)`; productivity has unit
    /// unconditional standard deviation.
    pub fn shock_cov(&self) -> DMatrix<f64> {
        let (ra, rs, r) = (self.rho_a, self.rho_s, self.sd_ratio);
        let mut sig = DMatrix::zeros(3, 3);
        sig[(1, 1)] = 1.0 - ra * ra;
        sig[(2, 2)] = (1.0 - rs * rs) / (r * r);
        sig[(1, 2)] = self.corr_as / r * (1.0 - ra * rs);
        sig[(2, 1)] = sig[(1, 2)];
        sig
    }

    /// Transition of `(u, a, s)` given tightness loadings `(psi_u, psi_a, psi_s)`.
    pub fn transition(&self, psi_theta: &DVector<f64>) -> DMatrix<f64> {
        let (s, p) = (self.s, self.p);
        let g = (1.0 - self.alpha) * p;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 - s - p - g * psi_theta[0],
                -g * psi_theta[1],
                p - g * psi_theta[2],
                0.0,
                self.rho_a,
                0.0,
                0.0,
                0.0,
                self.rho_s,
            ],
        )
    }

    fn law_for(&self, psi: &DVector<f64>) -> LinearLaw {
        let psi_theta = psi.rows(0, 3).into_owned();
        let ss = self.steady_state();
        let mut obs = DMatrix::zeros(8, 3);
        obs[(0, 1)] = 1.0;
        obs[(1, 2)] = 1.0;
        for j in 0..3 {
            obs[(2, j)] = psi_theta[j];
            obs[(3, j)] = psi_theta[j];
            obs[(5, j)] = (1.0 - self.alpha) * psi_theta[j];
            obs[(6, j)] = -self.alpha * psi_theta[j];
            obs[(7, j)] = psi[3 + j] / ss.w;
        }
        obs[(3, 0)] += 1.0;
        obs[(4, 0)] = 1.0;
        LinearLaw {
            transition: self.transition(&psi_theta),
            shock_cov: self.shock_cov(),
            observation: obs,
            names: DMP_VARIABLES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Linear equilibrium of the labor market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpEquilibrium {
    /// Forecasting mode that produced the equilibrium.
    pub mode: Mode,
    /// `(psi_theta_u, psi_theta_a, psi_theta_s, psi_w_u, psi_w_a, psi_w_s)`.
    pub psi: DVector<f64>,
    /// Steady state.
    pub steady: DmpSteadyState,
    /// Transition of `(u, a, s)`.
    pub transition: DMatrix<f64>,
    /// Pseudo-true one-state model over `(u, a, s)`, signed so that `p_u < 0`.
    pub pseudo_true: Option<OneStatePseudoTrue>,
    /// `p / |p|_1`: weights of the perceived state on `(u, a, s)`.
    pub z_weights: Option<DVector<f64>>,
    /// Tightness loading on the normalized perceived state.
    pub theta_loading: Option<f64>,
    /// Job-finding-rate loading on the normalized perceived state.
    pub job_finding_loading: Option<f64>,
    /// Residual of the defining equations at the solution.
    pub residual: f64,
    /// Stage that produced the fixed point.
    pub method: Option<FixedPointMethod>,
    /// `eta` found by the general one-state solver at the fixed point.
    pub eta_check: Option<f64>,
}

impl DmpEquilibrium {
    /// Law of motion with `(a, s, theta, v, u, p, q, w)` reported.
    pub fn law(&self, cal: &DmpCalibration) -> LinearLaw {
        cal.law_for(&self.psi)
    }
}

/// Solves in the given mode with default settings.
pub fn solve_dmp(cal: &DmpCalibration, mode: Mode) -> Result<DmpEquilibrium> {
    solve_dmp_with(cal, mode, &FixedPointOptions::default())
}

/// Solves in the given mode.
pub fn solve_dmp_with(cal: &DmpCalibration, mode: Mode, opts: &FixedPointOptions) -> Result<DmpEquilibrium> {
    cal.validate()?;
    let steady = cal.steady_state();
    let (re, re_residual) = rational_coefficients(cal)?;
    let re_psi = DVector::from_vec(vec![0.0, re[0], re[1], 0.0, re[2], re[3]]);
    let mut eq = DmpEquilibrium {
        mode,
        psi: re_psi.clone(),
        steady,
        transition: cal.transition(&re_psi.rows(0, 3).into_owned()),
        pseudo_true: None,
        z_weights: None,
        theta_loading: None,
        job_finding_loading: None,
        residual: re_residual,
        method: None,
        eta_check: None,
    };
    if mode == Mode::CreeD1 {
        let map = |x: &DVector<f64>| -> Result<DVector<f64>> {
            let (psi, _) = cree_map(cal, x)?;
            Ok(psi.rows(0, 3).into_owned())
        };
        let outcome = solve_fixed_point(map, &re_psi.rows(0, 3).into_owned(), opts)?;
        let (psi, mut sol) = cree_map(cal, &outcome.x)?;
        eq.eta_check = Some(verify_eta(&cal.law_for(&psi).state_autocov()?)?);
        if sol.p[0] > 0.0 {
            sol.flip();
        }
        let z = unit_l1(&sol.p);
        let theta_loading = psi[0] / z[0];
        eq.transition = cal.transition(&outcome.x);
        eq.psi = psi;
        eq.theta_loading = Some(theta_loading);
        eq.job_finding_loading = Some((1.0 - cal.alpha) * theta_loading);
        eq.z_weights = Some(z);
        eq.pseudo_true = Some(sol);
        eq.residual = outcome.residual;
        eq.method = Some(outcome.method);
    }
    let radius = spectral_radius(&eq.transition);
    if radius >= 1.0 {
        return Err(Error::UnstableLaw { radius });
    }
    Ok(eq)
}

/// All six loadings implied by the one-state model of the law under `psi_theta`.
fn cree_map(cal: &DmpCalibration, psi_theta: &DVector<f64>) -> Result<(DVector<f64>, OneStatePseudoTrue)> {
    let law = LinearLaw {
        transition: cal.transition(psi_theta),
        shock_cov: cal.shock_cov(),
        observation: DMatrix::identity(3, 3),
        names: vec!["u".into(), "a".into(), "s".into()],
    };
    let sol = one_state_closed_form(&law.state_autocov()?)?;
    Ok((psi_given_model(cal, sol.a, &sol.p, &sol.q)?, sol))
}

/// Solves the six linear tightness and wage equations given a one-state model `(a, p, q)`.
pub fn psi_given_model(cal: &DmpCalibration, a: f64, p: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    let ss = cal.steady_state();
    let (be, s, pf, al, dl, b) = (cal.beta, cal.s, cal.p, cal.alpha, cal.delta, cal.b);
    let k1 = 1.0 / (1.0 - a * be * (1.0 - s));
    let k2 = a * be * (1.0 - s - pf) / (1.0 - a * be * (1.0 - s - pf));
    let g = pf * ss.chi * (1.0 - al);
    let (qu, qa, qs) = (q[0], q[1], q[2]);
    // Job-value bracket: constant plus coefficients on the six unknowns.
    let xc = (1.0 - b) * qa - ss.zeta * qs;
    let xw = [0.0, 0.0, 0.0, -qu, -qa, -qs];
    // Worker-surplus bracket.
    let yc = s * ss.chi * qs;
    let yw = [g * qu, g * qa, g * qs, -(1.0 - dl) * qu, -(1.0 - dl) * qa, -(1.0 - dl) * qs];
    let base = [0.0, dl * (1.0 - b), s * ss.chi - dl * ss.zeta];
    let mut m = DMatrix::zeros(6, 6);
    let mut c = DVector::zeros(6);
    for i in 0..3 {
        let th = a * p[i] * k1 / (al * ss.j);
        m[(i, i)] = 1.0;
        for j in 0..6 {
            m[(i, j)] -= th * xw[j];
        }
        c[i] = th * xc;
        let r = 3 + i;
        let wf = a * be * dl * (1.0 - s) * p[i] * k1;
        m[(r, r)] += 1.0;
        m[(r, i)] -= g;
        for j in 0..6 {
            m[(r, j)] -= wf * xw[j] + k2 * p[i] * yw[j];
        }
        c[r] = base[i] + wf * xc + k2 * p[i] * yc;
    }
    Ok(inverse(&m, "tightness and wage system")? * c)
}

/// Rational-expectations `(gamma_theta_a, gamma_theta_s, gamma_w_a, gamma_w_s)`
/// and the residual of the four defining equations.
pub fn rational_coefficients(cal: &DmpCalibration) -> Result<(DVector<f64>, f64)> {
    let residual = |x: &DVector<f64>| rational_residual(cal, x);
    // The system is affine, so its matrix is read off from unit vectors.
    let r0 = residual(&DVector::zeros(4));
    let m = DMatrix::from_fn(4, 4, |i, j| {
        let mut e = DVector::zeros(4);
        e[j] = 1.0;
        residual(&e)[i] - r0[i]
    });
    let x = -inverse(&m, "rational-expectations system")? * r0;
    let res = residual(&x).amax();
    Ok((x, res))
}

fn rational_residual(cal: &DmpCalibration, x: &DVector<f64>) -> DVector<f64> {
    let ss = cal.steady_state();
    let (be, s, p, al, dl, b, ra, rs) = (cal.beta, cal.s, cal.p, cal.alpha, cal.delta, cal.b, cal.rho_a, cal.rho_s);
    let (ta, ts, wa, ws) = (x[0], x[1], x[2], x[3]);
    let (j, chi, zeta) = (ss.j, ss.chi, ss.zeta);
    let g = p * chi * (1.0 - al);
    let fa = be * ra * (1.0 - s);
    let fs = be * rs * (1.0 - s);
    let ua = be * ra * (1.0 - s - p);
    let us = be * rs * (1.0 - s - p);
    let t1 = ra / (1.0 - fa) * (1.0 - b - wa) / (al * j);
    let t2 = -rs / (1.0 - fs) * (zeta + ws) / (al * j);
    let w1 = dl * (1.0 - b) + g * ta + dl * fa * (1.0 - b - wa) / (1.0 - fa) + ua / (1.0 - ua) * (g * ta - (1.0 - dl) * wa);
    let w2 = s * chi - dl * zeta + g * ts - dl * fs * (zeta + ws) / (1.0 - fs)
        + us / (1.0 - us) * (g * ts + s * chi - (1.0 - dl) * ws);
    DVector::from_vec(vec![t1 - ta, t2 - ts, w1 - wa, w2 - ws])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> DmpCalibration {
        DmpCalibration {
            beta: 0.99,
            s: 0.035,
            p: 0.4,
            alpha: 0.72,
            delta: 0.72,
            rho_a: 0.96,
            rho_s: 0.90,
            b: 0.4,
            corr_as: -0.4,
            sd_ratio: 10.0,
        }
    }

    /// The six equations written term by term from the forward sums.
    fn psi_equations(cal: &DmpCalibration, a: f64, p: &DVector<f64>, q: &DVector<f64>, x: &DVector<f64>) -> f64 {
        let ss = cal.steady_state();
        let (be, s, pf, al, dl, b) = (cal.beta, cal.s, cal.p, cal.alpha, cal.delta, cal.b);
        let g = pf * ss.chi * (1.0 - al);
        let (tu, ta, ts, wu, wa, ws) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        let job = (1.0 - b - wa) * q[1] - wu * q[0] - (ss.zeta + ws) * q[2];
        let surplus = (g * ta - (1.0 - dl) * wa) * q[1] + (g * tu - (1.0 - dl) * wu) * q[0]
            + (g * ts - (1.0 - dl) * ws + s * ss.chi) * q[2];
        let f1 = a / (1.0 - a * be * (1.0 - s));
        let f2 = a * be * (1.0 - s - pf) / (1.0 - a * be * (1.0 - s - pf));
        let base = [0.0, dl * (1.0 - b), s * ss.chi - dl * ss.zeta];
        let th = [tu, ta, ts];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            let theta = f1 * p[i] * job / (al * ss.j);
            let wage = base[i] + g * th[i] + be * dl * (1.0 - s) * f1 * p[i] * job + f2 * p[i] * surplus;
            worst = worst.max((theta - x[i]).abs()).max((wage - x[3 + i]).abs());
        }
        worst
    }

    #[test]
    fn steady_state_identities_hold() {
        let cal = baseline();
        let ss = cal.steady_state();
        assert!(ss.identity_residual(&cal) < 1e-12);
        assert!((ss.w - 0.977_253).abs() < 1e-6 && (ss.j - 0.509_446).abs() < 1e-6);
    }

    #[test]
    fn linear_solve_satisfies_the_six_equations() {
        let cal = baseline();
        let p = DVector::from_vec(vec![-0.7, 0.2, -0.4]);
        let q = DVector::from_vec(vec![-1.1, 0.3, -0.5]);
        let x = psi_given_model(&cal, 0.97, &p, &q).unwrap();
        assert!(psi_equations(&cal, 0.97, &p, &q, &x) < 1e-12);
    }

    #[test]
    fn rational_coefficients_match_the_reference() {
        let (x, res) = rational_coefficients(&baseline()).unwrap();
        assert!(res < 1e-12);
        let want = [0.949_61, -0.087_22, 0.569_93, -0.012_67];
        for (got, w) in x.iter().zip(want) {
            assert!((got - w).abs() < 5e-5, "{x}");
        }
    }

    #[test]
    fn cree_fixed_point_satisfies_its_equations() {
        let cal = baseline();
        let eq = solve_dmp(&cal, Mode::CreeD1).unwrap();
        let sol = eq.pseudo_true.as_ref().unwrap();
        assert!(psi_equations(&cal, sol.a, &sol.p, &sol.q, &eq.psi) < 1e-8);
        assert!(eq.eta_check.unwrap() <= super::super::ETA_VERIFY_TOL);
        let z = eq.z_weights.unwrap();
        assert!(z[0] < 0.0);
    }
}
