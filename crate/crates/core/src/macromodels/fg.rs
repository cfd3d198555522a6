//! Forward guidance in the new-Keynesian economy: the response of output and
//! inflation to an announced path of future nominal rates when agents
//! condition their one-state forecasts on the announcement.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::nk::{nk_gammas, NkCalibration, NkEquilibrium};
use crate::error::{Error, Result};
use crate::linalg::{inverse, sym_condition};

/// Largest accepted condition number of the covariance of `(f_t, i_{t+1..t+T})`.
pub const OMEGA_CONDITION_CAP: f64 = 1e12;

/// Coefficients of `(x_t, pi_t)` on `(i_t, rn_t, mu_t, i_{t+1}, .., i_{t+T})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardGuidanceResult {
    /// Guidance horizon `T`.
    pub horizon: usize,
    /// Output-gap coefficients, length `3 + T`.
    pub nu_x: DVector<f64>,
    /// Inflation coefficients, length `3 + T`.
    pub nu_pi: DVector<f64>,
    /// Discounted IS expectation weights on `(f_t, i_{t+1..t+T})`.
    pub psi_x: DVector<f64>,
    /// Discounted Phillips-curve expectation weights on `(f_t, i_{t+1..t+T})`.
    pub psi_pi: DVector<f64>,
    /// Condition number of the conditioning covariance.
    pub omega_condition: f64,
}

impl ForwardGuidanceResult {
    /// `(x_t, pi_t)` for a shock vector `(i_t, rn_t, mu_t, i_{t+1..t+T})`.
    pub fn response(&self, shock: &DVector<f64>) -> (f64, f64) {
        (self.nu_x.dot(shock), self.nu_pi.dot(shock))
    }
}

/// How the contemporaneous shocks move with the rate cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCut {
    /// Only `i` moves; `rn` and `mu` stay at zero.
    Pure,
    /// `rn` and `mu` move by their conditional means given the rate cut.
    Conditional,
}

/// Solves for the guidance coefficients at horizon `T`.
pub fn nk_forward_guidance(eq: &NkEquilibrium, cal: &NkCalibration, horizon: usize) -> Result<ForwardGuidanceResult> {
    let sol = &eq.solution;
    let (a, p, q, g0) = (sol.a, &sol.p, &sol.q, &eq.gamma0);
    let t = horizon;
    let n = 3 + t;
    let ei = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let g0p = g0 * p;
    let g0ei = g0 * &ei;
    let pg0ei = p.dot(&g0ei);
    let qi = q[2];

    let mut omega = DMatrix::zeros(n, n);
    omega.view_mut((0, 0), (3, 3)).copy_from(g0);
    for tau in 1..=t {
        let col = &g0p * (a.powi(tau as i32) * qi);
        omega.view_mut((0, 2 + tau), (3, 1)).copy_from(&col);
        omega.view_mut((2 + tau, 0), (1, 3)).copy_from(&col.transpose());
        for tau2 in 1..=t {
            omega[(2 + tau, 2 + tau2)] = if tau == tau2 {
                g0[(2, 2)]
            } else {
                a.powi(tau.abs_diff(tau2) as i32) * qi * pg0ei
            };
        }
    }
    let omega_condition = sym_condition(&omega);
    if !(omega_condition <= OMEGA_CONDITION_CAP) {
        return Err(Error::SingularOmegaCov { condition: omega_condition });
    }

    // sum_{s>=1} d^s E[f_{t+s} omega']
    let discounted = |d: f64| -> DMatrix<f64> {
        let ad = a * d;
        let geo = ad / (1.0 - ad);
        let mut out = DMatrix::zeros(3, n);
        out.view_mut((0, 0), (3, 3)).copy_from(&(q * (g0p.transpose() * geo)));
        for tau in 1..=t {
            let before: f64 = (1..tau).map(|s| d.powi(s as i32) * a.powi((tau - s) as i32)).sum();
            let dt = d.powi(tau as i32);
            let col = &g0p * (before * qi) + &g0ei * dt + q * (dt * geo * pg0ei);
            out.view_mut((0, 2 + tau), (3, 1)).copy_from(&col);
        }
        out
    };

    let (b, sg, dl, k) = (cal.beta, cal.sigma, cal.delta, cal.kappa);
    let (gx, gp) = nk_gammas(cal, sol);
    let (px, pp, pi) = (p[0], p[1], p[2]);
    let vx = DVector::from_vec(vec![1.0 - b * gx * px, -(sg + b * gx * pp), -b * gx * pi]) / b;
    let vp = DVector::from_vec(vec![-dl * gp * px, 1.0 - dl * gp * pp, -dl * gp * pi]) / dl;
    let omega_inv = inverse(&omega, "conditioning covariance")?;
    let psi_x = &omega_inv * (discounted(b).transpose() * &vx);
    let psi_pi = &omega_inv * (discounted(b * dl).transpose() * &vp);

    let lhs = DMatrix::from_row_slice(2, 2, &[1.0 - psi_x[0], -psi_x[1], -(k + psi_pi[0]), 1.0 - psi_pi[1]]);
    let mut rhs = DMatrix::zeros(2, n);
    rhs[(0, 0)] = -sg + psi_x[2];
    rhs[(0, 1)] = sg;
    rhs[(1, 0)] = psi_pi[2];
    rhs[(1, 2)] = 1.0;
    for j in 3..n {
        rhs[(0, j)] = psi_x[j];
        rhs[(1, j)] = psi_pi[j];
    }
    let nu = inverse(&lhs, "guidance response system")? * rhs;
    Ok(ForwardGuidanceResult {
        horizon,
        nu_x: nu.row(0).transpose(),
        nu_pi: nu.row(1).transpose(),
        psi_x,
        psi_pi,
        omega_condition,
    })
}

/// Shock vector of a rate cut of `size` held for `T` further periods.
pub fn rate_cut_path(eq: &NkEquilibrium, horizon: usize, size: f64, kind: RateCut) -> DVector<f64> {
    let mut v = DVector::from_element(3 + horizon, size);
    v[1] = 0.0;
    v[2] = 0.0;
    if kind == RateCut::Conditional {
        let g0 = &eq.shocks.gamma0;
        v[1] = size * g0[(1, 0)] / g0[(0, 0)];
        v[2] = size * g0[(2, 0)] / g0[(0, 0)];
    }
    v
}

/// One row of a guidance sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgSweepRow {
    /// Guidance horizon.
    pub horizon: usize,
    /// Output-gap response.
    pub output_response: f64,
    /// Inflation response.
    pub inflation_response: f64,
}

/// Responses to a one-point rate cut held for `T = 0..=t_max` further periods.
pub fn fg_sweep(eq: &NkEquilibrium, cal: &NkCalibration, t_max: usize, kind: RateCut) -> Result<Vec<FgSweepRow>> {
    (0..=t_max)
        .map(|t| {
            let res = nk_forward_guidance(eq, cal, t)?;
            let (x, pi) = res.response(&rate_cut_path(eq, t, -1.0, kind));
            Ok(FgSweepRow { horizon: t, output_response: x, inflation_response: pi })
        })
        .collect()
}
