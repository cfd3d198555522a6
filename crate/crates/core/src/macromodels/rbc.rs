//! Real business cycle economy with households who forecast using a pseudo-true
//! one-state model of the state `f_t = (k_t, a_t)`.
//!
//! Reported variables are `(k, a, o, n, w, r, c, i)`: capital, TFP, output,
//! hours, wage, rental rate, consumption and investment. The rental rate is the
//! deviation `r_bar * r_hat` so that it enters the Euler equation unscaled.
//! Consumption follows `c = (chi/beta + gamma_k) k + gamma_a a + chi r + chi zeta w`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::law::LinearLaw;
use super::{one_state_closed_form, solve_fixed_point, unit_l1, verify_eta, FixedPointMethod, FixedPointOptions, Mode};
use crate::error::{Error, Result};
use crate::linalg::{inverse, spectral_radius};
use crate::optim::newton_fd;
use crate::ssm::OneStatePseudoTrue;

/// Names of the reported variables, in order.
pub const RBC_VARIABLES: [&str; 8] = ["k", "a", "o", "n", "w", "r", "c", "i"];
const K: usize = 0;
const R: usize = 5;
const C: usize = 6;
const I: usize = 7;

/// Primitive parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbcCalibration {
    /// Discount factor.
    pub beta: f64,
    /// Elasticity of intertemporal substitution.
    pub sigma: f64,
    /// Frisch elasticity of labor supply.
    pub varphi: f64,
    /// Depreciation rate.
    pub delta: f64,
    /// Capital share.
    pub alpha: f64,
    /// TFP persistence.
    pub rho: f64,
    /// Standard deviation of TFP innovations.
    pub sigma_eps: f64,
}

/// Steady-state ratios implied by the primitives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbcSteadyState {
    /// Rental rate.
    pub r: f64,
    /// Output over capital.
    pub output_capital: f64,
    /// Consumption over capital.
    pub consumption_capital: f64,
    /// Output over investment.
    pub output_investment: f64,
    /// Consumption over investment.
    pub consumption_investment: f64,
    /// Weight of expected future rental rates in the consumption rule.
    pub chi: f64,
    /// Ratio of the wage to the rental-rate weight in the consumption rule.
    pub zeta: f64,
}

impl RbcCalibration {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        if !open01(self.beta) || !open01(self.delta) || !open01(self.alpha) {
            return Err(Error::Validation("beta, delta and alpha must lie in (0,1)".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::Validation("rho must lie in (-1,1)".into()));
        }
        if !(self.sigma > 0.0 && self.varphi > 0.0 && self.sigma_eps >= 0.0) {
            return Err(Error::Validation("sigma and varphi must be positive, sigma_eps nonnegative".into()));
        }
        Ok(())
    }

    /// Steady-state ratios.
    pub fn steady_state(&self) -> RbcSteadyState {
        let (b, a, d) = (self.beta, self.alpha, self.delta);
        let r = 1.0 / b - 1.0 + d;
        let ok = r / a;
        let ck = ok - d;
        let chi = (1.0 - b) / ((1.0 - a) * r / (a * self.sigma * self.varphi) + ck);
        let zeta = (1.0 - a) * (1.0 + self.varphi) * r / (a * self.varphi);
        RbcSteadyState {
            r,
            output_capital: ok,
            consumption_capital: ck,
            output_investment: ok / d,
            consumption_investment: ck / d,
            chi,
            zeta,
        }
    }

    /// Weights of discounted expected future `(k, a, o, n, w, r, c, i)` in consumption.
    pub fn expectation_weights(&self) -> DVector<f64> {
        let ss = self.steady_state();
        let mut v = DVector::zeros(8);
        v[R] = ss.chi - self.beta * self.sigma;
        v[4] = ss.chi * ss.zeta;
        v
    }

    /// Maps `(k, a)` to all reported variables given the consumption
    /// coefficients `c_k` (including `chi/beta`) and `c_a`.
    pub fn t_map(&self, c_k: f64, c_a: f64) -> Result<DMatrix<f64>> {
        let ss = self.steady_state();
        let (al, r, ph) = (self.alpha, ss.r, self.varphi);
        // Unknowns (o, n, w, r, c, i); right-hand side columns (k, a).
        let mut a = DMatrix::zeros(6, 6);
        let mut rhs = DMatrix::zeros(6, 2);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = -(1.0 - al);
        rhs[(0, 0)] = al;
        rhs[(0, 1)] = 1.0;
        a[(1, 2)] = 1.0;
        a[(1, 1)] = al;
        rhs[(1, 0)] = al;
        rhs[(1, 1)] = 1.0;
        a[(2, 3)] = 1.0;
        a[(2, 1)] = -(1.0 - al) * r;
        rhs[(2, 0)] = -(1.0 - al) * r;
        rhs[(2, 1)] = r;
        a[(3, 1)] = 1.0;
        a[(3, 2)] = -1.0 / ph;
        a[(3, 4)] = 1.0 / (self.sigma * ph);
        a[(4, 4)] = 1.0;
        a[(4, 3)] = -ss.chi;
        a[(4, 2)] = -ss.chi * ss.zeta;
        rhs[(4, 0)] = c_k;
        rhs[(4, 1)] = c_a;
        a[(5, 5)] = 1.0;
        a[(5, 0)] = -ss.output_investment;
        a[(5, 4)] = ss.consumption_investment;
        let w = inverse(&a, "RBC temporary-equilibrium system")? * rhs;
        let mut t = DMatrix::zeros(8, 2);
        t[(0, 0)] = 1.0;
        t[(1, 1)] = 1.0;
        t.view_mut((2, 0), (6, 2)).copy_from(&w);
        Ok(t)
    }

    /// `T` for expectation coefficients `(gamma_k, gamma_a)`.
    pub fn t_map_for(&self, gamma: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.t_map(self.steady_state().chi / self.beta + gamma[0], gamma[1])
    }

    /// Transition of `(k, a)` given `T`.
    pub fn transition(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        let (pk, pa) = (t[(I, 0)], t[(I, 1)]);
        let d = self.delta;
        DMatrix::from_row_slice(2, 2, &[1.0 - d + d * pk, d * pa, 0.0, self.rho])
    }

    /// Innovation covariance of `(k, a)`.
    pub fn shock_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, self.sigma_eps * self.sigma_eps]))
    }

    fn law_for(&self, t: &DMatrix<f64>) -> LinearLaw {
        LinearLaw {
            transition: self.transition(t),
            shock_cov: self.shock_cov(),
            observation: t.clone(),
            names: RBC_VARIABLES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Linear equilibrium of the RBC economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbcEquilibrium {
    /// Forecasting mode that produced the equilibrium.
    pub mode: Mode,
    /// Consumption coefficient on capital net of `chi/beta`.
    pub gamma_k: f64,
    /// Consumption coefficient on TFP.
    pub gamma_a: f64,
    /// Investment loading on capital.
    pub psi_k: f64,
    /// Investment loading on TFP.
    pub psi_a: f64,
    /// `8 x 2` map from `(k, a)` to the reported variables.
    pub t_map: DMatrix<f64>,
    /// Transition of `(k, a)`.
    pub transition: DMatrix<f64>,
    /// Steady-state ratios.
    pub steady: RbcSteadyState,
    /// Pseudo-true one-state model over `(k, a)`, signed so that `p_k > 0`.
    pub pseudo_true: Option<OneStatePseudoTrue>,
    /// `p / |p|_1`: weights of the perceived state on `(k, a)`.
    pub z_weights: Option<DVector<f64>>,
    /// Consumption loading on the normalized perceived state.
    pub consumption_loading: Option<f64>,
    /// Residual of the defining equations at the solution.
    pub residual: f64,
    /// Stage that produced the fixed point.
    pub method: Option<FixedPointMethod>,
    /// `eta` found by the general one-state solver at the fixed point.
    pub eta_check: Option<f64>,
}

impl RbcEquilibrium {
    /// Law of motion with all eight variables reported.
    pub fn law(&self, cal: &RbcCalibration) -> LinearLaw {
        cal.law_for(&self.t_map)
    }

    /// Population correlation of `c_t` and `k_t`.
    pub fn consumption_capital_corr(&self, cal: &RbcCalibration) -> Result<f64> {
        let x = self.law(cal).covariance(0)?;
        Ok(x[(C, K)] / (x[(C, C)] * x[(K, K)]).sqrt())
    }
}

/// Solves in the given mode with default settings.
pub fn solve_rbc(cal: &RbcCalibration, mode: Mode) -> Result<RbcEquilibrium> {
    solve_rbc_with(cal, mode, &FixedPointOptions::default())
}

/// Solves in the given mode.
pub fn solve_rbc_with(cal: &RbcCalibration, mode: Mode, opts: &FixedPointOptions) -> Result<RbcEquilibrium> {
    cal.validate()?;
    let (gamma, residual) = rational_gammas(cal)?;
    match mode {
        Mode::Rational => finish(cal, mode, &gamma, residual, None, None),
        Mode::CreeD1 => {
            let outcome = solve_fixed_point(|g| cree_map(cal, g).map(|(x, _)| x), &gamma, opts)?;
            let t = cal.t_map_for(&outcome.x)?;
            let eta = verify_eta(&cal.law_for(&t).state_autocov()?)?;
            finish(cal, mode, &outcome.x, outcome.residual, Some(outcome.method), Some(eta))
        }
    }
}

fn finish(
    cal: &RbcCalibration,
    mode: Mode,
    gamma: &DVector<f64>,
    residual: f64,
    method: Option<FixedPointMethod>,
    eta_check: Option<f64>,
) -> Result<RbcEquilibrium> {
    let t = cal.t_map_for(gamma)?;
    let transition = cal.transition(&t);
    let radius = spectral_radius(&transition);
    if radius >= 1.0 {
        return Err(Error::UnstableLaw { radius });
    }
    let (pseudo_true, z_weights, consumption_loading) = if mode == Mode::CreeD1 {
        let (_, mut sol) = cree_map(cal, gamma)?;
        if sol.p[0] < 0.0 {
            sol.flip();
        }
        let z = unit_l1(&sol.p);
        let l1 = sol.p.iter().map(|v| v.abs()).sum::<f64>();
        let load = discounted_scale(cal, &t, &sol) * l1;
        (Some(sol), Some(z), Some(load))
    } else {
        (None, None, None)
    };
    Ok(RbcEquilibrium {
        mode,
        gamma_k: gamma[0],
        gamma_a: gamma[1],
        psi_k: t[(I, 0)],
        psi_a: t[(I, 1)],
        transition,
        steady: cal.steady_state(),
        t_map: t,
        pseudo_true,
        z_weights,
        consumption_loading,
        residual,
        method,
        eta_check,
    })
}

/// `a beta / (1 - a beta) v'T q`: consumption response to the perceived state.
fn discounted_scale(cal: &RbcCalibration, t: &DMatrix<f64>, sol: &OneStatePseudoTrue) -> f64 {
    let ab = sol.a * cal.beta;
    ab / (1.0 - ab) * cal.expectation_weights().dot(&(t * &sol.q))
}

/// New `(gamma_k, gamma_a)` implied by the one-state model of the law under `gamma`.
fn cree_map(cal: &RbcCalibration, gamma: &DVector<f64>) -> Result<(DVector<f64>, OneStatePseudoTrue)> {
    let t = cal.t_map_for(gamma)?;
    let acv = cal.law_for(&t).state_autocov()?;
    let sol = one_state_closed_form(&acv)?;
    let next = &sol.p * discounted_scale(cal, &t, &sol);
    Ok((next, sol))
}

/// Euler-equation residual `c_row (I - F) + sigma beta r_row F` for consumption coefficients.
fn euler_residual(cal: &RbcCalibration, coef: &DVector<f64>) -> Result<DVector<f64>> {
    let t = cal.t_map(coef[0], coef[1])?;
    let f = cal.transition(&t);
    let c = t.row(C).into_owned();
    let r = t.row(R).into_owned();
    let res = &c - &c * &f + (&r * &f) * (cal.sigma * cal.beta);
    Ok(res.transpose())
}

const RATIONAL_STARTS: usize = 200;

/// Rational-expectations `(gamma_k, gamma_a)`: the Euler root with a stable
/// capital law, searched from seeded starts in `[-2, 2]^2`.
fn rational_gammas(cal: &RbcCalibration) -> Result<(DVector<f64>, f64)> {
    let chi_b = cal.steady_state().chi / cal.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut best = f64::INFINITY;
    for _ in 0..RATIONAL_STARTS {
        let x0 = DVector::from_iterator(2, (0..2).map(|_| rng.random_range(-2.0..2.0)));
        let Ok(root) = newton_fd(|x: &DVector<f64>| euler_residual(cal, x), &x0, 1e-13, 100) else { continue };
        best = best.min(root.residual);
        let Ok(t) = cal.t_map(root.x[0], root.x[1]) else { continue };
        if spectral_radius(&cal.transition(&t)) < 1.0 {
            return Ok((DVector::from_vec(vec![root.x[0] - chi_b, root.x[1]]), root.residual));
        }
    }
    Err(Error::NoConvergence { residual: best, trace: Vec::new() })
}

/// Equilibrium in which households forecast with the correctly specified
/// two-state model of `(k, a)`: expectations use the true transition.
pub fn solve_rbc_full_state(cal: &RbcCalibration) -> Result<RbcEquilibrium> {
    cal.validate()?;
    let v = cal.expectation_weights();
    let map = |g: &DVector<f64>| -> Result<DVector<f64>> {
        let t = cal.t_map_for(g)?;
        let f = cal.transition(&t);
        let bf = &f * cal.beta;
        let m = &bf * inverse(&(DMatrix::identity(2, 2) - &bf), "I - beta F")?;
        Ok((v.transpose() * t * m).transpose())
    };
    let (start, _) = rational_gammas(cal)?;
    let root = newton_fd(|g: &DVector<f64>| Ok(map(g)? - g), &start, 1e-13, 100)?;
    let mut eq = finish(cal, Mode::Rational, &root.x, root.residual, Some(FixedPointMethod::Newton), None)?;
    eq.residual = root.residual;
    Ok(eq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> RbcCalibration {
        RbcCalibration { beta: 0.99, sigma: 1.0, varphi: 1.0, delta: 0.012, alpha: 0.3, rho: 0.95, sigma_eps: 1.0 }
    }

    #[test]
    fn t_map_satisfies_production_and_resource_identities() {
        let cal = baseline();
        let ss = cal.steady_state();
        let t = cal.t_map(0.5, 0.3).unwrap();
        for col in 0..2 {
            let x: Vec<f64> = (0..8).map(|r| t[(r, col)]).collect();
            let (k, a, o, n, w, r, c, i) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
            assert!((o - (cal.alpha * k + a + (1.0 - cal.alpha) * n)).abs() < 1e-12);
            assert!((w - (o - n)).abs() < 1e-12);
            assert!((r - ss.r * (o - k)).abs() < 1e-12);
            assert!((o * ss.output_investment - c * ss.consumption_investment - i).abs() < 1e-10);
        }
    }

    #[test]
    fn rational_solution_satisfies_euler_and_is_stable() {
        let cal = baseline();
        let eq = solve_rbc(&cal, Mode::Rational).unwrap();
        let coef = DVector::from_vec(vec![eq.steady.chi / cal.beta + eq.gamma_k, eq.gamma_a]);
        assert!(euler_residual(&cal, &coef).unwrap().amax() < 1e-10);
        assert!(spectral_radius(&eq.transition) < 1.0);
    }

    #[test]
    fn full_state_forecasts_reproduce_rational_expectations() {
        let cal = baseline();
        let re = solve_rbc(&cal, Mode::Rational).unwrap();
        let full = solve_rbc_full_state(&cal).unwrap();
        assert!((&re.t_map - &full.t_map).amax() < 1e-7);
        assert!((&re.transition - &full.transition).amax() < 1e-7);
    }

    #[test]
    fn cree_fixed_point_is_consistent() {
        let cal = baseline();
        let eq = solve_rbc(&cal, Mode::CreeD1).unwrap();
        let g = DVector::from_vec(vec![eq.gamma_k, eq.gamma_a]);
        let (next, _) = cree_map(&cal, &g).unwrap();
        assert!((next - g).amax() < 1e-8);
        assert!(eq.eta_check.unwrap() <= super::super::ETA_VERIFY_TOL);
        let z = eq.z_weights.unwrap();
        assert!(z[0] > 0.0 && (z[0].abs() + z[1].abs() - 1.0).abs() < 1e-12);
        assert!(cal.rho * (1.0 - cal.delta + cal.delta * eq.psi_k) < 1.0);
    }
}
