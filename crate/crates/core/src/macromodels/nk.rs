//! New-Keynesian economy with agents who forecast using pseudo-true one-state models.
//!
//! Shocks are `s_t = (i_t, rn_t, mu_t)`: the nominal rate, the natural-rate
//! shock and the cost-push shock. The forecasting basis is `f_t = (x_t, pi_t, i_t)`
//! and a linear equilibrium sets `(x_t, pi_t) = L s_t`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::law::LinearLaw;
use super::{
    damped_iteration, one_state_closed_form, solve_fixed_point, verify_eta, FixedPointMethod, FixedPointOptions,
    FixedPointOutcome,
};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, inverse, pinv, spectral_radius, sym_condition, sym_eigen, symmetrize};
use crate::optim::newton_fd;
use crate::procspec::{
    autocorr, check_exponential_ergodicity, horizon_for_rate, AutocovSeq, LatentVarProcess, VarSource,
};
use crate::ssm::OneStatePseudoTrue;

/// Structural parameters and shock moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NkCalibration {
    /// Discount factor.
    pub beta: f64,
    /// Intertemporal elasticity of substitution.
    pub sigma: f64,
    /// Calvo parameter.
    pub delta: f64,
    /// Phillips-curve slope.
    pub kappa: f64,
    /// `E[s_t s_t']` for `s = (i, rn, mu)`.
    pub shock_gamma0: DMatrix<f64>,
    /// `E[s_t s_{t-1}']`.
    pub shock_gamma1: DMatrix<f64>,
}

/// VAR(1) completion of the shock process from its first two autocovariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockVar {
    /// `F_s = Gamma_1 Gamma_0^+`.
    pub transition: DMatrix<f64>,
    /// `Gamma_0 - F_s Gamma_0 F_s'`.
    pub innovation_cov: DMatrix<f64>,
    /// `Gamma_0`.
    pub gamma0: DMatrix<f64>,
}

impl NkCalibration {
    /// Checks parameter ranges and the shock moments.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Validation(what.to_string()));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0,1)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0,1)");
        }
        if !(self.kappa > 0.0) || !(self.sigma > 0.0) {
            return bad("kappa and sigma must be positive");
        }
        if self.shock_gamma0.shape() != (3, 3) || self.shock_gamma1.shape() != (3, 3) {
            return bad("shock autocovariances must be 3x3");
        }
        let g0 = &self.shock_gamma0;
        if asymmetry(g0) > 1e-10 * g0.norm().max(1.0) {
            return bad("shock Gamma_0 must be symmetric");
        }
        let (vals, _) = sym_eigen(g0);
        if vals[2] < -1e-10 * vals[0].abs().max(1.0) || vals[0] <= 0.0 {
            return bad("shock Gamma_0 must be positive semidefinite and nonzero");
        }
        Ok(())
    }

    /// VAR(1) in the shocks matching `Gamma_0` and `Gamma_1`.
    pub fn shock_var(&self) -> Result<ShockVar> {
        self.validate()?;
        let g0 = symmetrize(&self.shock_gamma0);
        let transition = &self.shock_gamma1 * pinv(&g0);
        let radius = spectral_radius(&transition);
        if radius >= 1.0 {
            return Err(Error::UnstableLaw { radius });
        }
        let innovation_cov = symmetrize(&(&g0 - &transition * &g0 * transition.transpose()));
        let (vals, _) = sym_eigen(&innovation_cov);
        if vals[2] < -1e-9 * vals[0].abs().max(1.0) {
            return Err(Error::Validation(
                "shock autocovariances admit no VAR(1) completion (innovation covariance is indefinite)".into(),
            ));
        }
        Ok(ShockVar { transition, innovation_cov, gamma0: g0 })
    }
}

impl ShockVar {
    /// Autocovariances of `M s_t` for a `k x 3` map `M`, with the VAR attached as source.
    pub fn autocov_of(&self, m: &DMatrix<f64>) -> AutocovSeq {
        let rate = spectral_radius(&self.transition);
        let lags = horizon_for_rate(rate, 400).max(2);
        let mt = m.transpose();
        let mut gammas = Vec::with_capacity(lags + 1);
        let mut fl = self.gamma0.clone();
        for l in 0..=lags {
            let g = m * &fl * &mt;
            gammas.push(if l == 0 { symmetrize(&g) } else { g });
            fl = &self.transition * fl;
        }
        AutocovSeq {
            gammas,
            tail_rate: (rate + 1e-3 * (1.0 - rate)).min(1.0 - 1e-12),
            source: Some(VarSource {
                process: LatentVarProcess {
                    f: self.transition.clone(),
                    h: mt,
                    sigma: self.innovation_cov.clone(),
                },
                state_cov: self.gamma0.clone(),
            }),
        }
    }
}

/// Settings of [`solve_nk_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NkSolverOptions {
    /// Fixed-point settings.
    pub fixed_point: FixedPointOptions,
    /// Additional randomized Newton starts used to detect other fixed points.
    pub multistarts: usize,
    /// Seed of the multistart perturbations.
    pub seed: u64,
}

impl Default for NkSolverOptions {
    fn default() -> Self {
        Self { fixed_point: FixedPointOptions::default(), multistarts: 24, seed: 0 }
    }
}

/// Linear constrained-rational-expectations equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NkEquilibrium {
    /// IS expectation coefficient `a (q_x - sigma q_pi)`.
    pub gamma_x: f64,
    /// Phillips-curve expectation coefficient `a beta q_pi`.
    pub gamma_pi: f64,
    /// Rows `x` and `pi`, columns `(i, rn, mu)`.
    pub loadings: DMatrix<f64>,
    /// Pseudo-true one-state model over `f = (x, pi, i)`, signed so that `q_x > 0`.
    pub solution: OneStatePseudoTrue,
    /// `Gamma_0` of `f`.
    pub gamma0: DMatrix<f64>,
    /// `Gamma_1` of `f`.
    pub gamma1: DMatrix<f64>,
    /// VAR(1) completion of the shocks.
    pub shocks: ShockVar,
    /// `|G(L) - L|_inf` at the reported fixed point.
    pub residual: f64,
    /// Stage that produced the fixed point.
    pub method: FixedPointMethod,
    /// Whether `f` passes the exponential-ergodicity test.
    pub exp_ergodic: bool,
    /// `eta` found by the general one-state solver at the fixed point.
    pub eta_check: f64,
    /// Loadings of other fixed points found by the multistart search.
    pub other_fixed_points: Vec<DMatrix<f64>>,
    /// Non-fatal diagnostics.
    pub warnings: Vec<String>,
}

/// `(gamma_x, gamma_pi)` implied by a one-state model over `f`.
pub fn nk_gammas(cal: &NkCalibration, sol: &OneStatePseudoTrue) -> (f64, f64) {
    let q = &sol.q;
    (sol.a * (q[0] - cal.sigma * q[1]), sol.a * cal.beta * q[1])
}

/// Temporary-equilibrium loadings of `(x, pi)` on `(i, rn, mu)` given the agents' model.
pub fn nk_loadings(cal: &NkCalibration, sol: &OneStatePseudoTrue) -> Result<DMatrix<f64>> {
    let (gx, gp) = nk_gammas(cal, sol);
    let (px, pp, pi) = (sol.p[0], sol.p[1], sol.p[2]);
    let (s, k) = (cal.sigma, cal.kappa);
    let den = 1.0 - px * gx - pp * (gp + k * gx);
    if den.abs() < 1e-12 {
        return Err(Error::NumericalFailure("temporary equilibrium is singular".into()));
    }
    Ok(DMatrix::from_row_slice(
        2,
        3,
        &[
            gx * pi - s * (1.0 - gp * pp),
            s * (1.0 - gp * pp),
            gx * pp,
            (gp + k * gx) * pi - s * (k + gp * px),
            s * (k + gp * px),
            1.0 - gx * px,
        ],
    )
    .map(|v| v / den))
}

/// Map from shocks to `f = (x, pi, i)`.
pub fn basis_map(loadings: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 3);
    m.view_mut((0, 0), (2, 3)).copy_from(loadings);
    m[(2, 0)] = 1.0;
    m
}

/// Rational-expectations loadings under the VAR(1) shock completion.
pub fn rational_loadings(cal: &NkCalibration) -> Result<DMatrix<f64>> {
    let var = cal.shock_var()?;
    rational_loadings_for(cal, &var)
}

fn rational_loadings_for(cal: &NkCalibration, var: &ShockVar) -> Result<DMatrix<f64>> {
    let id = DMatrix::<f64>::identity(3, 3);
    let f = &var.transition;
    let discounted = |d: f64| -> Result<DMatrix<f64>> {
        Ok(f * d * inverse(&(&id - f * d), "I - dF")?)
    };
    let (b, s, k, dl) = (cal.beta, cal.sigma, cal.kappa, cal.delta);
    let mb = discounted(b)?;
    let mbd = discounted(b * dl)?;
    let e = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
    let emu = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
    // [Lx Lpi] * [[I - c1 Mb, -k (I + Mbd)], [s/b Mb, I - c2 Mbd]] = [-s e (I + Mb), emu (I + Mbd)]
    let mut lhs = DMatrix::zeros(6, 6);
    lhs.view_mut((0, 0), (3, 3)).copy_from(&(&id - &mb * ((1.0 - b) / b)));
    lhs.view_mut((0, 3), (3, 3)).copy_from(&((&id + &mbd) * -k));
    lhs.view_mut((3, 0), (3, 3)).copy_from(&(&mb * (s / b)));
    lhs.view_mut((3, 3), (3, 3)).copy_from(&(&id - &mbd * ((1.0 - dl) / dl)));
    let mut rhs = DMatrix::zeros(1, 6);
    rhs.view_mut((0, 0), (1, 3)).copy_from(&(&e * (&id + &mb) * -s));
    rhs.view_mut((0, 3), (1, 3)).copy_from(&(&emu * (&id + &mbd)));
    let sol = lhs
        .transpose()
        .lu()
        .solve(&rhs.transpose())
        .ok_or_else(|| Error::NumericalFailure("rational-expectations system is singular".into()))?;
    Ok(DMatrix::from_row_slice(2, 3, sol.as_slice()))
}

fn to_vec(l: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(6, (0..2).flat_map(|r| (0..3).map(move |c| l[(r, c)])))
}

fn to_mat(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 3, v.as_slice())
}

fn oriented(mut sol: OneStatePseudoTrue) -> OneStatePseudoTrue {
    if sol.q[0] < 0.0 {
        sol.flip();
    }
    sol
}

/// Solves with default settings.
pub fn solve_nk(cal: &NkCalibration) -> Result<NkEquilibrium> {
    solve_nk_with(cal, &NkSolverOptions::default())
}

/// Damped iteration on the loadings from the rational-expectations start.
/// If it fails, Newton on the reduced residual is run from the rational and
/// static starts and then from seeded perturbations of the rational start;
/// the generic fallback of [`solve_fixed_point`] comes last. Other fixed
/// points found by the multistart search are reported.
pub fn solve_nk_with(cal: &NkCalibration, opts: &NkSolverOptions) -> Result<NkEquilibrium> {
    let var = cal.shock_var()?;
    let start = to_vec(&rational_loadings_for(cal, &var)?);
    let mut map = |v: &DVector<f64>| -> Result<DVector<f64>> {
        let acv = var.autocov_of(&basis_map(&to_mat(v)));
        let sol = one_state_closed_form(&acv)?;
        Ok(to_vec(&nk_loadings(cal, &sol)?))
    };
    let reduced = ReducedNk::new(cal, &var)?;
    let mut roots = reduced.multistart(&start, opts);
    let outcome = match damped_iteration(&mut map, &start, &opts.fixed_point) {
        Ok(out) => out,
        Err((_, iterations, mut trace)) => {
            let verified = roots.iter().position(|r| {
                map(r).map(|g| (g - r).amax() < 10.0 * opts.fixed_point.tol).unwrap_or(false)
            });
            match verified {
                Some(i) => {
                    let x = roots.remove(i);
                    let residual = (map(&x)? - &x).amax();
                    trace.push(residual);
                    FixedPointOutcome { x, residual, iterations, method: FixedPointMethod::Newton, trace }
                }
                None => solve_fixed_point(&mut map, &start, &opts.fixed_point)?,
            }
        }
    };
    let loadings = to_mat(&outcome.x);
    roots.retain(|r| (r - &outcome.x).amax() > 1e-6);
    let other_fixed_points: Vec<DMatrix<f64>> = roots.iter().map(to_mat).collect();
    let mut warnings = Vec::new();
    if !other_fixed_points.is_empty() {
        warnings.push(format!("{} other fixed point(s) found by multistart", other_fixed_points.len()));
    }
    let m = basis_map(&loadings);
    let acv = var.autocov_of(&m);
    let solution = oriented(one_state_closed_form(&acv)?);
    let exp_ergodic = match autocorr(&acv) {
        Ok(acs) => check_exponential_ergodicity(&acs).is_exp_ergodic,
        Err(_) => {
            let (reduced, _) = crate::procspec::rank_reduce(&acv)?;
            check_exponential_ergodicity(&autocorr(&reduced)?).is_exp_ergodic
        }
    };
    if !exp_ergodic {
        warnings.push("f is not exponentially ergodic; closed-form expectations may not be pseudo-true".into());
    }
    let eta_check = verify_eta(&acv)?;
    let (gamma_x, gamma_pi) = nk_gammas(cal, &solution);
    Ok(NkEquilibrium {
        gamma_x,
        gamma_pi,
        loadings,
        gamma0: acv.gammas[0].clone(),
        gamma1: acv.gammas[1].clone(),
        solution,
        shocks: var,
        residual: outcome.residual,
        method: outcome.method,
        exp_ergodic,
        eta_check,
        other_fixed_points,
        warnings,
    })
}

/// Fixed-point residual in the loadings using linear invariance: with
/// `f = M s` and `M` invertible, the one-state model of `f` is
/// `(a, M^{-T} p_s, M q_s)` where `(a, p_s, q_s)` is that of the shocks.
struct ReducedNk<'a> {
    cal: &'a NkCalibration,
    base: OneStatePseudoTrue,
}

impl<'a> ReducedNk<'a> {
    fn new(cal: &'a NkCalibration, var: &ShockVar) -> Result<Self> {
        let shock_acv = var.autocov_of(&DMatrix::identity(3, 3));
        let base = one_state_closed_form(&shock_acv)?;
        Ok(Self { cal, base })
    }

    fn residual(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let m = basis_map(&to_mat(v));
        if sym_condition(&(&m.transpose() * &m)) > 1e16 {
            return Err(Error::NumericalFailure("basis map is singular".into()));
        }
        let mi = inverse(&m, "basis map")?;
        let sol = OneStatePseudoTrue { p: mi.transpose() * &self.base.p, q: &m * &self.base.q, ..self.base.clone() };
        Ok(to_vec(&nk_loadings(self.cal, &sol)?) - v)
    }

    /// Distinct roots with an invertible basis map, in the order found:
    /// rational start, static start, then seeded perturbations.
    fn multistart(&self, start: &DVector<f64>, opts: &NkSolverOptions) -> Vec<DVector<f64>> {
        let (s, k) = (self.cal.sigma, self.cal.kappa);
        let static_start = DVector::from_vec(vec![-s, s, 0.0, -s * k, s * k, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut starts = vec![start.clone(), static_start];
        for _ in 0..opts.multistarts {
            let jitter = DVector::from_iterator(6, (0..6).map(|_| StandardNormal.sample(&mut rng)));
            starts.push(start + jitter);
        }
        let mut roots: Vec<DVector<f64>> = Vec::new();
        for x0 in &starts {
            let Ok(root) = newton_fd(|v: &DVector<f64>| self.residual(v), x0, 1e-12, 100) else { continue };
            let m = basis_map(&to_mat(&root.x));
            let (vals, _) = sym_eigen(&(&m.transpose() * &m));
            if vals[2] < 1e-10 * vals[0] {
                continue;
            }
            if roots.iter().all(|r| (r - &root.x).amax() > 1e-6) {
                roots.push(root.x);
            }
        }
        roots
    }
}

impl NkEquilibrium {
    /// Map from shocks to `y = (x, pi, i, rn, mu)`.
    pub fn observation(&self) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(5, 3);
        t.view_mut((0, 0), (2, 3)).copy_from(&self.loadings);
        t.view_mut((2, 0), (3, 3)).copy_from(&DMatrix::identity(3, 3));
        t
    }

    /// Law of motion with the shocks as state and `(x, pi, i, rn, mu)` reported.
    pub fn law(&self) -> LinearLaw {
        LinearLaw {
            transition: self.shocks.transition.clone(),
            shock_cov: self.shocks.innovation_cov.clone(),
            observation: self.observation(),
            names: ["x", "pi", "i", "rn", "mu"].iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Perceived persistence of inflation, `a q_pi p_pi`.
    pub fn perceived_inflation_persistence(&self) -> f64 {
        self.solution.a * self.solution.q[1] * self.solution.p[1]
    }

    /// Residuals of the IS and Phillips curves at shock vector `s` with
    /// subjective expectations from the embedded one-state model.
    pub fn structural_residuals(&self, cal: &NkCalibration, s: &DVector<f64>) -> Result<(f64, f64)> {
        let obs = self.observation();
        let y = &obs * s;
        let f = DVector::from_vec(vec![y[0], y[1], y[2]]);
        // Observables are linear in f, so y = N f with N = obs M^{-1}.
        let n = &obs * pinv(&basis_map(&self.loadings));
        let sol = &self.solution;
        let z = sol.p.dot(&f);
        let (b, sg, k, dl, a) = (cal.beta, cal.sigma, cal.kappa, cal.delta, sol.a);
        let ey = &n * &sol.q * z;
        let is_w = DVector::from_vec(vec![(1.0 - b) / b, -sg / b, -sg, sg, 0.0]);
        let pc_w = DVector::from_vec(vec![k, (1.0 - dl) / dl, 0.0, 0.0, 1.0]);
        let is_exp = is_w.dot(&ey) * a * b / (1.0 - a * b);
        let pc_exp = pc_w.dot(&ey) * a * b * dl / (1.0 - a * b * dl);
        let is_res = y[0] - (-sg * (y[2] - y[3]) + is_exp);
        let pc_res = y[1] - (k * y[0] + y[4] + pc_exp);
        Ok((is_res, pc_res))
    }
}
