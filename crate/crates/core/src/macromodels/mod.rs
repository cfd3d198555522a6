//! Equilibria of macro models in which agents forecast with pseudo-true
//! low-dimensional models: new-Keynesian, RBC and DMP economies, forward
//! guidance, and the general/partial equilibrium transform.

pub mod dmp;
pub mod fg;
pub mod gepe;
pub mod law;
pub mod nk;
pub mod rbc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pinv;
use crate::optim::{nelder_mead_box, newton_fd, NelderMeadOptions};
use crate::procspec::{autocorr, rank_reduce, AutocovSeq};
use crate::pseudotrue::{one_state_from_c1, solve_one_state_general};
use crate::ssm::OneStatePseudoTrue;

pub use law::{impulse_response, sample_autocov, simulate, LinearLaw};

/// Forecasting mode of the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Pseudo-true one-state models.
    CreeD1,
    /// Rational expectations.
    Rational,
}

/// Settings of the fixed-point solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Sup-norm tolerance on `G(x) - x`.
    pub tol: f64,
    /// Weight on the new iterate in the damped iteration.
    pub damping: f64,
    /// Iteration cap of the damped iteration.
    pub max_iter: usize,
    /// Iteration cap of the Newton fallback.
    pub newton_max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-10, damping: 0.5, max_iter: 10_000, newton_max_iter: 200 }
    }
}

/// Which stage of [`solve_fixed_point`] produced the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointMethod {
    /// Damped iteration `x <- (1-w) x + w G(x)`.
    DampedIteration,
    /// Newton iteration on `G(x) - x` with a finite-difference Jacobian.
    Newton,
    /// Nelder-Mead minimization of `|G(x) - x|^2`.
    Minimization,
}

/// Result of [`solve_fixed_point`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOutcome {
    /// Fixed point.
    pub x: DVector<f64>,
    /// `|G(x) - x|_inf` at the returned point.
    pub residual: f64,
    /// Total map evaluations of the damped stage.
    pub iterations: usize,
    /// Stage that converged.
    pub method: FixedPointMethod,
    /// Residual history of the damped stage followed by later stages.
    pub trace: Vec<f64>,
}

const STALL_WINDOW: usize = 200;

/// Damped iteration `x <- (1-w) x + w G(x)` from `x0`. On failure returns the
/// best iterate, the iteration count and the residual history.
pub(crate) fn damped_iteration<G>(
    g: &mut G,
    x0: &DVector<f64>,
    opts: &FixedPointOptions,
) -> std::result::Result<FixedPointOutcome, (DVector<f64>, usize, Vec<f64>)>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut trace = Vec::new();
    let mut x = x0.clone();
    let mut best = (f64::INFINITY, x0.clone());
    let mut last_improvement = 0;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let Ok(gx) = g(&x) else { break };
        let r = (&gx - &x).amax();
        trace.push(r);
        if !r.is_finite() {
            break;
        }
        if r < opts.tol {
            return Ok(FixedPointOutcome { x, residual: r, iterations, method: FixedPointMethod::DampedIteration, trace });
        }
        if r < 0.5 * best.0 {
            best = (r, x.clone());
            last_improvement = iterations;
        } else if r < best.0 {
            best = (r, x.clone());
        }
        if iterations - last_improvement > STALL_WINDOW {
            break;
        }
        x = &x * (1.0 - opts.damping) + gx * opts.damping;
    }
    Err((best.1, iterations, trace))
}

/// Finds `x = G(x)`: damped iteration from `x0`, then Newton from the best
/// iterate and from `x0`, then Nelder-Mead minimization of the squared residual.
pub fn solve_fixed_point<G>(mut g: G, x0: &DVector<f64>, opts: &FixedPointOptions) -> Result<FixedPointOutcome>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(opts.tol > 0.0) || !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Validation("fixed-point tolerance and damping must be positive".into()));
    }
    let (best, iterations, mut trace) = match damped_iteration(&mut g, x0, opts) {
        Ok(out) => return Ok(out),
        Err(e) => e,
    };
    let mut residual_fn = |v: &DVector<f64>| -> Result<DVector<f64>> { Ok(g(v)? - v) };
    let mut starts = vec![x0.clone()];
    if (&best - x0).amax() > 0.0 {
        starts.insert(0, best);
    }
    for start in &starts {
        match newton_fd(&mut residual_fn, start, opts.tol, opts.newton_max_iter) {
            Ok(root) => {
                trace.extend(root.trace);
                return Ok(FixedPointOutcome {
                    x: root.x,
                    residual: root.residual,
                    iterations,
                    method: FixedPointMethod::Newton,
                    trace,
                });
            }
            Err(Error::NoConvergence { trace: t, .. }) => trace.extend(t),
            Err(_) => {}
        }
    }
    let n = x0.len();
    let lower: Vec<f64> = x0.iter().map(|v| v - 10.0 * v.abs().max(1.0)).collect();
    let upper: Vec<f64> = x0.iter().map(|v| v + 10.0 * v.abs().max(1.0)).collect();
    let step: Vec<f64> = x0.iter().map(|v| 0.1 * v.abs().max(0.1)).collect();
    let objective = |v: &[f64]| match residual_fn(&DVector::from_column_slice(v)) {
        Ok(r) if r.iter().all(|x| x.is_finite()) => r.norm_squared(),
        _ => f64::INFINITY,
    };
    let nm = NelderMeadOptions { xtol: 1e-14, max_iter: 20_000 * n, restarts: 3 };
    let (xm, _) = nelder_mead_box(objective, x0.as_slice(), &step, &lower, &upper, &nm);
    let xm = DVector::from_vec(xm);
    let residual = residual_fn(&xm).map(|r| r.amax()).unwrap_or(f64::INFINITY);
    trace.push(residual);
    if residual < opts.tol {
        return Ok(FixedPointOutcome { x: xm, residual, iterations, method: FixedPointMethod::Minimization, trace });
    }
    Err(Error::NoConvergence { residual, trace })
}

/// Closed-form one-state model of a possibly rank-deficient process.
///
/// Redundant observables are removed first; `p` and `q` are lifted back so
/// that `q p'` acts on the original observables.
pub(crate) fn one_state_closed_form(acv: &AutocovSeq) -> Result<OneStatePseudoTrue> {
    let (reduced, lift) = rank_reduce(acv)?;
    let acs = autocorr(&reduced)?;
    let sol = one_state_from_c1(&reduced, &acs.cs[0]);
    Ok(lift_solution(sol, &lift))
}

/// General one-state solver applied after rank reduction; used to verify `eta = 0`.
pub(crate) fn one_state_general_reduced(acv: &AutocovSeq) -> Result<OneStatePseudoTrue> {
    let (reduced, lift) = rank_reduce(acv)?;
    Ok(lift_solution(solve_one_state_general(&reduced)?, &lift))
}

fn lift_solution(mut sol: OneStatePseudoTrue, lift: &DMatrix<f64>) -> OneStatePseudoTrue {
    if lift.nrows() != lift.ncols() || (lift - DMatrix::identity(lift.nrows(), lift.ncols())).amax() > 0.0 {
        sol.p = pinv(lift).transpose() * &sol.p;
        sol.q = lift * &sol.q;
    }
    sol
}

/// Largest `eta` tolerated when verifying that a fixed point has no perceived noise.
pub const ETA_VERIFY_TOL: f64 = 1e-6;

/// Runs the general one-state solver on `acv` and fails unless `eta` is zero.
pub(crate) fn verify_eta(acv: &AutocovSeq) -> Result<f64> {
    let eta = one_state_general_reduced(acv)?.eta;
    if eta > ETA_VERIFY_TOL {
        return Err(Error::VerificationFailed(format!("perceived noise share eta = {eta:.3e} at the fixed point")));
    }
    Ok(eta)
}

/// Normalizes `p` to unit 1-norm.
pub(crate) fn unit_l1(p: &DVector<f64>) -> DVector<f64> {
    p / p.iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damped_iteration_finds_contraction_fixed_point() {
        let g = |x: &DVector<f64>| Ok(DVector::from_vec(vec![0.5 * x[0].cos(), 0.3 * x[1] + 1.0]));
        let out = solve_fixed_point(g, &DVector::zeros(2), &Default::default()).unwrap();
        assert_eq!(out.method, FixedPointMethod::DampedIteration);
        assert!((out.x[1] - 1.0 / 0.7).abs() < 1e-9);
    }

    #[test]
    fn newton_rescues_an_oscillating_map() {
        // G(x) = -3x + 4 has fixed point 1 but the damped map has slope -1.
        let g = |x: &DVector<f64>| Ok(DVector::from_vec(vec![-3.0 * x[0] + 4.0]));
        let out = solve_fixed_point(g, &DVector::from_vec(vec![0.0]), &Default::default()).unwrap();
        assert_eq!(out.method, FixedPointMethod::Newton);
        assert!((out.x[0] - 1.0).abs() < 1e-10);
    }
}
