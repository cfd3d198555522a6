//! Observational equivalence of a general-equilibrium economy, where the
//! observables respond to the agents' action, and a partial-equilibrium economy
//! with transformed loadings.
//!
//! Shocks are independent AR(1): `f_t = diag(alphas) f_{t-1} + e_t`. Agents
//! forecast the observables with pseudo-true Markovian-in-observables `d`-state
//! models and act according to `x_t = b'y_t + E_t[sum_{s>=1} beta^s c'y_{t+s}]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::law::LinearLaw;
use super::{solve_fixed_point, FixedPointMethod, FixedPointOptions};
use crate::error::{Error, Result};
use crate::linalg::{inverse, pinv, sym_eigen};
use crate::procspec::{horizon_for_rate, AutocovSeq, LatentVarProcess, VarSource};
use crate::pseudotrue::solve_mio_d_state;
use crate::ssm::MioDStateModel;

/// Primitive description shared by both economies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GePeSpec {
    /// Loadings `H`, `m x n`, of the observables on the shocks.
    pub h: DMatrix<f64>,
    /// Weights of the current observables in the action.
    pub b: DVector<f64>,
    /// Weights of discounted expected future observables in the action.
    pub c: DVector<f64>,
    /// Feedback from the action to the observables.
    pub g: DVector<f64>,
    /// Discount factor.
    pub beta: f64,
    /// Shock persistences, sorted by magnitude descending.
    pub alphas: DVector<f64>,
    /// Shock standard deviations.
    pub sigmas: DVector<f64>,
    /// State dimension of the agents' models.
    pub d: usize,
}

impl GePeSpec {
    /// Checks shapes and ranges.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.h.shape();
        if self.b.len() != n || self.c.len() != n || self.g.len() != n {
            return Err(Error::Validation("b, c and g must have one entry per observable".into()));
        }
        if self.alphas.len() != m || self.sigmas.len() != m {
            return Err(Error::Validation("alphas and sigmas must have one entry per shock".into()));
        }
        if self.d == 0 || self.d > m.min(n) {
            return Err(Error::InvalidD { d: self.d, n: m.min(n) });
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::Validation("beta must lie in [0,1)".into()));
        }
        if self.alphas.iter().any(|a| !(a.abs() < 1.0)) {
            return Err(Error::Validation("shock persistences must lie in (-1,1)".into()));
        }
        if self.alphas.as_slice().windows(2).any(|w| w[0].abs() < w[1].abs()) {
            return Err(Error::Validation("alphas must be sorted by magnitude, largest first".into()));
        }
        Ok(())
    }

    fn shock_law(&self, observation: DMatrix<f64>, names: Vec<String>) -> LinearLaw {
        LinearLaw {
            transition: DMatrix::from_diagonal(&self.alphas),
            shock_cov: DMatrix::from_diagonal(&self.sigmas.map(|s| s * s)),
            observation,
            names,
        }
    }
}

/// Transformed loadings `H (I - (b + sum_{k<=d} a_k beta/(1 - a_k beta) H^+ e_k e_k' H c) g')`.
pub fn ge_pe_transform(
    h: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    g: &DVector<f64>,
    beta: f64,
    alphas: &DVector<f64>,
    d: usize,
) -> Result<DMatrix<f64>> {
    let (m, n) = h.shape();
    if b.len() != n || c.len() != n || g.len() != n || alphas.len() != m {
        return Err(Error::Validation("ge_pe_transform: shape mismatch".into()));
    }
    if d == 0 || d > m {
        return Err(Error::InvalidD { d, n: m });
    }
    if !(beta * alphas.amax() < 1.0) {
        return Err(Error::Validation("beta * max |alpha| must be below one".into()));
    }
    let (vals, _) = sym_eigen(&(h * h.transpose()));
    if m > n || vals[m - 1] <= 1e-12 * vals[0].max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficientH);
    }
    let hp = pinv(h);
    let hc = h * c;
    let mut shift = b.clone();
    for k in 0..d {
        let ab = alphas[k] * beta;
        shift += hp.column(k) * (ab / (1.0 - ab) * hc[k]);
    }
    Ok(h - h * shift * g.transpose())
}

/// Linear equilibrium `y_t = Y f_t`, `x_t = k'y_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GePeEquilibrium {
    /// `n x m` map from shocks to observables.
    pub loadings: DMatrix<f64>,
    /// Action weights on the current observables.
    pub action: DVector<f64>,
    /// Agents' pseudo-true model of the observables.
    pub model: MioDStateModel,
    /// Residual of the action fixed point.
    pub residual: f64,
    /// Stage that produced the fixed point.
    pub method: FixedPointMethod,
}

impl GePeEquilibrium {
    /// Law with the shocks as state and `(y_1..y_n, x)` reported.
    pub fn law(&self, spec: &GePeSpec) -> LinearLaw {
        let n = self.loadings.nrows();
        let mut obs = DMatrix::zeros(n + 1, self.loadings.ncols());
        obs.view_mut((0, 0), (n, obs.ncols())).copy_from(&self.loadings);
        obs.set_row(n, &(self.action.transpose() * &self.loadings));
        let mut names: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
        names.push("x".into());
        spec.shock_law(obs, names)
    }
}

fn observable_autocov(spec: &GePeSpec, y: &DMatrix<f64>) -> AutocovSeq {
    let f = DMatrix::from_diagonal(&spec.alphas);
    let v = DMatrix::from_diagonal(&DVector::from_iterator(
        spec.alphas.len(),
        spec.alphas.iter().zip(spec.sigmas.iter()).map(|(a, s)| s * s / (1.0 - a * a)),
    ));
    let rate = spec.alphas.amax();
    let lags = horizon_for_rate(rate, 400).max(2);
    let mut gammas = Vec::with_capacity(lags + 1);
    let mut fl = v.clone();
    for _ in 0..=lags {
        gammas.push(y * &fl * y.transpose());
        fl = &f * fl;
    }
    AutocovSeq {
        gammas,
        tail_rate: (rate + 1e-3 * (1.0 - rate)).min(1.0 - 1e-12),
        source: Some(VarSource {
            process: LatentVarProcess { f, h: y.transpose(), sigma: DMatrix::from_diagonal(&spec.sigmas.map(|s| s * s)) },
            state_cov: v,
        }),
    }
}

/// `b + sum_i beta a_i/(1 - beta a_i) p_i (q_i'c)`.
fn action_weights(spec: &GePeSpec, model: &MioDStateModel) -> DVector<f64> {
    model.components.iter().fold(spec.b.clone(), |acc, comp| {
        let ab = spec.beta * comp.a;
        acc + &comp.p * (ab / (1.0 - ab) * comp.q.dot(&spec.c))
    })
}

/// Equilibrium of the economy `y = H_ge' f + g x`; `g = 0` gives the partial-equilibrium economy.
pub fn solve_ge(spec: &GePeSpec, h_ge: &DMatrix<f64>, opts: &FixedPointOptions) -> Result<GePeEquilibrium> {
    spec.validate()?;
    let n = spec.b.len();
    let loadings_for = |k: &DVector<f64>| -> Result<DMatrix<f64>> {
        let m = DMatrix::identity(n, n) - &spec.g * k.transpose();
        Ok(inverse(&m, "feedback multiplier")? * h_ge.transpose())
    };
    let map = |k: &DVector<f64>| -> Result<DVector<f64>> {
        let y = loadings_for(k)?;
        let model = solve_mio_d_state(&observable_autocov(spec, &y), spec.d)?;
        Ok(action_weights(spec, &model))
    };
    let outcome = solve_fixed_point(map, &spec.b, opts)?;
    let loadings = loadings_for(&outcome.x)?;
    let model = solve_mio_d_state(&observable_autocov(spec, &loadings), spec.d)?;
    Ok(GePeEquilibrium { loadings, action: outcome.x, model, residual: outcome.residual, method: outcome.method })
}

/// Partial-equilibrium economy `y = H'f` with the same agents.
pub fn solve_pe(spec: &GePeSpec, opts: &FixedPointOptions) -> Result<GePeEquilibrium> {
    let pe = GePeSpec { g: DVector::zeros(spec.g.len()), ..spec.clone() };
    solve_ge(&pe, &spec.h, opts)
}
