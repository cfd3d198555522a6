//! Linear state laws: impulse responses, seeded simulation and population moments.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lyapunov, spectral_radius, sym_eigen, symmetrize};
use crate::procspec::{horizon_for_rate, AutocovSeq, LatentVarProcess, VarSource};

/// `f_t = transition f_{t-1} + e_t`, `e_t ~ N(0, shock_cov)`, `x_t = observation f_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLaw {
    /// State transition, `m x m`.
    pub transition: DMatrix<f64>,
    /// Innovation covariance, `m x m`.
    pub shock_cov: DMatrix<f64>,
    /// Map from state to reported variables, `k x m`.
    pub observation: DMatrix<f64>,
    /// Names of the reported variables.
    pub names: Vec<String>,
}

impl LinearLaw {
    /// Validates shapes; stability is checked by the operations that need it.
    pub fn new(
        transition: DMatrix<f64>,
        shock_cov: DMatrix<f64>,
        observation: DMatrix<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let m = transition.nrows();
        if transition.ncols() != m
            || shock_cov.shape() != (m, m)
            || observation.ncols() != m
            || names.len() != observation.nrows()
        {
            return Err(Error::Validation("linear law shapes are inconsistent".into()));
        }
        Ok(Self { transition, shock_cov, observation, names })
    }

    /// Index of a named variable.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn check_stable(&self) -> Result<()> {
        let radius = spectral_radius(&self.transition);
        if !radius.is_finite() || radius >= 1.0 {
            return Err(Error::UnstableLaw { radius });
        }
        Ok(())
    }

    /// Stationary state covariance.
    pub fn state_covariance(&self) -> Result<DMatrix<f64>> {
        self.check_stable()?;
        lyapunov(&self.transition, &self.shock_cov)
    }

    /// Autocovariances of the state with the VAR attached as source.
    pub fn state_autocov(&self) -> Result<AutocovSeq> {
        let v = symmetrize(&self.state_covariance()?);
        let rate = spectral_radius(&self.transition);
        let lags = horizon_for_rate(rate, 400).max(2);
        let mut gammas = Vec::with_capacity(lags + 1);
        let mut g = v.clone();
        for _ in 0..=lags {
            gammas.push(g.clone());
            g = &self.transition * g;
        }
        let m = self.transition.nrows();
        Ok(AutocovSeq {
            gammas,
            tail_rate: (rate + 1e-3 * (1.0 - rate)).min(1.0 - 1e-12),
            source: Some(VarSource {
                process: LatentVarProcess {
                    f: self.transition.clone(),
                    h: DMatrix::identity(m, m),
                    sigma: self.shock_cov.clone(),
                },
                state_cov: v,
            }),
        })
    }

    /// Population covariance of the reported variables at lag `l`, `E[x_t x_{t-l}']`.
    pub fn covariance(&self, l: usize) -> Result<DMatrix<f64>> {
        let v = self.state_covariance()?;
        let fl = crate::linalg::mat_pow(&self.transition, l);
        Ok(&self.observation * fl * v * self.observation.transpose())
    }
}

/// Response of the reported variables to a one-time innovation; row `h` is `T F^h shock`.
pub fn impulse_response(law: &LinearLaw, shock: &DVector<f64>, horizon: usize) -> Result<DMatrix<f64>> {
    law.check_stable()?;
    if shock.len() != law.transition.nrows() {
        return Err(Error::Validation("shock length differs from the state dimension".into()));
    }
    let mut out = DMatrix::zeros(horizon, law.observation.nrows());
    let mut state = shock.clone();
    for h in 0..horizon {
        out.set_row(h, &(&law.observation * &state).transpose());
        state = &law.transition * state;
    }
    Ok(out)
}

fn psd_factor(s: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(s);
    let root = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(0.0).sqrt()));
    vecs * DMatrix::from_diagonal(&root)
}

/// Simulated path of the reported variables (`periods x k`), started from the
/// stationary distribution. The same seed always yields the same path.
pub fn simulate(law: &LinearLaw, periods: usize, seed: u64) -> Result<DMatrix<f64>> {
    let v = law.state_covariance()?;
    let m = law.transition.nrows();
    let shock_root = psd_factor(&law.shock_cov);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(rng)))
    };
    let mut state = psd_factor(&v) * draw(&mut rng);
    let k = law.observation.nrows();
    let mut out = DMatrix::zeros(periods, k);
    let mut next = DVector::zeros(m);
    let mut row = DVector::zeros(k);
    for t in 0..periods {
        law.observation.mul_to(&state, &mut row);
        for j in 0..k {
            out[(t, j)] = row[j];
        }
        law.transition.mul_to(&state, &mut next);
        next += &shock_root * draw(&mut rng);
        std::mem::swap(&mut state, &mut next);
    }
    Ok(out)
}

/// Sample autocovariance `(1/T) sum_t (x_t - mean)(x_{t-l} - mean)'` of a simulated path.
pub fn sample_autocov(path: &DMatrix<f64>, l: usize) -> DMatrix<f64> {
    let (t, k) = path.shape();
    let mean = path.row_mean();
    let mut out = DMatrix::zeros(k, k);
    for s in l..t {
        for i in 0..k {
            let xi = path[(s, i)] - mean[i];
            for j in 0..k {
                out[(i, j)] += xi * (path[(s - l, j)] - mean[j]);
            }
        }
    }
    out / t as f64
}
