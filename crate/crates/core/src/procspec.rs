//! True processes, autocovariance and autocorrelation sequences, ergodicity
//! checks, linear transformations and the persistence decomposition.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, lyapunov, mat_pow, sign_normalize, spectral_radius, sym_condition, sym_eigen,
    sym_power, symmetrize,
};

/// Largest accepted condition number of a lag-zero autocovariance.
pub const GAMMA0_CONDITION_CAP: f64 = 1e12;

/// Tolerance of the exponential-ergodicity inequality.
pub const ERGODICITY_TOL: f64 = 1e-9;

/// Relative eigenvalue threshold used by [`rank_reduce`].
pub const RANK_RTOL: f64 = 1e-10;

/// Lag horizon `L` with `rate^L < 1e-12`, capped at `max`.
pub fn horizon_for_rate(rate: f64, max: usize) -> usize {
    if rate <= 0.0 {
        return 1;
    }
    let l = (1e-12f64.ln() / rate.ln()).ceil();
    if l.is_finite() && l >= 1.0 {
        (l as usize).min(max)
    } else {
        max
    }
}

/// Latent VAR(1) process `f_t = F f_{t-1} + e_t`, `y_t = H' f_t`, `e_t ~ (0, Sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVarProcess {
    /// Latent transition, `m x m`.
    pub f: DMatrix<f64>,
    /// Observation loading, `m x n`.
    pub h: DMatrix<f64>,
    /// Innovation covariance, `m x m`.
    pub sigma: DMatrix<f64>,
}

impl LatentVarProcess {
    /// Validates shapes, stability and the innovation covariance.
    ///
    /// Conditioning of the implied lag-zero autocovariance is checked by
    /// [`autocov_from_var`], since rank-deficient observables are legitimate
    /// inputs to [`rank_reduce`].
    pub fn new(f: DMatrix<f64>, h: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let m = f.nrows();
        if f.ncols() != m || h.nrows() != m || sigma.nrows() != m || sigma.ncols() != m || m == 0 {
            return Err(Error::Validation(format!(
                "process shapes: F {}x{}, H {}x{}, Sigma {}x{}",
                f.nrows(),
                f.ncols(),
                h.nrows(),
                h.ncols(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if h.ncols() == 0 {
            return Err(Error::Validation("process has no observables".into()));
        }
        if ![&f, &h, &sigma].iter().all(|m| m.iter().all(|x| x.is_finite())) {
            return Err(Error::Validation("process matrices must be finite".into()));
        }
        let rho = spectral_radius(&f);
        if rho >= 1.0 {
            return Err(Error::Validation(format!("F has spectral radius {rho:.6} >= 1")));
        }
        if asymmetry(&sigma) > 1e-12 * sigma.norm().max(1.0) {
            return Err(Error::Validation("Sigma must be symmetric".into()));
        }
        let (vals, _) = sym_eigen(&sigma);
        if vals[vals.len() - 1] < -1e-12 * vals[0].abs().max(1.0) {
            return Err(Error::Validation("Sigma must be positive semidefinite".into()));
        }
        let sigma = symmetrize(&sigma);
        Ok(Self { f, h, sigma })
    }

    /// Latent dimension `m`.
    pub fn latent_dim(&self) -> usize {
        self.f.nrows()
    }

    /// Observable dimension `n`.
    pub fn obs_dim(&self) -> usize {
        self.h.ncols()
    }

    /// Stationary covariance `V` of the latent state.
    pub fn state_covariance(&self) -> Result<DMatrix<f64>> {
        lyapunov(&self.f, &self.sigma)
    }
}

/// Closed-form description of a latent VAR source together with its state covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSource {
    /// The generating process.
    pub process: LatentVarProcess,
    /// Its stationary state covariance.
    pub state_cov: DMatrix<f64>,
}

/// Autocovariances `Gamma_0 .. Gamma_L` of a stationary process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovSeq {
    /// `gammas[l] = E[y_t y_{t-l}']`.
    pub gammas: Vec<DMatrix<f64>>,
    /// Geometric decay rate bounding `||Gamma_l||` beyond the stored horizon.
    pub tail_rate: f64,
    /// Generating process when known, enabling closed-form lag sums.
    pub source: Option<VarSource>,
}

impl AutocovSeq {
    /// Builds a sequence from explicit matrices, validating `Gamma_0`.
    pub fn from_gammas(gammas: Vec<DMatrix<f64>>, tail_rate: f64) -> Result<Self> {
        let out = Self { gammas, tail_rate, source: None };
        out.validate_shapes()?;
        out.check_gamma0()?;
        Ok(out)
    }

    fn validate_shapes(&self) -> Result<()> {
        let g0 = self
            .gammas
            .first()
            .ok_or_else(|| Error::Validation("autocovariance sequence is empty".into()))?;
        let n = g0.nrows();
        if n == 0 || g0.ncols() != n {
            return Err(Error::Validation("Gamma_0 must be square and non-empty".into()));
        }
        for (l, g) in self.gammas.iter().enumerate() {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::Validation(format!("Gamma_{l} has the wrong shape")));
            }
            if !g.iter().all(|x| x.is_finite()) {
                return Err(Error::Validation(format!("Gamma_{l} is not finite")));
            }
        }
        if !(0.0..1.0).contains(&self.tail_rate) {
            return Err(Error::Validation(format!("tail_rate {} not in [0,1)", self.tail_rate)));
        }
        Ok(())
    }

    /// Checks that `Gamma_0` is symmetric positive definite within the conditioning cap.
    pub fn check_gamma0(&self) -> Result<()> {
        let g0 = &self.gammas[0];
        if asymmetry(g0) > 1e-8 * g0.norm().max(1e-300) {
            return Err(Error::Validation("Gamma_0 must be symmetric".into()));
        }
        let condition = sym_condition(g0);
        if condition > GAMMA0_CONDITION_CAP {
            return Err(Error::SingularGamma0 { condition });
        }
        Ok(())
    }

    /// Observable dimension.
    pub fn dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    /// Largest stored lag `L`.
    pub fn max_lag(&self) -> usize {
        self.gammas.len() - 1
    }

    /// `Gamma_l` for any `l`, using the source beyond the stored horizon
    /// (zero when no source is attached).
    pub fn gamma(&self, l: usize) -> DMatrix<f64> {
        if l < self.gammas.len() {
            return self.gammas[l].clone();
        }
        match &self.source {
            Some(src) => {
                let p = &src.process;
                p.h.transpose() * mat_pow(&p.f, l) * &src.state_cov * &p.h
            }
            None => DMatrix::zeros(self.dim(), self.dim()),
        }
    }
}

/// Closed-form representation `Gamma_0^{-1/2} Gamma_l Gamma_0^{-1/2} = left F^l right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricLags {
    /// `n x m` factor.
    pub left: DMatrix<f64>,
    /// `m x m` transition.
    pub f: DMatrix<f64>,
    /// `m x n` factor.
    pub right: DMatrix<f64>,
}

impl GeometricLags {
    /// Symmetrized normalized autocovariance at lag `l`.
    pub fn corr(&self, l: usize) -> DMatrix<f64> {
        symmetrize(&(&self.left * mat_pow(&self.f, l) * &self.right))
    }

    /// `sum_{t>=1} a^t eta^{t-1} C_t` in closed form.
    pub fn weighted_sum(&self, a: f64, eta: f64) -> Result<DMatrix<f64>> {
        let m = self.f.nrows();
        let lhs = DMatrix::identity(m, m) - &self.f * (a * eta);
        let rhs = &self.f * a;
        let solved = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalFailure("geometric lag sum is singular".into()))?;
        Ok(symmetrize(&(&self.left * solved * &self.right)))
    }
}

/// Autocorrelation matrices `C_1 .. C_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrSeq {
    /// `cs[l-1] = C_l`.
    pub cs: Vec<DMatrix<f64>>,
    /// Closed form for arbitrary lags when the source process is known.
    pub geometric: Option<GeometricLags>,
}

impl AutocorrSeq {
    /// Observable dimension.
    pub fn dim(&self) -> usize {
        self.cs.first().map(|c| c.nrows()).unwrap_or(0)
    }

    /// `C_l` for `l >= 1`, from the closed form beyond the stored horizon.
    pub fn c(&self, l: usize) -> DMatrix<f64> {
        assert!(l >= 1, "autocorrelation lags start at one");
        if l <= self.cs.len() {
            return self.cs[l - 1].clone();
        }
        match &self.geometric {
            Some(g) => g.corr(l),
            None => DMatrix::zeros(self.dim(), self.dim()),
        }
    }
}

/// Solves the discrete Lyapunov equation `V = F V F' + Sigma`.
pub fn lyapunov_solve(f: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    lyapunov(f, sigma)
}

/// Autocovariances `Gamma_l = H' F^l V H` for `l = 0..=lags`.
pub fn autocov_from_var(process: &LatentVarProcess, lags: usize) -> Result<AutocovSeq> {
    if lags < 1 {
        return Err(Error::Validation("at least one lag is required".into()));
    }
    let v = process.state_covariance()?;
    let ht = process.h.transpose();
    let mut gammas = Vec::with_capacity(lags + 1);
    let mut fl_v = v.clone();
    for l in 0..=lags {
        let g = &ht * &fl_v * &process.h;
        gammas.push(if l == 0 { symmetrize(&g) } else { g });
        fl_v = &process.f * fl_v;
    }
    let rho = spectral_radius(&process.f);
    let tail_rate = (rho + 1e-3 * (1.0 - rho)).min(1.0 - 1e-12);
    let out = AutocovSeq {
        gammas,
        tail_rate,
        source: Some(VarSource { process: process.clone(), state_cov: v }),
    };
    out.check_gamma0()?;
    Ok(out)
}

/// Autocorrelations `C_l = 1/2 Gamma_0^{-1/2} (Gamma_l + Gamma_l') Gamma_0^{-1/2}`.
pub fn autocorr(acv: &AutocovSeq) -> Result<AutocorrSeq> {
    acv.check_gamma0()?;
    let gi = sym_power(&acv.gammas[0], -0.5);
    let cs = acv.gammas[1..]
        .iter()
        .map(|g| symmetrize(&(&gi * g * &gi)))
        .collect();
    let geometric = acv.source.as_ref().map(|src| GeometricLags {
        left: &gi * src.process.h.transpose(),
        f: src.process.f.clone(),
        right: &src.state_cov * &src.process.h * &gi,
    });
    Ok(AutocorrSeq { cs, geometric })
}

/// Outcome of the exponential-ergodicity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    /// True when every margin is at least `-ERGODICITY_TOL`.
    pub is_exp_ergodic: bool,
    /// First lag with a negative margin.
    pub first_violation_lag: Option<usize>,
    /// `margins[l-1] = rho(C_1)^l - rho(C_l)`.
    pub margins: Vec<f64>,
    /// `rho(C_l)` for each lag.
    pub rho: Vec<f64>,
}

fn sym_spectral_radius(c: &DMatrix<f64>) -> f64 {
    c.clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Tests `rho(C_l) <= rho(C_1)^l` at every stored lag.
pub fn check_exponential_ergodicity(acs: &AutocorrSeq) -> ErgodicityReport {
    let rho: Vec<f64> = acs.cs.iter().map(sym_spectral_radius).collect();
    let r1 = rho.first().copied().unwrap_or(0.0);
    let margins: Vec<f64> = rho
        .iter()
        .enumerate()
        .map(|(i, r)| r1.powi(i as i32 + 1) - r)
        .collect();
    let first_violation_lag = margins.iter().position(|&m| m < -ERGODICITY_TOL).map(|i| i + 1);
    ErgodicityReport { is_exp_ergodic: first_violation_lag.is_none(), first_violation_lag, margins, rho }
}

/// Sufficient condition for exponential ergodicity of a latent VAR with
/// full-rank square loading: after normalizing the state covariance to the
/// identity, the symmetric part of `F` has the same spectral norm as `F`.
pub fn sufficient_exp_ergodic(process: &LatentVarProcess) -> Result<bool> {
    if process.h.nrows() > process.h.ncols() {
        return Ok(false);
    }
    let v = process.state_covariance()?;
    let vh = sym_power(&v, 0.5);
    let vhi = sym_power(&v, -0.5);
    let f = &vhi * &process.f * &vh;
    let norm = f.clone().svd(false, false).singular_values.max();
    let sym = sym_spectral_radius(&symmetrize(&f));
    Ok((norm - sym).abs() <= 1e-10 * norm.max(1.0))
}

/// Certificate that the pseudo-true one-state noise parameter is positive:
/// `u'C_2 u > rho(C_1)^2` for the top eigenvector `u` of `C_1`.
pub fn eta_positive_certificate(acs: &AutocorrSeq) -> bool {
    let c1 = acs.c(1);
    let c2 = acs.c(2);
    let (vals, vecs) = sym_eigen(&c1);
    let n = vals.len();
    let rho = vals[0].abs().max(vals[n - 1].abs());
    (0..n)
        .filter(|&i| (vals[i].abs() - rho).abs() <= 1e-12)
        .map(|i| {
            let u = vecs.column(i);
            (u.transpose() * &c2 * u)[(0, 0)]
        })
        .any(|v| v > rho * rho + 1e-12)
}

/// `Gamma~_l = T Gamma_l T'` for a `k x n` matrix `T`.
pub fn transform_process(acv: &AutocovSeq, t: &DMatrix<f64>) -> Result<AutocovSeq> {
    if t.ncols() != acv.dim() || t.nrows() == 0 {
        return Err(Error::Validation(format!(
            "transform has {} columns, process has {} observables",
            t.ncols(),
            acv.dim()
        )));
    }
    let tt = t.transpose();
    let gammas: Vec<DMatrix<f64>> = acv.gammas.iter().map(|g| t * g * &tt).collect();
    let g0 = symmetrize(&gammas[0]);
    let condition = sym_condition(&g0);
    if condition > GAMMA0_CONDITION_CAP {
        return Err(Error::RankDeficient { condition });
    }
    let mut gammas = gammas;
    gammas[0] = g0;
    let source = acv.source.as_ref().map(|src| VarSource {
        process: LatentVarProcess {
            f: src.process.f.clone(),
            h: &src.process.h * &tt,
            sigma: src.process.sigma.clone(),
        },
        state_cov: src.state_cov.clone(),
    });
    Ok(AutocovSeq { gammas, tail_rate: acv.tail_rate, source })
}

/// Removes redundant observables.
///
/// Coordinates are scanned in order and kept when not spanned by those
/// already kept, so `y~` is a subvector of `y`. Returns the reduced sequence
/// and the `n x k` lifting matrix `T` with `y = T y~`.
pub fn rank_reduce(acv: &AutocovSeq) -> Result<(AutocovSeq, DMatrix<f64>)> {
    acv.validate_shapes()?;
    let g0 = symmetrize(&acv.gammas[0]);
    let n = g0.nrows();
    let (vals, _) = sym_eigen(&g0);
    let threshold = RANK_RTOL * vals[0].max(0.0);
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..n {
        let resid = if kept.is_empty() {
            g0[(j, j)]
        } else {
            let s = g0.select_rows(&kept).select_columns(&kept);
            let c = g0.select_rows(&kept).column(j).into_owned();
            let Some(x) = s.clone().cholesky().map(|ch| ch.solve(&c)) else {
                continue;
            };
            g0[(j, j)] - c.dot(&x)
        };
        if resid > threshold {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::SingularGamma0 { condition: f64::INFINITY });
    }
    if kept.len() == n {
        return Ok((acv.clone(), DMatrix::identity(n, n)));
    }
    let k = kept.len();
    let mut select = DMatrix::zeros(k, n);
    for (r, &j) in kept.iter().enumerate() {
        select[(r, j)] = 1.0;
    }
    let reduced = transform_process(acv, &select)?;
    let s = g0.select_rows(&kept).select_columns(&kept);
    let cross = g0.select_columns(&kept);
    let lift = cross
        * s.try_inverse()
            .ok_or_else(|| Error::NumericalFailure("reduced Gamma_0 is singular".into()))?;
    Ok((reduced, lift))
}

/// One component of the persistence decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceComponent {
    /// Lag-one autocorrelation of the component.
    pub rho: f64,
    /// Attention direction: the component is `p'y`.
    pub p: DVector<f64>,
    /// Loading of the component back onto `y`.
    pub q: DVector<f64>,
}

/// Orthogonal split of `y` into unit-variance components ordered by persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDecomposition {
    /// Components sorted by `|rho|` descending.
    pub components: Vec<PersistenceComponent>,
}

impl PersistenceDecomposition {
    /// `sum_i q_i (p_i'y)`.
    pub fn reconstruct(&self, y: &DVector<f64>) -> DVector<f64> {
        self.components
            .iter()
            .fold(DVector::zeros(y.len()), |acc, c| acc + &c.q * c.p.dot(y))
    }
}

/// Eigenpairs of `C_1` ordered by `|a|` descending, positive first on ties,
/// then by the sign-normalized eigenvector in lexicographic order.
pub(crate) fn ordered_eigenpairs(c1: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let (vals, vecs) = sym_eigen(c1);
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..vals.len())
        .map(|i| {
            let mut u = vecs.column(i).into_owned();
            sign_normalize(&mut u, 1e-12);
            (vals[i], u)
        })
        .collect();
    pairs.sort_by(|(a, u), (b, v)| {
        let tie = 1e-12;
        if (a.abs() - b.abs()).abs() > tie {
            return b.abs().total_cmp(&a.abs());
        }
        if (a - b).abs() > tie {
            return b.total_cmp(a);
        }
        for (x, y) in u.iter().zip(v.iter()) {
            if (x - y).abs() > tie {
                return x.total_cmp(y);
            }
        }
        std::cmp::Ordering::Equal
    });
    pairs
}

/// Persistence decomposition from the eigen-structure of `C_1`.
pub fn decompose_persistence(acv: &AutocovSeq) -> Result<PersistenceDecomposition> {
    if acv.gammas.len() < 2 {
        return Err(Error::Validation("Gamma_1 is required".into()));
    }
    let acs = autocorr(acv)?;
    let gi = sym_power(&acv.gammas[0], -0.5);
    let gh = sym_power(&acv.gammas[0], 0.5);
    let components = ordered_eigenpairs(&acs.cs[0])
        .into_iter()
        .map(|(rho, u)| PersistenceComponent { rho, p: &gi * &u, q: &gh * &u })
        .collect();
    Ok(PersistenceDecomposition { components })
}
