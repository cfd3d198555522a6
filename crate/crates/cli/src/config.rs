//! Strict TOML/JSON run configuration.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use ptsm::macromodels::dmp::DmpCalibration;
use ptsm::macromodels::nk::NkCalibration;
use ptsm::macromodels::rbc::RbcCalibration;
use ptsm::presets::{self, Preset};
use ptsm::{autocov_from_var, AutocovSeq, GePeSpec, LatentVarProcess};

use crate::error::CliError;

/// Everything a command may read from a config file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Observable process for `pseudotrue`, `ergodicity` and `decompose`.
    pub process: Option<ProcessSpec>,
    /// New-Keynesian calibration.
    pub nk: Option<NkConfig>,
    /// RBC calibration.
    pub rbc: Option<RbcCalibration>,
    /// Search-and-matching calibration.
    pub dmp: Option<DmpCalibration>,
    /// General/partial equilibrium economy.
    pub ge_pe: Option<GePeConfig>,
    /// Numeric settings.
    #[serde(default)]
    pub knobs: Knobs,
}

/// Observable process, either as a latent VAR or as raw autocovariances.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    /// `x_t = F x_{t-1} + e_t`, `y_t = H' x_t`, `e_t ~ N(0, sigma)`.
    Var { f: Vec<Vec<f64>>, h: Vec<Vec<f64>>, sigma: Vec<Vec<f64>> },
    /// `gammas[l] = E[y_t y_{t-l}']`.
    Autocov { gammas: Vec<Vec<Vec<f64>>>, tail_rate: f64 },
}

/// New-Keynesian calibration with row-major matrices.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NkConfig {
    pub beta: f64,
    pub sigma: f64,
    pub delta: f64,
    pub kappa: f64,
    pub shock_gamma0: Vec<Vec<f64>>,
    pub shock_gamma1: Vec<Vec<f64>>,
}

/// General/partial equilibrium economy with row-major matrices.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GePeConfig {
    pub h: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub g: Vec<f64>,
    pub beta: f64,
    pub alphas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub d: usize,
}

/// Numeric settings; every value must be positive.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Knobs {
    /// Autocovariance lags computed for VAR processes.
    pub lags: usize,
    /// Impulse-response horizon.
    pub irf_horizon: usize,
    /// Largest forecast horizon in `forecasts.csv`.
    pub forecast_horizon: usize,
    /// Deepest lag of the forecast weights written for models with noise.
    pub forecast_lags: usize,
    /// Grid points for `a` in the general one-state solver.
    pub grid_a: usize,
    /// Grid points for `eta` in the general one-state solver.
    pub grid_eta: usize,
    /// Randomized starts of the NK multistart search.
    pub multistarts: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Self { lags: 200, irf_horizon: 40, forecast_horizon: 8, forecast_lags: 20, grid_a: 201, grid_eta: 101, multistarts: 24 }
    }
}

impl Knobs {
    fn validate(&self) -> Result<(), CliError> {
        let named = [
            ("lags", self.lags),
            ("irf_horizon", self.irf_horizon),
            ("forecast_horizon", self.forecast_horizon),
            ("forecast_lags", self.forecast_lags),
            ("grid_a", self.grid_a),
            ("grid_eta", self.grid_eta),
            ("multistarts", self.multistarts),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(CliError::config(format!("knob `{name}` must be positive")));
            }
        }
        if self.grid_a < 2 || self.grid_eta < 2 {
            return Err(CliError::config("solver grids need at least two points"));
        }
        Ok(())
    }
}

/// Reads a config file; the extension selects TOML or JSON.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        Some("toml") => toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        _ => return Err(CliError::config(format!("{}: config must end in .toml or .json", path.display()))),
    };
    cfg.knobs.validate()?;
    Ok(cfg)
}

/// Fills calibration sections missing from `cfg` with the named preset.
pub fn apply_preset(cfg: &mut RunConfig, name: &str) -> Result<(), CliError> {
    let preset = presets::by_name(name).ok_or_else(|| {
        CliError::config(format!("unknown preset `{name}` (known: {})", presets::PRESET_NAMES.join(", ")))
    })?;
    match preset {
        Preset::Nk(c) => {
            cfg.nk.get_or_insert_with(|| NkConfig::from_calibration(&c));
        }
        Preset::Rbc(c) => {
            cfg.rbc.get_or_insert(c);
        }
        Preset::Dmp(c) => {
            cfg.dmp.get_or_insert(c);
        }
    }
    Ok(())
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::config(format!("`{what}` must be a non-empty rectangular matrix")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl NkConfig {
    fn from_calibration(c: &NkCalibration) -> Self {
        Self {
            beta: c.beta,
            sigma: c.sigma,
            delta: c.delta,
            kappa: c.kappa,
            shock_gamma0: rows(&c.shock_gamma0),
            shock_gamma1: rows(&c.shock_gamma1),
        }
    }

    pub fn calibration(&self) -> Result<NkCalibration, CliError> {
        let cal = NkCalibration {
            beta: self.beta,
            sigma: self.sigma,
            delta: self.delta,
            kappa: self.kappa,
            shock_gamma0: matrix(&self.shock_gamma0, "nk.shock_gamma0")?,
            shock_gamma1: matrix(&self.shock_gamma1, "nk.shock_gamma1")?,
        };
        cal.validate()?;
        Ok(cal)
    }
}

impl GePeConfig {
    pub fn spec(&self) -> Result<GePeSpec, CliError> {
        let spec = GePeSpec {
            h: matrix(&self.h, "ge_pe.h")?,
            b: DVector::from_vec(self.b.clone()),
            c: DVector::from_vec(self.c.clone()),
            g: DVector::from_vec(self.g.clone()),
            beta: self.beta,
            alphas: DVector::from_vec(self.alphas.clone()),
            sigmas: DVector::from_vec(self.sigmas.clone()),
            d: self.d,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ProcessSpec {
    pub fn autocov(&self, lags: usize) -> Result<AutocovSeq, CliError> {
        match self {
            ProcessSpec::Var { f, h, sigma } => {
                let p = LatentVarProcess::new(
                    matrix(f, "process.f")?,
                    matrix(h, "process.h")?,
                    matrix(sigma, "process.sigma")?,
                )?;
                Ok(autocov_from_var(&p, lags)?)
            }
            ProcessSpec::Autocov { gammas, tail_rate } => {
                let gs = gammas
                    .iter()
                    .enumerate()
                    .map(|(l, g)| matrix(g, &format!("process.gammas[{l}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(AutocovSeq::from_gammas(gs, *tail_rate)?)
            }
        }
    }
}
