//! Pseudo-true low-dimensional state-space models of multivariate stationary
//! Gaussian processes, and equilibria of macro models in which agents forecast
//! with such models.
//!
//! - [`procspec`]: autocovariance sequences, ergodicity checks, persistence decomposition.
//! - [`ssm`]: state-space models, steady-state Kalman filtering, divergence rates.
//! - [`pseudotrue`]: one-state and Markovian-in-observables `d`-state pseudo-true models.
//! - [`macromodels`]: new-Keynesian, RBC and search-and-matching equilibria, forward
//!   guidance, and the general/partial equilibrium transform.
//! - [`presets`]: named calibrations.

pub mod error;
pub mod linalg;
pub mod macromodels;
pub mod optim;
pub mod presets;
pub mod procspec;
pub mod pseudotrue;
pub mod ssm;

pub use error::{Error, Result};
pub use macromodels::dmp::{solve_dmp, DmpCalibration, DmpEquilibrium};
pub use macromodels::fg::{fg_sweep, nk_forward_guidance, ForwardGuidanceResult, RateCut};
pub use macromodels::gepe::{ge_pe_transform, solve_ge, solve_pe, GePeEquilibrium, GePeSpec};
pub use macromodels::nk::{solve_nk, NkCalibration, NkEquilibrium};
pub use macromodels::rbc::{solve_rbc, RbcCalibration, RbcEquilibrium};
pub use macromodels::{impulse_response, sample_autocov, simulate, LinearLaw, Mode};
pub use procspec::{
    autocorr, autocov_from_var, check_exponential_ergodicity, decompose_persistence, rank_reduce, transform_process,
    AutocorrSeq, AutocovSeq, ErgodicityReport, LatentVarProcess,
};
pub use pseudotrue::{
    solve_mio_d_state, solve_one_state, solve_one_state_exp_erg, solve_one_state_general, to_state_space,
};
pub use ssm::{kldr, solve_riccati, KldrMode, MioDStateModel, OneStatePseudoTrue, StateSpaceModel};
