//! Named calibrations shipped with the library.

use crate::linalg::from_rows;
use crate::macromodels::dmp::DmpCalibration;
use crate::macromodels::nk::NkCalibration;
use crate::macromodels::rbc::RbcCalibration;

/// Names accepted by [`by_name`].
pub const PRESET_NAMES: [&str; 3] = ["nk-paper", "rbc-paper", "dmp-paper"];

/// A named calibration.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// New-Keynesian economy.
    Nk(NkCalibration),
    /// Real business cycle economy.
    Rbc(RbcCalibration),
    /// Search-and-matching labor market.
    Dmp(DmpCalibration),
}

/// Quarterly new-Keynesian calibration with estimated shock autocovariances
/// for `(i, rn, mu)`.
pub fn nk_paper() -> NkCalibration {
    NkCalibration {
        beta: 0.99,
        sigma: 1.0,
        delta: 0.75,
        kappa: 0.172,
        shock_gamma0: from_rows(&[
            &[10.898_259_825_5, 16.367_715_136_8, 0.199_982_510_7],
            &[16.367_715_136_8, 32.121_167_537_9, -0.082_699_869_6],
            &[0.199_982_510_7, -0.082_699_869_6, 0.099_403_947],
        ]),
        shock_gamma1: from_rows(&[
            &[10.395_140_791_5, 16.220_688_313_2, 0.155_009_602_2],
            &[15.017_336_989_1, 30.679_607_740_8, -0.146_007_359_5],
            &[0.302_009_666, 0.128_992_640_7, 0.091_995_213_5],
        ]),
    }
}

/// Quarterly RBC calibration.
pub fn rbc_paper() -> RbcCalibration {
    RbcCalibration { beta: 0.99, sigma: 1.0, varphi: 1.0, delta: 0.012, alpha: 0.3, rho: 0.95, sigma_eps: 1.0 }
}

/// Monthly search-and-matching calibration.
pub fn dmp_paper() -> DmpCalibration {
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

/// Looks up a preset by name.
pub fn by_name(name: &str) -> Option<Preset> {
    match name {
        "nk-paper" => Some(Preset::Nk(nk_paper())),
        "rbc-paper" => Some(Preset::Rbc(rbc_paper())),
        "dmp-paper" => Some(Preset::Dmp(dmp_paper())),
        _ => None,
    }
}
