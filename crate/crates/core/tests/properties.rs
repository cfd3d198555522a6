//! Randomized invariants of the solvers.

mod common;

use common::*;
use proptest::prelude::*;
use ptsm::macromodels::dmp::DmpCalibration;

fn run(check: Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn autocorrelation_radii_are_bounded(seed in any::<u64>()) {
        run(check_autocorr_radii(seed))?;
    }

    #[test]
    fn persistence_decomposition_reconstructs(seed in any::<u64>()) {
        run(check_decomposition_reconstructs(seed))?;
    }

    #[test]
    fn transforms_keep_autocorrelation_radii(seed in any::<u64>()) {
        run(check_transform_keeps_radii(seed))?;
    }

    #[test]
    fn filters_satisfy_riccati_and_gain_identities(seed in any::<u64>()) {
        run(check_filter_identities(seed))?;
    }

    #[test]
    fn exact_divergence_is_nonnegative(seed in any::<u64>()) {
        run(check_kldr_nonnegative(seed))?;
    }

    #[test]
    fn correct_models_have_zero_divergence(seed in any::<u64>(), d in 1usize..=3) {
        run(check_correct_specification(seed, d))?;
    }

    #[test]
    fn one_state_solution_is_invariant_to_linear_maps(seed in any::<u64>()) {
        run(check_linear_invariance(seed))?;
    }

    #[test]
    fn one_state_model_matches_variance(seed in any::<u64>()) {
        run(check_variance_matching(seed))?;
    }

    #[test]
    fn mio_model_matches_variance(seed in any::<u64>(), d in 1usize..=3) {
        run(check_mio_variance_matching(seed, d))?;
    }

    #[test]
    fn closed_form_agrees_with_general_solver(seed in any::<u64>()) {
        run(check_exp_ergodic_consistency(seed))?;
    }

    #[test]
    fn two_factor_scalar_truths_have_interior_noise(seed in any::<u64>()) {
        run(check_two_factor_noise(seed))?;
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        run(check_simulation_determinism(seed))?;
    }

    #[test]
    fn dmp_steady_state_identities_hold(
        beta in 0.9f64..0.999,
        s in 0.01f64..0.1,
        p in 0.2f64..0.8,
        alpha in 0.2f64..0.8,
        delta in 0.05f64..0.9,
        b in 0.2f64..0.9,
    ) {
        let cal = DmpCalibration { beta, s, p, alpha, delta, b, ..ptsm::presets::dmp_paper() };
        run(check_dmp_steady_state(&cal))?;
    }

    #[test]
    fn guidance_on_the_expected_path_changes_nothing(
        horizon in 1usize..=12,
        shock in prop::array::uniform3(-1.0f64..1.0),
    ) {
        run(check_fg_consistency(horizon, shock))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn solver_beats_every_grid_point(seed in any::<u64>()) {
        run(check_optimality_certificate(seed))?;
    }

    #[test]
    fn actions_span_d_dimensions(seed in any::<u64>(), d in 1usize..=2) {
        run(check_comovement_rank(seed, d))?;
    }

    #[test]
    fn divine_coincidence_holds(
        kappa in 0.05f64..0.5,
        sigma in 0.5f64..2.0,
        rho in 0.3f64..0.95,
        var in 0.5f64..5.0,
    ) {
        run(check_divine_coincidence(kappa, sigma, rho, var))?;
    }
}

#[test]
fn sample_autocovariances_match_population() {
    check_monte_carlo_autocov(11).unwrap();
}

#[test]
fn reaction_table_inequalities_hold() {
    check_arma_pair_reactions().unwrap();
}

#[test]
fn divergence_ranks_like_the_objective_and_mse() {
    check_grid_rankings().unwrap();
}

#[test]
fn nk_equations_hold_along_a_simulated_path() {
    check_nk_path_residuals().unwrap();
}

#[test]
fn macro_fixed_points_have_zero_noise() {
    check_macro_eta().unwrap();
}
