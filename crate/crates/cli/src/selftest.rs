//! Golden calibration numbers plus a fast subset of the solver properties.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use ptsm::macromodels::nk::{solve_nk_with, NkSolverOptions};
use ptsm::presets;
use ptsm::pseudotrue::solve_one_state_general;
use ptsm::ssm::subjective_moments;
use ptsm::{
    autocov_from_var, fg_sweep, impulse_response, kldr, solve_dmp, solve_one_state, solve_rbc,
    to_state_space, transform_process, AutocovSeq, KldrMode, LatentVarProcess, Mode, RateCut, StateSpaceModel,
};

use crate::commands::Context;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub checks: Vec<CheckRow>,
}

#[derive(Default)]
struct Rows(Vec<CheckRow>);

impl Rows {
    fn within(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        let passed = (value - target).abs() <= tol;
        self.0.push(CheckRow { name: name.into(), value, target: format!("{target} ± {tol}"), passed });
    }

    fn between(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        let passed = value >= lo && value <= hi;
        self.0.push(CheckRow { name: name.into(), value, target: format!("[{lo}, {hi}]"), passed });
    }

    fn below(&mut self, name: &str, value: f64, limit: f64) {
        let passed = value < limit;
        self.0.push(CheckRow { name: name.into(), value, target: format!("< {limit:e}"), passed });
    }

    fn failed(&mut self, name: &str, err: &ptsm::Error) {
        self.0.push(CheckRow { name: name.into(), value: f64::NAN, target: format!("error: {err}"), passed: false });
    }
}

/// Runs every check. Calibration sections present in the config replace the presets.
pub fn run(ctx: &Context) -> Result<SelftestReport, CliError> {
    let mut rows = Rows::default();
    nk_checks(ctx, &mut rows)?;
    rbc_checks(ctx, &mut rows)?;
    dmp_checks(ctx, &mut rows)?;
    property_checks(ctx.seed, &mut rows);
    let passed = rows.0.iter().all(|r| r.passed);
    Ok(SelftestReport { passed, checks: rows.0 })
}

fn nk_checks(ctx: &Context, rows: &mut Rows) -> Result<(), CliError> {
    let cal = match &ctx.cfg.nk {
        Some(nk) => nk.calibration()?,
        None => presets::nk_paper(),
    };
    let opts = NkSolverOptions { seed: ctx.seed, ..NkSolverOptions::default() };
    let eq = match solve_nk_with(&cal, &opts) {
        Ok(eq) => eq,
        Err(e) => {
            rows.failed("nk equilibrium", &e);
            return Ok(());
        }
    };
    let sol = &eq.solution;
    rows.within("nk a", sol.a, 0.985, 0.005);
    for (k, (name, want)) in [("x", 0.022), ("pi", -0.42), ("i", -0.014)].into_iter().enumerate() {
        rows.within(&format!("nk p_{name}"), sol.p[k], want, (0.05 * f64::abs(want)).max(0.01));
    }
    for (k, (name, want)) in [("x", 0.53), ("pi", -2.3), ("i", -2.5)].into_iter().enumerate() {
        rows.within(&format!("nk q_{name}"), sol.q[k], want, (0.05 * f64::abs(want)).max(0.01));
    }
    match fg_sweep(&eq, &cal, 20, RateCut::Pure) {
        Ok(sweep) => {
            let y = |t: usize| sweep[t].output_response;
            rows.between("fg output T1/T0", y(1) / y(0), 1.40, 1.60);
            rows.between("fg output T2/T1", y(2) / y(1), 1.05, 1.13);
            rows.between("fg output T20/T1", y(20) / y(1), 1.35, 1.65);
        }
        Err(e) => rows.failed("fg sweep", &e),
    }
    Ok(())
}

fn rbc_checks(ctx: &Context, rows: &mut Rows) -> Result<(), CliError> {
    let cal = ctx.cfg.rbc.unwrap_or_else(presets::rbc_paper);
    let (cree, re) = match (solve_rbc(&cal, Mode::CreeD1), solve_rbc(&cal, Mode::Rational)) {
        (Ok(c), Ok(r)) => (c, r),
        (Err(e), _) | (_, Err(e)) => {
            rows.failed("rbc equilibrium", &e);
            return Ok(());
        }
    };
    if let Some(z) = &cree.z_weights {
        rows.within("rbc z_k", z[0], 0.947, 0.01);
        rows.within("rbc z_a", z[1], 0.053, 0.01);
    }
    if let Some(l) = cree.consumption_loading {
        rows.within("rbc consumption loading", l, 0.841, 0.01);
    }
    rows.within("rbc corr(c,k) cree", cree.consumption_capital_corr(&cal)?, 0.999, 0.005);
    rows.within("rbc corr(c,k) re", re.consumption_capital_corr(&cal)?, 0.956, 0.005);
    let (lc, lr) = (cree.law(&cal), re.law(&cal));
    let (vc, vr) = (lc.covariance(0)?, lr.covariance(0)?);
    for (name, want) in [("c", 1.10), ("n", 1.41), ("i", 1.24)] {
        let k = lc.index_of(name).expect("RBC variable");
        rows.within(&format!("rbc variance ratio {name} (population)"), vc[(k, k)] / vr[(k, k)], want, 0.05);
    }
    Ok(())
}

fn dmp_checks(ctx: &Context, rows: &mut Rows) -> Result<(), CliError> {
    let cal = ctx.cfg.dmp.unwrap_or_else(presets::dmp_paper);
    let (cree, re) = match (solve_dmp(&cal, Mode::CreeD1), solve_dmp(&cal, Mode::Rational)) {
        (Ok(c), Ok(r)) => (c, r),
        (Err(e), _) | (_, Err(e)) => {
            rows.failed("dmp equilibrium", &e);
            return Ok(());
        }
    };
    if let Some(z) = &cree.z_weights {
        for (k, (name, want)) in [("u", -0.812), ("a", 0.010), ("s", -0.177)].into_iter().enumerate() {
            rows.within(&format!("dmp z_{name}"), z[k], want, 0.02);
        }
    }
    if let Some(th) = cree.theta_loading {
        rows.within("dmp theta loading", th, 2.76, 0.02 * 2.76);
    }
    if let Some(p) = cree.job_finding_loading {
        rows.within("dmp job-finding loading", p, 0.774, 0.02 * 0.774);
    }
    let shock = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let (lc, lr) = (cree.law(&cal), re.law(&cal));
    let v = lc.index_of("v").expect("DMP variable");
    let impact_c = impulse_response(&lc, &shock, 1)?[(0, v)];
    let impact_r = impulse_response(&lr, &shock, 1)?[(0, v)];
    rows.between("dmp vacancy impact, separation shock (cree)", impact_c, f64::NEG_INFINITY, 0.0);
    rows.between("dmp vacancy impact, separation shock (re)", impact_r, 0.0, f64::INFINITY);
    Ok(())
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn random_truth(rng: &mut ChaCha8Rng) -> Result<AutocovSeq, ptsm::Error> {
    let mut f = normal_matrix(rng, 4, 4);
    let radius = f.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    f *= rng.random_range(0.3..0.9) / radius;
    let h = normal_matrix(rng, 4, 3);
    let l = normal_matrix(rng, 4, 4);
    let sigma = &l * l.transpose() + DMatrix::identity(4, 4) * 0.1;
    autocov_from_var(&LatentVarProcess::new(f, h, sigma)?, 200)
}

fn two_factor(a1: f64, a2: f64, share: f64) -> Result<AutocovSeq, ptsm::Error> {
    let f = DMatrix::from_diagonal(&DVector::from_vec(vec![a1, a2]));
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![share * (1.0 - a1 * a1), (1.0 - share) * (1.0 - a2 * a2)]));
    autocov_from_var(&LatentVarProcess::new(f, DMatrix::from_element(2, 1, 1.0), sigma)?, 200)
}

fn rel_diff(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).amax() / y.amax().max(1.0)
}

fn invariance_drift(rng: &mut ChaCha8Rng) -> Result<f64, ptsm::Error> {
    let acv = random_truth(rng)?;
    let t = loop {
        let t = normal_matrix(rng, 3, 3);
        let sv = t.clone().svd(false, false).singular_values;
        if sv.min() > 0.05 * sv.max() {
            break t;
        }
    };
    let s0 = solve_one_state_general(&acv)?;
    let s1 = solve_one_state_general(&transform_process(&acv, &t)?)?;
    Ok((s0.a - s1.a).abs().max((s0.eta - s1.eta).abs()).max((s0.lambda_max - s1.lambda_max).abs()))
}

fn variance_gap(rng: &mut ChaCha8Rng) -> Result<f64, ptsm::Error> {
    let acv = random_truth(rng)?;
    let sol = solve_one_state(&acv)?;
    let implied = subjective_moments(&to_state_space(&sol, &acv.gammas[0])?, 0)?;
    Ok(rel_diff(&implied.gammas[0], &acv.gammas[0]))
}

fn correct_spec_kldr(rng: &mut ChaCha8Rng) -> Result<f64, ptsm::Error> {
    let mut a = normal_matrix(rng, 1, 1);
    a[(0, 0)] = rng.random_range(-0.9..0.9);
    let b = normal_matrix(rng, 1, 3);
    let r = normal_matrix(rng, 3, 3);
    let r = &r * r.transpose() + DMatrix::identity(3, 3) * 0.1;
    let model = StateSpaceModel::new(a, b, DMatrix::from_element(1, 1, rng.random_range(0.2..1.0)), r)?;
    let truth = subjective_moments(&model, 300)?;
    kldr(&model, &truth, KldrMode::ExactGaussian)
}

fn property_checks(seed: u64, rows: &mut Rows) {
    const CASES: u64 = 3;
    for case in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(case));
        let name = format!("linear invariance drift, case {case}");
        match invariance_drift(&mut rng) {
            Ok(v) => rows.below(&name, v, 1e-7),
            Err(e) => rows.failed(&name, &e),
        }
        let name = format!("variance matching gap, case {case}");
        match variance_gap(&mut rng) {
            Ok(v) => rows.below(&name, v, 1e-8),
            Err(e) => rows.failed(&name, &e),
        }
        let name = format!("correct specification divergence, case {case}");
        match correct_spec_kldr(&mut rng) {
            Ok(v) => rows.below(&name, v.abs(), 1e-8),
            Err(e) => rows.failed(&name, &e),
        }
        let a1 = rng.random_range(0.3..0.95);
        let a2 = rng.random_range(-0.8..(a1 - 0.2));
        let share = rng.random_range(0.2..0.8);
        let name = format!("two-factor noise share, case {case}");
        match two_factor(a1, a2, share).and_then(|acv| solve_one_state(&acv)) {
            Ok(sol) => rows.between(&name, sol.eta, 0.001, 0.999),
            Err(e) => rows.failed(&name, &e),
        }
    }
}

/// Human-readable table; values are rounded for display only.
pub fn render(report: &SelftestReport) -> String {
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:<width$}  {:>14.6e}  {}\n", c.name, c.value, c.target));
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} checks, {failed} failed\n", report.checks.len()));
    out
}
