//! Subcommand implementations. Each command reads the resolved config, runs a
//! solver and writes its files into the output directory.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use ptsm::macromodels::dmp::{solve_dmp_with, DMP_VARIABLES};
use ptsm::macromodels::nk::{basis_map, rational_loadings, solve_nk_with, NkCalibration, NkSolverOptions};
use ptsm::macromodels::rbc::{solve_rbc_with, RBC_VARIABLES};
use ptsm::macromodels::{FixedPointMethod, FixedPointOptions};
use ptsm::pseudotrue::GeneralSolverOptions;
use ptsm::{
    autocorr, check_exponential_ergodicity, decompose_persistence, fg_sweep, ge_pe_transform, impulse_response,
    solve_ge, solve_mio_d_state, solve_one_state, solve_pe, AutocovSeq, ErgodicityReport, LinearLaw, Mode,
    OneStatePseudoTrue, RateCut,
};

use crate::config::{rows, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Sink, Table};

/// Settings shared by every command.
pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
    pub tol: f64,
}

impl Context {
    fn fixed_point(&self) -> FixedPointOptions {
        FixedPointOptions { tol: self.tol, ..FixedPointOptions::default() }
    }

    fn nk_options(&self) -> NkSolverOptions {
        NkSolverOptions { fixed_point: self.fixed_point(), multistarts: self.cfg.knobs.multistarts, seed: self.seed }
    }

    /// Observable process: the `process` section, or `f = (x, pi, i)` of the NK equilibrium.
    fn process(&self) -> Result<AutocovSeq, CliError> {
        if let Some(p) = &self.cfg.process {
            return p.autocov(self.cfg.knobs.lags);
        }
        if let Some(nk) = &self.cfg.nk {
            let cal = nk.calibration()?;
            let eq = solve_nk_with(&cal, &self.nk_options())?;
            return Ok(eq.shocks.autocov_of(&basis_map(&eq.loadings)));
        }
        Err(CliError::config("a `process` section or an NK calibration (e.g. --preset nk-paper) is required"))
    }

    fn general_options(&self) -> GeneralSolverOptions {
        GeneralSolverOptions {
            grid_a: self.cfg.knobs.grid_a,
            grid_eta: self.cfg.knobs.grid_eta,
            tol: self.tol,
            ..GeneralSolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Cree,
    Re,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cree => Mode::CreeD1,
            ModeArg::Re => Mode::Rational,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Conditioning {
    /// Only the nominal-rate innovation moves.
    Pure,
    /// The natural-rate and cost-push shocks move with their conditional expectation.
    Conditional,
}

#[derive(Serialize)]
struct VectorModel {
    a: f64,
    eta: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    lambda_max: f64,
    paired_root: bool,
}

impl From<&OneStatePseudoTrue> for VectorModel {
    fn from(s: &OneStatePseudoTrue) -> Self {
        Self {
            a: s.a,
            eta: s.eta,
            p: s.p.iter().copied().collect(),
            q: s.q.iter().copied().collect(),
            lambda_max: s.lambda_max,
            paired_root: s.paired_root,
        }
    }
}

#[derive(Serialize)]
struct Component {
    a: f64,
    p: Vec<f64>,
    q: Vec<f64>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelFile {
    OneState {
        #[serde(flatten)]
        model: VectorModel,
        solver: &'static str,
        ergodicity: ErgodicityReport,
    },
    MioDState {
        d: usize,
        components: Vec<Component>,
        ergodicity: ErgodicityReport,
    },
}

fn push_matrix(table: &mut Table, horizon: usize, tau: usize, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            table.push(vec![horizon.into(), tau.into(), i.into(), j.into(), m[(i, j)].into()]);
        }
    }
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn pseudotrue(ctx: &Context, sink: &mut Sink, d: usize, force_general: bool) -> Result<(), CliError> {
    let acv = ctx.process()?;
    let ergodicity = check_exponential_ergodicity(&autocorr(&acv)?);
    let knobs = &ctx.cfg.knobs;
    let mut forecasts = Table::new(&["horizon", "tau", "row", "col", "value"]);
    let file = if d == 1 {
        let (sol, solver) = if force_general {
            (ptsm::pseudotrue::solve_one_state_general_with(&acv, &ctx.general_options())?.0, "general")
        } else {
            let solver = if ergodicity.is_exp_ergodic { "exponential_ergodic" } else { "general" };
            (solve_one_state(&acv)?, solver)
        };
        let taus = if sol.eta > 0.0 { knobs.forecast_lags } else { 0 };
        for s in 1..=knobs.forecast_horizon {
            for tau in 0..=taus {
                push_matrix(&mut forecasts, s, tau, &sol.forecast_coefficient(s, tau));
            }
        }
        ModelFile::OneState { model: (&sol).into(), solver, ergodicity }
    } else {
        let model = solve_mio_d_state(&acv, d)?;
        for s in 1..=knobs.forecast_horizon {
            push_matrix(&mut forecasts, s, 0, &model.forecast(s));
        }
        let components =
            model.components.iter().map(|c| Component { a: c.a, p: vec_of(&c.p), q: vec_of(&c.q) }).collect();
        ModelFile::MioDState { d, components, ergodicity }
    };
    sink.json("model.json", &file)?;
    sink.table("forecasts", &forecasts)
}

pub fn ergodicity(ctx: &Context, sink: &mut Sink, max_lag: usize) -> Result<(), CliError> {
    if max_lag == 0 {
        return Err(CliError::config("--max-lag must be positive"));
    }
    let acv = ctx.process()?;
    if acv.max_lag() < max_lag {
        return Err(CliError::config(format!(
            "process provides {} lags but --max-lag is {max_lag}",
            acv.max_lag()
        )));
    }
    let report = check_exponential_ergodicity(&autocorr(&acv)?);
    let rho1 = report.rho[0];
    let mut table = Table::new(&["lag", "rho_Cl", "rho_C1_pow_l", "margin"]);
    for l in 1..=max_lag {
        table.push(vec![l.into(), report.rho[l - 1].into(), rho1.powi(l as i32).into(), report.margins[l - 1].into()]);
    }
    sink.table("ergodicity", &table)
}

pub fn decompose(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let acv = ctx.process()?;
    let dec = decompose_persistence(&acv)?;
    let mut table = Table::new(&["component", "rho", "kind", "index", "value"]);
    for (k, c) in dec.components.iter().enumerate() {
        for (kind, v) in [("p", &c.p), ("q", &c.q)] {
            for (i, x) in v.iter().enumerate() {
                table.push(vec![k.into(), c.rho.into(), kind.into(), i.into(), (*x).into()]);
            }
        }
    }
    sink.table("decomposition", &table)
}

/// Responses in percent to a unit shock, one row per period and variable.
fn irf_table(law: &LinearLaw, shock: &DVector<f64>, horizon: usize) -> Result<Table, CliError> {
    let irf = impulse_response(law, shock, horizon)?;
    let mut table = Table::new(&["period", "variable", "value"]);
    for h in 0..horizon {
        for (k, name) in law.names.iter().enumerate() {
            table.push(vec![h.into(), name.as_str().into(), (100.0 * irf[(h, k)]).into()]);
        }
    }
    Ok(table)
}

fn unit(n: usize, k: usize, scale: f64) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[k] = scale;
    v
}

#[derive(Serialize)]
struct NkFile {
    mode: Mode,
    a: f64,
    eta: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    lambda_max: f64,
    gamma_x: f64,
    gamma_pi: f64,
    loadings: Vec<Vec<f64>>,
    loading_rows: [&'static str; 2],
    loading_cols: [&'static str; 3],
    shock_transition: Vec<Vec<f64>>,
    shock_innovation_cov: Vec<Vec<f64>>,
    gamma0_f: Vec<Vec<f64>>,
    gamma1_f: Vec<Vec<f64>>,
    residual: f64,
    method: FixedPointMethod,
    exp_ergodic: bool,
    eta_check: f64,
    other_fixed_points: Vec<Vec<Vec<f64>>>,
    warnings: Vec<String>,
}

fn nk_calibration(ctx: &Context) -> Result<NkCalibration, CliError> {
    ctx.cfg
        .nk
        .as_ref()
        .ok_or_else(|| CliError::config("an `nk` section or --preset nk-paper is required"))?
        .calibration()
}

#[derive(Serialize)]
struct NkRationalFile {
    mode: Mode,
    loadings: Vec<Vec<f64>>,
    loading_rows: [&'static str; 2],
    loading_cols: [&'static str; 3],
    shock_transition: Vec<Vec<f64>>,
    shock_innovation_cov: Vec<Vec<f64>>,
}

/// Writes one IRF file per shock, each a one-percentage-point innovation.
fn nk_irfs(sink: &mut Sink, law: &LinearLaw, horizon: usize) -> Result<(), CliError> {
    for (k, name) in ["i", "rn", "mu"].into_iter().enumerate() {
        sink.table(&format!("irf_{name}"), &irf_table(law, &unit(3, k, 0.01), horizon)?)?;
    }
    Ok(())
}

pub fn nk(ctx: &Context, sink: &mut Sink, mode: ModeArg) -> Result<(), CliError> {
    let cal = nk_calibration(ctx)?;
    let horizon = ctx.cfg.knobs.irf_horizon;
    if mode == ModeArg::Re {
        let var = cal.shock_var()?;
        let loadings = rational_loadings(&cal)?;
        let mut observation = DMatrix::zeros(5, 3);
        observation.view_mut((0, 0), (2, 3)).copy_from(&loadings);
        observation.view_mut((2, 0), (3, 3)).fill_with_identity();
        let file = NkRationalFile {
            mode: Mode::Rational,
            loadings: rows(&loadings),
            loading_rows: ["x", "pi"],
            loading_cols: ["i", "rn", "mu"],
            shock_transition: rows(&var.transition),
            shock_innovation_cov: rows(&var.innovation_cov),
        };
        sink.json("equilibrium.json", &file)?;
        let law = LinearLaw {
            transition: var.transition,
            shock_cov: var.innovation_cov,
            observation,
            names: ["x", "pi", "i", "rn", "mu"].iter().map(|s| s.to_string()).collect(),
        };
        return nk_irfs(sink, &law, horizon);
    }
    let eq = solve_nk_with(&cal, &ctx.nk_options())?;
    let file = NkFile {
        mode: Mode::CreeD1,
        a: eq.solution.a,
        eta: eq.solution.eta,
        p: vec_of(&eq.solution.p),
        q: vec_of(&eq.solution.q),
        lambda_max: eq.solution.lambda_max,
        gamma_x: eq.gamma_x,
        gamma_pi: eq.gamma_pi,
        loadings: rows(&eq.loadings),
        loading_rows: ["x", "pi"],
        loading_cols: ["i", "rn", "mu"],
        shock_transition: rows(&eq.shocks.transition),
        shock_innovation_cov: rows(&eq.shocks.innovation_cov),
        gamma0_f: rows(&eq.gamma0),
        gamma1_f: rows(&eq.gamma1),
        residual: eq.residual,
        method: eq.method,
        exp_ergodic: eq.exp_ergodic,
        eta_check: eq.eta_check,
        other_fixed_points: eq.other_fixed_points.iter().map(rows).collect(),
        warnings: eq.warnings.clone(),
    };
    sink.json("equilibrium.json", &file)?;
    nk_irfs(sink, &eq.law(), horizon)
}

pub fn nk_fg(ctx: &Context, sink: &mut Sink, t_max: usize, conditioning: Conditioning) -> Result<(), CliError> {
    let cal = nk_calibration(ctx)?;
    let eq = solve_nk_with(&cal, &ctx.nk_options())?;
    let cut = match conditioning {
        Conditioning::Pure => RateCut::Pure,
        Conditioning::Conditional => RateCut::Conditional,
    };
    let sweep = fg_sweep(&eq, &cal, t_max, cut)?;
    let mut table = Table::new(&["T", "output_response", "inflation_response"]);
    for row in &sweep {
        table.push(vec![row.horizon.into(), row.output_response.into(), row.inflation_response.into()]);
    }
    sink.table("fg_sweep", &table)
}

#[derive(Serialize)]
struct RbcFile {
    mode: Mode,
    gamma_k: f64,
    gamma_a: f64,
    psi_k: f64,
    psi_a: f64,
    variables: [&'static str; 8],
    state: [&'static str; 2],
    t_map: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    steady: ptsm::macromodels::rbc::RbcSteadyState,
    pseudo_true: Option<VectorModel>,
    z_weights: Option<Vec<f64>>,
    consumption_loading: Option<f64>,
    corr_consumption_capital: f64,
    residual: f64,
    method: Option<FixedPointMethod>,
    eta_check: Option<f64>,
}

pub fn rbc(ctx: &Context, sink: &mut Sink, mode: ModeArg) -> Result<(), CliError> {
    let cal = ctx.cfg.rbc.ok_or_else(|| CliError::config("an `rbc` section or --preset rbc-paper is required"))?;
    let eq = solve_rbc_with(&cal, mode.into(), &ctx.fixed_point())?;
    let file = RbcFile {
        mode: eq.mode,
        gamma_k: eq.gamma_k,
        gamma_a: eq.gamma_a,
        psi_k: eq.psi_k,
        psi_a: eq.psi_a,
        variables: RBC_VARIABLES,
        state: ["k", "a"],
        t_map: rows(&eq.t_map),
        transition: rows(&eq.transition),
        steady: eq.steady,
        pseudo_true: eq.pseudo_true.as_ref().map(VectorModel::from),
        z_weights: eq.z_weights.as_ref().map(vec_of),
        consumption_loading: eq.consumption_loading,
        corr_consumption_capital: eq.consumption_capital_corr(&cal)?,
        residual: eq.residual,
        method: eq.method,
        eta_check: eq.eta_check,
    };
    sink.json("equilibrium.json", &file)?;
    // A one-percent TFP innovation.
    let table = irf_table(&eq.law(&cal), &unit(2, 1, 0.01), ctx.cfg.knobs.irf_horizon)?;
    sink.table("irf_tfp", &table)
}

#[derive(Serialize)]
struct DmpFile {
    mode: Mode,
    psi_theta: Vec<f64>,
    psi_w: Vec<f64>,
    variables: [&'static str; 8],
    state: [&'static str; 3],
    steady: ptsm::macromodels::dmp::DmpSteadyState,
    transition: Vec<Vec<f64>>,
    pseudo_true: Option<VectorModel>,
    z_weights: Option<Vec<f64>>,
    theta_loading: Option<f64>,
    job_finding_loading: Option<f64>,
    residual: f64,
    method: Option<FixedPointMethod>,
    eta_check: Option<f64>,
}

pub fn dmp(ctx: &Context, sink: &mut Sink, mode: ModeArg) -> Result<(), CliError> {
    let cal = ctx.cfg.dmp.ok_or_else(|| CliError::config("a `dmp` section or --preset dmp-paper is required"))?;
    let eq = solve_dmp_with(&cal, mode.into(), &ctx.fixed_point())?;
    let file = DmpFile {
        mode: eq.mode,
        psi_theta: eq.psi.rows(0, 3).iter().copied().collect(),
        psi_w: eq.psi.rows(3, 3).iter().copied().collect(),
        variables: DMP_VARIABLES,
        state: ["u", "a", "s"],
        steady: eq.steady,
        transition: rows(&eq.transition),
        pseudo_true: eq.pseudo_true.as_ref().map(VectorModel::from),
        z_weights: eq.z_weights.as_ref().map(vec_of),
        theta_loading: eq.theta_loading,
        job_finding_loading: eq.job_finding_loading,
        residual: eq.residual,
        method: eq.method,
        eta_check: eq.eta_check,
    };
    sink.json("equilibrium.json", &file)?;
    let law = eq.law(&cal);
    let horizon = ctx.cfg.knobs.irf_horizon;
    // One-percent innovations to productivity and to the separation rate.
    sink.table("irf_productivity", &irf_table(&law, &unit(3, 1, 0.01), horizon)?)?;
    sink.table("irf_separation", &irf_table(&law, &unit(3, 2, 0.01), horizon)?)
}

#[derive(Serialize)]
struct EconomyFile {
    loadings: Vec<Vec<f64>>,
    action: Vec<f64>,
    model: Vec<Component>,
    residual: f64,
    method: FixedPointMethod,
}

#[derive(Serialize)]
struct GePeFile {
    transformed_h: Vec<Vec<f64>>,
    general: EconomyFile,
    partial: EconomyFile,
    max_loading_gap: f64,
}

pub fn ge_pe(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let spec = ctx
        .cfg
        .ge_pe
        .as_ref()
        .ok_or_else(|| CliError::config("a `ge_pe` section is required"))?
        .spec()?;
    let opts = ctx.fixed_point();
    let ht = ge_pe_transform(&spec.h, &spec.b, &spec.c, &spec.g, spec.beta, &spec.alphas, spec.d)?;
    let ge = solve_ge(&spec, &ht, &opts)?;
    let pe = solve_pe(&spec, &opts)?;
    let economy = |e: &ptsm::GePeEquilibrium| EconomyFile {
        loadings: rows(&e.loadings),
        action: vec_of(&e.action),
        model: e.model.components.iter().map(|c| Component { a: c.a, p: vec_of(&c.p), q: vec_of(&c.q) }).collect(),
        residual: e.residual,
        method: e.method,
    };
    let file = GePeFile {
        transformed_h: rows(&ht),
        max_loading_gap: (&ge.loadings - &pe.loadings).amax(),
        general: economy(&ge),
        partial: economy(&pe),
    };
    sink.json("equilibrium.json", &file)?;
    let (lg, lp) = (ge.law(&spec), pe.law(&spec));
    let mut table = Table::new(&["lag", "row", "col", "general", "partial"]);
    for l in 0..=ctx.cfg.knobs.forecast_horizon {
        let (cg, cp) = (lg.covariance(l)?, lp.covariance(l)?);
        for i in 0..cg.nrows() {
            for j in 0..cg.ncols() {
                table.push(vec![l.into(), i.into(), j.into(), cg[(i, j)].into(), cp[(i, j)].into()]);
            }
        }
    }
    sink.table("autocov", &table)
}

/// Converts a solver error into a CLI error, writing any residual trace.
pub fn with_trace(mut err: CliError, sink: Option<&mut Sink>) -> CliError {
    if let (Some(trace), Some(sink)) = (err.trace.take(), sink) {
        let mut table = Table::new(&["step", "residual"]);
        for (k, r) in trace.iter().enumerate() {
            table.push(vec![Cell::from(k), Cell::from(*r)]);
        }
        let format = sink.format;
        sink.format = crate::output::Format::Csv;
        if sink.table("residual_trace", &table).is_ok() {
            err.trace_file = sink.written.last().map(|p| p.display().to_string());
        }
        sink.format = format;
    }
    err
}
