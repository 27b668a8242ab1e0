use serde::Serialize;

use super::config::StudyConfig;
use super::{converged, reference_ground_state};
use crate::contraction::{contraction_solve_from, ContractionConfig, ContractionRecord};
use crate::error::Result;
use crate::groundstate::{minimize, pde_residual, GroundStateProblem, GroundStateResult, IterationRecord};
use crate::linearization::{beta_estimate_for, kernel_residuals_for, KernelReport, Sign, SpectrumReport};
use crate::spectral::Field;
use crate::symbols::EllipticityReport;

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateStudy {
    pub action: f64,
    pub action_expressions: [f64; 3],
    /// Largest pairwise relative gap between the three action expressions.
    pub action_spread: f64,
    pub nehari_residual: f64,
    pub gradient_residual: f64,
    pub pde_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: usize,
    pub boundary_amplitude: f64,
    pub spectral_tail: f64,
    pub under_resolved: bool,
    pub ellipticity: EllipticityReport,
    #[serde(skip)]
    pub log: Vec<IterationRecord>,
    #[serde(skip)]
    pub q: Field,
}

pub(crate) fn action_spread(values: &[f64; 3]) -> f64 {
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    (hi - lo) / scale
}

fn summarize(problem: &GroundStateProblem, res: GroundStateResult) -> Result<GroundStateStudy> {
    Ok(GroundStateStudy {
        action: res.action,
        action_expressions: res.action_expressions,
        action_spread: action_spread(&res.action_expressions),
        nehari_residual: res.nehari_residual,
        gradient_residual: res.gradient_residual,
        pde_residual: pde_residual(&res.q, problem)?,
        iterations: res.iterations,
        converged: res.converged,
        start: res.start,
        boundary_amplitude: res.boundary_amplitude,
        spectral_tail: res.spectral_tail,
        under_resolved: res.under_resolved,
        ellipticity: problem.ellipticity().clone(),
        log: res.log,
        q: res.q,
    })
}

fn configured_problem(cfg: &StudyConfig) -> Result<GroundStateProblem> {
    GroundStateProblem::with_kernel_radius(cfg.symbol.clone(), cfg.nonlinearity, cfg.grid_spec()?, cfg.kernel_radius)
}

/// Ground state of the configured symbol and nonlinearity.
pub fn run_groundstate(cfg: &StudyConfig) -> Result<GroundStateStudy> {
    cfg.validate()?;
    let problem = configured_problem(cfg)?;
    let res = converged(minimize(&problem, None, &cfg.minimize)?, "ground state")?;
    summarize(&problem, res)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionStudy {
    pub beta0: f64,
    pub delta_epsilon: f64,
    pub r_norm: f64,
    pub iterations: usize,
    pub max_factor: Option<f64>,
    pub factor_flag: bool,
    pub converged: bool,
    pub pde_residual: f64,
    pub reference_pde_residual: f64,
    pub log: Vec<ContractionRecord>,
    #[serde(skip)]
    pub u: Field,
}

/// Fixed-point construction of the solution of the configured symbol around
/// the second-order ground state.
pub fn run_contraction(cfg: &StudyConfig) -> Result<ContractionStudy> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let (reference, q0) = reference_ground_state(cfg, grid)?;
    let problem = configured_problem(cfg)?;
    let beta0 = match cfg.contraction.beta0 {
        Some(b) => b,
        None => beta_pair(&q0.q, &reference, cfg)?.0,
    };
    let ccfg = ContractionConfig {
        beta0: Some(beta0),
        ..cfg.contraction
    };
    let res = contraction_solve_from(&q0.q, &problem, None, &ccfg)?;
    Ok(ContractionStudy {
        beta0,
        delta_epsilon: res.delta_epsilon,
        r_norm: res.r_norm,
        iterations: res.iterations,
        max_factor: res.max_factor,
        factor_flag: res.factor_flag,
        converged: res.converged,
        pde_residual: res.pde_residual,
        reference_pde_residual: pde_residual(&q0.q, &reference)?,
        log: res.log,
        u: res.u,
    })
}

/// `(min(beta+, beta-), plus report, minus report)` at `u`.
pub(crate) fn beta_pair(
    u: &Field,
    problem: &GroundStateProblem,
    cfg: &StudyConfig,
) -> Result<(f64, SpectrumReport, SpectrumReport)> {
    let plus = beta_estimate_for(Sign::Plus, u, problem, &cfg.spectrum)?;
    let minus = beta_estimate_for(Sign::Minus, u, problem, &cfg.spectrum)?;
    Ok((plus.beta.min(minus.beta), plus, minus))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumStudy {
    pub ground_state: GroundStateStudy,
    pub kernel: KernelReport,
    pub plus: SpectrumReport,
    pub minus: SpectrumReport,
    pub beta: f64,
}

/// Ground state of the configured problem and the spectra of both
/// linearizations there.
pub fn run_spectrum(cfg: &StudyConfig) -> Result<SpectrumStudy> {
    let gs = run_groundstate(cfg)?;
    let problem = configured_problem(cfg)?;
    let kernel = kernel_residuals_for(&gs.q, &problem)?;
    let (beta, plus, minus) = beta_pair(&gs.q, &problem, cfg)?;
    Ok(SpectrumStudy {
        ground_state: gs,
        kernel,
        plus,
        minus,
        beta,
    })
}
