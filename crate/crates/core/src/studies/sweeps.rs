use rayon::prelude::*;
use serde::Serialize;

use super::config::StudyConfig;
use super::fit::{fit_rate, RateFit};
use super::output::{format_f64, CsvTable};
use super::single::{action_spread, beta_pair};
use super::{aligned_h1_distance, converged, reference_ground_state};
use crate::contraction::{contraction_solve_from, ContractionConfig};
use crate::error::Result;
use crate::groundstate::{minimize, pde_residual, GroundStateProblem, GroundStateResult};
use crate::linearization::{kernel_residuals_for, Sign};
use crate::spectral::{resample, sobolev_norm, Field, GridSpec};
use crate::symbols::DispersionSymbol;

#[derive(Clone, Debug, Serialize)]
pub struct EpsPoint {
    pub eps: f64,
    /// `ok`, or the failures met at this point separated by `;`.
    pub status: String,
    pub action: f64,
    pub action_spread: f64,
    pub nehari_residual: f64,
    pub pde_residual: f64,
    /// Aligned `||Q_eps - Q_0||_{H^1}`.
    pub q_dist_q0: f64,
    /// `||u_eps - Q_0||_{H^1}` for the contraction solution `u_eps`.
    pub u_dist_q0: f64,
    /// Aligned `||Q_eps - u_eps||_{H^1}`, absolute and over `||Q_0||_{H^1}`.
    pub q_dist_u: f64,
    pub q_dist_u_rel: f64,
    pub contraction_iterations: usize,
    pub max_factor: f64,
    pub delta_epsilon: f64,
    pub r_norm: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub beta: f64,
    pub negative_count_plus: usize,
    /// Largest kernel residual of each sign at `Q_eps`.
    pub kernel_plus: f64,
    pub kernel_minus: f64,
    pub under_resolved: bool,
}

impl EpsPoint {
    fn failed(eps: f64, status: String) -> Self {
        Self {
            eps,
            status,
            ..Self::nan()
        }
    }

    fn nan() -> Self {
        let nan = f64::NAN;
        Self {
            eps: nan,
            status: String::new(),
            action: nan,
            action_spread: nan,
            nehari_residual: nan,
            pde_residual: nan,
            q_dist_q0: nan,
            u_dist_q0: nan,
            q_dist_u: nan,
            q_dist_u_rel: nan,
            contraction_iterations: 0,
            max_factor: nan,
            delta_epsilon: nan,
            r_norm: nan,
            beta_plus: nan,
            beta_minus: nan,
            beta: nan,
            negative_count_plus: 0,
            kernel_plus: nan,
            kernel_minus: nan,
            under_resolved: false,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsSweepReport {
    pub q0_action: f64,
    pub q0_pde_residual: f64,
    pub q0_h1_norm: f64,
    pub beta0_plus: f64,
    pub beta0_minus: f64,
    /// `min(beta0_plus, beta0_minus)`, the constant fed to the contraction.
    pub beta0: f64,
    pub points: Vec<EpsPoint>,
    /// `q_dist_q0 ~ C eps^slope` over the successful points with `eps > 0`.
    pub distance_fit: Option<RateFit>,
    /// `q_dist_q0` strictly decreases with `eps` over the successful points.
    pub distance_monotone: bool,
}

impl EpsSweepReport {
    pub const COLUMNS: [&'static str; 21] = [
        "eps",
        "status",
        "action",
        "action_spread",
        "nehari_residual",
        "pde_residual",
        "q_dist_q0",
        "u_dist_q0",
        "q_dist_u",
        "q_dist_u_rel",
        "contraction_iterations",
        "max_factor",
        "delta_epsilon",
        "r_norm",
        "beta_plus",
        "beta_minus",
        "beta",
        "negative_count_plus",
        "kernel_plus",
        "kernel_minus",
        "under_resolved",
    ];

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&Self::COLUMNS);
        for p in &self.points {
            t.push(vec![
                format_f64(p.eps),
                p.status.clone(),
                format_f64(p.action),
                format_f64(p.action_spread),
                format_f64(p.nehari_residual),
                format_f64(p.pde_residual),
                format_f64(p.q_dist_q0),
                format_f64(p.u_dist_q0),
                format_f64(p.q_dist_u),
                format_f64(p.q_dist_u_rel),
                p.contraction_iterations.to_string(),
                format_f64(p.max_factor),
                format_f64(p.delta_epsilon),
                format_f64(p.r_norm),
                format_f64(p.beta_plus),
                format_f64(p.beta_minus),
                format_f64(p.beta),
                p.negative_count_plus.to_string(),
                format_f64(p.kernel_plus),
                format_f64(p.kernel_minus),
                p.under_resolved.to_string(),
            ]);
        }
        t
    }
}

fn max_kernel(report: &crate::linearization::KernelReport, sign: Sign) -> f64 {
    report
        .rows
        .iter()
        .filter(|r| r.sign == sign)
        .map(|r| r.residual)
        .fold(0.0, f64::max)
}

/// Variational ground states along `eps`, each warm-started from the last
/// success, compared with the contraction solutions around `Q_0`.
pub fn run_eps_sweep(cfg: &StudyConfig) -> Result<EpsSweepReport> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let (reference, q0) = reference_ground_state(cfg, grid)?;
    let (beta0_min, plus0, minus0) = beta_pair(&q0.q, &reference, cfg)?;
    let beta0 = cfg.contraction.beta0.unwrap_or(beta0_min);
    let q0_h1 = sobolev_norm(&q0.q, 1.0);

    let mut chain: Vec<std::result::Result<(GroundStateProblem, GroundStateResult), String>> = Vec::new();
    let mut warm = q0.q.clone();
    for &eps in &cfg.eps_sweep.values {
        let attempt = cfg.symbol_at_eps(eps).and_then(|symbol| {
            let problem = GroundStateProblem::with_kernel_radius(symbol, cfg.nonlinearity, grid, cfg.kernel_radius)?;
            let res = converged(minimize(&problem, Some(&warm), &cfg.minimize)?, "variational solve")?;
            Ok((problem, res))
        });
        match attempt {
            Ok((problem, res)) => {
                warm = res.q.clone();
                chain.push(Ok((problem, res)));
            }
            Err(e) => {
                log::warn!("eps = {eps}: {e}");
                chain.push(Err(format!("minimize: {e}")));
            }
        }
    }

    let ccfg = ContractionConfig {
        beta0: Some(beta0),
        ..cfg.contraction
    };
    let points: Vec<EpsPoint> = cfg
        .eps_sweep
        .values
        .par_iter()
        .zip(chain.par_iter())
        .map(|(&eps, link)| match link {
            Ok((problem, res)) => eps_point(eps, problem, res, &q0.q, q0_h1, &ccfg, cfg),
            Err(status) => EpsPoint::failed(eps, status.clone()),
        })
        .collect();

    let mut ok: Vec<&EpsPoint> = points.iter().filter(|p| p.is_ok() && p.eps > 0.0).collect();
    let fit_points: Vec<(f64, f64)> = ok.iter().map(|p| (p.eps, p.q_dist_q0)).collect();
    let distance_fit = fit_rate(&fit_points).ok();
    ok.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let distance_monotone = ok.windows(2).all(|w| w[0].q_dist_q0 > w[1].q_dist_q0);
    Ok(EpsSweepReport {
        q0_action: q0.action,
        q0_pde_residual: pde_residual(&q0.q, &reference)?,
        q0_h1_norm: q0_h1,
        beta0_plus: plus0.beta,
        beta0_minus: minus0.beta,
        beta0,
        points,
        distance_fit,
        distance_monotone,
    })
}

fn eps_point(
    eps: f64,
    problem: &GroundStateProblem,
    res: &GroundStateResult,
    q0: &Field,
    q0_h1: f64,
    ccfg: &ContractionConfig,
    cfg: &StudyConfig,
) -> EpsPoint {
    let mut p = EpsPoint {
        eps,
        action: res.action,
        action_spread: action_spread(&res.action_expressions),
        nehari_residual: res.nehari_residual,
        under_resolved: res.under_resolved,
        ..EpsPoint::nan()
    };
    let mut failures = Vec::new();
    match pde_residual(&res.q, problem) {
        Ok(r) => p.pde_residual = r,
        Err(e) => failures.push(format!("residual: {e}")),
    }
    match aligned_h1_distance(&res.q, q0) {
        Ok(d) => p.q_dist_q0 = d,
        Err(e) => failures.push(format!("align: {e}")),
    }
    match contraction_solve_from(q0, problem, None, ccfg) {
        Ok(c) => {
            p.contraction_iterations = c.iterations;
            p.max_factor = c.max_factor.unwrap_or(0.0);
            p.delta_epsilon = c.delta_epsilon;
            p.r_norm = c.r_norm;
            p.u_dist_q0 = c.u.sub(q0).map(|d| sobolev_norm(&d, 1.0)).unwrap_or(f64::NAN);
            match aligned_h1_distance(&res.q, &c.u) {
                Ok(d) => {
                    p.q_dist_u = d;
                    p.q_dist_u_rel = d / q0_h1;
                }
                Err(e) => failures.push(format!("align: {e}")),
            }
            if !c.converged {
                failures.push("contraction: not converged".into());
            }
        }
        Err(e) => failures.push(format!("contraction: {e}")),
    }
    match kernel_residuals_for(&res.q, problem) {
        Ok(k) => {
            p.kernel_plus = max_kernel(&k, Sign::Plus);
            p.kernel_minus = max_kernel(&k, Sign::Minus);
        }
        Err(e) => failures.push(format!("kernel: {e}")),
    }
    if cfg.eps_sweep.spectrum {
        match beta_pair(&res.q, problem, cfg) {
            Ok((beta, plus, minus)) => {
                p.beta = beta;
                p.beta_plus = plus.beta;
                p.beta_minus = minus.beta;
                p.negative_count_plus = plus.negative_count;
                if !(plus.converged && minus.converged) {
                    failures.push("spectrum: not converged".into());
                }
            }
            Err(e) => failures.push(format!("spectrum: {e}")),
        }
    }
    p.status = if failures.is_empty() {
        "ok".into()
    } else {
        failures.join("; ")
    };
    p
}

#[derive(Clone, Debug, Serialize)]
pub struct CReference {
    pub c: f64,
    pub status: String,
    pub action: f64,
    pub action_spread: f64,
    pub nehari_residual: f64,
    pub pde_residual: f64,
    pub under_resolved: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CPoint {
    pub c: f64,
    pub order: usize,
    pub n: usize,
    pub status: String,
    pub action: f64,
    pub action_spread: f64,
    pub pde_residual: f64,
    pub nehari_residual: f64,
    /// Aligned `||Q_c^J - Q_c||_{H^1}`.
    pub error: f64,
    pub iterations: usize,
}

impl CPoint {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderFit {
    pub order: usize,
    /// `error ~ C c^slope`, absent with fewer than three successful points.
    pub fit: Option<RateFit>,
    /// Relative change of the error at the largest `c` under grid doubling.
    pub refinement_change: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CSweepReport {
    pub mass: f64,
    pub references: Vec<CReference>,
    pub points: Vec<CPoint>,
    pub refined: Vec<CPoint>,
    pub fits: Vec<OrderFit>,
}

impl CSweepReport {
    pub const COLUMNS: [&'static str; 10] = [
        "c",
        "order",
        "n",
        "status",
        "action",
        "action_spread",
        "pde_residual",
        "nehari_residual",
        "error",
        "iterations",
    ];

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&Self::COLUMNS);
        for p in self.points.iter().chain(&self.refined) {
            t.push(vec![
                format_f64(p.c),
                p.order.to_string(),
                p.n.to_string(),
                p.status.clone(),
                format_f64(p.action),
                format_f64(p.action_spread),
                format_f64(p.pde_residual),
                format_f64(p.nehari_residual),
                format_f64(p.error),
                p.iterations.to_string(),
            ]);
        }
        t
    }

    /// Error of order `order` at `c` on the sweep grid.
    pub fn error(&self, c: f64, order: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.c == c && p.order == order && p.is_ok())
            .map(|p| p.error)
    }
}

type Solved = std::result::Result<(GroundStateProblem, GroundStateResult), String>;

/// Pseudo-relativistic ground states `Q_c` along `c` (warm-started chain).
fn reference_chain(cfg: &StudyConfig, grid: GridSpec, values: &[f64], mut warm: Option<Field>) -> Vec<Solved> {
    let mass = cfg.c_sweep.mass;
    let mut out = Vec::new();
    for &c in values {
        let symbol = DispersionSymbol::PseudoRelativistic { mass, c };
        let attempt = GroundStateProblem::with_kernel_radius(symbol, cfg.nonlinearity, grid, cfg.kernel_radius)
            .and_then(|problem| {
                let res = converged(minimize(&problem, warm.as_ref(), &cfg.minimize)?, "pseudo-relativistic solve")?;
                Ok((problem, res))
            });
        match attempt {
            Ok(pair) => {
                warm = Some(pair.1.q.clone());
                out.push(Ok(pair));
            }
            Err(e) => {
                log::warn!("c = {c}: {e}");
                out.push(Err(e.to_string()));
            }
        }
    }
    out
}

/// Truncated solves for every `(c, J)`, warm-started from `Q_c`, in parallel.
fn truncated_points(cfg: &StudyConfig, grid: GridSpec, values: &[f64], refs: &[Solved]) -> Vec<CPoint> {
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| cfg.c_sweep.orders.iter().map(move |&j| (i, j)))
        .collect();
    jobs.par_iter()
        .map(|&(i, order)| {
            let c = values[i];
            let mut point = CPoint {
                c,
                order,
                n: grid.n(),
                status: "ok".into(),
                action: f64::NAN,
                action_spread: f64::NAN,
                pde_residual: f64::NAN,
                nehari_residual: f64::NAN,
                error: f64::NAN,
                iterations: 0,
            };
            let (_, reference) = match &refs[i] {
                Ok(pair) => pair,
                Err(e) => {
                    point.status = format!("reference: {e}");
                    return point;
                }
            };
            let symbol = DispersionSymbol::RelativisticTruncation {
                mass: cfg.c_sweep.mass,
                c,
                order,
            };
            let attempt = GroundStateProblem::with_kernel_radius(symbol, cfg.nonlinearity, grid, cfg.kernel_radius)
                .and_then(|problem| {
                    let res = converged(minimize(&problem, Some(&reference.q), &cfg.minimize)?, "truncated solve")?;
                    let pde = pde_residual(&res.q, &problem)?;
                    let error = aligned_h1_distance(&res.q, &reference.q)?;
                    Ok((res, pde, error))
                });
            match attempt {
                Ok((res, pde, error)) => {
                    point.action = res.action;
                    point.action_spread = action_spread(&res.action_expressions);
                    point.pde_residual = pde;
                    point.nehari_residual = res.nehari_residual;
                    point.error = error;
                    point.iterations = res.iterations;
                }
                Err(e) => point.status = e.to_string(),
            }
            point
        })
        .collect()
}

fn reference_rows(values: &[f64], refs: &[Solved]) -> Vec<CReference> {
    values
        .iter()
        .zip(refs)
        .map(|(&c, r)| match r {
            Ok((problem, res)) => CReference {
                c,
                status: "ok".into(),
                action: res.action,
                action_spread: action_spread(&res.action_expressions),
                nehari_residual: res.nehari_residual,
                pde_residual: pde_residual(&res.q, problem).unwrap_or(f64::NAN),
                under_resolved: res.under_resolved,
            },
            Err(e) => CReference {
                c,
                status: e.clone(),
                action: f64::NAN,
                action_spread: f64::NAN,
                nehari_residual: f64::NAN,
                pde_residual: f64::NAN,
                under_resolved: false,
            },
        })
        .collect()
}

/// Distance between the truncated and full pseudo-relativistic ground states
/// along `c` on a fixed grid, with a grid doubling at the largest `c`.
pub fn run_c_sweep(cfg: &StudyConfig) -> Result<CSweepReport> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let values = cfg.c_sweep.values.clone();
    let refs = reference_chain(cfg, grid, &values, None);
    let points = truncated_points(cfg, grid, &values, &refs);
    let mut references = reference_rows(&values, &refs);

    let mut refined = Vec::new();
    let largest = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if cfg.c_sweep.refine {
        let at = values.iter().position(|&c| c == largest).expect("values are nonempty");
        let fine = grid.refined();
        let warm = match &refs[at] {
            Ok((_, res)) => Some(resample(&res.q, fine)?),
            Err(_) => None,
        };
        let fine_refs = reference_chain(cfg, fine, &[largest], warm);
        refined = truncated_points(cfg, fine, &[largest], &fine_refs);
        references.extend(reference_rows(&[largest], &fine_refs));
    }

    let fits = cfg
        .c_sweep
        .orders
        .iter()
        .map(|&order| {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|p| p.order == order && p.is_ok())
                .map(|p| (p.c, p.error))
                .collect();
            let coarse = points.iter().find(|p| p.order == order && p.c == largest && p.is_ok());
            let fine = refined.iter().find(|p| p.order == order && p.is_ok());
            let refinement_change = match (coarse, fine) {
                (Some(a), Some(b)) => Some((b.error - a.error).abs() / a.error),
                _ => None,
            };
            OrderFit {
                order,
                fit: fit_rate(&pts).ok(),
                refinement_change,
            }
        })
        .collect();
    Ok(CSweepReport {
        mass: cfg.c_sweep.mass,
        references,
        points,
        refined,
        fits,
    })
}
