//! Configured studies behind the command-line interface: single runs, the
//! `eps` and `c` sweeps, and the verification suite.

mod cli;
mod config;
mod fit;
mod output;
mod single;
mod sweeps;
mod verify;

pub use cli::cli_main;
pub use config::{CSweepConfig, EpsSweepConfig, GridConfig, Overrides, StudyConfig, StudyKind, VerifyConfig};
pub use fit::{fit_rate, RateFit};
pub use output::{field_bytes, field_from_bytes, format_f64, CsvTable, RunWriter, FIELD_FORMAT};
pub use single::{
    run_contraction, run_groundstate, run_spectrum, ContractionStudy, GroundStateStudy, SpectrumStudy,
};
pub use sweeps::{run_c_sweep, run_eps_sweep, CPoint, CReference, CSweepReport, EpsPoint, EpsSweepReport, OrderFit};
pub use verify::{multilinear_max, run_verify, EllipticityRow, MultilinearRow, TaylorRow, VerifyReport};

use crate::error::{Error, Result};
use crate::groundstate::{align, minimize, GroundStateProblem, GroundStateResult, MinimizeConfig};
use crate::spectral::{Field, GridSpec, Multiplier};
use crate::symbols::DispersionSymbol;

/// The `H^1` metric, `p = |xi|^2`.
pub(crate) fn h1_metric(grid: GridSpec) -> Result<Multiplier> {
    Multiplier::from_radial(grid, |s| s)
}

/// `min ||exp(i theta) u(. - a) - reference||_{H^1}`.
pub(crate) fn aligned_h1_distance(u: &Field, reference: &Field) -> Result<f64> {
    Ok(align(u, reference, &h1_metric(*reference.grid())?)?.residual)
}

/// Second-order ground state at the tolerance needed downstream of the
/// contraction, which inherits its PDE residual.
pub(crate) fn reference_ground_state(cfg: &StudyConfig, grid: GridSpec) -> Result<(GroundStateProblem, GroundStateResult)> {
    let problem =
        GroundStateProblem::with_kernel_radius(DispersionSymbol::Laplacian, cfg.nonlinearity, grid, cfg.kernel_radius)?;
    let mcfg = MinimizeConfig {
        tol: cfg.minimize.tol.min(1e-12),
        ..cfg.minimize.clone()
    };
    let res = converged(minimize(&problem, None, &mcfg)?, "second-order ground state")?;
    Ok((problem, res))
}

pub(crate) fn converged(res: GroundStateResult, what: &str) -> Result<GroundStateResult> {
    if res.converged {
        Ok(res)
    } else {
        Err(Error::NotConverged(format!(
            "{what} (gradient residual {:.3e} after {} iterations)",
            res.gradient_residual, res.iterations
        )))
    }
}
