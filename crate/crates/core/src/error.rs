use thiserror::Error;

use crate::spectral::Space;

/// Errors raised by the library. Solver non-convergence is not an error: it is
/// reported through the `converged` flags on the result types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is in {found:?} space, expected {expected:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("symbol is not finite at wavevector {0:?}")]
    NonFiniteSymbol(Vec<f64>),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("symbol is not elliptic on this grid (gamma = {gamma:.3e})")]
    NotElliptic { gamma: f64 },

    #[error("inadmissible nonlinearity: {0}")]
    Inadmissible(String),

    #[error("linearization point must be real-valued")]
    ComplexLinearizationPoint,

    #[error("input is not in the radial real subspace (relative defect {0:.3e})")]
    NonRadial(f64),

    #[error("potential energy vanishes, the Nehari scaling is undefined")]
    DegenerateNehari,

    #[error("fields are numerically orthogonal, alignment is undefined")]
    AlignmentUndefined,

    #[error("step size collapsed after {iterations} iterations")]
    StepCollapse { iterations: usize },

    #[error("linear solve stagnated at relative residual {residual:.3e}: outside invertibility regime")]
    OutsideInvertibilityRegime { residual: f64 },

    #[error("contraction diverged (factor {factor:.3}): eps too large")]
    Divergence { factor: f64 },

    #[error("expected {expected} fields, got {found}")]
    WrongArity { expected: usize, found: usize },

    #[error("{0} did not converge")]
    NotConverged(String),

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by the inputs rather than by a solver.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Self::InvalidGrid(_)
                | Self::InvalidSymbol(_)
                | Self::NotElliptic { .. }
                | Self::Inadmissible(_)
                | Self::Config(_)
                | Self::WrongArity { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
