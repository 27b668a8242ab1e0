//! Linearized operators at a real solution and their spectral diagnostics.
//!
//! With `L = (P + 1) - N_u` and `A = (1 + P)^{-1/2} N_u (1 + P)^{-1/2}`, the
//! factorization `L = (1 + P)^{1/2} (Id - A) (1 + P)^{1/2}` holds exactly on
//! the grid. Both `A+` and `A-` are nonnegative and compact, so the spectrum
//! of `Id - A` nearest zero is found at the top of the spectrum of `A`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::{pde_residual, GroundStateProblem};
use crate::linalg::{dot, lobpcg, norm, orthonormalize, LobpcgConfig};
use crate::nonlinearity::NonlinearityKind;
use crate::spectral::{derivative, random_smooth_field, sobolev_norm, Field, Multiplier, Reality, Space};
use crate::symbols::DispersionSymbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

/// `L` and `A` of one sign at a fixed real linearization point.
#[derive(Clone, Debug)]
pub struct Linearization<'a> {
    sign: Sign,
    u: Field,
    problem: &'a GroundStateProblem,
    sqrt: Multiplier,
    inv_sqrt: Multiplier,
}

impl<'a> Linearization<'a> {
    pub fn new(sign: Sign, u: &Field, problem: &'a GroundStateProblem) -> Result<Self> {
        if u.grid() != problem.grid() {
            return Err(Error::GridMismatch);
        }
        if !u.is_real() {
            return Err(Error::ComplexLinearizationPoint);
        }
        let shifted = problem.multiplier().map(|p| 1.0 + p)?;
        let floor = shifted.values().iter().copied().fold(f64::INFINITY, f64::min);
        if !(floor > 0.0) {
            return Err(Error::NotElliptic { gamma: floor });
        }
        Ok(Self {
            sign,
            u: u.to_physical(),
            problem,
            sqrt: shifted.map(f64::sqrt)?,
            inv_sqrt: shifted.map(|v| 1.0 / v.sqrt())?,
        })
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn point(&self) -> &Field {
        &self.u
    }

    /// `N^sign_u g`, physical.
    pub fn apply_n(&self, g: &Field) -> Result<Field> {
        let nl = self.problem.nonlinearity();
        match self.sign {
            Sign::Plus => nl.nplus(&self.u, g),
            Sign::Minus => nl.nminus(&self.u, g),
        }
    }

    /// `(P + 1) g - N^sign_u g`, in Fourier space.
    pub fn apply_l(&self, g: &Field) -> Result<Field> {
        let n = self.apply_n(g)?.into_fourier();
        let mut values = g.to_fourier().into_values();
        for ((c, p), m) in values.iter_mut().zip(self.problem.multiplier().values()).zip(n.values()) {
            *c = *c * (1.0 + p) - m;
        }
        let reality = if g.is_real() { Reality::Real } else { Reality::Complex };
        Ok(Field::raw(*g.grid(), values, Space::Fourier, reality))
    }

    /// `(1 + P)^{-1/2} N^sign_u (1 + P)^{-1/2} g`, physical.
    pub fn apply_a(&self, g: &Field) -> Result<Field> {
        let inner = self.inv_sqrt.apply(&g.to_fourier())?;
        let n = self.apply_n(&inner)?;
        Ok(self.inv_sqrt.apply(&n.into_fourier())?.into_physical())
    }

    /// `(1 + P)^{1/2} g`, in the space of `g`.
    pub fn transport(&self, g: &Field) -> Result<Field> {
        self.sqrt.apply(g)
    }

    fn apply_a_samples(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_a(&from_samples(self.problem.grid(), v))?.real_samples())
    }

    /// The kernel predicted for a ground state: `d_j u` (plus) or `u` (minus).
    pub fn kernel_candidates(&self) -> Result<Vec<Field>> {
        match self.sign {
            Sign::Plus => (0..self.u.grid().dim()).map(|j| derivative(&self.u, j)).collect(),
            Sign::Minus => Ok(vec![self.u.clone()]),
        }
    }
}

fn from_samples(grid: &crate::spectral::GridSpec, v: &[f64]) -> Field {
    let values = v.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    Field::raw(*grid, values, Space::Physical, Reality::Real)
}

/// `A^sign g` for a symbol and nonlinearity given directly.
pub fn apply_a(sign: Sign, u: &Field, g: &Field, symbol: &DispersionSymbol, kind: NonlinearityKind) -> Result<Field> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *u.grid())?;
    Linearization::new(sign, u, &problem)?.apply_a(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelResidual {
    pub sign: Sign,
    /// Differentiation axis of the candidate; `None` for `u` itself.
    pub axis: Option<usize>,
    /// `||L candidate||_{H^-1} / ||candidate||_{H^1}`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub rows: Vec<KernelResidual>,
    /// `||(P + 1) u - N'(u)||_{H^-1} / ||u||_{H^1}`.
    pub pde_residual: f64,
    /// False when `u` is visibly not a solution (relative PDE residual above `1e-6`).
    pub is_solution: bool,
}

pub fn kernel_residuals_for(u: &Field, problem: &GroundStateProblem) -> Result<KernelReport> {
    let mut rows = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let lin = Linearization::new(sign, u, problem)?;
        for (j, c) in lin.kernel_candidates()?.iter().enumerate() {
            let lc = lin.apply_l(c)?;
            rows.push(KernelResidual {
                sign,
                axis: (sign == Sign::Plus).then_some(j),
                residual: sobolev_norm(&lc, -1.0) / sobolev_norm(c, 1.0),
            });
        }
    }
    let pde = relative_pde_residual(u, problem)?;
    Ok(KernelReport {
        rows,
        pde_residual: pde,
        is_solution: pde < 1e-6,
    })
}

fn relative_pde_residual(u: &Field, problem: &GroundStateProblem) -> Result<f64> {
    let np = problem.nonlinearity().nprime(u)?.into_fourier();
    let mut values = u.to_fourier().into_values();
    for ((c, p), m) in values.iter_mut().zip(problem.multiplier().values()).zip(np.values()) {
        *c = *c * (1.0 + p) - m;
    }
    let r = Field::raw(*u.grid(), values, Space::Fourier, Reality::Complex);
    Ok(sobolev_norm(&r, -1.0) / sobolev_norm(u, 1.0))
}

/// Residuals of `L+ d_j u` and `L- u`, relative to the candidate's `H^1` norm.
pub fn kernel_residuals(u: &Field, symbol: &DispersionSymbol, kind: NonlinearityKind) -> Result<KernelReport> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *u.grid())?;
    kernel_residuals_for(u, &problem)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Eigenvalues of `Id - A` to compute on the deflated space; at least `d + 2`.
    pub n_eigs: usize,
    /// Extra block vectors that speed up convergence of the wanted ones.
    pub guard: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// When set, also estimate the eigenvalue of `A` beyond this many modes.
    pub compactness_modes: Option<usize>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            n_eigs: 5,
            guard: 2,
            tol: 1e-9,
            max_iter: 500,
            seed: 0,
            compactness_modes: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sign: Sign,
    /// `||L c||_{H^-1} / ||c||_{H^1}` for each kernel candidate `c`.
    pub kernel_residuals: Vec<f64>,
    /// Rayleigh quotients of `Id - A` at the normalized transported candidates.
    pub kernel_eigenvalues: Vec<f64>,
    /// Norms of the transported candidates before normalization.
    pub deflation_norms: Vec<f64>,
    /// Every kernel eigenvalue lies within ten PDE residuals of zero.
    pub numerical_kernel: bool,
    /// Absolute `||(P + 1) u - N'(u)||_{H_P^-1}`.
    pub pde_residual: f64,
    /// Eigenvalues of `Id - A` on the deflated space, ascending.
    pub eigenvalues: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
    /// Largest `|<v, y>|` between a computed eigenvector and a deflated direction.
    pub deflation_leak: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest `|lambda|` among the computed deflated eigenvalues.
    pub beta: f64,
    pub negative_count: usize,
    /// Eigenvalue of `A` (undeflated) just past `compactness_modes`, if requested.
    pub compactness_tail: Option<f64>,
    pub non_degenerate: bool,
}

/// Eigenvalues of `Id - A^sign` nearest zero, deflated against the
/// transported kernel candidates.
pub fn beta_estimate_for(sign: Sign, u: &Field, problem: &GroundStateProblem, cfg: &SpectrumConfig) -> Result<SpectrumReport> {
    let g = *problem.grid();
    if cfg.n_eigs < g.dim() + 2 {
        return Err(Error::Config(format!(
            "n_eigs = {} must be at least d + 2 = {}",
            cfg.n_eigs,
            g.dim() + 2
        )));
    }
    let lin = Linearization::new(sign, u, problem)?;
    let candidates = lin.kernel_candidates()?;
    let mut kernel_residuals = Vec::new();
    let mut transported = Vec::new();
    let mut deflation_norms = Vec::new();
    let mut kernel_eigenvalues = Vec::new();
    for c in &candidates {
        kernel_residuals.push(sobolev_norm(&lin.apply_l(c)?, -1.0) / sobolev_norm(c, 1.0));
        let t = lin.transport(&c.to_fourier())?.into_physical().real_samples();
        let tn = norm(&t);
        deflation_norms.push(tn);
        let e: Vec<f64> = t.iter().map(|v| v / tn).collect();
        let ae = lin.apply_a_samples(&e)?;
        kernel_eigenvalues.push(1.0 - dot(&e, &ae));
        transported.push(e);
    }
    let deflate = orthonormalize(&transported, 1e-8);
    let pde = pde_residual(u, problem)?;
    let numerical_kernel = kernel_eigenvalues.iter().all(|l| l.abs() < 10.0 * pde.max(f64::EPSILON));

    let block = cfg.n_eigs + cfg.guard;
    let initial: Vec<Vec<f64>> = (0..block)
        .map(|i| random_smooth_field(g, cfg.seed.wrapping_add(i as u64), 2.0).to_physical().real_samples())
        .collect();
    let lcfg = LobpcgConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        guard: cfg.guard,
    };
    let out = lobpcg(|v: &[f64]| lin.apply_a_samples(v), &initial, &deflate, &lcfg)?;
    let mut eigenvalues: Vec<f64> = out.values.iter().take(cfg.n_eigs).map(|mu| 1.0 - mu).collect();
    let eigen_residuals: Vec<f64> = out.residuals.iter().take(cfg.n_eigs).copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let deflation_leak = out
        .vectors
        .iter()
        .flat_map(|v| deflate.iter().map(move |y| dot(v, y).abs()))
        .fold(0.0, f64::max);
    let beta = eigenvalues.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
    let negative_count = eigenvalues.iter().filter(|l| **l < 0.0).count();

    let compactness_tail = match cfg.compactness_modes {
        Some(modes) => Some(compactness_tail(&lin, modes, cfg)?),
        None => None,
    };
    Ok(SpectrumReport {
        sign,
        kernel_residuals,
        kernel_eigenvalues,
        deflation_norms,
        numerical_kernel,
        pde_residual: pde,
        eigenvalues,
        eigen_residuals,
        deflation_leak,
        iterations: out.iterations,
        converged: out.converged,
        beta,
        negative_count,
        compactness_tail,
        non_degenerate: out.converged && beta > 0.0,
    })
}

/// `beta_estimate_for` with a problem built from `symbol` and `kind` on the grid of `u`.
pub fn beta_estimate(
    sign: Sign,
    u: &Field,
    symbol: &DispersionSymbol,
    kind: NonlinearityKind,
    n_eigs: usize,
) -> Result<SpectrumReport> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *u.grid())?;
    let cfg = SpectrumConfig {
        n_eigs,
        ..SpectrumConfig::default()
    };
    beta_estimate_for(sign, u, &problem, &cfg)
}

/// The `(modes + 1)`-th largest eigenvalue of `A`, a numerical witness of compactness.
fn compactness_tail(lin: &Linearization<'_>, modes: usize, cfg: &SpectrumConfig) -> Result<f64> {
    let g = *lin.point().grid();
    let block = modes + 1 + cfg.guard;
    let initial: Vec<Vec<f64>> = (0..block)
        .map(|i| random_smooth_field(g, cfg.seed.wrapping_add(1000 + i as u64), 2.0).to_physical().real_samples())
        .collect();
    let lcfg = LobpcgConfig {
        tol: 1e-6,
        max_iter: cfg.max_iter,
        guard: cfg.guard,
    };
    let out = lobpcg(|v: &[f64]| lin.apply_a_samples(v), &initial, &[], &lcfg)?;
    Ok(out.values[modes])
}
