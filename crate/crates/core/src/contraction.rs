//! Fixed-point construction of radial real solutions near the second-order limit.
//!
//! With `r = u - Q0`, the equation for `u` becomes `r = Phi(r)` where
//! `Phi(r) = (P + 1 - N+_{Q0})^{-1} [(-Lap - P) Q0 + N'(Q0 + r) - N'(Q0) - N+_{Q0} r]`.
//! The inverse is applied by preconditioned MINRES restricted to the radial
//! real subspace.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::{pde_residual, GroundStateProblem};
use crate::linalg::minres;
use crate::linearization::{beta_estimate_for, Linearization, Sign, SpectrumConfig};
use crate::nonlinearity::NonlinearityKind;
use crate::spectral::{
    dual_energy_norm, energy_norm, radial_defect, symmetrize_radial, Field, GridSpec, Multiplier, Reality, Space,
};
use crate::symbols::DispersionSymbol;

/// Largest relative radial defect accepted for inputs of the radial solver.
const RADIAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionConfig {
    /// Stop once `||r_{n+1} - r_n||_{H_P}` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative `H_P^-1` residual of each inner solve.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Non-degeneracy constant at the second-order limit; measured when absent.
    pub beta0: Option<f64>,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 200,
            inner_tol: 1e-12,
            inner_max_iter: 2000,
            beta0: None,
        }
    }
}

impl ContractionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol", self.tol), ("inner_tol", self.inner_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("contraction.{name} = {v} must be positive")));
            }
        }
        if self.inner_tol >= self.tol {
            return Err(Error::Config(format!(
                "contraction.inner_tol = {} must be below contraction.tol = {}",
                self.inner_tol, self.tol
            )));
        }
        if self.max_iter == 0 || self.inner_max_iter == 0 {
            return Err(Error::Config("contraction iteration limits must be positive".into()));
        }
        if let Some(b) = self.beta0 {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("contraction.beta0 = {b} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionRecord {
    pub iter: usize,
    /// `||r_n - r_{n-1}||_{H_P}`.
    pub update: f64,
    /// `||(P + 1) u_n - N'(u_n)||_{H^-1}`.
    pub residual: f64,
    /// `update_n / update_{n-1}`, from the second iteration on.
    pub factor: Option<f64>,
    pub inner_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct ContractionResult {
    /// `Q0 + r`, physical, radial and real.
    pub u: Field,
    pub r: Field,
    pub delta_epsilon: f64,
    pub beta0: f64,
    /// `||r||_{H_P}`.
    pub r_norm: f64,
    pub log: Vec<ContractionRecord>,
    /// Largest factor among iterations whose previous update exceeds `100 tol`.
    pub max_factor: Option<f64>,
    /// Some factor above 1 after the first iteration.
    pub factor_flag: bool,
    pub iterations: usize,
    pub pde_residual: f64,
    pub converged: bool,
}

/// The fixed-point map and its inner solver at one symbol.
#[derive(Clone, Debug)]
pub struct ContractionMap<'a> {
    q0: Field,
    problem: &'a GroundStateProblem,
    forcing: Field,
    cfg: ContractionConfig,
}

impl<'a> ContractionMap<'a> {
    pub fn new(q0: &Field, problem: &'a GroundStateProblem, cfg: &ContractionConfig) -> Result<Self> {
        cfg.validate()?;
        if q0.grid() != problem.grid() {
            return Err(Error::GridMismatch);
        }
        if !q0.is_real() {
            return Err(Error::ComplexLinearizationPoint);
        }
        let defect = radial_defect(q0);
        if defect > RADIAL_TOL {
            return Err(Error::NonRadial(defect));
        }
        let q0 = q0.to_physical();
        let forcing = defect_multiplier(problem)?.apply(&q0)?;
        Ok(Self {
            q0,
            problem,
            forcing,
            cfg: *cfg,
        })
    }

    pub fn problem(&self) -> &GroundStateProblem {
        self.problem
    }

    /// `(-Lap - P) Q0`, physical.
    pub fn forcing(&self) -> &Field {
        &self.forcing
    }

    /// Solves `(P + 1 - N+_{Q0}) h = f` on the radial real subspace.
    pub fn solve(&self, f: &Field) -> Result<(Field, usize)> {
        if f.grid() != self.problem.grid() {
            return Err(Error::GridMismatch);
        }
        if !f.is_real() {
            return Err(Error::NonRadial(f64::INFINITY));
        }
        let fp = f.to_physical();
        let defect = radial_defect(&fp);
        if defect > RADIAL_TOL {
            return Err(Error::NonRadial(defect));
        }
        let g = *self.problem.grid();
        let lin = Linearization::new(Sign::Plus, &self.q0, self.problem)?;
        let resolvent = self.problem.multiplier().map(|p| 1.0 / (1.0 + p))?;
        let op = |v: &[f64]| -> Result<Vec<f64>> {
            let l = lin.apply_l(&samples_field(&g, v))?;
            Ok(symmetrize_radial(&l).real_samples())
        };
        let precond = |v: &[f64]| -> Vec<f64> {
            let z = resolvent.apply(&samples_field(&g, v)).expect("same grid");
            symmetrize_radial(&z).real_samples()
        };
        let b = symmetrize_radial(&fp).real_samples();
        let out = minres(op, precond, &b, self.cfg.inner_tol, self.cfg.inner_max_iter)?;
        Ok((samples_field(&g, &out.x), out.iterations))
    }

    /// `Phi(r)` and the inner iteration count.
    pub fn apply(&self, r: &Field) -> Result<(Field, usize)> {
        let rhs = self.right_hand_side(r)?;
        self.solve(&rhs)
    }

    fn right_hand_side(&self, r: &Field) -> Result<Field> {
        let nl = self.problem.nonlinearity();
        let r = r.to_physical();
        let u = self.q0.add(&r)?;
        let diff = nl.nprime(&u)?.sub(&nl.nprime(&self.q0)?)?.sub(&nl.nplus(&self.q0, &r)?)?;
        Ok(symmetrize_radial(&self.forcing.add(&diff)?))
    }
}

fn samples_field(grid: &GridSpec, v: &[f64]) -> Field {
    let values = v.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    Field::raw(*grid, values, Space::Physical, Reality::Real)
}

/// `|xi|^2 - p(xi)`, the symbol of `-Lap - P`.
fn defect_multiplier(problem: &GroundStateProblem) -> Result<Multiplier> {
    let g = *problem.grid();
    let values = g
        .wavevector_sq_table()
        .iter()
        .zip(problem.multiplier().values())
        .map(|(s, p)| s - p)
        .collect();
    Multiplier::from_values(g, values)
}

/// `(4 / beta0) ||(-Lap - P) Q0||_{H_P^-1}`.
pub fn delta_epsilon(symbol: &DispersionSymbol, q0: &Field, beta0: f64) -> Result<f64> {
    let problem_symbol = symbol.multiplier(q0.grid())?;
    delta_from_multiplier(&problem_symbol, q0, beta0)
}

fn delta_from_multiplier(p: &Multiplier, q0: &Field, beta0: f64) -> Result<f64> {
    if !(beta0 > 0.0) {
        return Err(Error::Config(format!("beta0 = {beta0} must be positive")));
    }
    let g = *q0.grid();
    let values = g.wavevector_sq_table().iter().zip(p.values()).map(|(s, v)| s - v).collect();
    let defect = Multiplier::from_values(g, values)?.apply(q0)?;
    Ok(4.0 / beta0 * dual_energy_norm(&defect, p)?)
}

/// `(P + 1) g - N^sign_u g`, in Fourier space.
pub fn apply_l(sign: Sign, u: &Field, g: &Field, symbol: &DispersionSymbol, kind: NonlinearityKind) -> Result<Field> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *u.grid())?;
    Linearization::new(sign, u, &problem)?.apply_l(g)
}

/// `h` with `(P + 1 - N+_{Q0}) h = f` for radial real `f`.
pub fn solve_linearized_radial(
    f: &Field,
    q0: &Field,
    symbol: &DispersionSymbol,
    kind: NonlinearityKind,
    cfg: &ContractionConfig,
) -> Result<Field> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *q0.grid())?;
    Ok(ContractionMap::new(q0, &problem, cfg)?.solve(f)?.0)
}

/// `Phi(r)`.
pub fn phi(r: &Field, q0: &Field, symbol: &DispersionSymbol, kind: NonlinearityKind, cfg: &ContractionConfig) -> Result<Field> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *q0.grid())?;
    Ok(ContractionMap::new(q0, &problem, cfg)?.apply(r)?.0)
}

/// Measured `min(beta+, beta-)` of `Q0` for the second-order problem.
pub fn measure_beta0(q0: &Field, kind: NonlinearityKind, kernel_radius: Option<f64>) -> Result<f64> {
    let problem = GroundStateProblem::with_kernel_radius(DispersionSymbol::Laplacian, kind, *q0.grid(), kernel_radius)?;
    let cfg = SpectrumConfig::default();
    let cfg = SpectrumConfig {
        n_eigs: cfg.n_eigs.max(q0.grid().dim() + 2),
        ..cfg
    };
    let mut beta = f64::INFINITY;
    for sign in [Sign::Plus, Sign::Minus] {
        beta = beta.min(beta_estimate_for(sign, q0, &problem, &cfg)?.beta);
    }
    Ok(beta)
}

/// Iterates `r <- Phi(r)` from `r = 0`.
pub fn contraction_solve(
    q0: &Field,
    symbol: &DispersionSymbol,
    kind: NonlinearityKind,
    cfg: &ContractionConfig,
) -> Result<ContractionResult> {
    let problem = GroundStateProblem::new(symbol.clone(), kind, *q0.grid())?;
    contraction_solve_from(q0, &problem, None, cfg)
}

/// Iterates `r <- Phi(r)` from `start` (or zero) for an explicit problem.
pub fn contraction_solve_from(
    q0: &Field,
    problem: &GroundStateProblem,
    start: Option<&Field>,
    cfg: &ContractionConfig,
) -> Result<ContractionResult> {
    let map = ContractionMap::new(q0, problem, cfg)?;
    let beta0 = match cfg.beta0 {
        Some(b) => b,
        None => {
            let radius = problem.nonlinearity().kernel().map(|k| k.radius());
            measure_beta0(q0, problem.kind(), radius)?
        }
    };
    let delta = delta_from_multiplier(problem.multiplier(), q0, beta0)?;
    let q0 = q0.to_physical();
    let metric = problem.multiplier();
    let zero = Field::zeros(*q0.grid(), Space::Physical);

    if map.forcing().max_abs() == 0.0 && start.is_none() {
        return Ok(ContractionResult {
            pde_residual: pde_residual(&q0, problem)?,
            u: q0,
            r: zero,
            delta_epsilon: delta,
            beta0,
            r_norm: 0.0,
            log: Vec::new(),
            max_factor: None,
            factor_flag: false,
            iterations: 0,
            converged: true,
        });
    }

    let mut r = start.map(|s| s.to_physical()).unwrap_or(zero);
    let mut log: Vec<ContractionRecord> = Vec::new();
    let mut above_one = 0;
    let mut converged = false;
    for iter in 1..=cfg.max_iter {
        let (next, inner) = map.apply(&r)?;
        let update = energy_norm(&next.sub(&r)?, metric)?;
        let prev = log.last().map(|rec| rec.update);
        let factor = prev.map(|p| update / p);
        r = next;
        log.push(ContractionRecord {
            iter,
            update,
            residual: pde_residual(&q0.add(&r)?, problem)?,
            factor,
            inner_iterations: inner,
        });
        if update < cfg.tol {
            converged = true;
            break;
        }
        match factor {
            Some(f) if f > 1.0 => {
                above_one += 1;
                if above_one >= 5 {
                    return Err(Error::Divergence { factor: f });
                }
            }
            _ => above_one = 0,
        }
    }
    let max_factor = log
        .windows(2)
        .filter(|w| w[0].update > 100.0 * cfg.tol)
        .filter_map(|w| w[1].factor)
        .fold(None, |m: Option<f64>, f| Some(m.map_or(f, |v| v.max(f))));
    let factor_flag = log.iter().filter_map(|rec| rec.factor).any(|f| f > 1.0);
    let u = q0.add(&r)?;
    let pde = pde_residual(&u, problem)?;
    Ok(ContractionResult {
        r_norm: energy_norm(&r, metric)?,
        iterations: log.len(),
        converged: converged && pde < 10.0 * cfg.tol,
        pde_residual: pde,
        u,
        r,
        delta_epsilon: delta,
        beta0,
        log,
        max_factor,
        factor_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{align, minimize, MinimizeConfig};
    use crate::spectral::{inner_product_hp, random_smooth_field, sobolev_norm};

    fn line() -> GridSpec {
        GridSpec::new(1, 512, 40.0).unwrap()
    }

    fn kind() -> NonlinearityKind {
        NonlinearityKind::PowerNls { k: 1 }
    }

    fn q0() -> Field {
        let pb = GroundStateProblem::new(DispersionSymbol::Laplacian, kind(), line()).unwrap();
        let cfg = MinimizeConfig {
            tol: 1e-12,
            ..MinimizeConfig::default()
        };
        minimize(&pb, None, &cfg).unwrap().q
    }

    fn radial(seed: u64, size: f64) -> Field {
        let f = symmetrize_radial(&random_smooth_field(line(), seed, 3.0));
        let n = sobolev_norm(&f, 1.0);
        f.scale(size / n)
    }

    #[test]
    fn config_requires_inner_below_outer() {
        let cfg = ContractionConfig {
            inner_tol: 1e-10,
            ..ContractionConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(ContractionConfig::default().validate().is_ok());
    }

    #[test]
    fn delta_scales_with_eps_squared_and_inverse_beta() {
        let q = q0();
        assert_eq!(delta_epsilon(&DispersionSymbol::Laplacian, &q, 0.5).unwrap(), 0.0);
        let a = delta_epsilon(&DispersionSymbol::biharmonic(0.1), &q, 0.5).unwrap();
        let b = delta_epsilon(&DispersionSymbol::biharmonic(0.05), &q, 0.5).unwrap();
        assert!((a / b / 4.0 - 1.0).abs() < 0.05, "{}", a / b);
        let c = delta_epsilon(&DispersionSymbol::biharmonic(0.1), &q, 1.0).unwrap();
        assert!((a / c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn radial_solver_recovers_a_manufactured_solution() {
        let q = q0();
        let sym = DispersionSymbol::biharmonic(0.05);
        let pb = GroundStateProblem::new(sym.clone(), kind(), line()).unwrap();
        let h0 = radial(3, 1.0);
        let f = apply_l(Sign::Plus, &q, &h0, &sym, kind()).unwrap().into_physical();
        let h = solve_linearized_radial(&f, &q, &sym, kind(), &ContractionConfig::default()).unwrap();
        let err = energy_norm(&h.sub(&h0).unwrap(), pb.multiplier()).unwrap();
        assert!(err < 1e-9 * energy_norm(&h0, pb.multiplier()).unwrap(), "{err}");
        let zero = Field::zeros(line(), Space::Physical);
        let h = solve_linearized_radial(&zero, &q, &sym, kind(), &ContractionConfig::default()).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn radial_solver_obeys_the_uniform_bound() {
        let q = q0();
        let beta0 = measure_beta0(&q, kind(), None).unwrap();
        for seed in 0..3 {
            let f = radial(seed, 1.0);
            let h = solve_linearized_radial(&f, &q, &DispersionSymbol::Laplacian, kind(), &ContractionConfig::default())
                .unwrap();
            assert!(sobolev_norm(&h, 1.0) <= 2.0 / beta0 * sobolev_norm(&f, -1.0));
        }
    }

    #[test]
    fn non_radial_forcing_is_rejected() {
        let q = q0();
        let odd = Field::from_real_fn(line(), |x| x[0] * (-x[0] * x[0]).exp());
        let res = solve_linearized_radial(&odd, &q, &DispersionSymbol::Laplacian, kind(), &ContractionConfig::default());
        assert!(matches!(res, Err(Error::NonRadial(_))));
    }

    #[test]
    fn phi_vanishes_at_zero_without_perturbation() {
        let q = q0();
        let zero = Field::zeros(line(), Space::Physical);
        let out = phi(&zero, &q, &DispersionSymbol::Laplacian, kind(), &ContractionConfig::default()).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn phi_is_a_contraction_on_the_ball() {
        let q = q0();
        let sym = DispersionSymbol::biharmonic(0.05);
        let pb = GroundStateProblem::new(sym.clone(), kind(), line()).unwrap();
        let cfg = ContractionConfig {
            beta0: Some(0.5),
            ..ContractionConfig::default()
        };
        let map = ContractionMap::new(&q, &pb, &cfg).unwrap();
        let delta = delta_from_multiplier(pb.multiplier(), &q, 0.5).unwrap();
        let zero = Field::zeros(line(), Space::Physical);
        let phi0 = map.apply(&zero).unwrap().0;
        assert!(energy_norm(&phi0, pb.multiplier()).unwrap() <= delta / 2.0);
        for seed in 0..3 {
            let r = radial(10 + seed, 1.0);
            let rt = radial(20 + seed, 1.0);
            let r = r.scale(delta / energy_norm(&r, pb.multiplier()).unwrap());
            let rt = rt.scale(0.5 * delta / energy_norm(&rt, pb.multiplier()).unwrap());
            let a = map.apply(&r).unwrap().0;
            let b = map.apply(&rt).unwrap().0;
            let lhs = energy_norm(&a.sub(&b).unwrap(), pb.multiplier()).unwrap();
            let rhs = energy_norm(&r.sub(&rt).unwrap(), pb.multiplier()).unwrap();
            assert!(lhs <= 0.5 * rhs);
        }
    }

    #[test]
    fn zero_eps_returns_the_input() {
        let q = q0();
        let cfg = ContractionConfig {
            beta0: Some(0.5),
            ..ContractionConfig::default()
        };
        let res = contraction_solve(&q, &DispersionSymbol::Laplacian, kind(), &cfg).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.u.sub(&q).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn converges_to_the_variational_ground_state() {
        let q = q0();
        let sym = DispersionSymbol::biharmonic(0.05);
        let pb = GroundStateProblem::new(sym.clone(), kind(), line()).unwrap();
        let res = contraction_solve(&q, &sym, kind(), &ContractionConfig::default()).unwrap();
        assert!(res.converged, "{:?}", res.log.last());
        assert!(res.r_norm <= res.delta_epsilon);
        assert!(res.max_factor.unwrap() < 0.9);
        assert!(!res.factor_flag);
        assert!(radial_defect(&res.u) < 1e-10);

        // The same fixed point from another start inside the ball.
        let start = radial(4, 1.0);
        let start = start.scale(0.5 * res.delta_epsilon / energy_norm(&start, pb.multiplier()).unwrap());
        let cfg = ContractionConfig {
            beta0: Some(res.beta0),
            ..ContractionConfig::default()
        };
        let other = contraction_solve_from(&q, &pb, Some(&start), &cfg).unwrap();
        assert!(energy_norm(&other.u.sub(&res.u).unwrap(), pb.multiplier()).unwrap() < 1e-9);

        let mcfg = MinimizeConfig {
            tol: 1e-12,
            ..MinimizeConfig::default()
        };
        let var = minimize(&pb, Some(&q), &mcfg).unwrap();
        let al = align(&var.q, &res.u, pb.multiplier()).unwrap();
        let rel = sobolev_norm(&al.aligned.sub(&res.u).unwrap(), 1.0) / sobolev_norm(&q, 1.0);
        assert!(rel < 1e-6, "{rel}");
        let ip = inner_product_hp(&al.aligned, &res.u, pb.multiplier()).unwrap();
        assert!(ip.re > 0.0);
    }
}
