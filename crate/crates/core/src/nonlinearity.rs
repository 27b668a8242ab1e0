//! Focusing nonlinearities: the potential energy `N`, its derivative `N'`,
//! the linearizations `N+` and `N-`, and the truncated Coulomb convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, Field, GridSpec, Multiplier, Reality, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `|u|^(2k) u`.
    PowerNls { k: u32 },
    /// `(|x|^-1 * |u|^2) u` in three dimensions.
    Hartree3d,
}

impl NonlinearityKind {
    /// Homogeneity degree `p` of `N'`.
    pub fn order(&self) -> f64 {
        match self {
            Self::PowerNls { k } => (2 * k + 1) as f64,
            Self::Hartree3d => 3.0,
        }
    }

    /// Number of fields in the associated multilinear form.
    pub fn arity(&self) -> usize {
        match self {
            Self::PowerNls { k } => 2 * *k as usize + 1,
            Self::Hartree3d => 3,
        }
    }

    /// Power nonlinearities are admissible for any `k` in one and two
    /// dimensions and for `k = 1` in three; Hartree only in three.
    pub fn check_admissible(&self, dim: usize) -> Result<()> {
        match (self, dim) {
            (Self::PowerNls { k: 0 }, _) => Err(Error::Inadmissible("power k must be >= 1".into())),
            (Self::PowerNls { .. }, 1 | 2) | (Self::PowerNls { k: 1 }, 3) | (Self::Hartree3d, 3) => Ok(()),
            (Self::PowerNls { k }, _) => Err(Error::Inadmissible(format!(
                "power nonlinearity with k = {k} requires d in {{1, 2}} (or k = 1 when d = 3), got d = {dim}"
            ))),
            (Self::Hartree3d, _) => Err(Error::Inadmissible(format!(
                "Hartree nonlinearity requires d = 3, got d = {dim}"
            ))),
        }
    }
}

/// Fourier values of `1_{|x| < R} / |x|`: `4 pi (1 - cos(R |xi|)) / |xi|^2`,
/// continued by `2 pi R^2` at the origin.
#[derive(Clone, Debug)]
pub struct HartreeKernel {
    radius: f64,
    multiplier: Multiplier,
}

impl HartreeKernel {
    pub fn new(grid: &GridSpec, radius: Option<f64>) -> Result<Self> {
        if grid.dim() != 3 {
            return Err(Error::Inadmissible(format!(
                "Hartree kernel requires d = 3, got d = {}",
                grid.dim()
            )));
        }
        let radius = radius.unwrap_or(grid.length() / 2.0);
        if !(radius > 0.0) {
            return Err(Error::Inadmissible(format!("truncation radius {radius} must be positive")));
        }
        let multiplier = Multiplier::from_radial(*grid, |s| kernel_value(radius, s.sqrt()))?;
        Ok(Self { radius, multiplier })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    /// `K * rho` for a physical density; the result is physical.
    pub fn convolve(&self, rho: &Field) -> Result<Field> {
        Ok(self.multiplier.apply(&rho.to_fourier())?.into_physical())
    }
}

fn kernel_value(radius: f64, k: f64) -> f64 {
    let x = radius * k;
    if x < 1e-4 {
        // 1 - cos x = x^2/2 - x^4/24 + ...
        2.0 * PI * radius * radius * (1.0 - x * x / 12.0)
    } else {
        // 1 - cos x = 2 sin^2(x/2) keeps precision at small x.
        let h = (0.5 * x).sin();
        8.0 * PI * h * h / (k * k)
    }
}

/// A nonlinearity bound to a grid, with its kernel precomputed.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    grid: GridSpec,
    kernel: Option<HartreeKernel>,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, grid: &GridSpec) -> Result<Self> {
        Self::with_radius(kind, grid, None)
    }

    pub fn with_radius(kind: NonlinearityKind, grid: &GridSpec, radius: Option<f64>) -> Result<Self> {
        kind.check_admissible(grid.dim())?;
        let kernel = match kind {
            NonlinearityKind::Hartree3d => Some(HartreeKernel::new(grid, radius)?),
            NonlinearityKind::PowerNls { .. } => None,
        };
        Ok(Self {
            kind,
            grid: *grid,
            kernel,
        })
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.kind.order()
    }

    pub fn kernel(&self) -> Option<&HartreeKernel> {
        self.kernel.as_ref()
    }

    fn check(&self, u: &Field) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `N(u)` and `N'(u)` together; `N'(u)` is returned in physical space.
    pub fn energy_and_derivative(&self, u: &Field) -> Result<(f64, Field)> {
        self.check(u)?;
        let phys = u.to_physical();
        let w = self.grid.cell_volume();
        match self.kind {
            NonlinearityKind::PowerNls { k } => {
                let mut energy = 0.0;
                let values = phys
                    .values()
                    .iter()
                    .map(|v| {
                        let pk = v.norm_sqr().powi(k as i32);
                        energy += pk * v.norm_sqr();
                        v * pk
                    })
                    .collect();
                let energy = energy * w / (2 * k + 2) as f64;
                Ok((energy, Field::raw(self.grid, values, Space::Physical, phys.reality())))
            }
            NonlinearityKind::Hartree3d => {
                let rho = density(&phys);
                let pot = self.kernel_ref().convolve(&rho)?;
                let energy = 0.25
                    * w
                    * pot
                        .values()
                        .iter()
                        .zip(rho.values())
                        .map(|(a, b)| a.re * b.re)
                        .sum::<f64>();
                let nprime = pot.mul(&phys)?;
                Ok((energy, nprime.into_space(Space::Physical).retag(phys.reality())))
            }
        }
    }

    /// `N(u)`, nonnegative.
    pub fn potential_energy(&self, u: &Field) -> Result<f64> {
        Ok(self.energy_and_derivative(u)?.0)
    }

    /// `N'(u)` in physical space.
    pub fn nprime(&self, u: &Field) -> Result<Field> {
        Ok(self.energy_and_derivative(u)?.1)
    }

    /// `N+_u g`: `(2k+1) u^(2k) g` or `2 (K * (u g)) u + (K * u^2) g`.
    pub fn nplus(&self, u: &Field, g: &Field) -> Result<Field> {
        let (u, g) = self.linearization_inputs(u, g)?;
        match self.kind {
            NonlinearityKind::PowerNls { k } => {
                let c = (2 * k + 1) as f64;
                Ok(zip_map(&u, &g, |a, b| b * (c * a.re.powi(2 * k as i32))))
            }
            NonlinearityKind::Hartree3d => {
                let kernel = self.kernel_ref();
                let ug = u.mul(&g)?;
                let cross = kernel.convolve(&ug)?.mul(&u)?.scale(2.0);
                let direct = kernel.convolve(&density(&u))?.mul(&g)?;
                cross.add(&direct)
            }
        }
    }

    /// `N-_u g`: `u^(2k) g` or `(K * u^2) g`.
    pub fn nminus(&self, u: &Field, g: &Field) -> Result<Field> {
        let (u, g) = self.linearization_inputs(u, g)?;
        match self.kind {
            NonlinearityKind::PowerNls { k } => Ok(zip_map(&u, &g, |a, b| b * a.re.powi(2 * k as i32))),
            NonlinearityKind::Hartree3d => self.kernel_ref().convolve(&density(&u))?.mul(&g),
        }
    }

    /// Pointwise potential of `N-_u`, i.e. `u^(2k)` or `K * u^2`, physical.
    pub fn minus_potential(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        if !u.is_real() {
            return Err(Error::ComplexLinearizationPoint);
        }
        let u = u.to_physical();
        match self.kind {
            NonlinearityKind::PowerNls { k } => {
                Ok(u.map(Reality::Real, |a| Complex64::new(a.re.powi(2 * k as i32), 0.0)))
            }
            NonlinearityKind::Hartree3d => self.kernel_ref().convolve(&density(&u)),
        }
    }

    fn linearization_inputs(&self, u: &Field, g: &Field) -> Result<(Field, Field)> {
        self.check(u)?;
        self.check(g)?;
        if !u.is_real() {
            return Err(Error::ComplexLinearizationPoint);
        }
        Ok((u.to_physical(), g.to_physical()))
    }

    fn kernel_ref(&self) -> &HartreeKernel {
        self.kernel.as_ref().expect("Hartree nonlinearity carries a kernel")
    }

    /// `K * rho` for a real density; values below `-1e-12` times the peak
    /// are logged as suspicious but still convolved.
    pub fn hartree_potential(&self, rho: &Field) -> Result<Field> {
        self.check(rho)?;
        let kernel = self.kernel.as_ref().ok_or_else(|| {
            Error::Inadmissible("Hartree potential requires the Hartree nonlinearity".into())
        })?;
        let phys = rho.to_physical();
        let peak = phys.max_abs();
        let min = phys.values().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
        if min < -1e-12 * peak.max(1.0) {
            log::warn!("density has negative values down to {min:.3e}");
        }
        Ok(kernel.convolve(&phys)?.retag(Reality::Real))
    }

    /// Empirical multilinear ratio: `||(K * (f1 f2)) f3||_L2` or
    /// `||f1 ... f_(2k+1)||_L2`, over the product of the `H^1` norms.
    pub fn multilinear_ratio(&self, fields: &[Field]) -> Result<f64> {
        let arity = self.kind.arity();
        if fields.len() != arity {
            return Err(Error::WrongArity {
                expected: arity,
                found: fields.len(),
            });
        }
        for f in fields {
            self.check(f)?;
        }
        let phys: Vec<Field> = fields.iter().map(Field::to_physical).collect();
        let numerator = match self.kind {
            NonlinearityKind::PowerNls { .. } => {
                let mut prod = phys[0].clone();
                for f in &phys[1..] {
                    prod = prod.mul(f)?;
                }
                prod.l2_norm()
            }
            NonlinearityKind::Hartree3d => {
                let pair = phys[0].mul(&phys[1])?;
                self.kernel_ref().convolve(&pair)?.mul(&phys[2])?.l2_norm()
            }
        };
        let denominator: f64 = fields.iter().map(|f| sobolev_norm(f, 1.0)).product();
        Ok(numerator / denominator)
    }
}

/// `|u|^2` as a real physical field.
fn density(u: &Field) -> Field {
    u.to_physical()
        .map(Reality::Real, |v| Complex64::new(v.norm_sqr(), 0.0))
}

fn zip_map(a: &Field, b: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| f(*x, *y))
        .collect();
    Field::from_values(*a.grid(), values, Space::Physical, b.reality())
        .expect("same grid, physical, reality inherited")
}

/// `N(u)` with the default kernel radius.
pub fn potential_energy(u: &Field, kind: NonlinearityKind) -> Result<f64> {
    Nonlinearity::new(kind, u.grid())?.potential_energy(u)
}

/// `N'(u)` with the default kernel radius.
pub fn nprime(u: &Field, kind: NonlinearityKind) -> Result<Field> {
    Nonlinearity::new(kind, u.grid())?.nprime(u)
}

pub fn nplus(u: &Field, g: &Field, kind: NonlinearityKind) -> Result<Field> {
    Nonlinearity::new(kind, u.grid())?.nplus(u, g)
}

pub fn nminus(u: &Field, g: &Field, kind: NonlinearityKind) -> Result<Field> {
    Nonlinearity::new(kind, u.grid())?.nminus(u, g)
}

/// `K * rho` on a three-dimensional grid with `R = L/2`.
pub fn hartree_potential(rho: &Field) -> Result<Field> {
    Nonlinearity::new(NonlinearityKind::Hartree3d, rho.grid())?.hartree_potential(rho)
}

pub fn multilinear_ratio(fields: &[Field], kind: NonlinearityKind) -> Result<f64> {
    let first = fields.first().ok_or(Error::WrongArity {
        expected: kind.arity(),
        found: 0,
    })?;
    Nonlinearity::new(kind, first.grid())?.multilinear_ratio(fields)
}
