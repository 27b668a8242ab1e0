use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contraction::ContractionConfig;
use crate::error::{Error, Result};
use crate::groundstate::MinimizeConfig;
use crate::linearization::SpectrumConfig;
use crate::nonlinearity::NonlinearityKind;
use crate::spectral::GridSpec;
use crate::symbols::DispersionSymbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Groundstate,
    Contraction,
    Spectrum,
    EpsSweep,
    CSweep,
    Verify,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Groundstate => "groundstate",
            Self::Contraction => "contraction",
            Self::Spectrum => "spectrum",
            Self::EpsSweep => "sweep-eps",
            Self::CSweep => "sweep-c",
            Self::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.n, self.length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsSweepConfig {
    /// Values of `eps` substituted into the configured symbol, in sweep order.
    pub values: Vec<f64>,
    /// Measure `beta(eps)` at every point.
    pub spectrum: bool,
}

impl Default for EpsSweepConfig {
    fn default() -> Self {
        Self {
            values: vec![0.1, 0.05, 0.02, 0.01],
            spectrum: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CSweepConfig {
    pub mass: f64,
    pub values: Vec<f64>,
    /// Odd truncation orders `J`.
    pub orders: Vec<usize>,
    /// Repeat the largest `c` on the doubled grid.
    pub refine: bool,
}

impl Default for CSweepConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            values: vec![2.0, 4.0, 8.0, 16.0],
            orders: vec![1, 3],
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// `(k, m, c)` triples for the lower bound of odd truncations `J = 2k - 1`.
    pub positivity: Vec<(usize, f64, f64)>,
    /// The positivity scan covers `|xi| <= xi_max` with `samples` radial steps.
    pub xi_max: f64,
    pub samples: usize,
    pub taylor_mass: f64,
    pub taylor_c: Vec<f64>,
    pub taylor_orders: Vec<usize>,
    pub taylor_s_max: f64,
    pub taylor_samples: usize,
    /// Symbols checked for ellipticity on `ellipticity_grid`.
    pub symbols: Vec<DispersionSymbol>,
    pub ellipticity_grid: GridConfig,
    /// Random field triples per multilinear form.
    pub multilinear_samples: usize,
    pub cubic_grid: GridConfig,
    pub cubic_decay: f64,
    pub hartree_grid: GridConfig,
    pub hartree_decay: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let mut positivity = Vec::new();
        for k in 1..=4 {
            for (m, c) in [(1.0, 1.0), (1.0, 4.0), (2.0, 8.0)] {
                positivity.push((k, m, c));
            }
        }
        Self {
            positivity,
            xi_max: 64.0,
            samples: 512,
            taylor_mass: 1.0,
            taylor_c: vec![4.0, 8.0, 16.0],
            taylor_orders: vec![1, 2, 3],
            taylor_s_max: 1.0,
            taylor_samples: 200,
            symbols: vec![
                DispersionSymbol::Laplacian,
                DispersionSymbol::biharmonic(0.1),
                DispersionSymbol::RelativisticTruncation {
                    mass: 1.0,
                    c: 4.0,
                    order: 3,
                },
                DispersionSymbol::PseudoRelativistic { mass: 1.0, c: 4.0 },
                DispersionSymbol::HigherOrderRadial {
                    eps: 1.0,
                    coefficients: vec![-0.1],
                },
            ],
            ellipticity_grid: GridConfig {
                dim: 1,
                n: 256,
                length: 40.0,
            },
            multilinear_samples: 100,
            cubic_grid: GridConfig {
                dim: 1,
                n: 256,
                length: 40.0,
            },
            cubic_decay: 3.0,
            hartree_grid: GridConfig {
                dim: 3,
                n: 16,
                length: 16.0,
            },
            hartree_decay: 4.0,
        }
    }
}

/// Everything a run needs; serialized in full into every manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub seed: u64,
    /// Worker threads; `HIGHER_GROUND_WORKERS` takes precedence.
    pub workers: Option<usize>,
    pub output: PathBuf,
    /// Truncation radius of the Coulomb kernel; half the box when absent.
    pub kernel_radius: Option<f64>,
    pub grid: GridConfig,
    pub symbol: DispersionSymbol,
    pub nonlinearity: NonlinearityKind,
    pub minimize: MinimizeConfig,
    pub contraction: ContractionConfig,
    pub spectrum: SpectrumConfig,
    pub eps_sweep: EpsSweepConfig,
    pub c_sweep: CSweepConfig,
    pub verify: VerifyConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            study: StudyKind::Groundstate,
            seed: 0,
            workers: None,
            output: PathBuf::from("runs"),
            kernel_radius: None,
            grid: GridConfig {
                dim: 1,
                n: 512,
                length: 40.0,
            },
            symbol: DispersionSymbol::Laplacian,
            nonlinearity: NonlinearityKind::PowerNls { k: 1 },
            minimize: MinimizeConfig::default(),
            contraction: ContractionConfig::default(),
            spectrum: SpectrumConfig::default(),
            eps_sweep: EpsSweepConfig::default(),
            c_sweep: CSweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

fn strictly_monotone(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} contains a non-finite value")));
    }
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(Error::Config(format!("{name} must be strictly monotone")));
    }
    Ok(())
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is representable as TOML")
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.grid.spec()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        self.nonlinearity.check_admissible(grid.dim())?;
        self.symbol.validate()?;
        self.minimize.validate()?;
        self.contraction.validate()?;
        if self.spectrum.n_eigs < grid.dim() + 2 {
            return Err(Error::Config(format!(
                "spectrum.n_eigs = {} must be at least d + 2 = {}",
                self.spectrum.n_eigs,
                grid.dim() + 2
            )));
        }
        if !(self.spectrum.tol > 0.0) || self.spectrum.max_iter == 0 {
            return Err(Error::Config("spectrum tolerances must be positive".into()));
        }
        if let Some(r) = self.kernel_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("kernel_radius = {r} must be positive")));
            }
            if self.nonlinearity != NonlinearityKind::Hartree3d {
                return Err(Error::Config("kernel_radius applies to the Hartree nonlinearity only".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        match self.study {
            StudyKind::EpsSweep => {
                strictly_monotone("eps_sweep.values", &self.eps_sweep.values)?;
                if self.eps_sweep.values.iter().any(|e| *e < 0.0) {
                    return Err(Error::Config("eps_sweep.values must be nonnegative".into()));
                }
                self.symbol_at_eps(self.eps_sweep.values[0])?;
            }
            StudyKind::CSweep => {
                let c = &self.c_sweep;
                strictly_monotone("c_sweep.values", &c.values)?;
                if c.values.iter().any(|v| *v <= 0.0) || !(c.mass > 0.0) {
                    return Err(Error::Config("c_sweep mass and values must be positive".into()));
                }
                let orders: Vec<f64> = c.orders.iter().map(|&j| j as f64).collect();
                strictly_monotone("c_sweep.orders", &orders)?;
                if let Some(j) = c.orders.iter().find(|j| **j % 2 == 0) {
                    return Err(Error::Config(format!("c_sweep.orders contains the even order {j}")));
                }
                for &order in &c.orders {
                    crate::symbols::relativistic_coefficients(order)?;
                }
            }
            StudyKind::Verify => self.validate_verify()?,
            _ => {}
        }
        Ok(())
    }

    fn validate_verify(&self) -> Result<()> {
        let v = &self.verify;
        if v.positivity.iter().any(|&(k, m, c)| k == 0 || !(m > 0.0) || !(c > 0.0)) {
            return Err(Error::Config("verify.positivity needs k >= 1 and positive m, c".into()));
        }
        if !(v.xi_max > 0.0) || !v.samples.is_power_of_two() || v.samples < 4 {
            return Err(Error::Config("verify.xi_max must be positive and verify.samples a power of two".into()));
        }
        strictly_monotone("verify.taylor_c", &v.taylor_c)?;
        let orders: Vec<f64> = v.taylor_orders.iter().map(|&j| j as f64).collect();
        strictly_monotone("verify.taylor_orders", &orders)?;
        if !(v.taylor_s_max > 0.0) || v.taylor_samples == 0 || !(v.taylor_mass > 0.0) {
            return Err(Error::Config("verify Taylor parameters must be positive".into()));
        }
        for s in &v.symbols {
            s.validate()?;
        }
        v.ellipticity_grid.spec()?;
        v.cubic_grid.spec()?;
        let h = v.hartree_grid.spec()?;
        NonlinearityKind::Hartree3d.check_admissible(h.dim())?;
        if v.multilinear_samples == 0 {
            return Err(Error::Config("verify.multilinear_samples must be positive".into()));
        }
        Ok(())
    }

    /// The configured symbol with its `eps` replaced; the Laplacian extends to
    /// the biharmonic family.
    pub fn symbol_at_eps(&self, eps: f64) -> Result<DispersionSymbol> {
        match &self.symbol {
            DispersionSymbol::Laplacian => Ok(DispersionSymbol::biharmonic(eps)),
            DispersionSymbol::HigherOrderRadial { coefficients, .. } => Ok(DispersionSymbol::HigherOrderRadial {
                eps,
                coefficients: coefficients.clone(),
            }),
            DispersionSymbol::HigherOrderAniso { terms, .. } => Ok(DispersionSymbol::HigherOrderAniso {
                eps,
                terms: terms.clone(),
            }),
            other => Err(Error::Config(format!(
                "an eps value needs a higher-order symbol, the configured symbol is {other:?}"
            ))),
        }
    }

    /// Worker count: `HIGHER_GROUND_WORKERS`, then the config, then one per core.
    pub fn resolved_workers(&self) -> Result<usize> {
        match std::env::var("HIGHER_GROUND_WORKERS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Config(format!("HIGHER_GROUND_WORKERS = {v:?} is not a positive integer"))),
            },
            Err(_) => Ok(self
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))),
        }
    }
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub length: Option<f64>,
    pub eps: Vec<f64>,
    pub c: Vec<f64>,
    pub orders: Vec<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut StudyConfig) -> Result<()> {
        if let Some(n) = self.n {
            cfg.grid.n = n;
        }
        if let Some(l) = self.length {
            cfg.grid.length = l;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.minimize.seed = seed;
            cfg.spectrum.seed = seed;
        }
        if let Some(tol) = self.tol {
            cfg.minimize.tol = tol;
            cfg.contraction.tol = tol;
        }
        let single = |name: &str, len: usize| {
            if len > 1 {
                Err(Error::Config(format!("--{name} takes a single value for this command")))
            } else {
                Ok(())
            }
        };
        match cfg.study {
            StudyKind::EpsSweep => {
                if !self.eps.is_empty() {
                    cfg.eps_sweep.values = self.eps.clone();
                }
            }
            StudyKind::CSweep => {
                if !self.c.is_empty() {
                    cfg.c_sweep.values = self.c.clone();
                }
                if !self.orders.is_empty() {
                    cfg.c_sweep.orders = self.orders.clone();
                }
            }
            StudyKind::Verify => {
                if !self.c.is_empty() {
                    cfg.verify.taylor_c = self.c.clone();
                }
                if !self.orders.is_empty() {
                    cfg.verify.taylor_orders = self.orders.clone();
                }
            }
            _ => {
                single("eps", self.eps.len())?;
                single("c", self.c.len())?;
                single("J", self.orders.len())?;
                if let Some(&eps) = self.eps.first() {
                    cfg.symbol = cfg.symbol_at_eps(eps)?;
                }
                if !self.c.is_empty() || !self.orders.is_empty() {
                    cfg.symbol = match &cfg.symbol {
                        DispersionSymbol::RelativisticTruncation { mass, c, order } => {
                            DispersionSymbol::RelativisticTruncation {
                                mass: *mass,
                                c: self.c.first().copied().unwrap_or(*c),
                                order: self.orders.first().copied().unwrap_or(*order),
                            }
                        }
                        DispersionSymbol::PseudoRelativistic { mass, c } if self.orders.is_empty() => {
                            DispersionSymbol::PseudoRelativistic {
                                mass: *mass,
                                c: self.c.first().copied().unwrap_or(*c),
                            }
                        }
                        other => {
                            return Err(Error::Config(format!(
                                "--c/--J need a relativistic symbol, the configured symbol is {other:?}"
                            )))
                        }
                    };
                }
            }
        }
        Ok(())
    }
}
