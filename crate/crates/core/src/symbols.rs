//! Dispersion symbols `p(xi)` and their lattice certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, Multiplier};

/// Largest supported relativistic truncation order.
pub const MAX_RELATIVISTIC_ORDER: usize = 20;

/// One anisotropic term `coefficient * eps^(|alpha| - 2) * xi^alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisoTerm {
    pub alpha: Vec<u32>,
    pub coefficient: f64,
}

impl AnisoTerm {
    pub fn order(&self) -> u32 {
        self.alpha.iter().sum()
    }
}

/// A real, even Fourier symbol with `p(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DispersionSymbol {
    /// `|xi|^2`.
    Laplacian,
    /// `|xi|^2 + sum_j a_j eps^(2j-2) |xi|^(2j)`, with `coefficients[0]`
    /// multiplying `|xi|^4`.
    HigherOrderRadial { eps: f64, coefficients: Vec<f64> },
    /// `|xi|^2 + sum_alpha c_alpha eps^(|alpha|-2) xi^alpha` over multi-indices
    /// with even components.
    HigherOrderAniso { eps: f64, terms: Vec<AnisoTerm> },
    /// `sum_{j<=order} (-1)^(j-1) alpha_j |xi|^(2j) / (m^(2j-1) c^(2j-2))`.
    RelativisticTruncation { mass: f64, c: f64, order: usize },
    /// `sqrt(c^2 |xi|^2 + m^2 c^4) - m c^2`.
    PseudoRelativistic { mass: f64, c: f64 },
}

impl DispersionSymbol {
    /// The model `|xi|^2 + eps^2 |xi|^4`.
    pub fn biharmonic(eps: f64) -> Self {
        Self::HigherOrderRadial {
            eps,
            coefficients: vec![1.0],
        }
    }

    /// Checks parameter ranges and the even-order restriction.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSymbol(format!("{name} = {v} must be positive")))
            }
        };
        let eps_ok = |eps: f64| {
            if eps >= 0.0 && eps.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSymbol(format!("eps = {eps} must be >= 0")))
            }
        };
        match self {
            Self::Laplacian => Ok(()),
            Self::HigherOrderRadial { eps, coefficients } => {
                eps_ok(*eps)?;
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidSymbol("non-finite coefficient".into()));
                }
                Ok(())
            }
            Self::HigherOrderAniso { eps, terms } => {
                eps_ok(*eps)?;
                for t in terms {
                    if t.alpha.iter().any(|a| a % 2 == 1) {
                        return Err(Error::InvalidSymbol(format!(
                            "multi-index {:?} has an odd component; only even symbols are supported",
                            t.alpha
                        )));
                    }
                    if t.order() < 4 {
                        return Err(Error::InvalidSymbol(format!(
                            "multi-index {:?} has order below 4",
                            t.alpha
                        )));
                    }
                    if !t.coefficient.is_finite() {
                        return Err(Error::InvalidSymbol("non-finite coefficient".into()));
                    }
                }
                Ok(())
            }
            Self::RelativisticTruncation { mass, c, order } => {
                positive("mass", *mass)?;
                positive("c", *c)?;
                relativistic_coefficients(*order).map(|_| ())
            }
            Self::PseudoRelativistic { mass, c } => {
                positive("mass", *mass)?;
                positive("c", *c)
            }
        }
    }

    /// `true` when the symbol depends on `|xi|` only.
    pub fn is_radial(&self) -> bool {
        !matches!(self, Self::HigherOrderAniso { terms, .. } if !terms.is_empty())
    }

    /// Value at the wavevector `xi`.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        let s: f64 = xi.iter().map(|k| k * k).sum();
        match self {
            Self::HigherOrderAniso { eps, terms } => {
                s + terms
                    .iter()
                    .map(|t| {
                        let mono: f64 = t
                            .alpha
                            .iter()
                            .zip(xi)
                            .map(|(&a, k)| k.powi(a as i32))
                            .product();
                        t.coefficient * eps.powi(t.order() as i32 - 2) * mono
                    })
                    .sum::<f64>()
            }
            _ => self.eval_radial(s),
        }
    }

    /// Value as a function of `s = |xi|^2`; anisotropic symbols are evaluated
    /// along the first axis.
    pub fn eval_radial(&self, s: f64) -> f64 {
        match self {
            Self::Laplacian => s,
            Self::HigherOrderRadial { eps, coefficients } => {
                let e2 = eps * eps;
                let mut term = s;
                let mut acc = s;
                for a in coefficients {
                    term *= e2 * s;
                    acc += a * term;
                }
                acc
            }
            Self::HigherOrderAniso { .. } => self.eval(&[s.sqrt()]),
            Self::RelativisticTruncation { mass, c, order } => {
                let alphas = relativistic_coefficients(*order).expect("validated order");
                let x = s / (mass * mass * c * c);
                let mut pow = 1.0;
                let mut acc = 0.0;
                for (j, a) in alphas.iter().enumerate() {
                    pow *= x;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * a * pow;
                }
                mass * c * c * acc
            }
            Self::PseudoRelativistic { mass, c } => {
                // sqrt(c^2 s + m^2 c^4) - m c^2 without cancellation.
                let mc2 = mass * c * c;
                c * c * s / ((c * c * s + mc2 * mc2).sqrt() + mc2)
            }
        }
    }

    /// Tabulates the symbol on the lattice of `grid`.
    pub fn multiplier(&self, grid: &GridSpec) -> Result<Multiplier> {
        self.validate()?;
        if self.is_radial() {
            Multiplier::from_radial(*grid, |s| self.eval_radial(s))
        } else {
            Multiplier::from_fn(*grid, |xi| self.eval(xi))
        }
    }

    /// Sign of the highest-order radial coefficient, when that is meaningful.
    fn leading_sign_ok(&self) -> bool {
        match self {
            Self::HigherOrderRadial { eps, coefficients } => {
                if *eps == 0.0 {
                    return true;
                }
                coefficients
                    .iter()
                    .rev()
                    .find(|c| **c != 0.0)
                    .is_none_or(|c| *c > 0.0)
            }
            Self::HigherOrderAniso { eps, terms } => {
                if *eps == 0.0 || terms.is_empty() {
                    return true;
                }
                let top = terms.iter().map(AnisoTerm::order).max().unwrap_or(0);
                // Along every axis the top-order pure power must not be negative.
                let d = terms.iter().map(|t| t.alpha.len()).max().unwrap_or(0);
                (0..d).all(|axis| {
                    let pure: f64 = terms
                        .iter()
                        .filter(|t| t.order() == top && t.alpha.get(axis) == Some(&top))
                        .map(|t| t.coefficient)
                        .sum();
                    pure >= 0.0
                }) && terms
                    .iter()
                    .filter(|t| t.order() == top)
                    .map(|t| t.coefficient)
                    .sum::<f64>()
                    > 0.0
            }
            Self::RelativisticTruncation { order, .. } => order % 2 == 1,
            _ => true,
        }
    }
}

/// `alpha_j` for `j = 1..=order`, the Taylor coefficients of
/// `sqrt(1 + x) - 1 = sum (-1)^(j-1) alpha_j x^j`.
pub fn relativistic_coefficients(order: usize) -> Result<Vec<f64>> {
    if !(1..=MAX_RELATIVISTIC_ORDER).contains(&order) {
        return Err(Error::InvalidSymbol(format!(
            "relativistic order {order} not in 1..={MAX_RELATIVISTIC_ORDER}"
        )));
    }
    let mut out = Vec::with_capacity(order);
    let mut a = 0.5;
    for j in 1..=order {
        out.push(a);
        a *= (2 * j - 1) as f64 / (2 * j + 2) as f64;
    }
    Ok(out)
}

/// Value of `symbol` at `xi`.
pub fn eval_symbol(symbol: &DispersionSymbol, xi: &[f64]) -> f64 {
    symbol.eval(xi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// Lattice infimum of `(1 + p) / (1 + |xi|^2)`.
    pub gamma: f64,
    pub argmin: Vec<f64>,
    /// Sign check of the leading high-frequency coefficient.
    pub leading_term_ok: bool,
    pub pass: bool,
}

pub fn ellipticity_gamma(symbol: &DispersionSymbol, grid: &GridSpec) -> Result<EllipticityReport> {
    symbol.validate()?;
    let mut gamma = f64::INFINITY;
    let mut at = 0;
    for f in 0..grid.len() {
        let xi = grid.wavevector(f);
        let s: f64 = xi.iter().map(|k| k * k).sum();
        let r = (1.0 + symbol.eval(&xi)) / (1.0 + s);
        if r < gamma {
            gamma = r;
            at = f;
        }
    }
    let leading_term_ok = symbol.leading_sign_ok();
    Ok(EllipticityReport {
        gamma,
        argmin: grid.wavevector(at),
        leading_term_ok,
        pass: gamma > 0.0 && leading_term_ok,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PositivityReport {
    pub mass: f64,
    pub c: f64,
    pub order: usize,
    /// Minimum over nonzero lattice wavevectors of `p_J(xi) / (|xi|^2 / 2m)`.
    pub min_ratio: f64,
    pub argmin_abs_xi: f64,
    /// `min_ratio >= 1 - 1e-10`.
    pub pass: bool,
    /// `min_ratio >= 1/2`, enough for `1 + p_J >= min(1, 1/(4m)) (1 + |xi|^2)`.
    pub half_bound_pass: bool,
}

/// Scans the odd truncation `J = 2k - 1` against the bound `|xi|^2 / 2m`.
pub fn verify_positivity_lemma(mass: f64, c: f64, k: usize, grid: &GridSpec) -> Result<PositivityReport> {
    if k == 0 {
        return Err(Error::InvalidSymbol("k must be at least 1".into()));
    }
    verify_positivity_order(mass, c, 2 * k - 1, grid)
}

/// As [`verify_positivity_lemma`], addressed by the truncation order; even
/// orders are rejected.
pub fn verify_positivity_order(mass: f64, c: f64, order: usize, grid: &GridSpec) -> Result<PositivityReport> {
    if order.is_multiple_of(2) {
        return Err(Error::InvalidSymbol(format!(
            "truncation order {order} is even; the bound needs an odd order"
        )));
    }
    let symbol = DispersionSymbol::RelativisticTruncation { mass, c, order };
    symbol.validate()?;
    let mut seen = std::collections::BTreeSet::new();
    let mut min_ratio = f64::INFINITY;
    let mut argmin = 0.0;
    for f in 0..grid.len() {
        let s = grid.wavevector_sq(f);
        if s == 0.0 || !seen.insert(s.to_bits()) {
            continue;
        }
        let ratio = symbol.eval_radial(s) / (s / (2.0 * mass));
        if ratio < min_ratio {
            min_ratio = ratio;
            argmin = s.sqrt();
        }
    }
    Ok(PositivityReport {
        mass,
        c,
        order,
        min_ratio,
        argmin_abs_xi: argmin,
        pass: min_ratio >= 1.0 - 1e-10,
        half_bound_pass: min_ratio >= 0.5,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorReport {
    pub mass: f64,
    pub c: f64,
    pub order: usize,
    /// Supremum of `|P_c(s) - P_c^J(s)| / (s^(J+1) / c^(2J))` over the samples.
    pub sup_ratio: f64,
    pub argsup: f64,
}

/// Samples `s_i = s_max * i / samples`, `i = 1..=samples`.
pub fn taylor_remainder_ratio(
    mass: f64,
    c: f64,
    order: usize,
    s_max: f64,
    samples: usize,
) -> Result<TaylorReport> {
    let alphas = relativistic_coefficients(order)?;
    if !(s_max > 0.0) || samples == 0 {
        return Err(Error::InvalidSymbol("need s_max > 0 and samples > 0".into()));
    }
    let mut sup = 0.0;
    let mut argsup = 0.0;
    for i in 1..=samples {
        let s = s_max * i as f64 / samples as f64;
        let r = remainder_ratio(mass, c, order, s, &alphas);
        if r > sup {
            sup = r;
            argsup = s;
        }
    }
    Ok(TaylorReport {
        mass,
        c,
        order,
        sup_ratio: sup,
        argsup,
    })
}

fn remainder_ratio(mass: f64, c: f64, order: usize, s: f64, alphas: &[f64]) -> f64 {
    let x = s / (mass * mass * c * c);
    // With x = s / (m c)^2 the remainder is m c^2 times the series tail, and
    // the normalizer s^(J+1) / c^(2J) is m^(2J+2) c^2 x^(J+1).
    let tail = if x < 0.5 {
        series_tail(x, order)
    } else {
        let exact = x / ((1.0 + x).sqrt() + 1.0);
        let partial: f64 = alphas[..order]
            .iter()
            .enumerate()
            .map(|(j, &a)| if j % 2 == 0 { a } else { -a } * x.powi(j as i32 + 1))
            .sum();
        exact - partial
    };
    tail.abs() / (x.powi(order as i32 + 1) * mass.powi(2 * order as i32 + 1))
}

/// `sum_{j > order} (-1)^(j-1) alpha_j x^j / x^(order+1)` times `x^(order+1)`,
/// summed term by term until negligible.
fn series_tail(x: f64, order: usize) -> f64 {
    let mut a = 0.5;
    for j in 1..=order {
        a *= (2 * j - 1) as f64 / (2 * j + 2) as f64;
    }
    let mut j = order + 1;
    let mut pow = x.powi(j as i32);
    let mut acc = 0.0;
    loop {
        let term = if j % 2 == 1 { a * pow } else { -a * pow };
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() || j > order + 400 {
            return acc;
        }
        a *= (2 * j - 1) as f64 / (2 * j + 2) as f64;
        pow *= x;
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relativistic_coefficient_values() {
        assert_eq!(relativistic_coefficients(1).unwrap(), vec![0.5]);
        assert_eq!(relativistic_coefficients(2).unwrap(), vec![0.5, 0.125]);
        // Series of sqrt(1+x) - 1 from sympy: 1/2, 1/8, 1/16, 5/128, 7/256.
        let a = relativistic_coefficients(5).unwrap();
        assert_eq!(a, vec![0.5, 0.125, 0.0625, 5.0 / 128.0, 7.0 / 256.0]);
        assert!(relativistic_coefficients(0).is_err());
        assert!(relativistic_coefficients(21).is_err());
        let a = relativistic_coefficients(20).unwrap();
        assert!(a.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn point_values() {
        let pr = DispersionSymbol::PseudoRelativistic { mass: 1.0, c: 1.0 };
        assert_eq!(pr.eval(&[0.0]), 0.0);
        let t1 = DispersionSymbol::RelativisticTruncation {
            mass: 1.0,
            c: 1.0,
            order: 1,
        };
        assert!((t1.eval(&[2.0]) - 2.0).abs() < 1e-15);
        let bi = DispersionSymbol::biharmonic(0.1);
        assert!((bi.eval(&[1.0]) - 1.01).abs() < 1e-15);
        // sqrt(4 * 3 + 4^2) - 4 at m = 1, c = 2, |xi|^2 = 3.
        let pr = DispersionSymbol::PseudoRelativistic { mass: 1.0, c: 2.0 };
        assert!((pr.eval_radial(3.0) - (28f64.sqrt() - 4.0)).abs() < 1e-14);
    }

    #[test]
    fn odd_anisotropic_orders_are_rejected() {
        let bad = DispersionSymbol::HigherOrderAniso {
            eps: 0.1,
            terms: vec![AnisoTerm {
                alpha: vec![3, 1],
                coefficient: 1.0,
            }],
        };
        assert!(bad.validate().is_err());
        let good = DispersionSymbol::HigherOrderAniso {
            eps: 0.1,
            terms: vec![AnisoTerm {
                alpha: vec![2, 2],
                coefficient: 1.0,
            }],
        };
        assert!(good.validate().is_ok());
        // |xi|^2 + eps^2 xi_1^2 xi_2^2 at xi = (1, 2).
        assert!((good.eval(&[1.0, 2.0]) - (5.0 + 0.01 * 4.0)).abs() < 1e-14);
    }

    #[test]
    fn ellipticity_examples() {
        let g = GridSpec::new(1, 64, 10.0).unwrap();
        let lap = ellipticity_gamma(&DispersionSymbol::Laplacian, &g).unwrap();
        assert!((lap.gamma - 1.0).abs() < 1e-15 && lap.pass);
        let bi = ellipticity_gamma(&DispersionSymbol::biharmonic(0.1), &g).unwrap();
        assert!((bi.gamma - 1.0).abs() < 1e-15 && bi.pass);
        // k_max = 2 pi * 32 / 10 ~ 20.1, far beyond the sign change at |xi| ~ 3.2.
        let neg = DispersionSymbol::HigherOrderRadial {
            eps: 1.0,
            coefficients: vec![-0.1],
        };
        let r = ellipticity_gamma(&neg, &g).unwrap();
        assert!(!r.pass && r.gamma < 0.0);
        let at = r.argmin[0].abs();
        assert!((at - g.k_max()).abs() < 1e-12);
        // Direct scan oracle at the argmin.
        let s = at * at;
        assert!((r.gamma - (1.0 + s - 0.1 * s * s) / (1.0 + s)).abs() < 1e-12);
    }

    #[test]
    fn positivity_base_case() {
        let g = GridSpec::new(1, 256, 2.0 * std::f64::consts::PI * 8.0).unwrap();
        let r = verify_positivity_lemma(1.0, 1.0, 1, &g).unwrap();
        assert!((r.min_ratio - 1.0).abs() < 1e-15 && r.pass);
        assert!(verify_positivity_order(1.0, 1.0, 2, &g).is_err());
    }

    #[test]
    fn cubic_truncation_dips_below_one() {
        // 1 - x/4 + x^2/8 with x = |xi|^2 / (m c)^2 has minimum 7/8 at x = 1,
        // which |xi| = 1 samples exactly on this lattice.
        let g = GridSpec::new(1, 256, 2.0 * std::f64::consts::PI * 8.0).unwrap();
        let r = verify_positivity_lemma(1.0, 1.0, 2, &g).unwrap();
        assert!((r.min_ratio - 0.875).abs() < 1e-14);
        assert!(!r.pass && r.half_bound_pass);
    }

    #[test]
    fn taylor_ratio_limits() {
        let r = taylor_remainder_ratio(1.0, 1.0, 1, 1e-6, 10).unwrap();
        assert!((r.sup_ratio - 0.125).abs() < 1e-6);
        // mpmath, 50 digits: at m = 1, c = 1, s = 1 the J = 2 ratio is
        // |sqrt(2) - 1 - 1/2 + 1/8| = 0.0392135623730950...
        let r = taylor_remainder_ratio(1.0, 1.0, 2, 1.0, 1).unwrap();
        assert!((r.sup_ratio - 0.039_213_562_373_095_05).abs() < 1e-15);
        let r4 = taylor_remainder_ratio(1.0, 4.0, 2, 1.0, 1000).unwrap();
        let r8 = taylor_remainder_ratio(1.0, 8.0, 2, 1.0, 1000).unwrap();
        assert!((r4.sup_ratio / r8.sup_ratio - 1.0).abs() < 0.2);
    }

    proptest! {
        #[test]
        fn symbols_are_even_and_vanish_at_zero(
            k in proptest::collection::vec(-20.0f64..20.0, 3),
            eps in 0.0f64..0.5,
            c in 0.5f64..16.0,
            order in 1usize..8,
        ) {
            let symbols = [
                DispersionSymbol::Laplacian,
                DispersionSymbol::biharmonic(eps),
                DispersionSymbol::HigherOrderAniso {
                    eps,
                    terms: vec![AnisoTerm { alpha: vec![4, 0, 2], coefficient: 0.3 }],
                },
                DispersionSymbol::RelativisticTruncation { mass: 1.0, c, order },
                DispersionSymbol::PseudoRelativistic { mass: 1.0, c },
            ];
            let neg: Vec<f64> = k.iter().map(|v| -v).collect();
            for s in &symbols {
                prop_assert_eq!(s.eval(&[0.0, 0.0, 0.0]), 0.0);
                let (a, b) = (s.eval(&k), s.eval(&neg));
                prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
            }
        }

        #[test]
        fn truncations_approach_the_square_root_inside_the_radius(c in 1.0f64..10.0, m in 0.5f64..2.0) {
            // Monotone error decrease at |xi| = m c / 2.
            let s = (m * c / 2.0).powi(2);
            let exact = DispersionSymbol::PseudoRelativistic { mass: m, c }.eval_radial(s);
            let mut last = f64::INFINITY;
            for order in 1..=10 {
                let t = DispersionSymbol::RelativisticTruncation { mass: m, c, order }.eval_radial(s);
                let err = (t - exact).abs();
                prop_assert!(err < last);
                last = err;
            }
        }

        #[test]
        fn odd_truncations_are_uniformly_elliptic(m in 0.25f64..4.0, c in 0.5f64..8.0, k in 1usize..5) {
            let g = GridSpec::new(1, 512, 40.0).unwrap();
            let order = 2 * k - 1;
            let sym = DispersionSymbol::RelativisticTruncation { mass: m, c, order };
            let r = ellipticity_gamma(&sym, &g).unwrap();
            prop_assert!(r.gamma >= (1.0f64).min(1.0 / (4.0 * m)) - 1e-12);
        }
    }
}
