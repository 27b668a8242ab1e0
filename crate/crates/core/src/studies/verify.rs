use rayon::prelude::*;
use serde::Serialize;

use super::config::{GridConfig, StudyConfig};
use crate::error::Result;
use crate::nonlinearity::{Nonlinearity, NonlinearityKind};
use crate::spectral::{random_smooth_field, GridSpec};
use crate::symbols::{
    ellipticity_gamma, taylor_remainder_ratio, verify_positivity_lemma, DispersionSymbol, EllipticityReport,
    PositivityReport, TaylorReport,
};

#[derive(Clone, Debug, Serialize)]
pub struct TaylorRow {
    pub order: usize,
    pub reports: Vec<TaylorReport>,
    /// `(max - min) / max` of the supremum ratios across `c`.
    pub variation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityRow {
    pub symbol: DispersionSymbol,
    pub report: EllipticityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultilinearRow {
    pub form: NonlinearityKind,
    pub n: usize,
    pub max_ratio: f64,
    pub refined_n: usize,
    pub refined_max_ratio: f64,
    /// `|refined - coarse| / coarse`.
    pub change: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub positivity: Vec<PositivityReport>,
    pub taylor: Vec<TaylorRow>,
    pub ellipticity: Vec<EllipticityRow>,
    pub multilinear: Vec<MultilinearRow>,
}

impl VerifyReport {
    /// One line per check, `PASS` or `FAIL` first.
    pub fn summary_lines(&self) -> Vec<String> {
        let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out = Vec::new();
        for p in &self.positivity {
            out.push(format!(
                "{} positivity J={} m={} c={}: min_ratio={:.12} at |xi|={:.4}",
                tag(p.pass),
                p.order,
                p.mass,
                p.c,
                p.min_ratio,
                p.argmin_abs_xi
            ));
        }
        for t in &self.taylor {
            let sups: Vec<String> = t.reports.iter().map(|r| format!("{:.6e}", r.sup_ratio)).collect();
            out.push(format!(
                "{} taylor J={}: sup_ratio=[{}] variation={:.4}",
                tag(t.pass),
                t.order,
                sups.join(", "),
                t.variation
            ));
        }
        for e in &self.ellipticity {
            out.push(format!(
                "{} ellipticity {:?}: gamma={:.6e} at xi={:?}",
                tag(e.report.pass),
                e.symbol,
                e.report.gamma,
                e.report.argmin
            ));
        }
        for m in &self.multilinear {
            out.push(format!(
                "{} multilinear {:?}: max_ratio n={} {:.6e}, n={} {:.6e}, change={:.4}",
                tag(m.pass),
                m.form,
                m.n,
                m.max_ratio,
                m.refined_n,
                m.refined_max_ratio,
                m.change
            ));
        }
        out
    }
}

/// A line whose lattice reaches `|xi| = xi_max` in `samples` radial steps.
fn positivity_grid(xi_max: f64, samples: usize) -> Result<GridSpec> {
    GridSpec::new(1, 2 * samples, 2.0 * std::f64::consts::PI * samples as f64 / xi_max)
}

pub fn run_verify(cfg: &StudyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let v = &cfg.verify;
    let pgrid = positivity_grid(v.xi_max, v.samples)?;
    let positivity = v
        .positivity
        .iter()
        .map(|&(k, m, c)| verify_positivity_lemma(m, c, k, &pgrid))
        .collect::<Result<Vec<_>>>()?;

    let taylor = v
        .taylor_orders
        .iter()
        .map(|&order| {
            let reports = v
                .taylor_c
                .iter()
                .map(|&c| taylor_remainder_ratio(v.taylor_mass, c, order, v.taylor_s_max, v.taylor_samples))
                .collect::<Result<Vec<_>>>()?;
            let hi = reports.iter().map(|r| r.sup_ratio).fold(f64::NEG_INFINITY, f64::max);
            let lo = reports.iter().map(|r| r.sup_ratio).fold(f64::INFINITY, f64::min);
            let variation = (hi - lo) / hi;
            let finite = reports.iter().all(|r| r.sup_ratio.is_finite() && r.sup_ratio > 0.0);
            Ok(TaylorRow {
                order,
                reports,
                variation,
                pass: finite && variation < 0.2,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let egrid = v.ellipticity_grid.spec()?;
    let ellipticity = v
        .symbols
        .iter()
        .map(|s| {
            Ok(EllipticityRow {
                symbol: s.clone(),
                report: ellipticity_gamma(s, &egrid)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let multilinear = vec![
        multilinear_row(NonlinearityKind::PowerNls { k: 1 }, v.cubic_grid, v.cubic_decay, v.multilinear_samples, cfg.seed)?,
        multilinear_row(NonlinearityKind::Hartree3d, v.hartree_grid, v.hartree_decay, v.multilinear_samples, cfg.seed)?,
    ];
    Ok(VerifyReport {
        positivity,
        taylor,
        ellipticity,
        multilinear,
    })
}

/// Largest empirical multilinear ratio over seeded random fields. The fields
/// share their coefficients on common modes across grids of one box.
pub fn multilinear_max(kind: NonlinearityKind, grid: GridSpec, decay: f64, samples: usize, seed: u64) -> Result<f64> {
    let nl = Nonlinearity::new(kind, &grid)?;
    let arity = kind.arity() as u64;
    let ratios = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let fields: Vec<_> = (0..arity)
                .map(|j| random_smooth_field(grid, seed.wrapping_add(i * arity + j), decay))
                .collect();
            nl.multilinear_ratio(&fields)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

fn multilinear_row(kind: NonlinearityKind, grid: GridConfig, decay: f64, samples: usize, seed: u64) -> Result<MultilinearRow> {
    let coarse = grid.spec()?;
    let fine = coarse.refined();
    let max_ratio = multilinear_max(kind, coarse, decay, samples, seed)?;
    let refined_max_ratio = multilinear_max(kind, fine, decay, samples, seed)?;
    let change = (refined_max_ratio - max_ratio).abs() / max_ratio;
    Ok(MultilinearRow {
        form: kind,
        n: coarse.n(),
        max_ratio,
        refined_n: fine.n(),
        refined_max_ratio,
        change,
        pass: change < 0.1,
    })
}
