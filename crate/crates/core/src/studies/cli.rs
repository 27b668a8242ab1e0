use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{Overrides, StudyConfig, StudyKind};
use super::output::{format_f64, CsvTable, RunWriter};
use super::{run_c_sweep, run_contraction, run_eps_sweep, run_groundstate, run_spectrum, run_verify};
use crate::error::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "higher-ground", version, about = "Ground states of higher-order dispersive equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Variational ground state of the configured problem.
    Groundstate(Common),
    /// Fixed-point solution around the second-order ground state.
    Contraction(Common),
    /// Linearized spectra at the ground state.
    Spectrum(Common),
    /// Sweep of the higher-order coefficient `eps`.
    SweepEps(Common),
    /// Sweep of the speed of light in the relativistic truncations.
    SweepC(Common),
    /// Symbol bounds, ellipticity and multilinear estimates.
    Verify(Common),
    /// Print the default configuration as TOML.
    Defaults,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; unspecified keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Box side length.
    #[arg(long = "box")]
    length: Option<f64>,
    /// Higher-order coefficient(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Speed(s) of light, comma separated.
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    /// Truncation order(s), comma separated.
    #[arg(long = "J", value_delimiter = ',')]
    orders: Vec<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 on solver failure, 2 on configuration errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (kind, common) = match cli.command {
        Command::Defaults => {
            print!("{}", StudyConfig::default().to_toml());
            return 0;
        }
        Command::Groundstate(c) => (StudyKind::Groundstate, c),
        Command::Contraction(c) => (StudyKind::Contraction, c),
        Command::Spectrum(c) => (StudyKind::Spectrum, c),
        Command::SweepEps(c) => (StudyKind::EpsSweep, c),
        Command::SweepC(c) => (StudyKind::CSweep, c),
        Command::Verify(c) => (StudyKind::Verify, c),
    };
    match execute(kind, common) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn load(kind: StudyKind, common: Common) -> Result<StudyConfig> {
    let mut cfg = match &common.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::default(),
    };
    cfg.study = kind;
    Overrides {
        n: common.n,
        length: common.length,
        eps: common.eps,
        c: common.c,
        orders: common.orders,
        out: common.out,
        seed: common.seed,
        tol: common.tol,
    }
    .apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

/// `Ok(false)` when the run finished but its solver did not converge.
fn execute(kind: StudyKind, common: Common) -> Result<bool> {
    let cfg = load(kind, common)?;
    let workers = cfg.resolved_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| dispatch(&cfg))
}

fn dispatch(cfg: &StudyConfig) -> Result<bool> {
    let mut out = RunWriter::new(&cfg.output)?;
    let ok = match cfg.study {
        StudyKind::Groundstate => {
            let r = run_groundstate(cfg)?;
            let mut log = CsvTable::new(&["iter", "action", "residual", "step"]);
            for rec in &r.log {
                log.push(vec![
                    rec.iter.to_string(),
                    format_f64(rec.action),
                    format_f64(rec.residual),
                    format_f64(rec.step),
                ]);
            }
            out.json("groundstate.json", &r)?;
            out.csv("groundstate_log.csv", &log)?;
            out.field("groundstate.bin", &r.q)?;
            out.residual("pde_residual", r.pde_residual);
            out.residual("nehari_residual", r.nehari_residual);
            out.residual("action_spread", r.action_spread);
            println!(
                "action {:.12e}  pde residual {:.3e}  nehari residual {:.3e}  iterations {}",
                r.action, r.pde_residual, r.nehari_residual, r.iterations
            );
            true
        }
        StudyKind::Contraction => {
            let r = run_contraction(cfg)?;
            let mut log = CsvTable::new(&["iter", "residual", "contraction_factor", "update", "inner_iterations"]);
            for rec in &r.log {
                log.push(vec![
                    rec.iter.to_string(),
                    format_f64(rec.residual),
                    rec.factor.map(format_f64).unwrap_or_default(),
                    format_f64(rec.update),
                    rec.inner_iterations.to_string(),
                ]);
            }
            out.json("contraction.json", &r)?;
            out.csv("contraction_log.csv", &log)?;
            out.field("contraction.bin", &r.u)?;
            out.residual("pde_residual", r.pde_residual);
            out.residual("reference_pde_residual", r.reference_pde_residual);
            println!(
                "iterations {}  max factor {}  pde residual {:.3e}  converged {}",
                r.iterations,
                r.max_factor.map(format_f64).unwrap_or_else(|| "-".into()),
                r.pde_residual,
                r.converged
            );
            r.converged
        }
        StudyKind::Spectrum => {
            let r = run_spectrum(cfg)?;
            let mut table = CsvTable::new(&["sign", "index", "eigenvalue", "residual"]);
            for rep in [&r.plus, &r.minus] {
                for (i, (l, res)) in rep.eigenvalues.iter().zip(&rep.eigen_residuals).enumerate() {
                    table.push(vec![rep.sign.to_string(), i.to_string(), format_f64(*l), format_f64(*res)]);
                }
            }
            out.json("spectrum.json", &r)?;
            out.csv("spectrum.csv", &table)?;
            out.field("groundstate.bin", &r.ground_state.q)?;
            out.residual("pde_residual", r.ground_state.pde_residual);
            for row in &r.kernel.rows {
                let key = match row.axis {
                    Some(a) => format!("kernel_{}_{a}", row.sign),
                    None => format!("kernel_{}", row.sign),
                };
                out.residual(&key, row.residual);
            }
            println!(
                "beta+ {:.6e}  beta- {:.6e}  negative eigenvalues {}",
                r.plus.beta, r.minus.beta, r.plus.negative_count
            );
            r.plus.converged && r.minus.converged
        }
        StudyKind::EpsSweep => {
            let r = run_eps_sweep(cfg)?;
            out.json("sweep_eps.json", &r)?;
            out.csv("sweep_eps.csv", &r.table())?;
            out.residual("q0_pde_residual", r.q0_pde_residual);
            for p in &r.points {
                println!("eps {:<8} {}  q_dist_q0 {:.3e}", p.eps, p.status, p.q_dist_q0);
            }
            if let Some(fit) = &r.distance_fit {
                println!("distance slope {:.4}", fit.slope);
            }
            true
        }
        StudyKind::CSweep => {
            let r = run_c_sweep(cfg)?;
            out.json("sweep_c.json", &r)?;
            out.csv("sweep_c.csv", &r.table())?;
            for f in &r.fits {
                match &f.fit {
                    Some(fit) => println!("J={} slope {:.4}", f.order, fit.slope),
                    None => println!("J={} slope unavailable", f.order),
                }
            }
            true
        }
        StudyKind::Verify => {
            let r = run_verify(cfg)?;
            out.json("verify.json", &r)?;
            for line in r.summary_lines() {
                println!("{line}");
            }
            true
        }
    };
    out.finish(cfg.study.name(), cfg)?;
    Ok(ok)
}
