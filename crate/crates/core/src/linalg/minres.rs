use super::{axpy, dot, norm};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned residual norm relative to that of `b`.
    pub relative_residual: f64,
}

/// Preconditioned MINRES for a symmetric, possibly indefinite `op`.
///
/// `precond` must be symmetric positive definite. The iteration stops once
/// `||b - op x||_M / ||b||_M < tol`. Running out of iterations, a plateau of
/// the residual, or an indefinite preconditioner are reported as
/// [`Error::OutsideInvertibilityRegime`].
pub fn minres(
    op: impl Fn(&[f64]) -> Result<Vec<f64>>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<MinresOutcome> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(Error::OutsideInvertibilityRegime { residual: f64::NAN });
    }
    if beta1_sq == 0.0 {
        return Ok(MinresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let beta1 = beta1_sq.sqrt();
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut history = Vec::new();

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|t| s * t).collect();
        y = op(&v)?;
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(Error::OutsideInvertibilityRegime { residual: phibar / beta1 });
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, a), b)| (vi - oldeps * a - delta * b) / gamma)
            .collect();
        axpy(phi, &w, &mut x);

        let rel = phibar / beta1;
        if rel < tol {
            return Ok(MinresOutcome {
                x,
                iterations: itn,
                relative_residual: rel,
            });
        }
        // Lanczos breakdown: the Krylov space is invariant and `x` is final.
        if beta <= 10.0 * f64::EPSILON * beta1 {
            return Err(Error::OutsideInvertibilityRegime { residual: rel });
        }
        history.push(rel);
        const WINDOW: usize = 100;
        if history.len() > WINDOW && rel > 0.99 * history[history.len() - 1 - WINDOW] {
            log::debug!("MINRES plateau at {rel:.3e} after {itn} iterations");
            return Err(Error::OutsideInvertibilityRegime { residual: rel });
        }
        if !rel.is_finite() || !norm(&x).is_finite() {
            return Err(Error::OutsideInvertibilityRegime { residual: rel });
        }
    }
    Err(Error::OutsideInvertibilityRegime {
        residual: phibar / beta1,
    })
}
