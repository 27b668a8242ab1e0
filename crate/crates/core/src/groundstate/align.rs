use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{energy_norm, shift_and_phase, Field, Multiplier};

#[derive(Clone, Debug)]
pub struct AlignmentResult {
    /// Phase `theta` of `exp(i theta) u(. - a)`.
    pub theta: f64,
    /// Shift `a`, in units of `x`.
    pub shift: Vec<f64>,
    pub aligned: Field,
    /// `||aligned - reference||_{H_P}`.
    pub residual: f64,
}

/// Minimizes `||exp(i theta) u(. - a) - reference||_{H_P}` over `theta` and `a`.
///
/// With `w = (1 + p) u_hat conj(ref_hat)`, the overlap
/// `C(a) = sum w exp(-i xi.a)` is evaluated on every whole-cell shift by one
/// FFT, refined by Newton steps on `|C(a)|^2`, and `theta = -arg C(a)`.
pub fn align(u: &Field, reference: &Field, metric: &Multiplier) -> Result<AlignmentResult> {
    u.require_same_grid(reference)?;
    let g = *u.grid();
    if *metric.grid() != g {
        return Err(Error::GridMismatch);
    }
    let uh = u.to_fourier();
    let rh = reference.to_fourier();
    let weights: Vec<Complex64> = uh
        .values()
        .iter()
        .zip(rh.values())
        .zip(metric.values())
        .map(|((a, b), p)| a * b.conj() * (1.0 + p))
        .collect();
    let scale = energy_norm(u, metric)? * energy_norm(reference, metric)?;

    let mut corr = weights.clone();
    crate::spectral::fft_forward_raw(&mut corr, &g);
    let (best, peak) = corr
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, c)| if c.norm() > bv { (i, c.norm()) } else { (bi, bv) });
    if !(peak > 1e-12 * scale) {
        return Err(Error::AlignmentUndefined);
    }
    let idx = g.unflatten(best);
    let dx = g.dx();
    let mut a: Vec<f64> = (0..g.dim()).map(|ax| g.lattice_index(idx[ax]) as f64 * dx).collect();

    let wavevectors: Vec<Vec<f64>> = (0..g.len()).map(|f| g.wavevector(f)).collect();
    let objective = |a: &[f64]| overlap(&weights, &wavevectors, a).0.norm_sqr();
    let mut value = objective(&a);
    for _ in 0..50 {
        let (c, grad_c, hess_c) = overlap(&weights, &wavevectors, &a);
        let d = g.dim();
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for j in 0..d {
            grad[j] = 2.0 * (c.conj() * grad_c[j]).re;
            for l in 0..d {
                hess[(j, l)] = 2.0 * (grad_c[l].conj() * grad_c[j] + c.conj() * hess_c[j * d + l]).re;
            }
        }
        let newton = hess.clone().lu().solve(&(-&grad));
        let is_newton = matches!(&newton, Some(s) if s.dot(&grad) > 0.0);
        let mut step = match newton {
            // Ascent requires a negative definite Hessian; otherwise follow the gradient.
            Some(s) if is_newton => s,
            _ => grad.scale(dx * 0.1 / grad.norm().max(f64::MIN_POSITIVE)),
        };
        // |C|^2 is flat to rounding within ~1e-8 dx of the peak, where a value
        // comparison cannot rank Newton steps.
        if is_newton && step.norm() < 1e-3 * dx {
            a = a.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            value = objective(&a);
            if step.norm() < 1e-15 * g.length() {
                break;
            }
            continue;
        }
        if step.norm() > dx {
            step *= dx / step.norm();
        }
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            let v = objective(&trial);
            if v >= value {
                a = trial;
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.norm() < 1e-15 * g.length() {
            break;
        }
    }
    let c = overlap(&weights, &wavevectors, &a).0;
    let theta = -c.arg();
    let aligned = shift_and_phase(u, &a, theta)?;
    let residual = energy_norm(&aligned.to_fourier().sub(&rh)?, metric)?;
    Ok(AlignmentResult {
        theta,
        shift: a,
        aligned,
        residual,
    })
}

/// `C(a)`, its gradient and its Hessian (row-major `d x d`).
fn overlap(weights: &[Complex64], wavevectors: &[Vec<f64>], a: &[f64]) -> (Complex64, Vec<Complex64>, Vec<Complex64>) {
    let d = a.len();
    let mut c = Complex64::new(0.0, 0.0);
    let mut grad = vec![Complex64::new(0.0, 0.0); d];
    let mut hess = vec![Complex64::new(0.0, 0.0); d * d];
    for (w, xi) in weights.iter().zip(wavevectors) {
        if w.norm_sqr() == 0.0 {
            continue;
        }
        let phase: f64 = xi.iter().zip(a).map(|(k, x)| k * x).sum();
        let term = w * Complex64::from_polar(1.0, -phase);
        c += term;
        for j in 0..d {
            grad[j] += term * Complex64::new(0.0, -xi[j]);
            for l in 0..d {
                hess[j * d + l] -= term * xi[j] * xi[l];
            }
        }
    }
    (c, grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inner_product_hp, GridSpec, Space};
    use std::f64::consts::PI;

    fn profile(g: GridSpec) -> Field {
        Field::from_real_fn(g, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (1.0 + 0.3 * x[0]) * (-r2 / 2.0).exp()
        })
    }

    #[test]
    fn identity_alignment() {
        let g = GridSpec::new(1, 128, 20.0).unwrap();
        let r = profile(g);
        let m = Multiplier::from_radial(g, |s| s).unwrap();
        let res = align(&r, &r, &m).unwrap();
        assert!(res.theta.abs() < 1e-14);
        assert!(res.shift[0].abs() < 1e-12);
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn recovers_a_group_action() {
        let g = GridSpec::new(2, 64, 20.0).unwrap();
        let r = profile(g);
        let m = Multiplier::from_radial(g, |s| s + 0.01 * s * s).unwrap();
        let dx = g.dx();
        let u = shift_and_phase(&r, &[5.0 * dx, 5.0 * dx], PI / 3.0).unwrap();
        let res = align(&u, &r, &m).unwrap();
        assert!((res.theta + PI / 3.0).abs() < 1e-10);
        assert!((res.shift[0] + 5.0 * dx).abs() < 1e-10 && (res.shift[1] + 5.0 * dx).abs() < 1e-10);
        assert!(res.residual < 1e-10);
        let again = shift_and_phase(&u, &res.shift, res.theta).unwrap();
        assert!(again.sub(&res.aligned).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn recovers_a_sub_grid_shift() {
        let g = GridSpec::new(1, 128, 20.0).unwrap();
        let r = profile(g);
        let m = Multiplier::from_radial(g, |s| s).unwrap();
        let u = shift_and_phase(&r, &[0.37 * g.dx()], -0.4).unwrap();
        let res = align(&u, &r, &m).unwrap();
        assert!((res.shift[0] + 0.37 * g.dx()).abs() < 1e-10);
        assert!((res.theta - 0.4).abs() < 1e-10);
        let ip = inner_product_hp(&res.aligned, &r, &m).unwrap();
        assert!(ip.im.abs() < 1e-12 * ip.re);
    }

    #[test]
    fn orthogonal_fields_cannot_be_aligned() {
        let g = GridSpec::new(1, 64, 10.0).unwrap();
        let m = Multiplier::from_radial(g, |s| s).unwrap();
        let r = profile(g);
        let z = Field::zeros(g, Space::Physical);
        assert!(matches!(align(&z, &r, &m), Err(Error::AlignmentUndefined)));
    }
}
