//! Matrix-free Krylov and block eigensolvers on real sample vectors.
//!
//! Vectors are plain `f64` slices; the Euclidean product is used throughout,
//! which on a uniform grid is the `L^2` product up to the cell volume.

mod lobpcg;
mod minres;

pub use lobpcg::{lobpcg, EigenOutcome, LobpcgConfig};
pub use minres::{minres, MinresOutcome};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a x`.
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Removes the components along an orthonormal `basis`, twice.
pub(crate) fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            axpy(-c, b, v);
        }
    }
}

/// Gram-Schmidt with reorthogonalization; returns an orthonormal basis of the
/// span of `vectors`, dropping columns whose norm collapses below `drop_tol`
/// of their original size.
pub fn orthonormalize(vectors: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let n0 = norm(v);
        if n0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        project_out(&mut w, &out);
        let n1 = norm(&w);
        if n1 > drop_tol * n0 {
            w.iter_mut().for_each(|x| *x /= n1);
            out.push(w);
        }
    }
    out
}
