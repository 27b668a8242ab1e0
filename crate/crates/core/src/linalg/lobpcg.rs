use nalgebra::{DMatrix, SymmetricEigen};

use super::{axpy, dot, norm, project_out};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LobpcgConfig {
    /// Residual `||A x - lambda x||` threshold, relative to the largest `|lambda|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Trailing block vectors that are iterated but not required to converge.
    pub guard: usize,
}

impl Default for LobpcgConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            guard: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenOutcome {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenpairs of a symmetric operator restricted to the orthogonal
/// complement of `deflate` (orthonormal), one per initial vector.
///
/// The deflated operator is `(I - Y Y^T) A (I - Y Y^T)`; every block is
/// re-projected each iteration so the iterates never drift into `span Y`.
pub fn lobpcg(
    op: impl Fn(&[f64]) -> Result<Vec<f64>>,
    initial: &[Vec<f64>],
    deflate: &[Vec<f64>],
    cfg: &LobpcgConfig,
) -> Result<EigenOutcome> {
    let k = initial.len();
    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        let mut w = op(v)?;
        project_out(&mut w, deflate);
        Ok(w)
    };
    let mut start: Vec<Vec<f64>> = initial.to_vec();
    start.iter_mut().for_each(|v| project_out(v, deflate));
    let images = start.iter().map(|v| apply(v)).collect::<Result<Vec<_>>>()?;
    let (basis, basis_images) = orthonormalize_pair(start, images, 1e-8);
    if basis.len() < k {
        return Err(Error::InvalidField("initial block is rank deficient after deflation".into()));
    }
    let (mut values, mut x, mut ax, _) = rayleigh_ritz(&basis, &basis_images, k, k);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();
    let mut residuals = vec![f64::INFINITY; k];

    for iter in 0..cfg.max_iter {
        let mut w = Vec::new();
        let mut pending = false;
        let scale = values.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        for i in 0..k {
            let mut r = ax[i].clone();
            axpy(-values[i], &x[i], &mut r);
            project_out(&mut r, deflate);
            residuals[i] = norm(&r);
            if residuals[i] > cfg.tol * scale {
                pending |= i + cfg.guard < k;
                w.push(r);
            }
        }
        if !pending {
            return Ok(EigenOutcome {
                values,
                vectors: x,
                residuals,
                iterations: iter,
                converged: true,
            });
        }
        let aw = w.iter().map(|v| apply(v)).collect::<Result<Vec<_>>>()?;
        let mut cols = x.clone();
        let mut imgs = ax.clone();
        cols.extend(w);
        imgs.extend(aw);
        cols.extend(p.iter().cloned());
        imgs.extend(ap.iter().cloned());
        let (basis, basis_images) = orthonormalize_pair(cols, imgs, 1e-10);
        let (v, nx, nax, (np, nap)) = rayleigh_ritz(&basis, &basis_images, k, k);
        values = v;
        x = nx;
        ax = nax;
        p = np;
        ap = nap;
    }
    Ok(EigenOutcome {
        values,
        vectors: x,
        residuals,
        iterations: cfg.max_iter,
        converged: false,
    })
}

/// Modified Gram-Schmidt (twice) on `cols`, applying the same column
/// operations to `images` so that `images[i] = A cols[i]` is preserved.
fn orthonormalize_pair(mut cols: Vec<Vec<f64>>, mut images: Vec<Vec<f64>>, drop_tol: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut aq: Vec<Vec<f64>> = Vec::new();
    for (mut v, mut av) in cols.drain(..).zip(images.drain(..)) {
        let n0 = norm(&v);
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for (b, ab) in q.iter().zip(&aq) {
                let c = dot(&v, b);
                axpy(-c, b, &mut v);
                axpy(-c, ab, &mut av);
            }
        }
        let n1 = norm(&v);
        if n1 > drop_tol * n0 {
            v.iter_mut().for_each(|t| *t /= n1);
            av.iter_mut().for_each(|t| *t /= n1);
            q.push(v);
            aq.push(av);
        }
    }
    (q, aq)
}

type Block = Vec<Vec<f64>>;

/// Top `k` Ritz pairs on an orthonormal basis whose first `lead` columns span
/// the current iterate. Also returns the search direction: the Ritz vectors'
/// component outside those lead columns, with its image.
fn rayleigh_ritz(basis: &[Vec<f64>], images: &[Vec<f64>], k: usize, lead: usize) -> (Vec<f64>, Block, Block, (Block, Block)) {
    let m = basis.len();
    let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let len = basis[0].len();
    let combine = |cols: &[Vec<f64>], j: usize, from: usize| {
        let mut out = vec![0.0; len];
        for (i, c) in cols.iter().enumerate().skip(from) {
            axpy(eig.eigenvectors[(i, j)], c, &mut out);
        }
        out
    };
    let mut values = Vec::with_capacity(k);
    let (mut x, mut ax, mut p, mut ap) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &j in order.iter().take(k) {
        values.push(eig.eigenvalues[j]);
        x.push(combine(basis, j, 0));
        ax.push(combine(images, j, 0));
        if m > lead {
            p.push(combine(basis, j, lead));
            ap.push(combine(images, j, lead));
        }
    }
    (values, x, ax, (p, ap))
}
