use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A periodic `d`-dimensional lattice with `n` points per axis on a box of
/// side `length`, centered at the origin.
///
/// Physical samples sit at `x_i = (i - n/2) * dx`, so the origin is the grid
/// point with index `n/2` on every axis. Storage is row-major with the last
/// axis fastest. Fourier coefficients use the usual FFT ordering: storage
/// index `i` carries the signed lattice index `i` for `i < n/2` and `i - n`
/// otherwise, with wavenumber `2 pi k / length`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    length: f64,
}

/// Builds a validated grid.
pub fn make_grid(dim: usize, n: usize, length: f64) -> Result<GridSpec> {
    GridSpec::new(dim, n, length)
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} is not a power of two >= 8"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length {length} must be positive")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one cell, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Wavenumber spacing `2 pi / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest resolved wavenumber magnitude along one axis (the Nyquist one).
    pub fn k_max(&self) -> f64 {
        self.dk() * (self.n / 2) as f64
    }

    /// Same grid with `n` doubled.
    pub fn refined(&self) -> Self {
        Self { n: self.n * 2, ..*self }
    }

    /// Signed lattice index of storage index `i` along one axis.
    pub fn lattice_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index of a signed lattice index along one axis.
    pub fn storage_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.dx()
    }

    /// Axis indices of a flat storage index; unused axes are zero.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            1 => [flat, 0, 0],
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.dim {
            1 => idx[0],
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Physical position of a flat index (length `d`).
    pub fn position(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        (0..self.dim).map(|a| self.coordinate(idx[a])).collect()
    }

    /// Wavevector carried by a flat Fourier storage index (length `d`).
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        (0..self.dim)
            .map(|a| self.dk() * self.lattice_index(idx[a]) as f64)
            .collect()
    }

    pub fn wavevector_sq(&self, flat: usize) -> f64 {
        let idx = self.unflatten(flat);
        let dk = self.dk();
        (0..self.dim)
            .map(|a| {
                let k = dk * self.lattice_index(idx[a]) as f64;
                k * k
            })
            .sum()
    }

    /// `true` if any axis sits on the unpaired Nyquist index `n/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        (0..self.dim).any(|a| idx[a] == self.n / 2)
    }

    /// Table of `|xi|^2` in storage order.
    pub fn wavevector_sq_table(&self) -> Vec<f64> {
        (0..self.len()).map(|f| self.wavevector_sq(f)).collect()
    }

    /// Flat index of the physical origin.
    pub fn origin_index(&self) -> usize {
        self.flatten([self.n / 2; 3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_wavenumbers_for_two_pi_box() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let mut ks: Vec<f64> = (0..8).map(|i| g.wavevector(i)[0]).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<f64> = (-4..4).map(|k| k as f64).collect();
        for (a, b) in ks.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn three_dimensional_layout() {
        let g = make_grid(3, 64, 40.0).unwrap();
        assert_eq!(g.len(), 64 * 64 * 64);
        assert!((g.dk() - 2.0 * PI / 40.0).abs() < 1e-15);
        let flat = g.flatten([3, 5, 7]);
        assert_eq!(g.unflatten(flat), [3, 5, 7]);
        assert_eq!(g.position(g.origin_index()), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_grid(2, 7, 10.0), Err(Error::InvalidGrid(_))));
        assert!(make_grid(4, 8, 1.0).is_err());
        assert!(make_grid(0, 8, 1.0).is_err());
        assert!(make_grid(1, 4, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(1, 8, -1.0).is_err());
    }

    #[test]
    fn lattice_is_symmetric_away_from_nyquist() {
        let g = make_grid(2, 16, 3.0).unwrap();
        for f in 0..g.len() {
            if g.is_nyquist(f) {
                continue;
            }
            let idx = g.unflatten(f);
            let neg = [g.n() - idx[0], g.n() - idx[1], 0].map(|i| i % g.n());
            let xi = g.wavevector(f);
            let mxi = g.wavevector(g.flatten(neg));
            assert!((xi[0] + mxi[0]).abs() < 1e-12 && (xi[1] + mxi[1]).abs() < 1e-12);
        }
    }
}
