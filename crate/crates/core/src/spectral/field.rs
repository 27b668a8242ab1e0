use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::fft_nd;
use super::grid::GridSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Fourier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reality {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToFourier,
    ToPhysical,
}

/// Samples of a function on a [`GridSpec`], in physical or Fourier space.
///
/// Transform normalization (the only place it is defined): Fourier
/// coefficients are those of the orthonormal basis `exp(i xi.x) / L^(d/2)`,
///
/// ```text
/// u_hat(xi) = L^(d/2) / n^d * sum_x u(x) exp(-i xi.x)
/// ```
///
/// with `x` the centered physical coordinates. Hence Parseval reads
/// `sum |u(x)|^2 dx^d = sum |u_hat(xi)|^2`: physical sums carry the
/// quadrature weight `dx^d`, Fourier sums carry weight one.
///
/// A field tagged [`Reality::Real`] has exactly zero imaginary parts whenever
/// it is in physical space.
#[derive(Clone, Debug)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
    space: Space,
    reality: Reality,
}

const REALITY_TOL: f64 = 1e-12;

impl Field {
    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            space,
            reality: Reality::Real,
        }
    }

    /// Wraps raw samples. A physical field tagged real must have imaginary
    /// parts below `1e-12` of its maximum amplitude; they are then dropped.
    pub fn from_values(
        grid: GridSpec,
        mut values: Vec<Complex64>,
        space: Space,
        reality: Reality,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if reality == Reality::Real && space == Space::Physical {
            let amp = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let imag = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            if imag > REALITY_TOL * amp.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidField(format!(
                    "imaginary part {imag:.3e} on a real field of amplitude {amp:.3e}"
                )));
            }
            values.iter_mut().for_each(|v| v.im = 0.0);
        }
        Ok(Self {
            grid,
            values,
            space,
            reality,
        })
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| Complex64::new(f(&grid.position(i)), 0.0))
            .collect();
        Self {
            grid,
            values,
            space: Space::Physical,
            reality: Reality::Real,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self {
            grid,
            values,
            space: Space::Physical,
            reality: Reality::Complex,
        }
    }

    pub(crate) fn raw(grid: GridSpec, values: Vec<Complex64>, space: Space, reality: Reality) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        let mut f = Self {
            grid,
            values,
            space,
            reality,
        };
        f.enforce_reality();
        f
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn reality(&self) -> Reality {
        self.reality
    }

    pub fn is_real(&self) -> bool {
        self.reality == Reality::Real
    }

    /// Same values, retagged as complex.
    pub fn as_complex(mut self) -> Self {
        self.reality = Reality::Complex;
        self
    }

    /// Sets the reality tag without checking; a real tag drops the imaginary
    /// parts of physical samples.
    pub(crate) fn retag(mut self, reality: Reality) -> Self {
        self.reality = reality;
        self.enforce_reality();
        self
    }

    /// Checks the physical samples and retags the field as real when the
    /// imaginary parts are negligible.
    pub fn try_real(self) -> Result<Self> {
        let phys = self.into_physical();
        Self::from_values(phys.grid, phys.values, Space::Physical, Reality::Real)
    }

    fn enforce_reality(&mut self) {
        if self.reality == Reality::Real && self.space == Space::Physical {
            self.values.iter_mut().for_each(|v| v.im = 0.0);
        }
    }

    pub fn require_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::SpaceMismatch {
                expected: space,
                found: self.space,
            });
        }
        Ok(())
    }

    pub fn require_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn to_fourier(&self) -> Field {
        self.clone().into_fourier()
    }

    pub fn to_physical(&self) -> Field {
        self.clone().into_physical()
    }

    pub fn into_fourier(mut self) -> Field {
        if self.space == Space::Fourier {
            return self;
        }
        let g = self.grid;
        fft_nd(&mut self.values, &g, false);
        let scale = g.length().powf(g.dim() as f64 / 2.0) / g.len() as f64;
        apply_centering(&mut self.values, &g, scale);
        self.space = Space::Fourier;
        self
    }

    pub fn into_physical(mut self) -> Field {
        if self.space == Space::Physical {
            return self;
        }
        let g = self.grid;
        let scale = g.length().powf(-(g.dim() as f64) / 2.0);
        apply_centering(&mut self.values, &g, scale);
        fft_nd(&mut self.values, &g, true);
        self.space = Space::Physical;
        self.enforce_reality();
        self
    }

    pub fn into_space(self, space: Space) -> Field {
        match space {
            Space::Physical => self.into_physical(),
            Space::Fourier => self.into_fourier(),
        }
    }

    /// Largest sample magnitude in the current space.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, a: f64) -> Field {
        let values = self.values.iter().map(|v| v * a).collect();
        Field {
            values,
            ..*self
        }
    }

    pub fn scale_complex(&self, a: Complex64) -> Field {
        let values = self.values.iter().map(|v| v * a).collect();
        let reality = if a.im == 0.0 {
            self.reality
        } else {
            Reality::Complex
        };
        Field {
            values,
            reality,
            ..*self
        }
    }

    /// `a * self + b * other`, both in the same space.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.require_same_grid(other)?;
        other.require_space(self.space)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(Field {
            values,
            reality: join(self.reality, other.reality),
            ..*self
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Pointwise product of two physical fields.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.require_same_grid(other)?;
        self.require_space(Space::Physical)?;
        other.require_space(Space::Physical)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(Field {
            values,
            reality: join(self.reality, other.reality),
            ..*self
        })
    }

    /// Applies `f` to every sample; the caller states the resulting reality.
    pub fn map(&self, reality: Reality, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::raw(
            self.grid,
            self.values.iter().map(|v| f(*v)).collect(),
            self.space,
            reality,
        )
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Field {
        self.map(self.reality, |v| v.conj())
    }

    /// `L^2` inner product `int self * conj(other)`, computed in whichever
    /// space both fields share.
    pub fn dot(&self, other: &Field) -> Result<Complex64> {
        self.require_same_grid(other)?;
        other.require_space(self.space)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y.conj())
            .sum();
        Ok(match self.space {
            Space::Fourier => s,
            Space::Physical => s * self.grid.cell_volume(),
        })
    }

    /// Real part of the `L^2` inner product, the inner product of
    /// `L^2(R^d; R^2)`.
    pub fn dot_re(&self, other: &Field) -> Result<f64> {
        Ok(self.dot(other)?.re)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        match self.space {
            Space::Fourier => s.sqrt(),
            Space::Physical => (s * self.grid.cell_volume()).sqrt(),
        }
    }

    /// Real parts of the physical samples.
    pub fn real_samples(&self) -> Vec<f64> {
        self.to_physical().values.iter().map(|v| v.re).collect()
    }

}

fn join(a: Reality, b: Reality) -> Reality {
    if a == Reality::Real && b == Reality::Real {
        Reality::Real
    } else {
        Reality::Complex
    }
}

/// Multiplies by `scale * (-1)^(i0 + i1 + i2)`. Sample `i` sits at
/// `(i - n/2) dx`, so the DFT phase relative to a centered origin is
/// `exp(i pi k) = (-1)^k`, and `k` has the parity of its storage index.
fn apply_centering(values: &mut [Complex64], grid: &GridSpec, scale: f64) {
    for (flat, v) in values.iter_mut().enumerate() {
        let idx = grid.unflatten(flat);
        *v *= if (idx[0] + idx[1] + idx[2]).is_multiple_of(2) {
            scale
        } else {
            -scale
        };
    }
}

/// Transforms `field` in the requested direction, checking the source space.
pub fn transform(field: &Field, direction: Direction) -> Result<Field> {
    match direction {
        Direction::ToFourier => {
            field.require_space(Space::Physical)?;
            Ok(field.to_fourier())
        }
        Direction::ToPhysical => {
            field.require_space(Space::Fourier)?;
            Ok(field.to_physical())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_smooth_field;
    use proptest::prelude::*;

    #[test]
    fn rejects_wrong_size_and_complex_real_data() {
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        let short = vec![Complex64::new(0.0, 0.0); 7];
        assert!(Field::from_values(g, short, Space::Physical, Reality::Real).is_err());
        let mut vals = vec![Complex64::new(1.0, 0.0); 8];
        vals[3].im = 1e-6;
        assert!(Field::from_values(g, vals, Space::Physical, Reality::Real).is_err());
    }

    #[test]
    fn transform_checks_source_space() {
        let g = GridSpec::new(1, 8, 1.0).unwrap();
        let u = Field::zeros(g, Space::Fourier);
        assert!(matches!(
            transform(&u, Direction::ToFourier),
            Err(Error::SpaceMismatch { .. })
        ));
        assert!(transform(&u, Direction::ToPhysical).is_ok());
    }

    #[test]
    fn gaussian_coefficients_match_continuous_transform() {
        // u = exp(-x^2/2) has u_hat(xi) = L^(-1/2) sqrt(2 pi) exp(-xi^2/2).
        let length = 30.0;
        let g = GridSpec::new(1, 128, length).unwrap();
        let u = Field::from_real_fn(g, |x| (-x[0] * x[0] / 2.0).exp()).into_fourier();
        for f in 0..g.len() {
            let xi = g.wavevector(f)[0];
            let exact = (2.0 * std::f64::consts::PI / length).sqrt() * (-xi * xi / 2.0).exp();
            assert!((u.values()[f] - exact).norm() < 1e-13);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_and_round_trip(seed in 0u64..1000, dim in 1usize..=3, len in 1.0f64..50.0) {
            let n = if dim == 3 { 8 } else { 32 };
            let g = GridSpec::new(dim, n, len).unwrap();
            let u = random_smooth_field(g, seed, 2.0).into_physical();
            let uh = u.to_fourier();
            let rel = (u.l2_norm() - uh.l2_norm()).abs() / u.l2_norm();
            prop_assert!(rel < 1e-12);
            let back = uh.to_physical();
            let err = back.sub(&u).unwrap().max_abs() / u.max_abs();
            prop_assert!(err < 1e-12);
        }
    }
}
