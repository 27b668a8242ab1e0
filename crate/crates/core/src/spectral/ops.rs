use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{Field, Reality, Space};
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// A real Fourier multiplier tabulated on the wavevector lattice of one grid.
#[derive(Clone, Debug)]
pub struct Multiplier {
    grid: GridSpec,
    values: Vec<f64>,
    even: bool,
}

impl Multiplier {
    pub fn from_fn(grid: GridSpec, symbol: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|f| symbol(&grid.wavevector(f))).collect();
        Self::from_values(grid, values)
    }

    /// Radial multiplier, evaluated on `|xi|^2` only.
    pub fn from_radial(grid: GridSpec, symbol: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|f| symbol(grid.wavevector_sq(f))).collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSymbol(grid.wavevector(bad)));
        }
        let even = (0..grid.len()).all(|f| {
            grid.is_nyquist(f) || values[f] == values[negated_index(&grid, f)]
        });
        Ok(Self { grid, values, even })
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![1.0; grid.len()],
            even: true,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// Pointwise transform of the symbol values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn product(&self, other: &Multiplier) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Self::from_values(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    /// Applies the multiplier; the result is returned in the space of the input.
    pub fn apply(&self, field: &Field) -> Result<Field> {
        if *field.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let space = field.space();
        let reality = if self.even {
            field.reality()
        } else {
            Reality::Complex
        };
        let mut values = field.to_fourier().into_values();
        self.apply_in_place(&mut values);
        Ok(Field::raw(self.grid, values, Space::Fourier, reality).into_space(space))
    }

    pub(crate) fn apply_in_place(&self, coeffs: &mut [Complex64]) {
        for (c, m) in coeffs.iter_mut().zip(&self.values) {
            *c *= *m;
        }
    }
}

/// Storage index of `-xi` for the wavevector at `flat`.
fn negated_index(grid: &GridSpec, flat: usize) -> usize {
    let n = grid.n();
    let idx = grid.unflatten(flat);
    let mut neg = [0usize; 3];
    for a in 0..grid.dim() {
        neg[a] = (n - idx[a]) % n;
    }
    grid.flatten(neg)
}

/// Multiplies the Fourier coefficients of `field` by `symbol(xi)`.
pub fn apply_multiplier(field: &Field, symbol: impl Fn(&[f64]) -> f64) -> Result<Field> {
    Multiplier::from_fn(*field.grid(), symbol)?.apply(field)
}

/// `sum (1 + p(xi)) u_hat conj(v_hat)` with `p` the tabulated symbol.
pub fn inner_product_hp(u: &Field, v: &Field, symbol: &Multiplier) -> Result<Complex64> {
    u.require_same_grid(v)?;
    if *u.grid() != *symbol.grid() {
        return Err(Error::GridMismatch);
    }
    let uh = u.to_fourier();
    let vh = v.to_fourier();
    Ok(uh
        .values()
        .iter()
        .zip(vh.values())
        .zip(symbol.values())
        .map(|((a, b), p)| a * b.conj() * (1.0 + p))
        .sum())
}

/// `||u||_{H_P}` for the energy norm of a symbol.
pub fn energy_norm(u: &Field, symbol: &Multiplier) -> Result<f64> {
    Ok(inner_product_hp(u, u, symbol)?.re.max(0.0).sqrt())
}

/// Dual energy norm `(sum |f_hat|^2 / (1 + p))^(1/2)`.
pub fn dual_energy_norm(f: &Field, symbol: &Multiplier) -> Result<f64> {
    if *f.grid() != *symbol.grid() {
        return Err(Error::GridMismatch);
    }
    let fh = f.to_fourier();
    let s: f64 = fh
        .values()
        .iter()
        .zip(symbol.values())
        .map(|(a, p)| a.norm_sqr() / (1.0 + p))
        .sum();
    Ok(s.sqrt())
}

/// `(sum (1 + |xi|^2)^s |u_hat|^2)^(1/2)`.
pub fn sobolev_norm(u: &Field, s: f64) -> f64 {
    let g = *u.grid();
    let uh = u.to_fourier();
    let total: f64 = uh
        .values()
        .iter()
        .enumerate()
        .map(|(f, c)| (1.0 + g.wavevector_sq(f)).powf(s) * c.norm_sqr())
        .sum();
    total.sqrt()
}

/// `exp(i theta) u(. - a)`, realized by Fourier phases so any real shift is
/// exact for band-limited data.
///
/// The Nyquist coefficients are rotated like every other mode, so a sub-grid
/// shift of a real field is returned tagged complex.
pub fn shift_and_phase(u: &Field, shift: &[f64], theta: f64) -> Result<Field> {
    let g = *u.grid();
    if shift.len() != g.dim() {
        return Err(Error::InvalidField(format!(
            "shift has {} components on a {}-dimensional grid",
            shift.len(),
            g.dim()
        )));
    }
    let dx = g.dx();
    let whole_cells = shift
        .iter()
        .all(|a| ((a / dx) - (a / dx).round()).abs() < 1e-12);
    let reality = if u.is_real() && whole_cells && theta.sin() == 0.0 {
        Reality::Real
    } else {
        Reality::Complex
    };
    let space = u.space();
    let rot = Complex64::from_polar(1.0, theta);
    let mut values = u.to_fourier().into_values();
    for (f, c) in values.iter_mut().enumerate() {
        let xi = g.wavevector(f);
        let phase: f64 = xi.iter().zip(shift).map(|(k, a)| k * a).sum();
        *c *= rot * Complex64::from_polar(1.0, -phase);
    }
    Ok(Field::raw(g, values, Space::Fourier, reality).into_space(space))
}

/// Exact cyclic roll by whole cells: `out[i] = u[i - cells]` on every axis.
pub fn roll(u: &Field, cells: &[i64]) -> Field {
    let g = *u.grid();
    let n = g.n() as i64;
    let phys = u.to_physical();
    let src = phys.values();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = g.unflatten(flat);
        let mut from = [0usize; 3];
        for a in 0..g.dim() {
            from[a] = (idx[a] as i64 - cells[a]).rem_euclid(n) as usize;
        }
        *slot = src[g.flatten(from)];
    }
    Field::raw(g, out, Space::Physical, u.reality())
}

/// Orthogonal projection onto fields invariant under the hyperoctahedral group
/// of the grid (axis reflections through the origin and axis permutations),
/// followed by taking the real part.
pub fn symmetrize_radial(u: &Field) -> Field {
    let g = *u.grid();
    let n = g.n();
    let d = g.dim();
    let phys = u.to_physical();
    let src = phys.values();
    let perms = permutations(d);
    let group = perms.len() << d;
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = g.unflatten(flat);
        let mut acc = 0.0;
        for perm in &perms {
            for flips in 0..(1usize << d) {
                let mut img = [0usize; 3];
                for a in 0..d {
                    let i = idx[perm[a]];
                    img[a] = if flips >> a & 1 == 1 { (n - i) % n } else { i };
                }
                acc += src[g.flatten(img)].re;
            }
        }
        *slot = Complex64::new(acc / group as f64, 0.0);
    }
    Field::raw(g, out, Space::Physical, Reality::Real)
}

/// Relative L^2 distance of `u` from its radial projection.
pub fn radial_defect(u: &Field) -> f64 {
    let p = symmetrize_radial(u);
    let phys = u.to_physical();
    let diff = phys.sub(&p).expect("same grid and space");
    diff.l2_norm() / phys.l2_norm().max(f64::MIN_POSITIVE)
}

fn permutations(d: usize) -> Vec<[usize; 3]> {
    match d {
        1 => vec![[0, 1, 2]],
        2 => vec![[0, 1, 2], [1, 0, 2]],
        _ => vec![
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ],
    }
}

/// Seeded real field with Fourier magnitudes `(1 + |xi|^2)^(-decay/2)`.
///
/// The phase of each mode is drawn from a stream position keyed by its
/// integer wavevector, so a refined grid with the same box reproduces every
/// coarse mode exactly and only adds new high modes. Nyquist modes are zero.
pub fn random_smooth_field(grid: GridSpec, seed: u64, decay: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (flat, slot) in values.iter_mut().enumerate() {
        if grid.is_nyquist(flat) {
            continue;
        }
        let idx = grid.unflatten(flat);
        let mut k = [0i64; 3];
        for a in 0..grid.dim() {
            k[a] = grid.lattice_index(idx[a]);
        }
        // Hermitian symmetry: the lexicographically negative half mirrors the
        // positive half.
        let (canon, mirrored) = if k >= [0; 3] {
            (k, false)
        } else {
            ([-k[0], -k[1], -k[2]], true)
        };
        rng.set_word_pos(2 * mode_key(canon));
        let draw: f64 = rng.random();
        let mag = (1.0 + grid.wavevector_sq(flat)).powf(-decay / 2.0);
        let c = if canon == [0; 3] {
            Complex64::new(if draw < 0.5 { -mag } else { mag }, 0.0)
        } else {
            Complex64::from_polar(mag, 2.0 * std::f64::consts::PI * draw)
        };
        *slot = if mirrored { c.conj() } else { c };
    }
    // The centered physical origin makes conjugate pairs map to a real field.
    Field::raw(grid, values, Space::Fourier, Reality::Real)
}

fn mode_key(k: [i64; 3]) -> u128 {
    let zig = |v: i64| ((v << 1) ^ (v >> 63)) as u128;
    (zig(k[0]) << 42) | (zig(k[1]) << 21) | zig(k[2])
}

/// Spectral derivative along `axis`; the Nyquist mode is zeroed so real
/// fields stay real.
pub fn derivative(u: &Field, axis: usize) -> Result<Field> {
    let g = *u.grid();
    if axis >= g.dim() {
        return Err(Error::InvalidField(format!(
            "axis {axis} on a {}-dimensional grid",
            g.dim()
        )));
    }
    let space = u.space();
    let mut values = u.to_fourier().into_values();
    for (f, c) in values.iter_mut().enumerate() {
        let idx = g.unflatten(f);
        if idx[axis] == g.n() / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            let k = g.dk() * g.lattice_index(idx[axis]) as f64;
            *c *= Complex64::new(0.0, k);
        }
    }
    Ok(Field::raw(g, values, Space::Fourier, u.reality()).into_space(space))
}

/// Fraction of `sum |u_hat|^2` carried by modes with some lattice index
/// `|k_a| > n/3`.
pub fn spectral_tail_fraction(u: &Field) -> f64 {
    let g = *u.grid();
    let cut = (g.n() / 3) as i64;
    let uh = u.to_fourier();
    let mut tail = 0.0;
    let mut total = 0.0;
    for (f, c) in uh.values().iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let idx = g.unflatten(f);
        if (0..g.dim()).any(|a| g.lattice_index(idx[a]).abs() > cut) {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Zeroes every mode with some `|k_a| > fraction * n/2`.
pub fn dealias(u: &Field, fraction: f64) -> Field {
    let g = *u.grid();
    let cut = fraction * (g.n() / 2) as f64;
    let space = u.space();
    let mut values = u.to_fourier().into_values();
    for (f, c) in values.iter_mut().enumerate() {
        let idx = g.unflatten(f);
        if (0..g.dim()).any(|a| g.lattice_index(idx[a]).abs() as f64 > cut) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    Field::raw(g, values, Space::Fourier, u.reality()).into_space(space)
}

/// Spectral interpolation onto another grid of the same box: shared lattice
/// modes are copied, the rest are zero. Nyquist modes of the source are
/// dropped so real fields stay real.
pub fn resample(u: &Field, grid: GridSpec) -> Result<Field> {
    let src = *u.grid();
    if src.dim() != grid.dim() || src.length() != grid.length() {
        return Err(Error::GridMismatch);
    }
    let uh = u.to_fourier();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let limit = (src.n().min(grid.n()) / 2) as i64;
    for (f, c) in uh.values().iter().enumerate() {
        let idx = src.unflatten(f);
        let mut target = [0usize; 3];
        let mut keep = true;
        for a in 0..src.dim() {
            let k = src.lattice_index(idx[a]);
            keep &= k.abs() < limit;
            target[a] = grid.storage_index(k);
        }
        if keep {
            values[grid.flatten(target)] = *c;
        }
    }
    Ok(Field::raw(grid, values, Space::Fourier, u.reality()).into_space(u.space()))
}

/// Largest `|u|` on the box faces relative to the largest `|u|` overall.
pub fn boundary_amplitude(u: &Field) -> f64 {
    let g = *u.grid();
    let phys = u.to_physical();
    let peak = phys.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let edge = phys
        .values()
        .iter()
        .enumerate()
        .filter(|(f, _)| {
            let idx = g.unflatten(*f);
            (0..g.dim()).any(|a| idx[a] == 0)
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    edge / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(n: usize, length: f64) -> GridSpec {
        GridSpec::new(1, n, length).unwrap()
    }

    #[test]
    fn resampling_preserves_band_limited_fields() {
        let g = line(64, 20.0);
        let u = Field::from_real_fn(g, |x| (-x[0] * x[0] / 2.0).exp());
        let fine = resample(&u, g.refined()).unwrap();
        assert!(fine.is_real());
        let exact = Field::from_real_fn(g.refined(), |x| (-x[0] * x[0] / 2.0).exp());
        assert!(fine.sub(&exact).unwrap().max_abs() < 1e-12);
        let back = resample(&fine, g).unwrap();
        assert!(back.sub(&u).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn constant_has_only_the_zero_mode() {
        let g = line(16, 3.0);
        let u = Field::from_real_fn(g, |_| 1.0).into_fourier();
        for (f, c) in u.values().iter().enumerate() {
            if f == 0 {
                assert!((c.re - 3f64.sqrt()).abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn cosine_has_two_equal_modes() {
        let g = line(32, 5.0);
        let u = Field::from_real_fn(g, |x| (2.0 * PI * x[0] / 5.0).cos()).into_fourier();
        let big: Vec<usize> = (0..32).filter(|&f| u.values()[f].norm() > 1e-12).collect();
        assert_eq!(big, vec![1, 31]);
        assert!((u.values()[1].norm() - u.values()[31].norm()).abs() < 1e-14);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = line(32, 2.0 * PI);
        let u = Field::from_real_fn(g, |x| x[0].sin());
        let lap = apply_multiplier(&u, |xi| xi[0] * xi[0]).unwrap();
        assert!(lap.is_real());
        let diff = lap.sub(&u).unwrap();
        assert!(diff.max_abs() < 1e-13);
    }

    #[test]
    fn multiplier_algebra_round_trip() {
        let g = GridSpec::new(2, 32, 10.0).unwrap();
        let p = Multiplier::from_radial(g, |s| s + 0.01 * s * s).unwrap();
        let half = p.map(|v| (1.0 + v).powf(-0.5)).unwrap();
        let full = p.map(|v| 1.0 + v).unwrap();
        let u = random_smooth_field(g, 3, 3.0);
        let back = full.apply(&half.apply(&half.apply(&u).unwrap()).unwrap()).unwrap();
        let err = back.sub(&u).unwrap().l2_norm() / u.l2_norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn non_finite_symbol_is_rejected() {
        let g = line(8, 1.0);
        let err = apply_multiplier(&Field::zeros(g, Space::Physical), |xi| 1.0 / xi[0]);
        assert!(matches!(err, Err(Error::NonFiniteSymbol(_))));
    }

    #[test]
    fn sine_energy_doubles_in_h1() {
        let g = line(64, 2.0 * PI);
        let u = Field::from_real_fn(g, |x| x[0].sin());
        let l2 = sobolev_norm(&u, 0.0);
        assert!((l2 - u.l2_norm()).abs() < 1e-13);
        assert!((sobolev_norm(&u, 1.0).powi(2) - 2.0 * l2 * l2).abs() < 1e-12);
    }

    #[test]
    fn laplacian_symbol_gives_h1_inner_product() {
        let g = GridSpec::new(2, 16, 6.0).unwrap();
        let lap = Multiplier::from_radial(g, |s| s).unwrap();
        let u = random_smooth_field(g, 1, 3.0);
        let e = inner_product_hp(&u, &u, &lap).unwrap();
        assert!((e.re - sobolev_norm(&u, 1.0).powi(2)).abs() < 1e-12 * e.re);
    }

    #[test]
    fn trivial_shift_and_half_turn() {
        let g = line(32, 8.0);
        let u = random_smooth_field(g, 9, 3.0).into_physical();
        let same = shift_and_phase(&u, &[0.0], 0.0).unwrap();
        assert!(same.sub(&u).unwrap().max_abs() < 1e-14);
        let neg = shift_and_phase(&u, &[0.0], PI).unwrap();
        assert!(neg.add(&u).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn whole_cell_shift_is_a_roll() {
        let g = GridSpec::new(2, 16, 4.0).unwrap();
        let u = random_smooth_field(g, 2, 3.0).into_physical();
        let dx = g.dx();
        let shifted = shift_and_phase(&u, &[dx, -2.0 * dx], 0.0).unwrap();
        assert!(shifted.is_real());
        let rolled = roll(&u, &[1, -2]);
        assert!(shifted.sub(&rolled).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn radial_fixed_points_and_odd_kernel() {
        let g = GridSpec::new(3, 16, 8.0).unwrap();
        let gauss = Field::from_real_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
        let sym = symmetrize_radial(&gauss);
        assert!(sym.sub(&gauss).unwrap().max_abs() < 1e-12);
        // Odd and periodic: vanishes on the boundary plane, its own mirror image.
        let odd = Field::from_real_fn(g, |x| (PI * x[0] / 4.0).sin() * (1.0 + x[1] * x[1]));
        assert!(symmetrize_radial(&odd).max_abs() < 1e-12);
    }

    #[test]
    fn nyquist_free_derivative_keeps_real_fields_real() {
        let g = line(64, 2.0 * PI);
        let u = Field::from_real_fn(g, |x| (3.0 * x[0]).sin());
        let du = derivative(&u, 0).unwrap();
        assert!(du.is_real());
        let exact = Field::from_real_fn(g, |x| 3.0 * (3.0 * x[0]).cos());
        assert!(du.sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn random_fields_are_reproducible_and_refinement_consistent() {
        let g = GridSpec::new(2, 16, 7.0).unwrap();
        let a = random_smooth_field(g, 42, 3.0);
        let b = random_smooth_field(g, 42, 3.0);
        assert_eq!(a.values(), b.values());
        let c = random_smooth_field(g, 43, 3.0);
        assert!(a.sub(&c).unwrap().l2_norm() > 0.0);

        let fine = random_smooth_field(g.refined(), 42, 3.0);
        let gf = g.refined();
        for f in 0..g.len() {
            if g.is_nyquist(f) {
                continue;
            }
            let idx = g.unflatten(f);
            let k = [g.lattice_index(idx[0]), g.lattice_index(idx[1])];
            let ff = gf.flatten([gf.storage_index(k[0]), gf.storage_index(k[1]), 0]);
            assert_eq!(a.values()[f], fine.values()[ff]);
        }
    }

    #[test]
    fn random_field_tail_is_small() {
        // Oracle: sum over |k| > 85 of (1 + (2 pi k / L)^2)^-3 against the
        // full lattice sum, L = 20, n = 256; evaluated in extended precision
        // the fraction is 2.0918447e-8.
        let g = line(256, 20.0);
        let u = random_smooth_field(g, 5, 3.0);
        let tail = spectral_tail_fraction(&u);
        assert!(tail < 1e-6);
        assert!((tail / 2.0918447e-8 - 1.0).abs() < 1e-6, "{tail:e}");
        assert!(sobolev_norm(&u, 1.0).is_finite());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn grid(dim: usize) -> GridSpec {
        GridSpec::new(dim, if dim == 3 { 8 } else { 16 }, 9.0).unwrap()
    }

    fn complex_field(g: GridSpec, seed: u64) -> Field {
        let re = random_smooth_field(g, seed, 2.5).into_physical();
        let im = random_smooth_field(g, seed ^ 0x9e37, 2.5).into_physical();
        let v = re
            .values()
            .iter()
            .zip(im.values())
            .map(|(a, b)| Complex64::new(a.re, b.re))
            .collect();
        Field::from_values(g, v, Space::Physical, Reality::Complex).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn multiplier_composition(seed in 0u64..500, dim in 1usize..=3, a in 0.0f64..1.0) {
            let g = grid(dim);
            let p = Multiplier::from_radial(g, |s| s + a * s * s).unwrap();
            let q = Multiplier::from_radial(g, |s| 1.0 / (1.0 + s)).unwrap();
            let u = complex_field(g, seed);
            let two = p.apply(&q.apply(&u).unwrap()).unwrap();
            let one = p.product(&q).unwrap().apply(&u).unwrap();
            prop_assert!(two.sub(&one).unwrap().l2_norm() <= 1e-12 * one.l2_norm());
        }

        #[test]
        fn real_even_multiplier_keeps_reality(seed in 0u64..500, dim in 1usize..=3) {
            let g = grid(dim);
            let u = random_smooth_field(g, seed, 3.0).into_physical();
            let raw = Multiplier::from_radial(g, |s| s * s - 0.3 * s).unwrap();
            let mut v = u.to_fourier().into_values();
            raw.apply_in_place(&mut v);
            let out = Field::raw(g, v, Space::Fourier, Reality::Complex).into_physical();
            let imag = out.values().iter().map(|c| c.im.abs()).fold(0.0, f64::max);
            prop_assert!(imag < 1e-12 * out.max_abs());
        }

        #[test]
        fn shift_preserves_norms(seed in 0u64..500, dim in 1usize..=3, a in -3.0f64..3.0, th in -4.0f64..4.0) {
            let g = grid(dim);
            let u = complex_field(g, seed);
            let shift = vec![a; dim];
            let v = shift_and_phase(&u, &shift, th).unwrap();
            for s in [-1.0, 0.0, 1.0, 2.0] {
                let (nu, nv) = (sobolev_norm(&u, s), sobolev_norm(&v, s));
                prop_assert!((nu - nv).abs() < 1e-12 * nu);
            }
        }

        #[test]
        fn hermitian_energy_product(seed in 0u64..500, dim in 1usize..=3) {
            let g = grid(dim);
            let p = Multiplier::from_radial(g, |s| s + 0.1 * s * s).unwrap();
            let u = complex_field(g, seed);
            let v = complex_field(g, seed + 1);
            let uv = inner_product_hp(&u, &v, &p).unwrap();
            let vu = inner_product_hp(&v, &u, &p).unwrap();
            prop_assert!((uv - vu.conj()).norm() < 1e-12 * uv.norm().max(1e-300));
            prop_assert!(inner_product_hp(&u, &u, &p).unwrap().re > 0.0);
        }

        #[test]
        fn sobolev_scale_is_monotone(seed in 0u64..500, dim in 1usize..=3) {
            let u = complex_field(grid(dim), seed);
            prop_assert!(sobolev_norm(&u, -1.0) <= sobolev_norm(&u, 0.0));
            prop_assert!(sobolev_norm(&u, 0.0) <= sobolev_norm(&u, 1.0));
        }

        #[test]
        fn radial_projection_is_orthogonal_and_idempotent(seed in 0u64..500, dim in 1usize..=3) {
            let g = grid(dim);
            let u = complex_field(g, seed);
            let v = complex_field(g, seed + 7);
            let pu = symmetrize_radial(&u);
            let pv = symmetrize_radial(&v);
            let ppu = symmetrize_radial(&pu);
            prop_assert!(ppu.sub(&pu).unwrap().max_abs() < 1e-13 * pu.max_abs().max(1e-300));
            // Orthogonality in the real inner product, the geometry of the real subspace.
            let defect = u.to_physical().sub(&pu).unwrap().dot_re(&pv).unwrap();
            prop_assert!(defect.abs() < 1e-10 * u.l2_norm() * v.l2_norm());
        }
    }
}
