//! Periodic pseudospectral calculus on a centered box.

mod fft;
mod field;
mod grid;
mod ops;

pub use field::{transform, Direction, Field, Reality, Space};
pub use grid::{make_grid, GridSpec};
pub use ops::{
    apply_multiplier, boundary_amplitude, dealias, derivative, dual_energy_norm, energy_norm,
    inner_product_hp, radial_defect, random_smooth_field, roll, shift_and_phase, sobolev_norm,
    resample, spectral_tail_fraction, symmetrize_radial, Multiplier,
};

/// Unnormalized forward DFT over every axis, for callers that need raw sums.
pub(crate) fn fft_forward_raw(data: &mut [num_complex::Complex64], grid: &GridSpec) {
    fft::fft_nd(data, grid, false);
}
