//! Multi-dimensional complex FFT on top of `rustfft`, axis by axis.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::GridSpec;

type PlanKey = (usize, bool);
type PlanCache = Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let dir = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(n, dir)
        })
        .clone()
}

/// Unnormalized in-place DFT over every axis of `data`.
pub(crate) fn fft_nd(data: &mut [Complex64], grid: &GridSpec, inverse: bool) {
    let n = grid.n();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous: every chunk of n is one line.
    fft.process_with_scratch(data, &mut scratch);
    if grid.dim() == 1 {
        return;
    }
    let mut lines = Vec::new();
    for axis in 0..grid.dim() - 1 {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        let block = n * stride;
        lines.resize(block, Complex64::new(0.0, 0.0));
        for chunk in data.chunks_exact_mut(block) {
            // Transpose the [n x stride] block into [stride x n] lines.
            for i in 0..n {
                let row = &chunk[i * stride..(i + 1) * stride];
                for (j, v) in row.iter().enumerate() {
                    lines[j * n + i] = *v;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for i in 0..n {
                let row = &mut chunk[i * stride..(i + 1) * stride];
                for (j, v) in row.iter_mut().enumerate() {
                    *v = lines[j * n + i];
                }
            }
        }
    }
}
