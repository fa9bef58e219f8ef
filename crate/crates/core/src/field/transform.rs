//! Multi-dimensional FFT on the torus, applied axis by axis.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::TorusGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place transform. The forward direction divides by the node count, so
/// that the mode-0 coefficient is the mean of the samples.
pub(crate) fn fft_in_place(grid: &TorusGrid, data: &mut [Complex64], dir: Direction) {
    debug_assert_eq!(data.len(), grid.len());
    let total = grid.len();
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        for axis in 0..grid.dim() {
            let n = grid.sizes()[axis];
            let fft = match dir {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            };
            let stride = grid.stride(axis);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            // Strided lines: gather a batch of lines, transform, scatter back.
            let block = n * stride;
            let mut line = vec![Complex64::default(); n * stride];
            for base in (0..total).step_by(block) {
                let chunk = &mut data[base..base + block];
                for (j, row) in chunk.chunks_exact(stride).enumerate() {
                    for (s, v) in row.iter().enumerate() {
                        line[s * n + j] = *v;
                    }
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, row) in chunk.chunks_exact_mut(stride).enumerate() {
                    for (s, v) in row.iter_mut().enumerate() {
                        *v = line[s * n + j];
                    }
                }
            }
        }
    });
    if dir == Direction::Forward {
        let inv = 1.0 / total as f64;
        data.iter_mut().for_each(|v| *v *= inv);
    }
}

/// Per-axis angular wave numbers `2 pi k / T` in storage order.
pub(crate) fn angular_table(grid: &TorusGrid) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|a| (0..grid.sizes()[a]).map(|j| grid.angular(a, j)).collect())
        .collect()
}

/// Calls `visit(flat_index, xi, nyquist)` for every mode, where `xi` holds the
/// angular wave vector and `nyquist[a]` flags the unpaired `-M/2` slot.
pub(crate) fn for_each_mode(grid: &TorusGrid, mut visit: impl FnMut(usize, [f64; 3], [bool; 3])) {
    let table = angular_table(grid);
    for idx in 0..grid.len() {
        let m = grid.unravel(idx);
        let mut xi = [0.0; 3];
        let mut nyq = [false; 3];
        for a in 0..grid.dim() {
            xi[a] = table[a][m[a]];
            nyq[a] = grid.is_nyquist(a, m[a]);
        }
        visit(idx, xi, nyq);
    }
}

/// `|xi|^2` for every mode, in storage order. The Nyquist slot keeps its full
/// wave number so the Laplacian stays negative definite off the mean mode.
pub(crate) fn laplacian_symbol(grid: &TorusGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for_each_mode(grid, |i, xi, _| {
        out[i] = xi.iter().map(|x| x * x).sum();
    });
    out
}

/// Real multiplier `xi_axis` of `-i d/dx_axis`, with the Nyquist slot zeroed.
pub(crate) fn derivative_symbol(grid: &TorusGrid, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for_each_mode(grid, |i, xi, nyq| {
        out[i] = if nyq[axis] { 0.0 } else { xi[axis] };
    });
    out
}
