//! Benchmark fixtures shared by the criterion targets.

use gptw_core::ansatz::{perturb, VortexAnsatz};
use gptw_core::{ComplexField, TorusGrid};

/// `1 + w_R` plus a small band-limited perturbation on an `n x n` grid of period `3 n / 8`.
pub fn fixture(n: usize) -> ComplexField {
    let period = 3.0 * n as f64 / 8.0;
    let grid = TorusGrid::cubic(2, n, period).expect("valid grid");
    let r = (period / 5.0).max(2.0);
    let base = VortexAnsatz::new(r)
        .and_then(|a| a.field(&grid))
        .expect("support fits");
    perturb(&base, 0.01, 4, 11).expect("valid perturbation")
}
