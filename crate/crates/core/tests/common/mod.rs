#![allow(dead_code)]

use gptw_core::ansatz::{band_limited_noise, perturb};
use gptw_core::field::{ComplexField, TorusGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid2(points: usize, period: f64) -> TorusGrid {
    TorusGrid::cubic(2, points, period).unwrap()
}

/// Independent white-noise field, not band limited.
pub fn white(grid: TorusGrid, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexField::from_fn(grid, |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Smooth field near the unit constant.
pub fn smooth_near_one(grid: TorusGrid, amplitude: f64, seed: u64) -> ComplexField {
    let one = ComplexField::constant(grid, Complex64::new(1.0, 0.0));
    perturb(&one, amplitude, 3, seed).unwrap()
}

pub fn smooth(grid: TorusGrid, seed: u64) -> ComplexField {
    band_limited_noise(&grid, 3, seed)
}

pub fn max_abs_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
