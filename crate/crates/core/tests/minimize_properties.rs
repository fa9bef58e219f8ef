mod common;

use std::f64::consts::PI;

use common::grid2;
use gptw_core::ansatz::{constant, perturb, plane_wave, PlaneWave};
use gptw_core::field::ComplexField;
use gptw_core::functionals::{gradient, Params};
use gptw_core::minimize::{
    classify, existence_experiment, minimize_action, minimize_with_observer, Classification,
    MinimizeOptions,
};
use gptw_core::mountainpass::{negative_direction, SaddleOptions};
use gptw_core::VortexAnsatz;
use num_complex::Complex64;
use proptest::prelude::*;

fn opts(g: &gptw_core::TorusGrid) -> MinimizeOptions {
    MinimizeOptions::for_grid(g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn descent_is_monotone_and_residual_is_honest(seed in any::<u64>(), amp in 0.1..1.0f64) {
        let g = grid2(24, 9.0);
        let p = Params::new(1.0).unwrap();
        let init = perturb(&constant(0.0, g), amp, 4, seed).unwrap();
        let mut seen = Vec::new();
        let cp = minimize_with_observer(&init, &p, &opts(&g), |pr| seen.push(pr.action)).unwrap();
        for w in cp.history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        for w in seen.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let recomputed = gradient(&cp.field, &p).l2_norm();
        prop_assert!((cp.residual - recomputed).abs() <= 1e-12 * recomputed.max(1e-300));
        prop_assert!(cp.converged);
        prop_assert!(cp.residual <= opts(&g).grad_tol);
    }

    #[test]
    fn phase_rotation_does_not_change_the_minimum(seed in any::<u64>(), theta in 0.0..6.28f64) {
        let g = grid2(24, 4.0 * PI);
        let p = Params::new(1.0).unwrap();
        let init = perturb(&constant(0.0, g), 1.0, 2, seed).unwrap();
        let a = minimize_action(&init, &p, &opts(&g)).unwrap();
        let rotated = init.scale(Complex64::from_polar(1.0, theta));
        let b = minimize_action(&rotated, &p, &opts(&g)).unwrap();
        prop_assert!((a.report.action - b.report.action).abs() <= 1e-8 * a.report.action.abs().max(1.0));
    }
}

#[test]
fn constants_are_returned_unchanged() {
    let g = grid2(16, 5.0);
    let p = Params::new(1.0).unwrap();
    for f in [constant(0.0, g), constant(2.0, g), ComplexField::zeros(g)] {
        let cp = minimize_action(&f, &p, &opts(&g)).unwrap();
        assert_eq!(cp.field.values(), f.values());
        assert_eq!(cp.iterations, 0);
    }
}

#[test]
fn real_constant_inside_the_disk_moves() {
    let g = grid2(16, 5.0);
    let p = Params::new(1.0).unwrap();
    let f = ComplexField::constant(g, Complex64::new(0.5, 0.0));
    let cp = minimize_action(&f, &p, &opts(&g)).unwrap();
    assert_eq!(cp.classification, Classification::UnitConstant);
}

#[test]
fn zero_speed_keeps_real_data_real() {
    let g = grid2(24, 9.0);
    let p = Params::new(0.0).unwrap();
    let init = perturb(&constant(0.0, g), 0.8, 4, 11).unwrap().map(|v| Complex64::new(v.re, 0.0));
    let cp = minimize_action(&init, &p, &opts(&g)).unwrap();
    assert!(cp.report.momentum.abs() < 1e-12);
    assert!(cp.field.values().iter().all(|v| v.im.abs() < 1e-12));
}

#[test]
fn short_period_gives_constants() {
    let g = grid2(64, 3.0);
    let p = Params::new(1.0).unwrap();
    for seed in 0..5 {
        let init = perturb(&constant(0.0, g), 0.5, 4, seed).unwrap();
        let cp = minimize_action(&init, &p, &opts(&g)).unwrap();
        assert!(cp.classification.is_constant(), "seed {seed}: {}", cp.classification);
    }
}

#[test]
fn stable_plane_wave_is_recovered_after_perturbation() {
    let t = 4.0 * PI;
    let g = grid2(64, t);
    let p = Params::new(1.0).unwrap();
    let wave = plane_wave(-1, 1.0, g).unwrap();
    // stability: no negative Hessian direction at the wave
    let (_, q) = negative_direction(&wave, &p, None, &SaddleOptions::for_grid(&g));
    assert!(q > -1e-8, "quotient {q}");
    let exact = PlaneWave::new(-1, 1.0, t).unwrap().action(&g);
    let init = perturb(&wave, 1e-3, 3, 21).unwrap();
    let cp = minimize_action(&init, &p, &opts(&g)).unwrap();
    assert!((cp.report.action - exact).abs() <= 1e-6);
    assert_eq!(cp.classification, Classification::PlaneWave);
}

#[test]
fn classification_examples() {
    let g = grid2(64, 40.0);
    assert_eq!(classify(&ComplexField::zeros(g), 1e-6), Classification::ZeroConstant);
    let t = 40.0;
    let alpha = 2.0 * PI / t;
    let beta: f64 = alpha * alpha + alpha;
    let wave = ComplexField::from_fn(g, |x| Complex64::from_polar((1.0 - beta).sqrt(), alpha * x[0]));
    assert_eq!(classify(&wave, 1e-6), Classification::PlaneWave);
    let pair = VortexAnsatz::new(8.0).unwrap().field(&g).unwrap();
    assert_eq!(classify(&pair, 1e-6), Classification::Vortexful);
    let bump = ComplexField::from_fn(g, |x| Complex64::new(1.0 - 0.3 * (-((x[0] - 20.0).powi(2))).exp(), 0.0));
    assert_eq!(classify(&bump, 1e-6), Classification::OtherNonconstant);
}

#[test]
fn minimizer_from_the_vortex_pair_regression() {
    let g = grid2(256, 40.0);
    let p = Params::new(1.0).unwrap();
    let mut o = opts(&g);
    o.grad_tol = 1e-10 * 40.0;
    let (cp, row) = existence_experiment(&p, &g, &VortexAnsatz::new(8.0).unwrap(), &o).unwrap();
    assert!(cp.converged && cp.report.action < 0.0);
    assert!(!cp.classification.is_constant());
    // the pair separates across the cell and leaves one unit of winding:
    // the minimizer is the k = -1 plane wave
    assert_eq!(cp.classification, Classification::PlaneWave);
    let exact = PlaneWave::new(-1, 1.0, 40.0).unwrap().action(&g);
    assert!((cp.report.action - exact).abs() <= 1e-8 * exact.abs(), "{}", cp.report.action);
    assert_eq!(row.classification, cp.classification);
    assert_eq!(row.csv().split(',').count(), 6);
}
