mod common;

use std::f64::consts::PI;

use common::grid2;
use gptw_core::ansatz::{
    constant, perturb, plane_wave, vortex_test_function, AnsatzError, PlaneWave, VortexAnsatz,
};
use gptw_core::field::{lift, ComplexField, TorusGrid, DEFAULT_LIFT_FLOOR};
use gptw_core::functionals::{action, certify, Params};
use num_complex::Complex64;
use proptest::prelude::*;

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Phase winding along the boundary of the node square of half-width `h`
/// centered at node `(i0, j0)`, counterclockwise in (x_1, x_2).
fn loop_winding(f: &ComplexField, i0: usize, j0: usize, h: usize) -> f64 {
    let g = f.grid();
    let m = g.sizes();
    let at = |i: isize, j: isize| {
        let i = (i0 as isize + i).rem_euclid(m[0] as isize) as usize;
        let j = (j0 as isize + j).rem_euclid(m[1] as isize) as usize;
        f.values()[g.ravel(&[i, j, 0])]
    };
    let h = h as isize;
    let mut pts = Vec::new();
    for s in -h..h {
        pts.push((s, -h));
    }
    for s in -h..h {
        pts.push((h, s));
    }
    for s in (-h + 1..=h).rev() {
        pts.push((s, h));
    }
    for s in (-h + 1..=h).rev() {
        pts.push((-h, s));
    }
    let mut total = 0.0;
    for k in 0..pts.len() {
        let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
        total += wrap(at(b.0, b.1).arg() - at(a.0, a.1).arg());
    }
    total / (2.0 * PI)
}

#[test]
fn vortex_cores_carry_opposite_unit_windings() {
    let g = grid2(256, 40.0);
    let a = VortexAnsatz::new(8.0).unwrap();
    let f = vortex_test_function(&a, &g).unwrap();
    let h = g.spacing(0);
    let mut windings = Vec::new();
    for core in a.core_positions(&g) {
        let i = (core[0] / h).round() as usize;
        let j = (core[1] / h).round() as usize;
        windings.push(loop_winding(&f, i, j, 6).round() as i64);
    }
    windings.sort();
    assert_eq!(windings, vec![-1, 1]);
    // a loop enclosing both cores has no net winding
    let c = (g.sizes()[0] / 2, g.sizes()[1] / 2);
    assert!(loop_winding(&f, c.0, c.1, 70).abs() < 1e-9);
}

#[test]
fn action_of_test_field_is_negative_regression() {
    let g = grid2(256, 40.0);
    let p = Params::new(1.0).unwrap();
    let a = VortexAnsatz::new(8.0).unwrap();
    let r = action(&a.field(&g).unwrap(), &p);
    assert!(r.action < 0.0);
    // frozen value for R = 8, cutoff annulus [9.6, 14.4], core width 1
    assert!((r.action - (-16.371447390788)).abs() < 1e-8, "{}", r.action);
}

#[test]
fn action_of_test_field_is_independent_of_period() {
    let p = Params::new(1.0).unwrap();
    let a = VortexAnsatz::new(8.0).unwrap();
    // equal spacing, so the only change is the extent of the constant region
    let values: Vec<f64> = [(30.0, 192), (40.0, 256), (50.0, 320)]
        .iter()
        .map(|&(t, n)| action(&a.field(&grid2(n, t)).unwrap(), &p).action)
        .collect();
    for v in &values {
        assert!((v - values[1]).abs() <= 1e-10, "{values:?}");
    }
}

#[test]
fn support_must_fit_the_cell() {
    let a = VortexAnsatz::new(8.0).unwrap();
    assert!(matches!(
        a.field(&grid2(64, 25.0)),
        Err(AnsatzError::SupportTooLarge { .. })
    ));
    assert!(VortexAnsatz::new(1.5).is_err());
}

#[test]
fn plane_wave_examples() {
    let g = grid2(32, 2.0 * PI);
    let f = plane_wave(-1, 1.0, g).unwrap();
    let expected = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, -x[0]));
    assert!(common::max_abs_diff(&f, &expected) < 1e-14);
    assert!(action(&f, &Params::new(1.0).unwrap()).action.abs() < 1e-12);

    assert!(matches!(
        plane_wave(-1, 1.0, grid2(32, 3.0)),
        Err(AnsatzError::NoSuchSolution { .. })
    ));
    let onset = PlaneWave::onset_period(1.0);
    assert!((onset - PI * (5f64.sqrt() - 1.0)).abs() < 1e-14);
    assert!(plane_wave(-1, 1.0, grid2(32, onset * 1.001)).is_ok());
    assert!(plane_wave(-1, 1.0, grid2(32, onset * 0.999)).is_err());
}

#[test]
fn constants_have_zero_action() {
    let g = TorusGrid::cubic(3, 8, 5.0).unwrap();
    let p = Params::new(0.7).unwrap();
    for theta in [0.0, PI, 2.3] {
        let f = constant(theta, g);
        assert_eq!(action(&f, &p).action, 0.0);
        assert!(certify(&f, &p).residual < 1e-15);
    }
    assert_eq!(constant(PI, g).values()[3].re, -1.0);
}

#[test]
fn vortex_ring_smoke_test() {
    let g = TorusGrid::cubic(3, 64, 16.0).unwrap();
    let a = VortexAnsatz::new(3.0).unwrap();
    let f = a.field(&g).unwrap();
    assert!(f.is_finite());
    assert!(f.min_modulus() < 0.2);
    assert!(lift(&f, DEFAULT_LIFT_FLOOR).is_err());
    let r = action(&f, &Params::new(1.0).unwrap());
    assert!(r.momentum > 0.0 && r.kinetic > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn perturbation_norm_and_determinism(seed in any::<u64>(), amp in 0.0..3.0f64, band in 1usize..5) {
        let g = grid2(16, 7.0);
        let base = constant(0.3, g);
        let a = perturb(&base, amp, band, seed).unwrap();
        let b = perturb(&base, amp, band, seed).unwrap();
        prop_assert_eq!(a.values(), b.values());
        let norm = a.sub(&base).unwrap().l2_norm();
        prop_assert!((norm - amp * 7.0).abs() <= 1e-12 * (amp * 7.0).max(1e-300));
        if amp == 0.0 {
            prop_assert_eq!(a.values(), base.values());
        }
    }

    #[test]
    fn plane_waves_are_certified(k in -3i64..=3, c in 0.0..1.5f64, t in 8.0..20.0f64) {
        let g = grid2(64, t);
        if let Ok(f) = plane_wave(k, c, g) {
            let cert = certify(&f, &Params::new(c).unwrap());
            prop_assert!(cert.residual <= 1e-9);
            prop_assert!(cert.integral.norm() <= 1e-9);
            prop_assert!(cert.lifted.unwrap().abs() <= 1e-9);
            let expected = PlaneWave::new(k, c, t).unwrap().action(&g);
            let got = action(&f, &Params::new(c).unwrap()).action;
            prop_assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0));
        }
    }
}
