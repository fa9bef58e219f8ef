mod common;

use std::f64::consts::PI;

use common::grid2;
use gptw_core::ansatz::VortexAnsatz;
use gptw_core::field::TorusGrid;
use gptw_core::functionals::Params;
use gptw_core::spectrum::{
    case1_bound, constancy_scan, dense_hessian_spectrum, hessian_spectrum_at_constant, lattice_pgm,
    poincare_constant, positivity_criterion, positivity_region, symbol_minimum, weighted_eigenvalue,
    weighted_eigenvalue_dense, Branch, ScanConfig, SpectrumError,
};
use gptw_core::ansatz::constant;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// All Hessian eigenvalues at a unit constant, from the per-mode 2x2 symbol.
fn symbol_oracle(m: usize, t: f64, c: f64) -> Vec<f64> {
    let h = m as i64 / 2;
    let mut out = Vec::new();
    for k1 in -h..h {
        for k2 in -h..h {
            let xi1 = 2.0 * PI * k1 as f64 / t;
            let xi2 = 2.0 * PI * k2 as f64 / t;
            let s = xi1 * xi1 + xi2 * xi2;
            let d1 = if k1 == -h { 0.0 } else { xi1 };
            let r = (1.0 + c * c * d1 * d1).sqrt();
            out.push(s + 1.0 - r);
            out.push(s + 1.0 + r);
        }
    }
    out.sort_by(f64::total_cmp);
    // drop the phase direction
    out.remove(out.iter().position(|v| v.abs() < 1e-14).unwrap());
    out
}

/// Spectral second-derivative matrix on `m` points, from the DFT formula.
fn second_derivative_matrix(m: usize, t: f64) -> DMatrix<f64> {
    let h = m as i64 / 2;
    DMatrix::from_fn(m, m, |j, l| {
        let mut s = 0.0;
        for k in -h..h {
            let xi = 2.0 * PI * k as f64 / t;
            s += xi * xi * (2.0 * PI * k as f64 * (j as f64 - l as f64) / m as f64).cos();
        }
        s / m as f64
    })
}

fn weighted_oracle(w: &[f64], m: usize, t: f64) -> f64 {
    let d = second_derivative_matrix(m, t);
    let n = m * m;
    let a = DMatrix::from_fn(n, n, |p, q| {
        let (i1, j1) = (p / m, p % m);
        let (i2, j2) = (q / m, q % m);
        let mut v = 0.0;
        if j1 == j2 {
            v += d[(i1, i2)];
        }
        if i1 == i2 {
            v += d[(j1, j2)];
        }
        v
    });
    let s: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |p, q| s[p] * a[(p, q)] * s[q]);
    let mut e: Vec<f64> = b.symmetric_eigen().eigenvalues.iter().cloned().collect();
    e.sort_by(f64::total_cmp);
    e[1]
}

#[test]
fn degenerate_direction_residual() {
    let g = grid2(16, 5.0);
    let p = Params::new(1.0).unwrap();
    for theta in [0.0, 1.0, PI] {
        let r = hessian_spectrum_at_constant(theta, &p, &g, 2).unwrap();
        assert!(r.degenerate_residual <= 1e-12);
    }
}

#[test]
fn iterative_spectrum_matches_symbol() {
    for (m, t, c) in [(16, 2.0 * PI, 1.0), (32, 2.0 * PI, 1.0), (16, 5.0, 0.6), (32, 11.0, 1.3)] {
        let g = grid2(m, t);
        let p = Params::new(c).unwrap();
        let r = hessian_spectrum_at_constant(0.7, &p, &g, 5).unwrap();
        let oracle = symbol_oracle(m, t, c);
        for (i, (v, _, _)) in r.smallest.iter().enumerate() {
            assert!((v - oracle[i]).abs() <= 1e-8 * oracle[i].abs(), "{m} {t} {c}: {v} vs {}", oracle[i]);
        }
        assert!(r.smallest.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!((r.analytic_min - oracle[0]).abs() <= 1e-12);
        assert_eq!(r.positive, r.smallest[0].0 > 0.0);
    }
}

#[test]
fn unit_speed_first_mode_is_lower_branch() {
    let g = grid2(16, 2.0 * PI);
    let r = hessian_spectrum_at_constant(0.0, &Params::new(1.0).unwrap(), &g, 1).unwrap();
    let (v, k, b) = &r.smallest[0];
    assert!((v - (2.0 - 2f64.sqrt())).abs() < 1e-10);
    assert_eq!(k.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1, 0]);
    assert_eq!(*b, Branch::Lower);
}

#[test]
fn dense_spectrum_matches_symbol_on_small_grid() {
    let g = grid2(8, 2.0 * PI);
    let p = Params::new(1.0).unwrap();
    let dense = dense_hessian_spectrum(&constant(0.0, g), &p).unwrap();
    let oracle = symbol_oracle(8, 2.0 * PI, 1.0);
    assert!(dense[0].abs() < 1e-12);
    for (d, o) in dense[1..].iter().zip(&oracle) {
        assert!((d - o).abs() < 1e-10);
    }
    assert!(matches!(
        dense_hessian_spectrum(&constant(0.0, grid2(18, 1.0)), &p),
        Err(SpectrumError::TooLargeForDense { .. })
    ));
}

#[test]
fn zero_speed_decouples() {
    for t in [2.0, 5.0, 9.0] {
        let g = grid2(16, t);
        let r = hessian_spectrum_at_constant(0.0, &Params::new(0.0).unwrap(), &g, 1).unwrap();
        let expected = f64::min(2.0, (2.0 * PI / t).powi(2));
        assert!((r.smallest[0].0 - expected).abs() <= 1e-9 * expected);
    }
}

#[test]
fn positivity_changes_sign_between_speeds() {
    let g = grid2(16, 2.0 * PI);
    let at = |c: f64| hessian_spectrum_at_constant(0.0, &Params::new(c).unwrap(), &g, 1).unwrap();
    assert!(at(1.7).positive);
    assert!(!at(1.8).positive);
    assert!(positivity_criterion(1.7, 2.0 * PI) && !positivity_criterion(1.8, 2.0 * PI));
}

#[test]
fn positivity_lattice_and_image() {
    let speeds = [0.5, 1.5, 2.5];
    let periods = [2.0, 6.0, 12.0];
    let flags = positivity_region(&speeds, &periods, 16).unwrap();
    for (i, &c) in speeds.iter().enumerate() {
        for (j, &t) in periods.iter().enumerate() {
            assert_eq!(flags[i][j], positivity_criterion(c, t), "c {c} T {t}");
        }
    }
    let img = lattice_pgm(&flags);
    assert_eq!(img.len(), "P5\n3 3\n255\n".len() + 9);
}

#[test]
fn subsonic_limit() {
    let c = 1.4;
    let p = Params::new(c).unwrap();
    let mut previous = f64::INFINITY;
    for t in [2.0 * PI, 4.0 * PI, 8.0 * PI] {
        let g = grid2(32, t);
        let r = hessian_spectrum_at_constant(0.0, &p, &g, 1).unwrap();
        let v = r.smallest[0].0;
        assert!(v > 0.0 && v < previous);
        assert!((v - symbol_minimum(&g, c)).abs() <= 1e-8 * v);
        // bound from the first mode of the lower branch
        let xi2 = (2.0 * PI / t).powi(2);
        let lower = xi2 + 1.0 - (1.0 + c * c * xi2).sqrt();
        assert!(v >= lower * (1.0 - 1e-8));
        previous = v;
    }
}

#[test]
fn poincare_examples() {
    let pc = poincare_constant(&grid2(16, 2.0 * PI));
    assert!((pc.lambda - 1.0).abs() < 1e-14 && (pc.c_t - 0.25).abs() < 1e-14);
    assert!((poincare_constant(&grid2(16, PI)).lambda - 4.0).abs() < 1e-13);
    for t in [0.3, 1.0, 7.0, 30.0] {
        assert_eq!(
            poincare_constant(&grid2(16, t / 2.0)).lambda,
            4.0 * poincare_constant(&grid2(16, t)).lambda
        );
    }
    let g3 = TorusGrid::cubic(3, 8, 3.0).unwrap();
    assert!((poincare_constant(&g3).lambda - (2.0 * PI / 3.0).powi(2)).abs() < 1e-13);
}

#[test]
fn weighted_eigenvalue_examples() {
    let t = 7.0;
    let g = grid2(16, t);
    let lambda1 = (2.0 * PI / t).powi(2);
    let one = weighted_eigenvalue(&vec![1.0; g.len()], &g).unwrap();
    assert!((one - lambda1).abs() <= 1e-12 * lambda1);
    let two = weighted_eigenvalue(&vec![2.0; g.len()], &g).unwrap();
    assert!((two - lambda1 / 2.0).abs() <= 1e-12 * lambda1);
    let half = weighted_eigenvalue(&vec![0.5; g.len()], &g).unwrap();
    let w: Vec<f64> = (0..g.len())
        .map(|i| 1.0 + 0.4 * (2.0 * PI * g.position(i)[0] / t).sin())
        .collect();
    let v = weighted_eigenvalue(&w, &g).unwrap();
    let oracle = weighted_oracle(&w, 16, t);
    assert!((v - oracle).abs() <= 1e-10 * oracle, "{v} vs {oracle}");
    assert!(v > two + 1e-3 && v < half);
    assert!((weighted_eigenvalue_dense(&w, &g).unwrap() - oracle).abs() <= 1e-10 * oracle);
    let mut bad = w.clone();
    bad[3] = 0.4;
    assert!(matches!(
        weighted_eigenvalue(&bad, &g),
        Err(SpectrumError::WeightOutOfRange { node: 3, .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weighted_eigenvalue_is_monotone(weights in prop::collection::vec(0.5..=2.0f64, 144)) {
        let g = TorusGrid::new(&[12, 12], 4.0).unwrap();
        let v = weighted_eigenvalue(&weights, &g).unwrap();
        let two = (2.0 * PI / 4.0f64).powi(2) / 2.0;
        prop_assert!(v >= two - 1e-10);
        let oracle = weighted_oracle(&weights, 12, 4.0);
        prop_assert!((v - oracle).abs() <= 1e-9 * oracle);
    }
}

#[test]
fn scan_brackets_the_onset() {
    let mut cfg = ScanConfig::new(1.0, vec![1.5, 3.5, 4.25, 8.0]);
    cfg.starts = 6;
    cfg.ansatz = Some(VortexAnsatz::new(2.0).unwrap());
    let r = constancy_scan(&cfg).unwrap();
    let row = |t: f64| r.rows.iter().find(|x| x.period == t).unwrap();
    assert!(row(1.5).all_constant);
    assert!(row(3.5).all_constant);
    assert!(!row(4.25).all_constant);
    assert!(!row(8.0).all_constant);
    assert_eq!(r.empirical_onset, Some(3.5));
    assert_eq!(r.first_nonconstant, Some(4.25));
    let onset = r.empirical_onset.unwrap();
    assert!(r.case1_bound <= onset && onset <= r.plane_wave_onset + 0.75);
    assert!((r.case1_bound - case1_bound(1.0)).abs() == 0.0);
    assert_eq!(r.csv_rows().len(), 4);
}

#[test]
fn scan_is_deterministic() {
    let mut cfg = ScanConfig::new(0.5, vec![2.0, 6.0]);
    cfg.starts = 4;
    let a = constancy_scan(&cfg).unwrap();
    let b = constancy_scan(&cfg).unwrap();
    assert_eq!(a, b);
}
