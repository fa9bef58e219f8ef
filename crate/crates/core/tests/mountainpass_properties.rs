mod common;

use std::f64::consts::PI;

use common::grid2;
use gptw_core::ansatz::{constant, perturb, VortexAnsatz};
use gptw_core::field::{ComplexField, TorusGrid};
use gptw_core::functionals::{action, hessian_apply, Params};
use gptw_core::field::l2_product;
use gptw_core::mountainpass::{
    distance_to_constants, find_saddle, init_path, path_bound, relax_path, sphere_action_floor,
    MountainPassError, Path, RelaxOptions, SaddleOptions,
};
use num_complex::Complex64;

fn small() -> (TorusGrid, VortexAnsatz, Params) {
    (grid2(96, 24.0), VortexAnsatz::new(6.0).unwrap(), Params::new(1.0).unwrap())
}

#[test]
fn straight_path_endpoints() {
    let (g, a, p) = small();
    let path = init_path(&g, &a, 9).unwrap();
    assert_eq!(path.len(), 9);
    assert!(action(&path.nodes()[0], &p).action.abs() < 1e-12);
    assert!(path.nodes()[0].values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    assert!(action(&path.nodes()[8], &p).action < 0.0);
    assert_eq!(path.nodes()[8].values(), a.field(&g).unwrap().values());
    assert!(init_path(&g, &a, 2).is_err());
    assert!(matches!(
        init_path(&grid2(32, 20.0), &a, 9),
        Err(MountainPassError::Ansatz(_))
    ));
}

#[test]
fn path_bound_is_independent_of_period() {
    let a = VortexAnsatz::new(8.0).unwrap();
    let p = Params::new(1.0).unwrap();
    let m: Vec<f64> = [(30.0, 192), (40.0, 256), (50.0, 320)]
        .iter()
        .map(|&(t, n)| path_bound(&init_path(&grid2(n, t), &a, 33).unwrap(), &p))
        .collect();
    assert!(m.iter().all(|v| (v - m[1]).abs() <= 1e-10), "{m:?}");
}

#[test]
fn relaxation_keeps_endpoints_and_lowers_gamma() {
    let (g, a, p) = small();
    let path = init_path(&g, &a, 17).unwrap();
    let m = path_bound(&path, &p);
    let out = relax_path(&path, &p, &RelaxOptions::default()).unwrap();
    let nodes = out.path.nodes();
    assert_eq!(nodes[0].values(), path.nodes()[0].values());
    assert_eq!(nodes[16].values(), path.nodes()[16].values());
    for w in out.history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(out.gamma > 0.0 && out.gamma <= m);
    assert_eq!(out.gamma, out.path.max_node(&p).1);
    // the path has to cross the sphere of radius 0.1 around the constants
    let eps = sphere_action_floor(&g, &p, 0.1, 50, 4, 3);
    assert!(eps > 0.0 && out.gamma >= eps, "gamma {} eps {eps}", out.gamma);
    // uniform arclength after reparametrization
    let s = out.path.arclength();
    let step = s[16] / 16.0;
    for j in 1..17 {
        assert!(((s[j] - s[j - 1]) - step).abs() <= 1e-6 * step);
    }
}

#[test]
fn saddle_certificate() {
    let (g, a, p) = small();
    let path = init_path(&g, &a, 17).unwrap();
    let m = path_bound(&path, &p);
    let out = relax_path(&path, &p, &RelaxOptions::default()).unwrap();
    let opts = SaddleOptions::for_grid(&g);
    let s = find_saddle(&out.path, &p, m, &opts).unwrap();
    let action_value = s.saddle.report.action;
    assert!(s.saddle.residual <= opts.grad_tol);
    assert!(action_value > 0.0 && action_value <= m + 1e-8);
    let w = &s.index_witness;
    let q = l2_product(&hessian_apply(&s.saddle.field, w, &p).unwrap(), w).unwrap() / l2_product(w, w).unwrap();
    assert!(q < 0.0);
    assert!((q - s.witness_quotient).abs() <= 1e-9 * q.abs());
    assert!(s.saddle.certificate.integral.norm() <= 1e-6);
    assert!(distance_to_constants(&s.saddle.field) > 0.1);
    // frozen regression for (c=1, T=24, R=6, 96^2, 17 nodes)
    assert!((action_value - 1.4162079404803).abs() < 1e-8, "{action_value}");
    assert_eq!(s.csv_row(1.0).split(',').count(), 10);
}

#[test]
fn path_of_constants_is_stationary() {
    let g = grid2(16, 6.0);
    let p = Params::new(1.0).unwrap();
    let nodes: Vec<ComplexField> = (0..9)
        .map(|j| {
            if j == 8 {
                constant(0.0, g)
            } else {
                constant(2.0 * PI * j as f64 / 8.0, g)
            }
        })
        .collect();
    let path = Path::new(nodes).unwrap();
    let out = relax_path(&path, &p, &RelaxOptions { max_sweeps: 20, ..Default::default() }).unwrap();
    assert!(out.gamma.abs() < 1e-12);
    for (a, b) in out.path.nodes().iter().zip(path.nodes()) {
        assert!(common::max_abs_diff(a, b) < 1e-12);
    }
}

#[test]
fn collapsed_path_is_not_a_saddle() {
    let g = grid2(32, 10.0);
    let p = Params::new(1.0).unwrap();
    let one = constant(0.0, g);
    let nodes: Vec<ComplexField> = (0..5)
        .map(|j| {
            if j == 0 || j == 4 {
                one.clone()
            } else {
                perturb(&one, 1e-3, 3, j).unwrap()
            }
        })
        .collect();
    let path = Path::new(nodes).unwrap();
    let r = find_saddle(&path, &p, 1.0, &SaddleOptions::for_grid(&g));
    assert!(matches!(r, Err(MountainPassError::NotASaddle { .. })), "{r:?}");
}

#[test]
fn path_rejects_mixed_grids() {
    let a = constant(0.0, grid2(16, 6.0));
    let b = constant(0.0, grid2(16, 7.0));
    assert!(Path::new(vec![a.clone(), b, a]).is_err());
}
