//! Inexact Newton iteration on the squared gradient norm.

use crate::field::{l2_product, ComplexField};
use crate::functionals::{gradient, hessian_apply, Params};
use crate::linalg;
use crate::minimize::precondition;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Relative tolerance of the inner MINRES solve.
    pub minres_tol: f64,
    pub minres_max_iters: usize,
}

impl NewtonOptions {
    pub fn with_tol(grad_tol: f64) -> Self {
        Self {
            grad_tol,
            max_iters: 200,
            minres_tol: 1e-4,
            minres_max_iters: 500,
        }
    }
}

/// Best iterate of a refinement that did not reach its tolerance.
#[derive(Debug, Clone)]
pub struct NewtonFailure {
    pub field: ComplexField,
    pub residual: f64,
    pub iterations: usize,
}

/// Drives `||gradient||_{L2}` below `grad_tol` from `init`.
///
/// Directions solve `H d = -g` by MINRES preconditioned with `(1 - Lap)^{-1}`;
/// when that direction does not reduce `||g||^2` the direction `-H g` is used
/// instead. Converges to the critical point nearest `init`, whatever its index.
pub fn refine_critical_point(
    init: &ComplexField,
    p: &Params,
    opts: &NewtonOptions,
) -> Result<(ComplexField, usize), NewtonFailure> {
    let grid = *init.grid();
    let mut f = init.clone();
    let mut g = gradient(&f, p);
    let mut r = g.l2_norm();
    let helm = |x: &[f64]| -> Vec<f64> {
        precondition(&ComplexField::from_real_vec(grid, x).expect("length")).to_real_vec()
    };
    let fail = |f: ComplexField, residual: f64, iterations: usize| NewtonFailure {
        field: f,
        residual,
        iterations,
    };
    for it in 0..opts.max_iters {
        if r <= opts.grad_tol {
            return Ok((f, it));
        }
        let base = f.clone();
        let h = move |x: &[f64]| -> Vec<f64> {
            let d = ComplexField::from_real_vec(grid, x).expect("length");
            hessian_apply(&base, &d, p).expect("same grid").to_real_vec()
        };
        let rhs: Vec<f64> = g.to_real_vec().iter().map(|v| -v).collect();
        let sol = linalg::minres(&h, Some(&helm), &rhs, opts.minres_tol, opts.minres_max_iters);
        let newton = ComplexField::from_real_vec(grid, &sol.x).expect("length");
        let mut next = None;
        let mut t = 1.0;
        for _ in 0..30 {
            let trial = f.add_scaled(t, &newton).expect("same grid");
            let tg = gradient(&trial, p);
            let tr = tg.l2_norm();
            if tr.is_finite() && tr * tr <= (1.0 - 1e-4 * t) * r * r {
                next = Some((trial, tg, tr));
                break;
            }
            t *= 0.5;
        }
        if next.is_none() {
            let hg = hessian_apply(&f, &g, p).expect("same grid");
            let hhg = hessian_apply(&f, &hg, p).expect("same grid");
            let denom = l2_product(&hhg, &hhg).expect("same grid");
            let mut t = if denom > 0.0 {
                l2_product(&g, &hhg).expect("same grid") / denom
            } else {
                0.0
            };
            for _ in 0..40 {
                if t <= 0.0 {
                    break;
                }
                let trial = f.add_scaled(-t, &hg).expect("same grid");
                let tg = gradient(&trial, p);
                let tr = tg.l2_norm();
                if tr.is_finite() && tr < r {
                    next = Some((trial, tg, tr));
                    break;
                }
                t *= 0.5;
            }
        }
        match next {
            Some((nf, ng, nr)) => {
                f = nf;
                g = ng;
                r = nr;
            }
            None => return Err(fail(f, r, it)),
        }
    }
    if r <= opts.grad_tol {
        Ok((f, opts.max_iters))
    } else {
        Err(fail(f, r, opts.max_iters))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{perturb, plane_wave};
    use crate::field::TorusGrid;

    #[test]
    fn recovers_a_perturbed_plane_wave() {
        let g = TorusGrid::cubic(2, 32, 4.0 * std::f64::consts::PI).unwrap();
        let p = Params::new(1.0).unwrap();
        let exact = plane_wave(-1, 1.0, g).unwrap();
        let start = perturb(&exact, 1e-3, 2, 3).unwrap();
        let (f, _) = refine_critical_point(&start, &p, &NewtonOptions::with_tol(1e-11)).unwrap();
        assert!(gradient(&f, &p).l2_norm() <= 1e-11);
    }
}
