use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use super::{ComplexField, TorusGrid};

pub const DEFAULT_LIFT_FLOOR: f64 = 0.1;

/// Largest admissible disagreement (radians) between an unwrapped increment
/// and the principal-value increment on any grid edge.
const PATH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LiftError {
    #[error("modulus {min_modulus:.3e} falls below floor {floor:.3e}: field has a vortex")]
    VortexPresent { min_modulus: f64, floor: f64 },
    #[error("phase unwrapping is path dependent at node {node} (mismatch {mismatch:.3e} rad)")]
    InconsistentWinding { node: usize, mismatch: f64 },
    #[error("lift floor must be positive, got {0}")]
    BadFloor(f64),
}

/// Polar representation `rho e^{i theta}` of a vortexless field.
///
/// The phase is `theta_periodic(x) + sum_a 2 pi windings[a] x_a / T`.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub grid: TorusGrid,
    pub rho: Vec<f64>,
    pub theta_periodic: Vec<f64>,
    pub windings: Vec<i64>,
}

impl LiftResult {
    /// Linear part of the phase at node `index`.
    pub fn linear_phase(&self, index: usize) -> f64 {
        let x = self.grid.position(index);
        let t = self.grid.period();
        self.windings
            .iter()
            .enumerate()
            .map(|(a, &w)| 2.0 * PI * w as f64 * x[a] / t)
            .sum()
    }

    /// Full phase at node `index`.
    pub fn theta(&self, index: usize) -> f64 {
        self.theta_periodic[index] + self.linear_phase(index)
    }

    pub fn reconstruct(&self) -> ComplexField {
        let values = (0..self.grid.len())
            .map(|i| Complex64::from_polar(self.rho[i], self.theta(i)))
            .collect();
        ComplexField::from_raw(self.grid, values)
    }
}

fn principal(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Writes `f = rho e^{i theta}` with a continuous phase, or reports why no
/// global lifting exists on the grid.
pub fn lift(f: &ComplexField, floor: f64) -> Result<LiftResult, LiftError> {
    if !(floor > 0.0) {
        return Err(LiftError::BadFloor(floor));
    }
    let grid = *f.grid();
    let rho: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let min_modulus = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if min_modulus < floor {
        return Err(LiftError::VortexPresent { min_modulus, floor });
    }
    let phase: Vec<f64> = f.values().iter().map(|v| v.arg()).collect();
    let dim = grid.dim();
    let sizes = grid.sizes();

    // Axis-0 line through the origin, then lines of each further axis
    // starting from the already unwrapped hyperplane.
    let mut theta = vec![f64::NAN; grid.len()];
    theta[0] = phase[0];
    for axis in 0..dim {
        let stride = grid.stride(axis);
        for start in 0..grid.len() {
            let m = grid.unravel(start);
            if m[axis] != 0 || (axis + 1..dim).any(|b| m[b] != 0) {
                continue;
            }
            let mut prev = start;
            for _ in 1..sizes[axis] {
                let next = prev + stride;
                theta[next] = theta[prev] + principal(phase[next] - phase[prev]);
                prev = next;
            }
        }
    }

    let mut windings = Vec::with_capacity(dim);
    for axis in 0..dim {
        let last = (sizes[axis] - 1) * grid.stride(axis);
        let total = theta[last] + principal(phase[0] - phase[last]) - theta[0];
        windings.push((total / (2.0 * PI)).round() as i64);
    }

    for (node, &th) in theta.iter().enumerate() {
        let m = grid.unravel(node);
        for axis in 0..dim {
            let mut nm = m;
            let wrap = m[axis] + 1 == sizes[axis];
            nm[axis] = if wrap { 0 } else { m[axis] + 1 };
            let nb = grid.ravel(&nm);
            let mut step = theta[nb] - th;
            if wrap {
                step += 2.0 * PI * windings[axis] as f64;
            }
            let mismatch = (step - principal(phase[nb] - phase[node])).abs();
            if mismatch > PATH_TOLERANCE {
                return Err(LiftError::InconsistentWinding { node, mismatch });
            }
        }
    }

    let mut out = LiftResult {
        grid,
        rho,
        theta_periodic: theta,
        windings,
    };
    for i in 0..grid.len() {
        let lin = out.linear_phase(i);
        out.theta_periodic[i] -= lin;
    }
    Ok(out)
}
