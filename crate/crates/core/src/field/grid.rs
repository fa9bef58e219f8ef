use std::f64::consts::PI;

use super::FieldError;

/// Uniform discretization of the cube `[0, T]^N` with periodic identification.
///
/// Nodes are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    sizes: [usize; 3],
    period: f64,
}

impl TorusGrid {
    pub fn new(sizes: &[usize], period: f64) -> Result<Self, FieldError> {
        if !(2..=3).contains(&sizes.len()) {
            return Err(FieldError::InvalidGrid(format!(
                "dimension must be 2 or 3, got {}",
                sizes.len()
            )));
        }
        for &m in sizes {
            if m < 8 || m % 2 != 0 {
                return Err(FieldError::InvalidGrid(format!(
                    "points per axis must be even and >= 8, got {m}"
                )));
            }
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(FieldError::InvalidGrid(format!(
                "period must be positive, got {period}"
            )));
        }
        let mut s = [1usize; 3];
        s[..sizes.len()].copy_from_slice(sizes);
        Ok(Self {
            dim: sizes.len(),
            sizes: s,
            period,
        })
    }

    /// Grid with `points` nodes along each of `dim` axes.
    pub fn cubic(dim: usize, points: usize, period: f64) -> Result<Self, FieldError> {
        Self::new(&vec![points; dim], period)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes[..self.dim]
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period / self.sizes[axis] as f64
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.sizes().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Rectangle-rule quadrature weight `prod T / M_i`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// `T^N`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Distance between consecutive nodes of `axis` in the flat index.
    pub fn stride(&self, axis: usize) -> usize {
        self.sizes[axis + 1..self.dim].iter().product()
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut index: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = index % self.sizes[axis];
            index /= self.sizes[axis];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.sizes[a] + multi[a])
    }

    /// Physical coordinates of a node.
    pub fn position(&self, index: usize) -> [f64; 3] {
        let m = self.unravel(index);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = m[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Signed wave number `k in [-M/2, M/2)` of storage slot `j` along `axis`.
    pub fn wavenumber(&self, axis: usize, j: usize) -> i64 {
        let m = self.sizes[axis] as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    /// Storage slot of a signed wave number, if it is represented on the grid.
    pub fn slot(&self, axis: usize, k: i64) -> Option<usize> {
        let m = self.sizes[axis] as i64;
        if k < -m / 2 || k >= m / 2 {
            return None;
        }
        Some(k.rem_euclid(m) as usize)
    }

    pub fn is_nyquist(&self, axis: usize, j: usize) -> bool {
        j == self.sizes[axis] / 2
    }

    /// Angular wave number `2 pi k / T`.
    pub fn angular(&self, axis: usize, j: usize) -> f64 {
        2.0 * PI * self.wavenumber(axis, j) as f64 / self.period
    }

    /// Same discretization at a different period.
    pub fn with_period(&self, period: f64) -> Result<Self, FieldError> {
        Self::new(self.sizes(), period)
    }

    pub(crate) fn check_same(&self, other: &TorusGrid) -> Result<(), FieldError> {
        if self == other {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }
}
