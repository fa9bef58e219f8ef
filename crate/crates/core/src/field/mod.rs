//! Torus discretization, spectral calculus and lifting diagnostics.

mod grid;
pub mod io;
mod lift;
pub(crate) mod transform;

use num_complex::Complex64;
use thiserror::Error;

pub use grid::TorusGrid;
pub use lift::{lift, LiftError, LiftResult, DEFAULT_LIFT_FLOOR};

use transform::{fft_in_place, Direction};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite value at node {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    BadAxis { axis: usize, dim: usize },
}

/// Complex samples of a field at the nodes of a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

/// Fourier coefficients of a [`ComplexField`]; slot layout follows the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Unchecked construction for values produced by internal arithmetic.
    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: TorusGrid, value: Complex64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, Complex64::default())
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| f(&grid.position(i)[..dim]))
            .collect();
        Self::from_raw(grid, values)
    }

    /// Real field with zero imaginary part.
    pub fn from_real(grid: TorusGrid, values: &[f64]) -> Result<Self, FieldError> {
        Self::new(grid, values.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &ComplexField) -> Result<Self, FieldError> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * alpha)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self, FieldError> {
        self.add_scaled(-1.0, other)
    }

    /// Cyclic translation by `shift` nodes along `axis`.
    pub fn roll(&self, axis: usize, shift: isize) -> Self {
        let n = self.grid.sizes()[axis] as isize;
        let mut out = vec![Complex64::default(); self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            let mut m = self.grid.unravel(i);
            m[axis] = (m[axis] as isize + shift).rem_euclid(n) as usize;
            out[self.grid.ravel(&m)] = *v;
        }
        Self::from_raw(self.grid, out)
    }

    /// Largest modulus.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest modulus.
    pub fn min_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    /// `(integral |f|^2)^(1/2)` with the rectangle rule.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Mean value over the torus.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// Interleaved `(re, im)` view used by the linear-algebra kernels.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.re, v.im]).collect()
    }

    pub fn from_real_vec(grid: TorusGrid, data: &[f64]) -> Result<Self, FieldError> {
        if data.len() != 2 * grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: 2 * grid.len(),
                got: data.len(),
            });
        }
        Ok(Self::from_raw(
            grid,
            data.chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        ))
    }
}

impl SpectralField {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn from_raw(grid: TorusGrid, coeffs: Vec<Complex64>) -> Self {
        Self { grid, coeffs }
    }

    /// Coefficient of the integer wave vector `k` (zero if not represented).
    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        let mut slots = [0usize; 3];
        for (a, &ka) in k.iter().enumerate().take(self.grid.dim()) {
            match self.grid.slot(a, ka) {
                Some(s) => slots[a] = s,
                None => return Complex64::default(),
            }
        }
        self.coeffs[self.grid.ravel(&slots)]
    }
}

/// Fourier coefficients normalized so that mode 0 is the mean of `f`.
pub fn transform_forward(f: &ComplexField) -> SpectralField {
    let mut coeffs = f.values.clone();
    fft_in_place(&f.grid, &mut coeffs, Direction::Forward);
    SpectralField::from_raw(f.grid, coeffs)
}

pub fn transform_inverse(s: &SpectralField) -> ComplexField {
    let mut values = s.coeffs.clone();
    fft_in_place(&s.grid, &mut values, Direction::Inverse);
    ComplexField::from_raw(s.grid, values)
}

/// Partial derivative along `axis` (0-based): mode `k` is multiplied by
/// `i 2 pi k_axis / T`, and the Nyquist slot is zeroed.
pub fn spectral_derivative(f: &ComplexField, axis: usize) -> Result<ComplexField, FieldError> {
    if axis >= f.grid.dim() {
        return Err(FieldError::BadAxis {
            axis,
            dim: f.grid.dim(),
        });
    }
    let mut s = transform_forward(f);
    let symbol = transform::derivative_symbol(&f.grid, axis);
    for (c, xi) in s.coeffs.iter_mut().zip(symbol) {
        *c *= Complex64::new(0.0, xi);
    }
    Ok(transform_inverse(&s))
}

/// Spectral Laplacian (symbol `-|xi|^2`).
pub fn laplacian(f: &ComplexField) -> ComplexField {
    let mut s = transform_forward(f);
    let symbol = transform::laplacian_symbol(&f.grid);
    for (c, k2) in s.coeffs.iter_mut().zip(symbol) {
        *c *= -k2;
    }
    transform_inverse(&s)
}

/// Spatial gradient, one field per axis.
pub fn gradient_components(f: &ComplexField) -> Vec<ComplexField> {
    (0..f.grid.dim())
        .map(|a| spectral_derivative(f, a).expect("axis in range"))
        .collect()
}

/// `integral a . b` where `a . b = Re(a) Re(b) + Im(a) Im(b)`.
pub fn l2_product(a: &ComplexField, b: &ComplexField) -> Result<f64, FieldError> {
    a.grid.check_same(&b.grid)?;
    Ok(real_dot(&a.values, &b.values) * a.grid.cell_volume())
}

/// `integral grad a . grad b + a . b`.
pub fn h1_product(a: &ComplexField, b: &ComplexField) -> Result<f64, FieldError> {
    a.grid.check_same(&b.grid)?;
    let da = gradient_components(a);
    let db = gradient_components(b);
    let mut total = l2_product(a, b)?;
    for (x, y) in da.iter().zip(&db) {
        total += l2_product(x, y)?;
    }
    Ok(total)
}

pub(crate) fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: TorusGrid, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_fn(grid, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn constant_has_only_mean_mode() {
        let g = TorusGrid::cubic(2, 8, 3.0).unwrap();
        let s = transform_forward(&ComplexField::constant(g, Complex64::new(1.0, 0.0)));
        assert!((s.coefficient(&[0, 0]) - 1.0).norm() < 1e-15);
        let rest: f64 = s.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn pure_mode_maps_to_single_coefficient() {
        for sizes in [vec![8, 12], vec![8, 8, 10]] {
            let g = TorusGrid::new(&sizes, 5.0).unwrap();
            let t = g.period();
            let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0] / t));
            let s = transform_forward(&f);
            let mut k = vec![0i64; g.dim()];
            k[0] = 1;
            assert!((s.coefficient(&k) - 1.0).norm() < 1e-13);
            let total: f64 = s.coeffs().iter().map(|c| c.norm()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_random_field() {
        let g = TorusGrid::cubic(2, 16, 2.0).unwrap();
        let f = random_field(g, 7);
        let back = transform_inverse(&transform_forward(&f));
        let err = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(err <= 1e-12, "round trip error {err}");
    }

    #[test]
    fn derivative_of_constant_and_plane_wave() {
        let g = TorusGrid::cubic(2, 16, 3.0).unwrap();
        let d = spectral_derivative(&ComplexField::constant(g, Complex64::new(2.0, -1.0)), 1).unwrap();
        assert!(d.sup_norm() < 1e-14);

        let t = g.period();
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0] / t));
        let d = spectral_derivative(&f, 0).unwrap();
        let expect = f.scale(Complex64::new(0.0, 2.0 * PI / t));
        assert!(d.sub(&expect).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn derivative_of_sine_matches_cosine() {
        let g = TorusGrid::cubic(2, 32, 7.0).unwrap();
        let t = g.period();
        let w = 2.0 * PI / t;
        let f = ComplexField::from_fn(g, |x| Complex64::new((w * x[0]).sin(), 0.0));
        let expect = ComplexField::from_fn(g, |x| Complex64::new(w * (w * x[0]).cos(), 0.0));
        let d = spectral_derivative(&f, 0).unwrap();
        let err = d.sub(&expect).unwrap().sup_norm() / expect.sup_norm();
        assert!(err <= 1e-12, "relative error {err}");
    }

    #[test]
    fn bad_axis_is_rejected() {
        let g = TorusGrid::cubic(2, 8, 1.0).unwrap();
        assert!(matches!(
            spectral_derivative(&ComplexField::zeros(g), 2),
            Err(FieldError::BadAxis { .. })
        ));
    }

    #[test]
    fn l2_products_of_constants() {
        for (dim, t) in [(2, 2.5), (3, 1.5)] {
            let g = TorusGrid::cubic(dim, 8, t).unwrap();
            let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
            let i = ComplexField::constant(g, Complex64::new(0.0, 1.0));
            let v = l2_product(&one, &one).unwrap();
            assert!((v - t.powi(dim as i32)).abs() < 1e-12);
            assert_eq!(l2_product(&one, &i).unwrap(), 0.0);
        }
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = ComplexField::zeros(TorusGrid::cubic(2, 8, 1.0).unwrap());
        let b = ComplexField::zeros(TorusGrid::cubic(2, 8, 2.0).unwrap());
        assert!(matches!(l2_product(&a, &b), Err(FieldError::GridMismatch)));
    }

    #[test]
    fn h1_product_of_plane_wave() {
        let g = TorusGrid::cubic(2, 16, 4.0).unwrap();
        let w = 2.0 * PI * 2.0 / 4.0;
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, w * x[1]));
        let v = h1_product(&f, &f).unwrap();
        assert!((v - (1.0 + w * w) * 16.0).abs() < 1e-10);
    }

    #[test]
    fn new_rejects_nonfinite_and_wrong_length() {
        let g = TorusGrid::cubic(2, 8, 1.0).unwrap();
        assert!(ComplexField::new(g, vec![Complex64::default(); 3]).is_err());
        let mut v = vec![Complex64::default(); 64];
        v[5] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(ComplexField::new(g, v), Err(FieldError::NonFinite(5))));
    }
}
