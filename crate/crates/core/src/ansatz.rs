//! Initial fields: constants, exact plane waves, the compactly supported
//! vortex test function and seeded random perturbations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::field::{transform_inverse, ComplexField, SpectralField, TorusGrid};

#[derive(Debug, Error, PartialEq)]
pub enum AnsatzError {
    #[error("no plane wave with k = {k}: amplitude^2 = 1 - beta = {rho2:.6} <= 0")]
    NoSuchSolution { k: i64, rho2: f64 },
    #[error("support diameter {diameter} does not fit in period {period}")]
    SupportTooLarge { diameter: f64, period: f64 },
    #[error("invalid vortex ansatz: {0}")]
    InvalidAnsatz(String),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
}

/// `e^{i theta}` everywhere.
pub fn constant(theta: f64, grid: TorusGrid) -> ComplexField {
    ComplexField::constant(grid, Complex64::from_polar(1.0, theta))
}

/// Dispersion data of the plane wave `rho e^{i alpha x_1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
}

impl PlaneWave {
    /// `alpha = 2 pi k / T`, `beta = alpha^2 + c alpha`, `rho^2 = 1 - beta`.
    pub fn new(k: i64, c: f64, period: f64) -> Result<Self, AnsatzError> {
        let alpha = 2.0 * PI * k as f64 / period;
        let beta = alpha * alpha + c * alpha;
        let rho2 = 1.0 - beta;
        if rho2 <= 0.0 {
            return Err(AnsatzError::NoSuchSolution { k, rho2 });
        }
        Ok(Self {
            alpha,
            beta,
            rho: rho2.sqrt(),
        })
    }

    /// Closed-form action `T^N (beta/2 - beta^2/4)`.
    pub fn action(&self, grid: &TorusGrid) -> f64 {
        grid.volume() * (0.5 * self.beta - 0.25 * self.beta * self.beta)
    }

    /// Smallest period at which the `k = -1` branch exists for speed `c`.
    pub fn onset_period(c: f64) -> f64 {
        PI * ((c * c + 4.0).sqrt() - c)
    }
}

/// Exact traveling wave `rho e^{i alpha x_1}`.
pub fn plane_wave(k: i64, c: f64, grid: TorusGrid) -> Result<ComplexField, AnsatzError> {
    let w = PlaneWave::new(k, c, grid.period())?;
    Ok(ComplexField::from_fn(grid, |x| {
        Complex64::from_polar(w.rho, w.alpha * x[0])
    }))
}

/// Vortex/antivortex pair (N = 2) or vortex ring (N = 3) blended to the
/// constant 1 outside a ball.
///
/// In two dimensions the cores sit at `x_2 = +-R` on the line `x_1 = 0`
/// relative to the cell center; in three dimensions the ring of radius `R`
/// lies in the plane `x_1 = 0` with axis `x_1`. Either way the configuration
/// travels along `x_1` and carries positive momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexAnsatz {
    pub r: f64,
    pub core_width: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
}

impl VortexAnsatz {
    /// Default core width 1 and cutoff annulus `[1.2 R, 1.8 R]`.
    pub fn new(r: f64) -> Result<Self, AnsatzError> {
        Self {
            r,
            core_width: 1.0,
            cutoff_inner: 1.2 * r,
            cutoff_outer: 1.8 * r,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, AnsatzError> {
        let bad = |m: String| Err(AnsatzError::InvalidAnsatz(m));
        if !(self.r >= 2.0) || !self.r.is_finite() {
            return bad(format!("R must be >= 2, got {}", self.r));
        }
        if !(self.core_width > 0.0) {
            return bad(format!("core width must be positive, got {}", self.core_width));
        }
        if !(self.cutoff_inner > self.r && self.cutoff_outer > self.cutoff_inner) {
            return bad(format!(
                "need R < cutoff_inner < cutoff_outer, got {} / {} / {}",
                self.r, self.cutoff_inner, self.cutoff_outer
            ));
        }
        Ok(self)
    }

    pub fn support_diameter(&self) -> f64 {
        2.0 * self.cutoff_outer
    }

    pub fn fits(&self, grid: &TorusGrid) -> bool {
        grid.period() > self.support_diameter()
    }

    /// Node closest to the cell center, so that grids with equal spacing
    /// sample the same configuration.
    fn center(&self, grid: &TorusGrid) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (a, ca) in c.iter_mut().enumerate().take(grid.dim()) {
            *ca = (grid.sizes()[a] / 2) as f64 * grid.spacing(a);
        }
        c
    }

    /// Value of the unblended ansatz at offset `y` from the center.
    fn core_value(&self, y: &[f64]) -> (f64, f64) {
        // (axial, transverse) coordinates of the two-dimensional section.
        let axial = y[0];
        let transverse = if y.len() == 2 {
            y[1]
        } else {
            (y[1] * y[1] + y[2] * y[2]).sqrt()
        };
        let r = self.r;
        let d_plus = axial.hypot(transverse - r);
        let d_minus = axial.hypot(transverse + r);
        let modulus = core_profile(d_plus / self.core_width) * core_profile(d_minus / self.core_width);
        // Branch cuts run from each core toward -x_2 and cancel beyond the
        // lower core, leaving the 2 pi jump on the segment between them.
        let phase = axial.atan2(transverse - r) - axial.atan2(transverse + r);
        (modulus, phase)
    }

    /// `1 + w_R` sampled on `grid`.
    pub fn field(&self, grid: &TorusGrid) -> Result<ComplexField, AnsatzError> {
        if !self.fits(grid) {
            return Err(AnsatzError::SupportTooLarge {
                diameter: self.support_diameter(),
                period: grid.period(),
            });
        }
        let center = self.center(grid);
        let dim = grid.dim();
        Ok(ComplexField::from_fn(*grid, |x| {
            let mut y = [0.0; 3];
            for a in 0..dim {
                y[a] = x[a] - center[a];
            }
            let dist = y[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            let s = smooth_cutoff(dist, self.cutoff_inner, self.cutoff_outer);
            if s == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let (modulus, phase) = self.core_value(&y[..dim]);
            Complex64::from_polar(1.0 + s * (modulus - 1.0), s * phase)
        }))
    }

    /// `w_R` alone.
    pub fn perturbation(&self, grid: &TorusGrid) -> Result<ComplexField, AnsatzError> {
        Ok(self.field(grid)?.map(|v| v - 1.0))
    }

    /// Positions of the vortex cores (N = 2 only).
    pub fn core_positions(&self, grid: &TorusGrid) -> Vec<[f64; 2]> {
        let c = self.center(grid);
        vec![[c[0], c[1] + self.r], [c[0], c[1] - self.r]]
    }
}

/// `q(r) = r / sqrt(r^2 + 2)`, the Pade approximant of the vortex amplitude.
pub fn core_profile(r: f64) -> f64 {
    r / (r * r + 2.0).sqrt()
}

/// Smooth transition equal to 1 below `inner` and to 0 above `outer`,
/// infinitely differentiable everywhere.
pub fn smooth_cutoff(r: f64, inner: f64, outer: f64) -> f64 {
    if r <= inner {
        return 1.0;
    }
    if r >= outer {
        return 0.0;
    }
    let t = (r - inner) / (outer - inner);
    let a = (-1.0 / (1.0 - t)).exp();
    let b = (-1.0 / t).exp();
    a / (a + b)
}

/// `vortex_test_function` under its operational name.
pub fn vortex_test_function(a: &VortexAnsatz, grid: &TorusGrid) -> Result<ComplexField, AnsatzError> {
    a.field(grid)
}

/// Adds a random field built from the modes with every `|k_a| <= band`,
/// rescaled so that its L2 norm equals `amplitude * T^{N/2}`.
pub fn perturb(
    f: &ComplexField,
    amplitude: f64,
    band: usize,
    seed: u64,
) -> Result<ComplexField, AnsatzError> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(AnsatzError::InvalidPerturbation(format!(
            "amplitude must be >= 0, got {amplitude}"
        )));
    }
    if band < 1 {
        return Err(AnsatzError::InvalidPerturbation("band must be >= 1".into()));
    }
    if amplitude == 0.0 {
        return Ok(f.clone());
    }
    let noise = band_limited_noise(f.grid(), band, seed);
    let scale = amplitude * f.grid().volume().sqrt() / noise.l2_norm();
    Ok(f.add_scaled(scale, &noise).expect("same grid"))
}

/// Unnormalized band-limited complex noise, deterministic per seed.
pub fn band_limited_noise(grid: &TorusGrid, band: usize, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = band as u64;
    let coeffs = (0..grid.len())
        .map(|i| {
            let m = grid.unravel(i);
            let inside = (0..grid.dim()).all(|a| grid.wavenumber(a, m[a]).unsigned_abs() <= band);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if inside {
                Complex64::new(re, im)
            } else {
                Complex64::default()
            }
        })
        .collect();
    transform_inverse(&SpectralField::from_raw(*grid, coeffs))
}
