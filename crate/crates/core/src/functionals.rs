//! Energy, momentum and action of a field, together with the first and second
//! variations of the action and the identities satisfied by exact solutions.
//!
//! With `a . b = Re(a) Re(b) + Im(a) Im(b)`:
//!
//! ```text
//! E(psi) = 1/2 int |grad psi|^2 + 1/4 int (1 - |psi|^2)^2
//! P(psi) = 1/2 int (i d1 psi) . psi
//! I(psi) = E(psi) - c P(psi)
//! ```
//!
//! The gradient is taken in the L2 inner product, so that it coincides with
//! `-(i c d1 psi + Lap psi + (1 - |psi|^2) psi)`, the residual of the profile
//! equation.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::transform::{derivative_symbol, laplacian_symbol};
use crate::field::{
    lift, spectral_derivative, transform_forward, transform_inverse, ComplexField, FieldError,
    SpectralField, TorusGrid, DEFAULT_LIFT_FLOOR,
};

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("wave speed must be finite and >= 0, got {0}")]
    Speed(f64),
    #[error("tolerance {name} must be positive, got {value}")]
    Tolerance { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Wave speed `c`.
    pub c: f64,
    pub grad_tol: f64,
    pub cert_tol: f64,
    /// Apply the 2/3 rule to the cubic term of the gradient and Hessian.
    pub dealias: bool,
}

impl Params {
    pub fn new(c: f64) -> Result<Self, ParamsError> {
        Self {
            c,
            grad_tol: 1e-8,
            cert_tol: 1e-6,
            dealias: false,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, ParamsError> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(ParamsError::Speed(self.c));
        }
        for (name, value) in [("grad_tol", self.grad_tol), ("cert_tol", self.cert_tol)] {
            if !(value > 0.0) {
                return Err(ParamsError::Tolerance { name, value });
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionReport {
    pub kinetic: f64,
    pub potential: f64,
    pub momentum: f64,
    pub action: f64,
}

/// Spectral weights shared by the quadratic terms.
struct Symbols {
    lap: Vec<f64>,
    d1: Vec<f64>,
}

impl Symbols {
    fn new(grid: &TorusGrid) -> Self {
        Self {
            lap: laplacian_symbol(grid),
            d1: derivative_symbol(grid, 0),
        }
    }
}

/// `(1/2 int grad a . grad b, 1/2 int (i d1 a) . b)` from spectral data.
fn quadratic_pair(sym: &Symbols, a: &SpectralField, b: &SpectralField) -> (f64, f64) {
    let vol = a.grid().volume();
    let mut kin = 0.0;
    let mut mom = 0.0;
    for ((x, y), (k2, k1)) in a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .zip(sym.lap.iter().zip(&sym.d1))
    {
        let re = x.re * y.re + x.im * y.im;
        kin += k2 * re;
        mom -= k1 * re;
    }
    (0.5 * vol * kin, 0.5 * vol * mom)
}

fn potential_density(v: Complex64) -> f64 {
    let s = 1.0 - v.norm_sqr();
    0.25 * s * s
}

/// Kinetic `1/2 int |grad f|^2` and potential `1/4 int (1-|f|^2)^2` energies.
pub fn energy(f: &ComplexField) -> (f64, f64) {
    let s = transform_forward(f);
    let (kin, _) = quadratic_pair(&Symbols::new(f.grid()), &s, &s);
    (kin, potential(f))
}

fn potential(f: &ComplexField) -> f64 {
    f.values().iter().map(|&v| potential_density(v)).sum::<f64>() * f.grid().cell_volume()
}

/// First component of the momentum, `1/2 int (i d1 f) . f`.
pub fn momentum(f: &ComplexField) -> f64 {
    let s = transform_forward(f);
    quadratic_pair(&Symbols::new(f.grid()), &s, &s).1
}

pub fn action(f: &ComplexField, p: &Params) -> ActionReport {
    let s = transform_forward(f);
    let (kinetic, momentum) = quadratic_pair(&Symbols::new(f.grid()), &s, &s);
    let potential = potential(f);
    ActionReport {
        kinetic,
        potential,
        momentum,
        action: kinetic + potential - p.c * momentum,
    }
}

/// Applies the linear part `-Lap - c i d1` of the gradient in spectral space.
fn linear_part(f: &ComplexField, c: f64) -> ComplexField {
    let sym = Symbols::new(f.grid());
    let mut s = transform_forward(f);
    for (v, (k2, k1)) in s.coeffs_mut().iter_mut().zip(sym.lap.iter().zip(&sym.d1)) {
        *v *= k2 + c * k1;
    }
    transform_inverse(&s)
}

/// Zeroes every mode with some `|k_a| > M_a / 3`.
fn dealias(f: &ComplexField) -> ComplexField {
    let grid = *f.grid();
    let mut s = transform_forward(f);
    for (i, v) in s.coeffs_mut().iter_mut().enumerate() {
        let m = grid.unravel(i);
        let cut = (0..grid.dim())
            .any(|a| 3 * grid.wavenumber(a, m[a]).unsigned_abs() as usize > grid.sizes()[a]);
        if cut {
            *v = Complex64::default();
        }
    }
    transform_inverse(&s)
}

/// L2 gradient `-Lap f - c i d1 f - (1 - |f|^2) f`.
pub fn gradient(f: &ComplexField, p: &Params) -> ComplexField {
    let mut g = linear_part(f, p.c);
    let nonlinear = f.map(|v| v * (1.0 - v.norm_sqr()));
    let nonlinear = if p.dealias { dealias(&nonlinear) } else { nonlinear };
    for (gv, nv) in g.values_mut().iter_mut().zip(nonlinear.values()) {
        *gv -= nv;
    }
    g
}

/// Second variation at `base` applied to `dir`:
/// `-Lap phi - c i d1 phi - (1 - |psi|^2) phi + 2 (psi . phi) psi`.
pub fn hessian_apply(
    base: &ComplexField,
    dir: &ComplexField,
    p: &Params,
) -> Result<ComplexField, FieldError> {
    if base.grid() != dir.grid() {
        return Err(FieldError::GridMismatch);
    }
    let mut h = linear_part(dir, p.c);
    let local = ComplexField::from_raw(
        *dir.grid(),
        base.values()
            .iter()
            .zip(dir.values())
            .map(|(&psi, &phi)| {
                let dot = psi.re * phi.re + psi.im * phi.im;
                -(1.0 - psi.norm_sqr()) * phi + 2.0 * dot * psi
            })
            .collect(),
    );
    let local = if p.dealias { dealias(&local) } else { local };
    for (hv, lv) in h.values_mut().iter_mut().zip(local.values()) {
        *hv += lv;
    }
    Ok(h)
}

/// Coefficients `[a0, .., a4]` of the quartic `t -> I(f + t d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineQuartic(pub [f64; 5]);

impl LineQuartic {
    pub fn value(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let a = &self.0;
        a[1] + t * (2.0 * a[2] + t * (3.0 * a[3] + t * 4.0 * a[4]))
    }

    /// Smallest positive local minimizer of the quartic, if any.
    pub fn first_minimizer(&self) -> Option<f64> {
        let a = &self.0;
        // Roots of the cubic derivative, bracketed by sign changes on a
        // geometric sweep, then polished by bisection.
        let dp = |t: f64| self.derivative(t);
        if dp(0.0) >= 0.0 {
            return None;
        }
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        let mut lo = 0.0;
        let mut hi = 1e-12_f64.max(1e-16 * scale / a[1].abs().max(1e-300));
        let mut found = false;
        for _ in 0..400 {
            if dp(hi) >= 0.0 {
                found = true;
                break;
            }
            lo = hi;
            hi *= 1.5;
            if !hi.is_finite() {
                break;
            }
        }
        if !found {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dp(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Exact restriction of the action to the line `f + t d`.
pub fn line_quartic(
    f: &ComplexField,
    d: &ComplexField,
    p: &Params,
) -> Result<LineQuartic, FieldError> {
    if f.grid() != d.grid() {
        return Err(FieldError::GridMismatch);
    }
    let sym = Symbols::new(f.grid());
    let sf = transform_forward(f);
    let sd = transform_forward(d);
    let (kff, pff) = quadratic_pair(&sym, &sf, &sf);
    let (kfd, pfd) = quadratic_pair(&sym, &sf, &sd);
    let (kdd, pdd) = quadratic_pair(&sym, &sd, &sd);
    let mut q = [0.0; 5];
    for (&fv, &dv) in f.values().iter().zip(d.values()) {
        let a = 1.0 - fv.norm_sqr();
        let b = -2.0 * (fv.re * dv.re + fv.im * dv.im);
        let e = -dv.norm_sqr();
        q[0] += a * a;
        q[1] += 2.0 * a * b;
        q[2] += b * b + 2.0 * a * e;
        q[3] += 2.0 * b * e;
        q[4] += e * e;
    }
    let w = 0.25 * f.grid().cell_volume();
    let c = p.c;
    Ok(LineQuartic([
        w * q[0] + kff - c * pff,
        w * q[1] + 2.0 * (kfd - c * pfd),
        w * q[2] + kdd - c * pdd,
        w * q[3],
        w * q[4],
    ]))
}

/// Identities satisfied by exact solutions of the profile equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// `||gradient||_{L2}`.
    pub residual: f64,
    /// `int (1 - |f|^2) f`, which vanishes at solutions.
    pub integral: Complex64,
    /// Lifted energy identity (see [`lifted_identity`]); `None` when the
    /// field has vortices and no global lifting exists.
    pub lifted: Option<f64>,
}

impl Certificate {
    /// Largest of the certificate magnitudes.
    pub fn max_magnitude(&self) -> f64 {
        self.residual
            .max(self.integral.norm())
            .max(self.lifted.map(f64::abs).unwrap_or(0.0))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_magnitude() <= tol
    }
}

/// `int (1 - |f|^2) f`.
pub fn mass_defect(f: &ComplexField) -> Complex64 {
    f.values()
        .iter()
        .map(|&v| v * (1.0 - v.norm_sqr()))
        .sum::<Complex64>()
        * f.grid().cell_volume()
}

/// The identity obtained by testing the profile equation against the field
/// itself, written with `f = rho e^{i theta}`:
///
/// `int |grad rho|^2 + rho^2 |grad theta|^2 + c (rho^2 - 1) d1 theta - (1 - rho^2) rho^2 + c int d1 theta`.
///
/// The last term vanishes when the phase is periodic and restores the
/// identity for fields with a winding along `x_1`.
pub fn lifted_identity(f: &ComplexField, c: f64) -> Option<f64> {
    let l = lift(f, DEFAULT_LIFT_FLOOR).ok()?;
    let grid = *f.grid();
    // Derivatives of rho and theta by the chain rule from the spectral
    // derivative of f: rho d rho = Re(conj f df), rho^2 d theta = Im(conj f df).
    let mut total = 0.0;
    let mut d1_theta = Vec::new();
    for axis in 0..grid.dim() {
        let df = spectral_derivative(f, axis).ok()?;
        for (i, (v, d)) in f.values().iter().zip(df.values()).enumerate() {
            let r2 = l.rho[i] * l.rho[i];
            let q = v.conj() * d;
            total += (q.re * q.re + q.im * q.im) / r2;
            if axis == 0 {
                d1_theta.push(q.im / r2);
            }
        }
    }
    for i in 0..grid.len() {
        let r2 = l.rho[i] * l.rho[i];
        total += c * (r2 - 1.0) * d1_theta[i] + c * d1_theta[i] - (1.0 - r2) * r2;
    }
    Some(total * grid.cell_volume())
}

pub fn certify(f: &ComplexField, p: &Params) -> Certificate {
    Certificate {
        residual: gradient(f, p).l2_norm(),
        integral: mass_defect(f),
        lifted: lifted_identity(f, p.c),
    }
}

/// Right-hand side of the coercivity estimate
/// `I(f) >= 1/4 ||grad f||^2 + (lambda - c^2/4) ||f||^2 - K T^N / 4`
/// with `lambda = c^2/4 + 1` and `K = 4 lambda (lambda + 1)`, the smallest
/// constant for which `(1 - s)^2 >= 4 lambda s - K` on `s >= 0`.
pub fn coercivity_bound(f: &ComplexField, c: f64) -> f64 {
    let lambda = 0.25 * c * c + 1.0;
    let k = 4.0 * lambda * (lambda + 1.0);
    let (kin, _) = energy(f);
    let mass = f.l2_norm().powi(2);
    0.5 * kin + (lambda - 0.25 * c * c) * mass - 0.25 * k * f.grid().volume()
}

/// One CSV row: `T, c, kinetic, potential, momentum, action, residual,
/// cert_integral_re, cert_integral_im, cert_lift`.
pub fn csv_row(grid: &TorusGrid, c: f64, r: &ActionReport, cert: &Certificate) -> String {
    use crate::report::fmt_f64;
    [
        grid.period(),
        c,
        r.kinetic,
        r.potential,
        r.momentum,
        r.action,
        cert.residual,
        cert.integral.re,
        cert.integral.im,
        cert.lifted.unwrap_or(f64::NAN),
    ]
    .iter()
    .map(|&x| fmt_f64(x))
    .collect::<Vec<_>>()
    .join(",")
}

pub const CSV_HEADER: &str =
    "T,c,kinetic,potential,momentum,action,residual,cert_integral_re,cert_integral_im,cert_lift";
