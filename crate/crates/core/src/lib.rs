//! Periodic traveling waves of the Gross-Pitaevskii equation on tori.
//!
//! A traveling wave `Psi(x, t) = psi(x_1 - c t, x~)` solves
//!
//! ```text
//! i c d1 psi + Lap psi + (1 - |psi|^2) psi = 0   on [0, T]^N,
//! ```
//!
//! the Euler-Lagrange equation of the action `I = E - c P`. This crate
//! discretizes the torus pseudospectrally and provides
//!
//! * [`field`]: grids, FFT-based derivatives, inner products, phase lifting and
//!   the binary `GPTW` field format;
//! * [`functionals`]: energy, momentum, action, gradient, Hessian products and
//!   solution certificates;
//! * [`ansatz`]: constants, plane waves, the vortex test function and seeded
//!   perturbations;
//! * [`minimize`]: preconditioned nonlinear conjugate gradients and the
//!   classification of converged fields;
//! * [`mountainpass`]: string-method path relaxation and saddle refinement;
//! * [`newton`]: inexact Newton refinement of approximate critical points;
//! * [`spectrum`]: Hessian spectra at constants, Poincare constants and
//!   nonexistence scans.

pub mod ansatz;
pub mod field;
pub mod functionals;
pub mod linalg;
pub mod minimize;
pub mod mountainpass;
pub mod newton;
pub mod report;
pub mod spectrum;

pub use ansatz::{plane_wave, perturb, PlaneWave, VortexAnsatz};
pub use field::{ComplexField, TorusGrid};
pub use functionals::{action, certify, gradient, hessian_apply, ActionReport, Certificate, Params};
pub use minimize::{classify, minimize_action, Classification, CriticalPoint, MinimizeOptions};


pub use mountainpass::{find_saddle, init_path, relax_path, Path, SaddleResult};
pub use spectrum::{constancy_scan, hessian_spectrum_at_constant, poincare_constant, weighted_eigenvalue, SpectrumReport, ThresholdReport};
