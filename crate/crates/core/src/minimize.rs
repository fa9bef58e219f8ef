//! Descent to local minimizers of the action and classification of the
//! fields it converges to.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::ansatz::{AnsatzError, VortexAnsatz};
use crate::field::{
    lift, transform_forward, transform_inverse, ComplexField, TorusGrid, DEFAULT_LIFT_FLOOR,
};
use crate::field::transform::laplacian_symbol;
use crate::functionals::{action, certify, gradient, line_quartic, ActionReport, Certificate, Params};
use crate::newton::{refine_critical_point, NewtonOptions};
use crate::report::fmt_f64;

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("non-finite action or field at iteration {0}")]
    NonFiniteValue(usize),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    /// Minimize the exact quartic restriction of the action to the search line.
    Exact,
    /// Armijo backtracking from `initial_step`.
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stop once `||gradient||_{L2} <= grad_tol`.
    pub grad_tol: f64,
    pub initial_step: f64,
    /// Step reduction factor of the backtracking search, in `(0, 1)`.
    pub backtrack: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Reset the conjugate direction every `restart` iterations.
    pub restart: usize,
    /// Use `(1 - Lap)^{-1}` as preconditioner.
    pub precondition: bool,
    pub line_search: LineSearch,
    pub class_tol: f64,
    /// Finish with Newton steps on `||gradient||^2` once the action stops
    /// changing at rounding level before `grad_tol` is reached.
    pub polish: bool,
}

impl MinimizeOptions {
    /// Defaults scaled to the grid: `grad_tol = 1e-8 T^{N/2}`.
    pub fn for_grid(grid: &TorusGrid) -> Self {
        Self {
            max_iters: 50_000,
            grad_tol: 1e-8 * grid.volume().sqrt(),
            initial_step: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            restart: 50,
            precondition: true,
            line_search: LineSearch::Exact,
            class_tol: 1e-6,
            polish: true,
        }
    }

    pub fn validated(self) -> Result<Self, MinimizeError> {
        let bad = |m: &str| Err(MinimizeError::InvalidOptions(m.to_string()));
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtracking factor must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("sufficient-decrease constant must lie in (0, 1/2)");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial step must be positive");
        }
        if !(self.class_tol > 0.0) {
            return bad("class_tol must be positive");
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    ZeroConstant,
    UnitConstant,
    PlaneWave,
    Vortexful,
    OtherNonconstant,
}

impl Classification {
    pub fn is_constant(self) -> bool {
        matches!(self, Self::ZeroConstant | Self::UnitConstant)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ZeroConstant => "ZeroConstant",
            Self::UnitConstant => "UnitConstant",
            Self::PlaneWave => "PlaneWave",
            Self::Vortexful => "Vortexful",
            Self::OtherNonconstant => "OtherNonconstant",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labels a field as one of the solution types relevant to the problem.
/// Checks run in declaration order of [`Classification`].
pub fn classify(f: &ComplexField, class_tol: f64) -> Classification {
    classify_with_windings(f, class_tol).0
}

fn classify_with_windings(f: &ComplexField, class_tol: f64) -> (Classification, Option<Vec<i64>>) {
    let lifted = lift(f, DEFAULT_LIFT_FLOOR).ok();
    let windings = lifted.as_ref().map(|l| l.windings.clone());
    if f.sup_norm() <= class_tol {
        return (Classification::ZeroConstant, windings);
    }
    let mean = f.mean();
    let variation = f.values().iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
    let modulus_ok = f.values().iter().all(|v| (v.norm() - 1.0).abs() <= class_tol);
    if variation <= class_tol && modulus_ok {
        return (Classification::UnitConstant, windings);
    }
    let Some(l) = lifted else {
        return (Classification::Vortexful, None);
    };
    let (lo, hi) = l
        .rho
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if hi - lo <= class_tol && l.windings.iter().any(|&w| w != 0) {
        return (Classification::PlaneWave, windings);
    }
    (Classification::OtherNonconstant, windings)
}

/// A converged (or best available) field with its diagnostics.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub field: ComplexField,
    pub report: ActionReport,
    pub residual: f64,
    pub classification: Classification,
    pub windings: Option<Vec<i64>>,
    pub certificate: Certificate,
    pub converged: bool,
    pub iterations: usize,
    /// Action after every accepted step, starting with the initial field.
    pub history: Vec<f64>,
}

impl CriticalPoint {
    pub fn assemble(
        field: ComplexField,
        p: &Params,
        class_tol: f64,
        converged: bool,
        iterations: usize,
        history: Vec<f64>,
    ) -> Self {
        let report = action(&field, p);
        let certificate = certify(&field, p);
        let (classification, windings) = classify_with_windings(&field, class_tol);
        Self {
            residual: certificate.residual,
            field,
            report,
            classification,
            windings,
            certificate,
            converged,
            iterations,
            history,
        }
    }
}

/// Per-iteration progress of [`minimize_with_observer`].
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub iteration: usize,
    pub action: f64,
    pub residual: f64,
}

/// Inverse Helmholtz operator `(1 - Lap)^{-1}`.
pub fn precondition(g: &ComplexField) -> ComplexField {
    let mut s = transform_forward(g);
    let sym = laplacian_symbol(g.grid());
    for (v, k2) in s.coeffs_mut().iter_mut().zip(sym) {
        *v /= 1.0 + k2;
    }
    transform_inverse(&s)
}

pub fn minimize_action(
    init: &ComplexField,
    p: &Params,
    opts: &MinimizeOptions,
) -> Result<CriticalPoint, MinimizeError> {
    minimize_with_observer(init, p, opts, |_| {})
}

/// Outcome of a single line search.
enum Step {
    Accepted { field: ComplexField, action: f64 },
    Failed,
}

fn line_search(
    f: &ComplexField,
    d: &ComplexField,
    f_action: f64,
    slope: f64,
    p: &Params,
    opts: &MinimizeOptions,
) -> Step {
    let accept = |t: f64| -> Option<(ComplexField, f64)> {
        let trial = f.add_scaled(t, d).ok()?;
        let a = action(&trial, p).action;
        (a.is_finite() && a <= f_action && a <= f_action + opts.armijo * t * slope)
            .then_some((trial, a))
    };
    if opts.line_search == LineSearch::Exact {
        if let Some(t) = line_quartic(f, d, p).ok().and_then(|q| q.first_minimizer()) {
            if let Some((field, action)) = accept(t) {
                return Step::Accepted { field, action };
            }
        }
    }
    let mut t = opts.initial_step;
    for _ in 0..60 {
        if let Some((field, action)) = accept(t) {
            return Step::Accepted { field, action };
        }
        t *= opts.backtrack;
    }
    Step::Failed
}

/// Relative action change treated as no change.
const FLAT: f64 = 1e-14;
/// Consecutive flat steps after which descent hands over to polishing.
const FLAT_WINDOW: usize = 20;

/// Preconditioned Polak-Ribiere conjugate gradients with restarts.
///
/// Every accepted step lowers the action; if no step can be accepted even
/// along the steepest-descent direction the best iterate is returned with
/// `converged = false`.
pub fn minimize_with_observer(
    init: &ComplexField,
    p: &Params,
    opts: &MinimizeOptions,
    mut observe: impl FnMut(&Progress),
) -> Result<CriticalPoint, MinimizeError> {
    let opts = opts.validated()?;
    if !init.is_finite() {
        return Err(MinimizeError::NonFiniteValue(0));
    }
    let precond = |g: &ComplexField| {
        if opts.precondition {
            precondition(g)
        } else {
            g.clone()
        }
    };
    let mut f = init.clone();
    let mut f_action = action(&f, p).action;
    if !f_action.is_finite() {
        return Err(MinimizeError::NonFiniteValue(0));
    }
    let mut history = vec![f_action];
    let mut g = gradient(&f, p);
    let mut z = precond(&g);
    let mut d = z.scale(Complex64::new(-1.0, 0.0));
    let mut gz = real_l2(&g, &z);
    let mut converged = false;
    let mut iterations = 0;
    let mut since_restart = 0;
    let mut flat_steps = 0;

    for iter in 0..opts.max_iters {
        let residual = g.l2_norm();
        observe(&Progress {
            iteration: iter,
            action: f_action,
            residual,
        });
        if residual <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations = iter + 1;
        let mut slope = real_l2(&g, &d);
        if !(slope < 0.0) {
            d = z.scale(Complex64::new(-1.0, 0.0));
            slope = -gz;
            since_restart = 0;
        }
        let mut step = line_search(&f, &d, f_action, slope, p, &opts);
        if matches!(step, Step::Failed) && since_restart > 0 {
            d = z.scale(Complex64::new(-1.0, 0.0));
            step = line_search(&f, &d, f_action, -gz, p, &opts);
            since_restart = 0;
        }
        let Step::Accepted { field, action: a } = step else {
            break;
        };
        if !field.is_finite() {
            return Err(MinimizeError::NonFiniteValue(iter));
        }
        debug_assert!(a <= f_action);
        if f_action - a <= FLAT * f_action.abs().max(1.0) {
            flat_steps += 1;
        } else {
            flat_steps = 0;
        }
        f = field;
        f_action = a;
        history.push(a);

        let g_new = gradient(&f, p);
        let z_new = precond(&g_new);
        let gz_new = real_l2(&g_new, &z_new);
        since_restart += 1;
        let beta = if since_restart >= opts.restart {
            since_restart = 0;
            0.0
        } else {
            let diff = g_new.sub(&g).expect("same grid");
            (real_l2(&diff, &z_new) / gz).max(0.0)
        };
        d = z_new.scale(Complex64::new(-1.0, 0.0)).add_scaled(beta, &d).expect("same grid");
        g = g_new;
        z = z_new;
        gz = gz_new;
        if flat_steps >= FLAT_WINDOW {
            break;
        }
    }
    if !converged && g.l2_norm() <= opts.grad_tol {
        converged = true;
    }
    if !converged && opts.polish {
        let newton = NewtonOptions::with_tol(opts.grad_tol);
        if let Ok((polished, _)) = refine_critical_point(&f, p, &newton) {
            // keep the descent property: accept only if the action did not
            // rise beyond rounding of the last accepted value
            let a = action(&polished, p).action;
            if a <= f_action + 1e3 * FLAT * f_action.abs().max(1.0) {
                f = polished;
                converged = true;
            }
        }
    }
    Ok(CriticalPoint::assemble(
        f,
        p,
        opts.class_tol,
        converged,
        iterations,
        history,
    ))
}

fn real_l2(a: &ComplexField, b: &ComplexField) -> f64 {
    crate::field::l2_product(a, b).expect("same grid")
}

/// One row of an existence experiment: `c, T, action, residual, classification`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceRow {
    pub c: f64,
    pub period: f64,
    pub action: f64,
    pub residual: f64,
    pub classification: Classification,
    pub converged: bool,
}

impl ExistenceRow {
    pub const CSV_HEADER: &'static str = "c,T,action,residual,classification,converged";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt_f64(self.c),
            fmt_f64(self.period),
            fmt_f64(self.action),
            fmt_f64(self.residual),
            self.classification,
            self.converged
        )
    }
}

/// Minimizes from the vortex test function `1 + w_R`, the field whose
/// negative action forces a nonconstant global minimizer.
pub fn existence_experiment(
    p: &Params,
    grid: &TorusGrid,
    ansatz: &VortexAnsatz,
    opts: &MinimizeOptions,
) -> Result<(CriticalPoint, ExistenceRow), MinimizeError> {
    existence_from(&ansatz.field(grid)?, p, opts)
}

/// Minimizes from an arbitrary initial field and summarizes the outcome.
pub fn existence_from(
    init: &ComplexField,
    p: &Params,
    opts: &MinimizeOptions,
) -> Result<(CriticalPoint, ExistenceRow), MinimizeError> {
    let cp = minimize_action(init, p, opts)?;
    let row = ExistenceRow {
        c: p.c,
        period: init.grid().period(),
        action: cp.report.action,
        residual: cp.residual,
        classification: cp.classification,
        converged: cp.converged,
    };
    Ok((cp, row))
}
