//! Min-max search between the constant `1` and `1 + w_R`.
//!
//! [`relax_path`] runs the string method on a discretized path with fixed
//! endpoints, and [`find_saddle`] refines the highest node to a critical
//! point by driving the gradient norm to zero with inexact Newton steps.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::ansatz::{band_limited_noise, AnsatzError, VortexAnsatz};
use crate::field::{h1_product, l2_product, ComplexField, FieldError, TorusGrid};
use crate::functionals::{action, gradient, hessian_apply, Params};
use crate::linalg::{self, EigenOptions, EigenProblem};
use crate::minimize::{precondition, CriticalPoint};
use crate::newton::{refine_critical_point, NewtonOptions};
use crate::report::fmt_f64;

#[derive(Debug, Error)]
pub enum MountainPassError {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("saddle refinement stopped at residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error("no negative Hessian direction found (smallest quotient {quotient:e})")]
    NotASaddle { quotient: f64 },
    #[error("saddle action {action} outside (0, {bound}]")]
    ActionOutOfRange { action: f64, bound: f64 },
}

/// Ordered nodes of a discretized path; all on one grid.
#[derive(Debug, Clone)]
pub struct Path {
    nodes: Vec<ComplexField>,
}

impl Path {
    pub fn new(nodes: Vec<ComplexField>) -> Result<Self, MountainPassError> {
        if nodes.len() < 3 {
            return Err(MountainPassError::InvalidPath(format!(
                "need at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let grid = *nodes[0].grid();
        if nodes.iter().any(|n| *n.grid() != grid) {
            return Err(FieldError::GridMismatch.into());
        }
        if let Some(j) = nodes.iter().position(|n| !n.is_finite()) {
            return Err(MountainPassError::InvalidPath(format!("node {j} is not finite")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[ComplexField] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<ComplexField> {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn grid(&self) -> &TorusGrid {
        self.nodes[0].grid()
    }

    pub fn actions(&self, p: &Params) -> Vec<f64> {
        self.nodes.par_iter().map(|n| action(n, p).action).collect()
    }

    /// Index and action of the highest node; ties within `1e-12` go to the
    /// lowest index.
    pub fn max_node(&self, p: &Params) -> (usize, f64) {
        highest(&self.actions(p))
    }

    /// Cumulative L2 arclength at each node.
    pub fn arclength(&self) -> Vec<f64> {
        arclength(&self.nodes)
    }

    pub const CSV_HEADER: &'static str = "node,arclength,action";

    pub fn csv_rows(&self, p: &Params) -> Vec<String> {
        let s = self.arclength();
        self.actions(p)
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{},{},{}", i, fmt_f64(s[i]), fmt_f64(*a)))
            .collect()
    }
}

fn highest(actions: &[f64]) -> (usize, f64) {
    let top = actions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let i = actions
        .iter()
        .position(|&a| a >= top - 1e-12)
        .unwrap_or(0);
    (i, actions[i])
}

fn arclength(nodes: &[ComplexField]) -> Vec<f64> {
    let mut s = vec![0.0; nodes.len()];
    for j in 1..nodes.len() {
        let d = nodes[j].sub(&nodes[j - 1]).expect("same grid").l2_norm();
        s[j] = s[j - 1] + d;
    }
    s
}

/// Redistributes interior nodes uniformly in L2 arclength by linear
/// interpolation; endpoints are returned untouched.
pub fn reparametrize(nodes: Vec<ComplexField>) -> Vec<ComplexField> {
    let n = nodes.len();
    let s = arclength(&nodes);
    let total = s[n - 1];
    if !(total > 0.0) {
        return nodes;
    }
    let mut out = Vec::with_capacity(n);
    out.push(nodes[0].clone());
    let mut j = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while j + 2 < n && s[j + 1] < target {
            j += 1;
        }
        let span = s[j + 1] - s[j];
        let w = if span > 0.0 { ((target - s[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let diff = nodes[j + 1].sub(&nodes[j]).expect("same grid");
        out.push(nodes[j].add_scaled(w, &diff).expect("same grid"));
    }
    out.push(nodes[n - 1].clone());
    out
}

/// The straight path `t -> 1 + t w_R` at uniform `t_j`.
pub fn init_path(
    grid: &TorusGrid,
    ansatz: &VortexAnsatz,
    node_count: usize,
) -> Result<Path, MountainPassError> {
    if node_count < 3 {
        return Err(MountainPassError::InvalidPath(format!(
            "need at least 3 nodes, got {node_count}"
        )));
    }
    let w = ansatz.perturbation(grid)?;
    let one = ComplexField::constant(*grid, Complex64::new(1.0, 0.0));
    let nodes = (0..node_count)
        .map(|j| {
            if j + 1 == node_count {
                return ansatz.field(grid);
            }
            let t = j as f64 / (node_count - 1) as f64;
            Ok(one.add_scaled(t, &w).expect("same grid"))
        })
        .collect::<Result<Vec<_>, AnsatzError>>()?;
    Path::new(nodes)
}

/// `max_t I(1 + t w_R)`, the upper bound of the min-max level.
pub fn path_bound(path: &Path, p: &Params) -> f64 {
    path.max_node(p).1
}

#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    pub max_sweeps: usize,
    /// Initial step of the preconditioned descent move.
    pub step: f64,
    pub min_step: f64,
    /// Stop once gamma drops by less than `rel_tol * |gamma|` over `patience`
    /// accepted sweeps.
    pub rel_tol: f64,
    pub patience: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 3000,
            step: 0.5,
            min_step: 1e-8,
            rel_tol: 1e-6,
            patience: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub path: Path,
    /// Highest node action of the relaxed path.
    pub gamma: f64,
    pub sweeps: usize,
    /// Gamma stopped decreasing; saddle refinement should take over.
    pub stalled: bool,
    /// Gamma after every accepted sweep, starting with the input path.
    pub history: Vec<f64>,
}

/// String method: preconditioned descent of the interior nodes followed by
/// arclength reparametrization. Sweeps that would raise gamma are rejected
/// and retried with half the step.
pub fn relax_path(path: &Path, p: &Params, opts: &RelaxOptions) -> Result<RelaxOutcome, MountainPassError> {
    if !(opts.step > 0.0 && opts.min_step > 0.0 && opts.rel_tol >= 0.0 && opts.patience >= 1) {
        return Err(MountainPassError::InvalidOptions(format!("{opts:?}")));
    }
    let n = path.len();
    let mut nodes = path.nodes.clone();
    let mut gamma = highest(&path.actions(p)).1;
    let mut history = vec![gamma];
    let mut step = opts.step;
    let mut stalled = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let moved: Vec<ComplexField> = (0..n)
            .into_par_iter()
            .map(|j| {
                if j == 0 || j == n - 1 {
                    return nodes[j].clone();
                }
                let d = precondition(&gradient(&nodes[j], p));
                nodes[j].add_scaled(-step, &d).expect("same grid")
            })
            .collect();
        let trial = reparametrize(moved);
        let trial_gamma = highest(&trial.par_iter().map(|f| action(f, p).action).collect::<Vec<_>>()).1;
        if trial_gamma.is_finite() && trial_gamma <= gamma {
            nodes = trial;
            gamma = trial_gamma;
            history.push(gamma);
            step = (step * 1.25).min(opts.step);
            let k = history.len();
            if k > opts.patience && history[k - 1 - opts.patience] - gamma <= opts.rel_tol * gamma.abs() {
                stalled = true;
                break;
            }
        } else {
            step *= 0.5;
            if step < opts.min_step {
                stalled = true;
                break;
            }
        }
    }
    Ok(RelaxOutcome {
        path: Path { nodes },
        gamma,
        sweeps,
        stalled,
        history,
    })
}

/// Smallest action found on random fields at H1 distance `delta` from the
/// circle of unit constants.
pub fn sphere_action_floor(grid: &TorusGrid, p: &Params, delta: f64, samples: usize, band: usize, seed: u64) -> f64 {
    (0..samples)
        .map(|i| {
            let mut eta = band_limited_noise(grid, band, seed.wrapping_add(i as u64));
            let m = eta.mean();
            eta = eta.map(|v| v - m);
            let norm = h1_product(&eta, &eta).expect("same grid").sqrt();
            let one = ComplexField::constant(*grid, Complex64::new(1.0, 0.0));
            let f = one.add_scaled(delta / norm, &eta).expect("same grid");
            action(&f, p).action
        })
        .fold(f64::INFINITY, f64::min)
}

/// H1 distance to the circle of unit constants,
/// `d^2 = ||f||_{H1}^2 + T^N - 2 |int f|`.
pub fn distance_to_constants(f: &ComplexField) -> f64 {
    let g = f.grid();
    let n2 = h1_product(f, f).expect("same grid");
    let integral = f.mean() * g.volume();
    (n2 + g.volume() - 2.0 * integral.norm()).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct SaddleOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub minres_tol: f64,
    pub minres_max_iters: usize,
    /// Random probes used when searching for a negative Hessian direction.
    pub probes: usize,
    pub probe_band: usize,
    pub seed: u64,
    pub class_tol: f64,
    /// Quotients above `-negative_tol` do not count as negative.
    pub negative_tol: f64,
}

impl SaddleOptions {
    /// Defaults scaled to the grid: `grad_tol = 1e-9 T^{N/2}`.
    pub fn for_grid(grid: &TorusGrid) -> Self {
        Self {
            grad_tol: 1e-9 * grid.volume().sqrt(),
            max_iters: 200,
            minres_tol: 1e-4,
            minres_max_iters: 500,
            probes: 50,
            probe_band: 4,
            seed: 7,
            class_tol: 1e-6,
            negative_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub saddle: CriticalPoint,
    /// Highest node action of the input path.
    pub gamma: f64,
    pub upper_bound: f64,
    pub index_witness: ComplexField,
    /// `l2(H w, w) / l2(w, w)` for the witness `w`.
    pub witness_quotient: f64,
    /// Node that was refined.
    pub node: usize,
}

impl SaddleResult {
    pub const CSV_HEADER: &'static str =
        "T,c,gamma,upper_bound,action,residual,witness_quotient,cert_integral_re,cert_integral_im,classification";

    pub fn csv_row(&self, c: f64) -> String {
        let s = &self.saddle;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(s.field.grid().period()),
            fmt_f64(c),
            fmt_f64(self.gamma),
            fmt_f64(self.upper_bound),
            fmt_f64(s.report.action),
            fmt_f64(s.residual),
            fmt_f64(self.witness_quotient),
            fmt_f64(s.certificate.integral.re),
            fmt_f64(s.certificate.integral.im),
            s.classification
        )
    }
}

fn rayleigh(base: &ComplexField, dir: &ComplexField, p: &Params) -> f64 {
    let h = hessian_apply(base, dir, p).expect("same grid");
    l2_product(&h, dir).expect("same grid") / l2_product(dir, dir).expect("same grid")
}

/// Most negative Hessian direction found at `base` among an eigen-iterate,
/// the optional `hint`, and `opts.probes` random band-limited probes.
pub fn negative_direction(
    base: &ComplexField,
    p: &Params,
    hint: Option<&ComplexField>,
    opts: &SaddleOptions,
) -> (ComplexField, f64) {
    let grid = *base.grid();
    let mut candidates: Vec<ComplexField> = Vec::with_capacity(opts.probes + 2);
    let a = |x: &[f64]| -> Vec<f64> {
        let d = ComplexField::from_real_vec(grid, x).expect("length");
        hessian_apply(base, &d, p).expect("same grid").to_real_vec()
    };
    let helm = |x: &[f64]| -> Vec<f64> {
        precondition(&ComplexField::from_real_vec(grid, x).expect("length")).to_real_vec()
    };
    let problem = EigenProblem {
        dim: 2 * grid.len(),
        apply_a: &a,
        apply_b: None,
        precond: Some(&helm),
        constraints: &[],
    };
    let eig = linalg::lobpcg(
        &problem,
        &EigenOptions {
            want: 1,
            block: 4,
            tol: 1e-6,
            max_iters: 400,
            seed: opts.seed,
        },
    );
    if let Ok(r) = eig {
        candidates.push(ComplexField::from_real_vec(grid, &r.vectors[0]).expect("length"));
    }
    if let Some(h) = hint {
        candidates.push(h.clone());
    }
    for i in 0..opts.probes {
        candidates.push(band_limited_noise(&grid, opts.probe_band, opts.seed.wrapping_add(1 + i as u64)));
    }
    candidates
        .into_iter()
        .filter(|d| d.l2_norm() > 0.0)
        .map(|d| {
            let q = rayleigh(base, &d, p);
            (d, q)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one probe")
}

/// Refines the highest node of a relaxed path to a critical point and checks
/// that it is a saddle with `0 < action <= upper_bound`.
pub fn find_saddle(
    path: &Path,
    p: &Params,
    upper_bound: f64,
    opts: &SaddleOptions,
) -> Result<SaddleResult, MountainPassError> {
    let actions = path.actions(p);
    let (node, gamma) = highest(&actions);
    let newton = NewtonOptions {
        grad_tol: opts.grad_tol,
        max_iters: opts.max_iters,
        minres_tol: opts.minres_tol,
        minres_max_iters: opts.minres_max_iters,
    };
    let (field, iterations) = refine_critical_point(&path.nodes[node], p, &newton).map_err(|e| {
        MountainPassError::NotConverged {
            residual: e.residual,
            iterations: e.iterations,
        }
    })?;
    let tangent = if node > 0 && node + 1 < path.len() {
        Some(path.nodes[node + 1].sub(&path.nodes[node - 1])?)
    } else {
        None
    };
    let (witness, quotient) = negative_direction(&field, p, tangent.as_ref(), opts);
    if !(quotient < -opts.negative_tol) {
        return Err(MountainPassError::NotASaddle { quotient });
    }
    let saddle = CriticalPoint::assemble(field, p, opts.class_tol, true, iterations, Vec::new());
    let a = saddle.report.action;
    if !(a > 0.0 && a <= upper_bound + 1e-8) {
        return Err(MountainPassError::ActionOutOfRange {
            action: a,
            bound: upper_bound,
        });
    }
    Ok(SaddleResult {
        saddle,
        gamma,
        upper_bound,
        index_witness: witness,
        witness_quotient: quotient,
        node,
    })
}
