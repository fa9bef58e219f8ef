//! Second-variation spectra at the constant solutions, Poincare-type
//! constants of the torus, and scans for the period below which only
//! constant solutions are found.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::ansatz::{constant, perturb, plane_wave, PlaneWave, VortexAnsatz};
use crate::field::transform::{derivative_symbol, laplacian_symbol};
use crate::field::{transform_forward, ComplexField, FieldError, TorusGrid};
use crate::functionals::{hessian_apply, Params, ParamsError};
use crate::linalg::{self, EigenOptions, EigenProblem, LinalgError};
use crate::minimize::{minimize_action, precondition, Classification, MinimizeError, MinimizeOptions};
use crate::report::fmt_f64;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("eigen-iteration failed: {0}")]
    NoConvergence(#[from] LinalgError),
    #[error("weight {value} at node {node} is outside [1/2, 2]")]
    WeightOutOfRange { node: usize, value: f64 },
    #[error("count must be >= 1")]
    BadCount,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("dense cross-check limited to {max} unknowns, grid has {got}")]
    TooLargeForDense { max: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Lower,
    Upper,
}

/// One eigenvalue of the Hessian symbol at a unit constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMode {
    pub value: f64,
    pub k: Vec<i64>,
    pub branch: Branch,
}

/// Every eigenvalue of the discrete Hessian at `e^{i theta}`, sorted.
///
/// Mode `k` contributes `|xi|^2 + 1 +- sqrt(1 + c^2 xi_1^2)`, with `xi_1`
/// read from the first-derivative symbol (zero at the Nyquist slot). The
/// degenerate phase direction (`k = 0`, lower branch) is omitted.
pub fn symbol_spectrum(grid: &TorusGrid, c: f64) -> Vec<SymbolMode> {
    let lap = laplacian_symbol(grid);
    let d1 = derivative_symbol(grid, 0);
    let mut out = Vec::with_capacity(2 * grid.len());
    for i in 0..grid.len() {
        let m = grid.unravel(i);
        let k: Vec<i64> = (0..grid.dim()).map(|a| grid.wavenumber(a, m[a])).collect();
        let root = (1.0 + c * c * d1[i] * d1[i]).sqrt();
        if i != 0 {
            out.push(SymbolMode {
                value: lap[i] + 1.0 - root,
                k: k.clone(),
                branch: Branch::Lower,
            });
        }
        out.push(SymbolMode {
            value: lap[i] + 1.0 + root,
            k,
            branch: Branch::Upper,
        });
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    out
}

/// Smallest symbol eigenvalue off the degenerate direction.
pub fn symbol_minimum(grid: &TorusGrid, c: f64) -> f64 {
    symbol_spectrum(grid, c)[0].value
}

/// Sharp positivity criterion on the torus of period `T`:
/// `c^2 < 2 + (2 pi / T)^2`.
pub fn positivity_criterion(c: f64, period: f64) -> bool {
    c * c < 2.0 + (2.0 * PI / period).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub c: f64,
    pub period: f64,
    pub theta: f64,
    /// `(value, dominant Fourier mode, branch)` ascending.
    pub smallest: Vec<(f64, Vec<i64>, Branch)>,
    /// `sup |H[i e^{i theta}]|`.
    pub degenerate_residual: f64,
    pub analytic_min: f64,
    /// The Hessian is positive on the complement of `span{i e^{i theta}}`.
    pub positive: bool,
}

impl SpectrumReport {
    pub const CSV_HEADER: &'static str = "c,T,theta,index,eigenvalue,mode,branch,symbol_min,degenerate_residual,positive";

    pub fn csv_rows(&self) -> Vec<String> {
        self.smallest
            .iter()
            .enumerate()
            .map(|(i, (v, k, b))| {
                let mode = k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt_f64(self.c),
                    fmt_f64(self.period),
                    fmt_f64(self.theta),
                    i,
                    fmt_f64(*v),
                    mode,
                    match b {
                        Branch::Lower => "lower",
                        Branch::Upper => "upper",
                    },
                    fmt_f64(self.analytic_min),
                    fmt_f64(self.degenerate_residual),
                    self.positive
                )
            })
            .collect()
    }
}

fn hessian_operator<'a>(base: &'a ComplexField, p: &'a Params) -> impl Fn(&[f64]) -> Vec<f64> + 'a {
    let grid = *base.grid();
    move |x: &[f64]| {
        let dir = ComplexField::from_real_vec(grid, x).expect("length");
        hessian_apply(base, &dir, p).expect("same grid").to_real_vec()
    }
}

fn helmholtz_operator(grid: TorusGrid) -> impl Fn(&[f64]) -> Vec<f64> {
    move |x: &[f64]| {
        let f = ComplexField::from_real_vec(grid, x).expect("length");
        precondition(&f).to_real_vec()
    }
}

/// Dominant Fourier mode of an eigenvector, folded to the representative
/// with non-negative first nonzero component.
fn dominant_mode(grid: &TorusGrid, v: &[f64]) -> Vec<i64> {
    let f = ComplexField::from_real_vec(*grid, v).expect("length");
    let s = transform_forward(&f);
    let (best, _) = s
        .coeffs()
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, c)| {
            if c.norm() > bv + 1e-12 {
                (i, c.norm())
            } else {
                (bi, bv)
            }
        });
    let m = grid.unravel(best);
    let mut k: Vec<i64> = (0..grid.dim()).map(|a| grid.wavenumber(a, m[a])).collect();
    if let Some(first) = k.iter().find(|&&x| x != 0) {
        if *first < 0 {
            k.iter_mut().for_each(|x| *x = -*x);
        }
    }
    k
}

/// The `count` smallest eigenvalues of the Hessian at `e^{i theta}` on the
/// complement of its degenerate phase direction.
pub fn hessian_spectrum_at_constant(
    theta: f64,
    p: &Params,
    grid: &TorusGrid,
    count: usize,
) -> Result<SpectrumReport, SpectrumError> {
    if count == 0 {
        return Err(SpectrumError::BadCount);
    }
    let base = constant(theta, *grid);
    let phase_dir = base.scale(Complex64::new(0.0, 1.0));
    let degenerate_residual = hessian_apply(&base, &phase_dir, p)?.sup_norm();
    let a = hessian_operator(&base, p);
    let t = helmholtz_operator(*grid);
    let constraints = vec![phase_dir.to_real_vec()];
    let problem = EigenProblem {
        dim: 2 * grid.len(),
        apply_a: &a,
        apply_b: None,
        precond: Some(&t),
        constraints: &constraints,
    };
    let result = linalg::lobpcg(
        &problem,
        &EigenOptions {
            want: count,
            block: count + 4,
            tol: 1e-11,
            max_iters: 5000,
            seed: 0x1e33a,
        },
    )?;
    let symbols = symbol_spectrum(grid, p.c);
    let smallest = result
        .values
        .iter()
        .zip(&result.vectors)
        .map(|(&value, v)| {
            let k = dominant_mode(grid, v);
            let branch = symbols
                .iter()
                .filter(|s| fold(&s.k) == k)
                .min_by(|a, b| (a.value - value).abs().total_cmp(&(b.value - value).abs()))
                .map(|s| s.branch)
                .unwrap_or(Branch::Lower);
            (value, k, branch)
        })
        .collect::<Vec<_>>();
    Ok(SpectrumReport {
        c: p.c,
        period: grid.period(),
        theta,
        positive: smallest[0].0 > 0.0,
        smallest,
        degenerate_residual,
        analytic_min: symbols[0].value,
    })
}

fn fold(k: &[i64]) -> Vec<i64> {
    let mut k = k.to_vec();
    if let Some(first) = k.iter().find(|&&x| x != 0) {
        if *first < 0 {
            k.iter_mut().for_each(|x| *x = -*x);
        }
    }
    k
}

/// Largest number of real unknowns accepted by [`dense_hessian_spectrum`].
pub const DENSE_LIMIT: usize = 2 * 16 * 16;

/// All eigenvalues of the Hessian at `base`, from the assembled matrix.
pub fn dense_hessian_spectrum(base: &ComplexField, p: &Params) -> Result<Vec<f64>, SpectrumError> {
    let n = 2 * base.grid().len();
    if n > DENSE_LIMIT {
        return Err(SpectrumError::TooLargeForDense { max: DENSE_LIMIT, got: n });
    }
    let m = linalg::assemble(n, hessian_operator(base, p));
    Ok(linalg::symmetric_eigen(m).0)
}

/// Smallest nonzero eigenvalue of `-Lap` and the constant `C_T = lambda / 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareConstant {
    pub lambda: f64,
    pub c_t: f64,
}

pub fn poincare_constant(grid: &TorusGrid) -> PoincareConstant {
    let lambda = laplacian_symbol(grid)
        .into_iter()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    PoincareConstant {
        lambda,
        c_t: lambda / 4.0,
    }
}

fn real_laplacian(grid: TorusGrid) -> impl Fn(&[f64]) -> Vec<f64> {
    let symbol = laplacian_symbol(&grid);
    move |u: &[f64]| {
        let f = ComplexField::from_real(grid, u).expect("length");
        let mut s = transform_forward(&f);
        for (c, k2) in s.coeffs_mut().iter_mut().zip(&symbol) {
            *c *= *k2;
        }
        crate::field::transform_inverse(&s)
            .values()
            .iter()
            .map(|v| v.re)
            .collect()
    }
}

/// `inf int |grad u|^2 / int f u^2` over real `u` with `int f u = 0`.
pub fn weighted_eigenvalue(weight: &[f64], grid: &TorusGrid) -> Result<f64, SpectrumError> {
    if weight.len() != grid.len() {
        return Err(FieldError::LengthMismatch {
            expected: grid.len(),
            got: weight.len(),
        }
        .into());
    }
    if let Some((node, &value)) = weight
        .iter()
        .enumerate()
        .find(|(_, &w)| !(0.5..=2.0).contains(&w))
    {
        return Err(SpectrumError::WeightOutOfRange { node, value });
    }
    let a = real_laplacian(*grid);
    let w = weight.to_vec();
    let b = move |u: &[f64]| -> Vec<f64> { u.iter().zip(&w).map(|(x, f)| x * f).collect() };
    let symbol = laplacian_symbol(grid);
    let g = *grid;
    let lambda1 = poincare_constant(grid).lambda;
    let t = move |u: &[f64]| -> Vec<f64> {
        let f = ComplexField::from_real(g, u).expect("length");
        let mut s = transform_forward(&f);
        for (c, k2) in s.coeffs_mut().iter_mut().zip(&symbol) {
            *c /= lambda1 + k2;
        }
        crate::field::transform_inverse(&s).values().iter().map(|v| v.re).collect()
    };
    let constraints = vec![vec![1.0; grid.len()]];
    let problem = EigenProblem {
        dim: grid.len(),
        apply_a: &a,
        apply_b: Some(&b),
        precond: Some(&t),
        constraints: &constraints,
    };
    let block = 2 * grid.dim() + 1;
    let r = linalg::lobpcg(
        &problem,
        &EigenOptions {
            want: 1,
            block,
            tol: 1e-13,
            max_iters: 5000,
            seed: 0xd2,
        },
    )?;
    Ok(r.values[0])
}

/// Dense oracle for [`weighted_eigenvalue`] on small grids.
pub fn weighted_eigenvalue_dense(weight: &[f64], grid: &TorusGrid) -> Result<f64, SpectrumError> {
    let n = grid.len();
    if n > DENSE_LIMIT {
        return Err(SpectrumError::TooLargeForDense { max: DENSE_LIMIT, got: n });
    }
    // Symmetrize with B^{-1/2}: the constant vector is the zero mode, so the
    // constrained minimum is the second eigenvalue.
    let lap = linalg::assemble(n, real_laplacian(*grid));
    let s: Vec<f64> = weight.iter().map(|w| 1.0 / w.sqrt()).collect();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| s[i] * lap[(i, j)] * s[j]);
    Ok(linalg::symmetric_eigen(m).0[1])
}

/// Sufficient condition for the zero branch to be isolated:
/// `T < 2 pi / sqrt(8 + 4 c^2)`.
pub fn case1_bound(c: f64) -> f64 {
    2.0 * PI / (8.0 + 4.0 * c * c).sqrt()
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub c: f64,
    pub periods: Vec<f64>,
    pub starts: usize,
    pub resolution: usize,
    pub dim: usize,
    pub seed: u64,
    pub band: usize,
    /// Also start from `1 + w_R` wherever it fits.
    pub ansatz: Option<VortexAnsatz>,
    /// Also start from every plane wave that exists at the scanned period.
    pub plane_wave_seeds: bool,
    pub max_iters: usize,
}

impl ScanConfig {
    pub fn new(c: f64, periods: Vec<f64>) -> Self {
        Self {
            c,
            periods,
            starts: 20,
            resolution: 32,
            dim: 2,
            seed: 1,
            band: 4,
            ansatz: None,
            plane_wave_seeds: true,
            max_iters: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub period: f64,
    pub runs: usize,
    pub constant: usize,
    pub nonconstant: usize,
    pub not_converged: usize,
    pub all_constant: bool,
    /// Classification of the lowest-action nonconstant field found, if any.
    pub witness: Option<Classification>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub c: f64,
    pub case1_bound: f64,
    pub plane_wave_onset: f64,
    /// Largest scanned period such that it and every smaller scanned period
    /// produced only constants.
    pub empirical_onset: Option<f64>,
    /// First scanned period at which a nonconstant critical point was found.
    pub first_nonconstant: Option<f64>,
    pub rows: Vec<ScanRow>,
}

impl ThresholdReport {
    pub const CSV_HEADER: &'static str = "c,T,runs,constant,nonconstant,not_converged,all_constant,witness";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    fmt_f64(self.c),
                    fmt_f64(r.period),
                    r.runs,
                    r.constant,
                    r.nonconstant,
                    r.not_converged,
                    r.all_constant,
                    r.witness.map(|w| w.as_str()).unwrap_or("")
                )
            })
            .collect()
    }

    pub const SUMMARY_HEADER: &'static str = "c,case1_bound,plane_wave_onset,empirical_onset,first_nonconstant";

    pub fn summary_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            fmt_f64(self.c),
            fmt_f64(self.case1_bound),
            fmt_f64(self.plane_wave_onset),
            self.empirical_onset.map(fmt_f64).unwrap_or_default(),
            self.first_nonconstant.map(fmt_f64).unwrap_or_default()
        )
    }
}

/// Initial fields used at one period of a scan.
pub fn scan_starts(cfg: &ScanConfig, grid: &TorusGrid) -> Vec<ComplexField> {
    const AMPLITUDES: [f64; 3] = [0.1, 0.5, 1.0];
    let mut inits: Vec<ComplexField> = (0..cfg.starts)
        .map(|i| {
            perturb(
                &constant(0.0, *grid),
                AMPLITUDES[i % AMPLITUDES.len()],
                cfg.band,
                cfg.seed.wrapping_add(i as u64),
            )
            .expect("valid perturbation")
        })
        .collect();
    if let Some(a) = &cfg.ansatz {
        if let Ok(f) = a.field(grid) {
            inits.push(f);
        }
    }
    if cfg.plane_wave_seeds {
        let half = grid.sizes()[0] as i64 / 2;
        for k in (-half + 1)..half {
            if k == 0 {
                continue;
            }
            if let Ok(f) = plane_wave(k, cfg.c, *grid) {
                inits.push(f);
            }
        }
    }
    inits
}

/// Multi-start search for nonconstant critical points over a list of periods.
pub fn constancy_scan(cfg: &ScanConfig) -> Result<ThresholdReport, SpectrumError> {
    let p = Params::new(cfg.c)?;
    let mut periods = cfg.periods.clone();
    periods.sort_by(f64::total_cmp);
    let jobs: Vec<(usize, ComplexField)> = periods
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let grid = TorusGrid::cubic(cfg.dim, cfg.resolution, t)?;
            Ok(scan_starts(cfg, &grid).into_iter().map(move |f| (i, f)))
        })
        .collect::<Result<Vec<_>, FieldError>>()?
        .into_iter()
        .flatten()
        .collect();
    let outcomes: Vec<(usize, Result<(Classification, bool, f64), MinimizeError>)> = jobs
        .into_par_iter()
        .map(|(i, init)| {
            let mut opts = MinimizeOptions::for_grid(init.grid());
            opts.max_iters = cfg.max_iters;
            let r = minimize_action(&init, &p, &opts)
                .map(|cp| (cp.classification, cp.converged, cp.report.action));
            (i, r)
        })
        .collect();

    let mut rows: Vec<ScanRow> = periods
        .iter()
        .map(|&t| ScanRow {
            period: t,
            runs: 0,
            constant: 0,
            nonconstant: 0,
            not_converged: 0,
            all_constant: true,
            witness: None,
        })
        .collect();
    let mut best: Vec<f64> = vec![f64::INFINITY; periods.len()];
    for (i, r) in outcomes {
        let row = &mut rows[i];
        row.runs += 1;
        match r {
            Ok((class, converged, action)) => {
                if !converged {
                    row.not_converged += 1;
                } else if class.is_constant() {
                    row.constant += 1;
                } else {
                    row.nonconstant += 1;
                    row.all_constant = false;
                    if action < best[i] {
                        best[i] = action;
                        row.witness = Some(class);
                    }
                }
            }
            Err(_) => row.not_converged += 1,
        }
    }
    let mut empirical_onset = None;
    let mut first_nonconstant = None;
    for r in &rows {
        if r.all_constant {
            empirical_onset = Some(r.period);
        } else {
            first_nonconstant = Some(r.period);
            break;
        }
    }
    Ok(ThresholdReport {
        c: cfg.c,
        case1_bound: case1_bound(cfg.c),
        plane_wave_onset: PlaneWave::onset_period(cfg.c),
        empirical_onset,
        first_nonconstant,
        rows,
    })
}

/// Positivity of the Hessian at the unit constant over a `(c, T)` lattice,
/// computed by eigen-iteration. Rows follow `speeds`, columns `periods`.
pub fn positivity_region(
    speeds: &[f64],
    periods: &[f64],
    points: usize,
) -> Result<Vec<Vec<bool>>, SpectrumError> {
    speeds
        .par_iter()
        .map(|&c| {
            periods
                .iter()
                .map(|&t| {
                    let grid = TorusGrid::cubic(2, points, t)?;
                    let p = Params::new(c)?;
                    Ok(hessian_spectrum_at_constant(0.0, &p, &grid, 1)?.positive)
                })
                .collect()
        })
        .collect()
}

/// Binary PGM (P5) image of a boolean lattice; `true` is white.
pub fn lattice_pgm(flags: &[Vec<bool>]) -> Vec<u8> {
    let h = flags.len();
    let w = flags.first().map(|r| r.len()).unwrap_or(0);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in flags {
        out.extend(row.iter().map(|&b| if b { 255u8 } else { 0 }));
    }
    out
}
