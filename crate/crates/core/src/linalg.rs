//! Matrix-free kernels on real vectors: a locally optimal block
//! preconditioned CG eigensolver, preconditioned MINRES, and dense helpers
//! used as cross-checks on small grids.
//!
//! Complex fields enter as interleaved `(re, im)` vectors, so the Euclidean
//! dot product agrees with the real `L2` pairing up to the cell volume.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("requested {want} eigenpairs from a block of {block}")]
    BadBlock { want: usize, block: usize },
    #[error("search space collapsed: constraints span the whole space")]
    Collapsed,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Symmetric eigendecomposition with eigenvalues in ascending order.
pub fn symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Assembles the matrix of a linear operator column by column.
pub fn assemble(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = apply(&e);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
        e[j] = 0.0;
    }
    m
}

/// Settings for [`lobpcg`].
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Number of eigenpairs that must converge.
    pub want: usize,
    /// Block size (>= want); extra vectors speed up clustered spectra.
    pub block: usize,
    /// Relative residual tolerance `||A x - lambda B x|| <= tol * scale`.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            want: 1,
            block: 3,
            tol: 1e-10,
            max_iters: 2000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Problem description for [`lobpcg`]: `A x = lambda B x` restricted to the
/// `B`-orthogonal complement of `constraints`.
pub struct EigenProblem<'a> {
    pub dim: usize,
    pub apply_a: &'a dyn Fn(&[f64]) -> Vec<f64>,
    /// Defaults to the identity.
    pub apply_b: Option<&'a dyn Fn(&[f64]) -> Vec<f64>>,
    /// Symmetric positive definite preconditioner, identity if absent.
    pub precond: Option<&'a dyn Fn(&[f64]) -> Vec<f64>>,
    pub constraints: &'a [Vec<f64>],
}

impl EigenProblem<'_> {
    fn b(&self, x: &[f64]) -> Vec<f64> {
        match self.apply_b {
            Some(b) => b(x),
            None => x.to_vec(),
        }
    }

    /// Removes the constraint components (constraints need not be normalized).
    fn project(&self, x: &mut [f64], cons_b: &[(Vec<f64>, f64)]) {
        for (y, (by, yby)) in self.constraints.iter().zip(cons_b) {
            let coef = dot(by, x) / yby;
            axpy(-coef, y, x);
        }
    }
}

/// `B`-orthonormalizes `vectors` in place with two passes of Gram-Schmidt,
/// dropping vectors that are numerically dependent. Returns the kept vectors
/// together with their images under `B`.
fn b_orthonormalize(
    problem: &EigenProblem<'_>,
    vectors: Vec<Vec<f64>>,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut bbasis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        let start = problem.b(&v);
        let start_norm = dot(&v, &start).max(0.0).sqrt();
        if !(start_norm > 0.0) || !start_norm.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for (u, bu) in basis.iter().zip(&bbasis) {
                let coef = dot(bu, &v);
                axpy(-coef, u, &mut v);
            }
        }
        let bv = problem.b(&v);
        let n = dot(&v, &bv).max(0.0).sqrt();
        if n <= 1e-10 * start_norm {
            continue;
        }
        let inv = 1.0 / n;
        basis.push(v.iter().map(|x| x * inv).collect());
        bbasis.push(bv.iter().map(|x| x * inv).collect());
    }
    (basis, bbasis)
}

/// Smallest eigenpairs of a symmetric pencil by LOBPCG with Rayleigh-Ritz on
/// an explicitly orthonormalized `[X, W, P]` basis.
pub fn lobpcg(problem: &EigenProblem<'_>, opts: &EigenOptions) -> Result<EigenResult, LinalgError> {
    if opts.want == 0 || opts.block < opts.want {
        return Err(LinalgError::BadBlock {
            want: opts.want,
            block: opts.block,
        });
    }
    let n = problem.dim;
    let cons_b: Vec<(Vec<f64>, f64)> = problem
        .constraints
        .iter()
        .map(|y| {
            let by = problem.b(y);
            let yby = dot(y, &by);
            (by, yby)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..opts.block)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            problem.project(&mut v, &cons_b);
            v
        })
        .collect();
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut values = vec![0.0; opts.block];
    let mut residuals = vec![f64::INFINITY; opts.block];
    let mut last_worst = f64::INFINITY;

    for iter in 0..=opts.max_iters {
        // Rayleigh-Ritz on span[X, W, P]; W is built from the current X.
        let mut candidates = x.clone();
        if iter > 0 {
            let ax: Vec<Vec<f64>> = x.iter().map(|v| (problem.apply_a)(v)).collect();
            let mut scale = 0.0_f64;
            for (i, (xi, axi)) in x.iter().zip(&ax).enumerate() {
                let bxi = problem.b(xi);
                let mut r = axi.clone();
                axpy(-values[i], &bxi, &mut r);
                residuals[i] = norm(&r) / norm(&bxi).max(1e-300);
                scale = scale.max(values[i].abs());
                let mut w = match problem.precond {
                    Some(t) => t(&r),
                    None => r,
                };
                problem.project(&mut w, &cons_b);
                candidates.push(w);
            }
            let scale = scale.max(1.0);
            let worst = residuals[..opts.want]
                .iter()
                .copied()
                .fold(0.0_f64, f64::max);
            last_worst = worst;
            if worst <= opts.tol * scale {
                let vectors = x[..opts.want].to_vec();
                return Ok(EigenResult {
                    values: values[..opts.want].to_vec(),
                    vectors,
                    residuals: residuals[..opts.want].to_vec(),
                    iterations: iter,
                });
            }
            candidates.extend(p.iter().cloned());
        }
        let (basis, _) = b_orthonormalize(problem, candidates);
        if basis.len() < opts.block {
            if basis.is_empty() {
                return Err(LinalgError::Collapsed);
            }
            // Re-seed missing directions; happens when X loses rank.
            let mut extra: Vec<Vec<f64>> = basis.clone();
            while extra.len() < opts.block + basis.len() {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                problem.project(&mut v, &cons_b);
                extra.push(v);
            }
            let (b2, _) = b_orthonormalize(problem, extra);
            if b2.len() < opts.block {
                return Err(LinalgError::Collapsed);
            }
            x = b2[..opts.block].to_vec();
            p.clear();
            continue;
        }
        let images: Vec<Vec<f64>> = basis.iter().map(|v| (problem.apply_a)(v)).collect();
        let m = basis.len();
        let gram = DMatrix::from_fn(m, m, |i, j| dot(&basis[i], &images[j]));
        let (ritz, coef) = symmetric_eigen(gram);
        let nx = x.len().min(m);
        let mut new_x = Vec::with_capacity(opts.block);
        let mut new_p = Vec::with_capacity(opts.block);
        for k in 0..opts.block {
            let mut v = vec![0.0; n];
            let mut dir = vec![0.0; n];
            for (j, bj) in basis.iter().enumerate() {
                let c = coef[(j, k)];
                axpy(c, bj, &mut v);
                if j >= nx && iter > 0 {
                    axpy(c, bj, &mut dir);
                }
            }
            new_x.push(v);
            if iter > 0 {
                new_p.push(dir);
            }
            values[k] = ritz[k];
        }
        x = new_x;
        p = new_p;
    }
    Err(LinalgError::NoConvergence {
        iterations: opts.max_iters,
        residual: last_worst,
    })
}

/// Outcome of [`minres`].
#[derive(Debug, Clone)]
pub struct MinresResult {
    pub x: Vec<f64>,
    /// Estimated preconditioned residual norm relative to the right-hand side.
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Preconditioned MINRES for symmetric (possibly indefinite or singular)
/// systems `A x = b`; the preconditioner must be symmetric positive definite.
pub fn minres(
    apply_a: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> MinresResult {
    let n = b.len();
    let m = |v: &[f64]| match precond {
        Some(p) => p(v),
        None => v.to_vec(),
    };
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = m(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return MinresResult {
            x,
            relative_residual: 0.0,
            iterations: 0,
        };
    }
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut iterations = 0;
    for itn in 1..=max_iters {
        iterations = itn;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
        y = apply_a(&v);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        r1 = std::mem::replace(&mut r2, y.clone());
        y = m(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        let w1 = std::mem::take(&mut w2);
        w2 = std::mem::take(&mut w);
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, w1i), w2i)| (vi - oldeps * w1i - delta * w2i) * denom)
            .collect();
        axpy(phi, &w, &mut x);
        if phibar <= tol * beta1 || beta == 0.0 {
            break;
        }
    }
    MinresResult {
        x,
        relative_residual: phibar / beta1,
        iterations,
    }
}
