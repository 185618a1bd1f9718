//! Krylov-subspace kernels for Hermitian operators: thick-restart Lanczos
//! for the lowest eigenpair and Lanczos propagation of `exp(-i H t) psi`.
//!
//! The eigensolver reorthogonalizes every new vector against the whole basis
//! (two Gram-Schmidt passes), so the projected matrix stays accurate when Ritz
//! values cluster. The propagator only needs a few vectors per short step
//! and runs the plain three-term recurrence.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::{dot, norm, Drive, RydbergOperator, C64};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// A [`RydbergOperator`] frozen at one drive point.
pub struct DrivenOperator<'a> {
    pub op: &'a RydbergOperator,
    pub drive: Drive,
}

impl LinearOperator for DrivenOperator<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.op.apply_into(self.drive, x, y)
    }
}

impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let v = DVector::from_column_slice(x);
        y.copy_from_slice((self * v).as_slice());
    }
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(alpha: f64, x: &mut [C64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Orthogonalizes `w` against `basis` twice; returns the accumulated
/// coefficients `<v_i|w>`.
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut coeffs = vec![C64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = dot(v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coeffs
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Stop once `||H x - theta x|| <= tol`.
    pub tol: f64,
    /// Krylov basis size per restart cycle.
    pub basis_size: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-9, basis_size: 48, keep: 16, max_restarts: 400 }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
}

/// Lowest eigenpair of a Hermitian operator, starting from `start`.
pub fn lowest_eigenpair<A: LinearOperator + ?Sized>(
    op: &A,
    start: &[C64],
    opts: &EigenOptions,
) -> Result<Eigenpair> {
    let dim = op.dim();
    if start.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: start.len() });
    }
    let m = opts.basis_size.min(dim).max(2);
    let keep = opts.keep.clamp(1, m - 1);

    let mut v0 = start.to_vec();
    let n0 = norm(&v0);
    if n0 == 0.0 {
        return Err(Error::Unnormalized(0.0));
    }
    scale(1.0 / n0, &mut v0);

    let mut basis: Vec<Vec<C64>> = vec![v0];
    // projected matrix, grown column by column
    let mut t = DMatrix::<C64>::zeros(m, m);
    let mut locked = 0usize;
    let mut matvecs = 0usize;
    let mut w = vec![C64::new(0.0, 0.0); dim];

    for _restart in 0..=opts.max_restarts {
        let mut size = m;
        let mut beta = 0.0;
        for j in locked..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let coeffs = orthogonalize(&basis, &mut w);
            for (i, c) in coeffs.iter().enumerate() {
                t[(i, j)] = *c;
                t[(j, i)] = c.conj();
            }
            t[(j, j)] = C64::new(t[(j, j)].re, 0.0);
            beta = norm(&w);
            let invariant = beta <= 1e-14 * (1.0 + t[(j, j)].norm());
            if invariant || basis.len() == dim {
                size = j + 1;
                beta = 0.0;
                break;
            }
            let mut next = w.clone();
            scale(1.0 / beta, &mut next);
            basis.push(next);
            if j + 1 < m {
                t[(j + 1, j)] = C64::new(beta, 0.0);
                t[(j, j + 1)] = C64::new(beta, 0.0);
            }
        }

        let proj = t.view((0, 0), (size, size)).into_owned();
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let lowest = order[0];
        let ritz_residual = beta * eig.eigenvectors[(size - 1, lowest)].norm();

        let combine = |col: usize| -> Vec<C64> {
            let mut x = vec![C64::new(0.0, 0.0); dim];
            for (i, v) in basis.iter().take(size).enumerate() {
                axpy(eig.eigenvectors[(i, col)], v, &mut x);
            }
            x
        };

        if ritz_residual <= opts.tol || beta == 0.0 {
            let mut x = combine(lowest);
            let nx = norm(&x);
            scale(1.0 / nx, &mut x);
            // explicit residual check
            op.apply(&x, &mut w);
            matvecs += 1;
            let theta = dot(&x, &w).re;
            axpy(C64::new(-theta, 0.0), &x, &mut w);
            let residual = norm(&w);
            if residual <= opts.tol.max(1e-13 * theta.abs()) * 10.0 || beta == 0.0 {
                return Ok(Eigenpair { value: theta, vector: x, residual, matvecs });
            }
        }

        // thick restart: keep the lowest `keep` Ritz vectors plus the residual
        let k = keep.min(size - 1);
        let kept: Vec<Vec<C64>> = order[..k].iter().map(|&col| combine(col)).collect();
        if basis.len() != size + 1 {
            return Err(Error::NoConvergence("Krylov space exhausted before convergence".into()));
        }
        let residual_vec = basis.pop().expect("length checked");
        t.fill(C64::new(0.0, 0.0));
        for (i, &col) in order[..k].iter().enumerate() {
            t[(i, i)] = C64::new(eig.eigenvalues[col], 0.0);
        }
        basis = kept;
        basis.push(residual_vec);
        locked = k;
    }
    Err(Error::NoConvergence(format!(
        "lowest eigenpair not within {} after {} restarts ({matvecs} products)",
        opts.tol, opts.max_restarts
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpOptions {
    /// Bound on the a-posteriori error estimate of one propagation.
    pub tol: f64,
    pub max_dim: usize,
}

impl Default for ExpOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_dim: 40 }
    }
}

/// `exp(-i H dt) psi` by Lanczos; `psi` is overwritten. Returns the Krylov
/// dimension used.
pub fn expm_apply<A: LinearOperator + ?Sized>(
    op: &A,
    psi: &mut [C64],
    dt: f64,
    opts: &ExpOptions,
) -> Result<usize> {
    let dim = op.dim();
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return Ok(0);
    }
    let max_dim = opts.max_dim.min(dim).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_dim + 1);
    let mut v = psi.to_vec();
    scale(1.0 / beta0, &mut v);
    basis.push(v);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];

    for j in 0..max_dim {
        op.apply(&basis[j], &mut w);
        // short steps keep the basis small; the three-term recurrence,
        // applied twice, holds orthogonality to working precision there
        let window = j.saturating_sub(1);
        let coeffs = orthogonalize(&basis[window..], &mut w);
        alpha.push(coeffs[j - window].re);
        let b = norm(&w);
        let k = j + 1;
        let small = exp_tridiagonal(&alpha, &beta, dt);
        let exhausted = b <= 1e-14 * (1.0 + alpha[j].abs()) || k == dim;
        // leakage into the next Krylov direction over one step
        let estimate = beta0 * b * dt.abs() * small[k - 1].norm();
        if exhausted || estimate <= opts.tol {
            psi.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for (i, c) in small.iter().enumerate() {
                axpy(c * beta0, &basis[i], psi);
            }
            return Ok(k);
        }
        beta.push(b);
        let mut next = w.clone();
        scale(1.0 / b, &mut next);
        basis.push(next);
    }
    Err(Error::NoConvergence(format!(
        "Krylov exponential needs more than {max_dim} vectors at dt = {dt}"
    )))
}

/// First column of `exp(-i T dt)` for the symmetric tridiagonal `T`.
fn exp_tridiagonal(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<C64> {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..k)
        .map(|r| {
            (0..k).fold(C64::new(0.0, 0.0), |acc, c| {
                let phase = C64::from_polar(1.0, -eig.eigenvalues[c] * dt);
                acc + phase * eig.eigenvectors[(r, c)] * eig.eigenvectors[(0, c)]
            })
        })
        .collect()
}
