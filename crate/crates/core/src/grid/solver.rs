use serde::{Deserialize, Serialize};

use super::operator::SparseOperator;
use crate::error::{LabError, Result};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Target `||b - Ax||_2 / ||b||_2`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    par::dot(v, v).sqrt()
}

fn residual(a: &SparseOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.apply(x, r);
    par::update_indexed(r, |i, ax| b[i] - ax);
}

/// Jacobi-preconditioned BiCGSTAB for a general (nonsymmetric) sparse system.
/// With `guess` set, `x` holds the initial guess; otherwise the solve starts
/// from `D^{-1} b`.
pub fn bicgstab(a: &SparseOperator, b: &[f64], x: &mut [f64], guess: bool, opts: &SolverOptions) -> Result<SolveStats> {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    if !guess {
        par::fill_indexed(x, |i| b[i] * dinv[i]);
    }
    let mut r = vec![0.0; n];
    let mut r_hat = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = f64::INFINITY;

    // Outer restarts guard against drift between the recursive and true residuals.
    for _restart in 0..8 {
        residual(a, b, x, &mut r);
        rel = norm(&r) / bnorm;
        if rel <= opts.rel_tol {
            return Ok(SolveStats { iterations, rel_residual: rel });
        }
        r_hat.copy_from_slice(&r);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        while iterations < opts.max_iter {
            iterations += 1;
            let rho_new = par::dot(&r_hat, &r);
            if rho_new == 0.0 || !rho_new.is_finite() {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            par::update_indexed(&mut p, |i, pi| r[i] + beta * (pi - omega * v[i]));
            par::fill_indexed(&mut y, |i| dinv[i] * p[i]);
            a.apply(&y, &mut v);
            let denom = par::dot(&r_hat, &v);
            if denom == 0.0 {
                break;
            }
            alpha = rho / denom;
            par::axpy(alpha, &y, x);
            par::axpy(-alpha, &v, &mut r);
            let snorm = norm(&r) / bnorm;
            if snorm <= 0.5 * opts.rel_tol {
                break;
            }
            par::fill_indexed(&mut z, |i| dinv[i] * r[i]);
            a.apply(&z, &mut t);
            let tt = par::dot(&t, &t);
            if tt == 0.0 {
                break;
            }
            omega = par::dot(&t, &r) / tt;
            par::axpy(omega, &z, x);
            par::axpy(-omega, &t, &mut r);
            if norm(&r) / bnorm <= 0.5 * opts.rel_tol || omega == 0.0 {
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
    }
    residual(a, b, x, &mut r);
    rel = rel.min(norm(&r) / bnorm);
    if rel <= opts.rel_tol {
        Ok(SolveStats { iterations, rel_residual: rel })
    } else {
        Err(LabError::SolveFailed {
            iterations,
            residual: rel,
        })
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite
/// operator given as a matrix-free `apply`. `x` is the initial guess.
pub fn conjugate_gradient<F>(apply: F, diag: &[f64], b: &[f64], x: &mut [f64], opts: &SolverOptions) -> Result<SolveStats>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    par::update_indexed(&mut r, |i, ax| b[i] - ax);
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = par::dot(&r, &z);
    let mut rel = norm(&r) / bnorm;
    let mut iterations = 0;
    while rel > opts.rel_tol && iterations < opts.max_iter {
        iterations += 1;
        apply(&p, &mut q);
        let pq = par::dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        par::axpy(alpha, &p, x);
        par::axpy(-alpha, &q, &mut r);
        rel = norm(&r) / bnorm;
        par::fill_indexed(&mut z, |i| r[i] / diag[i]);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::update_indexed(&mut p, |i, pi| z[i] + beta * pi);
    }
    if rel <= opts.rel_tol {
        Ok(SolveStats { iterations, rel_residual: rel })
    } else {
        Err(LabError::SolveFailed {
            iterations,
            residual: rel,
        })
    }
}
