//! Small dense and iterative linear-algebra helpers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PcgOptions {
    /// Stop once `||r||_2 <= tol * ||b||_2`.
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive semidefinite
/// operator on a consistent system. `project` maps vectors into the range.
pub fn pcg<A, M, P>(apply: A, precond: M, project: P, b: &[f64], opts: PcgOptions) -> Result<PcgOutcome>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&mut [f64]),
{
    let n = b.len();
    let mut r = b.to_vec();
    project(&mut r);
    let b_norm = norm2(&r);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(PcgOutcome { x, iterations: 0, rel_residual: 0.0 });
    }
    let mut z = precond(&r);
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..opts.max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Search direction collapsed into the null space.
            return Ok(PcgOutcome { x, iterations: it, rel_residual: rel });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rel = norm2(&r) / b_norm;
        if rel <= opts.tol {
            project(&mut x);
            return Ok(PcgOutcome { x, iterations: it + 1, rel_residual: rel });
        }
        z = precond(&r);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: rel })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Subtracts the mean, projecting onto the complement of the all-ones vector.
pub fn project_out_ones(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
