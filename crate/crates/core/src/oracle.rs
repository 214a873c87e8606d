//! Brute-force O(n^2) and O(n^3) reference computations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::graph::{Edge, WeightedEdgeList};
use crate::kernel::KernelSpec;
use crate::points::PointSet;

/// `A y` for the kernel graph, zero diagonal, by a double loop.
pub fn dense_adjacency_apply(p: &PointSet, k: &KernelSpec, y: &[f64]) -> Result<Vec<f64>> {
    check_len(p.n(), y.len())?;
    (0..p.n())
        .into_par_iter()
        .map(|i| {
            let xi = p.point(i);
            let mut s = 0.0;
            for (j, yj) in y.iter().enumerate() {
                if j != i {
                    s += k.eval(crate::points::sq_dist(xi, p.point(j)))? * yj;
                }
            }
            Ok(s)
        })
        .collect()
}

/// `L y = D y - A y` for the kernel graph.
pub fn dense_laplacian_apply(p: &PointSet, k: &KernelSpec, y: &[f64]) -> Result<Vec<f64>> {
    check_len(p.n(), y.len())?;
    (0..p.n())
        .into_par_iter()
        .map(|i| {
            let xi = p.point(i);
            let mut s = 0.0;
            for (j, yj) in y.iter().enumerate() {
                if j != i {
                    s += k.eval(crate::points::sq_dist(xi, p.point(j)))? * (y[i] - yj);
                }
            }
            Ok(s)
        })
        .collect()
}

/// The complete kernel graph. Zero-weight pairs are dropped; negative weights are an error.
pub fn kernel_graph(p: &PointSet, k: &KernelSpec) -> Result<WeightedEdgeList> {
    let rows: Vec<Vec<Edge>> = (0..p.n())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in i + 1..p.n() {
                let w = k.eval(p.sq_dist(i, j))?;
                if w < 0.0 {
                    return Err(Error::Domain(format!(
                        "{k}: negative weight {w:e} between points {i} and {j}"
                    )));
                }
                if w > 0.0 {
                    row.push(Edge::new(i, j, w));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    WeightedEdgeList::new(p.n(), rows.concat())
}

pub fn laplacian_matrix(g: &WeightedEdgeList) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for e in g.edges() {
        let (u, v) = (e.u as usize, e.v as usize);
        l[(u, u)] += e.w;
        l[(v, v)] += e.w;
        l[(u, v)] -= e.w;
        l[(v, u)] -= e.w;
    }
    l
}

/// Dense Moore-Penrose pseudoinverse of a connected graph Laplacian.
#[derive(Debug, Clone)]
pub struct Pseudoinverse {
    mat: DMatrix<f64>,
}

impl Pseudoinverse {
    /// Uses `L^+ = (L + J/n)^{-1} - J/n`.
    pub fn new(g: &WeightedEdgeList) -> Result<Self> {
        g.require_connected()?;
        let n = g.n();
        let shift = 1.0 / n as f64;
        let mut m = laplacian_matrix(g);
        m.add_scalar_mut(shift);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Singular("L + J/n is not positive definite".into()))?;
        let mut inv = chol.inverse();
        inv.add_scalar_mut(-shift);
        Ok(Self { mat: inv })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut bb = b.to_vec();
        crate::linalg::project_out_ones(&mut bb);
        (&self.mat * DVector::from_vec(bb)).data.into()
    }

    pub fn reff(&self, u: usize, v: usize) -> f64 {
        self.mat[(u, u)] + self.mat[(v, v)] - 2.0 * self.mat[(u, v)]
    }
}

/// `b_uv^T L^+ b_uv` via a dense pseudoinverse.
pub fn exact_reff(g: &WeightedEdgeList, u: usize, v: usize) -> Result<f64> {
    if u >= g.n() || v >= g.n() || u == v {
        return Err(Error::InvalidInput(format!("need distinct vertices below {}, got ({u}, {v})", g.n())));
    }
    Ok(Pseudoinverse::new(g)?.reff(u, v))
}

/// `b_uv^T L^+ b_uv` by grounding `v` inside its component; infinite across components.
pub fn grounded_reff(g: &WeightedEdgeList, u: usize, v: usize) -> Result<f64> {
    if u >= g.n() || v >= g.n() {
        return Err(Error::InvalidInput(format!("vertex out of range for n = {}", g.n())));
    }
    if u == v {
        return Ok(0.0);
    }
    let comps = g.components();
    if comps.label[u] != comps.label[v] {
        return Ok(f64::INFINITY);
    }
    // Index the component's vertices other than v.
    let mut slot = vec![usize::MAX; g.n()];
    let mut m = 0;
    for (i, &c) in comps.label.iter().enumerate() {
        if c == comps.label[u] && i != v {
            slot[i] = m;
            m += 1;
        }
    }
    let mut l = DMatrix::zeros(m, m);
    for e in g.edges() {
        let (a, b) = (slot[e.u as usize], slot[e.v as usize]);
        if a != usize::MAX {
            l[(a, a)] += e.w;
        }
        if b != usize::MAX {
            l[(b, b)] += e.w;
        }
        if a != usize::MAX && b != usize::MAX {
            l[(a, b)] -= e.w;
            l[(b, a)] -= e.w;
        }
    }
    let chol = l
        .cholesky()
        .ok_or_else(|| Error::Singular("grounded Laplacian is not positive definite".into()))?;
    let mut rhs = DVector::zeros(m);
    rhs[slot[u]] = 1.0;
    Ok(chol.solve(&rhs)[slot[u]])
}

/// `sqrt(x^T L x)`.
pub fn lap_norm(g: &WeightedEdgeList, x: &[f64]) -> f64 {
    g.quadratic_form(x).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralCheck {
    pub pass: bool,
    pub eig_min: f64,
    pub eig_max: f64,
}

/// Extremal eigenvalues of `L_G^{+/2} L_H L_G^{+/2}` on the complement of the ones vector.
pub fn spectral_check(g: &WeightedEdgeList, h: &WeightedEdgeList, eps: f64) -> Result<SpectralCheck> {
    check_len(g.n(), h.n())?;
    g.require_connected()?;
    let n = g.n();
    if n < 2 {
        return Ok(SpectralCheck { pass: true, eig_min: 1.0, eig_max: 1.0 });
    }
    let a = restrict_to_ones_complement(laplacian_matrix(g));
    let b = restrict_to_ones_complement(laplacian_matrix(h));
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular("L_G restricted to 1-perp is not positive definite".into()))?;
    let l = chol.l();
    // M = L^{-1} B L^{-T}
    let y = l
        .solve_lower_triangular(&b)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let mut m = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m).eigenvalues;
    let eig_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let eig_max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9;
    Ok(SpectralCheck {
        pass: eig_min >= 1.0 - eps - tol && eig_max <= 1.0 + eps + tol,
        eig_min,
        eig_max,
    })
}

/// Applies the Householder reflection sending `1/sqrt(n)` to `-e_1` on both sides and
/// drops the first row and column.
fn restrict_to_ones_complement(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut v = DVector::from_element(n, 1.0);
    v[0] += (n as f64).sqrt();
    let beta = 2.0 / v.dot(&v);
    let p = &a * &v * beta;
    let w = &p - &v * (0.5 * beta * p.dot(&v));
    a -= &v * w.transpose() + &w * v.transpose();
    a.view((1, 1), (n - 1, n - 1)).into_owned()
}
