//! Multiplication from a solver, solving from a multiplier, and the end-to-end
//! kernel Laplacian solver built from a sparsifier and a fast multiplier.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::fgt::FgtAdjacency;
use crate::graph::{LaplacianCsr, WeightedEdgeList};
use crate::kernel::{lipschitz_order_on, log_grid, KernelSpec};
use crate::linalg::{axpy, dot, norm_inf, project_out_ones};
use crate::linop::{AdjacencyLaplacian, DenseLaplacian, LinearOperator, OperatorKind};
use crate::matvec::{TaylorOperator, WoodburySolver, DEFAULT_RANK_CAP};
use crate::oracle::{kernel_graph, laplacian_matrix, Pseudoinverse};
use crate::points::PointSet;
use crate::sparsify::{
    positive_sq_dist_range, sparsify_high_dim_with, sparsify_low_dim_with, SparsifyConfig, SparsifyStats,
};

/// Sparsifier accuracy in paper-faithful mode.
pub const PAPER_EPS_H: f64 = 1.0 / 900.0;
/// Sparsifier accuracy in practical mode.
pub const PRACTICAL_EPS_H: f64 = 0.1;
/// Largest sparsifier factored densely.
pub const DENSE_SOLVE_CAP: usize = 1500;
/// Default largest `n` for which the dense kernel paths are used.
pub const DEFAULT_DENSE_CAP: usize = 4000;
/// Contraction factor per refinement step required in paper-faithful mode.
pub const CONTRACTION: f64 = 1.0 / 14.0;

/// A Laplacian system solver: returns `x` with `||x - L^+ b||_L <= delta ||L^+ b||_L`.
pub trait LaplacianSolver: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[f64], delta: f64) -> Result<Vec<f64>>;
}

impl LaplacianSolver for Pseudoinverse {
    fn dim(&self) -> usize {
        self.matrix().nrows()
    }

    fn solve(&self, b: &[f64], _delta: f64) -> Result<Vec<f64>> {
        check_len(self.dim(), b.len())?;
        Ok(self.apply(b))
    }
}

impl LaplacianSolver for WoodburySolver<'_> {
    fn dim(&self) -> usize {
        WoodburySolver::dim(self)
    }

    fn solve(&self, b: &[f64], _delta: f64) -> Result<Vec<f64>> {
        WoodburySolver::solve(self, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    #[default]
    Practical,
    PaperFaithful,
}

impl SolveMode {
    pub fn sparsifier_eps(self) -> f64 {
        match self {
            Self::Practical => PRACTICAL_EPS_H,
            Self::PaperFaithful => PAPER_EPS_H,
        }
    }
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "practical" => Ok(Self::Practical),
            "paper" | "paper-faithful" => Ok(Self::PaperFaithful),
            _ => Err(Error::Parse(format!("unknown mode {s:?}; expected practical or paper"))),
        }
    }
}

/// Solver for a sparse graph Laplacian: dense Cholesky of `L + J/n` up to
/// [`DENSE_SOLVE_CAP`] vertices, Jacobi-preconditioned CG beyond.
#[derive(Debug, Clone)]
pub struct SparseSolver {
    n: usize,
    inner: SparseInner,
}

#[derive(Debug, Clone)]
enum SparseInner {
    Dense(Cholesky<f64, Dyn>),
    Iterative(LaplacianCsr),
}

impl SparseSolver {
    pub fn new(h: &WeightedEdgeList) -> Result<Self> {
        h.require_connected()?;
        let n = h.n();
        let inner = if n <= DENSE_SOLVE_CAP {
            let mut m = laplacian_matrix(h);
            m.add_scalar_mut(1.0 / n as f64);
            SparseInner::Dense(
                m.cholesky()
                    .ok_or_else(|| Error::Singular("L_H + J/n is not positive definite".into()))?,
            )
        } else {
            SparseInner::Iterative(h.laplacian_csr())
        };
        Ok(Self { n, inner })
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.inner, SparseInner::Dense(_))
    }
}

impl LaplacianSolver for SparseSolver {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &[f64], delta: f64) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut bb = b.to_vec();
        project_out_ones(&mut bb);
        let mut x = match &self.inner {
            SparseInner::Dense(chol) => chol.solve(&DVector::from_vec(bb)).data.into(),
            SparseInner::Iterative(csr) => csr.solve(&bb, (delta * 1e-3).max(1e-13))?,
        };
        project_out_ones(&mut x);
        Ok(x)
    }
}

/// Iterates of the multiply-from-solver refinement.
#[derive(Debug, Clone)]
pub struct MultiplyOutcome {
    pub b: Vec<f64>,
    /// `x_0` (projected input), `x_1 = x_0 - x_main`, ... up to the vector that stopped the loop.
    pub iterates: Vec<Vec<f64>>,
    /// Number of solver calls.
    pub iterations: usize,
    pub cap: usize,
    /// Infinity-norm level below which the loop stops.
    pub threshold: f64,
}

/// `ceil(ln^2(alpha n / eps)) + 5`.
pub fn iteration_cap(alpha: f64, n: usize, eps: f64) -> usize {
    let l = (alpha * n as f64 / eps).ln().max(1.0);
    (l * l).ceil() as usize + 5
}

/// Computes `L_G x` with `||b - L_G x||_inf <= eps w_min ||x||_inf` from a solver for
/// `G` and a sparsifier `H` of `G`, by iterating `b += L_H x; x -= solve(L_H x)`.
///
/// `w_min` and `alpha` are read from `H`.
pub fn multiply_given_solver(
    solver: &dyn LaplacianSolver,
    h: &WeightedEdgeList,
    x: &[f64],
    eps: f64,
    mode: SolveMode,
) -> Result<MultiplyOutcome> {
    let n = h.n();
    check_len(n, x.len())?;
    check_len(n, solver.dim())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    h.require_connected()?;
    let x_inf = norm_inf(x);
    let mut cur = x.to_vec();
    project_out_ones(&mut cur);
    let mut b = vec![0.0; n];
    if x_inf == 0.0 || n < 2 {
        return Ok(MultiplyOutcome { b, iterates: vec![cur], iterations: 0, cap: 0, threshold: 0.0 });
    }
    let (w_min, alpha) = (h.w_min(), h.alpha_weight());
    let nf = n as f64;
    let log_term = (alpha * nf / eps).ln().max(1.0);
    let tau = eps * x_inf / (log_term * log_term);
    let eps_h = mode.sparsifier_eps();
    let scale = (10.0 * nf.ln() + 5.0 * alpha.ln()).exp();
    let (threshold, delta_in) = match mode {
        SolveMode::PaperFaithful => (tau / scale, (tau * w_min.sqrt() / scale).clamp(1e-13, 1e-2)),
        SolveMode::Practical => ((tau * 1e-12).max(norm_inf(&cur) * 1e-15), (eps * 1e-3).max(1e-13)),
    };
    // ||L_G v||_inf <= sqrt(2 max deg_H) ||v||_{L_H} / (1 - eps_h).
    let dmax = h.degrees().into_iter().fold(0.0f64, f64::max);
    let cert_scale = (2.0 * dmax).sqrt() / (1.0 - eps_h);
    let target = 0.5 * eps * w_min * x_inf;
    let cap = iteration_cap(alpha, n, eps);
    let csr = h.laplacian_csr();
    let mut iterates = vec![cur.clone()];
    let mut iterations = 0;
    loop {
        if norm_inf(&cur) <= threshold {
            break;
        }
        let lx = csr.apply(&cur);
        if mode == SolveMode::Practical && cert_scale * dot(&cur, &lx).max(0.0).sqrt() <= target {
            break;
        }
        if iterations == cap {
            let trace: Vec<String> = iterates.iter().map(|v| format!("{:.3e}", norm_inf(v))).collect();
            return Err(Error::IterationCap(format!(
                "multiply-from-solver reached {cap} iterations; |x_k|_inf trace [{}]",
                trace.join(", ")
            )));
        }
        axpy(1.0, &lx, &mut b);
        let main = solver.solve(&lx, delta_in)?;
        for (c, m) in cur.iter_mut().zip(&main) {
            *c -= m;
        }
        project_out_ones(&mut cur);
        iterations += 1;
        iterates.push(cur.clone());
    }
    Ok(MultiplyOutcome { b, iterates, iterations, cap, threshold })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Certified bound on `||x - L^+ b||_L / ||L^+ b||_L`, given an exact multiplier.
    pub rel_error_estimate: f64,
    /// `||b - L_G x||_inf` through the multiplier.
    pub residual_inf: f64,
    pub wall_ms: f64,
    pub mode: SolveMode,
    pub eps_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<OperatorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparsifier_edges: Option<usize>,
    /// Error certificate after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub mode: SolveMode,
    /// Spectral accuracy of `H`; defaults to the mode's value.
    pub eps_h: Option<f64>,
    pub max_iter: Option<usize>,
    /// Keep every iterate.
    pub record: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { mode: SolveMode::Practical, eps_h: None, max_iter: None, record: false }
    }
}

impl SolveOptions {
    pub fn paper() -> Self {
        Self { mode: SolveMode::PaperFaithful, ..Self::default() }
    }

    fn eps_h(&self) -> f64 {
        self.eps_h.unwrap_or_else(|| self.mode.sparsifier_eps())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub report: SolveReport,
    pub iterates: Vec<Vec<f64>>,
}

/// Solves `L_G x = b` given a multiplier for `L_G` and a sparsifier `H`.
pub fn solve_given_multiplier(
    mult: &dyn LinearOperator,
    h: &WeightedEdgeList,
    b: &[f64],
    delta: f64,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    let pre = SparseSolver::new(h)?;
    refine(mult, &pre, h.alpha_weight(), b, delta, opts)
}

/// Refinement with `L_H^+` as preconditioner: Richardson in paper-faithful mode,
/// conjugate gradients in practical mode. Stops once
/// `(1 + eps_h)/(1 - eps_h) r^T L_H^+ r <= (delta/2)^2 b^T L_H^+ b`.
pub fn refine(
    mult: &dyn LinearOperator,
    pre: &SparseSolver,
    alpha: f64,
    b: &[f64],
    delta: f64,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    let clock = Instant::now();
    let n = pre.dim();
    check_len(n, b.len())?;
    check_len(n, mult.dim())?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    let eps_h = opts.eps_h();
    if !(eps_h > 0.0 && eps_h < 1.0) {
        return Err(Error::InvalidInput(format!("eps_h must lie in (0, 1), got {eps_h}")));
    }
    let mut bb = b.to_vec();
    project_out_ones(&mut bb);
    let mut report = SolveReport {
        iterations: 0,
        rel_error_estimate: 0.0,
        residual_inf: 0.0,
        wall_ms: 0.0,
        mode: opts.mode,
        eps_h,
        multiplier: Some(mult.kind()),
        sparsifier_edges: None,
        history: Vec::new(),
    };
    let mut x = vec![0.0; n];
    if norm_inf(&bb) == 0.0 {
        report.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
        return Ok(SolveOutcome { x: x.clone(), report, iterates: vec![x] });
    }
    let inner_delta = (delta * 1e-2).max(1e-12);
    let factor = (1.0 + eps_h) / (1.0 - eps_h);
    let z0 = pre.solve(&bb, inner_delta)?;
    let b_norm = dot(&bb, &z0);
    let goal = 0.25 * delta * delta * b_norm / factor;
    let cap = opts.max_iter.unwrap_or_else(|| match opts.mode {
        SolveMode::PaperFaithful => iteration_cap(alpha, n, delta),
        SolveMode::Practical => 200 + iteration_cap(alpha, n, delta),
    });
    let cert = |rz: f64| (factor * rz.max(0.0) / b_norm).sqrt();
    let mut iterates = if opts.record { vec![x.clone()] } else { Vec::new() };
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let lx = mult.apply(x)?;
        let mut r: Vec<f64> = bb.iter().zip(&lx).map(|(a, c)| a - c).collect();
        project_out_ones(&mut r);
        Ok(r)
    };

    let mut r = bb.clone();
    let mut z = z0;
    let mut rz = b_norm;
    let mut its = 0;
    match opts.mode {
        SolveMode::PaperFaithful => loop {
            if rz <= goal {
                break;
            }
            if its == cap {
                return Err(Error::NoConvergence { iterations: its, residual: cert(rz) });
            }
            axpy(1.0, &z, &mut x);
            its += 1;
            if opts.record {
                iterates.push(x.clone());
            }
            r = residual(&x)?;
            z = pre.solve(&r, inner_delta)?;
            rz = dot(&r, &z);
            report.history.push(cert(rz));
        },
        SolveMode::Practical => {
            // Restarted PCG: the recurrence residual is checked against a true residual
            // before accepting, which guards against an inexact multiplier.
            'outer: loop {
                let mut p = z.clone();
                loop {
                    if rz <= goal {
                        let r_true = residual(&x)?;
                        let z_true = pre.solve(&r_true, inner_delta)?;
                        let rz_true = dot(&r_true, &z_true);
                        if rz_true <= 4.0 * goal {
                            r = r_true;
                            rz = rz_true;
                            break 'outer;
                        }
                        r = r_true;
                        z = z_true;
                        rz = rz_true;
                        continue 'outer;
                    }
                    if its == cap {
                        return Err(Error::NoConvergence { iterations: its, residual: cert(rz) });
                    }
                    let ap = mult.apply(&p)?;
                    let pap = dot(&p, &ap);
                    if !(pap > 0.0) {
                        return Err(Error::NoConvergence { iterations: its, residual: cert(rz) });
                    }
                    let step = rz / pap;
                    axpy(step, &p, &mut x);
                    axpy(-step, &ap, &mut r);
                    project_out_ones(&mut r);
                    its += 1;
                    if opts.record {
                        iterates.push(x.clone());
                    }
                    z = pre.solve(&r, inner_delta)?;
                    let rz_new = dot(&r, &z);
                    report.history.push(cert(rz_new));
                    let beta = rz_new / rz;
                    rz = rz_new;
                    for (pi, zi) in p.iter_mut().zip(&z) {
                        *pi = zi + beta * *pi;
                    }
                }
            }
        }
    }
    project_out_ones(&mut x);
    report.iterations = its;
    report.rel_error_estimate = cert(rz);
    report.residual_inf = norm_inf(&r);
    report.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(SolveOutcome { x, report, iterates })
}

/// A solver for `G` assembled from a multiplier for `L_G` and a sparsifier `H`.
pub struct RefinedSolver<'a> {
    mult: &'a dyn LinearOperator,
    pre: SparseSolver,
    alpha: f64,
    opts: SolveOptions,
}

impl<'a> RefinedSolver<'a> {
    pub fn new(mult: &'a dyn LinearOperator, h: &WeightedEdgeList, opts: SolveOptions) -> Result<Self> {
        check_len(h.n(), mult.dim())?;
        Ok(Self { mult, pre: SparseSolver::new(h)?, alpha: h.alpha_weight(), opts })
    }
}

impl LaplacianSolver for RefinedSolver<'_> {
    fn dim(&self) -> usize {
        self.pre.dim()
    }

    fn solve(&self, b: &[f64], delta: f64) -> Result<Vec<f64>> {
        Ok(refine(self.mult, &self.pre, self.alpha, b, delta.clamp(1e-14, 0.5), &self.opts)?.x)
    }
}

#[derive(Debug, Clone)]
pub struct KlapOptions {
    pub mode: SolveMode,
    /// Largest `n` for the dense multiplier and the exact-graph fallback.
    pub dense_cap: usize,
    pub sparsify: SparsifyConfig,
}

impl Default for KlapOptions {
    fn default() -> Self {
        Self { mode: SolveMode::Practical, dense_cap: DEFAULT_DENSE_CAP, sparsify: SparsifyConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct KlapOutcome {
    pub x: Vec<f64>,
    pub report: SolveReport,
    /// Which sparsifier path produced `H`.
    pub sparsifier_path: &'static str,
    pub sparsifier_stats: Option<SparsifyStats>,
    /// Multiplier and sparsifier paths that were tried and declined, with reasons.
    pub declined: Vec<String>,
}

/// Solves `L x = b` for the kernel graph of `p` under `k`.
pub fn klap_solve(p: &PointSet, k: &KernelSpec, b: &[f64], delta: f64, seed: u64) -> Result<KlapOutcome> {
    klap_solve_with(p, k, b, delta, seed, &KlapOptions::default())
}

pub fn klap_solve_with(
    p: &PointSet,
    k: &KernelSpec,
    b: &[f64],
    delta: f64,
    seed: u64,
    opts: &KlapOptions,
) -> Result<KlapOutcome> {
    k.validate()?;
    check_len(p.n(), b.len())?;
    if p.n() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let mut declined = Vec::new();
    let eps_h = opts.mode.sparsifier_eps();
    let (h, path, stats) = build_sparsifier(p, k, eps_h, seed, opts, &mut declined)?;
    let mult_eps = (delta * 1e-4).max(1e-13);
    let mult = build_multiplier(p, k, mult_eps, opts.dense_cap, &mut declined)?;
    let sopts = SolveOptions { mode: opts.mode, eps_h: Some(eps_h), ..SolveOptions::default() };
    let mut out = solve_given_multiplier(mult.as_ref(), &h, b, delta, &sopts)?;
    out.report.sparsifier_edges = Some(h.len());
    Ok(KlapOutcome { x: out.x, report: out.report, sparsifier_path: path, sparsifier_stats: stats, declined })
}

type SparsifierChoice = (WeightedEdgeList, &'static str, Option<SparsifyStats>);

fn build_sparsifier(
    p: &PointSet,
    k: &KernelSpec,
    eps: f64,
    seed: u64,
    opts: &KlapOptions,
    declined: &mut Vec<String>,
) -> Result<SparsifierChoice> {
    let range = positive_sq_dist_range(p);
    if let Some((lo, hi)) = range {
        let l = lipschitz_order_on(k, 2.0, &log_grid(lo, hi, opts.sparsify.grid));
        if l.is_finite() {
            match sparsify_high_dim_with(p, k, l.max(1e-3), None, eps, seed, &opts.sparsify) {
                Ok(s) => return Ok((s.graph, "highdim", Some(s.stats))),
                Err(e) => declined.push(format!("highdim sparsifier: {e}")),
            }
        } else {
            declined.push("highdim sparsifier: kernel is not multiplicatively Lipschitz on the instance".into());
        }
        if let Some(l) = k.global_lipschitz_order(2.0) {
            match sparsify_low_dim_with(p, k, l.max(1.0), eps, seed, &opts.sparsify) {
                Ok(s) => return Ok((s.graph, "lowdim", Some(s.stats))),
                Err(e) => declined.push(format!("lowdim sparsifier: {e}")),
            }
        } else {
            declined.push("lowdim sparsifier: no global Lipschitz order for this kernel".into());
        }
    } else {
        declined.push("sparsifiers: all points coincide".into());
    }
    if p.n() <= opts.dense_cap {
        return Ok((kernel_graph(p, k)?, "exact", None));
    }
    declined.push(format!("exact graph: n = {} above the dense cap {}", p.n(), opts.dense_cap));
    Err(Error::PlanTooLarge(format!("no sparsifier path applies: {}", declined.join("; "))))
}

fn build_multiplier<'a>(
    p: &'a PointSet,
    k: &KernelSpec,
    eps: f64,
    dense_cap: usize,
    declined: &mut Vec<String>,
) -> Result<Box<dyn LinearOperator + 'a>> {
    let n = p.n();
    if let KernelSpec::Gaussian { delta } = *k {
        if p.d() <= 3 {
            let adj = FgtAdjacency { points: p, delta, eps };
            return Ok(Box::new(AdjacencyLaplacian::new(adj)?));
        }
        declined.push(format!("fgt: d = {} above 3", p.d()));
    }
    if k.taylor().is_some() {
        // A rank at or above n costs more than the dense path.
        let cap = if n <= dense_cap { n } else { DEFAULT_RANK_CAP };
        match TaylorOperator::with_cap(p, k, eps, cap) {
            Ok(t) => return Ok(Box::new(AdjacencyLaplacian::new(t)?)),
            Err(e) => declined.push(format!("taylor: {e}")),
        }
    } else {
        declined.push(format!("taylor: {k} has no series expansion"));
    }
    if n <= dense_cap {
        return Ok(Box::new(DenseLaplacian { points: p, kernel: *k }));
    }
    declined.push(format!("dense: n = {n} above the dense cap {dense_cap}"));
    Err(Error::PlanTooLarge(format!("no multiplier path applies: {}", declined.join("; "))))
}

/// The conversions between infinity norms and Laplacian norms for a connected graph
/// with weights in `[w_min, w_max]` and `alpha = w_max / w_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBounds {
    pub n: usize,
    pub w_min: f64,
    pub w_max: f64,
}

impl NormBounds {
    pub fn of(g: &WeightedEdgeList) -> Self {
        Self { n: g.n(), w_min: g.w_min(), w_max: g.w_max() }
    }

    fn alpha(&self) -> f64 {
        self.w_max / self.w_min
    }

    /// `(w_min / (2 n^4 alpha^2) ||x||_inf^2, n^2 w_max ||x||_inf^2)` bracketing `||x||_L^2`.
    pub fn lap(&self, x_inf: f64) -> (f64, f64) {
        let n = self.n as f64;
        let s = x_inf * x_inf;
        (self.w_min / (2.0 * n.powi(4) * self.alpha().powi(2)) * s, n * n * self.w_max * s)
    }

    /// `(||b||_inf^2 / (n^2 w_max), 2 n^4 alpha^2 / w_min ||b||_inf^2)` bracketing `||b||_{L^+}^2`.
    pub fn pinv(&self, b_inf: f64) -> (f64, f64) {
        let n = self.n as f64;
        let s = b_inf * b_inf;
        (s / (n * n * self.w_max), 2.0 * n.powi(4) * self.alpha().powi(2) / self.w_min * s)
    }
}

/// `sqrt(b^T M b)` for a dense symmetric `M`.
pub fn dense_norm(m: &DMatrix<f64>, b: &[f64]) -> f64 {
    let v = DVector::from_column_slice(b);
    v.dot(&(m * &v)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    #[test]
    fn ones_multiply_to_zero() {
        let g = WeightedEdgeList::complete(6, 1.5);
        let pinv = Pseudoinverse::new(&g).unwrap();
        let out = multiply_given_solver(&pinv, &g, &[1.0; 6], 1e-6, SolveMode::Practical).unwrap();
        assert!(norm_inf(&out.b) <= 1e-6 * 1.5);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn two_vertices_multiply_and_solve() {
        let w = 2.5;
        let g = WeightedEdgeList::new(2, vec![Edge::new(0, 1, w)]).unwrap();
        let pinv = Pseudoinverse::new(&g).unwrap();
        let x = [0.7, -0.4];
        for mode in [SolveMode::Practical, SolveMode::PaperFaithful] {
            let out = multiply_given_solver(&pinv, &g, &x, 1e-8, mode).unwrap();
            assert!((out.b[0] - w * 1.1).abs() <= 1e-8 * w);
            assert!((out.b[1] + w * 1.1).abs() <= 1e-8 * w);
            let opts = SolveOptions { mode, ..SolveOptions::default() };
            let s = solve_given_multiplier(&g, &g, &[1.0, -1.0], 1e-8, &opts).unwrap();
            assert!((s.x[0] - 0.5 / w).abs() < 1e-8 && (s.x[1] + 0.5 / w).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = WeightedEdgeList::path(4, 1.0);
        let s = solve_given_multiplier(&g, &g, &[0.0; 4], 1e-6, &SolveOptions::default()).unwrap();
        assert_eq!(s.x, vec![0.0; 4]);
        assert_eq!(s.report.iterations, 0);
    }

    #[test]
    fn sparse_solver_iterative_matches_direct() {
        let n = DENSE_SOLVE_CAP + 1;
        let g = WeightedEdgeList::path(n, 1.0);
        let s = SparseSolver::new(&g).unwrap();
        assert!(!s.is_direct());
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        b[n - 1] = -1.0;
        let x = s.solve(&b, 1e-10).unwrap();
        assert!((x[0] - x[n - 1] - (n - 1) as f64).abs() < 1e-6 * n as f64);
    }

    #[test]
    fn disconnected_sparsifier_rejected() {
        let g = WeightedEdgeList::new(3, vec![Edge::new(0, 1, 1.0)]).unwrap();
        assert!(matches!(SparseSolver::new(&g), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn two_node_norm_bound_is_tight() {
        let g = WeightedEdgeList::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let (_, hi) = NormBounds::of(&g).lap(1.0);
        assert_eq!(hi, 4.0);
        assert_eq!(g.quadratic_form(&[1.0, -1.0]), 4.0);
        assert_eq!(NormBounds::of(&g).lap(0.0), (0.0, 0.0));
    }

    #[test]
    fn mode_parses() {
        assert_eq!("paper".parse::<SolveMode>().unwrap(), SolveMode::PaperFaithful);
        assert!("fast".parse::<SolveMode>().is_err());
    }
}
