//! Spectral sparsification: oversampling by leverage overestimates, the
//! effective-resistance sketch, and the WSPD-based kernel graph sparsifiers.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_wspd, jl_dim_bound, jl_project, Wspd};
use crate::graph::{Edge, WeightedEdgeList};
use crate::kernel::{check_mult_lipschitz, log_grid, KernelSpec};
use crate::points::PointSet;
use crate::rng::stream_rng;

pub const DEFAULT_OVERSAMPLE_C: f64 = 4.0;

/// Positive per-edge sampling weights, aligned with a graph's edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageOverestimates {
    p: Vec<f64>,
}

impl LeverageOverestimates {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!("leverage overestimates must be positive, got {bad}")));
        }
        Ok(Self { p })
    }

    /// The same value for every edge.
    pub fn uniform(m: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// `max(1, ceil(C eps^-2 t ln t ln(1/delta)))`.
pub fn oversample_count(t: f64, eps: f64, delta: f64, c: f64) -> usize {
    let q = (c / (eps * eps) * t * t.ln() * (1.0 / delta).ln()).ceil();
    if q.is_finite() && q > 1.0 {
        q as usize
    } else {
        1
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// Samples edges i.i.d. with probability `p_e / t` and reweights each draw by
/// `w_e t / (p_e q)`. Repeated draws of an edge add up.
pub fn oversample(
    g: &WeightedEdgeList,
    p: &LeverageOverestimates,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<WeightedEdgeList> {
    oversample_with(g, p, eps, delta, DEFAULT_OVERSAMPLE_C, seed)
}

pub fn oversample_with(
    g: &WeightedEdgeList,
    p: &LeverageOverestimates,
    eps: f64,
    delta: f64,
    c: f64,
    seed: u64,
) -> Result<WeightedEdgeList> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    let q = oversample_count(p.total(), eps, delta, c);
    sample_edges(g, p, q, seed)
}

/// `q` i.i.d. draws with probability `p_e / t`, each adding `w_e t / (p_e q)` to its edge.
pub fn sample_edges(g: &WeightedEdgeList, p: &LeverageOverestimates, q: usize, seed: u64) -> Result<WeightedEdgeList> {
    if g.is_empty() || q == 0 {
        return Err(Error::InvalidInput("need a nonempty graph and at least one draw".into()));
    }
    crate::error::check_len(g.len(), p.len())?;
    let t = p.total();
    let dist = WeightedIndex::new(p.values()).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = stream_rng(seed, 0x05a3);
    let mut hits = vec![0u64; g.len()];
    for _ in 0..q {
        hits[dist.sample(&mut rng)] += 1;
    }
    let edges = g
        .edges()
        .iter()
        .zip(&hits)
        .zip(p.values())
        .filter(|((_, &h), _)| h > 0)
        .map(|((e, &h), &pe)| Edge { w: e.w * t * h as f64 / (pe * q as f64), ..*e })
        .collect();
    WeightedEdgeList::new(g.n(), edges)
}

/// Keeps each edge independently with probability `keep`, reweighted by `1/keep`.
pub fn uniform_subgraph(g: &WeightedEdgeList, keep: f64, seed: u64) -> Result<WeightedEdgeList> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::InvalidInput(format!("keep probability must lie in (0, 1], got {keep}")));
    }
    let mut rng = stream_rng(seed, 0x0b5e);
    let edges = g
        .edges()
        .iter()
        .filter(|_| rng.random::<f64>() < keep)
        .map(|e| Edge { w: e.w / keep, ..*e })
        .collect();
    WeightedEdgeList::new(g.n(), edges)
}

/// Rows of `Pi W^{1/2} B L^+` for a random `+-1/sqrt(k)` matrix `Pi`.
#[derive(Debug, Clone)]
pub struct ReffSketch {
    n: usize,
    rows: usize,
    /// Row-major `rows x n`.
    z: Vec<f64>,
    component: Vec<usize>,
}

impl ReffSketch {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `||Z (e_u - e_v)||^2`, infinite across components.
    pub fn estimate(&self, u: usize, v: usize) -> f64 {
        if self.component[u] != self.component[v] {
            return f64::INFINITY;
        }
        self.z
            .chunks_exact(self.n)
            .map(|row| (row[u] - row[v]).powi(2))
            .sum()
    }
}

/// Residual target for the sketch's Laplacian solves.
pub const SKETCH_SOLVE_TOL: f64 = 1e-8;

/// Graphs up to this size are factored densely when sketching.
pub const SKETCH_DENSE_CAP: usize = 1500;

pub fn reff_sketch_build(g: &WeightedEdgeList, eps: f64, seed: u64) -> Result<ReffSketch> {
    g.require_connected()?;
    reff_sketch_build_any(g, eps, seed)
}

/// As [`reff_sketch_build`], but accepts disconnected graphs.
pub fn reff_sketch_build_any(g: &WeightedEdgeList, eps: f64, seed: u64) -> Result<ReffSketch> {
    check_unit("eps", eps)?;
    let n = g.n();
    let rows = jl_dim_bound(n, eps);
    let scale = 1.0 / (rows as f64).sqrt();
    let rhs = |i: usize| {
        let mut rng = stream_rng(seed, i as u64);
        let mut b = vec![0.0; n];
        for e in g.edges() {
            let s = if rng.random::<bool>() { scale } else { -scale } * e.w.sqrt();
            b[e.u as usize] += s;
            b[e.v as usize] -= s;
        }
        b
    };
    let comps = g.components();
    let z = if n <= SKETCH_DENSE_CAP {
        // L + sum_c 1_c 1_c^T / |c| agrees with L^+ on vectors summing to zero per component.
        let mut m = crate::oracle::laplacian_matrix(g);
        let mut size = vec![0usize; comps.count];
        for &c in &comps.label {
            size[c] += 1;
        }
        for i in 0..n {
            for j in 0..n {
                if comps.label[i] == comps.label[j] {
                    m[(i, j)] += 1.0 / size[comps.label[i]] as f64;
                }
            }
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Singular("shifted Laplacian is not positive definite".into()))?;
        let cols: Vec<f64> = (0..rows).into_par_iter().flat_map_iter(rhs).collect();
        let b = nalgebra::DMatrix::from_vec(n, rows, cols);
        chol.solve(&b).as_slice().to_vec()
    } else {
        let lap = g.laplacian_csr();
        let z: Vec<Vec<f64>> = (0..rows)
            .into_par_iter()
            .map(|i| lap.solve(&rhs(i), SKETCH_SOLVE_TOL))
            .collect::<Result<_>>()?;
        z.concat()
    };
    Ok(ReffSketch { n, rows, z, component: comps.label })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SparsifyConfig {
    /// Per-biclique sample constant.
    pub c0: f64,
    /// Oversampling constant for the final resparsify.
    pub oversample_c: f64,
    /// Failure probability passed to the final resparsify.
    pub delta: f64,
    /// Accuracy of the resistance sketch used for resparsifying.
    pub sketch_eps: f64,
    /// Output edge budget `budget_c n ln n / eps^2`.
    pub budget_c: f64,
    /// Points in the Lipschitz certification grid.
    pub grid: usize,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        Self {
            c0: 4.0,
            oversample_c: DEFAULT_OVERSAMPLE_C,
            delta: 0.1,
            sketch_eps: 0.5,
            budget_c: 32.0,
            grid: 64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SparsifyStats {
    pub pairs: usize,
    /// Pairs whose biclique was copied exactly instead of sampled.
    pub exact_pairs: usize,
    pub union_edges: usize,
    pub resparsified: bool,
    pub proj_dim: Option<usize>,
    pub max_rho: f64,
    pub budget: usize,
    pub sample_ms: f64,
    pub resparsify_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Sparsifier {
    pub graph: WeightedEdgeList,
    pub stats: SparsifyStats,
}

/// `ceil(budget_c n ln n / eps^2)`.
pub fn edge_budget(n: usize, eps: f64, budget_c: f64) -> usize {
    (budget_c * n as f64 * (n.max(2) as f64).ln() / (eps * eps)).ceil() as usize
}

/// `ceil(c0 eps^-2 rho (a+b) ln(a+b+1))`.
pub fn biclique_samples(a: usize, b: usize, rho: f64, eps: f64, c0: f64) -> f64 {
    let s = (a + b) as f64;
    (c0 / (eps * eps) * rho * s * (s + 1.0).ln()).ceil()
}

/// Checks `(c, l)`-multiplicative Lipschitzness on the instance's squared-distance range.
pub fn certify_lipschitz(p: &PointSet, k: &KernelSpec, c: f64, l: f64, grid: usize) -> Result<()> {
    let (lo, hi) = positive_sq_dist_range(p)
        .ok_or_else(|| Error::InvalidInput("need at least two distinct points".into()))?;
    let check = check_mult_lipschitz(k, c, l, &log_grid(lo, hi, grid));
    match check.violation {
        None => Ok(()),
        Some((z, scale, ratio)) => Err(Error::NotLipschitz { c, l, z, scale, ratio }),
    }
}

/// Smallest positive and largest squared distance over pairs. O(n^2 d).
pub fn positive_sq_dist_range(p: &PointSet) -> Option<(f64, f64)> {
    let rows: Vec<(f64, f64)> = (0..p.n())
        .into_par_iter()
        .map(|i| {
            let xi = p.point(i);
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for j in i + 1..p.n() {
                let z = crate::points::sq_dist(xi, p.point(j));
                if z > 0.0 {
                    lo = lo.min(z);
                }
                hi = hi.max(z);
            }
            (lo, hi)
        })
        .collect();
    let lo = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    (lo.is_finite() && hi > 0.0).then_some((lo, hi))
}

/// Sparsifier for kernels that are `(2, l)`-multiplicatively Lipschitz on the instance:
/// random projection, a 1/2-WSPD of the projected points, per-biclique uniform
/// sampling, then resparsification by effective resistances.
pub fn sparsify_high_dim(
    p: &PointSet,
    k: &KernelSpec,
    l: f64,
    proj_dim: Option<usize>,
    eps: f64,
    seed: u64,
) -> Result<Sparsifier> {
    sparsify_high_dim_with(p, k, l, proj_dim, eps, seed, &SparsifyConfig::default())
}

pub fn sparsify_high_dim_with(
    p: &PointSet,
    k: &KernelSpec,
    l: f64,
    proj_dim: Option<usize>,
    eps: f64,
    seed: u64,
    cfg: &SparsifyConfig,
) -> Result<Sparsifier> {
    prepare(p, k, eps)?;
    if p.n() == 2 {
        return two_point(p, k);
    }
    certify_lipschitz(p, k, 2.0, l, cfg.grid)?;
    let n = p.n();
    let kp = proj_dim.unwrap_or_else(|| (l.max(1.0) * (n as f64).ln()).sqrt().ceil() as usize).max(1);
    let (geo, projected) = if kp < p.d() {
        (jl_project(p, kp, seed)?, true)
    } else {
        (p.clone(), false)
    };
    let mut out = biclique_sparsify(p, &geo, projected, k, 0.5, eps, seed, cfg)?;
    out.stats.proj_dim = projected.then_some(kp);
    Ok(out)
}

/// Sparsifier for kernels that are `(1 + 1/l, l)`-multiplicatively Lipschitz on the
/// instance: a `1/l`-WSPD in the original space, then as in the high-dimensional case.
pub fn sparsify_low_dim(p: &PointSet, k: &KernelSpec, l: f64, eps: f64, seed: u64) -> Result<Sparsifier> {
    sparsify_low_dim_with(p, k, l, eps, seed, &SparsifyConfig::default())
}

/// Upper limit on `(2l)^d` for the low-dimensional path.
pub const LOW_DIM_CAP: f64 = 1e8;

pub fn sparsify_low_dim_with(
    p: &PointSet,
    k: &KernelSpec,
    l: f64,
    eps: f64,
    seed: u64,
    cfg: &SparsifyConfig,
) -> Result<Sparsifier> {
    prepare(p, k, eps)?;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidInput(format!("Lipschitz order must be positive, got {l}")));
    }
    let work = (2.0 * l).powi(p.d() as i32);
    if work > LOW_DIM_CAP {
        return Err(Error::PlanTooLarge(format!(
            "(2L)^d = {work:.3e} exceeds {LOW_DIM_CAP:e}; use the high-dimensional sparsifier"
        )));
    }
    if p.n() == 2 {
        return two_point(p, k);
    }
    certify_lipschitz(p, k, 1.0 + 1.0 / l, l, cfg.grid)?;
    biclique_sparsify(p, p, false, k, (1.0 / l).min(0.9), eps, seed, cfg)
}

fn prepare(p: &PointSet, k: &KernelSpec, eps: f64) -> Result<()> {
    k.validate()?;
    check_unit("eps", eps)?;
    if p.n() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    Ok(())
}

fn two_point(p: &PointSet, k: &KernelSpec) -> Result<Sparsifier> {
    let w = k.eval(p.sq_dist(0, 1))?;
    let edges = if w > 0.0 { vec![Edge::new(0, 1, w)] } else { Vec::new() };
    let graph = WeightedEdgeList::new(2, edges)?;
    let stats = SparsifyStats {
        pairs: 1,
        exact_pairs: 1,
        union_edges: graph.len(),
        max_rho: 1.0,
        budget: 1,
        ..Default::default()
    };
    Ok(Sparsifier { graph, stats })
}

/// A WSPD together with certified original-space distance intervals and weight
/// ratios for each of its bicliques.
#[derive(Debug, Clone)]
pub struct BicliquePlan {
    pub wspd: Wspd,
    /// Certified `[lo, hi]` squared distances between the sides of each pair.
    pub intervals: Vec<(f64, f64)>,
    /// `f_max / f_min` over each interval; infinite when unbounded.
    pub rho: Vec<f64>,
}

impl BicliquePlan {
    /// Builds the WSPD on `geo` and bounds distances in `p`. When `projected`, `geo` is
    /// a projection of `p` and intervals come from enclosing balls in the original space.
    pub fn new(p: &PointSet, geo: &PointSet, projected: bool, k: &KernelSpec, eps_sep: f64) -> Result<Self> {
        let wspd = build_wspd(geo, eps_sep)?;
        let intervals: Vec<(f64, f64)> = if projected {
            let balls = wspd.tree.node_balls(p);
            wspd.pairs
                .iter()
                .map(|pair| {
                    let ((ca, ra), (cb, rb)) = (&balls[pair.a], &balls[pair.b]);
                    let c = crate::points::sq_dist(ca, cb).sqrt();
                    ((c - ra - rb).max(0.0).powi(2), (c + ra + rb).powi(2))
                })
                .collect()
        } else {
            wspd.pairs.iter().map(|pair| (pair.sq_dist_lo, pair.sq_dist_hi)).collect()
        };
        let rho = intervals.iter().map(|&(lo, hi)| weight_ratio(k, lo, hi)).collect();
        Ok(Self { wspd, intervals, rho })
    }

    pub fn len(&self) -> usize {
        self.wspd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wspd.is_empty()
    }

    /// `min(1, rho (|A| + |B|) / (|A| |B|))`, an upper bound on `w_e Reff_G(e)` for
    /// every edge of biclique `i`.
    pub fn leverage_bound(&self, i: usize) -> f64 {
        let (a, b) = self.wspd.sides(i);
        (self.rho[i] * (a.len() + b.len()) as f64 / (a.len() * b.len()) as f64).min(1.0)
    }

    /// Samples every biclique and merges the results.
    pub fn sample(&self, p: &PointSet, k: &KernelSpec, eps: f64, c0: f64, seed: u64) -> Result<(WeightedEdgeList, usize)> {
        let parts: Vec<(Vec<Edge>, bool)> = (0..self.len())
            .into_par_iter()
            .map(|i| self.sample_pair(i, p, k, eps, c0, seed))
            .collect::<Result<_>>()?;
        let exact = parts.iter().filter(|x| x.1).count();
        let union = WeightedEdgeList::from_merged(
            p.n(),
            parts
                .into_iter()
                .flat_map(|x| x.0)
                .map(|e| (e.u as usize, e.v as usize, e.w)),
        )?;
        Ok((union, exact))
    }

    /// Uniform samples with replacement, each rescaled by `|A||B|/s`; the biclique is
    /// copied exactly when `s >= |A||B|` or its weight ratio is unbounded.
    fn sample_pair(&self, i: usize, p: &PointSet, k: &KernelSpec, eps: f64, c0: f64, seed: u64) -> Result<(Vec<Edge>, bool)> {
        let (a, b) = self.wspd.sides(i);
        let size = (a.len() * b.len()) as f64;
        let s = biclique_samples(a.len(), b.len(), self.rho[i], eps, c0);
        let mut edges = Vec::new();
        if !(s < size) {
            edges.reserve(a.len() * b.len());
            for &u in a {
                for &v in b {
                    let w = k.eval(p.sq_dist(u, v))?;
                    if w > 0.0 {
                        edges.push(Edge::new(u, v, w));
                    }
                }
            }
            return Ok((edges, true));
        }
        let s = s as usize;
        let mut rng = stream_rng(seed, 1 + i as u64);
        let scale = size / s as f64;
        edges.reserve(s);
        for _ in 0..s {
            let u = a[rng.random_range(0..a.len())];
            let v = b[rng.random_range(0..b.len())];
            let w = k.eval(p.sq_dist(u, v))?;
            if w > 0.0 {
                edges.push(Edge::new(u, v, w * scale));
            }
        }
        Ok((edges, false))
    }
}

#[allow(clippy::too_many_arguments)]
fn biclique_sparsify(
    p: &PointSet,
    geo: &PointSet,
    projected: bool,
    k: &KernelSpec,
    eps_sep: f64,
    eps: f64,
    seed: u64,
    cfg: &SparsifyConfig,
) -> Result<Sparsifier> {
    let clock = std::time::Instant::now();
    let plan = BicliquePlan::new(p, geo, projected, k, eps_sep)?;
    let (union, exact_pairs) = plan.sample(p, k, eps, cfg.c0, seed)?;
    let stats = SparsifyStats {
        pairs: plan.len(),
        exact_pairs,
        max_rho: plan.rho.iter().cloned().fold(1.0, f64::max),
        budget: edge_budget(p.n(), eps, cfg.budget_c),
        sample_ms: clock.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    finish(union, eps, seed, cfg, stats)
}

/// `f_max / f_min` over squared distances in `[lo, hi]`; infinite if unbounded.
fn weight_ratio(k: &KernelSpec, lo: f64, hi: f64) -> f64 {
    if lo == 0.0 && k.singular_at_zero() {
        return f64::INFINITY;
    }
    match k.value_range(lo, hi) {
        Some((fmin, fmax)) if fmin > 0.0 && fmax.is_finite() => fmax / fmin,
        _ => f64::INFINITY,
    }
}

/// Resparsifies the union when it exceeds the edge budget, then enforces the budget.
fn finish(
    union: WeightedEdgeList,
    eps: f64,
    seed: u64,
    cfg: &SparsifyConfig,
    mut stats: SparsifyStats,
) -> Result<Sparsifier> {
    stats.union_edges = union.len();
    let graph = if union.len() > stats.budget {
        stats.resparsified = true;
        let clock = std::time::Instant::now();
        let h = resparsify(&union, eps, seed, cfg)?;
        stats.resparsify_ms = clock.elapsed().as_secs_f64() * 1e3;
        h
    } else {
        union
    };
    if graph.len() > stats.budget {
        return Err(Error::PlanTooLarge(format!(
            "sparsifier has {} edges, above the budget of {}",
            graph.len(),
            stats.budget
        )));
    }
    Ok(Sparsifier { graph, stats })
}

/// Oversamples `g` using sketched effective resistances as leverage overestimates.
pub fn resparsify(g: &WeightedEdgeList, eps: f64, seed: u64, cfg: &SparsifyConfig) -> Result<WeightedEdgeList> {
    let sketch = reff_sketch_build(g, cfg.sketch_eps, seed ^ 0x5eed)?;
    let p = g
        .edges()
        .iter()
        .map(|e| (e.w * sketch.estimate(e.u as usize, e.v as usize) / (1.0 - cfg.sketch_eps)).clamp(f64::MIN_POSITIVE, 1.0))
        .collect();
    oversample_with(g, &LeverageOverestimates::new(p)?, eps, cfg.delta, cfg.oversample_c, seed ^ 0x0a11)
}
