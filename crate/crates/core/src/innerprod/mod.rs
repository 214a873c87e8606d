//! Spectral sparsification of the inner-product graph `K(u, v) = |<u, v>|`.
//!
//! Vectors are clustered with a sampled effective-resistance oracle on the
//! unweighted inner-product graph, the clusters are assembled into a
//! `(zeta, kappa, delta)`-cover, and the cover drives oversampling through
//! `l1`-sketch pair samplers.

mod cover;
mod l1;
mod oracle;
mod sampler;

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Edge, UnionFind, WeightedEdgeList};
use crate::points::{dot, PointSet};
use crate::sparsify::{edge_budget, resparsify, SparsifyConfig, DEFAULT_OVERSAMPLE_C};

pub use cover::{build_cover, CoverCoef, CoverEntry, CoverSampler, CoverStats, IpCover};
pub use l1::{l1_rows, l1_sketch, recover_norm, L1Sketch, DEFAULT_L1_C};
pub use oracle::{cluster, low_diam_set, low_diam_set_in, reff_oracle, Cluster, LowDiamSet, ReffOracle};
pub use sampler::{build_ip_sampler, IpSampler, SamplerConfig};

/// Smallest set handed to [`low_diam_set`]; smaller remainders become singletons.
pub const LOW_DIAM_FLOOR: usize = 8;

/// Which family of constants drives the clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constants {
    #[default]
    Practical,
    Paper,
}

/// Constants resolved for a set of `n` vectors in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpConstants {
    /// A low-diameter set holds at least `n / c1` vertices.
    pub c1: f64,
    /// Radius threshold `c2 / n` of a low-diameter set.
    pub c2: f64,
    /// Sampled subgraphs per oracle.
    pub c5: usize,
    /// Pairs sampled per subgraph, divided by `n`.
    pub c6: f64,
    /// Random centres tried before giving up.
    pub attempts: usize,
    /// `log2` of the spread-pair norm ratio.
    pub xi_log2: f64,
    /// Relative accuracy of the sampler's row-sum estimates.
    pub eps_row: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpConfig {
    pub constants: Constants,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub xi_log2: Option<f64>,
    pub eps_row: Option<f64>,
    /// Accuracy of the resistance sketches inside the oracle.
    pub sketch_eps: f64,
    /// Failure probability of each row-sum estimate.
    pub delta_row: f64,
    pub l1_c: f64,
    /// Sampler rebuilds allowed after a failed consistency check.
    pub retries: usize,
    pub oversample_c: f64,
    /// Return the exact graph when the sample count reaches the number of pairs.
    pub exact_shortcut: bool,
    pub sparsify: SparsifyConfig,
}

impl Default for IpConfig {
    fn default() -> Self {
        Self {
            constants: Constants::Practical,
            c1: None,
            c2: None,
            xi_log2: None,
            eps_row: None,
            sketch_eps: 0.5,
            delta_row: 0.02,
            l1_c: DEFAULT_L1_C,
            retries: 8,
            oversample_c: DEFAULT_OVERSAMPLE_C,
            exact_shortcut: true,
            sparsify: SparsifyConfig::default(),
        }
    }
}

impl IpConfig {
    pub fn paper() -> Self {
        Self { constants: Constants::Paper, ..Self::default() }
    }

    pub fn resolve(&self, n: usize, d: usize) -> IpConstants {
        let (nf, df) = (n.max(2) as f64, d.max(1) as f64);
        let ln = nf.ln();
        let base = match self.constants {
            Constants::Practical => IpConstants {
                c1: 8.0 * df * df,
                c2: 8.0 * (df + 1.0),
                c5: (ln.ceil() as usize).max(3),
                c6: 16.0 * ln.max(1.0),
                attempts: 64,
                xi_log2: ((df + 1.0) * nf).log2(),
                eps_row: 0.15,
            },
            Constants::Paper => {
                let (c3a, c3b, c3c) = (40.0 * 8.0 * df, 800.0 * df * ln, 10000.0 * 8.0 * df);
                IpConstants {
                    c1: 320.0 * df * df,
                    c2: (10.0 * df * ln).powi(10),
                    c5: (1000.0 * ln).ceil() as usize,
                    c6: 80000.0 * self.oversample_c * (c3a * c3b * c3c).powi(2),
                    attempts: (32000.0 * df * df * ln).ceil() as usize,
                    xi_log2: 1000.0 * (df * nf).log2(),
                    eps_row: 1.0 / (100.0 * ln),
                }
            }
        };
        IpConstants {
            c1: self.c1.unwrap_or(base.c1),
            c2: self.c2.unwrap_or(base.c2),
            xi_log2: self.xi_log2.unwrap_or(base.xi_log2),
            eps_row: self.eps_row.unwrap_or(base.eps_row),
            ..base
        }
    }

    pub(crate) fn sampler(&self, n: usize, d: usize) -> SamplerConfig {
        SamplerConfig {
            eps_row: self.resolve(n, d).eps_row,
            delta_row: self.delta_row,
            l1_c: self.l1_c,
            retries: self.retries,
        }
    }
}

pub(crate) fn norms(x: &PointSet) -> Result<Vec<f64>> {
    (0..x.n())
        .map(|i| {
            let r = dot(x.point(i), x.point(i)).sqrt();
            if r > 0.0 && r.is_finite() {
                Ok(r)
            } else {
                Err(Error::InvalidInput(format!("vector {i} has norm {r}; inner-product graphs need nonzero vectors")))
            }
        })
        .collect()
}

/// Whether `u` and `v` are adjacent in the unweighted inner-product graph.
pub(crate) fn ip_edge(x: &PointSet, norm: &[f64], u: usize, v: usize) -> bool {
    let d = x.d() as f64;
    dot(x.point(u), x.point(v)).abs() * (d + 1.0) >= norm[u] * norm[v]
}

/// Unit weight on every pair with `|<u, v>| >= ||u|| ||v|| / (d + 1)`.
pub fn ip_unweighted_graph(x: &PointSet) -> Result<WeightedEdgeList> {
    let norm = norms(x)?;
    let mut edges = Vec::new();
    for u in 0..x.n() {
        for v in u + 1..x.n() {
            if ip_edge(x, &norm, u, v) {
                edges.push(Edge::new(u, v, 1.0));
            }
        }
    }
    WeightedEdgeList::new(x.n(), edges)
}

/// Weight `|<u, v>|` on every pair with a nonzero inner product.
pub fn ip_weighted_graph(x: &PointSet) -> Result<WeightedEdgeList> {
    norms(x)?;
    let mut edges = Vec::new();
    for u in 0..x.n() {
        for v in u + 1..x.n() {
            let w = dot(x.point(u), x.point(v)).abs();
            if w > 0.0 {
                edges.push(Edge::new(u, v, w));
            }
        }
    }
    WeightedEdgeList::new(x.n(), edges)
}

/// Errors with two vertices in different components of the weighted graph.
fn require_ip_connected(x: &PointSet) -> Result<()> {
    let n = x.n();
    let mut uf = UnionFind::new(n);
    let mut joined = 1;
    'outer: for u in 0..n {
        for v in u + 1..n {
            if uf.find(u) != uf.find(v) && dot(x.point(u), x.point(v)) != 0.0 {
                uf.union(u, v);
                joined += 1;
                if joined == n {
                    break 'outer;
                }
            }
        }
    }
    if joined < n {
        let v = (1..n).find(|&v| uf.find(v) != uf.find(0)).unwrap_or(0);
        return Err(Error::Disconnected { u: 0, v, comp_u: uf.find(0), comp_v: uf.find(v) });
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IpStats {
    pub cover: CoverStats,
    /// Total leverage overestimate `sum r_uv`.
    pub t: f64,
    /// Sample count prescribed by oversampling.
    pub q: f64,
    /// The sample count reached the number of pairs, so the exact graph was used.
    pub exact_shortcut: bool,
    pub union_edges: usize,
    pub resparsified: bool,
    pub budget: usize,
    pub cover_ms: f64,
    pub sample_ms: f64,
    pub resparsify_ms: f64,
}

#[derive(Debug, Clone)]
pub struct IpSparsifier {
    pub graph: WeightedEdgeList,
    pub stats: IpStats,
}

/// `(1 +- eps)`-spectral sparsifier of the weighted inner-product graph on `x`.
pub fn ip_sparsify(x: &PointSet, eps: f64, delta: f64, seed: u64) -> Result<IpSparsifier> {
    ip_sparsify_with(x, eps, delta, seed, &IpConfig::default())
}

pub fn ip_sparsify_with(x: &PointSet, eps: f64, delta: f64, seed: u64, cfg: &IpConfig) -> Result<IpSparsifier> {
    for (name, v) in [("eps", eps), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    norms(x)?;
    let n = x.n();
    let mut stats = IpStats { budget: edge_budget(n, eps, cfg.sparsify.budget_c), ..Default::default() };
    if n <= 2 {
        require_ip_connected(x)?;
        return Ok(IpSparsifier { graph: ip_weighted_graph(x)?, stats });
    }
    require_ip_connected(x)?;

    let clock = Instant::now();
    let cover = build_cover(x, cfg, seed)?;
    stats.cover_ms = clock.elapsed().as_secs_f64() * 1e3;
    stats.cover = cover.stats().clone();
    stats.t = cover.total_overestimate();
    stats.q = cfg.oversample_c / (eps * eps) * stats.t * stats.t.ln() * (1.0 / delta).ln();

    let clock = Instant::now();
    let pairs = (n * (n - 1) / 2) as f64;
    let union = if cfg.exact_shortcut && stats.q >= pairs {
        stats.exact_shortcut = true;
        ip_weighted_graph(x)?
    } else {
        let q = stats.q.ceil();
        if q > u32::MAX as f64 {
            return Err(Error::PlanTooLarge(format!("{q:e} samples requested")));
        }
        CoverSampler::new(x, &cover, cfg, seed)?.draw(q as usize, seed)?
    };
    stats.sample_ms = clock.elapsed().as_secs_f64() * 1e3;
    stats.union_edges = union.len();

    let graph = if union.len() > stats.budget {
        stats.resparsified = true;
        let clock = Instant::now();
        let h = resparsify(&union, eps, seed, &cfg.sparsify)?;
        stats.resparsify_ms = clock.elapsed().as_secs_f64() * 1e3;
        h
    } else {
        union
    };
    Ok(IpSparsifier { graph, stats })
}
