//! Sampled effective-resistance oracle on the unweighted inner-product graph and
//! the low-diameter clustering built on it.

use rand::Rng;

use super::{ip_edge, norms, IpConfig, LOW_DIAM_FLOOR};
use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedEdgeList};
use crate::points::PointSet;
use crate::rng::stream_rng;
use crate::sparsify::{reff_sketch_build_any, ReffSketch};

/// Subgraphs are replaced by the exact graph once this many samples per pair are requested.
const EXACT_SAMPLES_PER_PAIR: f64 = 8.0;

/// Maximum of resistance sketches over uniformly sampled subgraphs of the
/// unweighted inner-product graph on a subset of the vectors.
#[derive(Debug, Clone)]
pub struct ReffOracle {
    members: Vec<usize>,
    slot: Vec<usize>,
    sketches: Vec<ReffSketch>,
    /// `1 / (1 - sketch_eps)`, so each sketch overestimates its subgraph.
    inflate: f64,
    exact: bool,
}

impl ReffOracle {
    /// `c5` subgraphs, each of `ceil(c6 m)` ordered pairs drawn from `members x members`,
    /// keeping inner-product edges with weight `m^2 / (2 samples)`.
    pub fn build(x: &PointSet, members: &[usize], c5: usize, c6: f64, sketch_eps: f64, seed: u64) -> Result<Self> {
        let norm = norms(x)?;
        let m = members.len();
        let mut slot = vec![usize::MAX; x.n()];
        for (i, &u) in members.iter().enumerate() {
            if slot[u] != usize::MAX {
                return Err(Error::InvalidInput(format!("vertex {u} listed twice")));
            }
            slot[u] = i;
        }
        let samples = (c6 * m as f64).ceil();
        let pairs = (m * m.saturating_sub(1) / 2) as f64;
        let exact = samples >= EXACT_SAMPLES_PER_PAIR * pairs;
        let sketches = if exact {
            let mut edges = Vec::new();
            for a in 0..m {
                for b in a + 1..m {
                    if ip_edge(x, &norm, members[a], members[b]) {
                        edges.push(Edge::new(a, b, 1.0));
                    }
                }
            }
            let g = WeightedEdgeList::new(m, edges)?;
            vec![reff_sketch_build_any(&g, sketch_eps, seed)?]
        } else {
            let s = samples as usize;
            let w = (m * m) as f64 / (2.0 * s as f64);
            (0..c5.max(1))
                .map(|i| {
                    let mut rng = stream_rng(seed, 0x0c5 + i as u64);
                    let mut kept = Vec::new();
                    for _ in 0..s {
                        let (a, b) = (rng.random_range(0..m), rng.random_range(0..m));
                        if a != b && ip_edge(x, &norm, members[a], members[b]) {
                            kept.push((a, b, w));
                        }
                    }
                    let h = WeightedEdgeList::from_merged(m, kept)?;
                    reff_sketch_build_any(&h, sketch_eps, seed ^ ((i as u64 + 1) << 32))
                })
                .collect::<Result<_>>()?
        };
        Ok(Self { members: members.to_vec(), slot, sketches, inflate: 1.0 / (1.0 - sketch_eps), exact })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Whether the oracle sketches the exact graph instead of sampled subgraphs.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn subgraphs(&self) -> usize {
        self.sketches.len()
    }

    /// Resistance estimate between two members; infinite when some subgraph separates them.
    ///
    /// # Panics
    /// If either vertex is not a member.
    pub fn query(&self, u: usize, v: usize) -> f64 {
        let (a, b) = (self.slot[u], self.slot[v]);
        assert!(a != usize::MAX && b != usize::MAX, "({u}, {v}) not in the oracle's vertex set");
        if a == b {
            return 0.0;
        }
        self.inflate * self.sketches.iter().map(|s| s.estimate(a, b)).fold(0.0, f64::max)
    }
}

/// Oracle over all of `x` with the practical constants.
pub fn reff_oracle(x: &PointSet, seed: u64) -> Result<ReffOracle> {
    let cfg = IpConfig::default();
    let k = cfg.resolve(x.n(), x.d());
    let all: Vec<usize> = (0..x.n()).collect();
    ReffOracle::build(x, &all, k.c5, k.c6, cfg.sketch_eps, seed)
}

/// A set whose members are within `radius` of `center` in the unweighted
/// inner-product graph on the set it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LowDiamSet {
    pub members: Vec<usize>,
    pub center: usize,
    pub radius: f64,
    pub attempts: usize,
}

impl LowDiamSet {
    /// Bound on the pairwise resistance, by the triangle inequality.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

pub fn low_diam_set(x: &PointSet, seed: u64) -> Result<LowDiamSet> {
    let all: Vec<usize> = (0..x.n()).collect();
    low_diam_set_in(x, &all, &IpConfig::default(), seed)
}

/// Tries random centres `v` until `{u : query(u, v) <= c2 / (2m)}` holds `m / c1` members.
pub fn low_diam_set_in(x: &PointSet, members: &[usize], cfg: &IpConfig, seed: u64) -> Result<LowDiamSet> {
    let m = members.len();
    if m < LOW_DIAM_FLOOR {
        return Err(Error::InvalidInput(format!("need at least {LOW_DIAM_FLOOR} vectors, got {m}")));
    }
    let k = cfg.resolve(m, x.d());
    let oracle = ReffOracle::build(x, members, k.c5, k.c6, cfg.sketch_eps, seed)?;
    let theta = k.c2 / m as f64;
    let need = m as f64 / k.c1;
    let mut rng = stream_rng(seed, 0x1d5);
    for attempt in 1..=k.attempts {
        let v = members[rng.random_range(0..m)];
        let q: Vec<usize> = members.iter().copied().filter(|&u| oracle.query(u, v) <= theta / 2.0).collect();
        if q.len() as f64 >= need {
            return Ok(LowDiamSet { members: q, center: v, radius: theta, attempts: attempt });
        }
    }
    Err(Error::IterationCap(format!(
        "no low-diameter set of {need:.1} vectors among {m} after {} centres",
        k.attempts
    )))
}

/// A cluster and a bound on its resistance diameter in the unweighted graph it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub diameter: f64,
}

/// Peels low-diameter sets off `members` until none remain; remainders below the
/// floor become singletons.
pub fn cluster(x: &PointSet, members: &[usize], cfg: &IpConfig, seed: u64) -> Result<Vec<Cluster>> {
    let mut rest = members.to_vec();
    let mut out = Vec::new();
    let mut round = 0u64;
    while !rest.is_empty() {
        if rest.len() < LOW_DIAM_FLOOR {
            out.extend(rest.drain(..).map(|u| Cluster { members: vec![u], diameter: 0.0 }));
            break;
        }
        let s = low_diam_set_in(x, &rest, cfg, seed ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15))?;
        let mut taken = vec![false; x.n()];
        for &u in &s.members {
            taken[u] = true;
        }
        rest.retain(|&u| !taken[u]);
        out.push(Cluster { diameter: s.diameter(), members: s.members });
        round += 1;
    }
    Ok(out)
}
