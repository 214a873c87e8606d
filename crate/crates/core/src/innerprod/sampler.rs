//! Samplers over pairs `(u, v)`, `u` in a family of disjoint sets and `v` in a target
//! set, with probability close to `gamma_S |<u, v>| / tau_S`, `tau_S` the total
//! weight between `S` and the target.
//!
//! A balanced binary tree over the target carries one `l1` sketch per node. A draw
//! picks `u` by its estimated row sum, then descends the tree choosing each child
//! in proportion to its estimate. The probability of a pair is the product of the
//! branch ratios on its path, so it can be queried exactly.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use super::l1::{cauchy, l1_rows, median_in_place, DEFAULT_L1_C};
use super::norms;
use crate::error::{Error, Result};
use crate::points::{dot, PointSet};
use crate::rng::stream_rng;

/// Largest sketch table, in floats, a sampler may allocate.
const SKETCH_CAP: usize = 1 << 28;

/// A child estimate above this multiple of its parent's triggers a rebuild.
const CONSISTENCY_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub eps_row: f64,
    pub delta_row: f64,
    pub l1_c: f64,
    pub retries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { eps_row: 0.15, delta_row: 0.02, l1_c: DEFAULT_L1_C, retries: 8 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lo: usize,
    hi: usize,
    kids: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct IpSampler {
    d: usize,
    rows: usize,
    target: Vec<usize>,
    leaf: HashMap<usize, usize>,
    nodes: Vec<Node>,
    /// Per node, `rows x d` sums of Cauchy-weighted target vectors.
    sketch: Vec<f64>,
    items: Vec<usize>,
    item_vec: Vec<f64>,
    item_of: HashMap<usize, usize>,
    item_p: Vec<f64>,
    dist: Option<WeightedIndex<f64>>,
    builds: usize,
}

fn build_tree(lo: usize, hi: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    nodes.push(Node { lo, hi, kids: None });
    if hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let a = build_tree(lo, mid, nodes);
        let b = build_tree(mid, hi, nodes);
        nodes[id].kids = Some((a, b));
    }
    id
}

fn split(a: f64, b: f64) -> (f64, f64) {
    if a + b > 0.0 {
        (a / (a + b), b / (a + b))
    } else {
        (0.5, 0.5)
    }
}

/// Sampler for `family` (disjoint vertex sets with weights `gamma`) against `target`.
pub fn build_ip_sampler(
    x: &PointSet,
    family: &[Vec<usize>],
    gamma: &[f64],
    target: &[usize],
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<IpSampler> {
    if family.len() != gamma.len() {
        return Err(Error::DimensionMismatch { expected: family.len(), got: gamma.len() });
    }
    if target.is_empty() || family.iter().all(|s| s.is_empty()) {
        return Err(Error::InvalidInput("sampler needs a nonempty family and target".into()));
    }
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput(format!("set weights must be positive, got {g}")));
    }
    for (name, v) in [("eps_row", cfg.eps_row), ("delta_row", cfg.delta_row)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    norms(x)?;
    let d = x.d();
    let rows = l1_rows(cfg.eps_row, cfg.delta_row, cfg.l1_c);
    let mut nodes = Vec::with_capacity(2 * target.len());
    build_tree(0, target.len(), &mut nodes);
    if nodes.len().saturating_mul(rows).saturating_mul(d) > SKETCH_CAP {
        return Err(Error::PlanTooLarge(format!(
            "sampler sketch of {} nodes x {rows} rows x {d} coordinates",
            nodes.len()
        )));
    }

    let mut items = Vec::new();
    let mut item_set = Vec::new();
    let mut item_of = HashMap::new();
    for (s, set) in family.iter().enumerate() {
        for &u in set {
            if item_of.insert(u, items.len()).is_some() {
                return Err(Error::InvalidInput(format!("vertex {u} appears in two family sets")));
            }
            items.push(u);
            item_set.push(s);
        }
    }
    let item_vec: Vec<f64> = items.iter().flat_map(|&u| x.point(u).iter().copied()).collect();
    let leaf = target.iter().enumerate().map(|(p, &v)| (v, p)).collect();

    let mut out = IpSampler {
        d,
        rows,
        target: target.to_vec(),
        leaf,
        nodes,
        sketch: Vec::new(),
        items,
        item_vec,
        item_of,
        item_p: Vec::new(),
        dist: None,
        builds: 0,
    };
    for attempt in 0..=cfg.retries {
        out.builds = attempt + 1;
        out.fill_sketch(x, stream_rng(seed, 0x5a3 + attempt as u64));
        if out.consistent() {
            out.set_item_weights(family.len(), &item_set, gamma)?;
            return Ok(out);
        }
    }
    Err(Error::IterationCap(format!(
        "sampler sketches failed the consistency check after {} builds",
        cfg.retries + 1
    )))
}

impl IpSampler {
    fn fill_sketch<R: Rng>(&mut self, x: &PointSet, mut rng: R) {
        let (rows, d) = (self.rows, self.d);
        let block = rows * d;
        self.sketch = vec![0.0; self.nodes.len() * block];
        // Children are created after their parent, so a reverse sweep sees kids first.
        for id in (0..self.nodes.len()).rev() {
            let node = self.nodes[id];
            match node.kids {
                None => {
                    let v = x.point(self.target[node.lo]);
                    let dst = &mut self.sketch[id * block..(id + 1) * block];
                    for row in dst.chunks_exact_mut(d.max(1)).take(rows) {
                        let c = cauchy(&mut rng);
                        for (o, vi) in row.iter_mut().zip(v) {
                            *o = c * vi;
                        }
                    }
                }
                Some((a, b)) => {
                    for k in 0..block {
                        self.sketch[id * block + k] = self.sketch[a * block + k] + self.sketch[b * block + k];
                    }
                }
            }
        }
    }

    fn estimate(&self, u: &[f64], node: usize, scratch: &mut Vec<f64>) -> f64 {
        let block = self.rows * self.d;
        scratch.clear();
        scratch.extend(
            self.sketch[node * block..(node + 1) * block]
                .chunks_exact(self.d.max(1))
                .take(self.rows)
                .map(|row| dot(u, row).abs()),
        );
        median_in_place(scratch)
    }

    fn item(&self, i: usize) -> &[f64] {
        &self.item_vec[i * self.d..(i + 1) * self.d]
    }

    /// Children within [`CONSISTENCY_RATIO`] of their parent on the top two levels.
    fn consistent(&self) -> bool {
        let mut scratch = Vec::new();
        (0..self.items.len()).all(|i| {
            let u = self.item(i);
            let mut frontier = vec![(0usize, self.estimate(u, 0, &mut scratch))];
            for _ in 0..2 {
                let mut next = Vec::new();
                for (id, parent) in frontier {
                    if let Some((a, b)) = self.nodes[id].kids {
                        for c in [a, b] {
                            let s = self.estimate(u, c, &mut scratch);
                            if s > CONSISTENCY_RATIO * parent {
                                return false;
                            }
                            next.push((c, s));
                        }
                    }
                }
                frontier = next;
            }
            true
        })
    }

    fn set_item_weights(&mut self, sets: usize, item_set: &[usize], gamma: &[f64]) -> Result<()> {
        let mut scratch = Vec::new();
        let t: Vec<f64> = (0..self.items.len()).map(|i| self.estimate(self.item(i), 0, &mut scratch)).collect();
        let mut tau = vec![0.0; sets];
        for (i, &s) in item_set.iter().enumerate() {
            tau[s] += t[i];
        }
        let w: Vec<f64> = item_set
            .iter()
            .enumerate()
            .map(|(i, &s)| if tau[s] > 0.0 { gamma[s] * t[i] / tau[s] } else { 0.0 })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            self.item_p = w.iter().map(|v| v / total).collect();
            self.dist = Some(WeightedIndex::new(&w).map_err(|e| Error::Internal(e.to_string()))?);
        } else {
            self.item_p = vec![0.0; w.len()];
        }
        Ok(())
    }

    /// Target vertices in leaf order.
    pub fn target(&self) -> &[usize] {
        &self.target
    }

    /// Family vertices.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Sketch builds used, including rebuilds after failed consistency checks.
    pub fn builds(&self) -> usize {
        self.builds
    }

    /// False when every estimated row sum is zero.
    pub fn can_sample(&self) -> bool {
        self.dist.is_some()
    }

    /// Probability that [`IpSampler::sample`] returns `(u, v)`.
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        let (Some(&i), Some(&pos)) = (self.item_of.get(&u), self.leaf.get(&v)) else {
            return 0.0;
        };
        let mut p = self.item_p[i];
        if p == 0.0 {
            return 0.0;
        }
        let uv = self.item(i);
        let mut scratch = Vec::new();
        let mut node = 0;
        while let Some((a, b)) = self.nodes[node].kids {
            let (pa, pb) = split(self.estimate(uv, a, &mut scratch), self.estimate(uv, b, &mut scratch));
            if pos < self.nodes[a].hi {
                p *= pa;
                node = a;
            } else {
                p *= pb;
                node = b;
            }
        }
        p
    }

    /// `prob(u, v)` for every target `v`, in leaf order.
    pub fn probs_for(&self, u: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.target.len()];
        let Some(&i) = self.item_of.get(&u) else {
            return out;
        };
        let uv = self.item(i);
        let mut scratch = Vec::new();
        let mut stack = vec![(0usize, self.item_p[i])];
        while let Some((id, p)) = stack.pop() {
            match self.nodes[id].kids {
                None => out[self.nodes[id].lo] = p,
                Some((a, b)) => {
                    let (pa, pb) = split(self.estimate(uv, a, &mut scratch), self.estimate(uv, b, &mut scratch));
                    stack.push((a, p * pa));
                    stack.push((b, p * pb));
                }
            }
        }
        out
    }

    /// One pair `(u, v)`; `None` when [`IpSampler::can_sample`] is false.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<(usize, usize)> {
        let i = self.dist.as_ref()?.sample(rng);
        let uv = self.item(i);
        let mut scratch = Vec::new();
        let mut node = 0;
        while let Some((a, b)) = self.nodes[node].kids {
            let (pa, _) = split(self.estimate(uv, a, &mut scratch), self.estimate(uv, b, &mut scratch));
            node = if rng.random::<f64>() < pa { a } else { b };
        }
        Some((self.items[i], self.target[self.nodes[node].lo]))
    }
}
