//! `(zeta, kappa, delta)`-covers of the weighted inner-product graph and oversampling
//! driven by them.
//!
//! Vectors are bucketed by norm in powers of two from the smallest norm. Each bucket
//! is clustered on its unweighted graph; same-bucket pairs are covered by pairs of
//! clusters, pairs from nearby buckets by singletons of the lower bucket against
//! clusters of the higher one, and pairs whose norms differ by more than `xi` by
//! singletons against suffixes of a greedy near-basis clustering.
//!
//! A cluster cut from a bucket with smallest norm `z` and unweighted diameter `D`
//! has weighted diameter at most `(d + 1) D / z^2`, since every unweighted edge
//! weighs at least `z^2 / (d + 1)`. Pair bounds follow from
//! `Reff(u, v) <= 3 R_0 + 3 R_1 + 3 / sum_{S_0 x S_1} w`, with `kappa` absorbing the
//! first two terms against `max w <= max ||a|| max ||b||`.

use std::collections::{BTreeMap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use super::oracle::{cluster, Cluster};
use super::sampler::{build_ip_sampler, IpSampler};
use super::{norms, IpConfig};
use crate::error::{Error, Result};
use crate::graph::WeightedEdgeList;
use crate::points::{dot, PointSet};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverCoef {
    pub zeta: f64,
    pub kappa: f64,
    pub delta: f64,
}

/// A family of disjoint sets `S_0` covered against a target `S_1`, with one
/// coefficient triple per family member.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverEntry {
    pub family: Vec<Vec<usize>>,
    pub target: Vec<usize>,
    pub coef: Vec<CoverCoef>,
}

impl CoverEntry {
    /// `sum_{S_0} zeta(S_0, S_1)`.
    pub fn zeta_mass(&self) -> f64 {
        self.coef.iter().map(|c| c.zeta).sum()
    }

    /// `sum_{S_0} (delta + kappa) |S_0| |S_1|`.
    pub fn uniform_mass(&self) -> f64 {
        self.family
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| (c.delta + c.kappa) * (s.len() * self.target.len()) as f64)
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverStats {
    pub entries: usize,
    pub buckets: usize,
    pub clusters: usize,
    /// Buckets apart that are still covered as nearby norms.
    pub window: usize,
    pub basis: usize,
    pub spread_entries: usize,
    pub sparsity: f64,
    pub efficiency: usize,
}

#[derive(Debug, Clone)]
pub struct IpCover {
    n: usize,
    entries: Vec<CoverEntry>,
    stats: CoverStats,
}

impl IpCover {
    pub fn new(n: usize, entries: Vec<CoverEntry>) -> Result<Self> {
        for e in &entries {
            if e.family.len() != e.coef.len() {
                return Err(Error::DimensionMismatch { expected: e.family.len(), got: e.coef.len() });
            }
            if let Some(&v) = e.family.iter().flatten().chain(&e.target).find(|&&v| v >= n) {
                return Err(Error::InvalidInput(format!("vertex {v} out of range for n = {n}")));
            }
            let bad = |c: &CoverCoef| [c.zeta, c.kappa, c.delta].iter().any(|v| !(*v >= 0.0 && v.is_finite()));
            if e.coef.iter().any(bad) {
                return Err(Error::InvalidInput("cover coefficients must be finite and nonnegative".into()));
            }
        }
        let sparsity = entries.iter().map(|e| e.zeta_mass() + e.uniform_mass()).sum();
        let efficiency = entries
            .iter()
            .map(|e| e.target.len() + e.family.iter().map(Vec::len).sum::<usize>())
            .sum();
        let stats = CoverStats { entries: entries.len(), sparsity, efficiency, ..Default::default() };
        Ok(Self { n, entries, stats })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[CoverEntry] {
        &self.entries
    }

    pub fn stats(&self) -> &CoverStats {
        &self.stats
    }

    /// `sum_F sum_{S_0} ((delta + kappa) |S_0| |S_1| + zeta)`.
    pub fn sparsity(&self) -> f64 {
        self.stats.sparsity
    }

    /// `sum_F (|S_1| + sum_{S_0} |S_0|)`.
    pub fn efficiency(&self) -> usize {
        self.stats.efficiency
    }

    /// `t = 2 * sparsity`, the normaliser of the oversampling distribution.
    pub fn total_overestimate(&self) -> f64 {
        2.0 * self.stats.sparsity
    }

    /// Row-major `n x n` matrix of the smallest cover bound
    /// `delta / w_uv + kappa / max w + zeta / sum w` over entries covering each
    /// positive-weight pair; infinite where no entry covers the pair. O(s d) for
    /// `s = sum |S_0| |S_1|`.
    pub fn bound_matrix(&self, x: &PointSet) -> Result<Vec<f64>> {
        crate::error::check_len(self.n, x.n())?;
        let n = self.n;
        let mut out = vec![f64::INFINITY; n * n];
        let w = |a: usize, b: usize| dot(x.point(a), x.point(b)).abs();
        for e in &self.entries {
            for (s0, c) in e.family.iter().zip(&e.coef) {
                let (mut max, mut sum) = (0.0f64, 0.0);
                for &a in s0 {
                    for &b in &e.target {
                        if a != b {
                            let v = w(a, b);
                            max = max.max(v);
                            sum += v;
                        }
                    }
                }
                if sum == 0.0 {
                    continue;
                }
                for &a in s0 {
                    for &b in &e.target {
                        let wab = w(a, b);
                        if a == b || wab == 0.0 {
                            continue;
                        }
                        let bound = c.delta / wab + c.kappa / max + c.zeta / sum;
                        for k in [a * n + b, b * n + a] {
                            out[k] = out[k].min(bound);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

struct Bucket {
    members: Vec<usize>,
    clusters: Vec<Cluster>,
    /// Weighted diameter bound per cluster.
    reff: Vec<f64>,
    /// Largest norm per cluster.
    top: Vec<f64>,
}

/// Balanced binary partition of `0..m`; the nodes covering `j..m` are returned by
/// [`suffix_nodes`].
fn interval_nodes(lo: usize, hi: usize, out: &mut Vec<(usize, usize)>) {
    out.push((lo, hi));
    if hi - lo > 1 {
        let mid = (lo + hi) / 2;
        interval_nodes(lo, mid, out);
        interval_nodes(mid, hi, out);
    }
}

fn suffix_nodes(lo: usize, hi: usize, j: usize, next: &mut usize, out: &mut Vec<usize>) {
    let id = *next;
    *next += 1;
    if j <= lo {
        out.push(id);
        skip_subtree(lo, hi, next);
        return;
    }
    if hi - lo > 1 {
        let mid = (lo + hi) / 2;
        suffix_nodes(lo, mid, j, next, out);
        suffix_nodes(mid, hi, j, next, out);
    }
}

fn skip_subtree(lo: usize, hi: usize, next: &mut usize) {
    // A subtree over `k` leaves has `2k - 1` nodes, the root already counted.
    *next += 2 * (hi - lo) - 2;
}

/// Builds the cover described in the module documentation.
pub fn build_cover(x: &PointSet, cfg: &IpConfig, seed: u64) -> Result<IpCover> {
    let norm = norms(x)?;
    let (n, d) = (x.n(), x.d());
    if n == 0 {
        return IpCover::new(0, Vec::new());
    }
    let k = cfg.resolve(n, d);
    let l2: Vec<f64> = norm.iter().map(|v| v.log2()).collect();
    let l2min = l2.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut by_bucket: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, v) in l2.iter().enumerate() {
        by_bucket.entry((v - l2min).floor() as usize).or_default().push(i);
    }
    let window = k.xi_log2.ceil().max(1.0) as usize;

    let mut buckets = BTreeMap::new();
    for (&b, members) in &by_bucket {
        let clusters = cluster(x, members, cfg, seed ^ (b as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d))?;
        let zmin = members.iter().map(|&u| norm[u]).fold(f64::INFINITY, f64::min);
        let reff = clusters.iter().map(|c| (d as f64 + 1.0) * c.diameter / (zmin * zmin)).collect();
        let top = clusters
            .iter()
            .map(|c| c.members.iter().map(|&u| norm[u]).fold(0.0, f64::max))
            .collect();
        buckets.insert(b, Bucket { members: members.clone(), clusters, reff, top });
    }

    let mut entries = Vec::new();
    for bk in buckets.values() {
        let family: Vec<Vec<usize>> = bk.clusters.iter().map(|c| c.members.clone()).collect();
        for (j, s1) in bk.clusters.iter().enumerate() {
            let coef = (0..bk.clusters.len())
                .map(|i| CoverCoef {
                    zeta: 3.0,
                    kappa: 3.0 * (bk.reff[i] + bk.reff[j]) * bk.top[i] * bk.top[j],
                    delta: 0.0,
                })
                .collect();
            entries.push(CoverEntry { family: family.clone(), target: s1.members.clone(), coef });
        }
    }
    for (&bi, low) in &buckets {
        for (_, high) in buckets.range(bi + 1..=bi.saturating_add(window)) {
            for (j, s1) in high.clusters.iter().enumerate() {
                entries.push(CoverEntry {
                    family: low.members.iter().map(|&u| vec![u]).collect(),
                    target: s1.members.clone(),
                    coef: low
                        .members
                        .iter()
                        .map(|&u| CoverCoef { zeta: 3.0, kappa: 3.0 * high.reff[j] * norm[u] * high.top[j], delta: 0.0 })
                        .collect(),
                });
            }
        }
    }

    let basis = near_basis(x, &norm)?;
    let mut spread = 0;
    for members in &basis {
        let mut c = members.clone();
        c.sort_by(|&a, &b| l2[a].total_cmp(&l2[b]));
        let m = c.len();
        let mut nodes = Vec::new();
        interval_nodes(0, m, &mut nodes);
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for u in 0..n {
            let j = c.partition_point(|&y| l2[y] - l2[u] < k.xi_log2);
            if j < m {
                let mut ids = Vec::new();
                suffix_nodes(0, m, j, &mut 0, &mut ids);
                for id in ids {
                    groups.entry(id).or_default().push(u);
                }
            }
        }
        let mut ids: Vec<usize> = groups.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let (lo, hi) = nodes[id];
            let target = c[lo..hi].to_vec();
            let family: Vec<Vec<usize>> = groups[&id].iter().map(|&u| vec![u]).collect();
            let coef = vec![CoverCoef { zeta: 2.0, kappa: 0.0, delta: 1.0 / target.len() as f64 }; family.len()];
            entries.push(CoverEntry { family, target, coef });
            spread += 1;
        }
    }

    let mut cover = IpCover::new(n, entries)?;
    cover.stats.buckets = buckets.len();
    cover.stats.clusters = buckets.values().map(|b| b.clusters.len()).sum();
    cover.stats.window = window;
    cover.stats.basis = basis.len();
    cover.stats.spread_entries = spread;
    Ok(cover)
}

/// Greedy clustering in decreasing norm order: a vector joins the first basis vector
/// it is adjacent to in the unweighted graph, or starts a new cluster.
pub(crate) fn near_basis(x: &PointSet, norm: &[f64]) -> Result<Vec<Vec<usize>>> {
    let mut order: Vec<usize> = (0..x.n()).collect();
    order.sort_by(|&a, &b| norm[b].total_cmp(&norm[a]));
    let mut heads: Vec<usize> = Vec::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for u in order {
        match heads.iter().position(|&h| super::ip_edge(x, norm, u, h)) {
            Some(i) => clusters[i].push(u),
            None => {
                heads.push(u);
                clusters.push(vec![u]);
            }
        }
    }
    if heads.len() > x.d() + 1 {
        return Err(Error::Internal(format!(
            "{} pairwise non-adjacent vectors in dimension {}",
            heads.len(),
            x.d()
        )));
    }
    Ok(clusters)
}

/// Oversampling with leverage overestimates
/// `r_uv = 2 sum (delta + kappa + (sum_A zeta(A, S_1)) p_uv)` over the entries covering
/// `{u, v}`, where `p_uv` is the probability of the entry's pair sampler.
pub struct CoverSampler<'a> {
    x: &'a PointSet,
    cover: &'a IpCover,
    samplers: Vec<Option<IpSampler>>,
    zeta_mass: Vec<f64>,
    uniform_mass: Vec<f64>,
    t: f64,
    family_of: Vec<Vec<(u32, u32)>>,
    target_of: Vec<Vec<u32>>,
}

impl<'a> CoverSampler<'a> {
    pub fn new(x: &'a PointSet, cover: &'a IpCover, cfg: &IpConfig, seed: u64) -> Result<Self> {
        crate::error::check_len(cover.n(), x.n())?;
        let scfg = cfg.sampler(x.n(), x.d());
        let mut samplers = Vec::with_capacity(cover.entries().len());
        let mut zeta_mass = Vec::with_capacity(cover.entries().len());
        for (i, e) in cover.entries().iter().enumerate() {
            let z = e.zeta_mass();
            let s = if z > 0.0 {
                let gamma: Vec<f64> = e.coef.iter().map(|c| c.zeta).collect();
                let live: Vec<usize> = (0..e.family.len()).filter(|&k| gamma[k] > 0.0).collect();
                let fam: Vec<Vec<usize>> = live.iter().map(|&k| e.family[k].clone()).collect();
                let g: Vec<f64> = live.iter().map(|&k| gamma[k]).collect();
                Some(build_ip_sampler(x, &fam, &g, &e.target, &scfg, seed ^ (i as u64 + 1) << 20)?)
                    .filter(IpSampler::can_sample)
            } else {
                None
            };
            zeta_mass.push(if s.is_some() { z } else { 0.0 });
            samplers.push(s);
        }
        let uniform_mass: Vec<f64> = cover.entries().iter().map(CoverEntry::uniform_mass).collect();
        let t = 2.0 * (zeta_mass.iter().sum::<f64>() + uniform_mass.iter().sum::<f64>());
        let mut family_of = vec![Vec::new(); x.n()];
        let mut target_of = vec![Vec::new(); x.n()];
        for (i, e) in cover.entries().iter().enumerate() {
            for (s, set) in e.family.iter().enumerate() {
                for &u in set {
                    family_of[u].push((i as u32, s as u32));
                }
            }
            for &v in &e.target {
                target_of[v].push(i as u32);
            }
        }
        Ok(Self { x, cover, samplers, zeta_mass, uniform_mass, t, family_of, target_of })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn term(&self, entry: usize, set: usize, a: usize, b: usize) -> f64 {
        let c = self.cover.entries()[entry].coef[set];
        let p = self.samplers[entry].as_ref().map_or(0.0, |s| s.prob(a, b));
        c.delta + c.kappa + self.zeta_mass[entry] * p
    }

    fn oriented(&self, a: usize, b: usize) -> f64 {
        self.family_of[a]
            .iter()
            .filter(|(e, _)| self.target_of[b].binary_search(e).is_ok())
            .map(|&(e, s)| self.term(e as usize, s as usize, a, b))
            .sum()
    }

    /// Leverage overestimate of the pair.
    pub fn r(&self, u: usize, v: usize) -> f64 {
        2.0 * (self.oriented(u, v) + self.oriented(v, u))
    }

    /// Row-major `n x n` matrix of `r`, computed entry by entry.
    pub fn r_matrix(&self) -> Vec<f64> {
        let n = self.x.n();
        let mut out = vec![0.0; n * n];
        for (i, e) in self.cover.entries().iter().enumerate() {
            let sampler = self.samplers[i].as_ref();
            let order = sampler.map_or(&e.target[..], |s| s.target());
            for (set, c) in e.family.iter().zip(&e.coef) {
                for &u in set {
                    let p = sampler.map(|s| s.probs_for(u));
                    for (k, &v) in order.iter().enumerate() {
                        if u == v {
                            continue;
                        }
                        let pk = p.as_ref().map_or(0.0, |p| p[k]);
                        let add = 2.0 * (c.delta + c.kappa + self.zeta_mass[i] * pk);
                        out[u * n + v] += add;
                        out[v * n + u] += add;
                    }
                }
            }
        }
        out
    }

    /// `q` draws with probability `r_e / t`, each kept with weight `w_e t / (r_e q)`.
    /// Draws landing on a vertex twice or on a zero-weight pair are dropped.
    pub fn draw(&self, q: usize, seed: u64) -> Result<WeightedEdgeList> {
        let zeta_total: f64 = self.zeta_mass.iter().sum();
        let half = self.t / 2.0;
        if !(half > 0.0) {
            return Err(Error::InvalidInput("cover carries no sampling mass".into()));
        }
        let by_zeta = (zeta_total > 0.0)
            .then(|| WeightedIndex::new(&self.zeta_mass))
            .transpose()
            .map_err(|e| Error::Internal(e.to_string()))?;
        let by_uniform = (self.uniform_mass.iter().sum::<f64>() > 0.0)
            .then(|| WeightedIndex::new(&self.uniform_mass))
            .transpose()
            .map_err(|e| Error::Internal(e.to_string()))?;
        let mut by_set: HashMap<usize, WeightedIndex<f64>> = HashMap::new();
        let mut rng = stream_rng(seed, 0xc0fe);
        let mut r_cache: HashMap<(usize, usize), f64> = HashMap::new();
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for _ in 0..q {
            let (u, v) = if rng.random::<f64>() * half < zeta_total {
                let e = by_zeta.as_ref().expect("zeta mass is positive").sample(&mut rng);
                match self.samplers[e].as_ref().and_then(|s| s.sample(&mut rng)) {
                    Some(pair) => pair,
                    None => continue,
                }
            } else {
                let e = by_uniform.as_ref().expect("uniform mass is positive").sample(&mut rng);
                let entry = &self.cover.entries()[e];
                let sets = match by_set.entry(e) {
                    std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                    std::collections::hash_map::Entry::Vacant(slot) => {
                        let w: Vec<f64> = entry
                            .family
                            .iter()
                            .zip(&entry.coef)
                            .map(|(s, c)| s.len() as f64 * (c.delta + c.kappa))
                            .collect();
                        slot.insert(WeightedIndex::new(&w).map_err(|e| Error::Internal(e.to_string()))?)
                    }
                };
                let s0 = &entry.family[sets.sample(&mut rng)];
                (s0[rng.random_range(0..s0.len())], entry.target[rng.random_range(0..entry.target.len())])
            };
            if u == v {
                continue;
            }
            let w = dot(self.x.point(u), self.x.point(v)).abs();
            if w == 0.0 {
                continue;
            }
            let key = (u.min(v), u.max(v));
            let r = *r_cache.entry(key).or_insert_with(|| self.r(u, v));
            *acc.entry(key).or_insert(0.0) += w * self.t / (r * q as f64);
        }
        let mut pairs: Vec<(usize, usize, f64)> = acc.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        pairs.sort_by_key(|p| (p.0, p.1));
        WeightedEdgeList::from_merged(self.x.n(), pairs)
    }
}
