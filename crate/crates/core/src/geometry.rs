//! Random projections and well-separated pair decompositions.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::rng::stream_rng;

/// `ceil(24 ln n / eps^2)`.
pub fn jl_dim_bound(n: usize, eps: f64) -> usize {
    (24.0 * (n.max(2) as f64).ln() / (eps * eps)).ceil() as usize
}

/// Projects every point by a `k x d` matrix with i.i.d. `+-1/sqrt(k)` entries.
pub fn jl_project(p: &PointSet, k: usize, seed: u64) -> Result<PointSet> {
    if k == 0 {
        return Err(Error::InvalidInput("projection dimension must be at least 1".into()));
    }
    let d = p.d();
    let mut rng = stream_rng(seed, 0x4a4c);
    let s = 1.0 / (k as f64).sqrt();
    let m: Vec<f64> = (0..k * d)
        .map(|_| if rng.random::<bool>() { s } else { -s })
        .collect();
    let mut coords = Vec::with_capacity(p.n() * k);
    for i in 0..p.n() {
        let x = p.point(i);
        for row in m.chunks_exact(d) {
            coords.push(crate::linalg::dot(row, x));
        }
    }
    PointSet::new(p.n(), k, coords)
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub start: usize,
    pub end: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub children: Option<(usize, usize)>,
}

impl TreeNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Length of the bounding-box diagonal.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Binary tree splitting the longest bounding-box side at its midpoint.
#[derive(Debug, Clone)]
pub struct FairSplitTree {
    perm: Vec<usize>,
    nodes: Vec<TreeNode>,
}

impl FairSplitTree {
    pub fn new(p: &PointSet) -> Self {
        let n = p.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n);
        if n == 0 {
            return Self { perm, nodes };
        }
        let (lo, hi) = bbox(p, &perm);
        nodes.push(TreeNode { start: 0, end: n, lo, hi, children: None });
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let (start, end) = (nodes[id].start, nodes[id].end);
            if end - start <= 1 {
                continue;
            }
            // Lowest axis wins ties.
            let (axis, width) = nodes[id]
                .lo
                .iter()
                .zip(&nodes[id].hi)
                .map(|(a, b)| b - a)
                .enumerate()
                .fold((0, -1.0), |best, (i, w)| if w > best.1 { (i, w) } else { best });
            let mid = if width > 0.0 {
                let cut = nodes[id].lo[axis] + 0.5 * width;
                let slice = &mut perm[start..end];
                let mut m = 0;
                for i in 0..slice.len() {
                    if p.point(slice[i])[axis] <= cut {
                        slice.swap(i, m);
                        m += 1;
                    }
                }
                start + m
            } else {
                start + (end - start) / 2
            };
            let mid = if mid == start || mid == end { start + (end - start) / 2 } else { mid };
            let mut kids = [0usize; 2];
            for (slot, (s, e)) in [(start, mid), (mid, end)].into_iter().enumerate() {
                let (lo, hi) = bbox(p, &perm[s..e]);
                nodes.push(TreeNode { start: s, end: e, lo, hi, children: None });
                kids[slot] = nodes.len() - 1;
                stack.push(kids[slot]);
            }
            nodes[id].children = Some((kids[0], kids[1]));
        }
        Self { perm, nodes }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn members(&self, id: usize) -> &[usize] {
        let nd = &self.nodes[id];
        &self.perm[nd.start..nd.end]
    }

    /// Centroid and enclosing radius of every node, measured in `p` (which may differ
    /// from the points the tree was built on, e.g. before a projection).
    pub fn node_balls(&self, p: &PointSet) -> Vec<(Vec<f64>, f64)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(id, _)| {
                let m = self.members(id);
                let mut c = vec![0.0; p.d()];
                for &i in m {
                    crate::linalg::axpy(1.0, p.point(i), &mut c);
                }
                c.iter_mut().for_each(|v| *v /= m.len() as f64);
                let r2 = m
                    .iter()
                    .map(|&i| crate::points::sq_dist(p.point(i), &c))
                    .fold(0.0, f64::max);
                (c, r2.sqrt())
            })
            .collect()
    }
}

fn bbox(p: &PointSet, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; p.d()];
    let mut hi = vec![f64::NEG_INFINITY; p.d()];
    for &i in idx {
        for (k, &x) in p.point(i).iter().enumerate() {
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    (lo, hi)
}

/// Squared distance between two boxes, and between their farthest corners.
fn box_sq_dist_range(a: &TreeNode, b: &TreeNode) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..a.lo.len() {
        let gap = (b.lo[k] - a.hi[k]).max(a.lo[k] - b.hi[k]).max(0.0);
        let span = (b.hi[k] - a.lo[k]).max(a.hi[k] - b.lo[k]);
        near += gap * gap;
        far += span * span;
    }
    (near, far)
}

const EXACT_NODE: usize = 48;
const EXACT_PAIR: usize = 1024;

fn point_diameter(p: &PointSet, idx: &[usize]) -> f64 {
    let mut m = 0.0f64;
    for (x, &u) in idx.iter().enumerate() {
        for &v in &idx[x + 1..] {
            m = m.max(p.sq_dist(u, v));
        }
    }
    m.sqrt()
}

fn cross_sq_dist_range(p: &PointSet, a: &[usize], b: &[usize]) -> (f64, f64) {
    let mut near = f64::INFINITY;
    let mut far = 0.0f64;
    for &u in a {
        for &v in b {
            let z = p.sq_dist(u, v);
            near = near.min(z);
            far = far.max(z);
        }
    }
    (near, far)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WsPair {
    pub a: usize,
    pub b: usize,
    /// Upper bound on `max(diam A, diam B) / dist(A, B)`.
    pub sep: f64,
    /// Certified bounds on squared distances between the two sides.
    pub sq_dist_lo: f64,
    pub sq_dist_hi: f64,
}

impl WsPair {
    /// Certified bound on `max / min` squared distance across the pair.
    pub fn sq_dist_ratio(&self) -> f64 {
        if self.sq_dist_lo > 0.0 {
            self.sq_dist_hi / self.sq_dist_lo
        } else {
            f64::INFINITY
        }
    }
}

/// Well-separated pair decomposition over a fair-split tree.
#[derive(Debug, Clone)]
pub struct Wspd {
    pub tree: FairSplitTree,
    pub pairs: Vec<WsPair>,
    pub eps_sep: f64,
}

impl Wspd {
    pub fn sides(&self, i: usize) -> (&[usize], &[usize]) {
        let pr = &self.pairs[i];
        (self.tree.members(pr.a), self.tree.members(pr.b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `sum |A_i| |B_i|`, which equals `n(n-1)/2` for a valid decomposition.
    pub fn covered_pairs(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| self.tree.node(p.a).len() * self.tree.node(p.b).len())
            .sum()
    }
}

/// Builds an `eps_sep`-well-separated pair decomposition, `eps_sep` in `(0, 0.9]`.
pub fn build_wspd(p: &PointSet, eps_sep: f64) -> Result<Wspd> {
    if !(eps_sep > 0.0 && eps_sep <= 0.9) {
        return Err(Error::InvalidInput(format!("eps_sep must lie in (0, 0.9], got {eps_sep}")));
    }
    if p.n() < 2 {
        return Err(Error::InvalidInput("need at least two points".into()));
    }
    let tree = FairSplitTree::new(p);
    if tree.node(0).diameter() == 0.0 {
        return Err(Error::InvalidInput("all points coincide".into()));
    }
    let diam: Vec<f64> = (0..tree.nodes().len())
        .map(|id| {
            let m = tree.members(id);
            if m.len() <= EXACT_NODE {
                point_diameter(p, m)
            } else {
                tree.node(id).diameter()
            }
        })
        .collect();
    let mut pairs = Vec::new();
    let mut work: Vec<(usize, usize)> = tree
        .nodes()
        .iter()
        .filter_map(|nd| nd.children)
        .collect();
    while let Some((a, b)) = work.pop() {
        let (na, nb) = (tree.node(a), tree.node(b));
        let (near, far) = if na.len() * nb.len() <= EXACT_PAIR {
            cross_sq_dist_range(p, tree.members(a), tree.members(b))
        } else {
            box_sq_dist_range(na, nb)
        };
        let span = diam[a].max(diam[b]);
        let leaves = na.children.is_none() && nb.children.is_none();
        // Two singletons are always separated unless they coincide.
        if span <= eps_sep * near.sqrt() || leaves {
            let sep = if near > 0.0 { span / near.sqrt() } else { 0.0 };
            pairs.push(WsPair { a, b, sep, sq_dist_lo: near, sq_dist_hi: far });
            continue;
        }
        let split_a = match (na.children, nb.children) {
            (Some(_), None) => true,
            (None, Some(_)) => false,
            _ => diam[a] >= diam[b],
        };
        if split_a {
            let (l, r) = na.children.unwrap();
            work.push((l, b));
            work.push((r, b));
        } else {
            let (l, r) = nb.children.unwrap();
            work.push((a, l));
            work.push((a, r));
        }
    }
    Ok(Wspd { tree, pairs, eps_sep })
}
