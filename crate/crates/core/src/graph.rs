//! Weighted undirected graphs and their Laplacians.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{pcg, PcgOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub w: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, w: f64) -> Self {
        Self { u: u as u32, v: v as u32, w }
    }

    /// Endpoints with the smaller index first.
    pub fn key(&self) -> (u32, u32) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Sparse weighted graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEdgeList {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedEdgeList {
    /// Validates loops, ranges, weights and duplicate pairs.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u == e.v {
                return Err(Error::InvalidInput(format!("self loop at vertex {}", e.u)));
            }
            if e.u as usize >= n || e.v as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    e.u, e.v
                )));
            }
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) has non-positive or non-finite weight {}",
                    e.u, e.v, e.w
                )));
            }
            if !seen.insert(e.key()) {
                return Err(Error::InvalidInput(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        Ok(Self { n, edges })
    }

    /// Builds a graph from weighted pairs, summing weights of repeated pairs.
    /// Output edges are sorted by `(min, max)` endpoint.
    pub fn from_merged(n: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
        for (u, v, w) in pairs {
            let e = Edge::new(u, v, w);
            *acc.entry(e.key()).or_insert(0.0) += w;
        }
        let mut edges: Vec<Edge> = acc
            .into_iter()
            .map(|((u, v), w)| Edge { u, v, w })
            .collect();
        edges.sort_by_key(Edge::key);
        Self::new(n, edges)
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn complete(n: usize, w: f64) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push(Edge::new(u, v, w));
            }
        }
        Self { n, edges }
    }

    pub fn path(n: usize, w: f64) -> Self {
        let edges = (1..n).map(|v| Edge::new(v - 1, v, w)).collect();
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn w_min(&self) -> f64 {
        self.edges.iter().fold(f64::INFINITY, |m, e| m.min(e.w))
    }

    pub fn w_max(&self) -> f64 {
        self.edges.iter().fold(0.0, |m, e| m.max(e.w))
    }

    /// Weight ratio `w_max / w_min`.
    pub fn alpha_weight(&self) -> f64 {
        self.w_max() / self.w_min()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let edges = self.edges.iter().map(|e| Edge { w: e.w * c, ..*e }).collect();
        Self { n: self.n, edges }
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.u as usize] += e.w;
            d[e.v as usize] += e.w;
        }
        d
    }

    pub fn laplacian_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for e in &self.edges {
            let (u, v) = (e.u as usize, e.v as usize);
            let t = e.w * (x[u] - x[v]);
            y[u] += t;
            y[v] -= t;
        }
        y
    }

    /// `x^T L x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let t = x[e.u as usize] - x[e.v as usize];
                e.w * t * t
            })
            .sum()
    }

    pub fn components(&self) -> Components {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.u as usize, e.v as usize);
        }
        Components::from_union_find(&mut uf)
    }

    pub fn is_connected(&self) -> bool {
        self.components().count <= 1
    }

    /// Errors naming two vertices in different components, if any.
    pub fn require_connected(&self) -> Result<()> {
        self.components().require_connected()
    }

    pub fn laplacian_csr(&self) -> LaplacianCsr {
        LaplacianCsr::new(self)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.edges {
            writeln!(w, "{}\t{}\t{:?}", e.u, e.v, e.w)?;
        }
        Ok(())
    }

    /// Reads `u\tv\tw` lines. `n` is one more than the largest index unless given.
    pub fn read_tsv<R: Read>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut triples = Vec::new();
        let mut max_idx = 0usize;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let bad = |m: String| Error::Parse(format!("line {}: {m}", lineno + 1));
            if parts.len() != 3 {
                return Err(bad(format!("expected 3 fields, got {}", parts.len())));
            }
            let u: usize = parts[0].parse().map_err(|e| bad(format!("{e}")))?;
            let v: usize = parts[1].parse().map_err(|e| bad(format!("{e}")))?;
            let w: f64 = parts[2].parse().map_err(|e| bad(format!("{e}")))?;
            max_idx = max_idx.max(u).max(v);
            triples.push(Edge::new(u, v, w));
        }
        let n = n.unwrap_or(if triples.is_empty() { 0 } else { max_idx + 1 });
        Self::new(n, triples)
    }
}

/// Connected-component labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub label: Vec<usize>,
    pub count: usize,
}

impl Components {
    fn from_union_find(uf: &mut UnionFind) -> Self {
        let n = uf.parent.len();
        let mut label = vec![usize::MAX; n];
        let mut root_label = HashMap::new();
        for (i, slot) in label.iter_mut().enumerate() {
            let r = uf.find(i);
            let next = root_label.len();
            *slot = *root_label.entry(r).or_insert(next);
        }
        Self { label, count: root_label.len() }
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.count <= 1 {
            return Ok(());
        }
        let v = self.label.iter().position(|&c| c != self.label[0]).unwrap();
        Err(Error::Disconnected {
            u: 0,
            v,
            comp_u: self.label[0],
            comp_v: self.label[v],
        })
    }

    /// Subtracts the per-component mean.
    pub fn project(&self, x: &mut [f64]) {
        if self.count == 1 {
            crate::linalg::project_out_ones(x);
            return;
        }
        let mut sum = vec![0.0; self.count];
        let mut cnt = vec![0usize; self.count];
        for (i, &c) in self.label.iter().enumerate() {
            sum[c] += x[i];
            cnt[c] += 1;
        }
        for (i, &c) in self.label.iter().enumerate() {
            x[i] -= sum[c] / cnt[c] as f64;
        }
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Graph Laplacian in compressed sparse row form, off-diagonal entries only.
#[derive(Debug, Clone)]
pub struct LaplacianCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    weight: Vec<f64>,
    degree: Vec<f64>,
    components: Components,
}

impl LaplacianCsr {
    pub fn new(g: &WeightedEdgeList) -> Self {
        let n = g.n();
        let mut count = vec![0usize; n + 1];
        for e in g.edges() {
            count[e.u as usize + 1] += 1;
            count[e.v as usize + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let row_ptr = count.clone();
        let mut fill = count;
        let m = row_ptr[n];
        let mut col = vec![0u32; m];
        let mut weight = vec![0.0; m];
        for e in g.edges() {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                let slot = fill[a as usize];
                col[slot] = b;
                weight[slot] = e.w;
                fill[a as usize] += 1;
            }
        }
        Self {
            n,
            row_ptr,
            col,
            weight,
            degree: g.degrees(),
            components: g.components(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut s = self.degree[i] * x[i];
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s -= self.weight[k] * x[self.col[k] as usize];
                }
                s
            })
            .collect()
    }

    /// Solves `L x = b` on each component with Jacobi-preconditioned CG.
    /// `b` is projected per component first and `x` has zero mean per component.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        crate::error::check_len(self.n, b.len())?;
        let inv_diag: Vec<f64> = self
            .degree
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
            .collect();
        let out = pcg(
            |v| self.apply(v),
            |r| r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect(),
            |v| self.components.project(v),
            b,
            PcgOptions { tol, max_iter: 20 * self.n + 1000 },
        )?;
        Ok(out.x)
    }

    /// Solves many right-hand sides, in parallel.
    pub fn solve_many(&self, rhs: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        rhs.par_iter().map(|b| self.solve(b, tol)).collect()
    }
}
