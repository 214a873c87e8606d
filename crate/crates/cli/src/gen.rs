//! Synthetic point clouds.

use std::collections::HashSet;

use clap::ValueEnum;
use kgraph::rng::stream_rng;
use kgraph::{Error, PointSet, Result};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    /// Uniform in `[0, side]^d`.
    UniformBox,
    /// Equal-weight Gaussians with unit-cube centres scaled by `side`.
    GaussianMixture,
    /// Uniform on the unit sphere.
    #[value(alias = "sphere")]
    UnitSphere,
    /// Distinct lattice points of the smallest cube holding `2n` of them.
    IntegerGrid,
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub shape: Shape,
    pub n: usize,
    pub d: usize,
    pub side: f64,
    pub clusters: usize,
    pub spread: f64,
    pub seed: u64,
}

pub fn generate(g: &GenParams) -> Result<PointSet> {
    if g.n == 0 || g.d == 0 {
        return Err(Error::InvalidInput(format!("need n, d >= 1, got n = {}, d = {}", g.n, g.d)));
    }
    if !(g.side > 0.0 && g.side.is_finite()) {
        return Err(Error::InvalidInput(format!("side must be positive, got {}", g.side)));
    }
    let (n, d) = (g.n, g.d);
    let mut rng = stream_rng(g.seed, 0x6e);
    let coords = match g.shape {
        Shape::UniformBox => (0..n * d).map(|_| rng.random::<f64>() * g.side).collect(),
        Shape::GaussianMixture => {
            if g.clusters == 0 {
                return Err(Error::InvalidInput("need at least one cluster".into()));
            }
            let centres: Vec<f64> = (0..g.clusters * d).map(|_| rng.random::<f64>() * g.side).collect();
            let mut out = Vec::with_capacity(n * d);
            for _ in 0..n {
                let c = rng.random_range(0..g.clusters);
                for a in 0..d {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    out.push(centres[c * d + a] + g.spread * z);
                }
            }
            out
        }
        Shape::UnitSphere => {
            let mut out = Vec::with_capacity(n * d);
            while out.len() < n * d {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    out.extend(v.iter().map(|x| x / norm));
                }
            }
            out
        }
        Shape::IntegerGrid => {
            let side = ((2 * n) as f64).powf(1.0 / d as f64).ceil().max(2.0) as usize;
            let total = (side as f64).powi(d as i32);
            let mut out = Vec::with_capacity(n * d);
            if total <= 1e7 {
                for cell in index::sample(&mut rng, total as usize, n) {
                    push_cell(&mut out, cell, side, d);
                }
            } else {
                let mut seen = HashSet::new();
                while seen.len() < n {
                    let cell: Vec<usize> = (0..d).map(|_| rng.random_range(0..side)).collect();
                    if seen.insert(cell.clone()) {
                        out.extend(cell.iter().map(|&c| c as f64));
                    }
                }
            }
            out
        }
    };
    PointSet::new(n, d, coords)
}

fn push_cell(out: &mut Vec<f64>, mut cell: usize, side: usize, d: usize) {
    for _ in 0..d {
        out.push((cell % side) as f64);
        cell /= side;
    }
}
