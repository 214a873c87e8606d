#![allow(dead_code)]

use kgraph::{KernelSpec, PointSet, WeightedEdgeList};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_points(n: usize, d: usize, lo: f64, hi: f64, seed: u64) -> PointSet {
    let mut r = rng(seed);
    PointSet::new(n, d, (0..n * d).map(|_| r.random_range(lo..hi)).collect()).unwrap()
}

pub fn gaussian_points(n: usize, d: usize, sigma: f64, seed: u64) -> PointSet {
    let mut r = rng(seed);
    let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
    PointSet::new(n, d, (0..n * d).map(|_| r.sample(normal)).collect()).unwrap()
}

pub fn unit_vectors(n: usize, d: usize, seed: u64) -> PointSet {
    let mut r = rng(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let v: Vec<f64> = (0..d).map(|_| r.sample(normal)).collect();
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        coords.extend(v.iter().map(|x| x / s));
    }
    PointSet::new(n, d, coords).unwrap()
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn random_vector_perp(n: usize, seed: u64) -> Vec<f64> {
    let mut v = random_vector(n, seed);
    let m = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= m);
    v
}

/// Reference adjacency product written independently of the library: explicit
/// coordinates loop and a caller-supplied scalar kernel.
pub fn naive_adjacency(p: &PointSet, f: impl Fn(f64) -> f64, y: &[f64]) -> Vec<f64> {
    let n = p.n();
    let d = p.d();
    let c = p.coords();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut z = 0.0;
            for a in 0..d {
                let t = c[i * d + a] - c[j * d + a];
                z += t * t;
            }
            out[i] += f(z) * y[j];
        }
    }
    out
}

pub fn naive_laplacian(p: &PointSet, f: impl Fn(f64) -> f64, y: &[f64]) -> Vec<f64> {
    let ones = vec![1.0; y.len()];
    let deg = naive_adjacency(p, &f, &ones);
    let ay = naive_adjacency(p, &f, y);
    deg.iter().zip(&ay).zip(y).map(|((g, a), yi)| g * yi - a).collect()
}

pub fn kernel_fn(k: KernelSpec) -> impl Fn(f64) -> f64 {
    move |z| k.value(z)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Random geometric graph, connected by adding a path through the points.
pub fn random_geometric_graph(n: usize, radius: f64, seed: u64) -> WeightedEdgeList {
    let p = uniform_points(n, 2, 0.0, 1.0, seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if p.sq_dist(i, j) <= radius * radius || j == i + 1 {
                edges.push((i, j, 1.0));
            }
        }
    }
    WeightedEdgeList::from_merged(n, edges).unwrap()
}

pub fn l_norm(g: &WeightedEdgeList, x: &[f64]) -> f64 {
    g.quadratic_form(x).max(0.0).sqrt()
}
