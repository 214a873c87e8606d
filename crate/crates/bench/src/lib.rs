//! Seeded fixtures shared by the benchmarks.

use kgraph::rng::stream_rng;
use kgraph::PointSet;
use rand::Rng;

/// `n` points uniform in `[0, 1]^d`.
pub fn uniform_points(n: usize, d: usize, seed: u64) -> PointSet {
    let mut rng = stream_rng(seed, 0xb0);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointSet::new(n, d, coords).expect("finite coordinates")
}

/// `n` vectors uniform in `[-1, 1]^d`, rescaled to unit length.
pub fn unit_vectors(n: usize, d: usize, seed: u64) -> PointSet {
    let mut rng = stream_rng(seed, 0xb1);
    let mut coords = Vec::with_capacity(n * d);
    while coords.len() < n * d {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            coords.extend(v.iter().map(|x| x / norm));
        }
    }
    PointSet::new(n, d, coords).expect("finite coordinates")
}

/// Entries uniform in `[-1, 1]`.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0xb2);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
