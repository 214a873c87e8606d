mod common;

use kgraph::geometry::{build_wspd, jl_dim_bound, jl_project};

fn dist(p: &kgraph::PointSet, i: usize, j: usize) -> f64 {
    p.point(i)
        .iter()
        .zip(p.point(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn jl_preserves_pairwise_distances() {
    let (n, d) = (500, 50);
    let k = jl_dim_bound(n, 0.5);
    assert_eq!(k, (24.0 * 500f64.ln() / 0.25).ceil() as usize);
    let p = common::gaussian_points(n, d, 1.0, 11);
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let q = jl_project(&p, k, seed).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let a = dist(&p, i, j).powi(2);
                let b = dist(&q, i, j).powi(2);
                worst = worst.max((b / a - 1.0).abs());
            }
        }
    }
    assert!(worst <= 0.5, "worst distortion {worst}");
}

#[test]
fn wspd_exhaustive_n1000_d3() {
    let n = 1000;
    let p = common::uniform_points(n, 3, 0.0, 1.0, 5);
    let w = build_wspd(&p, 0.5).unwrap();
    let mut seen = vec![0u8; n * n];
    for i in 0..w.len() {
        let (a, b) = w.sides(i);
        let diam = |s: &[usize]| {
            let mut m = 0.0f64;
            for (x, &u) in s.iter().enumerate() {
                for &v in &s[x + 1..] {
                    m = m.max(dist(&p, u, v));
                }
            }
            m
        };
        let mut gap = f64::INFINITY;
        let mut far = 0.0f64;
        for &u in a {
            for &v in b {
                let (lo, hi) = (u.min(v), u.max(v));
                seen[lo * n + hi] += 1;
                let d = dist(&p, u, v);
                gap = gap.min(d);
                far = far.max(d);
            }
        }
        assert!(diam(a).max(diam(b)) <= 0.5 * gap + 1e-12, "pair {i} not separated");
        let pr = w.pairs[i];
        assert!(gap * gap >= pr.sq_dist_lo - 1e-12 && far * far <= pr.sq_dist_hi + 1e-12);
    }
    for i in 0..n {
        for j in i + 1..n {
            assert_eq!(seen[i * n + j], 1, "pair ({i},{j}) covered {} times", seen[i * n + j]);
        }
    }
    assert!(w.len() <= 40 * n, "{} pairs", w.len());
    eprintln!("wspd n={n} d=3: {} pairs ({:.2} n)", w.len(), w.len() as f64 / n as f64);
}

#[test]
fn wspd_coverage_with_duplicates() {
    let mut rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 5) as f64, (i / 10) as f64]).collect();
    rows.push(vec![100.0, 0.0]);
    let p = kgraph::PointSet::from_rows(&rows).unwrap();
    let w = build_wspd(&p, 0.9).unwrap();
    assert_eq!(w.covered_pairs(), 31 * 30 / 2);
}
