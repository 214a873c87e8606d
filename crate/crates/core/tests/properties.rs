mod common;

use common::*;
use kgraph::fgt::fgt_transform;
use kgraph::geometry::build_wspd;
use kgraph::matvec::{power_adjacency_apply, poly_features, woodbury_lap_solve};
use kgraph::oracle::{dense_adjacency_apply, dense_laplacian_apply, exact_reff, kernel_graph, Pseudoinverse};
use kgraph::solver::{multiply_given_solver, SolveMode};
use kgraph::{KernelSpec, PointSet, WeightedEdgeList};
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.1f64..4.0).prop_map(|delta| KernelSpec::Gaussian { delta }),
        (0u32..4).prop_map(|q| KernelSpec::PowerPos { q }),
        (0.5f64..3.0).prop_map(|q| KernelSpec::PowerNeg { q }),
        Just(KernelSpec::RationalInv),
        (0.5f64..8.0).prop_map(|cutoff| KernelSpec::PiecewiseExp { cutoff }),
        (0.1f64..2.0).prop_map(|theta| KernelSpec::Threshold { theta }),
    ]
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn laplacian_annihilates_ones(k in kernel_strategy(), n in 2usize..40, d in 1usize..5, seed in any::<u64>()) {
        let p = uniform_points(n, d, 0.0, 1.0, seed);
        let l = dense_laplacian_apply(&p, &k, &vec![1.0; n]).unwrap();
        let g = kernel_graph(&p, &k).unwrap();
        let w_max = if g.is_empty() { 0.0 } else { g.w_max() };
        prop_assert!(max_abs(&l) <= 1e-12 * n as f64 * w_max.max(1.0));
    }

    #[test]
    fn adjacency_is_symmetric(k in kernel_strategy(), n in 2usize..30, seed in any::<u64>(), i in 0usize..30, j in 0usize..30) {
        let (i, j) = (i % n, j % n);
        let p = uniform_points(n, 3, -1.0, 1.0, seed);
        let e = |t: usize| { let mut v = vec![0.0; n]; v[t] = 1.0; v };
        let ai = dense_adjacency_apply(&p, &k, &e(i)).unwrap();
        let aj = dense_adjacency_apply(&p, &k, &e(j)).unwrap();
        prop_assert_eq!(ai[j], aj[i]);
    }

    #[test]
    fn resistance_triangle_inequality(n in 4usize..30, seed in any::<u64>(), a in 0usize..30, b in 0usize..30, c in 0usize..30) {
        let g = random_geometric_graph(n, 0.6, seed);
        prop_assume!(g.is_connected());
        let (a, b, c) = (a % n, b % n, c % n);
        let r = |u, v| if u == v { 0.0 } else { exact_reff(&g, u, v).unwrap() };
        prop_assert!(r(a, c) <= r(a, b) + r(b, c) + 1e-9 * (1.0 + r(a, c)));
    }

    #[test]
    fn laplacian_norm_conversions(n in 3usize..25, seed in any::<u64>()) {
        let g = random_geometric_graph(n, 0.7, seed);
        prop_assume!(g.is_connected());
        let x = random_vector_perp(n, seed ^ 1);
        let xi = max_abs(&x);
        let q = l_norm(&g, &x).powi(2);
        let (w_min, w_max) = (g.w_min(), g.w_max());
        let alpha = w_max / w_min;
        let nf = n as f64;
        prop_assert!(q >= w_min / (2.0 * nf.powi(4) * alpha * alpha) * xi * xi * (1.0 - 1e-9));
        prop_assert!(q <= nf * nf * w_max * xi * xi * (1.0 + 1e-9));
    }

    #[test]
    fn power_kernels_match_dense(q in 0u32..5, d in 1usize..5, n in 2usize..60, seed in any::<u64>()) {
        let p = uniform_points(n, d, -1.0, 1.0, seed);
        let y = random_vector(n, seed ^ 2);
        let fast = power_adjacency_apply(&p, q, &y).unwrap();
        let slow = naive_adjacency(&p, |z| z.powi(q as i32), &y);
        prop_assert!(max_abs_diff(&fast, &slow) <= 1e-9 * max_abs(&slow).max(1e-300));
        let f = poly_features(&p, q).unwrap();
        let r = if q == 0 { 1 } else { binom((2 * d + 2 * q as usize - 1) as u64, 2 * q as u64) as usize };
        prop_assert_eq!(f.rank(), r);
    }

    #[test]
    fn woodbury_solution_is_centred(n in 10usize..60, seed in any::<u64>()) {
        let p = uniform_points(n, 2, -1.0, 1.0, seed);
        let g = kernel_graph(&p, &KernelSpec::PowerPos { q: 2 }).unwrap();
        prop_assume!(g.is_connected());
        let f = poly_features(&p, 2).unwrap();
        let b = random_vector_perp(n, seed ^ 3);
        let x = woodbury_lap_solve(&f, &g.degrees(), &b).unwrap();
        prop_assert!(x.iter().sum::<f64>().abs() <= 1e-9 * max_abs(&x) * n as f64);
        prop_assert!(max_abs_diff(&g.laplacian_apply(&x), &b) <= 1e-7 * g.w_max() * max_abs(&x));
    }

    #[test]
    fn fgt_is_linear_in_weights(n in 20usize..200, seed in any::<u64>(), delta in 0.05f64..2.0) {
        let eps = 1e-6;
        let p = uniform_points(n, 2, 0.0, 1.0, seed);
        let q1: Vec<f64> = random_vector(n, seed ^ 4).iter().map(|v| v / n as f64).collect();
        let q2: Vec<f64> = random_vector(n, seed ^ 5).iter().map(|v| v / n as f64).collect();
        let sum: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| a + b).collect();
        let a = fgt_transform(&p, &p, &q1, delta, eps).unwrap();
        let b = fgt_transform(&p, &p, &q2, delta, eps).unwrap();
        let c = fgt_transform(&p, &p, &sum, delta, eps).unwrap();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert!(max_abs_diff(&ab, &c) <= 2.0 * eps);
    }

    #[test]
    fn wspd_covers_each_pair_once(n in 2usize..120, d in 1usize..4, seed in any::<u64>()) {
        let p = uniform_points(n, d, 0.0, 1.0, seed);
        let w = build_wspd(&p, 0.5).unwrap();
        let mut seen = vec![0u8; n * n];
        for i in 0..w.len() {
            let (a, b) = w.sides(i);
            for &u in a {
                for &v in b {
                    seen[u.min(v) * n + u.max(v)] += 1;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(seen[i * n + j], 1);
            }
        }
    }

    #[test]
    fn multiplier_from_exact_solver(n in 5usize..40, seed in any::<u64>()) {
        let p = uniform_points(n, 3, 0.0, 1.0, seed);
        let g = kernel_graph(&p, &KernelSpec::Gaussian { delta: 0.5 }).unwrap();
        let pinv = Pseudoinverse::new(&g).unwrap();
        let x = random_vector(n, seed ^ 6);
        let eps = 1e-6;
        let out = multiply_given_solver(&pinv, &g, &x, eps, SolveMode::Practical).unwrap();
        let exact = g.laplacian_apply(&x);
        prop_assert!(max_abs_diff(&out.b, &exact) <= eps * g.w_min() * max_abs(&x));
    }

    #[test]
    fn kernel_spec_round_trips(k in kernel_strategy()) {
        let back: KernelSpec = k.to_string().parse().unwrap();
        prop_assert_eq!(back, k);
    }

    #[test]
    fn io_round_trips(n in 1usize..30, d in 1usize..5, seed in any::<u64>()) {
        let p = gaussian_points(n, d, 3.0, seed);
        let mut buf = Vec::new();
        p.write_gkpt(&mut buf).unwrap();
        prop_assert_eq!(&PointSet::read_gkpt(&buf[..]).unwrap(), &p);
        buf.clear();
        p.write_csv(&mut buf).unwrap();
        prop_assert_eq!(&PointSet::read_csv(&buf[..]).unwrap(), &p);
        let g = random_geometric_graph(n.max(2), 0.5, seed);
        buf.clear();
        g.write_tsv(&mut buf).unwrap();
        let back = WeightedEdgeList::read_tsv(&buf[..], Some(g.n())).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
    }
}
