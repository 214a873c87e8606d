mod common;

use kgraph::oracle::{grounded_reff, kernel_graph, spectral_check, Pseudoinverse};
use kgraph::sparsify::*;
use kgraph::{Edge, KernelSpec, WeightedEdgeList};

#[test]
fn oversample_k20_with_slack() {
    let g = WeightedEdgeList::complete(20, 1.0);
    // Every edge of K_n has leverage 2/n.
    let p = LeverageOverestimates::uniform(g.len(), 0.1 * 1.1).unwrap();
    let passes = (0..20)
        .filter(|&seed| {
            let h = oversample(&g, &p, 0.5, 0.1, seed).unwrap();
            spectral_check(&g, &h, 0.5).unwrap().pass
        })
        .count();
    assert!(passes >= 18, "{passes}/20");
}

#[test]
fn oversample_preserves_total_weight_in_expectation() {
    let g = common::random_geometric_graph(60, 0.3, 2);
    let pinv = Pseudoinverse::new(&g).unwrap();
    let lev: Vec<f64> = g.edges().iter().map(|e| e.w * pinv.reff(e.u as usize, e.v as usize)).collect();
    assert!((lev.iter().sum::<f64>() - 59.0).abs() < 1e-8);
    let p = LeverageOverestimates::new(lev).unwrap();
    let mean: f64 = (0..50)
        .map(|s| oversample(&g, &p, 0.5, 0.1, s).unwrap().total_weight())
        .sum::<f64>()
        / 50.0;
    assert!((mean / g.total_weight() - 1.0).abs() < 0.02);
}

#[test]
fn sketch_path_and_random_graph() {
    let path = WeightedEdgeList::path(3, 1.0);
    let s = reff_sketch_build(&path, 0.5, 4).unwrap();
    let est = s.estimate(0, 2);
    assert!((1.0..=3.0).contains(&est), "{est}");

    let g = common::random_geometric_graph(100, 0.25, 9);
    let eps = 0.5;
    let s = reff_sketch_build(&g, eps, 1).unwrap();
    let pinv = Pseudoinverse::new(&g).unwrap();
    for u in 0..100 {
        for v in u + 1..100 {
            let ratio = s.estimate(u, v) / pinv.reff(u, v);
            assert!((1.0 - eps..=1.0 + eps).contains(&ratio), "({u},{v}) ratio {ratio}");
        }
    }
}

#[test]
fn sketch_requires_connected() {
    let g = WeightedEdgeList::new(3, vec![Edge::new(0, 1, 1.0)]).unwrap();
    assert!(reff_sketch_build(&g, 0.5, 0).is_err());
}

#[test]
fn biclique_overestimates_dominate_leverage() {
    for (k, d, projected) in [
        (KernelSpec::RationalInv, 6, true),
        (KernelSpec::power_neg(2.0).unwrap(), 2, false),
    ] {
        let p = common::uniform_points(200, d, 0.0, 1.0, 13);
        let geo = if projected { kgraph::geometry::jl_project(&p, 3, 1).unwrap() } else { p.clone() };
        let plan = BicliquePlan::new(&p, &geo, projected, &k, 0.5).unwrap();
        let g = kernel_graph(&p, &k).unwrap();
        let pinv = Pseudoinverse::new(&g).unwrap();
        let (mut ok, mut total) = (0usize, 0usize);
        for i in 0..plan.len() {
            let bound = plan.leverage_bound(i);
            let (a, b) = plan.wspd.sides(i);
            for &u in a {
                for &v in b {
                    let lev = k.value(p.sq_dist(u, v)) * pinv.reff(u, v);
                    total += 1;
                    ok += usize::from(bound >= lev * (1.0 - 1e-9));
                }
            }
        }
        assert_eq!(total, 200 * 199 / 2);
        assert_eq!(ok, total, "{k}: {ok}/{total}");
    }
}

#[test]
fn forced_sampling_still_sparsifies() {
    let cfg = SparsifyConfig { c0: 0.1, ..Default::default() };
    let p = common::uniform_points(300, 8, 0.0, 1.0, 3);
    let k = KernelSpec::PowerPos { q: 0 };
    let h = sparsify_high_dim_with(&p, &k, 1.0, None, 0.5, 1, &cfg).unwrap();
    assert!(h.stats.exact_pairs < h.stats.pairs);
    assert!(h.graph.len() < 300 * 299 / 2);
    assert!(spectral_check(&kernel_graph(&p, &k).unwrap(), &h.graph, 0.5).unwrap().pass);

    let p = common::uniform_points(300, 2, 0.0, 1.0, 3);
    let k = KernelSpec::piecewise_exp(8.0).unwrap();
    let h = sparsify_low_dim_with(&p, &k, 8.0, 0.5, 1, &cfg).unwrap();
    assert!(h.stats.exact_pairs < h.stats.pairs);
    assert!(spectral_check(&kernel_graph(&p, &k).unwrap(), &h.graph, 0.5).unwrap().pass);
}

#[test]
fn resparsify_kernel_graph() {
    let p = common::uniform_points(150, 4, 0.0, 1.0, 8);
    let g = kernel_graph(&p, &KernelSpec::RationalInv).unwrap();
    let h = resparsify(&g, 0.5, 2, &SparsifyConfig::default()).unwrap();
    assert!(spectral_check(&g, &h, 0.5).unwrap().pass);
}

#[test]
fn default_run_respects_budget() {
    let p = common::uniform_points(256, 8, 0.0, 1.0, 1);
    let h = sparsify_high_dim(&p, &KernelSpec::RationalInv, 1.0, None, 0.25, 5).unwrap();
    assert!(h.graph.len() <= h.stats.budget);
    assert!(h.graph.len() as f64 <= 8.0 * 256.0 * 256f64.ln() / 0.0625);
}

#[test]
fn low_dim_rejects_large_plans() {
    let p = common::uniform_points(20, 12, 0.0, 1.0, 1);
    let err = sparsify_low_dim(&p, &KernelSpec::RationalInv, 8.0, 0.5, 0).unwrap_err();
    assert!(matches!(err, kgraph::Error::PlanTooLarge(_)));
}

#[test]
fn uniform_subgraph_lower_tail_small() {
    let g = WeightedEdgeList::complete(30, 1.0);
    let exact = grounded_reff(&g, 0, 1).unwrap();
    let kappa = 2.0;
    let trials = 300;
    let low = (0..trials)
        .filter(|&s| {
            let h = uniform_subgraph(&g, 0.3, s).unwrap();
            grounded_reff(&h, 0, 1).unwrap() <= exact / kappa
        })
        .count();
    assert!((low as f64 / trials as f64) <= 1.0 / kappa + 0.05);
}

#[test]
fn grounded_reff_matches_pseudoinverse() {
    let g = common::random_geometric_graph(40, 0.3, 4);
    let pinv = Pseudoinverse::new(&g).unwrap();
    for (u, v) in [(0, 39), (3, 17), (10, 11)] {
        assert!((grounded_reff(&g, u, v).unwrap() - pinv.reff(u, v)).abs() < 1e-9);
    }
    let split = WeightedEdgeList::new(4, vec![Edge::new(0, 1, 1.0), Edge::new(2, 3, 1.0)]).unwrap();
    assert_eq!(grounded_reff(&split, 0, 2).unwrap(), f64::INFINITY);
    assert!((grounded_reff(&split, 2, 3).unwrap() - 1.0).abs() < 1e-12);
}
