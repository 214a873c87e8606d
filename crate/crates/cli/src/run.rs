//! Subcommand bodies.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use kgraph::fgt::FgtAdjacency;
use kgraph::innerprod::{ip_sparsify, ip_weighted_graph};
use kgraph::kernel::{log_grid, lipschitz_order_on};
use kgraph::linalg::{max_abs_diff, norm_inf};
use kgraph::linop::{AdjacencyLaplacian, DenseAdjacency, DenseLaplacian};
use kgraph::matvec::{lowrank_adjacency_apply, poly_features, LowRankFactor, TaylorOperator};
use kgraph::oracle::{kernel_graph, lap_norm, spectral_check, Pseudoinverse};
use kgraph::points::{read_vector, write_vector};
use kgraph::rng::stream_rng;
use kgraph::solver::{klap_solve_with, KlapOptions, SolveMode};
use kgraph::sparsify::{positive_sq_dist_range, sparsify_high_dim, sparsify_low_dim};
use kgraph::{ApproxReport, Error, KernelSpec, LinearOperator, OperatorKind, PointSet, Result, WeightedEdgeList};
use rand::Rng;
use serde::Serialize;

use crate::gen::{generate, GenParams};
use crate::{Engine, GenArgs, MatvecArgs, Method, Op, SolveArgs, SparsifyArgs, VerifyArgs, VerifyTask};

/// Largest `n` for the dense oracle checks.
pub const DESK_CAP: usize = 3000;

pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn parse_kernel(s: &str) -> Result<KernelSpec> {
    s.parse()
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{flag} is required here")))
}

fn write_vector_file(v: &[f64], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector(v, &mut w)?;
    w.flush()?;
    Ok(())
}

fn read_vector_file(path: &Path) -> Result<Vec<f64>> {
    read_vector(BufReader::new(File::open(path)?))
}

/// `ones`, `random` or a vector file.
fn input_vector(spec: &str, n: usize, seed: Option<u64>) -> Result<Vec<f64>> {
    let y = match spec {
        "ones" => vec![1.0; n],
        "random" => {
            let seed = require(seed, "seed")?;
            let mut rng = stream_rng(seed, 0x79);
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
        path => read_vector_file(Path::new(path))?,
    };
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    Ok(y)
}

fn base_report(task: &str, p: &PointSet, kernel: Option<&KernelSpec>) -> ApproxReport {
    let mut r = ApproxReport::new(task, p.n());
    r.d = Some(p.d());
    r.kernel = kernel.map(|k| k.to_string());
    r
}

pub fn gen(a: GenArgs) -> Result<()> {
    let t = Instant::now();
    let params = GenParams {
        shape: a.shape,
        n: a.n,
        d: a.d,
        side: a.side,
        clusters: a.clusters,
        spread: a.spread,
        seed: a.seed,
    };
    let p = generate(&params)?;
    p.save(&a.out)?;
    let mut r = base_report("gen", &p, None);
    r.seed = Some(a.seed);
    r.runtime_ms = elapsed_ms(t);
    write_json(&r, a.report.as_deref())
}

/// `left * right^T` minus its diagonal.
struct LowRankAdjacency {
    factor: LowRankFactor,
    diag: Vec<f64>,
}

impl LinearOperator for LowRankAdjacency {
    fn dim(&self) -> usize {
        self.factor.n()
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::LowRank
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        lowrank_adjacency_apply(&self.factor, &self.diag, y)
    }
}

type EngineOp<'a> = (Box<dyn LinearOperator + 'a>, f64, Vec<(&'static str, f64)>);

/// Adjacency operator for an engine, with its per-entry error bound relative to `||y||_inf`
/// and any sizes worth reporting.
fn adjacency<'a>(engine: Engine, p: &'a PointSet, k: &KernelSpec, eps: f64) -> Result<EngineOp<'a>> {
    Ok(match engine {
        Engine::Dense => (Box::new(DenseAdjacency { points: p, kernel: *k }), 0.0, vec![]),
        Engine::Lowrank => {
            let KernelSpec::PowerPos { q } = *k else {
                return Err(Error::InvalidInput(format!("lowrank engine needs a power:q kernel, got {k}")));
            };
            let factor = poly_features(p, q)?;
            let rank = factor.rank() as f64;
            let diag = factor.diagonal();
            (Box::new(LowRankAdjacency { factor, diag }), 0.0, vec![("rank", rank)])
        }
        Engine::Taylor => {
            let t = TaylorOperator::new(p, k, eps)?;
            let extra = vec![("rank", t.factor().rank() as f64), ("degree", t.degree() as f64)];
            (Box::new(t), eps, extra)
        }
        Engine::Fgt => {
            let KernelSpec::Gaussian { delta } = *k else {
                return Err(Error::InvalidInput(format!("fgt engine needs a gaussian kernel, got {k}")));
            };
            (Box::new(FgtAdjacency { points: p, delta, eps }), eps, vec![])
        }
    })
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Dense => "dense",
        Engine::Lowrank => "lowrank",
        Engine::Taylor => "taylor",
        Engine::Fgt => "fgt",
    }
}

pub fn matvec(a: MatvecArgs) -> Result<()> {
    let t = Instant::now();
    let p = PointSet::load(&a.input)?;
    let k = parse_kernel(&a.kernel)?;
    let y = input_vector(&a.y, p.n(), a.seed)?;
    let (adj, rel_bound, extra) = adjacency(a.engine, &p, &k, a.eps)?;
    let (out, bound) = match a.op {
        Op::Adjacency => (adj.apply(&y)?, rel_bound),
        // Degrees come from a second product, doubling the error.
        Op::Laplacian => (AdjacencyLaplacian::new(adj)?.apply(&y)?, 2.0 * rel_bound),
    };
    write_vector_file(&out, &a.out)?;
    let op = match a.op {
        Op::Adjacency => "adjacency",
        Op::Laplacian => "laplacian",
    };
    let mut r = base_report(&format!("matvec-{}", engine_name(a.engine)), &p, Some(&k));
    r.mode = Some(op.into());
    r.seed = a.seed;
    if matches!(a.engine, Engine::Taylor | Engine::Fgt) {
        r.eps = Some(a.eps);
    }
    r.error_bound = Some(bound * norm_inf(&y));
    for (key, v) in extra {
        r.extra.insert(key.into(), v);
    }
    r.runtime_ms = elapsed_ms(t);
    write_json(&r, a.report.as_deref())
}

/// Lipschitz order for the sparsifiers: `c = 2` order measured on the instance's
/// distance range, or the kernel's global order for `lowdim`.
fn default_order(p: &PointSet, k: &KernelSpec, method: Method) -> Result<f64> {
    match method {
        Method::Lowdim => k.global_lipschitz_order(2.0).map(|l| l.max(1.0)).ok_or_else(|| {
            Error::InvalidInput(format!("{k} has no global Lipschitz order; pass --l"))
        }),
        _ => {
            let (lo, hi) = positive_sq_dist_range(p)
                .ok_or_else(|| Error::InvalidInput("all points coincide".into()))?;
            let l = lipschitz_order_on(k, 2.0, &log_grid(lo, hi, 64));
            if l.is_finite() {
                Ok(l.max(1e-3))
            } else {
                Err(Error::InvalidInput(format!("{k} is not multiplicatively Lipschitz on the instance")))
            }
        }
    }
}

fn fill_check(r: &mut ApproxReport, g: &WeightedEdgeList, h: &WeightedEdgeList, eps: f64) -> Result<bool> {
    let c = spectral_check(g, h, eps)?;
    r.eig_min = Some(c.eig_min);
    r.eig_max = Some(c.eig_max);
    r.observed_error = Some((1.0 - c.eig_min).max(c.eig_max - 1.0));
    r.extra.insert("pass".into(), f64::from(u8::from(c.pass)));
    Ok(c.pass)
}

pub fn sparsify(a: SparsifyArgs) -> Result<()> {
    let t = Instant::now();
    let p = PointSet::load(&a.input)?;
    let n = p.n();
    let (graph, kernel, extra): (WeightedEdgeList, Option<KernelSpec>, Vec<(&str, f64)>) = match a.method {
        Method::Innerprod => {
            let s = ip_sparsify(&p, a.eps, a.delta, a.seed)?;
            let extra = vec![
                ("cover_entries", s.stats.cover.entries as f64),
                ("leverage_total", s.stats.t),
                ("union_edges", s.stats.union_edges as f64),
                ("exact_shortcut", f64::from(u8::from(s.stats.exact_shortcut))),
                ("resparsified", f64::from(u8::from(s.stats.resparsified))),
            ];
            (s.graph, None, extra)
        }
        Method::Highdim | Method::Lowdim => {
            let k = parse_kernel(&require(a.kernel.clone(), "kernel")?)?;
            let l = match a.l {
                Some(l) => l,
                None => default_order(&p, &k, a.method)?,
            };
            let s = if a.method == Method::Highdim {
                sparsify_high_dim(&p, &k, l, a.proj_dim, a.eps, a.seed)?
            } else {
                sparsify_low_dim(&p, &k, l, a.eps, a.seed)?
            };
            let mut extra = vec![
                ("l", l),
                ("pairs", s.stats.pairs as f64),
                ("union_edges", s.stats.union_edges as f64),
                ("resparsified", f64::from(u8::from(s.stats.resparsified))),
            ];
            if let Some(dim) = s.stats.proj_dim {
                extra.push(("proj_dim", dim as f64));
            }
            (s.graph, Some(k), extra)
        }
    };
    let mut w = BufWriter::new(File::create(&a.out)?);
    graph.write_tsv(&mut w)?;
    w.flush()?;
    let task = match a.method {
        Method::Highdim => "sparsify-highdim",
        Method::Lowdim => "sparsify-lowdim",
        Method::Innerprod => "sparsify-innerprod",
    };
    let mut r = base_report(task, &p, kernel.as_ref());
    r.eps = Some(a.eps);
    r.delta = Some(a.delta);
    r.seed = Some(a.seed);
    r.edges_before = Some(n * n.saturating_sub(1) / 2);
    r.edges_after = Some(graph.len());
    r.error_bound = Some(a.eps);
    for (key, v) in extra {
        r.extra.insert(key.into(), v);
    }
    r.runtime_ms = elapsed_ms(t);
    if a.check {
        if n > DESK_CAP {
            return Err(Error::PlanTooLarge(format!("--check needs n <= {DESK_CAP}, got {n}")));
        }
        let g = match &kernel {
            Some(k) => kernel_graph(&p, k)?,
            None => ip_weighted_graph(&p)?,
        };
        r.edges_before = Some(g.len());
        fill_check(&mut r, &g, &graph, a.eps)?;
    }
    write_json(&r, a.report.as_deref())
}

pub fn solve(a: SolveArgs) -> Result<()> {
    let t = Instant::now();
    let p = PointSet::load(&a.input)?;
    let k = parse_kernel(&a.kernel)?;
    let mode: SolveMode = a.mode.parse()?;
    let b = read_vector_file(&a.b)?;
    let opts = KlapOptions { mode, ..KlapOptions::default() };
    let out = klap_solve_with(&p, &k, &b, a.delta, a.seed, &opts)?;
    write_vector_file(&out.x, &a.out)?;
    if let Some(path) = &a.solve_report {
        write_json(&out.report, Some(path))?;
    }
    let mut r = base_report("solve", &p, Some(&k));
    r.delta = Some(a.delta);
    r.eps = Some(out.report.eps_h);
    r.seed = Some(a.seed);
    r.mode = Some(a.mode.clone());
    r.edges_before = Some(p.n() * (p.n() - 1) / 2);
    r.edges_after = out.report.sparsifier_edges;
    r.error_bound = Some(a.delta);
    r.observed_error = Some(out.report.rel_error_estimate);
    r.extra.insert("iterations".into(), out.report.iterations as f64);
    r.extra.insert("residual_inf".into(), out.report.residual_inf);
    r.runtime_ms = elapsed_ms(t);
    write_json(&r, a.report.as_deref())
}

fn load_points(input: &Option<PathBuf>) -> Result<PointSet> {
    let p = PointSet::load(require(input.as_ref(), "in")?)?;
    if p.n() > DESK_CAP {
        return Err(Error::PlanTooLarge(format!("oracle checks need n <= {DESK_CAP}, got {}", p.n())));
    }
    Ok(p)
}

/// `dense`, `innerprod` or a graph file.
fn graph_arg(spec: &str, a: &VerifyArgs, n: Option<usize>) -> Result<WeightedEdgeList> {
    match spec {
        "dense" => {
            let p = load_points(&a.input)?;
            kernel_graph(&p, &parse_kernel(&require(a.kernel.clone(), "kernel")?)?)
        }
        "innerprod" => ip_weighted_graph(&load_points(&a.input)?),
        path => WeightedEdgeList::read_tsv(BufReader::new(File::open(path)?), n),
    }
}

/// A number from a previously written report.
fn claimed_field(path: &Path, key: &str) -> Result<f64> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    v.get(key)
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("{}: no numeric {key:?}", path.display())))
}

pub fn verify(a: VerifyArgs) -> Result<bool> {
    let t = Instant::now();
    let (mut r, pass, line) = match a.task {
        VerifyTask::Spectral => {
            let n = a.input.as_ref().map(PointSet::load).transpose()?.map(|p| p.n());
            let g = graph_arg(&require(a.g.clone(), "g")?, &a, n)?;
            let h = graph_arg(&require(a.h.clone(), "h")?, &a, Some(g.n()))?;
            if g.n() > DESK_CAP {
                return Err(Error::PlanTooLarge(format!("spectral check needs n <= {DESK_CAP}, got {}", g.n())));
            }
            let mut r = ApproxReport::new("verify-spectral", g.n());
            r.kernel = a.kernel.clone();
            r.eps = Some(a.eps);
            r.edges_before = Some(g.len());
            r.edges_after = Some(h.len());
            r.error_bound = Some(a.eps);
            let pass = fill_check(&mut r, &g, &h, a.eps)?;
            let line = format!(
                "spectral: eigenvalues in [{:.6}, {:.6}], bound [{}, {}]",
                r.eig_min.unwrap(),
                r.eig_max.unwrap(),
                1.0 - a.eps,
                1.0 + a.eps
            );
            (r, pass, line)
        }
        VerifyTask::Matvec => {
            let p = load_points(&a.input)?;
            let k = parse_kernel(&require(a.kernel.clone(), "kernel")?)?;
            let y = input_vector(&a.y, p.n(), a.seed)?;
            let x = read_vector_file(require(a.x.as_deref(), "x")?)?;
            if x.len() != p.n() {
                return Err(Error::DimensionMismatch { expected: p.n(), got: x.len() });
            }
            let exact = match a.op {
                Op::Adjacency => DenseAdjacency { points: &p, kernel: k }.apply(&y)?,
                Op::Laplacian => DenseLaplacian { points: &p, kernel: k }.apply(&y)?,
            };
            let bound = match (a.tol, &a.claimed) {
                (Some(t), _) => t,
                (None, Some(path)) => claimed_field(path, "error_bound")?,
                (None, None) => 0.0,
            };
            let observed = max_abs_diff(&x, &exact);
            // Round-off allowance for the exact engines.
            let slack = 1e-9 * norm_inf(&exact).max(f64::MIN_POSITIVE);
            let mut r = base_report("verify-matvec", &p, Some(&k));
            r.error_bound = Some(bound);
            r.observed_error = Some(observed);
            let pass = observed <= bound + slack;
            (r, pass, format!("matvec: max error {observed:e}, bound {bound:e}"))
        }
        VerifyTask::Solve => {
            let p = load_points(&a.input)?;
            let k = parse_kernel(&require(a.kernel.clone(), "kernel")?)?;
            let b = read_vector_file(require(a.b.as_deref(), "b")?)?;
            let x = read_vector_file(require(a.x.as_deref(), "x")?)?;
            for v in [&b, &x] {
                if v.len() != p.n() {
                    return Err(Error::DimensionMismatch { expected: p.n(), got: v.len() });
                }
            }
            let delta = match (a.delta, &a.claimed) {
                (Some(d), _) => d,
                (None, Some(path)) => claimed_field(path, "error_bound")?,
                (None, None) => return Err(Error::InvalidInput("--delta or --claimed is required".into())),
            };
            let g = kernel_graph(&p, &k)?;
            let exact = Pseudoinverse::new(&g)?.apply(&b);
            let diff: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
            let denom = lap_norm(&g, &exact);
            let observed = if denom > 0.0 { lap_norm(&g, &diff) / denom } else { lap_norm(&g, &diff) };
            let mut r = base_report("verify-solve", &p, Some(&k));
            r.delta = Some(delta);
            r.error_bound = Some(delta);
            r.observed_error = Some(observed);
            let pass = observed <= delta;
            (r, pass, format!("solve: relative L-norm error {observed:e}, bound {delta:e}"))
        }
    };
    r.extra.insert("pass".into(), f64::from(u8::from(pass)));
    r.runtime_ms = elapsed_ms(t);
    write_json(&r, a.report.as_deref())?;
    eprintln!("{} {line}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}
