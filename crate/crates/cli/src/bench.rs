//! Runtime sweeps with a log-log slope fit.

use std::time::Instant;

use kgraph::fgt::fgt_transform;
use kgraph::innerprod::ip_sparsify;
use kgraph::linop::DenseAdjacency;
use kgraph::matvec::TaylorOperator;
use kgraph::sparsify::{sparsify_high_dim, sparsify_low_dim};
use kgraph::{ApproxReport, Error, KernelSpec, LinearOperator, Result};
use serde::Serialize;

use crate::gen::{generate, GenParams, Shape};
use crate::run::{parse_kernel, write_json};
use crate::{BenchArgs, BenchTask};

#[derive(Debug, Serialize)]
struct BenchSweep {
    schema: u32,
    task: &'static str,
    d: usize,
    kernel: Option<String>,
    eps: f64,
    seed: u64,
    n: Vec<usize>,
    runtime_ms: Vec<f64>,
    /// Least-squares slope of `ln runtime` against `ln n`.
    slope: f64,
    /// Runtimes strictly increase with `n`.
    monotone: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(1e-9).ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

struct TaskDefaults {
    name: &'static str,
    d: usize,
    kernel: Option<&'static str>,
    eps: f64,
    shape: Shape,
}

fn defaults(task: BenchTask) -> TaskDefaults {
    let (name, d, kernel, eps, shape) = match task {
        BenchTask::SparsifyHighdim => ("sparsify-highdim", 8, Some("rational"), 0.5, Shape::UniformBox),
        BenchTask::SparsifyLowdim => ("sparsify-lowdim", 2, Some("invpower:2"), 0.5, Shape::UniformBox),
        BenchTask::SparsifyInnerprod => ("sparsify-innerprod", 3, None, 0.5, Shape::UnitSphere),
        BenchTask::Fgt => ("fgt", 2, Some("gaussian:1"), 1e-6, Shape::UniformBox),
        BenchTask::MatvecTaylor => ("matvec-taylor", 3, Some("gaussian:1"), 1e-6, Shape::UniformBox),
        BenchTask::MatvecDense => ("matvec-dense", 3, Some("gaussian:1"), 0.0, Shape::UniformBox),
    };
    TaskDefaults { name, d, kernel, eps, shape }
}

fn run_once(task: BenchTask, params: &GenParams, k: Option<&KernelSpec>, eps: f64, seed: u64) -> Result<f64> {
    let p = generate(params)?;
    let need_k = || k.ok_or_else(|| Error::InvalidInput("--kernel is required here".into()));
    let t = Instant::now();
    match task {
        BenchTask::SparsifyHighdim => {
            let k = need_k()?;
            let l = k.global_lipschitz_order(2.0).unwrap_or(1.0);
            sparsify_high_dim(&p, k, l, None, eps, seed)?;
        }
        BenchTask::SparsifyLowdim => {
            let k = need_k()?;
            let l = k
                .global_lipschitz_order(2.0)
                .ok_or_else(|| Error::InvalidInput(format!("{k} has no global Lipschitz order")))?;
            sparsify_low_dim(&p, k, l.max(1.0), eps, seed)?;
        }
        BenchTask::SparsifyInnerprod => {
            ip_sparsify(&p, eps, 0.1, seed)?;
        }
        BenchTask::Fgt => {
            let KernelSpec::Gaussian { delta } = *need_k()? else {
                return Err(Error::InvalidInput("fgt needs a gaussian kernel".into()));
            };
            let q = vec![1.0 / p.n() as f64; p.n()];
            fgt_transform(&p, &p, &q, delta, eps)?;
        }
        BenchTask::MatvecTaylor => {
            TaylorOperator::new(&p, need_k()?, eps)?.apply(&vec![1.0; p.n()])?;
        }
        BenchTask::MatvecDense => {
            DenseAdjacency { points: &p, kernel: *need_k()? }.apply(&vec![1.0; p.n()])?;
        }
    }
    Ok(t.elapsed().as_secs_f64() * 1e3)
}

pub fn bench(a: BenchArgs) -> Result<()> {
    if a.n.len() < 2 || a.n.iter().any(|&n| n < 2) {
        return Err(Error::InvalidInput("need at least two sizes, each >= 2".into()));
    }
    if a.reps == 0 {
        return Err(Error::InvalidInput("--reps must be positive".into()));
    }
    let def = defaults(a.task);
    let d = a.d.unwrap_or(def.d);
    let eps = a.eps.unwrap_or(def.eps);
    let kernel = match (&a.kernel, def.kernel) {
        (Some(s), _) => Some(parse_kernel(s)?),
        (None, Some(s)) => Some(parse_kernel(s)?),
        (None, None) => None,
    };
    let start = Instant::now();
    let mut runtimes = Vec::with_capacity(a.n.len());
    for &n in &a.n {
        let params = GenParams { shape: def.shape, n, d, side: 1.0, clusters: 4, spread: 0.1, seed: a.seed };
        let mut best = f64::INFINITY;
        for _ in 0..a.reps {
            best = best.min(run_once(a.task, &params, kernel.as_ref(), eps, a.seed)?);
        }
        runtimes.push(best);
    }
    let ns: Vec<f64> = a.n.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&ns, &runtimes);
    let monotone = runtimes.windows(2).all(|w| w[1] > w[0]);
    let sweep = BenchSweep {
        schema: kgraph::report::REPORT_SCHEMA,
        task: def.name,
        d,
        kernel: kernel.map(|k| k.to_string()),
        eps,
        seed: a.seed,
        n: a.n.clone(),
        runtime_ms: runtimes.clone(),
        slope,
        monotone,
    };
    if let Some(path) = &a.out {
        write_json(&sweep, Some(path))?;
    }
    let mut r = ApproxReport::new(format!("bench-{}", def.name), *a.n.last().unwrap());
    r.d = Some(d);
    r.kernel = sweep.kernel.clone();
    r.eps = Some(eps);
    r.seed = Some(a.seed);
    r.extra.insert("slope".into(), slope);
    r.extra.insert("monotone".into(), f64::from(u8::from(monotone)));
    for (n, t) in a.n.iter().zip(&runtimes) {
        r.extra.insert(format!("runtime_ms_n{n}"), *t);
    }
    r.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    write_json(&r, a.report.as_deref())
}
