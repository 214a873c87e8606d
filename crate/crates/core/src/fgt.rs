//! Fast Gaussian transform: `G(t_j) = sum_i q_i exp(-||t_j - s_i||^2 / delta)` to additive error.
//!
//! Points are mapped into the unit box and bucketed into boxes of side `r sqrt(2 delta)`.
//! Each source box interacts with target boxes at most `k` boxes away (in the max norm),
//! through one of three expansions chosen by a cost model.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::linop::{LinearOperator, OperatorKind};
use crate::points::PointSet;

/// Cramer's constant per axis, rounded up.
pub const CRAMER_K: f64 = 1.09;

/// Default cap on `p^d`.
pub const DEFAULT_TERM_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Technique {
    /// Each source accumulated straight into target-box Taylor series.
    DirectTaylor,
    /// Source-box Hermite series evaluated at every target.
    HermiteDirect,
    /// Source-box Hermite series translated into target-box Taylor series.
    HermiteToTaylor,
}

/// How the truncation order `p` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TruncationRule {
    /// Smallest `p` with `K^d Q (1/p!)^{d/2} (r^{p+1}/(1-r))^d <= eps/2`.
    Paper,
    /// Smallest `p` whose rigorous per-axis tail bound, summed over all truncated
    /// multi-indices and both translation stages, is at most `eps/2`.
    Certified,
}

#[derive(Debug, Clone, Copy)]
pub struct FgtConfig {
    pub rule: TruncationRule,
    pub r: f64,
    pub term_cap: usize,
}

impl Default for FgtConfig {
    fn default() -> Self {
        Self {
            rule: TruncationRule::Certified,
            r: 0.5,
            term_cap: DEFAULT_TERM_CAP,
        }
    }
}

#[derive(Debug, Clone)]
struct BoxCell {
    coord: Vec<i64>,
    center: Vec<f64>,
    members: Vec<usize>,
}

/// Box decomposition, truncation order and per-box technique for one transform.
#[derive(Debug, Clone)]
pub struct FgtPlan {
    d: usize,
    delta: f64,
    r: f64,
    p: usize,
    k: usize,
    side: f64,
    q_norm: f64,
    shift: Vec<f64>,
    scale: f64,
    sources: PointSet,
    targets: PointSet,
    source_boxes: Vec<BoxCell>,
    target_boxes: Vec<BoxCell>,
    technique: Vec<Technique>,
    /// For each target box, the source boxes within range.
    incoming: Vec<Vec<usize>>,
}

/// `A_alpha` for all `alpha < p` componentwise, colexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub center: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// Taylor coefficients about `center`, colexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorExpansion {
    pub center: Vec<f64>,
    pub coeffs: Vec<f64>,
}

/// Analytic error bounds as stated for the method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub hermite_bound: f64,
    pub taylor_bound: f64,
    pub cutoff_bound: f64,
}

/// Paper bounds with `K = 1.09^d` and `K' = 2K`.
pub fn paper_bounds(d: usize, p: usize, k: usize, r: f64, q_norm: f64) -> ErrorBudget {
    let kd = CRAMER_K.powi(d as i32);
    let per_axis = (1.0 / factorial(p)).sqrt() * r.powi(p as i32 + 1) / (1.0 - r);
    let hermite = kd * q_norm * per_axis.powi(d as i32);
    ErrorBudget {
        hermite_bound: hermite,
        taylor_bound: 2.0 * hermite,
        cutoff_bound: q_norm * (-2.0 * r * r * (k * k) as f64).exp(),
    }
}

/// Rigorous bound on the truncation error of any of the three techniques, for total weight `q_norm`.
///
/// Per axis a term of order `n` is at most `K a^n / sqrt(n!)` with `a = r` for one expansion and
/// `a = sqrt(2) r` for the translated pair, so tails are geometric in `a`.
pub fn certified_truncation_bound(d: usize, p: usize, r: f64, q_norm: f64) -> f64 {
    let tail = |a: f64| a.powi(p as i32) / ((1.0 - a) * factorial(p).sqrt());
    let t = CRAMER_K * tail(r);
    let a = std::f64::consts::SQRT_2 * r;
    let head: f64 = (0..p).map(|n| a.powi(n as i32) / factorial(n).sqrt()).sum();
    let v = CRAMER_K * head * tail(a);
    q_norm * ((1.0 + t + v).powi(d as i32) - 1.0)
}

/// Bound on the Hermite truncation alone: `Q ((1 + T)^d - 1)`.
pub fn certified_hermite_bound(d: usize, p: usize, r: f64, q_norm: f64) -> f64 {
    let t = CRAMER_K * r.powi(p as i32) / ((1.0 - r) * factorial(p).sqrt());
    q_norm * ((1.0 + t).powi(d as i32) - 1.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Interaction radius `k >= 1` with `Q exp(-2 r^2 k^2) <= eps / 2`.
pub fn interaction_radius(q_norm: f64, eps: f64, r: f64) -> usize {
    let l = (2.0 * q_norm / eps).ln();
    if l <= 0.0 {
        return 1;
    }
    ((l / (2.0 * r * r)).sqrt().ceil() as usize).max(1)
}

/// Smallest truncation order `p >= 1` meeting `eps / 2` under `rule`.
pub fn truncation_order(d: usize, q_norm: f64, eps: f64, r: f64, rule: TruncationRule) -> usize {
    // With eps >= 2Q any approximation bounded by the true weights already qualifies.
    if eps >= 2.0 * q_norm {
        return 1;
    }
    (1..200)
        .find(|&p| match rule {
            TruncationRule::Paper => paper_bounds(d, p, 0, r, q_norm).hermite_bound <= eps / 2.0,
            TruncationRule::Certified => certified_truncation_bound(d, p, r, q_norm) <= eps / 2.0,
        })
        .unwrap_or(200)
}

/// Hermite functions `h_n(x) = exp(-x^2) H_n(x)` for `n < len`.
pub fn hermite_functions(x: f64, len: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(len);
    if len == 0 {
        return h;
    }
    h.push((-x * x).exp());
    if len > 1 {
        h.push(2.0 * x * h[0]);
    }
    for n in 1..len.saturating_sub(1) {
        let next = 2.0 * x * h[n] - 2.0 * n as f64 * h[n - 1];
        h.push(next);
    }
    h
}

fn scaled_powers(x: f64, len: usize, with_factorial: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 1.0;
    for n in 0..len {
        out.push(acc);
        acc *= x;
        if with_factorial {
            acc /= (n + 1) as f64;
        }
    }
    out
}

/// `out[alpha] += scale * prod_i vecs[i][alpha_i]`.
fn outer_accumulate(out: &mut [f64], p: usize, vecs: &[Vec<f64>], scale: f64) {
    let mut buf = vec![scale];
    for v in vecs {
        let mut next = Vec::with_capacity(buf.len() * p);
        for &va in v.iter().take(p) {
            next.extend(buf.iter().map(|b| b * va));
        }
        buf = next;
    }
    for (o, b) in out.iter_mut().zip(&buf) {
        *o += b;
    }
}

/// `sum_alpha coeffs[alpha] prod_i tables[i][alpha_i]`.
fn tensor_eval(coeffs: &[f64], p: usize, tables: &[Vec<f64>]) -> f64 {
    let mut cur = coeffs.to_vec();
    for axis in (0..tables.len()).rev() {
        let stride = p.pow(axis as u32);
        let t = &tables[axis];
        let next: Vec<f64> = (0..stride)
            .map(|j| (0..p).map(|a| cur[j + a * stride] * t[a]).sum())
            .collect();
        cur = next;
    }
    cur[0]
}

/// Applies `out[.., b, ..] = sum_a in[.., a, ..] m[a][b]` along `axis`.
fn mode_product(input: &[f64], p: usize, axis: usize, m: &[Vec<f64>]) -> Vec<f64> {
    let stride = p.pow(axis as u32);
    let block = stride * p;
    let mut out = vec![0.0; input.len()];
    for base in (0..input.len()).step_by(block) {
        for j in 0..stride {
            for b in 0..p {
                let mut s = 0.0;
                for (a, row) in m.iter().enumerate().take(p) {
                    s += input[base + j + a * stride] * row[b];
                }
                out[base + j + b * stride] = s;
            }
        }
    }
    out
}

impl FgtPlan {
    pub fn new(sources: &PointSet, targets: &PointSet, delta: f64, eps: f64, q_norm: f64) -> Result<Self> {
        Self::with_config(sources, targets, delta, eps, q_norm, FgtConfig::default())
    }

    pub fn with_config(
        sources: &PointSet,
        targets: &PointSet,
        delta: f64,
        eps: f64,
        q_norm: f64,
        cfg: FgtConfig,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if !(cfg.r > 0.0 && cfg.r <= 0.5) {
            return Err(Error::InvalidInput(format!("r must lie in (0, 1/2], got {}", cfg.r)));
        }
        check_len(sources.d(), targets.d())?;
        let d = sources.d();
        let q_norm = q_norm.max(0.0);
        let p = truncation_order(d, q_norm, eps, cfg.r, cfg.rule);
        let terms = p.checked_pow(d as u32).unwrap_or(usize::MAX);
        if terms > cfg.term_cap {
            return Err(Error::PlanTooLarge(format!(
                "p^d = {p}^{d} exceeds the cap {}; use the dense path",
                cfg.term_cap
            )));
        }
        let k = interaction_radius(q_norm, eps, cfg.r);

        // Joint affine map into the unit box with a single scale.
        let (mut lo, mut hi) = sources.bounding_box();
        let (tlo, thi) = targets.bounding_box();
        for i in 0..d {
            lo[i] = lo[i].min(tlo[i]);
            hi[i] = hi[i].max(thi[i]);
        }
        let span = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let span = if span > 0.0 && span.is_finite() { span } else { 1.0 };
        let scale = 1.0 / span;
        let delta_s = delta * scale * scale;
        let s_pts = sources.affine(&lo, scale);
        let t_pts = targets.affine(&lo, scale);
        let side = cfg.r * (2.0 * delta_s).sqrt();
        let per_axis = (1.0 / side).ceil().max(1.0);
        if per_axis > 1e15 {
            return Err(Error::PlanTooLarge(format!("box side {side:e} is too small")));
        }
        let per_axis = per_axis as i64;

        let source_boxes = bucket(&s_pts, side, per_axis);
        let target_boxes = bucket(&t_pts, side, per_axis);
        let incoming = interactions(&source_boxes, &target_boxes, k, d);

        // Per source box: outgoing target boxes and their target counts.
        let mut outgoing = vec![(0usize, 0usize); source_boxes.len()];
        for (c, list) in incoming.iter().enumerate() {
            for &b in list {
                outgoing[b].0 += 1;
                outgoing[b].1 += target_boxes[c].members.len();
            }
        }
        let pd = terms as f64;
        let technique = source_boxes
            .iter()
            .zip(&outgoing)
            .map(|(b, &(nbr, m_sum))| {
                let nb = b.members.len() as f64;
                let costs = [
                    (Technique::DirectTaylor, nbr as f64 * pd * nb),
                    (Technique::HermiteDirect, pd * nb + pd * m_sum as f64),
                    (Technique::HermiteToTaylor, pd * nb + nbr as f64 * d as f64 * pd * p as f64),
                ];
                costs
                    .iter()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|c| c.0)
                    .unwrap()
            })
            .collect();

        Ok(Self {
            d,
            delta: delta_s,
            r: cfg.r,
            p,
            k,
            side,
            q_norm,
            shift: lo,
            scale,
            sources: s_pts,
            targets: t_pts,
            source_boxes,
            target_boxes,
            technique,
            incoming,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k_interact(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Bandwidth after mapping into the unit box.
    pub fn scaled_delta(&self) -> f64 {
        self.delta
    }

    pub fn box_side(&self) -> f64 {
        self.side
    }

    pub fn q_norm(&self) -> f64 {
        self.q_norm
    }

    pub fn scaled_sources(&self) -> &PointSet {
        &self.sources
    }

    pub fn scaled_targets(&self) -> &PointSet {
        &self.targets
    }

    /// Maps an original-coordinate point into the plan's unit box.
    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(v, s)| (v - s) * self.scale).collect()
    }

    pub fn source_box_count(&self) -> usize {
        self.source_boxes.len()
    }

    pub fn target_box_count(&self) -> usize {
        self.target_boxes.len()
    }

    pub fn source_box_members(&self, b: usize) -> &[usize] {
        &self.source_boxes[b].members
    }

    pub fn source_box_center(&self, b: usize) -> &[f64] {
        &self.source_boxes[b].center
    }

    pub fn target_box_members(&self, c: usize) -> &[usize] {
        &self.target_boxes[c].members
    }

    pub fn target_box_center(&self, c: usize) -> &[f64] {
        &self.target_boxes[c].center
    }

    pub fn techniques(&self) -> &[Technique] {
        &self.technique
    }

    /// Target boxes within range of source box `b`.
    pub fn targets_in_range(&self, b: usize) -> Vec<usize> {
        (0..self.target_boxes.len())
            .filter(|&c| self.incoming[c].contains(&b))
            .collect()
    }

    pub fn error_budget(&self) -> ErrorBudget {
        fgt_error_budget(self)
    }

    fn terms(&self) -> usize {
        self.p.pow(self.d as u32)
    }

    /// `A_alpha = (1/alpha!) sum_j q_j ((s_j - s_B)/sqrt(delta))^alpha`.
    pub fn hermite_expand(&self, b: usize, q: &[f64]) -> HermiteExpansion {
        let cell = &self.source_boxes[b];
        let mut coeffs = vec![0.0; self.terms()];
        let sd = self.delta.sqrt();
        for &j in &cell.members {
            if q[j] == 0.0 {
                continue;
            }
            let s = self.sources.point(j);
            let tables: Vec<Vec<f64>> = (0..self.d)
                .map(|i| scaled_powers((s[i] - cell.center[i]) / sd, self.p, true))
                .collect();
            outer_accumulate(&mut coeffs, self.p, &tables, q[j]);
        }
        HermiteExpansion { center: cell.center.clone(), coeffs }
    }

    /// Evaluates a Hermite series at a scaled target point.
    pub fn eval_hermite(&self, h: &HermiteExpansion, t: &[f64]) -> f64 {
        let sd = self.delta.sqrt();
        let tables: Vec<Vec<f64>> = (0..self.d)
            .map(|i| hermite_functions((t[i] - h.center[i]) / sd, self.p))
            .collect();
        tensor_eval(&h.coeffs, self.p, &tables)
    }

    /// `C_beta = ((-1)^|beta| / beta!) sum_alpha A_alpha h_{alpha+beta}((t_C - s_B)/sqrt(delta))`,
    /// computed as one mode product per axis.
    pub fn hermite_to_taylor(&self, h: &HermiteExpansion, t_center: &[f64]) -> TaylorExpansion {
        let p = self.p;
        let sd = self.delta.sqrt();
        let mut cur = h.coeffs.clone();
        for (axis, (&tc, &hc)) in t_center.iter().zip(&h.center).enumerate().take(self.d) {
            let u = (tc - hc) / sd;
            let hs = hermite_functions(u, 2 * p);
            let inv_fact = scaled_powers(1.0, p, true);
            let m: Vec<Vec<f64>> = (0..p)
                .map(|a| {
                    (0..p)
                        .map(|b| {
                            let sign = if b % 2 == 1 { -1.0 } else { 1.0 };
                            sign * hs[a + b] * inv_fact[b]
                        })
                        .collect()
                })
                .collect();
            cur = mode_product(&cur, p, axis, &m);
        }
        TaylorExpansion { center: t_center.to_vec(), coeffs: cur }
    }

    /// `B_beta = sum_j q_j h_beta((s_j - t_C)/sqrt(delta)) / beta!` over sources in box `b`.
    pub fn direct_taylor(&self, b: usize, q: &[f64], t_center: &[f64]) -> TaylorExpansion {
        let mut coeffs = vec![0.0; self.terms()];
        self.direct_taylor_into(b, q, t_center, &mut coeffs);
        TaylorExpansion { center: t_center.to_vec(), coeffs }
    }

    fn direct_taylor_into(&self, b: usize, q: &[f64], t_center: &[f64], out: &mut [f64]) {
        let sd = self.delta.sqrt();
        let inv_fact: Vec<f64> = scaled_powers(1.0, self.p, true);
        for &j in &self.source_boxes[b].members {
            if q[j] == 0.0 {
                continue;
            }
            let s = self.sources.point(j);
            let tables: Vec<Vec<f64>> = (0..self.d)
                .map(|i| {
                    hermite_functions((s[i] - t_center[i]) / sd, self.p)
                        .iter()
                        .zip(&inv_fact)
                        .map(|(h, f)| h * f)
                        .collect()
                })
                .collect();
            outer_accumulate(out, self.p, &tables, q[j]);
        }
    }

    pub fn eval_taylor(&self, t: &TaylorExpansion, x: &[f64]) -> f64 {
        let sd = self.delta.sqrt();
        let tables: Vec<Vec<f64>> = (0..self.d)
            .map(|i| scaled_powers((x[i] - t.center[i]) / sd, self.p, false))
            .collect();
        tensor_eval(&t.coeffs, self.p, &tables)
    }

    /// Runs the transform for weights `q` (indexed like the sources).
    pub fn execute(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_len(self.sources.n(), q.len())?;
        let hermite: Vec<Option<HermiteExpansion>> = (0..self.source_boxes.len())
            .into_par_iter()
            .map(|b| match self.technique[b] {
                Technique::DirectTaylor => None,
                _ => Some(self.hermite_expand(b, q)),
            })
            .collect();
        let per_box: Vec<Vec<(usize, f64)>> = (0..self.target_boxes.len())
            .into_par_iter()
            .map(|c| {
                let cell = &self.target_boxes[c];
                let mut taylor = vec![0.0; self.terms()];
                let mut any_taylor = false;
                let mut direct = Vec::new();
                for &b in &self.incoming[c] {
                    match self.technique[b] {
                        Technique::DirectTaylor => {
                            self.direct_taylor_into(b, q, &cell.center, &mut taylor);
                            any_taylor = true;
                        }
                        Technique::HermiteToTaylor => {
                            let h = hermite[b].as_ref().unwrap();
                            let t = self.hermite_to_taylor(h, &cell.center);
                            crate::linalg::axpy(1.0, &t.coeffs, &mut taylor);
                            any_taylor = true;
                        }
                        Technique::HermiteDirect => direct.push(hermite[b].as_ref().unwrap()),
                    }
                }
                let texp = TaylorExpansion { center: cell.center.clone(), coeffs: taylor };
                cell.members
                    .iter()
                    .map(|&j| {
                        let x = self.targets.point(j);
                        let mut v = if any_taylor { self.eval_taylor(&texp, x) } else { 0.0 };
                        for h in &direct {
                            v += self.eval_hermite(h, x);
                        }
                        (j, v)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; self.targets.n()];
        for list in per_box {
            for (j, v) in list {
                out[j] = v;
            }
        }
        Ok(out)
    }

    /// For every source box, the largest observed Hermite truncation error over targets in range.
    pub fn hermite_box_errors(&self, q: &[f64]) -> Vec<BoxTruncation> {
        (0..self.source_boxes.len())
            .into_par_iter()
            .map(|b| {
                let h = self.hermite_expand(b, q);
                let members = &self.source_boxes[b].members;
                let q_b: f64 = members.iter().map(|&j| q[j].abs()).sum();
                let mut worst = 0.0f64;
                for c in self.targets_in_range(b) {
                    for &t in &self.target_boxes[c].members {
                        let x = self.targets.point(t);
                        let exact: f64 = members
                            .iter()
                            .map(|&j| q[j] * (-crate::points::sq_dist(x, self.sources.point(j)) / self.delta).exp())
                            .sum();
                        worst = worst.max((self.eval_hermite(&h, x) - exact).abs());
                    }
                }
                BoxTruncation {
                    box_index: b,
                    observed: worst,
                    paper_bound: paper_bounds(self.d, self.p, self.k, self.r, q_b).hermite_bound,
                    certified_bound: certified_hermite_bound(self.d, self.p, self.r, q_b),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxTruncation {
    pub box_index: usize,
    pub observed: f64,
    pub paper_bound: f64,
    pub certified_bound: f64,
}

fn bucket(p: &PointSet, side: f64, per_axis: i64) -> Vec<BoxCell> {
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut cells: Vec<BoxCell> = Vec::new();
    for i in 0..p.n() {
        let coord: Vec<i64> = p
            .point(i)
            .iter()
            .map(|&x| ((x / side).floor() as i64).clamp(0, per_axis - 1))
            .collect();
        let slot = *index.entry(coord.clone()).or_insert_with(|| {
            let center = coord.iter().map(|&c| (c as f64 + 0.5) * side).collect();
            cells.push(BoxCell { coord, center, members: Vec::new() });
            cells.len() - 1
        });
        cells[slot].members.push(i);
    }
    cells
}

fn interactions(sources: &[BoxCell], targets: &[BoxCell], k: usize, d: usize) -> Vec<Vec<usize>> {
    let k = k as i64;
    let window = (2 * k + 1).checked_pow(d as u32).map(|w| w as usize);
    let use_lookup = window.is_some_and(|w| w < sources.len());
    let lookup: HashMap<&[i64], usize> = if use_lookup {
        sources.iter().enumerate().map(|(i, c)| (c.coord.as_slice(), i)).collect()
    } else {
        HashMap::new()
    };
    targets
        .par_iter()
        .map(|c| {
            if use_lookup {
                let mut found = Vec::new();
                let mut off = vec![-k; d];
                let mut probe = vec![0i64; d];
                loop {
                    for i in 0..d {
                        probe[i] = c.coord[i] + off[i];
                    }
                    if let Some(&b) = lookup.get(probe.as_slice()) {
                        found.push(b);
                    }
                    let mut i = 0;
                    while i < d {
                        if off[i] < k {
                            off[i] += 1;
                            break;
                        }
                        off[i] = -k;
                        i += 1;
                    }
                    if i == d {
                        break;
                    }
                }
                found.sort_unstable();
                found
            } else {
                sources
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.coord.iter().zip(&c.coord).all(|(a, b)| (a - b).abs() <= k))
                    .map(|(i, _)| i)
                    .collect()
            }
        })
        .collect()
}

/// The stated Hermite, Taylor and cutoff bounds for a plan.
pub fn fgt_error_budget(plan: &FgtPlan) -> ErrorBudget {
    paper_bounds(plan.d, plan.p, plan.k, plan.r, plan.q_norm)
}

/// `x_j ~ sum_i q_i exp(-||t_j - s_i||^2 / delta)` with `|x_j - G(t_j)| <= eps`.
pub fn fgt_transform(sources: &PointSet, targets: &PointSet, q: &[f64], delta: f64, eps: f64) -> Result<Vec<f64>> {
    check_len(sources.n(), q.len())?;
    let q_norm: f64 = q.iter().map(|v| v.abs()).sum();
    if q_norm == 0.0 {
        return Ok(vec![0.0; targets.n()]);
    }
    FgtPlan::new(sources, targets, delta, eps, q_norm)?.execute(q)
}

/// Preprocessed sources answering single-target queries.
#[derive(Debug, Clone)]
pub struct FgtIndex {
    plan: FgtPlan,
    expansions: Vec<HermiteExpansion>,
    lookup: HashMap<Vec<i64>, usize>,
}

impl FgtIndex {
    /// Targets must lie inside the bounding box of `domain` (and `sources`).
    pub fn new(sources: &PointSet, domain: &PointSet, q: &[f64], delta: f64, eps: f64) -> Result<Self> {
        check_len(sources.n(), q.len())?;
        let q_norm: f64 = q.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let plan = FgtPlan::new(sources, domain, delta, eps, q_norm)?;
        let expansions = (0..plan.source_boxes.len())
            .into_par_iter()
            .map(|b| plan.hermite_expand(b, q))
            .collect();
        let lookup = plan
            .source_boxes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.coord.clone(), i))
            .collect();
        Ok(Self { plan, expansions, lookup })
    }

    pub fn query(&self, t: &[f64]) -> Result<f64> {
        check_len(self.plan.d, t.len())?;
        let x = self.plan.to_scaled(t);
        let k = self.plan.k as i64;
        let coord: Vec<i64> = x.iter().map(|&v| (v / self.plan.side).floor() as i64).collect();
        let mut v = 0.0;
        let window = (2 * k + 1).checked_pow(self.plan.d as u32).map(|w| w as usize);
        if window.is_some_and(|w| w < self.expansions.len()) {
            let d = self.plan.d;
            let mut off = vec![-k; d];
            let mut probe = vec![0i64; d];
            loop {
                for i in 0..d {
                    probe[i] = coord[i] + off[i];
                }
                if let Some(&b) = self.lookup.get(&probe) {
                    v += self.plan.eval_hermite(&self.expansions[b], &x);
                }
                let mut i = 0;
                while i < d {
                    if off[i] < k {
                        off[i] += 1;
                        break;
                    }
                    off[i] = -k;
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
        } else {
            for (b, cell) in self.plan.source_boxes.iter().enumerate() {
                if cell.coord.iter().zip(&coord).all(|(a, c)| (a - c).abs() <= k) {
                    v += self.plan.eval_hermite(&self.expansions[b], &x);
                }
            }
        }
        Ok(v)
    }
}

/// Gaussian kernel adjacency `A y` through the transform, error at most `eps ||y||_inf` per entry.
#[derive(Debug, Clone)]
pub struct FgtAdjacency<'a> {
    pub points: &'a PointSet,
    pub delta: f64,
    pub eps: f64,
}

impl LinearOperator for FgtAdjacency<'_> {
    fn dim(&self) -> usize {
        self.points.n()
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::Fgt
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let scale = crate::linalg::norm_inf(y);
        if scale == 0.0 {
            return Ok(vec![0.0; y.len()]);
        }
        let mut out = fgt_transform(self.points, self.points, y, self.delta, self.eps * scale)?;
        for (o, yi) in out.iter_mut().zip(y) {
            *o -= yi;
        }
        Ok(out)
    }
}
