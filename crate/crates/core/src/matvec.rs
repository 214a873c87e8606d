//! Fast kernel matrix-vector products.
//!
//! Polynomial kernels `||u - v||^{2q}` factor exactly through monomial feature maps, so
//! `A y` costs `O(n R)`. Analytic kernels are truncated to a polynomial first.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::kernel::{KernelSpec, TaylorSeries};
use crate::linalg::{norm_inf, project_out_ones};
use crate::linop::{LinearOperator, OperatorKind};
use crate::points::PointSet;

/// Default cap on the number of monomials in a factorization.
pub const DEFAULT_RANK_CAP: usize = 2_000_000;

const ROW_CHUNK: usize = 256;

/// `A = left * right^T - Diag(diag)` with both factors stored row-major as `n x r`.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    n: usize,
    r: usize,
    monomials: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl LowRankFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of monomials in the expansion, including those with zero coefficient.
    pub fn rank(&self) -> usize {
        self.monomials
    }

    /// Number of stored columns (monomials with nonzero coefficient).
    pub fn active_rank(&self) -> usize {
        self.r
    }

    pub fn left_row(&self, i: usize) -> &[f64] {
        &self.left[i * self.r..(i + 1) * self.r]
    }

    pub fn right_row(&self, i: usize) -> &[f64] {
        &self.right[i * self.r..(i + 1) * self.r]
    }

    /// Entry `(i, j)` of `left * right^T`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        crate::linalg::dot(self.left_row(i), self.right_row(j))
    }

    /// Diagonal of `left * right^T` as computed in floating point.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, i)).collect()
    }

    /// `right^T y`, summed in a fixed order.
    fn right_t(&self, y: &[f64]) -> Vec<f64> {
        let partials: Vec<Vec<f64>> = y
            .par_chunks(ROW_CHUNK)
            .enumerate()
            .map(|(c, ys)| {
                let mut acc = vec![0.0; self.r];
                for (k, &yi) in ys.iter().enumerate() {
                    if yi != 0.0 {
                        crate::linalg::axpy(yi, self.right_row(c * ROW_CHUNK + k), &mut acc);
                    }
                }
                acc
            })
            .collect();
        let mut t = vec![0.0; self.r];
        for p in &partials {
            crate::linalg::axpy(1.0, p, &mut t);
        }
        t
    }

    /// `left * t`.
    fn left_mul(&self, t: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| crate::linalg::dot(self.left_row(i), t))
            .collect()
    }

    /// `left * (right^T y)`.
    pub fn apply_product(&self, y: &[f64]) -> Vec<f64> {
        self.left_mul(&self.right_t(y))
    }
}

/// `left * (right^T y) - diag_correction o y`.
pub fn lowrank_adjacency_apply(f: &LowRankFactor, diag_correction: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(f.n, y.len())?;
    check_len(f.n, diag_correction.len())?;
    let mut out = f.apply_product(y);
    for ((o, c), yi) in out.iter_mut().zip(diag_correction).zip(y) {
        *o -= c * yi;
    }
    Ok(out)
}

/// `C(n, k)` when it fits in `usize`.
pub fn binomial(n: u64, k: u64) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    usize::try_from(acc).ok()
}

/// `C(2d + 2q - 1, 2q)`, the number of degree-`2q` monomials in `2d` variables.
pub fn monomial_count(d: usize, q: u32) -> Option<usize> {
    let q2 = 2 * q as u64;
    binomial(2 * d as u64 + q2 - 1, q2)
}

/// All multi-indices in `d` variables with total degree exactly `deg`, in colexicographic order.
pub fn multi_indices(d: usize, deg: u32) -> Vec<Vec<u32>> {
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == 0 {
            cur[0] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos - 1, left - v, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    let mut cur = vec![0; d];
    rec(d - 1, deg, &mut cur, &mut out);
    out
}

fn multinomial(parts: &[u32]) -> f64 {
    let mut total = 0u64;
    let mut acc = 1.0;
    for &p in parts {
        for i in 1..=p as u64 {
            total += 1;
            acc *= total as f64 / i as f64;
        }
    }
    acc
}

fn centered(p: &PointSet) -> PointSet {
    p.affine(&p.centroid(), 1.0)
}

fn check_rank(rank: usize, cap: usize, advice: &'static str) -> Result<()> {
    if rank > cap {
        Err(Error::RankCap { rank, cap, advice })
    } else {
        Ok(())
    }
}

/// Exact factorization of `||x_i - x_j||^{2q}` with the default rank cap.
pub fn poly_features(p: &PointSet, q: u32) -> Result<LowRankFactor> {
    poly_features_capped(p, q, DEFAULT_RANK_CAP)
}

pub fn poly_features_capped(p: &PointSet, q: u32, cap: usize) -> Result<LowRankFactor> {
    let d = p.d();
    let monomials = monomial_count(d, q).unwrap_or(usize::MAX);
    check_rank(monomials, cap, "use the dense path")?;
    let x = centered(p);

    // Each (u_i - v_i)^{2 k_i} splits into sum_a C(2k_i, a) u_i^a (-v_i)^{2k_i - a}.
    let mut cols: Vec<(f64, Vec<u32>, Vec<u32>)> = Vec::new();
    for k in multi_indices(d, q) {
        let base = multinomial(&k);
        let mut a = vec![0u32; d];
        loop {
            let mut c = base;
            let mut b = vec![0u32; d];
            for i in 0..d {
                b[i] = 2 * k[i] - a[i];
                c *= binomial(2 * k[i] as u64, a[i] as u64).unwrap() as f64;
                if b[i] % 2 == 1 {
                    c = -c;
                }
            }
            cols.push((c, a.clone(), b));
            // Odometer over 0 <= a_i <= 2 k_i.
            let mut i = 0;
            while i < d {
                if a[i] < 2 * k[i] {
                    a[i] += 1;
                    break;
                }
                a[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
        }
    }
    let r = cols.len();
    let max_pow = 2 * q as usize;
    let mut left = vec![0.0; x.n() * r];
    let mut right = vec![0.0; x.n() * r];
    left.par_chunks_mut(r.max(1))
        .zip(right.par_chunks_mut(r.max(1)))
        .enumerate()
        .for_each(|(i, (lrow, rrow))| {
            let pows = power_table(x.point(i), max_pow);
            for (t, (c, a, b)) in cols.iter().enumerate() {
                let mut pu = *c;
                let mut pv = 1.0;
                for ax in 0..d {
                    pu *= pows[ax][a[ax] as usize];
                    pv *= pows[ax][b[ax] as usize];
                }
                lrow[t] = pu;
                rrow[t] = pv;
            }
        });
    Ok(LowRankFactor { n: x.n(), r, monomials, left, right })
}

fn power_table(x: &[f64], max_pow: usize) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&v| {
            let mut row = Vec::with_capacity(max_pow + 1);
            let mut acc = 1.0;
            for _ in 0..=max_pow {
                row.push(acc);
                acc *= v;
            }
            row
        })
        .collect()
}

/// Exact `A y` for `f(z) = z^q` via the monomial factorization.
pub fn power_adjacency_apply(p: &PointSet, q: u32, y: &[f64]) -> Result<Vec<f64>> {
    let f = poly_features(p, q)?;
    let diag = f.diagonal();
    lowrank_adjacency_apply(&f, &diag, y)
}

/// Upper bound on the largest squared distance, from the bounding box and centroid radius.
pub fn sq_diameter_bound(p: &PointSet) -> f64 {
    let (lo, hi) = p.bounding_box();
    let boxed: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum();
    let c = p.centroid();
    let r2 = (0..p.n())
        .map(|i| crate::points::sq_dist(p.point(i), &c))
        .fold(0.0, f64::max);
    boxed.min(4.0 * r2)
}

/// Polynomial surrogate of an analytic kernel, applied through a low-rank factor.
#[derive(Debug, Clone)]
pub struct TaylorOperator {
    factor: LowRankFactor,
    diag: Vec<f64>,
    degree: u32,
    z_max: f64,
}

impl TaylorOperator {
    /// Chooses the smallest degree whose tail is at most `eps / n` on `[0, z_max]`.
    pub fn new(p: &PointSet, k: &KernelSpec, eps: f64) -> Result<Self> {
        Self::with_cap(p, k, eps, DEFAULT_RANK_CAP)
    }

    pub fn with_cap(p: &PointSet, k: &KernelSpec, eps: f64, cap: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        let series = k
            .taylor()
            .ok_or_else(|| Error::InvalidInput(format!("{k} has no Taylor expansion; use fgt or dense")))?;
        let n = p.n();
        // The Gaussian is rewritten as exp(-z') on points scaled by 1/sqrt(delta).
        let (x, series) = match *k {
            KernelSpec::Gaussian { delta } => {
                let c = p.centroid();
                (p.affine(&c, 1.0 / delta.sqrt()), KernelSpec::Gaussian { delta: 1.0 }.taylor().unwrap())
            }
            _ => (centered(p), series),
        };
        let z_max = sq_diameter_bound(&x);
        let limit = match k {
            KernelSpec::RationalInv => 0.5,
            _ => series.valid_up_to(),
        };
        if z_max > limit {
            return Err(Error::InvalidInput(format!(
                "{k}: squared diameter {z_max:e} exceeds the series region {limit}; rescale or use the dense path"
            )));
        }
        let tol = eps / n.max(1) as f64;
        let degree = series.degree_for(z_max, tol, 400).ok_or(Error::RankCap {
            rank: usize::MAX,
            cap,
            advice: "no degree up to 400 meets the tolerance; use fgt or dense",
        })?;
        let factor = taylor_factor(&x, &series, degree, cap)?;
        let diag = factor.diagonal();
        Ok(Self { factor, diag, degree, z_max })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn factor(&self) -> &LowRankFactor {
        &self.factor
    }
}

impl LinearOperator for TaylorOperator {
    fn dim(&self) -> usize {
        self.factor.n
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::LowRank
    }

    fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        lowrank_adjacency_apply(&self.factor, &self.diag, y)
    }
}

/// Factor for `sum_{l <= q} c_l z^l` using `z = s_u + s_v - 2 <u, v>` with `s = ||.||^2`.
/// Columns are indexed by `(b, m)`: right is `s_v^b v^m`, left sums over the power of `s_u`.
fn taylor_factor(x: &PointSet, series: &TaylorSeries, q: u32, cap: usize) -> Result<LowRankFactor> {
    let d = x.d();
    let mut cols: Vec<(u32, Vec<u32>, f64)> = Vec::new();
    let mut est = 0usize;
    for c in 0..=q {
        est = est.saturating_add(
            binomial(d as u64 + c as u64 - 1, c as u64).unwrap_or(usize::MAX).saturating_mul((q - c + 1) as usize),
        );
    }
    check_rank(est, cap, "use fgt or the dense path")?;
    for c in 0..=q {
        for m in multi_indices(d, c) {
            let mn = multinomial(&m) * (-2.0f64).powi(c as i32);
            for b in 0..=q - c {
                cols.push((b, m.clone(), mn));
            }
        }
    }
    let r = cols.len();
    let coeffs: Vec<f64> = (0..=q).map(|l| series.coeff(l)).collect();
    let mut left = vec![0.0; x.n() * r];
    let mut right = vec![0.0; x.n() * r];
    left.par_chunks_mut(r)
        .zip(right.par_chunks_mut(r))
        .enumerate()
        .for_each(|(i, (lrow, rrow))| {
            let p = x.point(i);
            let s: f64 = p.iter().map(|v| v * v).sum();
            let pows = power_table(p, q as usize);
            let mut spow = vec![1.0; q as usize + 1];
            for a in 1..=q as usize {
                spow[a] = spow[a - 1] * s;
            }
            for (t, (b, m, mn)) in cols.iter().enumerate() {
                let c: u32 = m.iter().sum();
                let mut mono = 1.0;
                for ax in 0..d {
                    mono *= pows[ax][m[ax] as usize];
                }
                let mut acc = 0.0;
                for a in 0..=q - c - b {
                    let l = a + b + c;
                    // l! / (a! b! c!)
                    let tri = binomial(l as u64, a as u64).unwrap() as f64
                        * binomial((l - a) as u64, *b as u64).unwrap() as f64;
                    acc += coeffs[l as usize] * tri * spow[a as usize];
                }
                lrow[t] = acc * mn * mono;
                rrow[t] = spow[*b as usize] * mono;
            }
        });
    Ok(LowRankFactor { n: x.n(), r, monomials: r, left, right })
}

/// `A y` to additive error `eps * ||y||_inf` through a truncated Taylor series.
pub fn taylor_adjacency_apply(p: &PointSet, k: &KernelSpec, eps: f64, y: &[f64]) -> Result<Vec<f64>> {
    TaylorOperator::new(p, k, eps)?.apply(y)
}

/// Laplacian from an adjacency oracle: `z_i = (A 1)_i y_i - (A y)_i`, each call at error `eps / 2`.
pub fn lap_from_adj<F>(adj: F, y: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    let g = adj(&vec![1.0; y.len()], eps / 2.0)?;
    let s = adj(y, eps / 2.0)?;
    check_len(y.len(), g.len())?;
    check_len(y.len(), s.len())?;
    Ok(g.iter().zip(&s).zip(y).map(|((gi, si), yi)| gi * yi - si).collect())
}

/// Adjacency from a Laplacian oracle on vertex subsets, by recursive halving.
///
/// `lap(idx, y, eps)` must return the Laplacian of the subgraph induced on `idx`
/// applied to `y`. Subsets are split `ceil(n/2) / floor(n/2)`.
pub fn adj_from_lap<F>(n: usize, lap: F, y: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: Fn(&[usize], &[f64], f64) -> Result<Vec<f64>>,
{
    check_len(n, y.len())?;
    let sub_eps = 0.5 * eps / (n.max(2) as f64).log2().max(1.0);
    let idx: Vec<usize> = (0..n).collect();
    let mut out = vec![0.0; n];
    adj_rec(&lap, &idx, y, sub_eps, &mut out, 0)?;
    Ok(out)
}

fn adj_rec<F>(lap: &F, idx: &[usize], y: &[f64], eps: f64, out: &mut [f64], depth: usize) -> Result<()>
where
    F: Fn(&[usize], &[f64], f64) -> Result<Vec<f64>>,
{
    let m = idx.len();
    if m <= 1 {
        return Ok(());
    }
    if depth > 64 {
        return Err(Error::Internal("adjacency recursion did not shrink".into()));
    }
    let h = m.div_ceil(2);
    let (p1, p2) = idx.split_at(h);
    // Cross terms: L(y1, 0) restricted to P2 is -A_21 y1, and symmetrically.
    let mut z1 = vec![0.0; m];
    let mut z2 = vec![0.0; m];
    for (k, &i) in idx.iter().enumerate() {
        if k < h {
            z1[k] = y[i];
        } else {
            z2[k] = y[i];
        }
    }
    let l1 = lap(idx, &z1, eps)?;
    let l2 = lap(idx, &z2, eps)?;
    check_len(m, l1.len())?;
    check_len(m, l2.len())?;
    for (k, &i) in idx.iter().enumerate() {
        out[i] -= if k < h { l2[k] } else { l1[k] };
    }
    adj_rec(lap, p1, y, eps, out, depth + 1)?;
    adj_rec(lap, p2, y, eps, out, depth + 1)
}

/// Solves `L x = b` for `L = Diag(degrees) - (left right^T - Diag(left right^T))`
/// with the Woodbury identity on `L + 11^T / n`.
pub fn woodbury_lap_solve(f: &LowRankFactor, degrees: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    WoodburySolver::new(f, degrees)?.solve(b)
}

/// Reusable Woodbury factorization for a low-rank kernel Laplacian.
#[derive(Debug, Clone)]
pub struct WoodburySolver<'a> {
    f: &'a LowRankFactor,
    /// Diagonal of `L + left right^T`.
    dshift: Vec<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> WoodburySolver<'a> {
    pub fn new(f: &'a LowRankFactor, degrees: &[f64]) -> Result<Self> {
        check_len(f.n, degrees.len())?;
        let n = f.n;
        let dshift: Vec<f64> = degrees.iter().zip(f.diagonal()).map(|(d, c)| d + c).collect();
        if let Some(i) = dshift.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Singular(format!("vertex {i} has non-positive degree")));
        }
        // U' = [U, -1/n], V' = [V, 1]; inner = I - V'^T D^{-1} U'.
        let r = f.r + 1;
        let mut inner = DMatrix::<f64>::identity(r, r);
        let cols: Vec<DMatrix<f64>> = (0..n)
            .into_par_iter()
            .fold(
                || DMatrix::zeros(r, r),
                |mut acc, i| {
                    let inv = 1.0 / dshift[i];
                    let mut u = f.left_row(i).to_vec();
                    u.push(-1.0 / n as f64);
                    let mut v = f.right_row(i).to_vec();
                    v.push(1.0);
                    for a in 0..r {
                        let va = v[a] * inv;
                        if va != 0.0 {
                            for c in 0..r {
                                acc[(a, c)] += va * u[c];
                            }
                        }
                    }
                    acc
                },
            )
            .collect();
        for c in cols {
            inner -= c;
        }
        let lu = inner.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular("Woodbury inner system is singular".into()));
        }
        Ok(Self { f, dshift, lu })
    }

    /// `(L + 11^T/n) x`.
    fn apply_shifted(&self, x: &[f64]) -> Vec<f64> {
        let n = self.f.n;
        let mean = x.iter().sum::<f64>() / n as f64;
        let ux = self.f.apply_product(x);
        (0..n).map(|i| self.dshift[i] * x[i] - ux[i] + mean).collect()
    }

    fn solve_shifted(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.f.n;
        let r = self.f.r;
        let db: Vec<f64> = b.iter().zip(&self.dshift).map(|(bi, di)| bi / di).collect();
        let mut t = self.f.right_t(&db);
        t.push(db.iter().sum());
        let s = self
            .lu
            .solve(&DVector::from_vec(t))
            .ok_or_else(|| Error::Singular("Woodbury inner solve failed".into()))?;
        let tail = -s[r] / n as f64;
        let us = self.f.left_mul(&s.as_slice()[..r]);
        Ok((0..n).map(|i| db[i] + (us[i] + tail) / self.dshift[i]).collect())
    }

    pub fn dim(&self) -> usize {
        self.f.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.f.n, b.len())?;
        let mut bb = b.to_vec();
        project_out_ones(&mut bb);
        if norm_inf(&bb) == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.solve_shifted(&bb)?;
        for _ in 0..2 {
            let ax = self.apply_shifted(&x);
            let res: Vec<f64> = bb.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let dx = self.solve_shifted(&res)?;
            crate::linalg::axpy(1.0, &dx, &mut x);
        }
        project_out_ones(&mut x);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dense_adjacency_apply, dense_laplacian_apply};
    use rand::Rng;

    fn random_points(n: usize, d: usize, seed: u64, scale: f64) -> PointSet {
        let mut rng = crate::rng::stream_rng(seed, 0);
        PointSet::new(n, d, (0..n * d).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    #[test]
    fn rank_formula_small_cases() {
        assert_eq!(monomial_count(1, 1), Some(3));
        assert_eq!(monomial_count(3, 0), Some(1));
        assert_eq!(monomial_count(2, 2), Some(35));
        let p = random_points(4, 1, 1, 1.0);
        assert_eq!(poly_features(&p, 1).unwrap().rank(), 3);
    }

    #[test]
    fn q_zero_is_all_ones() {
        let p = random_points(5, 3, 2, 1.0);
        let f = poly_features(&p, 0).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.left_row(2), &[1.0]);
        assert_eq!(f.right_row(4), &[1.0]);
    }

    #[test]
    fn squared_distance_column() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let f = poly_features(&p, 1).unwrap();
        let out = lowrank_adjacency_apply(&f, &f.diagonal(), &[1.0, 0.0, 0.0]).unwrap();
        for (o, e) in out.iter().zip([0.0, 1.0, 4.0]) {
            assert!((o - e).abs() < 1e-12);
        }
    }

    #[test]
    fn factor_entries_match_distances() {
        let p = random_points(30, 2, 3, 1.0);
        let f = poly_features(&p, 2).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                if i != j {
                    let z = p.sq_dist(i, j);
                    assert!((f.entry(i, j) - z * z).abs() <= 1e-12 * (1.0 + z * z));
                }
            }
        }
    }

    #[test]
    fn rational_taylor_matches_dense() {
        let p = random_points(100, 2, 4, 0.24);
        let k = KernelSpec::RationalInv;
        let y: Vec<f64> = (0..100).map(|i| ((i * 7) % 11) as f64 / 11.0 - 0.5).collect();
        let eps = 1e-8;
        let op = TaylorOperator::new(&p, &k, eps).unwrap();
        let fast = op.apply(&y).unwrap();
        let dense = dense_adjacency_apply(&p, &k, &y).unwrap();
        assert!(crate::linalg::max_abs_diff(&fast, &dense) <= eps * norm_inf(&y));
    }

    #[test]
    fn rational_refuses_wide_range() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(TaylorOperator::new(&p, &KernelSpec::RationalInv, 1e-6).is_err());
    }

    #[test]
    fn lap_from_adj_two_points() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let k = KernelSpec::gaussian(1.0).unwrap();
        let z = lap_from_adj(|v, _| dense_adjacency_apply(&p, &k, v), &[1.0, 0.0], 1e-9).unwrap();
        let w = (-1.0f64).exp();
        assert!((z[0] - w).abs() < 1e-15 && (z[1] + w).abs() < 1e-15);
    }

    #[test]
    fn adj_from_lap_two_points() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let k = KernelSpec::gaussian(1.0).unwrap();
        let lap = |idx: &[usize], v: &[f64], _e: f64| dense_laplacian_apply(&p.subset(idx), &k, v);
        let a = adj_from_lap(2, lap, &[1.0, 0.0], 1e-9).unwrap();
        assert_eq!(a[0], 0.0);
        assert!((a[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(adj_from_lap(1, lap, &[3.0], 1e-9).unwrap(), vec![0.0]);
    }

    #[test]
    fn woodbury_single_resistor() {
        let p = PointSet::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let f = poly_features(&p, 1).unwrap();
        let w = 4.0;
        let x = woodbury_lap_solve(&f, &[w, w], &[1.0, -1.0]).unwrap();
        assert!((x[0] - 1.0 / (2.0 * w)).abs() < 1e-12);
        assert!((x[1] + 1.0 / (2.0 * w)).abs() < 1e-12);
        assert_eq!(woodbury_lap_solve(&f, &[w, w], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }
}
