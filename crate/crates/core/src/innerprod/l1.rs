//! Linear `l1` sketch: i.i.d. standard Cauchy projections, recovered by the median of
//! absolute values.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_L1_C: f64 = 4.0;

/// `ceil((c / eps^2) ln(1/delta))`, at least one.
pub fn l1_rows(eps: f64, delta: f64, c: f64) -> usize {
    ((c / (eps * eps)) * (1.0 / delta).ln()).ceil().max(1.0) as usize
}

pub(crate) fn cauchy<R: Rng>(rng: &mut R) -> f64 {
    (PI * (rng.random::<f64>() - 0.5)).tan()
}

/// Median of `|y_i|`; zero for an empty slice.
pub fn recover_norm(y: &[f64]) -> f64 {
    let mut a: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    median_in_place(&mut a)
}

pub(crate) fn median_in_place(a: &mut [f64]) -> f64 {
    let m = a.len();
    if m == 0 {
        return 0.0;
    }
    let mid = m / 2;
    let (lo, hi, _) = a.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *hi;
    if m % 2 == 1 {
        upper
    } else {
        let lower = lo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[derive(Debug, Clone)]
pub struct L1Sketch {
    dim: usize,
    rows: usize,
    /// Row-major `rows x dim`.
    c: Vec<f64>,
}

impl L1Sketch {
    pub fn new(dim: usize, eps: f64, delta: f64, seed: u64) -> Result<Self> {
        Self::with_constant(dim, eps, delta, DEFAULT_L1_C, seed)
    }

    pub fn with_constant(dim: usize, eps: f64, delta: f64, c: f64, seed: u64) -> Result<Self> {
        for (name, v) in [("eps", eps), ("delta", delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        let rows = l1_rows(eps, delta, c);
        let mut rng = stream_rng(seed, 0x11);
        let c = (0..rows * dim).map(|_| cauchy(&mut rng)).collect();
        Ok(Self { dim, rows, c })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `C v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        Ok(self
            .c
            .chunks_exact(self.dim.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Estimate of `||v||_1`.
    pub fn estimate(&self, v: &[f64]) -> Result<f64> {
        Ok(recover_norm(&self.apply(v)?))
    }
}

/// Sketch of `dim`-dimensional vectors with `ceil((4 / eps^2) ln(1/delta))` rows.
pub fn l1_sketch(dim: usize, eps: f64, delta: f64, seed: u64) -> Result<L1Sketch> {
    L1Sketch::new(dim, eps, delta, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_estimates_zero() {
        let s = l1_sketch(5, 0.2, 0.05, 1).unwrap();
        assert_eq!(s.estimate(&[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn row_count() {
        assert_eq!(l1_rows(0.2, 0.05, 4.0), 300);
        assert_eq!(l1_sketch(3, 0.2, 0.05, 0).unwrap().rows(), 300);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(recover_norm(&[-3.0, 1.0, 2.0]), 2.0);
        assert_eq!(recover_norm(&[4.0, -1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn linear() {
        let s = l1_sketch(4, 0.5, 0.1, 7).unwrap();
        let (u, v) = ([1.0, -2.0, 0.5, 3.0], [0.25, 1.0, -1.0, 2.0]);
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let (su, sv, ss) = (s.apply(&u).unwrap(), s.apply(&v).unwrap(), s.apply(&sum).unwrap());
        for i in 0..s.rows() {
            assert!((su[i] + sv[i] - ss[i]).abs() <= 1e-9 * (1.0 + ss[i].abs()));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(l1_sketch(3, 0.0, 0.1, 0).is_err());
        assert!(l1_sketch(3, 0.1, 1.0, 0).is_err());
    }
}
