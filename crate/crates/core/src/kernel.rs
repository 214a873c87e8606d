//! Built-in kernel families `f: R>=0 -> R`, with `K(u, v) = f(||u - v||^2)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `exp(-z / delta)`.
    Gaussian { delta: f64 },
    /// `z^q` for an integer `q >= 0`.
    PowerPos { q: u32 },
    /// `z^(-q)`, singular at zero.
    PowerNeg { q: f64 },
    /// `1 / (1 + z)`.
    RationalInv,
    /// `exp(-z)` for `z <= cutoff`, `exp(-cutoff)` beyond.
    PiecewiseExp { cutoff: f64 },
    /// `1` if `z <= theta`, else `0`.
    Threshold { theta: f64 },
    /// ReLU neural tangent kernel on unit vectors, `z` in `[0, 4]`.
    NtkRelu,
}

impl KernelSpec {
    pub fn gaussian(delta: f64) -> Result<Self> {
        positive("delta", delta)?;
        Ok(Self::Gaussian { delta })
    }

    pub fn power_neg(q: f64) -> Result<Self> {
        positive("q", q)?;
        Ok(Self::PowerNeg { q })
    }

    pub fn piecewise_exp(cutoff: f64) -> Result<Self> {
        positive("cutoff", cutoff)?;
        Ok(Self::PiecewiseExp { cutoff })
    }

    pub fn threshold(theta: f64) -> Result<Self> {
        positive("theta", theta)?;
        Ok(Self::Threshold { theta })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { delta } => positive("delta", delta),
            Self::PowerNeg { q } => positive("q", q),
            Self::PiecewiseExp { cutoff } => positive("cutoff", cutoff),
            Self::Threshold { theta } => positive("theta", theta),
            Self::PowerPos { .. } | Self::RationalInv | Self::NtkRelu => Ok(()),
        }
    }

    pub fn singular_at_zero(&self) -> bool {
        matches!(self, Self::PowerNeg { .. })
    }

    /// Evaluates `f(z)` with domain checks.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::Domain(format!("{self}: z = {z} is negative or NaN")));
        }
        match *self {
            Self::PowerNeg { .. } if z == 0.0 => {
                Err(Error::Domain(format!("{self}: z = 0 (coincident points)")))
            }
            Self::NtkRelu if z > 4.0 => Err(Error::Domain(format!(
                "{self}: z = {z} exceeds 4 (inputs must be unit vectors)"
            ))),
            _ => Ok(self.value(z)),
        }
    }

    /// Evaluates `f(z)` without domain checks. Callers validate inputs once.
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Self::Gaussian { delta } => (-z / delta).exp(),
            Self::PowerPos { q } => z.powi(q as i32),
            Self::PowerNeg { q } => z.powf(-q),
            Self::RationalInv => 1.0 / (1.0 + z),
            Self::PiecewiseExp { cutoff } => (-z.min(cutoff)).exp(),
            Self::Threshold { theta } => {
                if z <= theta {
                    1.0
                } else {
                    0.0
                }
            }
            Self::NtkRelu => {
                let c = 1.0 - 0.5 * z;
                (PI - c.clamp(-1.0, 1.0).acos()) * c / PI
            }
        }
    }

    /// Checks the kernel is defined on squared distances in `[lo, hi]`.
    pub fn check_range(&self, lo: f64, hi: f64) -> Result<()> {
        self.eval(lo)?;
        self.eval(hi)?;
        Ok(())
    }

    /// `Some(true)` if non-increasing in `z`, `Some(false)` if non-decreasing.
    pub fn monotone_decreasing(&self) -> Option<bool> {
        match self {
            Self::PowerPos { .. } => Some(false),
            Self::NtkRelu => None,
            _ => Some(true),
        }
    }

    /// Smallest and largest value of `f` on `[lo, hi]`, when `f` is monotone there.
    pub fn value_range(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let (a, b) = (self.value(lo), self.value(hi));
        match self.monotone_decreasing()? {
            true => Some((b, a)),
            false => Some((a, b)),
        }
    }

    /// Maclaurin series of `f`, where one exists on a useful interval.
    pub fn taylor(&self) -> Option<TaylorSeries> {
        match *self {
            Self::Gaussian { delta } => Some(TaylorSeries {
                kind: SeriesKind::Exp { rate: 1.0 / delta },
                valid_up_to: f64::INFINITY,
            }),
            Self::PowerPos { q } => Some(TaylorSeries {
                kind: SeriesKind::Monomial { degree: q },
                valid_up_to: f64::INFINITY,
            }),
            Self::RationalInv => Some(TaylorSeries {
                kind: SeriesKind::Geometric,
                valid_up_to: 1.0,
            }),
            Self::PiecewiseExp { cutoff } => Some(TaylorSeries {
                kind: SeriesKind::Exp { rate: 1.0 },
                valid_up_to: cutoff,
            }),
            _ => None,
        }
    }

    /// `L` such that `f` is `(c, L)`-multiplicatively Lipschitz on all of `R>0`, if finite.
    pub fn global_lipschitz_order(&self, c: f64) -> Option<f64> {
        match *self {
            Self::PowerPos { q } => Some(q as f64),
            Self::PowerNeg { q } => Some(q),
            Self::RationalInv => Some(1.0),
            Self::PiecewiseExp { cutoff } => Some(cutoff * (c - 1.0) / (c * c.ln())),
            _ => None,
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {x}")))
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { delta } => write!(f, "gaussian:{delta}"),
            Self::PowerPos { q } => write!(f, "power:{q}"),
            Self::PowerNeg { q } => write!(f, "invpower:{q}"),
            Self::RationalInv => write!(f, "rational"),
            Self::PiecewiseExp { cutoff } => write!(f, "piecewise-exp:{cutoff}"),
            Self::Threshold { theta } => write!(f, "threshold:{theta}"),
            Self::NtkRelu => write!(f, "ntk"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| Error::Parse(format!("kernel {name} needs :{what}")))?;
            a.parse::<f64>()
                .map_err(|e| Error::Parse(format!("kernel {name}: bad {what} {a:?}: {e}")))
        };
        match name {
            "gaussian" => Self::gaussian(if arg.is_some() { num("delta")? } else { 1.0 }),
            "power" => {
                let q = num("q")?;
                if q < 0.0 || q.fract() != 0.0 || q > u32::MAX as f64 {
                    return Err(Error::Parse(format!("power kernel needs an integer q >= 0, got {q}")));
                }
                Ok(Self::PowerPos { q: q as u32 })
            }
            "invpower" => Self::power_neg(num("q")?),
            "rational" => Ok(Self::RationalInv),
            "piecewise-exp" => Self::piecewise_exp(num("L")?),
            "threshold" => Self::threshold(num("t")?),
            "ntk" => Ok(Self::NtkRelu),
            _ => Err(Error::Parse(format!("unknown kernel {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SeriesKind {
    /// `sum (-rate)^l z^l / l!`
    Exp { rate: f64 },
    /// `z^degree`
    Monomial { degree: u32 },
    /// `sum (-1)^l z^l`
    Geometric,
}

/// Coefficient stream `c_0, c_1, ...` with `f(z) = sum c_l z^l` on `[0, valid_up_to)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorSeries {
    kind: SeriesKind,
    valid_up_to: f64,
}

impl TaylorSeries {
    pub fn coeff(&self, l: u32) -> f64 {
        match self.kind {
            SeriesKind::Exp { rate } => {
                let mut c = 1.0;
                for k in 1..=l {
                    c *= -rate / k as f64;
                }
                c
            }
            SeriesKind::Monomial { degree } => f64::from(u8::from(l == degree)),
            SeriesKind::Geometric => {
                if l.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn valid_up_to(&self) -> f64 {
        self.valid_up_to
    }

    /// Upper bound on `sum_{l > q} |c_l| z_max^l`.
    pub fn tail_bound(&self, q: u32, z_max: f64) -> f64 {
        match self.kind {
            SeriesKind::Monomial { degree } => {
                if q >= degree {
                    0.0
                } else {
                    z_max.powi(degree as i32)
                }
            }
            SeriesKind::Geometric => {
                if z_max >= 1.0 {
                    f64::INFINITY
                } else {
                    z_max.powi(q as i32 + 1) / (1.0 - z_max)
                }
            }
            SeriesKind::Exp { rate } => {
                // Terms decay by x/(l+1) each step once l + 1 > x.
                let x = rate * z_max;
                let mut term = 1.0;
                for l in 1..=q + 1 {
                    term *= x / l as f64;
                }
                let ratio = x / (q as f64 + 2.0);
                if ratio < 1.0 {
                    term / (1.0 - ratio)
                } else {
                    let mut sum = term;
                    let mut t = term;
                    for l in q + 2..q + 2 + 4096 {
                        t *= x / l as f64;
                        sum += t;
                        if t < sum * 1e-18 {
                            break;
                        }
                    }
                    sum
                }
            }
        }
    }

    /// Smallest degree `q` with `tail_bound(q, z_max) <= tol`, searching up to `max_degree`.
    pub fn degree_for(&self, z_max: f64, tol: f64, max_degree: u32) -> Option<u32> {
        (0..=max_degree).find(|&q| self.tail_bound(q, z_max) <= tol)
    }

    pub fn partial_sum(&self, q: u32, z: f64) -> f64 {
        let mut s = 0.0;
        let mut zp = 1.0;
        for l in 0..=q {
            s += self.coeff(l) * zp;
            zp *= z;
        }
        s
    }
}

/// Outcome of a numerical multiplicative-Lipschitz check.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCheck {
    pub holds: bool,
    /// Largest `max(r, 1/r)` seen over `r = f(cz)/f(z)`.
    pub worst_ratio: f64,
    /// First `(z, c, ratio)` violating the bound.
    pub violation: Option<(f64, f64, f64)>,
}

/// Number of scale factors sampled in `[1/C, C]` by the Lipschitz checks.
const LIPSCHITZ_SCALES: usize = 65;

fn lipschitz_scales(c: f64) -> impl Iterator<Item = f64> {
    let m = LIPSCHITZ_SCALES;
    (0..m).map(move |i| c.powf(2.0 * i as f64 / (m - 1) as f64 - 1.0))
}

/// Checks `C^-L <= f(cz)/f(z) <= C^L` for sampled `c` in `[1/C, C]` at every grid point.
pub fn check_mult_lipschitz(k: &KernelSpec, c: f64, l: f64, grid: &[f64]) -> LipschitzCheck {
    let bound = c.powf(l) * (1.0 + 1e-12);
    let mut worst: f64 = 1.0;
    let mut violation = None;
    for &z in grid {
        let fz = k.value(z);
        for s in lipschitz_scales(c) {
            let r = k.value(s * z) / fz;
            let spread = if r > 0.0 && r.is_finite() { r.max(1.0 / r) } else { f64::INFINITY };
            if !(spread <= worst) {
                worst = spread;
            }
            if violation.is_none() && !(spread <= bound) {
                violation = Some((z, s, r));
            }
        }
    }
    LipschitzCheck {
        holds: violation.is_none(),
        worst_ratio: worst,
        violation,
    }
}

/// Smallest `L` for which the sampled `(c, L)` bound holds on `grid`.
pub fn lipschitz_order_on(k: &KernelSpec, c: f64, grid: &[f64]) -> f64 {
    check_mult_lipschitz(k, c, f64::INFINITY, grid).worst_ratio.ln() / c.ln()
}

/// `m` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m <= 1 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..m)
        .map(|i| (a + (b - a) * i as f64 / (m - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ntk_frozen_values() {
        assert_eq!(KernelSpec::NtkRelu.eval(0.0).unwrap(), 1.0);
        assert_eq!(KernelSpec::NtkRelu.eval(2.0).unwrap(), 0.0);
        assert!(KernelSpec::NtkRelu.eval(4.5).is_err());
    }

    #[test]
    fn gaussian_at_one() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        assert_relative_eq!(k.eval(1.0).unwrap(), 0.36787944117144233, max_relative = 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(KernelSpec::RationalInv.eval(-1.0).is_err());
        assert!(KernelSpec::PowerNeg { q: 1.0 }.eval(0.0).is_err());
        assert!(KernelSpec::PowerNeg { q: 1.0 }.eval(2.0).is_ok());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["gaussian:0.5", "power:3", "invpower:2", "rational", "piecewise-exp:8", "threshold:1.5", "ntk"] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("power:1.5".parse::<KernelSpec>().is_err());
        assert!("cosine".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn taylor_partial_sums_converge() {
        for k in [KernelSpec::gaussian(2.0).unwrap(), KernelSpec::RationalInv, KernelSpec::PowerPos { q: 3 }] {
            let t = k.taylor().unwrap();
            let top = t.valid_up_to().min(4.0) * 0.9;
            for z in log_grid(1e-3, top, 20) {
                let q = t.degree_for(z, 1e-12, 2000).unwrap();
                assert!((t.partial_sum(q, z) - k.value(z)).abs() <= 1e-11, "{k} at {z}");
            }
        }
    }

    #[test]
    fn gaussian_degree_for_unit_range() {
        let t = KernelSpec::gaussian(1.0).unwrap().taylor().unwrap();
        assert_eq!(t.degree_for(1.0, 1e-6 / 1000.0, 100), Some(12));
        assert_eq!(t.degree_for(1.0, 1e-6 / 400.0, 100), Some(11));
    }

    #[test]
    fn lipschitz_examples() {
        let grid = log_grid(1e-3, 1e3, 64);
        assert!(check_mult_lipschitz(&KernelSpec::PowerPos { q: 2 }, 2.0, 2.0, &grid).holds);
        let g = KernelSpec::gaussian(1.0).unwrap();
        let bad = check_mult_lipschitz(&g, 2.0, 8.0, &[0.5, 100.0]);
        assert!(!bad.holds);
        assert_eq!(bad.violation.unwrap().0, 100.0);
        let pw = KernelSpec::piecewise_exp(5.0).unwrap();
        assert!(check_mult_lipschitz(&pw, 2.0, 5.0, &grid).holds);
        assert!(pw.global_lipschitz_order(2.0).unwrap() <= 5.0);
    }

    #[test]
    fn lipschitz_order_of_power() {
        let grid = log_grid(0.1, 10.0, 16);
        let l = lipschitz_order_on(&KernelSpec::PowerNeg { q: 2.0 }, 2.0, &grid);
        assert_relative_eq!(l, 2.0, max_relative = 1e-9);
    }
}
