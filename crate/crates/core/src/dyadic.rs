//! Exact dyadic bookkeeping for the sequence
//! `r_{2^m+k} = (2k + 1 − 2^m) / 2^m`, `0 ≤ k < 2^m`, and for the abscissas at
//! which relevant-set series are evaluated.
//!
//! Every finite `f64` is itself a dyadic rational, so a floating-point
//! abscissa inside (−1, 1) always coincides with some `r_n`. [`Abscissa`]
//! therefore also admits reduced fractions with odd denominator, which are
//! provably off the dyadic grid at every level.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Level `m` and offset `k` of index `n = 2^m + k`.
pub fn split_index(n: u64) -> (u32, u64) {
    assert!(n >= 1, "dyadic indices start at 1");
    let m = 63 - n.leading_zeros();
    (m, n - (1u64 << m))
}

/// `r_n` as the exact pair `(numerator, level)` meaning `numerator / 2^level`.
pub fn dyadic_r_exact(n: u64) -> (i64, u32) {
    let (m, k) = split_index(n);
    let num = 2 * k as i128 + 1 - (1i128 << m);
    (num as i64, m)
}

/// `r_n` rounded to the nearest double (exact for `n < 2^53`).
pub fn dyadic_r(n: u64) -> f64 {
    let (num, m) = dyadic_r_exact(n);
    num as f64 * (-(m as f64)).exp2()
}

/// `γ_0 = γ_1 = 0`, `γ_m = 1 / (2^{m/2} √m ln m)` for `m ≥ 2` (natural log).
pub fn gamma_coeff(m: u32) -> f64 {
    if m < 2 {
        return 0.0;
    }
    let mf = m as f64;
    (-0.5 * mf).exp2() / (mf.sqrt() * mf.ln())
}

/// Smallest `q ≥ 0` with `x·2^q` an integer.
pub fn fractional_bits(x: f64) -> u32 {
    if x == 0.0 || !x.is_finite() {
        return 0;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let e2 = e + mant.trailing_zeros() as i32;
    if e2 >= 0 {
        0
    } else {
        (-e2) as u32
    }
}

/// Position of a dyadic grid point: its level and, when it fits, its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub level: u32,
    pub index: Option<u64>,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(n) => write!(f, "n = {n} (level {})", self.level),
            None => write!(f, "level {} (index beyond 2^63)", self.level),
        }
    }
}

/// The grid point equal to the double `x`, if any. Every double in (−1, 1) is
/// one.
pub fn grid_point_of(x: f64) -> Option<GridPoint> {
    if !(x > -1.0 && x < 1.0) {
        return None;
    }
    let q = fractional_bits(x);
    let index = if q <= 62 {
        // x·2^q is odd (or x = 0 at q = 0); k = (x·2^q + 2^q − 1)/2
        let scaled = (x * (q as f64).exp2()) as i128;
        let k = (scaled + (1i128 << q) - 1) / 2;
        Some((1u64 << q) + k as u64)
    } else {
        None
    };
    Some(GridPoint { level: q, index })
}

/// A real abscissa, either a double or a reduced fraction with odd denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Abscissa {
    Float(f64),
    Fraction { num: i64, den: u64 },
}

const MAX_DEN: u64 = 1 << 31;

impl Abscissa {
    /// Reduced fraction `num/den`; `den` must be odd after reduction or the
    /// value collapses to a double.
    pub fn fraction(num: i64, den: u64) -> Result<Self> {
        if den == 0 || den >= MAX_DEN {
            return Err(Error::InvalidArgument(format!(
                "fraction denominator must lie in [1, 2^31), got {den}"
            )));
        }
        let g = gcd(num.unsigned_abs(), den);
        let (num, den) = (num / g as i64, den / g);
        if den % 2 == 0 {
            return Err(Error::InvalidArgument(
                "fraction abscissas need an odd denominator".into(),
            ));
        }
        if den == 1 {
            return Ok(Abscissa::Float(num as f64));
        }
        Ok(Abscissa::Fraction { num, den })
    }

    pub fn value(&self) -> f64 {
        match *self {
            Abscissa::Float(x) => x,
            Abscissa::Fraction { num, den } => num as f64 / den as f64,
        }
    }

    /// Dyadic grid point coinciding with this abscissa.
    pub fn grid_point(&self) -> Option<GridPoint> {
        match *self {
            Abscissa::Float(x) => grid_point_of(x),
            Abscissa::Fraction { .. } => None,
        }
    }

    /// Lower bound on `min |r − x|` over level-`m` grid points `r ≠ x`.
    pub fn level_gap(&self, m: u32) -> f64 {
        match *self {
            Abscissa::Float(x) => float_level_gap(x, m),
            Abscissa::Fraction { num, den } => fraction_level_gap(num, den, m),
        }
    }

    /// A pair `(m0, bound(m))` such that for `m ≥ m0` the gap at level `m` is
    /// at least `2^{-m}/bound_factor` — used for analytic level tails.
    pub fn asymptotic_gap_factor(&self) -> (u32, f64) {
        match *self {
            Abscissa::Float(x) => (fractional_bits(x) + 1, 1.0),
            Abscissa::Fraction { den, .. } => (61, den as f64),
        }
    }
}

impl From<f64> for Abscissa {
    fn from(x: f64) -> Self {
        Abscissa::Float(x)
    }
}

impl fmt::Display for Abscissa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Abscissa::Float(x) => write!(f, "{x}"),
            Abscissa::Fraction { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn float_level_gap(x: f64, m: u32) -> f64 {
    let q = fractional_bits(x);
    // distinct dyadics with q and m fractional bits differ by a multiple of 2^-max
    let analytic = if m == q {
        (1.0 - m as f64).exp2()
    } else {
        (-(m.max(q) as f64)).exp2()
    };
    if m > 52 {
        return analytic;
    }
    let scale = (m as f64).exp2();
    let top = (1u64 << m) as i64 - 1;
    let guess = (((x + 1.0) * scale - 1.0) / 2.0).floor() as i64;
    let mut best = f64::INFINITY;
    for k in (guess - 2)..=(guess + 2) {
        if k < 0 || k > top {
            continue;
        }
        let r = (2 * k + 1 - (1i64 << m)) as f64 / scale;
        let d = (r - x).abs();
        if d > 0.0 {
            best = best.min(d);
        }
    }
    // points may be far away when x lies outside (−1, 1)
    let ends = [(1.0 - 2f64.powi(-(m as i32))) - x, x - (-1.0 + 2f64.powi(-(m as i32)))];
    if x.abs() >= 1.0 {
        best = best.min(ends[0].abs().min(ends[1].abs()));
    }
    (best * (1.0 - 1e-15)).max(analytic)
}

fn fraction_level_gap(num: i64, den: u64, m: u32) -> f64 {
    let b = den as f64;
    let analytic = 1.0 / (b * (m as f64).exp2());
    if m > 60 {
        return analytic;
    }
    let x = num as f64 / b;
    let scale = (m as f64).exp2();
    let top = (1i128 << m) - 1;
    let guess = (((x + 1.0) * scale - 1.0) / 2.0).floor() as i128;
    let den_i = den as i128;
    let mut best: Option<i128> = None;
    for k in [guess - 1, guess, guess + 1, guess + 2, 0, top] {
        if k < 0 || k > top {
            continue;
        }
        let rnum = 2 * k + 1 - (1i128 << m);
        let d = (rnum * den_i - num as i128 * (1i128 << m)).abs();
        best = Some(best.map_or(d, |b: i128| b.min(d)));
    }
    let d = best.expect("level has at least one point") as f64 / (b * scale);
    (d * (1.0 - 1e-15)).max(analytic)
}
