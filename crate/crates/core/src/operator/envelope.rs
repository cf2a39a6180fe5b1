//! Nonincreasing analytic envelopes `e(n) ≥ |c_n|` with closed-form tails.

use crate::dyadic::gamma_coeff;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Envelope families with analytically summable squared tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Envelope {
    /// `scale · ratio^{n−1}`
    Geometric { scale: f64, ratio: f64 },
    /// `scale · n^{−exponent}`
    Power { scale: f64, exponent: f64 },
    /// `scale · n^{−exponent} · ln(n+1)^{−log_exponent}`
    PowerLog {
        scale: f64,
        exponent: f64,
        log_exponent: f64,
    },
    /// `scale · γ_{max(m,2)}` on level `m = ⌊log₂ n⌋` (constant on levels).
    DyadicSection3 { scale: f64 },
}

/// Weight `n^power · (log_a · ln n + log_b)^log_deg` with `log_deg ∈ {0, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub power: f64,
    pub log_a: f64,
    pub log_b: f64,
    pub log_deg: u32,
}

impl Weight {
    pub const ONE: Weight = Weight {
        power: 0.0,
        log_a: 0.0,
        log_b: 1.0,
        log_deg: 0,
    };

    pub fn power(power: f64) -> Self {
        Weight { power, ..Self::ONE }
    }

    pub fn log_square(a: f64, b: f64) -> Self {
        Weight {
            power: 0.0,
            log_a: a,
            log_b: b,
            log_deg: 2,
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        let l = self.log_a * n.ln() + self.log_b;
        n.powf(self.power) * l.powi(self.log_deg as i32)
    }
}

const EXPLICIT_CAP: u64 = 10_000_000;
const LEVEL_CAP: u32 = 5_000;

fn level_of(n: u64) -> u32 {
    63 - n.max(1).leading_zeros()
}

/// `Σ_{m≥L} 1/(m ln² m)` bound by the integral test (`L ≥ 2`).
fn inv_m_log2_tail(l: u32) -> f64 {
    let l = l.max(2) as f64;
    1.0 / (l * l.ln().powi(2)) + 1.0 / l.ln()
}

impl Envelope {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("envelope {self:?}: {msg}")));
        let scale = self.scale();
        if !(scale.is_finite() && scale >= 0.0) {
            return bad("scale must be finite and nonnegative");
        }
        match *self {
            Envelope::Geometric { ratio, .. } if !(0.0..1.0).contains(&ratio) => {
                bad("ratio must lie in [0, 1)")
            }
            Envelope::Power { exponent, .. } if !(exponent > 0.5 && exponent.is_finite()) => {
                bad("exponent must exceed 1/2")
            }
            Envelope::PowerLog {
                exponent,
                log_exponent,
                ..
            } if !(exponent > 0.5 && exponent.is_finite() && log_exponent >= 0.0) => {
                bad("exponent must exceed 1/2 and log exponent be nonnegative")
            }
            _ => Ok(()),
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Envelope::Geometric { scale, .. }
            | Envelope::Power { scale, .. }
            | Envelope::PowerLog { scale, .. }
            | Envelope::DyadicSection3 { scale } => scale,
        }
    }

    /// Same envelope multiplied by `f ≥ 0`.
    pub fn scaled(&self, f: f64) -> Self {
        let mut e = *self;
        match &mut e {
            Envelope::Geometric { scale, .. }
            | Envelope::Power { scale, .. }
            | Envelope::PowerLog { scale, .. }
            | Envelope::DyadicSection3 { scale } => *scale *= f,
        }
        e
    }

    /// `e(n)` for `n ≥ 1`.
    pub fn value(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Envelope::Geometric { scale, ratio } => scale * ratio.powf(nf - 1.0),
            Envelope::Power { scale, exponent } => scale * nf.powf(-exponent),
            Envelope::PowerLog {
                scale,
                exponent,
                log_exponent,
            } => scale * nf.powf(-exponent) * (nf + 1.0).ln().powf(-log_exponent),
            Envelope::DyadicSection3 { scale } => scale * gamma_coeff(level_of(n).max(2)),
        }
    }

    /// `ln e(2^m)²`, finite or `-inf`, without forming `2^m` as an integer.
    pub fn ln_level_sq(&self, m: u32) -> f64 {
        let mf = m as f64;
        let ln_n = mf * LN_2;
        let body = match *self {
            Envelope::Geometric { scale, ratio } => {
                if ratio == 0.0 {
                    return if m == 0 { 2.0 * scale.ln() } else { f64::NEG_INFINITY };
                }
                scale.ln() + (mf.exp2() - 1.0) * ratio.ln()
            }
            Envelope::Power { scale, exponent } => scale.ln() - exponent * ln_n,
            Envelope::PowerLog {
                scale,
                exponent,
                log_exponent,
            } => {
                let ln_ln = (mf.exp2() + 1.0).ln().ln();
                scale.ln() - exponent * ln_n - log_exponent * ln_ln
            }
            Envelope::DyadicSection3 { scale } => scale.ln() + gamma_coeff(m.max(2)).ln(),
        };
        2.0 * body
    }

    /// `sup_{m' ≥ m} e(2^{m'+1})² / e(2^{m'})²`.
    pub fn level_ratio_sup(&self, m: u32) -> f64 {
        match *self {
            Envelope::Geometric { ratio, .. } => {
                if ratio == 0.0 {
                    0.0
                } else {
                    (((m + 1) as f64).exp2() * ratio.ln()).exp()
                }
            }
            Envelope::Power { exponent, .. } | Envelope::PowerLog { exponent, .. } => {
                (-2.0 * exponent).exp2()
            }
            Envelope::DyadicSection3 { .. } => 0.5,
        }
    }

    /// Upper bound on `Σ_{n>m} e(n)²`.
    pub fn tail_sq(&self, m: u64) -> f64 {
        let mf = m as f64;
        match *self {
            Envelope::Geometric { scale, ratio } => {
                scale * scale * ratio.powf(2.0 * mf) / (1.0 - ratio * ratio)
            }
            Envelope::Power { scale, exponent } => scale * scale * power_tail(mf, 2.0 * exponent),
            Envelope::PowerLog {
                scale,
                exponent,
                log_exponent,
            } => {
                scale * scale
                    * (mf + 2.0).ln().powf(-2.0 * log_exponent)
                    * power_tail(mf, 2.0 * exponent)
            }
            Envelope::DyadicSection3 { scale } => {
                let n1 = m + 1;
                let l = level_of(n1);
                let in_level = ((1u64 << l) * 2 - n1) as f64;
                let mut acc = in_level * gamma_coeff(l.max(2)).powi(2);
                for lvl in (l + 1)..2 {
                    acc += (lvl as f64).exp2() * gamma_coeff(2).powi(2);
                }
                acc += inv_m_log2_tail((l + 1).max(2));
                scale * scale * acc
            }
        }
    }

    /// Upper bound on `Σ_{n>m} e(n)² w(n)`, or `None` when this routine
    /// cannot certify it.
    pub fn weighted_tail(&self, m: u64, w: &Weight) -> Option<f64> {
        if self.scale() == 0.0 {
            return Some(0.0);
        }
        if w.power == 0.0 && w.log_deg == 0 {
            return Some(self.tail_sq(m));
        }
        match *self {
            Envelope::Geometric { scale, ratio } => geometric_weighted_tail(scale, ratio, m, w),
            Envelope::Power { scale, exponent } => power_weighted_tail(scale, exponent, m, w),
            Envelope::PowerLog {
                scale,
                exponent,
                log_exponent,
            } => {
                let s = scale * ((m as f64) + 2.0).ln().powf(-log_exponent);
                power_weighted_tail(s, exponent, m, w)
            }
            Envelope::DyadicSection3 { .. } => None,
        }
    }

    /// Upper bound on `Σ_{m≥m0} e(2^m)² · 2^m · P(m)` where `P` has the given
    /// nonnegative coefficients (constant term first).
    pub fn level_tail(&self, m0: u32, poly: &[f64]) -> Option<f64> {
        if self.scale() == 0.0 {
            return Some(0.0);
        }
        let deg = poly.iter().rposition(|c| *c != 0.0).unwrap_or(0);
        let p = |m: u32| -> f64 {
            let mf = m as f64;
            poly.iter().rev().fold(0.0, |acc, c| acc * mf + c)
        };
        if let Envelope::DyadicSection3 { scale } = *self {
            if deg > 0 {
                return None;
            }
            let c0 = poly.first().copied().unwrap_or(0.0);
            let mut acc = 0.0;
            for lvl in m0..2 {
                acc += (lvl as f64).exp2() * gamma_coeff(2).powi(2);
            }
            acc += inv_m_log2_tail(m0.max(2));
            return Some(scale * scale * c0 * acc);
        }
        let mut acc = 0.0;
        for m in m0..m0 + LEVEL_CAP {
            let pm = p(m);
            let ln_t = self.ln_level_sq(m) + m as f64 * LN_2 + pm.ln();
            let t = ln_t.exp();
            if m >= 1 {
                let growth = ((m as f64 + 1.0) / m as f64).powi(deg as i32);
                let r = self.level_ratio_sup(m) * 2.0 * growth;
                if r < 1.0 {
                    return Some(acc + t / (1.0 - r));
                }
            }
            acc += t;
            if ln_t == f64::NEG_INFINITY && self.level_ratio_sup(m) == 0.0 {
                return Some(acc);
            }
        }
        None
    }

    /// Whether `Σ e(n)^p < ∞`.
    pub fn power_sum_converges(&self, p: f64) -> bool {
        const EPS: f64 = 1e-12;
        if self.scale() == 0.0 {
            return true;
        }
        match *self {
            Envelope::Geometric { .. } => true,
            Envelope::Power { exponent, .. } => p * exponent > 1.0 + EPS,
            Envelope::PowerLog {
                exponent,
                log_exponent,
                ..
            } => {
                let ps = p * exponent;
                ps > 1.0 + EPS || ((ps - 1.0).abs() <= EPS && p * log_exponent > 1.0 + EPS)
            }
            // Σ_m 2^m γ_m^p ~ Σ 2^{m(1−p/2)} m^{−p/2} (ln m)^{−p}
            Envelope::DyadicSection3 { .. } => p >= 2.0 - EPS,
        }
    }

    /// Whether `Σ e(n)² ln(1/e(n)) < ∞`.
    pub fn log_sum_converges(&self) -> bool {
        if self.scale() == 0.0 {
            return true;
        }
        match *self {
            Envelope::Geometric { .. } | Envelope::Power { .. } | Envelope::PowerLog { .. } => {
                // exponent > 1/2 is enforced by validation
                true
            }
            // Σ_m 2^m γ_m² · (m ln 2)/2 ~ Σ 1/ln m
            Envelope::DyadicSection3 { .. } => false,
        }
    }

    /// Human-readable description used in witnesses.
    pub fn describe(&self) -> String {
        match *self {
            Envelope::Geometric { scale, ratio } => format!("{scale}·{ratio}^(n−1)"),
            Envelope::Power { scale, exponent } => format!("{scale}·n^(−{exponent})"),
            Envelope::PowerLog {
                scale,
                exponent,
                log_exponent,
            } => format!("{scale}·n^(−{exponent})·ln(n+1)^(−{log_exponent})"),
            Envelope::DyadicSection3 { scale } => format!("{scale}·γ_max(⌊log₂n⌋,2)"),
        }
    }
}

/// `Σ_{n>m} n^{−q}` for `q > 1`.
fn power_tail(m: f64, q: f64) -> f64 {
    let n1 = m + 1.0;
    n1.powf(-q) + n1.powf(1.0 - q) / (q - 1.0)
}

fn geometric_weighted_tail(scale: f64, ratio: f64, m: u64, w: &Weight) -> Option<f64> {
    if ratio == 0.0 {
        return Some(if m == 0 { scale * scale * w.eval(1.0) } else { 0.0 });
    }
    let mut acc = 0.0;
    let mut n = m + 1;
    while n <= m + EXPLICIT_CAP {
        let nf = n as f64;
        let h = scale * scale * ratio.powf(2.0 * (nf - 1.0)) * w.eval(nf);
        let l = w.log_a * nf.ln() + w.log_b;
        if w.log_deg == 0 || l > 0.0 {
            let log_ratio = if w.log_deg == 0 {
                1.0
            } else {
                ((w.log_a * (nf + 1.0).ln() + w.log_b) / l).powi(w.log_deg as i32)
            };
            let r = ratio * ratio * ((nf + 1.0) / nf).powf(w.power) * log_ratio;
            if r < 1.0 {
                return Some(acc + h / (1.0 - r));
            }
        }
        acc += h;
        n += 1;
    }
    None
}

/// `∫_X^∞ x^{−q} (a ln x + b)^k dx` for `q > 1`, `k ∈ {0, 2}`.
fn power_log_integral(x: f64, q: f64, a: f64, b: f64, k: u32) -> f64 {
    let beta = q - 1.0;
    let l = x.ln();
    let xb = x.powf(-beta);
    let j0 = xb / beta;
    if k == 0 {
        return j0;
    }
    let j1 = xb * (l / beta + 1.0 / (beta * beta));
    let j2 = xb * (l * l / beta + 2.0 * l / (beta * beta) + 2.0 / beta.powi(3));
    a * a * j2 + 2.0 * a * b * j1 + b * b * j0
}

fn power_weighted_tail(scale: f64, exponent: f64, m: u64, w: &Weight) -> Option<f64> {
    let q = 2.0 * exponent - w.power;
    if q <= 1.0 {
        return None;
    }
    let h = |x: f64| scale * scale * x.powf(-q) * (w.log_a * x.ln() + w.log_b).powi(w.log_deg as i32);
    // the summand decreases once a·ln x + b ≥ 2a/q
    let x0 = if w.log_deg == 0 || w.log_a == 0.0 {
        1.0
    } else {
        ((2.0 * w.log_a / q - w.log_b) / w.log_a).exp().max(1.0)
    };
    let n0 = (m + 1).max(x0.ceil() as u64);
    if n0 - (m + 1) > EXPLICIT_CAP {
        return None;
    }
    let mut acc = 0.0;
    for n in (m + 1)..n0 {
        acc += h(n as f64);
    }
    let x = n0 as f64;
    let integral = scale * scale * power_log_integral(x, q, w.log_a, w.log_b, w.log_deg);
    Some(acc + h(x) + integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_tail(e: &Envelope, m: u64, w: &Weight, upto: u64) -> f64 {
        crate::sum::neumaier(((m + 1)..=upto).map(|n| e.value(n).powi(2) * w.eval(n as f64)))
    }

    #[test]
    fn geometric_tail_is_exact() {
        let e = Envelope::Geometric {
            scale: 1.0,
            ratio: 0.5,
        };
        // Σ_{n>3} 4^{-(n-1)} = 4^{-3}/(1 − 1/4)
        assert!((e.tail_sq(3) - 4f64.powi(-3) / 0.75).abs() < 1e-16);
    }

    #[test]
    fn tails_dominate_brute_force_sums() {
        let envs = [
            Envelope::Geometric {
                scale: 2.0,
                ratio: 0.9,
            },
            Envelope::Power {
                scale: 1.0,
                exponent: 0.75,
            },
            Envelope::PowerLog {
                scale: 1.0,
                exponent: 1.0,
                log_exponent: 1.0,
            },
            Envelope::Power {
                scale: 3.0,
                exponent: 2.0,
            },
        ];
        let weights = [Weight::ONE, Weight::power(0.25), Weight::log_square(1.0, 0.5)];
        for e in &envs {
            for w in &weights {
                for m in [0u64, 5, 100] {
                    let Some(bound) = e.weighted_tail(m, w) else {
                        continue;
                    };
                    let partial = brute_tail(e, m, w, 200_000);
                    assert!(bound >= partial, "{e:?} {w:?} m={m}: {bound} < {partial}");
                }
            }
        }
    }

    #[test]
    fn dyadic_tail_dominates_levels() {
        let e = Envelope::DyadicSection3 { scale: 1.0 };
        let partial: f64 = (5..=2u64.pow(22)).map(|n| e.value(n).powi(2)).sum();
        assert!(e.tail_sq(4) >= partial);
    }

    #[test]
    fn level_tail_geometric_and_power() {
        let e = Envelope::Power {
            scale: 1.0,
            exponent: 2.0,
        };
        // Σ_{m≥3} 2^{-4m} 2^m (3 + m ln2)
        let brute: f64 = (3..200)
            .map(|m| (-4.0 * m as f64).exp2() * (m as f64).exp2() * (3.0 + m as f64 * LN_2))
            .sum();
        let b = e.level_tail(3, &[3.0, LN_2]).unwrap();
        assert!(b >= brute && b < 2.0 * brute);
        let d = Envelope::DyadicSection3 { scale: 1.0 };
        assert!(d.level_tail(4, &[1.0, 1.0]).is_none());
        assert!(d.level_tail(4, &[2.0]).is_some());
    }

    #[test]
    fn summability_boundaries() {
        let p = Envelope::Power {
            scale: 1.0,
            exponent: 1.5,
        };
        assert!(!p.power_sum_converges(2.0 / 3.0));
        assert!(p.power_sum_converges(0.7));
        let pl = Envelope::PowerLog {
            scale: 1.0,
            exponent: 1.0,
            log_exponent: 2.0,
        };
        assert!(pl.power_sum_converges(1.0));
        let d = Envelope::DyadicSection3 { scale: 1.0 };
        assert!(d.power_sum_converges(2.0) && !d.power_sum_converges(1.9));
        assert!(!d.log_sum_converges());
    }
}
