use crate::{Error, Result};
use serde::Serialize;

/// Strongest theorem covering summability exponents `(p, q)`.
///
/// Variants are ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    /// `(p, q) ∈ {(2, r), (r, 2) : r ∈ (1, 2]}` — no theorem applies.
    Uncovered,
    /// Log-square summability (the rest of `(0, 2]²`).
    Main,
    /// `Σ|α_n| < ∞` or `Σ|β_n| < ∞`.
    Gg,
    /// Exponent 1 for both.
    Fx,
    /// Exponent 2/3 for both.
    Fjkp,
}

/// Classifies `(p, q) ∈ (0, 2]²`.
pub fn theorem_region_membership(p: f64, q: f64) -> Result<Region> {
    let ok = |t: f64| t > 0.0 && t <= 2.0;
    if !(ok(p) && ok(q)) {
        return Err(Error::InvalidArgument(format!("(p, q) = ({p}, {q}) lies outside (0, 2]²")));
    }
    const TWO_THIRDS: f64 = 2.0 / 3.0;
    Ok(if p <= TWO_THIRDS && q <= TWO_THIRDS {
        Region::Fjkp
    } else if p <= 1.0 && q <= 1.0 {
        Region::Fx
    } else if p <= 1.0 || q <= 1.0 {
        Region::Gg
    } else if p == 2.0 || q == 2.0 {
        Region::Uncovered
    } else {
        Region::Main
    })
}
