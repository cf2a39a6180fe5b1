//! Gauss–Legendre rules and a globally adaptive integrator.
//!
//! Nodes are computed by Newton iteration on the three-term Legendre recurrence
//! and cached per order.

use crate::{Error, Result, C64};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(c + h * x) * *w;
        }
        acc * h
    }
}

/// P_n(x) and P_n'(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule of order `n`.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("quadrature cache poisoned").get(&n) {
        return r.clone();
    }
    let rule = Arc::new(GaussLegendre::compute(n));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(n, rule.clone());
    rule
}

const ADAPT_ORDER: usize = 20;
const MAX_INTERVALS: usize = 20_000;

/// Globally adaptive integration of a complex-valued function over [a, b].
///
/// Each interval is estimated with a 20-point rule and with the sum over its
/// two halves; the interval with the largest discrepancy is split until the
/// total discrepancy is below `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<C64> {
    let rule = gauss_legendre(ADAPT_ORDER);
    struct Piece {
        a: f64,
        b: f64,
        value: C64,
        err: f64,
    }
    let eval = |a: f64, b: f64, f: &mut F| -> Piece {
        let whole = rule.integrate(a, b, &mut *f);
        let m = 0.5 * (a + b);
        let halves = rule.integrate(a, m, &mut *f) + rule.integrate(m, b, &mut *f);
        Piece {
            a,
            b,
            value: halves,
            err: (halves - whole).norm(),
        }
    };
    let mut pieces = vec![eval(a, b, &mut f)];
    loop {
        let total: C64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::InvalidArgument(format!(
                "adaptive quadrature did not converge (error estimate {err:e})"
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty");
        let p = pieces.swap_remove(idx);
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            // interval collapsed to machine resolution; accept its estimate
            pieces.push(Piece { err: 0.0, ..p });
            continue;
        }
        pieces.push(eval(p.a, m, &mut f));
        pieces.push(eval(m, p.b, &mut f));
    }
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    adaptive(|t| C64::new(f(t), 0.0), a, b, rel_tol, abs_tol).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for n in [1, 2, 5, 20, 64, 257] {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            for i in 0..n {
                assert!((r.nodes[i] + r.nodes[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let r = gauss_legendre(5);
        // ∫_{-1}^{1} x^8 = 2/9
        let v = r.integrate(-1.0, 1.0, |x| C64::new(x.powi(8), 0.0));
        assert!((v.re - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_near_singular_integrand() {
        // ∫_0^1 1/sqrt(x² + ε²) = asinh(1/ε)
        let eps = 1e-6;
        let v = adaptive_real(|x| 1.0 / (x * x + eps * eps).sqrt(), 0.0, 1.0, 1e-13, 0.0).unwrap();
        let exact = (1.0 / eps).asinh();
        assert!(((v - exact) / exact).abs() < 1e-12);
    }
}
