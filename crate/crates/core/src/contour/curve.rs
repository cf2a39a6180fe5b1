use crate::operator::cnum;
use crate::quad::{adaptive_real, gauss_legendre};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// One smooth piece of a closed curve, traversed from `start()` to `end()`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    Segment {
        #[serde(with = "cnum")]
        from: C64,
        #[serde(with = "cnum")]
        to: C64,
    },
    /// `center + radius·e^{iθ}` for θ from `start_angle` to `end_angle`
    /// (counterclockwise when `end_angle > start_angle`).
    Arc {
        #[serde(with = "cnum")]
        center: C64,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
}

impl Piece {
    pub fn point(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { from, to } => from + (to - from) * t,
            Piece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => center + C64::from_polar(radius, start_angle + (end_angle - start_angle) * t),
        }
    }

    /// `dz/dt` for `t ∈ [0, 1]`.
    pub fn derivative(&self, t: f64) -> C64 {
        match *self {
            Piece::Segment { from, to } => to - from,
            Piece::Arc {
                radius,
                start_angle,
                end_angle,
                ..
            } => {
                let span = end_angle - start_angle;
                let th = start_angle + span * t;
                C64::new(0.0, 1.0) * C64::from_polar(radius * span, th)
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            Piece::Segment { from, to } => (to - from).norm(),
            Piece::Arc {
                radius,
                start_angle,
                end_angle,
                ..
            } => radius * (end_angle - start_angle).abs(),
        }
    }

    pub fn distance(&self, z: C64) -> f64 {
        match *self {
            Piece::Segment { from, to } => crate::operator::segment_distance(z, from, to),
            Piece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => {
                let w = z - center;
                let (lo, hi) = (start_angle.min(end_angle), start_angle.max(end_angle));
                // angle of w lifted into [lo, lo + 2π)
                let th = lo + (w.arg() - lo).rem_euclid(TAU);
                if th <= hi {
                    (w.norm() - radius).abs()
                } else {
                    (z - self.start()).norm().min((z - self.end()).norm())
                }
            }
        }
    }

    /// `∫_piece |dξ| / |λ − ξ|`: closed form on segments, adaptive quadrature
    /// on arcs.
    pub fn inverse_distance(&self, lambda: C64) -> Result<f64> {
        match *self {
            Piece::Segment { from, to } => segment_integral(from, to, lambda),
            Piece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => {
                if self.distance(lambda) == 0.0 {
                    return Err(Error::Pole {
                        location: "point on the arc".into(),
                        z: lambda,
                    });
                }
                // scale out the radius: ∫ dθ / |μ − e^{iθ}|
                let mu = (lambda - center) / radius;
                let (lo, hi) = (start_angle.min(end_angle), start_angle.max(end_angle));
                // split at the angle nearest to μ where the integrand peaks
                let peak = lo + (mu.arg() - lo).rem_euclid(TAU);
                let mut cuts = vec![lo];
                if peak > lo && peak < hi {
                    cuts.push(peak);
                }
                cuts.push(hi);
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    total += adaptive_real(|th| 1.0 / (mu - C64::from_polar(1.0, th)).norm(), w[0], w[1], 1e-13, 0.0)?;
                }
                Ok(total)
            }
        }
    }

    /// Gauss–Legendre nodes `(ξ_i, w_i·ξ'(t_i))` for `∫ f(ξ) dξ`.
    pub fn quadrature(&self, nodes: usize) -> Vec<(C64, C64)> {
        let gl = gauss_legendre(nodes);
        gl.nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&x, &w)| {
                let t = 0.5 * (x + 1.0);
                (self.point(t), self.derivative(t) * (0.5 * w))
            })
            .collect()
    }

    fn reversed(&self) -> Piece {
        match *self {
            Piece::Segment { from, to } => Piece::Segment { from: to, to: from },
            Piece::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => Piece::Arc {
                center,
                radius,
                start_angle: end_angle,
                end_angle: start_angle,
            },
        }
    }
}

/// `∫_{[p, q]} |dξ| / |λ − ξ|` in closed form.
///
/// With `s` the arclength along the segment, `a` the position of the foot of
/// the perpendicular from `λ` and `h` its length, the integral is
/// `asinh((L − a)/h) + asinh(a/h)`; logarithmic forms are used when the foot
/// falls outside the segment to avoid cancellation.
pub fn segment_integral(p: C64, q: C64, lambda: C64) -> Result<f64> {
    let d = q - p;
    let len = d.norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let e = d / len;
    let w = (lambda - p) * e.conj();
    let (along, perp) = (w.re, w.im.abs());
    let far = len - along;
    if along >= 0.0 && far >= 0.0 {
        if perp == 0.0 {
            return Err(Error::Pole {
                location: "point on the segment".into(),
                z: lambda,
            });
        }
        return Ok((far / perp).asinh() + (along / perp).asinh());
    }
    let hyp = |t: f64| t.hypot(perp);
    Ok(if along < 0.0 {
        // both endpoints ahead of the foot
        ((far + hyp(far)) / (-along + hyp(along))).ln()
    } else {
        ((along + hyp(along)) / (-far + hyp(far))).ln()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// A closed piecewise-smooth curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourCurve {
    pub pieces: Vec<Piece>,
    pub orientation: Orientation,
    /// Abscissa of the vertical chord for chord-plus-arc curves.
    pub x_cut: Option<f64>,
    pub side: Option<Side>,
}

const CLOSURE_TOL: f64 = 1e-12;

impl ContourCurve {
    /// Closed curve from pieces in traversal order; orientation is measured.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("a curve needs at least one piece".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            let next = &pieces[(i + 1) % pieces.len()];
            let gap = (p.end() - next.start()).norm();
            if gap > CLOSURE_TOL {
                return Err(Error::InvalidArgument(format!(
                    "curve is not closed: piece {i} ends {gap:e} away from the next start"
                )));
            }
            if let Piece::Arc { radius, .. } = p {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidArgument("arc radius must be positive".into()));
                }
            }
        }
        let mut c = ContourCurve {
            pieces,
            orientation: Orientation::Positive,
            x_cut: None,
            side: None,
        };
        c.orientation = if c.signed_area() >= 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        };
        Ok(c)
    }

    /// Counterclockwise circle.
    pub fn circle(center: C64, radius: f64) -> Result<Self> {
        Self::new(vec![Piece::Arc {
            center,
            radius,
            start_angle: 0.0,
            end_angle: TAU,
        }])
    }

    /// Closed polygon through `points` (the last point joins the first).
    /// Rejects self-intersecting polygons.
    pub fn polyline(points: &[C64]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidArgument("a polygon needs at least three vertices".into()));
        }
        let n = points.len();
        let pieces: Vec<Piece> = (0..n)
            .map(|i| Piece::Segment {
                from: points[i],
                to: points[(i + 1) % n],
            })
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_cross(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]) {
                    return Err(Error::InvalidArgument(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
        Self::new(pieces)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`, counterclockwise.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::polyline(&[
            C64::new(x0, y0),
            C64::new(x1, y0),
            C64::new(x1, y1),
            C64::new(x0, y1),
        ])
    }

    pub fn reversed(&self) -> Self {
        ContourCurve {
            pieces: self.pieces.iter().rev().map(Piece::reversed).collect(),
            orientation: match self.orientation {
                Orientation::Positive => Orientation::Negative,
                Orientation::Negative => Orientation::Positive,
            },
            x_cut: self.x_cut,
            side: self.side,
        }
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Piece::length).sum()
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.pieces.iter().map(|p| p.distance(z)).fold(f64::INFINITY, f64::min)
    }

    /// `∮ f(ξ) dξ` in traversal direction with `nodes` points per piece.
    pub fn integrate<F: FnMut(C64) -> C64>(&self, nodes: usize, mut f: F) -> C64 {
        self.quadrature(nodes).into_iter().map(|(z, dz)| f(z) * dz).sum()
    }

    pub fn quadrature(&self, nodes: usize) -> Vec<(C64, C64)> {
        self.pieces.iter().flat_map(|p| p.quadrature(nodes)).collect()
    }

    fn signed_area(&self) -> f64 {
        // ½ Im ∮ conj(ξ) dξ, exact for segments and arcs with 32 nodes to rounding
        0.5 * self.integrate(32, |z| z.conj()).im
    }

    /// Winding number of the curve around `z` (traversal direction).
    pub fn winding_number(&self, z: C64) -> Result<i32> {
        let d = self.distance(z);
        if d == 0.0 {
            return Err(Error::Pole {
                location: "point on the curve".into(),
                z,
            });
        }
        let mut total = 0.0;
        for p in &self.pieces {
            total += arg_change(p, z, 0.0, 1.0, 0);
        }
        Ok((total / TAU).round() as i32)
    }

    /// Index 1 with respect to the positively oriented curve.
    pub fn encloses(&self, z: C64) -> bool {
        let sign = if self.orientation == Orientation::Positive { 1 } else { -1 };
        self.winding_number(z).is_ok_and(|w| w * sign > 0)
    }

    /// `∫_γ |dξ| / |λ − ξ|`.
    pub fn inverse_distance(&self, lambda: C64) -> Result<f64> {
        self.pieces.iter().map(|p| p.inverse_distance(lambda)).sum()
    }

    /// Arc pieces only.
    pub fn arcs(&self) -> impl Iterator<Item = &Piece> {
        self.pieces.iter().filter(|p| matches!(p, Piece::Arc { .. }))
    }
}

fn arg_change(p: &Piece, z: C64, t0: f64, t1: f64, depth: u32) -> f64 {
    let a = p.point(t0) - z;
    let b = p.point(t1) - z;
    let delta = (b / a).arg();
    // straight segments subtend less than π, so the principal value is exact
    if matches!(p, Piece::Segment { .. }) || (delta.abs() < PI / 8.0 && (t1 - t0) <= 1.0 / 16.0) || depth > 48 {
        return delta;
    }
    let mid = 0.5 * (t0 + t1);
    arg_change(p, z, t0, mid, depth + 1) + arg_change(p, z, mid, t1, depth + 1)
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// The chord-plus-arc curve `γ_x^±`: the vertical chord of the unit circle at
/// `x` joined to the arc on the chosen side, positively oriented.
pub fn build_gamma(x: f64, side: Side) -> Result<ContourCurve> {
    if !(x.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("|x| = {} must be below 1", x.abs())));
    }
    let h = (1.0 - x * x).sqrt();
    let top = C64::new(x, h);
    let bottom = C64::new(x, -h);
    let a = x.acos();
    let pieces = match side {
        Side::Plus => vec![
            Piece::Arc {
                center: C64::new(0.0, 0.0),
                radius: 1.0,
                start_angle: -a,
                end_angle: a,
            },
            Piece::Segment { from: top, to: bottom },
        ],
        Side::Minus => vec![
            Piece::Segment { from: bottom, to: top },
            Piece::Arc {
                center: C64::new(0.0, 0.0),
                radius: 1.0,
                start_angle: a,
                end_angle: TAU - a,
            },
        ],
    };
    let mut c = ContourCurve::new(pieces)?;
    c.x_cut = Some(x);
    c.side = Some(side);
    Ok(c)
}

/// `∫_{ℓ_x} |dξ| / |λ − ξ|` over the chord from `x − i√(1−x²)` to `x + i√(1−x²)`.
pub fn segment_inverse_distance(lambda: C64, x: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("|x| = {} must be below 1", x.abs())));
    }
    let h = (1.0 - x * x).sqrt();
    segment_integral(C64::new(x, -h), C64::new(x, h), lambda)
}

/// `∫_γ |dξ| / |λ − ξ|` over a whole curve.
pub fn curve_inverse_distance(curve: &ContourCurve, lambda: C64) -> Result<f64> {
    curve.inverse_distance(lambda)
}
