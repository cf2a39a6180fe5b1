use super::secular::Secular;
use crate::operator::{segment_distance, Hull, OperatorSpec};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{x0}, {x1}] × [{y0}, {y1}]"
            )));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re > self.x0 && z.re < self.x1 && z.im > self.y0 && z.im < self.y1
    }

    fn contains_closed(&self, z: C64, slack: f64) -> bool {
        z.re >= self.x0 - slack && z.re <= self.x1 + slack && z.im >= self.y0 - slack && z.im <= self.y1 + slack
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.x0, self.y0),
            C64::new(self.x1, self.y0),
            C64::new(self.x1, self.y1),
            C64::new(self.x0, self.y1),
        ]
    }

    fn distance(&self, z: C64) -> f64 {
        let dx = (self.x0 - z.re).max(z.re - self.x1).max(0.0);
        let dy = (self.y0 - z.im).max(z.im - self.y1).max(0.0);
        dx.hypot(dy)
    }

    fn segment_distance(&self, a: C64, b: C64) -> f64 {
        if self.clips(a, b) {
            return 0.0;
        }
        let c = self.corners();
        let to_rect = self.distance(a).min(self.distance(b));
        c.iter().map(|z| segment_distance(*z, a, b)).fold(to_rect, f64::min)
    }

    /// Liang–Barsky: whether the segment meets the closed rectangle.
    fn clips(&self, a: C64, b: C64) -> bool {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [
            (-d.re, a.re - self.x0),
            (d.re, self.x1 - a.re),
            (-d.im, a.im - self.y0),
            (d.im, self.y1 - a.im),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        t0 <= t1
    }

    /// Whether the rectangle comes within `margin` of the hull.
    fn near_hull(&self, hull: &Hull, margin: f64) -> bool {
        match *hull {
            Hull::Empty => false,
            Hull::Disc { center, radius } => self.distance(center) <= radius + margin,
            Hull::Segment(a, b) => self.segment_distance(a, b) <= margin,
        }
    }
}

/// A root of `det M_T` located in a cell with positive winding number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCandidate {
    #[serde(serialize_with = "crate::series::ser_c64")]
    pub z: C64,
    /// `|det M_T(z)|`
    pub residual: f64,
    pub cell: Rect,
    pub winding: i32,
    /// Newton converged inside the cell.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedCell {
    pub cell: Rect,
    pub reason: String,
    /// Eigenvalues of `T` counted inside, when known.
    pub eigen_count: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    #[serde(with = "crate::operator::cnum::vec")]
    pub accumulation_candidates: Vec<C64>,
    pub root_candidates: Vec<RootCandidate>,
    pub excluded_cells: Vec<ExcludedCell>,
    pub scan_region: Rect,
    pub grid: usize,
    /// Width of an initial grid cell.
    pub grid_resolution: f64,
    pub margin: f64,
    /// Sum of the top-level cell winding numbers.
    pub cell_winding_sum: i32,
    /// Winding number over the region boundary, when every boundary edge
    /// was resolved.
    pub outer_winding: Option<i32>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Exclusion margin around the diagonal envelope (rule specs); `None`
    /// means `1e−3 · sup |λ_n|`.
    pub margin: Option<f64>,
    /// Cells are not split below this fraction of the region diameter.
    pub min_cell: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            margin: None,
            min_cell: 1e-9,
        }
    }
}

const MAX_EDGE_DEPTH: u32 = 40;
const ARG_STEP: f64 = PI / 4.0;

struct Scanner<'a> {
    sec: Secular<'a>,
    /// Materialized diagonal entries of a finite spec.
    lambdas: Option<Vec<C64>>,
    hull: Hull,
    margin: f64,
    min_size: f64,
    tol: f64,
}

enum EdgeError {
    Pole,
    Unresolved,
}

impl Scanner<'_> {
    fn g(&self, z: C64) -> std::result::Result<C64, EdgeError> {
        match self.sec.eval(z) {
            Ok(v) if v.g.norm() > v.err && v.g.is_finite() => Ok(v.g),
            Ok(_) => Err(EdgeError::Unresolved),
            Err(_) => Err(EdgeError::Pole),
        }
    }

    /// Change of `arg g` along the segment `a → b`; computed in a canonical
    /// direction so neighbouring cells see exactly opposite values.
    fn edge(&self, a: C64, b: C64) -> std::result::Result<f64, EdgeError> {
        if (b.re, b.im) < (a.re, a.im) {
            return self.edge(b, a).map(|d| -d);
        }
        let ga = self.g(a)?;
        let gb = self.g(b)?;
        self.edge_rec(a, b, ga, gb, 0)
    }

    fn edge_rec(&self, a: C64, b: C64, ga: C64, gb: C64, depth: u32) -> std::result::Result<f64, EdgeError> {
        let delta = (gb / ga).arg();
        let len = (b - a).norm();
        let near = self.sec.pole_distance(a).min(self.sec.pole_distance(b));
        if depth >= 2 && delta.abs() < ARG_STEP && len <= 0.5 * near {
            return Ok(delta);
        }
        if depth >= MAX_EDGE_DEPTH {
            return Err(EdgeError::Unresolved);
        }
        let m = 0.5 * (a + b);
        let gm = self.g(m)?;
        Ok(self.edge_rec(a, m, ga, gm, depth + 1)? + self.edge_rec(m, b, gm, gb, depth + 1)?)
    }

    fn winding(&self, r: &Rect) -> std::result::Result<(i32, f64), EdgeError> {
        let c = r.corners();
        let mut total = 0.0;
        for k in 0..4 {
            total += self.edge(c[k], c[(k + 1) % 4])?;
        }
        let w = (total / TAU).round();
        if (total - w * TAU).abs() > 0.5 {
            return Err(EdgeError::Unresolved);
        }
        Ok((w as i32, total))
    }

    fn poles_inside(&self, r: &Rect) -> i32 {
        self.lambdas
            .as_ref()
            .map_or(0, |l| l.iter().filter(|z| r.contains(**z)).count() as i32)
    }

    fn newton(&self, z0: C64) -> (C64, f64, bool) {
        let mut z = z0;
        let mut converged = false;
        for _ in 0..100 {
            let Ok((g, gp, _)) = self.sec.eval_with_derivative(z) else {
                return (z, f64::INFINITY, false);
            };
            if gp == C64::new(0.0, 0.0) || !gp.is_finite() {
                break;
            }
            let mut step = g / gp;
            let cap = 0.5 * self.sec.pole_distance(z);
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            z -= step;
            if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
                converged = true;
                break;
            }
        }
        let res = self.sec.eval(z).map(|v| (v.g.norm(), v.err));
        match res {
            Ok((r, err)) => {
                let ok = converged || r <= self.tol.max(8.0 * err);
                (z, r, ok)
            }
            Err(_) => (z, f64::INFINITY, false),
        }
    }

    fn split(r: &Rect, depth: u32) -> [Rect; 4] {
        // slightly off-centre so split lines avoid symmetric data
        let jitter = 0.5 + 0.013 * if depth % 2 == 0 { 1.0 } else { -0.7 };
        let xm = r.x0 + jitter * r.width();
        let ym = r.y0 + (1.0 - jitter) * r.height();
        [
            Rect { x0: r.x0, x1: xm, y0: r.y0, y1: ym },
            Rect { x0: xm, x1: r.x1, y0: r.y0, y1: ym },
            Rect { x0: r.x0, x1: xm, y0: ym, y1: r.y1 },
            Rect { x0: xm, x1: r.x1, y0: ym, y1: r.y1 },
        ]
    }

    fn process(&self, r: Rect, depth: u32, roots: &mut Vec<RootCandidate>, excluded: &mut Vec<ExcludedCell>) {
        if self.lambdas.is_none() && r.near_hull(&self.hull, self.margin) {
            excluded.push(ExcludedCell {
                cell: r,
                reason: "within the margin of the diagonal envelope".into(),
                eigen_count: None,
            });
            return;
        }
        let small = r.width().max(r.height()) <= self.min_size;
        let (w, _) = match self.winding(&r) {
            Ok(w) => w,
            Err(e) => {
                if small {
                    excluded.push(ExcludedCell {
                        cell: r,
                        reason: match e {
                            EdgeError::Pole => "boundary meets a diagonal entry".into(),
                            EdgeError::Unresolved => "boundary values not certified away from zero".into(),
                        },
                        eigen_count: None,
                    });
                } else {
                    for c in Self::split(&r, depth) {
                        self.process(c, depth + 1, roots, excluded);
                    }
                }
                return;
            }
        };
        let p = self.poles_inside(&r);
        let z = w + p;
        if z <= 0 {
            return;
        }
        if p == 0 && z == 1 {
            let starts = [r.center(), r.corners()[0] * 0.75 + r.corners()[2] * 0.25, r.corners()[1] * 0.25 + r.corners()[3] * 0.75];
            let slack = 1e-9 * (1.0 + r.center().norm());
            for s in starts {
                let (root, residual, ok) = self.newton(s);
                if ok && r.contains_closed(root, slack) {
                    roots.push(RootCandidate {
                        z: root,
                        residual,
                        cell: r,
                        winding: w,
                        converged: true,
                    });
                    return;
                }
            }
        }
        if small {
            if p > 0 {
                excluded.push(ExcludedCell {
                    cell: r,
                    reason: "eigenvalue within the minimum cell size of a diagonal entry".into(),
                    eigen_count: Some(z),
                });
            } else {
                let (root, residual, _) = self.newton(r.center());
                roots.push(RootCandidate {
                    z: root,
                    residual,
                    cell: r,
                    winding: w,
                    converged: false,
                });
            }
            return;
        }
        for c in Self::split(&r, depth) {
            self.process(c, depth + 1, roots, excluded);
        }
    }
}

/// Deterministic offsets in (−0.05, 0.05) for interior grid lines.
fn jitter(k: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    0.1 * ((k as f64 * g).fract() - 0.5)
}

/// Roots of `det M_T` (of `1 + f_T` for rank one) inside `region` by a
/// winding-number scan over a `grid × grid` partition with quadtree
/// refinement and damped Newton polishing.
pub fn find_eigenvalues(spec: &OperatorSpec, region: Rect, grid: usize, tol: f64) -> Result<SpectrumReport> {
    find_eigenvalues_with(spec, region, grid, tol, &ScanOptions::default())
}

pub fn find_eigenvalues_with(
    spec: &OperatorSpec,
    region: Rect,
    grid: usize,
    tol: f64,
    opts: &ScanOptions,
) -> Result<SpectrumReport> {
    let region = Rect::new(region.x0, region.x1, region.y0, region.y1)?;
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let bound = spec.diag().bound();
    let mut notes = Vec::new();
    let margin = match opts.margin {
        Some(m) => m,
        None => {
            if !spec.is_finite() {
                notes.push("margin defaulted to 1e-3 · sup|λ_n|".into());
            }
            1e-3 * bound.max(f64::MIN_POSITIVE)
        }
    };
    let lambdas = spec
        .dimension()
        .map(|d| (1..=d).map(|n| spec.diag().value(n)).collect::<Vec<_>>());
    let diam = region.width().hypot(region.height());
    let scanner = Scanner {
        sec: Secular::new(spec, tol),
        lambdas,
        hull: spec.diag().hull_from(1),
        margin,
        min_size: opts.min_cell * diam,
        tol,
    };
    let line = |lo: f64, hi: f64, k: usize| {
        if k == 0 {
            lo
        } else if k == grid {
            hi
        } else {
            lo + (hi - lo) * (k as f64 + jitter(k)) / grid as f64
        }
    };
    let cells: Vec<Rect> = (0..grid)
        .flat_map(|i| (0..grid).map(move |j| (i, j)))
        .map(|(i, j)| Rect {
            x0: line(region.x0, region.x1, i),
            x1: line(region.x0, region.x1, i + 1),
            y0: line(region.y0, region.y1, j),
            y1: line(region.y0, region.y1, j + 1),
        })
        .collect();
    let results: Vec<(Vec<RootCandidate>, Vec<ExcludedCell>, Option<i32>)> = cells
        .par_iter()
        .map(|c| {
            let mut roots = Vec::new();
            let mut excluded = Vec::new();
            scanner.process(*c, 0, &mut roots, &mut excluded);
            let w = if scanner.lambdas.is_none() && c.near_hull(&scanner.hull, margin) {
                None
            } else {
                scanner.winding(c).ok().map(|(w, _)| w)
            };
            (roots, excluded, w)
        })
        .collect();
    let mut roots = Vec::new();
    let mut excluded = Vec::new();
    let mut cell_sum = 0;
    let mut all_cells = true;
    for (r, e, w) in results {
        roots.extend(r);
        excluded.extend(e);
        match w {
            Some(w) => cell_sum += w,
            None => all_cells = false,
        }
    }
    // outer boundary through the same canonical edges as the cells
    let mut outer = Some(0.0);
    for i in 0..grid {
        let (xa, xb) = (line(region.x0, region.x1, i), line(region.x0, region.x1, i + 1));
        let (ya, yb) = (line(region.y0, region.y1, i), line(region.y0, region.y1, i + 1));
        for (a, b) in [
            (C64::new(xa, region.y0), C64::new(xb, region.y0)),
            (C64::new(region.x1, ya), C64::new(region.x1, yb)),
            (C64::new(xb, region.y1), C64::new(xa, region.y1)),
            (C64::new(region.x0, yb), C64::new(region.x0, ya)),
        ] {
            if let (Some(t), Ok(d)) = (outer, scanner.edge(a, b)) {
                outer = Some(t + d);
            } else {
                outer = None;
            }
        }
    }
    let outer_winding = outer.map(|t| (t / TAU).round() as i32);
    if !all_cells {
        notes.push("some top-level cells were excluded or unresolved; the winding sum covers the rest".into());
    }
    if roots.iter().any(|r| !r.converged) {
        notes.push("some candidates did not converge under Newton refinement".into());
    }
    Ok(SpectrumReport {
        accumulation_candidates: spec.diag().derived_set().candidates(),
        root_candidates: roots,
        excluded_cells: excluded,
        scan_region: region,
        grid,
        grid_resolution: region.width() / grid as f64,
        margin,
        cell_winding_sum: cell_sum,
        outer_winding,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_operator_spec, CoefficientSequence, DiagonalSequence};

    #[test]
    fn two_by_two_roots() {
        let spec = build_operator_spec(
            DiagonalSequence::finite_real(&[0.0, 1.0]),
            vec![(CoefficientSequence::finite_real(&[1.0, 1.0]), CoefficientSequence::finite_real(&[1.0, 1.0]))],
        )
        .unwrap();
        let rep = find_eigenvalues(&spec, Rect::new(-1.0, 4.0, -1.0, 1.0).unwrap(), 8, 1e-12).unwrap();
        let mut z: Vec<f64> = rep.root_candidates.iter().map(|r| r.z.re).collect();
        z.sort_by(f64::total_cmp);
        assert_eq!(z.len(), 2, "{rep:?}");
        let s5 = 5f64.sqrt();
        assert!((z[0] - (3.0 - s5) / 2.0).abs() < 1e-10);
        assert!((z[1] - (3.0 + s5) / 2.0).abs() < 1e-10);
        assert_eq!(rep.outer_winding, Some(rep.cell_winding_sum));
    }
}
