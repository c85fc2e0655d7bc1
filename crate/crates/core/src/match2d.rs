//! Shock curves between two scalar solution branches, grown one grid cell
//! at a time from the stationary Rankine-Hugoniot normal, and the merged
//! piecewise solution they induce.

use std::collections::HashSet;

use log::{debug, info};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sweep2d::{Field2D, Grid2D};
use crate::systems::{Scalar2D, Side};

/// Geometric tolerance, relative to the cell size.
const GEOM_EPS: f64 = 1e-10;
/// Jumps below this (relative to the flux scale) count as no jump.
const JUMP_EPS: f64 = 1e-12;

pub type Point = (f64, f64);

#[derive(Debug, Clone, Serialize)]
pub struct Segment {
    pub from: Point,
    pub to: Point,
    pub cell: (usize, usize),
    /// Unit normal pointing from the minus branch to the plus branch.
    pub normal: Point,
    /// `|n . ([[f]], [[g]])|` at the entry point.
    pub rh_residual: f64,
    /// Same at the segment midpoint.
    pub rh_midpoint: f64,
    /// `n . (f'(u-), g'(u-))`, positive when admissible.
    pub entropy_minus: f64,
    /// `-n . (f'(u+), g'(u+))`, positive when admissible.
    pub entropy_plus: f64,
    /// Placed by the zero-flux-jump rule instead of the RH normal.
    pub degenerate: bool,
}

/// A polyline from boundary to boundary. The minus branch lies to the left
/// of the direction of travel.
#[derive(Debug, Clone, Serialize)]
pub struct ShockCurve {
    pub vertices: Vec<Point>,
    pub segments: Vec<Segment>,
}

impl ShockCurve {
    pub fn degenerate_segments(&self) -> usize {
        self.segments.iter().filter(|s| s.degenerate).count()
    }

    pub fn max_rh_residual(&self) -> f64 {
        self.segments.iter().map(|s| s.rh_residual).fold(0.0, f64::max)
    }

    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum()
    }

    /// Distance from `p` to the polyline.
    pub fn distance(&self, p: Point) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Symmetric Hausdorff distance to a reference polyline.
    pub fn hausdorff(&self, reference: &[Point]) -> f64 {
        let other = ShockCurve {
            vertices: reference.to_vec(),
            segments: Vec::new(),
        };
        let dense = |c: &ShockCurve| -> Vec<Point> {
            let mut pts = Vec::new();
            for w in c.vertices.windows(2) {
                for k in 0..8 {
                    let t = k as f64 / 8.0;
                    pts.push((w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1)));
                }
            }
            pts.extend(c.vertices.last());
            pts
        };
        let a = dense(self).into_iter().map(|p| other.distance(p)).fold(0.0, f64::max);
        let b = dense(&other).into_iter().map(|p| self.distance(p)).fold(0.0, f64::max);
        a.max(b)
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Orient the RH normal `n . ([[f]], [[g]]) = 0` by the entropy condition.
/// `None` when neither orientation is admissible.
pub fn segment_normal(model: &Scalar2D, u_minus: f64, u_plus: f64) -> Option<Point> {
    let jf = model.f.eval(u_plus) - model.f.eval(u_minus);
    let jg = model.g.eval(u_plus) - model.g.eval(u_minus);
    let norm = jf.hypot(jg);
    let scale = model.f.eval(u_minus).abs().max(model.g.eval(u_minus).abs()).max(1.0);
    if norm <= JUMP_EPS * scale {
        return None;
    }
    let n = (jg / norm, -jf / norm);
    let cm = (model.f.deriv(u_minus), model.g.deriv(u_minus));
    let cp = (model.f.deriv(u_plus), model.g.deriv(u_plus));
    let dot = |n: Point, c: Point| n.0 * c.0 + n.1 * c.1;
    for s in [1.0, -1.0] {
        let ns = (s * n.0, s * n.1);
        if dot(ns, cm) > 0.0 && dot(ns, cp) < 0.0 {
            return Some(ns);
        }
    }
    None
}

/// Corner-weighted interpolation inside cell `(ci, cj)` using only valid
/// corners; `None` if no corner is valid.
fn interpolate(field: &Field2D, ci: usize, cj: usize, p: Point) -> Option<f64> {
    let g = field.grid;
    let s = ((p.0 - g.x(ci)) / g.hx()).clamp(0.0, 1.0);
    let t = ((p.1 - g.y(cj)) / g.hy()).clamp(0.0, 1.0);
    let corners = [
        (0, 0, (1.0 - s) * (1.0 - t)),
        (1, 0, s * (1.0 - t)),
        (0, 1, (1.0 - s) * t),
        (1, 1, s * t),
    ];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut nearest: Option<(f64, f64)> = None;
    for (di, dj, w) in corners {
        if let Some(v) = field.scalar(ci + di, cj + dj) {
            num += w * v;
            den += w;
            let d = (s - di as f64).hypot(t - dj as f64);
            if nearest.is_none_or(|(bd, _)| d < bd) {
                nearest = Some((d, v));
            }
        }
    }
    // On top of an invalid corner: take the closest valid one.
    if den > 1e-6 {
        Some(num / den)
    } else {
        nearest.map(|(_, v)| v)
    }
}

struct Grower<'a> {
    model: &'a Scalar2D,
    minus: &'a Field2D,
    plus: &'a Field2D,
    grid: Grid2D,
}

impl Grower<'_> {
    fn eps(&self) -> f64 {
        GEOM_EPS * self.grid.h()
    }

    fn jumps(&self, um: f64, up: f64) -> Point {
        (
            self.model.f.eval(up) - self.model.f.eval(um),
            self.model.g.eval(up) - self.model.g.eval(um),
        )
    }

    fn states(&self, cell: (usize, usize), p: Point) -> Option<(f64, f64)> {
        Some((
            interpolate(self.minus, cell.0, cell.1, p)?,
            interpolate(self.plus, cell.0, cell.1, p)?,
        ))
    }

    fn corner_jump(&self, i: usize, j: usize) -> Option<Point> {
        Some(self.jumps(self.minus.scalar(i, j)?, self.plus.scalar(i, j)?))
    }

    fn on_boundary(&self, p: Point) -> bool {
        let r = self.grid.rect;
        let e = self.eps();
        (p.0 - r.x0).abs() < e || (p.0 - r.x1).abs() < e || (p.1 - r.y0).abs() < e || (p.1 - r.y1).abs() < e
    }

    fn cell_box(&self, c: (usize, usize)) -> (f64, f64, f64, f64) {
        let g = self.grid;
        (g.x(c.0), g.x(c.0 + 1), g.y(c.1), g.y(c.1 + 1))
    }

    /// Cell containing `p` whose interior the direction `t` enters.
    fn cell_toward(&self, p: Point, t: Point) -> Option<(usize, usize)> {
        let g = self.grid;
        let e = self.eps();
        let pick = |v: f64, v0: f64, h: f64, n: usize, d: f64| -> Option<usize> {
            let r = (v - v0) / h;
            let k = r.round();
            let on_line = (r - k).abs() * h < e;
            let idx = if on_line {
                if d > 0.0 {
                    k as i64
                } else if d < 0.0 {
                    k as i64 - 1
                } else {
                    (k as i64).min(n as i64 - 2)
                }
            } else {
                r.floor() as i64
            };
            (0..n as i64 - 1).contains(&idx).then_some(idx as usize)
        };
        Some((
            pick(p.0, g.rect.x0, g.hx(), g.mx, t.0)?,
            pick(p.1, g.rect.y0, g.hy(), g.my, t.1)?,
        ))
    }

    /// Where the ray `p + s t` leaves cell `c`.
    fn exit_point(&self, c: (usize, usize), p: Point, t: Point) -> Option<Point> {
        let (x0, x1, y0, y1) = self.cell_box(c);
        let mut best = f64::INFINITY;
        for (tv, pv, lo, hi) in [(t.0, p.0, x0, x1), (t.1, p.1, y0, y1)] {
            if tv > 0.0 {
                best = best.min((hi - pv) / tv);
            } else if tv < 0.0 {
                best = best.min((lo - pv) / tv);
            }
        }
        (best.is_finite() && best > self.eps() / t.0.hypot(t.1)).then(|| (p.0 + best * t.0, p.1 + best * t.1))
    }

    /// Zero-flux-jump rule: among sides of the cell not containing `p`,
    /// take the one minimising `max([[f]]_1 [[f]]_2, [[g]]_1 [[g]]_2)` over
    /// its end corners, whose segment is entropy admissible.
    fn degenerate_exit(&self, c: (usize, usize), p: Point, sigma: f64) -> Option<(Point, Point, f64)> {
        let (i, j) = c;
        let (x0, x1, y0, y1) = self.cell_box(c);
        let e = self.eps();
        let sides = [
            ((i, j), (i + 1, j), (x0, y0), (x1, y0)),
            ((i + 1, j), (i + 1, j + 1), (x1, y0), (x1, y1)),
            ((i, j + 1), (i + 1, j + 1), (x0, y1), (x1, y1)),
            ((i, j), (i, j + 1), (x0, y0), (x0, y1)),
        ];
        let mut best: Option<(f64, Point, Point)> = None;
        for (ca, cb, pa, pb) in sides {
            if segment_distance(p, pa, pb) < e {
                continue;
            }
            let (Some(ja), Some(jb)) = (self.corner_jump(ca.0, ca.1), self.corner_jump(cb.0, cb.1)) else {
                continue;
            };
            let score = (ja.0 * jb.0).max(ja.1 * jb.1);
            // Exit at the zero of the flux jump along the side.
            let frac = |a: f64, b: f64| (a != b && a * b <= 0.0).then(|| a / (a - b));
            let s = frac(ja.0, jb.0).or_else(|| frac(ja.1, jb.1)).unwrap_or(0.5);
            let q = (pa.0 + s * (pb.0 - pa.0), pa.1 + s * (pb.1 - pa.1));
            let t = (q.0 - p.0, q.1 - p.1);
            let len = t.0.hypot(t.1);
            if len < e {
                continue;
            }
            let n = (sigma * t.1 / len, -sigma * t.0 / len);
            let mid = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
            let Some((um, up)) = self.states(c, mid) else {
                continue;
            };
            let em = n.0 * self.model.f.deriv(um) + n.1 * self.model.g.deriv(um);
            let ep = n.0 * self.model.f.deriv(up) + n.1 * self.model.g.deriv(up);
            if !(em > 0.0 && ep < 0.0) {
                continue;
            }
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, q, n));
            }
        }
        best.map(|(score, q, n)| (q, n, score))
    }

    /// Trace from `seed` with minus on the left (`sigma = 1`) or on the
    /// right (`sigma = -1`) of the direction of travel.
    fn grow(&self, seed: Point, sigma: f64) -> Result<ShockCurve> {
        let g = self.grid;
        let mut vertices = vec![seed];
        let mut segments: Vec<Segment> = Vec::new();
        let mut visited = HashSet::new();
        let mut p = seed;
        let incomplete = |v: &[Point], reason: String| Error::IncompleteCurve {
            partial: v.to_vec(),
            reason,
        };
        let mut cell: Option<(usize, usize)> = None;
        for _ in 0..(g.mx * g.my) {
            // The RH direction at p, when admissible.
            let probe = cell.or_else(|| self.cell_toward(p, (g.rect.x0 + g.rect.x1 - 2.0 * p.0, g.rect.y0 + g.rect.y1 - 2.0 * p.1)));
            let probe = probe.ok_or_else(|| incomplete(&vertices, "seed outside the grid".into()))?;
            let (um, up) = self
                .states(probe, p)
                .ok_or_else(|| incomplete(&vertices, format!("branches invalid near {p:?}")))?;
            let (jf, jg) = self.jumps(um, up);
            let normal = segment_normal(self.model, um, up);
            let (c, q, n, degenerate) = match normal {
                Some(n) => {
                    let t = (-sigma * n.1, sigma * n.0);
                    let c = self
                        .cell_toward(p, t)
                        .ok_or_else(|| incomplete(&vertices, format!("curve leaves the domain at {p:?}")))?;
                    let q = self
                        .exit_point(c, p, t)
                        .ok_or_else(|| incomplete(&vertices, format!("no exit from cell {c:?}")))?;
                    (c, q, n, false)
                }
                None => {
                    let (q, n, _) = self
                        .degenerate_exit(probe, p, sigma)
                        .ok_or_else(|| incomplete(&vertices, format!("no admissible direction at {p:?}")))?;
                    (probe, q, n, true)
                }
            };
            if !visited.insert(c) {
                return Err(Error::CurveLoop(c.0, c.1));
            }
            let mid = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
            let (mm, mp) = self.states(c, mid).unwrap_or((um, up));
            let (mf, mg) = self.jumps(mm, mp);
            segments.push(Segment {
                from: p,
                to: q,
                cell: c,
                normal: n,
                rh_residual: (n.0 * jf + n.1 * jg).abs(),
                rh_midpoint: (n.0 * mf + n.1 * mg).abs(),
                entropy_minus: n.0 * self.model.f.deriv(mm) + n.1 * self.model.g.deriv(mm),
                entropy_plus: -(n.0 * self.model.f.deriv(mp) + n.1 * self.model.g.deriv(mp)),
                degenerate,
            });
            vertices.push(q);
            p = q;
            if self.on_boundary(q) {
                return Ok(ShockCurve { vertices, segments });
            }
            // Next cell: across the exit edge, following the segment direction.
            let t = (q.0 - mid.0, q.1 - mid.1);
            cell = self.cell_toward(q, t);
            if cell.is_none() {
                return Err(incomplete(&vertices, format!("curve leaves the grid at {q:?}")));
            }
        }
        Err(incomplete(&vertices, "cell budget exhausted".into()))
    }
}

fn grow_directed(model: &Scalar2D, minus: &Field2D, plus: &Field2D, seed: Point, sigma: f64) -> Result<ShockCurve> {
    if minus.grid != plus.grid {
        return Err(Error::Config("branches on different grids".into()));
    }
    let grower = Grower {
        model,
        minus,
        plus,
        grid: minus.grid,
    };
    let mut curve = grower.grow(seed, sigma)?;
    if sigma < 0.0 {
        curve.vertices.reverse();
        curve.segments.reverse();
        for s in &mut curve.segments {
            std::mem::swap(&mut s.from, &mut s.to);
        }
    }
    debug!(
        "curve from {seed:?}: {} segments, {} degenerate",
        curve.segments.len(),
        curve.degenerate_segments()
    );
    Ok(curve)
}

/// Grow a curve from `seed`, a boundary point where the two branches'
/// boundary data meet. Curves run with minus on their left; when that
/// direction leaves the domain at the seed, the curve is traced backwards
/// and flipped.
pub fn grow_curve(model: &Scalar2D, minus: &Field2D, plus: &Field2D, seed: Point) -> Result<ShockCurve> {
    let curve = match grow_directed(model, minus, plus, seed, 1.0) {
        Err(Error::IncompleteCurve { partial, .. }) if partial.len() == 1 => grow_directed(model, minus, plus, seed, -1.0)?,
        r => r?,
    };
    log_degenerate(model, &curve);
    Ok(curve)
}

fn log_degenerate(model: &Scalar2D, curve: &ShockCurve) {
    if curve.degenerate_segments() > 0 {
        info!(
            "{}: zero-flux-jump rule used on {} of {} segments",
            model.id(),
            curve.degenerate_segments(),
            curve.segments.len()
        );
    }
}

/// Boundary points, counter-clockwise from `(x0, y0)`, with the side each
/// lies on (`None` at corners).
fn perimeter(g: &Grid2D) -> Vec<(Point, Option<Side>)> {
    let mut pts = Vec::new();
    pts.push(((g.x(0), g.y(0)), None));
    for i in 1..g.mx - 1 {
        pts.push(((g.x(i), g.y(0)), Some(Side::Bottom)));
    }
    pts.push(((g.x(g.mx - 1), g.y(0)), None));
    for j in 1..g.my - 1 {
        pts.push(((g.x(g.mx - 1), g.y(j)), Some(Side::Right)));
    }
    pts.push(((g.x(g.mx - 1), g.y(g.my - 1)), None));
    for i in (1..g.mx - 1).rev() {
        pts.push(((g.x(i), g.y(g.my - 1)), Some(Side::Top)));
    }
    pts.push(((g.x(0), g.y(g.my - 1)), None));
    for j in (1..g.my - 1).rev() {
        pts.push(((g.x(0), g.y(j)), Some(Side::Left)));
    }
    pts
}

fn node_of(g: &Grid2D, p: Point) -> (usize, usize) {
    (
        (((p.0 - g.rect.x0) / g.hx()).round() as usize).min(g.mx - 1),
        (((p.1 - g.rect.y0) / g.hy()).round() as usize).min(g.my - 1),
    )
}

/// Candidate seeds: boundary points where the boundary data switch from
/// matching one branch to matching the other, ordered by jump size with
/// ties going to corners.
pub fn find_seeds(model: &Scalar2D, minus: &Field2D, plus: &Field2D) -> Vec<Point> {
    let g = minus.grid;
    let per = perimeter(&g);
    let label = |p: Point, side: Side| -> Option<bool> {
        let d = model.side_data(side, p.0, p.1)?;
        let (i, j) = node_of(&g, p);
        // A node only one branch reaches belongs to that branch.
        let (m, q) = match (minus.scalar(i, j), plus.scalar(i, j)) {
            (Some(m), Some(q)) => (m, q),
            (Some(_), None) => return Some(true),
            (None, Some(_)) => return Some(false),
            (None, None) => return None,
        };
        let (dm, dp) = ((d - m).abs(), (d - q).abs());
        if (dm - dp).abs() <= 1e-12 * (1.0 + d.abs()) {
            None
        } else {
            Some(dm < dp)
        }
    };
    let labelled: Vec<(usize, bool)> = per
        .iter()
        .enumerate()
        .filter_map(|(k, (p, s))| Some((k, label(*p, (*s)?)?)))
        .collect();
    // (point, jump, at a corner, bridges boundary without data)
    let mut seeds: Vec<(Point, f64, bool, bool)> = Vec::new();
    let n = per.len();
    for w in 0..labelled.len() {
        let (ka, la) = labelled[w];
        let (kb, lb) = labelled[(w + 1) % labelled.len()];
        if la == lb {
            continue;
        }
        // A corner strictly between the two nodes is the seed; otherwise the
        // midpoint.
        let mut k = (ka + 1) % n;
        let mut corner = None;
        let mut bridges = false;
        while k != kb {
            match per[k].1 {
                None => corner = Some(per[k].0),
                Some(_) => bridges = true,
            }
            k = (k + 1) % n;
        }
        let (pa, pb) = (per[ka].0, per[kb].0);
        let (p, is_corner) = match corner {
            Some(c) => (c, true),
            None => ((0.5 * (pa.0 + pb.0), 0.5 * (pa.1 + pb.1)), false),
        };
        let jump = [pa, pb]
            .iter()
            .filter_map(|q| {
                let (i, j) = node_of(&g, *q);
                Some((minus.scalar(i, j)? - plus.scalar(i, j)?).abs())
            })
            .fold(0.0, f64::max);
        seeds.push((p, jump, is_corner, bridges));
    }
    // A switch across a stretch of boundary without data only says the
    // curve leaves somewhere in that stretch, so those seeds go last.
    seeds.sort_by(|a, b| {
        let tie = (a.1 - b.1).abs() <= 1e-9 * a.1.max(b.1).max(1.0);
        a.3.cmp(&b.3).then(if tie { b.2.cmp(&a.2) } else { b.1.total_cmp(&a.1) })
    });
    seeds.into_iter().map(|s| s.0).collect()
}

fn on_boundary(g: &Grid2D, seg: &Segment) -> bool {
    let r = g.rect;
    let tol = GEOM_EPS * (1.0 + g.h());
    let side = |p: Point| {
        [
            (p.0 - r.x0).abs() <= tol,
            (p.0 - r.x1).abs() <= tol,
            (p.1 - r.y0).abs() <= tol,
            (p.1 - r.y1).abs() <= tol,
        ]
    };
    let (a, b) = (side(seg.from), side(seg.to));
    a.iter().zip(&b).any(|(x, y)| *x && *y)
}

/// Try the seeds in order and return the first complete curve.
pub fn grow_from_boundary(model: &Scalar2D, minus: &Field2D, plus: &Field2D) -> Result<ShockCurve> {
    let seeds = find_seeds(model, minus, plus);
    let mut first_err = None;
    // Forward traces from every seed first: a seed the curve starts from
    // is more accurate than one it ends at.
    for sigma in [1.0, -1.0] {
        for s in &seeds {
            match grow_directed(model, minus, plus, *s, sigma) {
                Ok(c) if c.segments.iter().all(|seg| on_boundary(&minus.grid, seg)) => {
                    debug!("seed {s:?} rejected: curve runs along the boundary");
                }
                Ok(c) => {
                    log_degenerate(model, &c);
                    return Ok(c);
                }
                Err(e) => {
                    debug!("seed {s:?} rejected: {e}");
                    first_err.get_or_insert(e);
                }
            }
        }
    }
    Err(first_err.unwrap_or(Error::IncompleteCurve {
        partial: Vec::new(),
        reason: "the branches' boundary data never switch".into(),
    }))
}

/// Which side of a curve each node lies on.
#[derive(Debug, Clone)]
pub struct PartitionMask {
    pub grid: Grid2D,
    /// `true` on the minus side.
    pub minus: Vec<bool>,
    /// Closed boundary of the minus region.
    pub polygon: Vec<Point>,
}

impl PartitionMask {
    /// Region left of the curve: the curve closed by the boundary path from
    /// its end back to its start, counter-clockwise.
    pub fn from_curve(grid: &Grid2D, curve: &ShockCurve) -> Self {
        let r = grid.rect;
        let (w, h) = (r.x1 - r.x0, r.y1 - r.y0);
        let arc = |p: Point| -> f64 {
            let e = GEOM_EPS * grid.h();
            if (p.1 - r.y0).abs() < e {
                p.0 - r.x0
            } else if (p.0 - r.x1).abs() < e {
                w + (p.1 - r.y0)
            } else if (p.1 - r.y1).abs() < e {
                w + h + (r.x1 - p.0)
            } else {
                2.0 * w + h + (r.y1 - p.1)
            }
        };
        let total = 2.0 * (w + h);
        let corners = [(0.0, (r.x0, r.y0)), (w, (r.x1, r.y0)), (w + h, (r.x1, r.y1)), (2.0 * w + h, (r.x0, r.y1))];
        let start = curve.vertices[0];
        let end = *curve.vertices.last().expect("curve has vertices");
        let (se, ss) = (arc(end), arc(start));
        let span = (ss - se).rem_euclid(total);
        let mut poly = curve.vertices.clone();
        let mut extra: Vec<(f64, Point)> = corners
            .iter()
            .map(|(s, c)| ((s - se).rem_euclid(total), *c))
            .filter(|(d, _)| *d > 0.0 && *d < span)
            .collect();
        extra.sort_by(|a, b| a.0.total_cmp(&b.0));
        poly.extend(extra.into_iter().map(|(_, c)| c));
        let centre = (0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
        let nudge = 1e-7 * grid.h();
        let mut minus = Vec::with_capacity(grid.len());
        for j in 0..grid.my {
            for i in 0..grid.mx {
                let (x, y) = (grid.x(i), grid.y(j));
                // Boundary nodes are tested slightly inside the domain.
                let p = (x + nudge * (centre.0 - x).signum(), y + nudge * (centre.1 - y).signum());
                minus.push(point_in_polygon(p, &poly));
            }
        }
        PartitionMask {
            grid: *grid,
            minus,
            polygon: poly,
        }
    }

    pub fn is_minus(&self, i: usize, j: usize) -> bool {
        self.minus[self.grid.idx(i, j)]
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.polygon)
    }
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// The assembled steady solution.
#[derive(Debug, Clone)]
pub struct MergedSolution2D {
    pub field: Field2D,
    pub curves: Vec<ShockCurve>,
    pub masks: Vec<PartitionMask>,
}

impl MergedSolution2D {
    pub fn grid(&self) -> Grid2D {
        self.field.grid
    }

    /// Index of the branch that supplies the solution at `p`.
    pub fn owner(&self, p: Point) -> usize {
        self.masks
            .iter()
            .enumerate()
            .fold(0, |o, (k, m)| if m.contains(p) { o } else { k + 1 })
    }

    /// Drop the parts of curves that later merges overrode: a segment stays
    /// only while the two sides are owned by different branches. A curve
    /// cut in the middle becomes two.
    fn trim_curves(&mut self) {
        let d = 1e-3 * self.grid().h();
        let mut kept = Vec::new();
        for c in &self.curves {
            let mut piece: Option<ShockCurve> = None;
            for s in &c.segments {
                let mid = (0.5 * (s.from.0 + s.to.0), 0.5 * (s.from.1 + s.to.1));
                let a = self.owner((mid.0 - d * s.normal.0, mid.1 - d * s.normal.1));
                let b = self.owner((mid.0 + d * s.normal.0, mid.1 + d * s.normal.1));
                if a != b {
                    let p = piece.get_or_insert_with(|| ShockCurve {
                        vertices: vec![s.from],
                        segments: Vec::new(),
                    });
                    p.vertices.push(s.to);
                    p.segments.push(s.clone());
                } else if let Some(p) = piece.take() {
                    kept.push(p);
                }
            }
            kept.extend(piece);
        }
        if kept.len() != self.curves.len() || kept.iter().zip(&self.curves).any(|(a, b)| a.segments.len() != b.segments.len()) {
            debug!("trimmed curves: {} segments left of {}", kept.iter().map(|c| c.segments.len()).sum::<usize>(), self.curves.iter().map(|c| c.segments.len()).sum::<usize>());
        }
        self.curves = kept;
    }

    /// Distance from node `(i, j)` to the nearest curve.
    pub fn curve_distance(&self, i: usize, j: usize) -> f64 {
        let g = self.grid();
        let p = (g.x(i), g.y(j));
        self.curves.iter().map(|c| c.distance(p)).fold(f64::INFINITY, f64::min)
    }
}

/// Merge `branches[0]` with each following branch across the matching
/// curve: nodes on the minus side of `curves[k]` keep the running result,
/// the others take `branches[k + 1]`.
pub fn merge(branches: &[Field2D], curves: &[ShockCurve]) -> Result<MergedSolution2D> {
    let first = branches.first().ok_or_else(|| Error::Config("nothing to merge".into()))?;
    if curves.len() + 1 != branches.len() {
        return Err(Error::Config(format!(
            "{} branches need {} curves, got {}",
            branches.len(),
            branches.len() - 1,
            curves.len()
        )));
    }
    let g = first.grid;
    let mut acc = first.clone();
    let mut masks = Vec::new();
    for (b, c) in branches[1..].iter().zip(curves) {
        let mask = PartitionMask::from_curve(&g, c);
        for k in 0..g.len() {
            if !mask.minus[k] {
                acc.states[k] = b.states[k].clone();
                acc.mask[k] = b.mask[k];
            }
        }
        masks.push(mask);
    }
    let uncovered: Vec<(usize, usize)> = (0..g.len())
        .filter(|&k| acc.mask[k].is_some())
        .map(|k| (k % g.mx, k / g.mx))
        .collect();
    if !uncovered.is_empty() {
        return Err(Error::Coverage { nodes: uncovered });
    }
    let mut out = MergedSolution2D {
        field: acc,
        curves: curves.to_vec(),
        masks,
    };
    out.trim_curves();
    Ok(out)
}

/// Grow the curve between the running merge and `plus` from the boundary,
/// then merge; repeated over `branches` in order.
pub fn match_branches(model: &Scalar2D, branches: &[Field2D]) -> Result<MergedSolution2D> {
    let first = branches.first().ok_or_else(|| Error::Config("nothing to merge".into()))?;
    let mut acc = MergedSolution2D {
        field: first.clone(),
        curves: Vec::new(),
        masks: Vec::new(),
    };
    for b in &branches[1..] {
        let curve = grow_from_boundary(model, &acc.field, b)?;
        let step = merge(&[acc.field.clone(), b.clone()], std::slice::from_ref(&curve))?;
        acc.field = step.field;
        acc.curves.push(curve);
        acc.masks.extend(step.masks);
    }
    acc.trim_curves();
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep2d::sweep_scalar;
    use crate::systems::{burgers_phi, Rect, ScalarFlux};

    fn unit() -> Rect {
        Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    #[test]
    fn normal_examples() {
        let m = Scalar2D::three_states(1.2, 0.75, 0.5, false);
        let n = segment_normal(&m, 0.75, 0.0).unwrap();
        // Tangent (-n2, n1) has slope 1.2.
        assert!((n.0 / -n.1 - 1.2).abs() < 1e-12);
        let b = Scalar2D::burgers();
        assert!(segment_normal(&b, 2.3, -1.7).is_none());
        // f = u^2/2, g = u: both jumps are -2 from 2 to 0.
        let lin = Scalar2D::new("lin", ScalarFlux::quadratic(0.5), ScalarFlux::new(|u| u, |_| 1.0, vec![]), unit());
        let n = segment_normal(&lin, 2.0, 0.0).unwrap();
        let r = 0.5f64.sqrt();
        assert!((n.0 - r).abs() < 1e-12 && (n.1 + r).abs() < 1e-12, "{n:?}");
        let f = segment_normal(&lin, 0.0, 2.0).unwrap();
        assert!((f.0 + n.0).abs() < 1e-12 && (f.1 + n.1).abs() < 1e-12);
    }

    #[test]
    fn three_states_merge() {
        let m = Scalar2D::three_states(1.2, 0.75, 0.5, false);
        let g = Grid2D::square(unit(), 41).unwrap();
        let l = sweep_scalar(&m, Side::Left, &g).unwrap();
        let b = sweep_scalar(&m, Side::Bottom, &g).unwrap();
        let r = sweep_scalar(&m, Side::Right, &g).unwrap();
        let sol = match_branches(&m, &[l, b, r]).unwrap();
        assert_eq!(sol.curves.len(), 2);
        let c1 = &sol.curves[0];
        assert!(c1.vertices[0] == (0.0, 0.0));
        for v in &c1.vertices {
            assert!((v.1 - 1.2 * v.0).abs() < 1e-9, "{v:?}");
        }
        // cut where the right branch takes over
        let end = c1.vertices.last().unwrap();
        assert!((end.0 - 0.5).abs() <= g.h(), "{end:?}");
        assert_eq!(sol.curves[1].vertices[0], (1.0, 0.0));
        for j in 0..g.my {
            for i in 0..g.mx {
                if sol.curve_distance(i, j) > g.h() {
                    let exact = m.exact(g.x(i), g.y(j)).unwrap();
                    assert_eq!(sol.field.scalar(i, j).unwrap(), exact, "({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn burgers_degenerate_curve() {
        let m = Scalar2D::burgers();
        let g = Grid2D::square(unit(), 65).unwrap();
        let bottom = sweep_scalar(&m, Side::Bottom, &g).unwrap();
        let top = sweep_scalar(&m, Side::Top, &g).unwrap();
        // The discontinuity meets the bottom side at the corner (1, 0), so
        // only the last column of the bottom branch starts off-branch.
        assert!(top.fully_valid());
        assert_eq!(bottom.valid_count(), g.len() - g.my);
        let c = grow_from_boundary(&m, &bottom, &top).unwrap();
        assert_eq!(c.degenerate_segments(), c.segments.len());
        let exact: Vec<Point> = (0..=200).map(|k| k as f64 / 200.0).map(|x| (x, burgers_phi(x))).collect();
        assert!(c.hausdorff(&exact) <= g.h(), "{}", c.hausdorff(&exact));
    }

    #[test]
    fn identical_branches_have_no_curve() {
        let m = Scalar2D::three_states(1.2, 0.75, 0.5, false);
        let g = Grid2D::square(unit(), 17).unwrap();
        let l = sweep_scalar(&m, Side::Left, &g).unwrap();
        let e = grow_from_boundary(&m, &l, &l).unwrap_err();
        assert!(matches!(e, Error::IncompleteCurve { .. }));
        let e = grow_curve(&m, &l, &l, (0.0, 0.0)).unwrap_err();
        assert!(matches!(e, Error::IncompleteCurve { .. }));
    }

    #[test]
    fn flipped_roles_give_same_polyline() {
        let m = Scalar2D::three_states(1.2, 0.75, 0.5, false);
        let g = Grid2D::square(unit(), 33).unwrap();
        let l = sweep_scalar(&m, Side::Left, &g).unwrap();
        let b = sweep_scalar(&m, Side::Bottom, &g).unwrap();
        let a = grow_curve(&m, &l, &b, (0.0, 0.0)).unwrap();
        let end = *a.vertices.last().unwrap();
        let f = grow_curve(&m, &b, &l, end).unwrap();
        let mut rev = f.vertices.clone();
        rev.reverse();
        assert_eq!(rev.len(), a.vertices.len());
        for (p, q) in rev.iter().zip(&a.vertices) {
            assert!((p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9);
        }
        for (s, t) in f.segments.iter().rev().zip(&a.segments) {
            assert!((s.normal.0 + t.normal.0).abs() < 1e-9 && (s.normal.1 + t.normal.1).abs() < 1e-9);
        }
    }

    #[test]
    fn perturbed_curve_bends() {
        let m = Scalar2D::three_states(1.2, 0.75, 0.5, true);
        let g = Grid2D::square(unit(), 41).unwrap();
        let l = sweep_scalar(&m, Side::Left, &g).unwrap();
        let b = sweep_scalar(&m, Side::Bottom, &g).unwrap();
        let c = grow_from_boundary(&m, &l, &b).unwrap();
        let off = c.vertices.iter().map(|v| (v.1 - 1.2 * v.0).abs()).fold(0.0, f64::max);
        assert!(off > 0.1 * g.h(), "{off}");
        assert!(c.max_rh_residual() < 1e-10);
    }

    #[test]
    fn single_branch_merge_is_identity() {
        let m = Scalar2D::scalar_shock();
        let g = Grid2D::square(unit(), 17).unwrap();
        let b = sweep_scalar(&m, Side::Bottom, &g).unwrap();
        let s = merge(std::slice::from_ref(&b), &[]).unwrap();
        assert_eq!(s.field.states, b.states);
    }
}
