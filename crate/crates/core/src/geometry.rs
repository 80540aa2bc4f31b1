//! Planar primitives and convex-polygon operations.
//!
//! Conventions:
//! - Lines are stored in implicit form `a*x + b*y = c` with `a^2 + b^2 = 1`.
//! - A half-plane keeps the points with `a*x + b*y <= c`.
//! - Convex polygons are stored counter-clockwise, at least three vertices,
//!   strictly convex within [`EPS_GEOM`].
//!
//! Inputs in this crate are randomized, so plain `f64` arithmetic with small
//! absolute tolerances is used instead of exact predicates.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute coordinate tolerance (meters).
pub const EPS_GEOM: f64 = 1e-9;
/// Threshold on the cross product of two unit normals below which lines are parallel.
pub const EPS_PAR: f64 = 1e-12;
/// Clip results with smaller area are reported as empty.
pub const EPS_AREA: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeometryError {
    #[error("segment endpoints coincide within tolerance")]
    DegenerateSegment,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at angle `theta` (radians).
    pub fn from_angle(theta: f64) -> Self {
        Point::new(theta.cos(), theta.sin())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Point {
        self * (1.0 / self.norm())
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Line `a*x + b*y = c` with unit normal `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    a: f64,
    b: f64,
    c: f64,
}

impl Line {
    /// Builds a normalized line; `None` if the normal is (numerically) zero.
    pub fn new(a: f64, b: f64, c: f64) -> Option<Self> {
        let n = a.hypot(b);
        if !(n > 0.0) || !n.is_finite() || !c.is_finite() {
            return None;
        }
        Some(Line {
            a: a / n,
            b: b / n,
            c: c / n,
        })
    }

    /// Line through `p` whose normal is `normal` (need not be unit).
    pub fn through(p: Point, normal: Point) -> Option<Self> {
        Line::new(normal.x, normal.y, normal.dot(p))
    }

    /// Supporting line of the segment `p -> q`. The normal points to the right of
    /// the direction of travel, so for a CCW polygon edge the interior is `<= c`.
    pub fn from_segment(p: Point, q: Point) -> Result<Self, GeometryError> {
        let d = q - p;
        if d.norm() <= EPS_GEOM {
            return Err(GeometryError::DegenerateSegment);
        }
        Line::through(p, Point::new(d.y, -d.x)).ok_or(GeometryError::DegenerateSegment)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn normal(&self) -> Point {
        Point::new(self.a, self.b)
    }

    /// Unit direction vector (the normal rotated clockwise).
    pub fn direction(&self) -> Point {
        Point::new(self.b, -self.a)
    }

    /// `a*x + b*y - c`; the signed distance because the normal is unit length.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }

    /// Orthogonal projection of `p` onto the line.
    pub fn project(&self, p: Point) -> Point {
        p - self.normal() * self.signed_distance(p)
    }

    pub fn flipped(&self) -> Line {
        Line {
            a: -self.a,
            b: -self.b,
            c: -self.c,
        }
    }
}

/// Closed half-plane `{p : a*p.x + b*p.y <= c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub boundary: Line,
}

impl HalfPlane {
    pub fn new(boundary: Line) -> Self {
        HalfPlane { boundary }
    }

    /// Half-plane bounded by the line through `p` with outward normal `outward`.
    pub fn through(p: Point, outward: Point) -> Option<Self> {
        Line::through(p, outward).map(HalfPlane::new)
    }

    pub fn contains(&self, p: Point, eps: f64) -> bool {
        self.boundary.signed_distance(p) <= eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineIntersection {
    At(Point),
    Parallel,
}

impl LineIntersection {
    pub fn point(self) -> Option<Point> {
        match self {
            LineIntersection::At(p) => Some(p),
            LineIntersection::Parallel => None,
        }
    }
}

/// Perpendicular bisector of `p`-`q`, oriented so that `p` is on the `<= c` side.
pub fn perpendicular_bisector(p: Point, q: Point) -> Result<Line, GeometryError> {
    let d = q - p;
    if d.norm() <= EPS_GEOM {
        return Err(GeometryError::DegenerateSegment);
    }
    Line::through(p.midpoint(q), d).ok_or(GeometryError::DegenerateSegment)
}

pub fn line_intersect(l1: &Line, l2: &Line) -> LineIntersection {
    let det = l1.a * l2.b - l1.b * l2.a;
    if det.abs() < EPS_PAR {
        return LineIntersection::Parallel;
    }
    LineIntersection::At(Point::new(
        (l1.c * l2.b - l1.b * l2.c) / det,
        (l1.a * l2.c - l1.c * l2.a) / det,
    ))
}

/// Mirror image of `p` across `l`.
pub fn reflect_across(p: Point, l: &Line) -> Point {
    p - l.normal() * (2.0 * l.signed_distance(p))
}

/// True iff `pts` is a strictly convex, counter-clockwise cycle.
pub fn is_convex_ccw(pts: &[Point]) -> bool {
    let n = pts.len();
    if n < 3 || pts.iter().any(|p| !p.is_finite()) {
        return false;
    }
    let mut winding = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let c = pts[(i + 2) % n];
        let e1 = b - a;
        let e2 = c - b;
        let (l1, l2) = (e1.norm(), e2.norm());
        if l1 <= EPS_GEOM || l2 <= EPS_GEOM {
            return false;
        }
        // sine of the turning angle
        if e1.cross(e2) <= EPS_GEOM * l1 * l2 {
            return false;
        }
        winding += e1.cross(e2).atan2(e1.dot(e2));
    }
    // a star polygon turns more than once
    (winding - 2.0 * PI).abs() < 1e-6
}

fn signed_area(pts: &[Point]) -> f64 {
    // relative to the first vertex, for the same reason as `centroid`
    let n = pts.len();
    let o = pts[0];
    let mut s = 0.0;
    for i in 1..n.saturating_sub(1) {
        s += (pts[i] - o).cross(pts[i + 1] - o);
    }
    0.5 * s
}

/// A strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Validates `vertices`; a clockwise cycle is reversed in place.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidPolygon(format!("{} vertices", vertices.len())));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        if !is_convex_ccw(&vertices) {
            return Err(GeometryError::InvalidPolygon("not strictly convex".to_string()));
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Regular `n`-gon with circumradius `radius`, first vertex at angle `phase`.
    pub fn regular(center: Point, n: usize, radius: f64, phase: f64) -> Result<Self, GeometryError> {
        let step = 2.0 * PI / n as f64;
        ConvexPolygon::new(
            (0..n)
                .map(|i| center + Point::from_angle(phase + step * i as f64) * radius)
                .collect(),
        )
    }

    /// Axis-aligned rectangle.
    pub fn rect(min: Point, max: Point) -> Result<Self, GeometryError> {
        ConvexPolygon::new(vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)])
    }

    /// Cleans a clip output: drops near-duplicate and collinear vertices.
    fn from_clip(pts: Vec<Point>) -> Option<Self> {
        let mut out: Vec<Point> = Vec::with_capacity(pts.len());
        for p in pts {
            if out.last().is_none_or(|q| q.dist(p) > EPS_GEOM) {
                out.push(p);
            }
        }
        while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= EPS_GEOM {
            out.pop();
        }
        // collinear removal until stable
        let mut changed = true;
        while changed && out.len() >= 3 {
            changed = false;
            let n = out.len();
            for i in 0..n {
                let a = out[(i + n - 1) % n];
                let b = out[i];
                let c = out[(i + 1) % n];
                let (e1, e2) = (b - a, c - b);
                if e1.cross(e2) <= EPS_GEOM * e1.norm() * e2.norm() {
                    out.remove(i);
                    changed = true;
                    break;
                }
            }
        }
        if out.len() < 3 || signed_area(&out) < EPS_AREA {
            return None;
        }
        ConvexPolygon::new(out).ok()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.len()).map(move |i| self.edge(i))
    }

    /// Shoelace area (strictly positive).
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        // relative to the first vertex to limit cancellation far from the origin
        let o = self.vertices[0];
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a2 += w;
        }
        o + Point::new(cx, cy) * (1.0 / (3.0 * a2))
    }

    /// True if `p` is inside or within `eps` of the boundary.
    pub fn contains(&self, p: Point, eps: f64) -> bool {
        self.edges().all(|(a, b)| {
            let d = b - a;
            // distance to the right of the edge direction is outside
            (p - a).cross(d) / d.norm() <= eps
        })
    }

    /// Smallest distance from `p` to the supporting lines of the edges.
    pub fn min_edge_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| {
                let d = b - a;
                ((p - a).cross(d) / d.norm()).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges().map(|(a, b)| a.dist(b)).collect()
    }

    /// Interior angle at each vertex (radians).
    pub fn interior_angles(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let prev = self.vertices[(i + n - 1) % n];
                let cur = self.vertices[i];
                let next = self.vertices[(i + 1) % n];
                let (u, v) = (prev - cur, next - cur);
                u.cross(v).abs().atan2(u.dot(v))
            })
            .collect()
    }

    /// Equilateral and equiangular within relative tolerance `tol`.
    pub fn is_regular(&self, tol: f64) -> bool {
        let within = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().all(|x| (x - mean).abs() <= tol * mean)
        };
        within(&self.edge_lengths()) && within(&self.interior_angles())
    }

    /// Homothety about `origin`: `v -> origin + lambda * (v - origin)`.
    pub fn scale_about(&self, origin: Point, lambda: f64) -> Result<Self, GeometryError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(GeometryError::NonPositiveScale(lambda));
        }
        Ok(ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| origin + (v - origin) * lambda).collect(),
        })
    }

    pub fn translate(&self, offset: Point) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
        }
    }

    /// Rotation by `angle` radians about `center`.
    pub fn rotate_about(&self, center: Point, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        ConvexPolygon {
            vertices: self
                .vertices
                .iter()
                .map(|&v| {
                    let d = v - center;
                    center + Point::new(c * d.x - s * d.y, s * d.x + c * d.y)
                })
                .collect(),
        }
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Intersection with a half-plane; `None` when the result has no area.
    pub fn clip(&self, hp: &HalfPlane) -> Option<ConvexPolygon> {
        clip_halfplane(self, hp)
    }
}

/// Single-pass convex polygon / half-plane clip. Vertices within [`EPS_GEOM`]
/// of the boundary count as inside, so a boundary through a vertex leaves the
/// polygon unchanged.
pub fn clip_halfplane(poly: &ConvexPolygon, hp: &HalfPlane) -> Option<ConvexPolygon> {
    let verts = poly.vertices();
    let n = verts.len();
    let dist: Vec<f64> = verts.iter().map(|&p| hp.boundary.signed_distance(p)).collect();
    if dist.iter().all(|&d| d <= EPS_GEOM) {
        return Some(poly.clone());
    }
    if dist.iter().all(|&d| d >= -EPS_GEOM) {
        return None;
    }
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let j = (i + 1) % n;
        let (di, dj) = (dist[i], dist[j]);
        if di <= EPS_GEOM {
            out.push(verts[i]);
        }
        if (di < -EPS_GEOM && dj > EPS_GEOM) || (di > EPS_GEOM && dj < -EPS_GEOM) {
            let t = di / (di - dj);
            out.push(verts[i] + (verts[j] - verts[i]) * t);
        }
    }
    ConvexPolygon::from_clip(out)
}
