//! Voronoi-Delaunay dual structure around a single seed.
//!
//! Indexing used throughout the crate: Delaunay vertex `C_i` lies on ray `i`
//! of the sector frame; Voronoi vertex `V_i` is the intersection of the
//! bisectors of `O C_i` and `O C_{i+1}` and lies in sector `i` (between rays
//! `i` and `i + 1`). The Voronoi edge `V_{i-1} V_i` is therefore dual to `C_i`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{
    line_intersect, perpendicular_bisector, reflect_across, ConvexPolygon, GeometryError, HalfPlane, Line,
    LineIntersection, Point, EPS_GEOM,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum VddError {
    #[error("need at least 3 sectors, got {0}")]
    InvalidN(usize),
    #[error("invalid sector frame: {0}")]
    InvalidFrame(String),
    #[error("Delaunay vertex {0} is not on its sector ray")]
    OffRay(usize),
    #[error("Voronoi vertex {index} falls outside its sector")]
    NotDelaunay { index: usize },
    #[error("bisectors {index} and {next} are parallel", next = index + 1)]
    ParallelBisectors { index: usize },
    #[error("seed is not strictly inside the Voronoi polygon")]
    SeedOutside,
    #[error("anonymity zone is empty")]
    EmptyZone,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Rays from the seed at strictly increasing absolute angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorFrame {
    seed: Point,
    ray_angles: Vec<f64>,
}

impl SectorFrame {
    pub fn new(seed: Point, ray_angles: Vec<f64>) -> Result<Self, VddError> {
        let n = ray_angles.len();
        if n < 3 {
            return Err(VddError::InvalidN(n));
        }
        if !seed.is_finite() || ray_angles.iter().any(|a| !a.is_finite()) {
            return Err(VddError::Geometry(GeometryError::NonFinite));
        }
        let frame = SectorFrame { seed, ray_angles };
        for (i, a) in frame.sector_angles().into_iter().enumerate() {
            if !(a > 0.0 && a < PI) {
                return Err(VddError::InvalidFrame(format!(
                    "sector angle {i} = {a} outside (0, pi)"
                )));
            }
        }
        Ok(frame)
    }

    pub fn translate(&self, offset: Point) -> Self {
        SectorFrame {
            seed: self.seed + offset,
            ray_angles: self.ray_angles.clone(),
        }
    }

    /// Equal sectors starting at `theta0`.
    pub fn regular(seed: Point, n: usize, theta0: f64) -> Result<Self, VddError> {
        if n < 3 {
            return Err(VddError::InvalidN(n));
        }
        let step = 2.0 * PI / n as f64;
        SectorFrame::new(seed, (0..n).map(|i| theta0 + step * i as f64).collect())
    }

    /// Frame whose rays pass through `points`, taken in the given cyclic order.
    pub fn through_points(seed: Point, points: &[Point]) -> Result<Self, VddError> {
        let mut angles = Vec::with_capacity(points.len());
        for p in points {
            let mut a = (*p - seed).angle();
            if let Some(&prev) = angles.last() {
                while a <= prev {
                    a += 2.0 * PI;
                }
            }
            angles.push(a);
        }
        SectorFrame::new(seed, angles)
    }

    pub fn seed(&self) -> Point {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.ray_angles.len()
    }

    pub fn ray_angles(&self) -> &[f64] {
        &self.ray_angles
    }

    /// `alpha_i = theta_{i+1} - theta_i`, wrapping around for the last sector.
    pub fn sector_angles(&self) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                if i + 1 < n {
                    self.ray_angles[i + 1] - self.ray_angles[i]
                } else {
                    self.ray_angles[0] + 2.0 * PI - self.ray_angles[n - 1]
                }
            })
            .collect()
    }

    /// Unit direction of ray `i` (index taken modulo `n`).
    pub fn ray(&self, i: usize) -> Point {
        Point::from_angle(self.ray_angles[i % self.n()])
    }

    /// Point at distance `radius` along ray `i`.
    pub fn point_on_ray(&self, i: usize, radius: f64) -> Point {
        self.seed + self.ray(i) * radius
    }

    /// Whether `p` lies in the closed wedge between rays `i` and `i + 1`,
    /// with `tol` relative slack on the sine of the angle to either ray.
    pub fn in_sector(&self, i: usize, p: Point, tol: f64) -> bool {
        let v = p - self.seed;
        let len = v.norm();
        if len <= EPS_GEOM {
            return false;
        }
        self.ray(i).cross(v) >= -tol * len && v.cross(self.ray(i + 1)) >= -tol * len
    }
}

/// Seed, Delaunay polygon and (possibly shifted) Voronoi polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct VddInstance {
    frame: SectorFrame,
    delaunay: ConvexPolygon,
    voronoi: ConvexPolygon,
}

impl VddInstance {
    /// Places `C_i` at `radii[i]` on ray `i` and builds the dual Voronoi polygon.
    pub fn from_radii(frame: SectorFrame, radii: &[f64]) -> Result<Self, VddError> {
        if radii.len() != frame.n() {
            return Err(VddError::InvalidFrame(format!(
                "{} radii for {} rays",
                radii.len(),
                frame.n()
            )));
        }
        let pc = ConvexPolygon::new(
            radii
                .iter()
                .enumerate()
                .map(|(i, &r)| frame.point_on_ray(i, r))
                .collect(),
        )?;
        let pv = voronoi_from_delaunay(&frame, &pc)?;
        Ok(VddInstance {
            frame,
            delaunay: pc,
            voronoi: pv,
        })
    }

    /// Same frame and Delaunay polygon with a replacement Voronoi polygon.
    pub(crate) fn with_voronoi(&self, voronoi: ConvexPolygon) -> Self {
        VddInstance {
            frame: self.frame.clone(),
            delaunay: self.delaunay.clone(),
            voronoi,
        }
    }

    pub fn translate(&self, offset: Point) -> Self {
        VddInstance {
            frame: self.frame.translate(offset),
            delaunay: self.delaunay.translate(offset),
            voronoi: self.voronoi.translate(offset),
        }
    }

    pub fn frame(&self) -> &SectorFrame {
        &self.frame
    }

    pub fn seed(&self) -> Point {
        self.frame.seed
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn delaunay(&self) -> &ConvexPolygon {
        &self.delaunay
    }

    pub fn voronoi(&self) -> &ConvexPolygon {
        &self.voronoi
    }

    /// Distance from the seed to each Voronoi edge line; entry `i` is the edge
    /// dual to `C_i`.
    pub fn edge_distances(&self) -> Vec<f64> {
        let n = self.n();
        let v = self.voronoi.vertices();
        (0..n)
            .map(|i| {
                let a = v[(i + n - 1) % n];
                let b = v[i];
                ((self.seed() - a).cross(b - a) / a.dist(b)).abs()
            })
            .collect()
    }
}

/// Regular `n`-gon of circumradius `radius` centred on `seed`, first ray at angle 0.
pub fn regular_delaunay(seed: Point, n: usize, radius: f64) -> Result<VddInstance, VddError> {
    if !(radius > 0.0) {
        return Err(VddError::InvalidFrame(format!("radius {radius}")));
    }
    let frame = SectorFrame::regular(seed, n, 0.0)?;
    VddInstance::from_radii(frame, &vec![radius; n])
}

/// `V_i = bisector(O, C_i) ∩ bisector(O, C_{i+1})`, each checked to fall in sector `i`.
pub fn voronoi_from_delaunay(frame: &SectorFrame, delaunay: &ConvexPolygon) -> Result<ConvexPolygon, VddError> {
    let n = frame.n();
    if delaunay.len() != n {
        return Err(VddError::InvalidFrame(format!(
            "{} Delaunay vertices for {} rays",
            delaunay.len(),
            n
        )));
    }
    let o = frame.seed();
    let cs = delaunay.vertices();
    for (i, &c) in cs.iter().enumerate() {
        let v = c - o;
        let u = frame.ray(i);
        if v.norm() <= EPS_GEOM || u.dot(v) <= 0.0 || u.cross(v).abs() > 1e-9 * v.norm() {
            return Err(VddError::OffRay(i));
        }
    }
    let bisectors: Vec<Line> = cs
        .iter()
        .map(|&c| perpendicular_bisector(o, c))
        .collect::<Result<_, _>>()?;
    let mut vs = Vec::with_capacity(n);
    for i in 0..n {
        let v = match line_intersect(&bisectors[i], &bisectors[(i + 1) % n]) {
            LineIntersection::At(p) => p,
            LineIntersection::Parallel => return Err(VddError::ParallelBisectors { index: i }),
        };
        if !frame.in_sector(i, v, 1e-12) {
            return Err(VddError::NotDelaunay { index: i });
        }
        vs.push(v);
    }
    let pv = ConvexPolygon::new(vs)?;
    if !pv.contains(o, 0.0) || pv.min_edge_distance(o) <= EPS_GEOM {
        return Err(VddError::SeedOutside);
    }
    Ok(pv)
}

/// Reflects `o` across each edge line: `C_i` comes from edge `V_{i-1} V_i`.
pub fn delaunay_from_voronoi(o: Point, voronoi: &ConvexPolygon) -> Result<ConvexPolygon, VddError> {
    if !voronoi.contains(o, 0.0) || voronoi.min_edge_distance(o) <= EPS_GEOM {
        return Err(VddError::SeedOutside);
    }
    let v = voronoi.vertices();
    let n = v.len();
    let cs = (0..n)
        .map(|i| Line::from_segment(v[(i + n - 1) % n], v[i]).map(|l| reflect_across(o, &l)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvexPolygon::new(cs)?)
}

/// Convex region of points that could have produced the Voronoi polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonymityZone {
    polygon: ConvexPolygon,
}

impl AnonymityZone {
    pub fn polygon(&self) -> &ConvexPolygon {
        &self.polygon
    }

    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    /// Vertex count; varies with the clip and need not equal `n`.
    pub fn vertex_count(&self) -> usize {
        self.polygon.len()
    }

    pub fn contains(&self, p: Point, eps: f64) -> bool {
        self.polygon.contains(p, eps)
    }

    pub fn translate(&self, offset: Point) -> Self {
        AnonymityZone {
            polygon: self.polygon.translate(offset),
        }
    }

    pub fn scale_about(&self, origin: Point, lambda: f64) -> Result<Self, GeometryError> {
        Ok(AnonymityZone {
            polygon: self.polygon.scale_about(origin, lambda)?,
        })
    }
}

/// The two half-planes bounding the strip perpendicular to edge `a -> b`.
pub fn edge_strip(a: Point, b: Point) -> Result<[HalfPlane; 2], GeometryError> {
    let d = b - a;
    if d.norm() <= EPS_GEOM {
        return Err(GeometryError::DegenerateSegment);
    }
    let lo = HalfPlane::through(a, -d).ok_or(GeometryError::DegenerateSegment)?;
    let hi = HalfPlane::through(b, d).ok_or(GeometryError::DegenerateSegment)?;
    Ok([lo, hi])
}

/// `P_v` clipped by both boundaries of every edge strip.
pub fn anonymity_zone(voronoi: &ConvexPolygon) -> Result<AnonymityZone, VddError> {
    let mut zone = voronoi.clone();
    for (a, b) in voronoi.edges() {
        for hp in edge_strip(a, b)? {
            zone = zone.clip(&hp).ok_or(VddError::EmptyZone)?;
        }
    }
    Ok(AnonymityZone { polygon: zone })
}
