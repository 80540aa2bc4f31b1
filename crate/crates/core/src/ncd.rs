//! n concealing disks (n-CD) comparison baseline.
//!
//! This is a reimplementation from a two-sentence summary, not a port of the
//! original construction: disk centers are spread at equal angles with a
//! random phase and a random offset from the user, and each radius is just
//! large enough for the disk to cover the region of interest.
//!
//! The anonymity zone is the intersection of the disks (privacy level) and the
//! concealing cost is the area of their union.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{ConvexPolygon, Point, EPS_GEOM};
use crate::metrics::{upstream_bytes_ncd, CostReport};

pub const DEFAULT_CIRCLE_SEGMENTS: usize = 256;
/// Grid resolution of the point-sampling cross-check.
const CHECK_GRID: usize = 128;
/// Largest tolerated relative gap between polygonal and sampled areas.
const CHECK_TOLERANCE: f64 = 0.01;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NcdError {
    #[error("need at least 3 disks, got {0}")]
    InvalidN(usize),
    #[error("ROI radius must be positive")]
    InvalidRadius,
    #[error("circle_segments = {0}, need at least 64")]
    TooFewSegments(usize),
    #[error("disk {0} does not cover the region of interest")]
    Uncovered(usize),
    #[error("{what}: polygonal area {polygonal} vs sampled {sampled}")]
    ApproximationUnstable {
        what: &'static str,
        polygonal: f64,
        sampled: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: Point) -> bool {
        let d = p - self.center;
        d.dot(d) <= self.radius * self.radius
    }

    /// Distance from `from` (inside the disk) to the circle along unit `dir`.
    fn exit_distance(&self, from: Point, dir: Point) -> f64 {
        let w = from - self.center;
        let b = w.dot(dir);
        let c = w.dot(w) - self.radius * self.radius;
        -b + (b * b - c).max(0.0).sqrt()
    }

    /// Circumscribed regular polygon with `segments` sides.
    #[cfg(test)]
    fn outer_polygon(&self, segments: usize) -> ConvexPolygon {
        let half = PI / segments as f64;
        ConvexPolygon::regular(self.center, segments, self.radius / half.cos(), 0.0).expect("regular polygon")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskSet {
    disks: Vec<Disk>,
    seed: Point,
    r: f64,
}

impl DiskSet {
    /// Checks that every disk covers the ROI disk of radius `r` around `seed`.
    pub fn new(disks: Vec<Disk>, seed: Point, r: f64) -> Result<Self, NcdError> {
        if disks.len() < 3 {
            return Err(NcdError::InvalidN(disks.len()));
        }
        if !(r > 0.0) {
            return Err(NcdError::InvalidRadius);
        }
        for (i, d) in disks.iter().enumerate() {
            if d.center.dist(seed) + r > d.radius + EPS_GEOM * d.radius.max(1.0) {
                return Err(NcdError::Uncovered(i));
            }
        }
        Ok(DiskSet { disks, seed, r })
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn seed(&self) -> Point {
        self.seed
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn n(&self) -> usize {
        self.disks.len()
    }

    pub fn in_intersection(&self, p: Point) -> bool {
        self.disks.iter().all(|d| d.contains(p))
    }

    pub fn in_union(&self, p: Point) -> bool {
        self.disks.iter().any(|d| d.contains(p))
    }

    /// Intersection of the circumscribed polygons; contains the true intersection.
    ///
    /// All circumscribed polygons share their edge normals `u_k`, so the
    /// intersection is `{p : u_k . (p - O) <= g_k}` with `g_k` the smallest
    /// offset over the disks. Since `O` is interior, the active constraints are
    /// the convex hull of the dual points `u_k / g_k`, which are already sorted
    /// by angle.
    pub fn intersection_polygon(&self, segments: usize) -> ConvexPolygon {
        let o = self.seed;
        let normals: Vec<Point> = (0..segments)
            .map(|k| Point::from_angle((2 * k + 1) as f64 * PI / segments as f64))
            .collect();
        let offsets: Vec<f64> = normals
            .iter()
            .map(|&u| {
                self.disks
                    .iter()
                    .map(|d| u.dot(d.center - o) + d.radius)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let dual: Vec<Point> = normals.iter().zip(&offsets).map(|(&u, &g)| u * (1.0 / g)).collect();

        // Graham pass over the angularly sorted dual points, starting from the
        // farthest one (always on the hull)
        let start = (0..segments)
            .max_by(|&a, &b| dual[a].norm().total_cmp(&dual[b].norm()))
            .expect("segments > 0");
        let mut hull: Vec<usize> = Vec::with_capacity(segments);
        for j in 0..=segments {
            let k = (start + j) % segments;
            while hull.len() >= 2 {
                let (a, b) = (dual[hull[hull.len() - 2]], dual[hull[hull.len() - 1]]);
                if (b - a).cross(dual[k] - b) > 1e-12 * (b - a).norm() * (dual[k] - b).norm() {
                    break;
                }
                hull.pop();
            }
            hull.push(k);
        }
        hull.pop();

        let h = hull.len();
        let vertices = (0..h)
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % h]);
                let (ua, ub) = (normals[a], normals[b]);
                let det = ua.cross(ub);
                let x = Point::new(
                    (offsets[a] * ub.y - offsets[b] * ua.y) / det,
                    (ua.x * offsets[b] - ub.x * offsets[a]) / det,
                );
                o + x
            })
            .collect();
        ConvexPolygon::new(vertices).expect("intersection contains the ROI disk")
    }

    /// Union boundary sampled at `4 * segments` directions from the seed. The
    /// union is star-shaped about the seed since every disk contains it.
    pub fn union_outline(&self, segments: usize) -> Vec<Point> {
        let k = 4 * segments;
        (0..k)
            .map(|j| {
                let dir = Point::from_angle(2.0 * PI * j as f64 / k as f64);
                let reach = self
                    .disks
                    .iter()
                    .map(|d| d.exit_distance(self.seed, dir))
                    .fold(0.0, f64::max);
                self.seed + dir * reach
            })
            .collect()
    }
}

/// `n` disks with centers at `seed + d_i (cos phi_i, sin phi_i)`,
/// `phi_i = phi_0 + 2 pi i / n`, `d_i ~ U(0, r]`, radius `d_i + r`.
pub fn generate_ncd<R: Rng + ?Sized>(seed: Point, n: usize, r: f64, rng: &mut R) -> Result<DiskSet, NcdError> {
    if n < 3 {
        return Err(NcdError::InvalidN(n));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(NcdError::InvalidRadius);
    }
    let phi0 = rng.gen_range(0.0..2.0 * PI);
    let disks = (0..n)
        .map(|i| {
            let phi = phi0 + 2.0 * PI * i as f64 / n as f64;
            // (0, r]
            let d = r * (1.0 - rng.gen::<f64>());
            Disk {
                center: seed + Point::from_angle(phi) * d,
                radius: d + r,
            }
        })
        .collect();
    DiskSet::new(disks, seed, r)
}

fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

/// Midpoint-grid estimate of the area of `{p : inside(p)}` within a box.
fn grid_area(lo: Point, hi: Point, inside: impl Fn(Point) -> bool) -> f64 {
    let g = CHECK_GRID;
    let (w, h) = ((hi.x - lo.x) / g as f64, (hi.y - lo.y) / g as f64);
    let mut hits = 0usize;
    for i in 0..g {
        for j in 0..g {
            if inside(Point::new(lo.x + (i as f64 + 0.5) * w, lo.y + (j as f64 + 0.5) * h)) {
                hits += 1;
            }
        }
    }
    hits as f64 * w * h
}

fn bounds(pts: &[Point]) -> (Point, Point) {
    pts.iter().fold(
        (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        },
    )
}

/// Polygonal areas of the disk union and intersection, each cross-checked
/// against a point-sampling estimate on the exact disks.
pub fn ncd_costs(set: &DiskSet, circle_segments: usize) -> Result<CostReport, NcdError> {
    if circle_segments < 64 {
        return Err(NcdError::TooFewSegments(circle_segments));
    }
    let inter = set.intersection_polygon(circle_segments);
    let gamma = inter.area();
    let outline = set.union_outline(circle_segments);
    let psi = polygon_area(&outline);

    let (lo, hi) = inter.bounding_box();
    let sampled = grid_area(lo, hi, |p| set.in_intersection(p));
    check("intersection", gamma, sampled)?;
    let (lo, hi) = bounds(&outline);
    let pad = Point::new(1e-3 * (hi.x - lo.x), 1e-3 * (hi.y - lo.y));
    let sampled = grid_area(lo - pad, hi + pad, |p| set.in_union(p));
    check("union", psi, sampled)?;

    Ok(CostReport::new(psi, gamma, upstream_bytes_ncd(set.n()), 0))
}

fn check(what: &'static str, polygonal: f64, sampled: f64) -> Result<(), NcdError> {
    if (polygonal - sampled).abs() > CHECK_TOLERANCE * polygonal {
        return Err(NcdError::ApproximationUnstable {
            what,
            polygonal,
            sampled,
        });
    }
    Ok(())
}
