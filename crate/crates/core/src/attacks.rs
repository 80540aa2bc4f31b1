//! Attacks on a submitted concealing polygon.
//!
//! - centroid guesses (of `P_v*`, and the two-centroid circle of `P_v*`/`A_z*`)
//! - protocol reversal: every point of `A_z*` must admit a dual structure
//!   satisfying the public protocol
//! - center recovery for sector-only shifting, where all Voronoi edges are
//!   equidistant from the seed

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{line_intersect, ConvexPolygon, Line, Point, EPS_GEOM};
use crate::models::{AnonymizationResult, ModelKind};
use crate::vdd::{delaunay_from_voronoi, voronoi_from_delaunay, AnonymityZone, SectorFrame};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AttackError {
    #[error("candidate point lies outside the anonymity zone")]
    PointOutsideZone,
    #[error("no pair of vertex bisectors intersects")]
    DegenerateConfiguration,
}

/// Per-cell statistics of the centroid attacks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidAttackStats {
    pub model: ModelKind,
    pub n: usize,
    pub kappa: f64,
    pub r: f64,
    pub trials: usize,
    pub failures: usize,
    /// mean |centroid(P_v*) - O|
    pub mean_dist_pv: f64,
    pub sd_dist_pv: f64,
    /// mean |centroid(A_z*) - O|
    pub mean_dist_az: f64,
    pub circle_hit_fraction: f64,
}

/// Guesses the seed as the centroid of the concealing polygon.
pub fn centroid_attack(res: &AnonymizationResult, seed: Point) -> (Point, f64) {
    let guess = res.concealing.centroid();
    (guess, guess.dist(seed))
}

/// Whether `seed` lies in the closed disk whose diameter joins the centroids
/// of the concealing polygon and of the anonymity zone.
pub fn two_centroid_circle_test(res: &AnonymizationResult, seed: Point) -> bool {
    centroid_circle_contains(&res.concealing, res.zone_scaled.polygon(), seed)
}

pub fn centroid_circle_contains(concealing: &ConvexPolygon, zone: &ConvexPolygon, seed: Point) -> bool {
    let a = concealing.centroid();
    let b = zone.centroid();
    if a.dist(b) <= EPS_GEOM {
        return seed.dist(a) <= EPS_GEOM;
    }
    // Thales: inside the disk iff the diameter subtends a non-acute angle
    (seed - a).dot(seed - b) <= 0.0
}

/// Reconstructs the dual structure for candidate `o` and checks it against the
/// public protocol of `kind`.
pub fn feasibility_check(o: Point, res: &AnonymizationResult, kind: ModelKind) -> Result<bool, AttackError> {
    check_candidate(o, &res.concealing, &res.zone_scaled, kind)
}

/// [`feasibility_check`] on bare polygons.
///
/// Checks, for the reconstructed Delaunay polygon `P_c*` of `o`:
/// each `C_i - o` is perpendicular to its Voronoi edge, whose line bisects
/// `o C_i`; every `C_i` is outside the Voronoi polygon; rebuilding the Voronoi
/// polygon from `(o, P_c*)` reproduces `concealing` with every vertex in its
/// sector. Equal-sector models additionally need all angles at `o` to be `2pi/n`.
pub fn check_candidate(
    o: Point,
    concealing: &ConvexPolygon,
    zone: &AnonymityZone,
    kind: ModelKind,
) -> Result<bool, AttackError> {
    let (lo, hi) = concealing.bounding_box();
    let size = lo.dist(hi).max(1.0);
    let tol = 1e-9 * size;
    if !zone.contains(o, tol) {
        return Err(AttackError::PointOutsideZone);
    }
    let pc = match delaunay_from_voronoi(o, concealing) {
        Ok(pc) => pc,
        Err(crate::vdd::VddError::SeedOutside) => return Err(AttackError::PointOutsideZone),
        Err(_) => return Ok(false),
    };
    let vs = concealing.vertices();
    let cs = pc.vertices();
    let n = vs.len();
    for i in 0..n {
        let (a, b) = (vs[(i + n - 1) % n], vs[i]);
        let edge = (b - a).normalized();
        let spoke = cs[i] - o;
        if edge.dot(spoke.normalized()).abs() > 1e-9 {
            return Ok(false);
        }
        let line = Line::from_segment(a, b).expect("valid polygon edge");
        if line.signed_distance(o.midpoint(cs[i])).abs() > tol {
            return Ok(false);
        }
        if concealing.contains(cs[i], 0.0) {
            return Ok(false);
        }
    }
    let frame = match SectorFrame::through_points(o, cs) {
        Ok(f) => f,
        Err(_) => return Ok(false),
    };
    let rebuilt = match voronoi_from_delaunay(&frame, &pc) {
        Ok(pv) => pv,
        Err(_) => return Ok(false),
    };
    if rebuilt.vertices().iter().zip(vs).any(|(p, q)| p.dist(*q) > tol) {
        return Ok(false);
    }
    if !kind.sector_shift() {
        let equal = 2.0 * PI / n as f64;
        if frame.sector_angles().iter().any(|a| (a - equal).abs() > 1e-9) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Uniform points of the zone by rejection from its bounding box.
pub fn sample_zone<R: Rng + ?Sized>(zone: &AnonymityZone, count: usize, rng: &mut R) -> Vec<Point> {
    let (lo, hi) = zone.polygon().bounding_box();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Point::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
        if zone.contains(p, 0.0) {
            out.push(p);
        }
    }
    out
}

/// Interior angle bisector at vertex `i`.
fn vertex_bisector(poly: &ConvexPolygon, i: usize) -> (Point, Point) {
    let v = poly.vertices();
    let n = v.len();
    let cur = v[i];
    let to_prev = (v[(i + n - 1) % n] - cur).normalized();
    let to_next = (v[(i + 1) % n] - cur).normalized();
    (cur, (to_prev + to_next).normalized())
}

/// Recovers the seed of a sector-only instance from its Voronoi polygon.
///
/// All edge lines are equidistant from the seed, so it lies on the interior
/// bisector of every vertex; two adjacent bisectors pin it down. The
/// best-conditioned adjacent pair is used.
pub fn recover_alpha_center(voronoi: &ConvexPolygon) -> Result<Point, AttackError> {
    let n = voronoi.len();
    let bis: Vec<(Point, Point)> = (0..n).map(|i| vertex_bisector(voronoi, i)).collect();
    let (best, sine) = (0..n)
        .map(|i| (i, bis[i].1.cross(bis[(i + 1) % n].1).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("polygon has vertices");
    if sine < 1e-9 {
        return Err(AttackError::DegenerateConfiguration);
    }
    let line = |(p, d): (Point, Point)| Line::through(p, d.perp()).expect("unit direction");
    line_intersect(&line(bis[best]), &line(bis[(best + 1) % n]))
        .point()
        .ok_or(AttackError::DegenerateConfiguration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{anonymize, model_alpha, ModelParams};
    use crate::vdd::{anonymity_zone, regular_delaunay};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn regular_cell_centroid_is_the_seed() {
        let o = Point::new(12.0, -7.0);
        let inst = regular_delaunay(o, 7, 1.0).unwrap();
        assert!(inst.voronoi().centroid().dist(o) < 1e-12);
        let zone = anonymity_zone(inst.voronoi()).unwrap();
        // centroids coincide at the seed: degenerate circle contains it
        assert!(centroid_circle_contains(inst.voronoi(), zone.polygon(), o));
        assert!(!centroid_circle_contains(
            inst.voronoi(),
            zone.polygon(),
            o + Point::new(1e-3, 0.0)
        ));
    }

    #[test]
    fn attacks_are_translation_and_rotation_equivariant() {
        let o = Point::new(300.0, 400.0);
        let shift = Point::new(-1234.5, 987.25);
        for seed in 0..50 {
            let res = anonymize(o, ModelKind::II, &ModelParams::new(6, 100.0).with_seed(seed)).unwrap();
            let (_, err) = centroid_attack(&res, o);
            let moved = res.concealing.translate(shift);
            assert!((moved.centroid().dist(o + shift) - err).abs() < 1e-9);
            let hit = two_centroid_circle_test(&res, o);
            let zone_moved = res.zone_scaled.polygon().translate(shift);
            assert_eq!(centroid_circle_contains(&moved, &zone_moved, o + shift), hit);
            let rot = res.concealing.rotate_about(o, 1.1);
            assert!((rot.centroid().dist(o) - err).abs() < 1e-9);
        }
    }

    #[test]
    fn centroid_error_positive_for_exterior_shifting() {
        for n in 3..=10 {
            let mean: f64 = (0..200)
                .map(|s| {
                    let res = anonymize(Point::ORIGIN, ModelKind::II, &ModelParams::new(n, 1.0).with_seed(s)).unwrap();
                    centroid_attack(&res, Point::ORIGIN).1
                })
                .sum::<f64>()
                / 200.0;
            assert!(mean > 0.0, "n={n}");
        }
    }

    #[test]
    fn genuine_seed_is_feasible() {
        for kind in ModelKind::ANONYMIZING {
            for n in 3..=10 {
                let o = Point::new(2500.0, 7500.0);
                let res = anonymize(
                    o,
                    kind,
                    &ModelParams::new(n, 1000.0).with_kappa(0.1).with_seed(n as u64),
                )
                .unwrap();
                assert_eq!(feasibility_check(o, &res, kind), Ok(true), "{kind} n={n}");
            }
        }
    }

    #[test]
    fn sampled_zone_points_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for kind in ModelKind::ANONYMIZING {
            for n in [5, 8] {
                let res = anonymize(
                    Point::ORIGIN,
                    kind,
                    &ModelParams::new(n, 10.0).with_kappa(0.1).with_seed(3),
                )
                .unwrap();
                for p in sample_zone(&res.zone_scaled, 100, &mut rng) {
                    assert_eq!(feasibility_check(p, &res, kind), Ok(true), "{kind} n={n} {p:?}");
                }
            }
        }
    }

    #[test]
    fn vertex_of_cell_is_outside_zone() {
        let res = anonymize(Point::ORIGIN, ModelKind::I, &ModelParams::new(7, 10.0).with_seed(1)).unwrap();
        let v = res.concealing.vertices()[0];
        assert_eq!(
            feasibility_check(v, &res, ModelKind::I),
            Err(AttackError::PointOutsideZone)
        );
    }

    #[test]
    fn equal_sector_check_rejects_perturbed_angles() {
        // an alpha-variant polygon generally fails the equal-angle test of Model I
        let mut rejected = 0;
        for s in 0..20 {
            let res = anonymize(
                Point::ORIGIN,
                ModelKind::IAlpha,
                &ModelParams::new(6, 1.0).with_kappa(0.1).with_seed(s),
            )
            .unwrap();
            if feasibility_check(Point::ORIGIN, &res, ModelKind::I) == Ok(false) {
                rejected += 1;
            }
        }
        assert_eq!(rejected, 20);
    }

    #[test]
    fn alpha_center_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let o = Point::new(-42.0, 17.0);
        let flat = regular_delaunay(o, 6, 1.0).unwrap();
        assert!(recover_alpha_center(flat.voronoi()).unwrap().dist(o) < 1e-12);
        for n in 4..=10 {
            for _ in 0..100 {
                let inst = model_alpha(o, n, 1.0, 0.1, &mut rng).unwrap();
                let got = recover_alpha_center(inst.voronoi()).unwrap();
                assert!(got.dist(o) < 1e-6, "n={n} err={}", got.dist(o));
            }
        }
    }

    #[test]
    fn alpha_attack_fails_on_interior_shifting() {
        let o = Point::new(5.0, 5.0);
        let mut misses = 0;
        for s in 0..50 {
            let res = anonymize(o, ModelKind::I, &ModelParams::new(6, 1.0).with_seed(s)).unwrap();
            let got = recover_alpha_center(res.instance.voronoi()).unwrap();
            if got.dist(o) > 1e-3 {
                misses += 1;
            }
        }
        assert_eq!(misses, 50);
    }
}
