//! Anonymizing models built from the shifting principles.
//!
//! | model  | pipeline                 |
//! |--------|--------------------------|
//! | I      | S0 -> R1 -> P1 -> R0     |
//! | II     | S0 -> P2 -> R1 -> R0     |
//! | III    | S0 -> P2 -> R1 -> P1 -> R0 |
//! | I_a    | S1 -> R1 -> P1 -> R0     |
//! | II_a   | S1 -> P2 -> R1 -> R0     |
//! | III_a  | S1 -> P2 -> R1 -> P1 -> R0 |
//!
//! `S0`/`S1` build equal or perturbed sector rays, `P2` moves Delaunay
//! vertices along their rays, `R1` takes the Voronoi dual (and its anonymity
//! zone), `P1` moves Voronoi edges parallel to themselves and `R0` scales the
//! result about the seed so it covers the requested radius.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{line_intersect, ConvexPolygon, Line, Point};
use crate::vdd::{anonymity_zone, AnonymityZone, SectorFrame, VddError, VddInstance};

/// Relative tolerance of the regularity rejection test.
pub const TOL_REGULAR: f64 = 1e-6;
/// Lower range bounds are clamped to this fraction of the previous
/// radius/distance when the sector angle is at least a right angle.
pub const MIN_RANGE_FRACTION: f64 = 1e-3;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("model not applicable for anonymization")]
    NotApplicable,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empty shifting range at index {index}")]
    RangeEmpty { index: usize },
    #[error("shifted polygon is regular")]
    Regular,
    #[error("shifting failed after {attempts} attempts (last: {last})")]
    ShiftFailed { attempts: u32, last: String },
    #[error(transparent)]
    Vdd(#[from] VddError),
}

impl From<crate::geometry::GeometryError> for ModelError {
    fn from(e: crate::geometry::GeometryError) -> Self {
        ModelError::Vdd(VddError::Geometry(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    I,
    II,
    III,
    IAlpha,
    IIAlpha,
    IIIAlpha,
    /// Sector shifting alone; leaks the seed, demonstration only.
    AlphaOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Principle {
    /// equal sector angles
    S0,
    /// perturbed sector angles
    S1,
    /// interior (Voronoi edge) shifting
    P1,
    /// exterior (Delaunay vertex) shifting
    P2,
    /// Voronoi-Delaunay duality
    R1,
    /// scaling about the seed
    R0,
}

impl ModelKind {
    pub const ANONYMIZING: [ModelKind; 6] = [
        ModelKind::I,
        ModelKind::II,
        ModelKind::III,
        ModelKind::IAlpha,
        ModelKind::IIAlpha,
        ModelKind::IIIAlpha,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::I => "I",
            ModelKind::II => "II",
            ModelKind::III => "III",
            ModelKind::IAlpha => "Ia",
            ModelKind::IIAlpha => "IIa",
            ModelKind::IIIAlpha => "IIIa",
            ModelKind::AlphaOnly => "alpha",
        }
    }

    pub fn sector_shift(self) -> bool {
        matches!(
            self,
            ModelKind::IAlpha | ModelKind::IIAlpha | ModelKind::IIIAlpha | ModelKind::AlphaOnly
        )
    }

    pub fn exterior_shift(self) -> bool {
        matches!(
            self,
            ModelKind::II | ModelKind::III | ModelKind::IIAlpha | ModelKind::IIIAlpha
        )
    }

    pub fn interior_shift(self) -> bool {
        matches!(
            self,
            ModelKind::I | ModelKind::III | ModelKind::IAlpha | ModelKind::IIIAlpha
        )
    }

    /// Principle sequence executed by [`anonymize`]; empty for `AlphaOnly`.
    pub fn pipeline(self) -> Vec<Principle> {
        if self == ModelKind::AlphaOnly {
            return Vec::new();
        }
        let mut p = vec![if self.sector_shift() {
            Principle::S1
        } else {
            Principle::S0
        }];
        if self.exterior_shift() {
            p.push(Principle::P2);
        }
        p.push(Principle::R1);
        if self.interior_shift() {
            p.push(Principle::P1);
        }
        p.push(Principle::R0);
        p
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "I" | "1" => ModelKind::I,
            "II" | "2" => ModelKind::II,
            "III" | "3" => ModelKind::III,
            "Ia" | "I_a" | "IAlpha" => ModelKind::IAlpha,
            "IIa" | "II_a" | "IIAlpha" => ModelKind::IIAlpha,
            "IIIa" | "III_a" | "IIIAlpha" => ModelKind::IIIAlpha,
            "alpha" | "a" | "AlphaOnly" => ModelKind::AlphaOnly,
            other => return Err(format!("unknown model '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    /// ROI radius (meters).
    pub r: f64,
    /// Requested anonymity radius (meters).
    pub iota: Option<f64>,
    /// Range of the relative sector-angle perturbation.
    pub kappa: f64,
    /// Cap on the radius growth between neighbouring Delaunay vertices.
    pub mu: f64,
    /// Sector radius before scaling.
    pub r0: f64,
    pub rng_seed: u64,
    pub max_retries: u32,
}

impl ModelParams {
    pub fn new(n: usize, r: f64) -> Self {
        ModelParams {
            n,
            r,
            iota: None,
            kappa: 0.0,
            mu: 2.0,
            r0: 1.0,
            rng_seed: 0,
            max_retries: 100,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_iota(mut self, iota: Option<f64>) -> Self {
        self.iota = iota;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidParams(m));
        if self.n < 3 {
            return bad(format!("n = {} (need n >= 3)", self.n));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return bad(format!("r = {} (need r > 0)", self.r));
        }
        if let Some(iota) = self.iota {
            if !(iota > 0.0) || !iota.is_finite() {
                return bad(format!("iota = {iota} (need iota > 0)"));
            }
        }
        if !(0.0..0.5).contains(&self.kappa) {
            return bad(format!("kappa = {} (need 0 <= kappa < 0.5)", self.kappa));
        }
        if !(self.mu > 1.0) || !self.mu.is_finite() {
            return bad(format!("mu = {} (need mu > 1)", self.mu));
        }
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return bad(format!("r0 = {} (need r0 > 0)", self.r0));
        }
        if self.max_retries == 0 {
            return bad("max_retries = 0".to_string());
        }
        Ok(())
    }
}

/// Draws a value from `[lo, hi)`; implemented for every `Rng`.
pub trait RangeSampler {
    fn sample(&mut self, lo: f64, hi: f64) -> f64;
}

impl<R: Rng + ?Sized> RangeSampler for R {
    fn sample(&mut self, lo: f64, hi: f64) -> f64 {
        self.gen_range(lo..hi)
    }
}

/// Output of [`anonymize`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnonymizationResult {
    pub kind: ModelKind,
    /// `P_c` or `P_c'` together with the shifted Voronoi polygon `P_v'`.
    pub instance: VddInstance,
    /// `A_z'`, before scaling.
    pub zone: AnonymityZone,
    /// Smallest seed-to-edge distance of `P_v'`.
    pub d0: f64,
    pub lambda: f64,
    /// `P_v*`
    pub concealing: ConvexPolygon,
    /// `A_z*`
    pub zone_scaled: AnonymityZone,
    pub trace: Vec<Principle>,
    /// Attempts used, including the successful one.
    pub attempts: u32,
}

impl AnonymizationResult {
    pub fn seed(&self) -> Point {
        self.instance.seed()
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }
}

/// Regular polygon centered on `seed`, i.e. one whose centroid gives the seed
/// away. With three equal sectors every cell is an equilateral triangle, so
/// shape alone cannot be the criterion.
pub fn regular_about(poly: &ConvexPolygon, seed: Point) -> bool {
    poly.is_regular(TOL_REGULAR)
        && poly.centroid().dist(seed) <= TOL_REGULAR * poly.min_edge_distance(seed).max(f64::MIN_POSITIVE)
}

/// Sector rays with `alpha_i = (1 ± eps_i) * 2pi/n`, `eps_i ~ U[0, kappa]`,
/// renormalized to close at `2pi`; first ray at a uniform angle.
pub fn sector_frame<R: Rng + ?Sized>(seed: Point, n: usize, kappa: f64, rng: &mut R) -> Result<SectorFrame, VddError> {
    if n < 3 {
        return Err(VddError::InvalidN(n));
    }
    let base = 2.0 * PI / n as f64;
    let theta0 = rng.gen_range(0.0..2.0 * PI);
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let eps = rng.gen::<f64>() * kappa;
            (1.0 + sign * eps) * base
        })
        .collect();
    let scale = 2.0 * PI / raw.iter().sum::<f64>();
    let mut angles = Vec::with_capacity(n);
    let mut theta = theta0;
    for a in &raw[..n - 1] {
        angles.push(theta);
        theta += a * scale;
    }
    angles.push(theta);
    SectorFrame::new(seed, angles)
}

/// Admissible open interval for the next radius (or edge distance) given the
/// previous one across a sector of angle `alpha`, keeping the shared Voronoi
/// vertex inside the sector. `cap` bounds the growth when the sector is not acute.
fn sector_range(prev: f64, alpha: f64, cap: f64) -> (f64, f64) {
    let c = alpha.cos();
    let lo = prev * c.max(MIN_RANGE_FRACTION);
    let hi = if c > 0.0 { (prev / c).min(cap) } else { cap };
    (lo, hi)
}

/// Interior shifting: keeps edge 0, then moves each further Voronoi edge
/// parallel to itself (toward the seed, never past its bisector position)
/// within the range that keeps the new vertex inside its sector. The last
/// edge is constrained by both its predecessor and edge 0.
pub fn interior_shift<S: RangeSampler + ?Sized>(
    inst: &VddInstance,
    sampler: &mut S,
) -> Result<ConvexPolygon, ModelError> {
    let n = inst.n();
    let frame = inst.frame();
    let alpha = frame.sector_angles();
    let base = inst.edge_distances();
    let mut h = Vec::with_capacity(n);
    h.push(base[0]);
    for i in 1..n {
        let (mut lo, mut hi) = sector_range(h[i - 1], alpha[i - 1], base[i]);
        if i == n - 1 {
            let (lo0, hi0) = sector_range(h[0], alpha[n - 1], base[i]);
            lo = lo.max(lo0);
            hi = hi.min(hi0);
        }
        if !(lo < hi) {
            return Err(ModelError::RangeEmpty { index: i });
        }
        h.push(sampler.sample(lo, hi));
    }
    let o = frame.seed();
    let lines: Vec<Line> = (0..n)
        .map(|i| {
            let u = frame.ray(i);
            Line::through(o + u * h[i], u).expect("unit normal")
        })
        .collect();
    let mut vs = Vec::with_capacity(n);
    for i in 0..n {
        let v = line_intersect(&lines[i], &lines[(i + 1) % n])
            .point()
            .ok_or(VddError::ParallelBisectors { index: i })?;
        if !frame.in_sector(i, v, 1e-12) {
            return Err(ModelError::RangeEmpty { index: i });
        }
        vs.push(v);
    }
    Ok(ConvexPolygon::new(vs)?)
}

/// Exterior shifting: `C_0` at `r0` on ray 0, then each following radius drawn
/// from `(rho cos a, min(mu rho, rho / cos a))`; the last radius also has to
/// satisfy the same bound against `C_0`.
pub fn exterior_shift<S: RangeSampler + ?Sized>(
    frame: &SectorFrame,
    mu: f64,
    r0: f64,
    sampler: &mut S,
) -> Result<VddInstance, ModelError> {
    let n = frame.n();
    let alpha = frame.sector_angles();
    let mut rho = Vec::with_capacity(n);
    rho.push(r0);
    for i in 1..n {
        let (mut lo, mut hi) = sector_range(rho[i - 1], alpha[i - 1], mu * rho[i - 1]);
        if i == n - 1 {
            let (lo0, hi0) = sector_range(rho[0], alpha[n - 1], mu * rho[0]);
            lo = lo.max(lo0);
            hi = hi.min(hi0);
        }
        if !(lo < hi) {
            return Err(ModelError::RangeEmpty { index: i });
        }
        rho.push(sampler.sample(lo, hi));
    }
    Ok(VddInstance::from_radii(frame.clone(), &rho)?)
}

/// Sector shifting on equal radii. Its Voronoi edges all sit at `r0 / 2` from
/// the seed, which is what the center-recovery attack exploits.
pub fn model_alpha<R: Rng + ?Sized>(
    seed: Point,
    n: usize,
    r0: f64,
    kappa: f64,
    rng: &mut R,
) -> Result<VddInstance, ModelError> {
    let frame = sector_frame(seed, n, kappa, rng)?;
    Ok(VddInstance::from_radii(frame, &vec![r0; n])?)
}

/// Runs the pipeline of `kind` with an RNG seeded from `params.rng_seed`.
pub fn anonymize(seed: Point, kind: ModelKind, params: &ModelParams) -> Result<AnonymizationResult, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    anonymize_with_rng(seed, kind, params, &mut rng)
}

/// [`anonymize`] drawing from a caller-owned RNG; `params.rng_seed` is ignored.
pub fn anonymize_with_rng<R: Rng + ?Sized>(
    seed: Point,
    kind: ModelKind,
    params: &ModelParams,
    rng: &mut R,
) -> Result<AnonymizationResult, ModelError> {
    if kind == ModelKind::AlphaOnly {
        return Err(ModelError::NotApplicable);
    }
    params.validate()?;
    if !seed.is_finite() {
        return Err(ModelError::InvalidParams("non-finite location".into()));
    }
    let mut last = String::new();
    for attempt in 1..=params.max_retries {
        match attempt_once(seed, kind, params, rng) {
            Ok(mut res) => {
                res.attempts = attempt;
                return Ok(res);
            }
            Err(e) => last = e.to_string(),
        }
    }
    Err(ModelError::ShiftFailed {
        attempts: params.max_retries,
        last,
    })
}

fn attempt_once<R: Rng + ?Sized>(
    seed: Point,
    kind: ModelKind,
    params: &ModelParams,
    rng: &mut R,
) -> Result<AnonymizationResult, ModelError> {
    // Built around the origin and moved to `seed` at the end, so the shape does
    // not depend on where the user is and rounding stays relative to its size.
    let origin = Point::ORIGIN;
    let n = params.n;
    let mut trace = Vec::with_capacity(5);
    let kappa = if kind.sector_shift() {
        trace.push(Principle::S1);
        params.kappa
    } else {
        trace.push(Principle::S0);
        0.0
    };
    let frame = sector_frame(origin, n, kappa, rng)?;

    let base = if kind.exterior_shift() {
        trace.push(Principle::P2);
        exterior_shift(&frame, params.mu, params.r0, rng)?
    } else {
        VddInstance::from_radii(frame, &vec![params.r0; n])?
    };
    trace.push(Principle::R1);

    let instance = if kind.interior_shift() {
        trace.push(Principle::P1);
        let pv = interior_shift(&base, rng)?;
        base.with_voronoi(pv)
    } else {
        base
    };
    if regular_about(instance.voronoi(), origin) {
        return Err(ModelError::Regular);
    }
    let zone = anonymity_zone(instance.voronoi())?;

    trace.push(Principle::R0);
    let d0 = instance.voronoi().min_edge_distance(origin);
    let lambda_v = params.r / d0;
    let lambda_z = params.iota.map_or(0.0, |iota| iota / d0);
    let lambda = lambda_v.max(lambda_z);
    let concealing = instance.voronoi().scale_about(origin, lambda)?.translate(seed);
    let zone_scaled = zone.scale_about(origin, lambda)?.translate(seed);

    Ok(AnonymizationResult {
        kind,
        instance: instance.translate(seed),
        zone: zone.translate(seed),
        d0,
        lambda,
        concealing,
        zone_scaled,
        trace,
        attempts: 0,
    })
}
