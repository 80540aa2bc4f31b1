//! Concealing cost, privacy level and traffic accounting.

use serde::Serialize;

use crate::models::AnonymizationResult;

/// Packet header size shared by every message.
pub const HEADER_BYTES: usize = 40;
/// User identifier carried upstream.
pub const UID_BYTES: usize = 8;
/// One `(x, y)` pair at 32-bit precision.
pub const POINT_BYTES: usize = 8;
/// Disk radius in an n-CD submission.
pub const RADIUS_BYTES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    /// Concealing cost: area of the submitted region (m^2).
    pub psi: f64,
    /// Privacy level: area of the anonymity zone (m^2).
    pub gamma: f64,
    pub ratio: f64,
    pub upstream_bytes: usize,
    pub downstream_bytes: usize,
}

impl CostReport {
    pub fn new(psi: f64, gamma: f64, upstream_bytes: usize, poi_count: usize) -> Self {
        CostReport {
            psi,
            gamma,
            ratio: psi / gamma,
            upstream_bytes,
            downstream_bytes: downstream_bytes(poi_count),
        }
    }

    /// Communication cost: upstream plus downstream bytes.
    pub fn omega(&self) -> usize {
        self.upstream_bytes + self.downstream_bytes
    }
}

/// Area of `P_v*`.
pub fn concealing_cost(res: &AnonymizationResult) -> f64 {
    res.concealing.area()
}

/// Area of `A_z*`.
pub fn privacy_level(res: &AnonymizationResult) -> f64 {
    res.zone_scaled.area()
}

pub fn cost_report(res: &AnonymizationResult, poi_count: usize) -> CostReport {
    CostReport::new(
        concealing_cost(res),
        privacy_level(res),
        upstream_bytes_vdd(res.n()),
        poi_count,
    )
}

/// `48 + 8n`: header, uid, one point per polygon vertex.
pub const fn upstream_bytes_vdd(n: usize) -> usize {
    HEADER_BYTES + UID_BYTES + POINT_BYTES * n
}

/// `40 + 8N`: header and one point per returned POI.
pub const fn downstream_bytes(poi_count: usize) -> usize {
    HEADER_BYTES + POINT_BYTES * poi_count
}

/// `48 + 12n`: header, uid, center and radius per disk.
pub const fn upstream_bytes_ncd(n: usize) -> usize {
    HEADER_BYTES + UID_BYTES + (POINT_BYTES + RADIUS_BYTES) * n
}
