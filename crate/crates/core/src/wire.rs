//! Little-endian packet codec for the anonymized query and the POI response.
//!
//! Upstream (`48 + 8n` bytes):
//!
//! | offset | size | field                     |
//! |--------|------|---------------------------|
//! | 0      | 4    | magic `NVDD`              |
//! | 4      | 1    | version (1)               |
//! | 5      | 1    | vertex count n            |
//! | 6      | 2    | poi category (u16)        |
//! | 8      | 32   | zero                      |
//! | 40     | 8    | uid (u64)                 |
//! | 48     | 8n   | n x (x: f32, y: f32)      |
//!
//! Downstream (`40 + 8N` bytes): magic `NVDP`, version, one reserved zero
//! byte, N as u16 at offset 6, zero padding to 40, then N x (f32, f32).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, Point};
use crate::metrics::{downstream_bytes, upstream_bytes_vdd, HEADER_BYTES, UID_BYTES};

pub const UPSTREAM_MAGIC: [u8; 4] = *b"NVDD";
pub const DOWNSTREAM_MAGIC: [u8; 4] = *b"NVDP";
pub const VERSION: u8 = 1;
pub const MAX_VERTICES: usize = u8::MAX as usize;
pub const MAX_POIS: usize = u16::MAX as usize;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum WireError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("expected {expected} bytes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("{0} vertices (need 3..=255)")]
    TooManyVertices(usize),
    #[error("{0} POIs exceed 65535")]
    TooManyPois(usize),
    #[error("decoded polygon is invalid: {0}")]
    InvalidPolygon(String),
}

/// The plain query a user hands to the anonymizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub uid: u64,
    pub location: Point,
    pub r: f64,
    pub iota: Option<f64>,
    pub poi_category: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnonymizedQuery {
    pub uid: u64,
    pub concealing: ConvexPolygon,
    pub poi_category: u16,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PoiResponse {
    pub pois: Vec<Point>,
}

fn put_point(buf: &mut Vec<u8>, p: Point) {
    buf.extend_from_slice(&(p.x as f32).to_le_bytes());
    buf.extend_from_slice(&(p.y as f32).to_le_bytes());
}

fn get_points(body: &[u8]) -> Vec<Point> {
    body.chunks_exact(8)
        .map(|c| {
            let x = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let y = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Point::new(x as f64, y as f64)
        })
        .collect()
}

fn check_header(bytes: &[u8], magic: [u8; 4]) -> Result<(), WireError> {
    if bytes.len() < HEADER_BYTES {
        return Err(WireError::LengthMismatch {
            expected: HEADER_BYTES,
            actual: bytes.len(),
        });
    }
    let got = [bytes[0], bytes[1], bytes[2], bytes[3]];
    if got != magic {
        return Err(WireError::BadMagic(got));
    }
    if bytes[4] != VERSION {
        return Err(WireError::BadVersion(bytes[4]));
    }
    Ok(())
}

pub fn encode_upstream(q: &AnonymizedQuery) -> Result<Vec<u8>, WireError> {
    let n = q.concealing.len();
    if !(3..=MAX_VERTICES).contains(&n) {
        return Err(WireError::TooManyVertices(n));
    }
    let mut buf = Vec::with_capacity(upstream_bytes_vdd(n));
    buf.extend_from_slice(&UPSTREAM_MAGIC);
    buf.push(VERSION);
    buf.push(n as u8);
    buf.extend_from_slice(&q.poi_category.to_le_bytes());
    buf.resize(HEADER_BYTES, 0);
    buf.extend_from_slice(&q.uid.to_le_bytes());
    for &v in q.concealing.vertices() {
        put_point(&mut buf, v);
    }
    debug_assert_eq!(buf.len(), upstream_bytes_vdd(n));
    Ok(buf)
}

pub fn decode_upstream(bytes: &[u8]) -> Result<AnonymizedQuery, WireError> {
    check_header(bytes, UPSTREAM_MAGIC)?;
    let n = bytes[5] as usize;
    if n < 3 {
        return Err(WireError::TooManyVertices(n));
    }
    let expected = upstream_bytes_vdd(n);
    if bytes.len() != expected {
        return Err(WireError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let poi_category = u16::from_le_bytes([bytes[6], bytes[7]]);
    let off = HEADER_BYTES;
    let uid = u64::from_le_bytes(bytes[off..off + UID_BYTES].try_into().expect("8 bytes"));
    let vertices = get_points(&bytes[off + UID_BYTES..]);
    let concealing = ConvexPolygon::new(vertices).map_err(|e| WireError::InvalidPolygon(e.to_string()))?;
    Ok(AnonymizedQuery {
        uid,
        concealing,
        poi_category,
    })
}

pub fn encode_downstream(resp: &PoiResponse) -> Result<Vec<u8>, WireError> {
    let n = resp.pois.len();
    if n > MAX_POIS {
        return Err(WireError::TooManyPois(n));
    }
    let mut buf = Vec::with_capacity(downstream_bytes(n));
    buf.extend_from_slice(&DOWNSTREAM_MAGIC);
    buf.push(VERSION);
    buf.push(0);
    buf.extend_from_slice(&(n as u16).to_le_bytes());
    buf.resize(HEADER_BYTES, 0);
    for &p in &resp.pois {
        put_point(&mut buf, p);
    }
    Ok(buf)
}

pub fn decode_downstream(bytes: &[u8]) -> Result<PoiResponse, WireError> {
    check_header(bytes, DOWNSTREAM_MAGIC)?;
    let n = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let expected = downstream_bytes(n);
    if bytes.len() != expected {
        return Err(WireError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(PoiResponse {
        pois: get_points(&bytes[HEADER_BYTES..]),
    })
}
