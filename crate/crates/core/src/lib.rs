//! Location anonymization with Voronoi-Delaunay duality.
//!
//! A user location (the seed) is hidden inside an irregular Voronoi cell built
//! from a star-shaped Delaunay polygon around it. See [`models::anonymize`].

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod geometry;
pub mod metrics;
pub mod models;
pub mod ncd;
pub mod sim;
pub mod vdd;
pub mod wire;

pub use geometry::{ConvexPolygon, Point};
pub use models::{anonymize, AnonymizationResult, ModelError, ModelKind, ModelParams};
