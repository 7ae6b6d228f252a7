//! Point cloud restoration against an implicit occupancy field.
//!
//! The pieces compose as: [`outlier::sor_filter`] trims stray points, then
//! either [`restoration::restore`] optimizes point coordinates toward the
//! field's surface while spreading them out, or [`remesh::remesh_defense`]
//! extracts the surface with Marching Cubes and resamples it.
//! [`corruption`] synthesizes damaged inputs and [`metrics`] scores results.

pub mod corruption;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
mod mc_tables;
pub mod metrics;
pub mod outlier;
pub mod pipeline;
pub mod remesh;
pub mod restoration;
pub mod spatial;

pub use error::{Error, Result};
pub use field::{AnalyticField, Csg, Fixture, MlpField, OccupancyField};
pub use geometry::{Point, PointCloud, TriangleMesh};
pub use outlier::SorConfig;
pub use remesh::GridSpec;
pub use restoration::RestorationConfig;
