//! Relative-angle point feature toolchain.
//!
//! The relative angle of a point is the angle between its surface normal and
//! the average normal of the cloud it belongs to. It packs the directional
//! information that separates rough, damaged concrete from flat, intact
//! surface into a single channel instead of three.
//!
//! The crate covers the full preparation path for such features: reading
//! and writing clouds ([`cloud_io`]), KD-tree neighbour search
//! ([`spatial_index`]), normalisation ([`normalization`]), normal and angle
//! estimation ([`features`]), subdivision into fixed-size subsets
//! ([`subdivision`]), binned-entropy evaluation ([`entropy_eval`]),
//! segmentation scoring ([`seg_eval`]) and a synthetic defect-surface
//! generator ([`synth_surface`]).

pub mod cloud;
pub mod cloud_io;
pub mod entropy_eval;
pub mod error;
pub mod features;
pub mod geometry;
pub mod normalization;
pub mod pipeline;
pub mod seg_eval;
pub mod spatial_index;
pub mod subdivision;
pub mod synth_surface;

pub use cloud::{Label, LabelField, NormalField, PointCloud, RelativeAngleField};
pub use error::{Error, Result};
pub use geometry::Point3;
pub use normalization::NormalizationKind;
pub use spatial_index::KdTree;
