//! Uncertainty-aware scarf plots for 3D gaze recordings.
//!
//! Gaze rays and detected AOI volumes go in; three scarf plot variants come
//! out. The standard plot assigns each sample to the first AOI hit, the
//! depth plot stacks every AOI the ray crosses, and the NN plot stacks AOIs
//! near the ray with heights from inverse center distance.

pub mod confidence;
pub mod export;
pub mod geometry;
pub mod ingest;
pub mod mapping;
pub mod model;
pub mod palette;
pub mod render;
pub mod scarf;
pub mod scene;

pub use mapping::{MappingConfig, ZeroDistanceMode};
pub use model::{AoiInstance, BoundingVolume, GazeSample, Recording, Vec3};
pub use scarf::{build, BuildConfig, ScarfModel, Variant};
