//! Garment texture recovery from front/back catalog images.
//!
//! The pipeline registers a fixed-topology garment template against a pair of
//! orthographic catalog views with an embedded deformation graph driven by a
//! differentiable silhouette rasterizer, then recovers a UV texture map by
//! optimizing texels through a frozen-geometry renderer, and finally repairs
//! occlusion and seam holes with UV-constrained inpainting plus bilateral
//! blending. A thin-plate-spline warping baseline and a synthetic
//! data/evaluation harness are included for comparison experiments.
//!
//! Module map:
//! - [`geometry`]: template meshes, OBJ I/O, blendshapes, UV domain masks
//! - [`defgraph`]: deformation graph construction, skinning, rigidity energy
//! - [`render`]: orthographic cameras, soft silhouettes, textured rendering
//! - [`fit`]: energies and the two-stage shape + texture optimization
//! - [`tps`]: thin-plate-spline warping baseline
//! - [`refine`]: residual masks, inpainting, bilateral blending
//! - [`harness`]: metrics, procedural textures, corpus simulation/evaluation
//! - [`templates`]: built-in procedural garment templates

pub mod defgraph;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod harness;
pub mod optim;
pub mod refine;
pub mod render;
pub mod templates;
pub mod tps;

pub use error::{Error, Result};

/// 2D vector used for pixel and UV coordinates.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 3D vector used for vertex positions and directions.
pub type Vec3 = nalgebra::Vector3<f64>;
