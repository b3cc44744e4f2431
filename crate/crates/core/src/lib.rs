//! Pose-invariant face signature engine.
//!
//! The pipeline frontalizes facial appearance through a 3D annotated face
//! model and matches occlusion-encoded patch signatures:
//!
//! 1. **datamodel** – file-backed records, sigset CSV lists, JSON run
//!    configuration, image buffers and resolution normalization.
//! 2. **geometry** – annotated face model (mesh + UV + landmarks), affine
//!    3D-to-2D pose estimation by regularized least squares, and a
//!    Levenberg–Marquardt refiner.
//! 3. **lifting** – UV geometry-image rasterization, Z-buffer self-occlusion
//!    masking, and texture lifting from the input image into UV space.
//! 4. **signature** – patch layouts, per-patch occlusion encoding, and
//!    feature extraction behind a pluggable extractor interface.
//! 5. **matching** – occlusion-masked cosine scoring, template aggregation,
//!    and gallery identification.
//! 6. **evaluation** – Rank-1 / CMC metrics, the 3×7 pose grid report, and
//!    multi-split aggregation.
//! 7. **synth** – a deterministic synthetic-identity harness (parametric
//!    meshes, procedural albedo, multi-pose affine rendering) that stands in
//!    for detector/landmarker/reconstruction models.
//!
//! All learned components stay behind provider interfaces: landmarks and
//! meshes enter from files, and feature extraction is a trait with a
//! gradient-histogram default.

pub mod datamodel;
pub mod evaluation;
pub mod geometry;
pub mod lifting;
pub mod matching;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod signature;
pub mod synth;

pub use datamodel::{DataRecord, ImageBuffer, PipelineConfig, Sigset};
pub use geometry::{AnnotatedFaceModel, Landmarks2D, PoseSolveReport, ProjectionMatrix};
pub use lifting::{GeometryImage, LiftedTexture, OcclusionMask, Visibility};
pub use matching::{MatchScore, RankedMatch, Template};
pub use signature::{FeatureExtractor, LayoutPreset, PatchLayout, Signature};
