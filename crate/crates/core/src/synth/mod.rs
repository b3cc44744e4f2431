//! Synthetic-identity harness: parametric face-like meshes, procedural
//! albedo textures, and multi-pose affine rendering with ground-truth
//! landmarks. Stands in for detector, landmarker and reconstruction models
//! so the whole pipeline runs without data or trained weights.

mod dataset;
mod render;

pub use dataset::{build_pose_grid_dataset, pose_grid_cells, pose_index, DatasetPaths};
pub use render::{camera_for, render, Pose, RenderedSample};

use crate::datamodel::{DataError, ImageBuffer};
use crate::geometry::{AnnotatedFaceModel, GeometryError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("pose (pitch {pitch}, yaw {yaw}, roll {roll}) outside the supported envelope (|pitch| <= 30, |yaw| <= 90, |roll| <= 30)")]
    PoseOutOfRange { pitch: f64, yaw: f64, roll: f64 },
    #[error("need at least 2 identities for identification, got {0}")]
    TooFewIdentities(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A seeded identity: mesh plus procedural albedo. Same seed, same bytes.
#[derive(Debug, Clone)]
pub struct SyntheticIdentity {
    pub seed: u64,
    pub mesh: AnnotatedFaceModel,
    pub albedo: ImageBuffer,
}

// Mesh grid: 48 longitude segments x 24 latitude segments. Latitude is
// remapped by a power so the front (face) half gets most of the UV rows.
const GRID_U: usize = 48;
const GRID_V: usize = 24;
const LAT_POWER: f64 = 2.0;
const ALBEDO_RES: usize = 256;

/// Deterministically generates an identity from a seed.
///
/// The mesh is a closed, mostly convex blob: an ellipsoid with a forward
/// nose bulge, seeded surface bumps and a flattened back, bilaterally
/// symmetric under `u -> 1-u` (which mirrors world x). The albedo is a
/// seeded multi-frequency pattern with the same symmetry.
pub fn generate_identity(seed: u64) -> SyntheticIdentity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let axis_x = rng.random_range(0.78..0.90);
    let axis_y = 1.0;
    let axis_z = rng.random_range(0.80..0.95);
    let nose_amp = rng.random_range(0.25..0.45);

    // Seeded bump spectrum; the sin(theta) window keeps both poles
    // single-point so the mesh stays closed.
    struct Bump {
        amp: f64,
        m: f64,
        phase: f64,
        n: f64,
    }
    let bumps: Vec<Bump> = (0..6)
        .map(|_| Bump {
            amp: rng.random_range(0.01..0.05),
            m: rng.random_range(1.0..5.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            n: rng.random_range(0..6) as f64,
        })
        .collect();

    let radial = |theta: f64, phi: f64| -> f64 {
        let nose = nose_amp * (-(theta / 0.35) * (theta / 0.35)).exp();
        let mut r = 1.0 + nose;
        // sin^2 window: collapses both poles to single points and keeps the
        // nose tip the nearest vertex at the frontal pose.
        let window = theta.sin() * theta.sin();
        for b in &bumps {
            r += b.amp * window * (b.m * theta + b.phase).cos() * (b.n * phi).cos();
        }
        r
    };

    let cols = GRID_U + 1;
    let rows = GRID_V + 1;
    let mut vertices = Vec::with_capacity(rows * cols);
    let mut uv = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let v = row as f64 / GRID_V as f64;
        let theta = v.powf(LAT_POWER) * std::f64::consts::PI;
        for col in 0..cols {
            let u = col as f64 / GRID_U as f64;
            let phi = std::f64::consts::TAU * (u - 0.5);
            let r = radial(theta, phi);
            let dir = grid_direction(u, v);
            let mut p = [
                axis_x * r * dir[0],
                axis_y * r * dir[1],
                axis_z * r * dir[2],
            ];
            if p[2] < 0.0 {
                p[2] *= 0.35; // flatten the back of the head
            }
            vertices.push(p);
            uv.push([u, v]);
        }
    }

    let triangles = grid_triangles();

    let idx = |row: usize, col: usize| row * cols + col;
    let landmark_indices = vec![
        idx(0, GRID_U / 2), // face-center pole
        idx(3, 6),
        idx(3, 18),
        idx(3, 30),
        idx(3, 42),
        idx(6, 12),
        idx(6, 24),
        idx(6, 36),
        idx(9, 4),
        idx(9, 24),
        idx(9, 44),
        idx(12, 16),
        idx(12, 32),
    ];

    let mesh = AnnotatedFaceModel::new(vertices, triangles, uv, landmark_indices)
        .expect("generated mesh satisfies the model invariants");

    let albedo = generate_albedo(&mut rng);

    SyntheticIdentity { seed, mesh, albedo }
}

/// Seeded multi-frequency pattern evaluated on the surface direction of
/// each texel, normalized to [0.08, 0.92].
///
/// Building the pattern as a function of the 3D direction (rather than the
/// flat UV square) keeps its spatial bandwidth uniform on the surface, so
/// rendering at image resolution samples it faithfully everywhere,
/// including where the polar UV chart crowds rows near the face center.
/// Pattern terms are even in x, giving bilateral symmetry.
fn generate_albedo(rng: &mut ChaCha8Rng) -> ImageBuffer {
    struct Wave {
        amp: f64,
        qx: f64,
        qy: f64,
        qz: f64,
        phase: f64,
    }
    let waves: Vec<Wave> = (0..8)
        .map(|_| Wave {
            amp: rng.random_range(0.05..0.12),
            qx: rng.random_range(0.5..5.0),
            qy: rng.random_range(-5.0..5.0),
            qz: rng.random_range(-5.0..5.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let res = ALBEDO_RES;
    let mut values = Vec::with_capacity(res * res);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for y in 0..res {
        let v = (y as f64 + 0.5) / res as f64;
        for x in 0..res {
            let u = (x as f64 + 0.5) / res as f64;
            let d = grid_direction(u, v);
            let mut value = 0.5;
            for w in &waves {
                value += w.amp
                    * (std::f64::consts::TAU * w.qx * d[0]).cos()
                    * (std::f64::consts::TAU * (w.qy * d[1] + w.qz * d[2]) + w.phase).cos();
            }
            min = min.min(value);
            max = max.max(value);
            values.push(value);
        }
    }
    let span = (max - min).max(1e-12);
    let data: Vec<f32> = values
        .into_iter()
        .map(|v| (0.06 + 0.54 * (v - min) / span) as f32)
        .collect();
    ImageBuffer::new(res, res, 1, data).expect("albedo buffer is valid")
}

/// Unit direction of the grid parameterization at UV `(u, v)`: the u = 0.5
/// meridian faces the viewer at the frontal pose, `u -> 1-u` mirrors x, and
/// latitude crowds toward the face center per `LAT_POWER`.
fn grid_direction(u: f64, v: f64) -> [f64; 3] {
    let theta = v.powf(LAT_POWER) * std::f64::consts::PI;
    let phi = std::f64::consts::TAU * (u - 0.5);
    [
        theta.sin() * phi.sin(),
        -theta.sin() * phi.cos(),
        theta.cos(),
    ]
}

// Quad split mirrored at the u = 0.5 meridian, so the triangulation (and
// with it every interpolated quantity) is exactly bilaterally symmetric.
fn grid_triangles() -> Vec<[usize; 3]> {
    let cols = GRID_U + 1;
    let idx = |row: usize, col: usize| row * cols + col;
    let mut triangles = Vec::with_capacity(2 * GRID_U * GRID_V);
    for row in 0..GRID_V {
        for col in 0..GRID_U {
            let v00 = idx(row, col);
            let v01 = idx(row, col + 1);
            let v10 = idx(row + 1, col);
            let v11 = idx(row + 1, col + 1);
            if col < GRID_U / 2 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v01, v00, v10]);
                triangles.push([v01, v10, v11]);
            }
        }
    }
    triangles
}

/// A plain closed ellipsoid mesh on the same grid (uniform latitude, no
/// bumps); handy as a geometric baseline.
pub fn ellipsoid_mesh(semi_axes: [f64; 3]) -> AnnotatedFaceModel {
    let cols = GRID_U + 1;
    let rows = GRID_V + 1;
    let mut vertices = Vec::with_capacity(rows * cols);
    let mut uv = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let v = row as f64 / GRID_V as f64;
        let theta = v * std::f64::consts::PI;
        for col in 0..cols {
            let u = col as f64 / GRID_U as f64;
            let phi = std::f64::consts::TAU * (u - 0.5);
            vertices.push([
                semi_axes[0] * theta.sin() * phi.sin(),
                -semi_axes[1] * theta.sin() * phi.cos(),
                semi_axes[2] * theta.cos(),
            ]);
            uv.push([u, v]);
        }
    }
    let idx = |row: usize, col: usize| row * cols + col;
    let triangles = grid_triangles();
    let landmarks = vec![
        idx(0, GRID_U / 2),
        idx(6, 12),
        idx(6, 36),
        idx(12, 0),
        idx(12, 24),
        idx(18, 12),
        idx(18, 36),
    ];
    AnnotatedFaceModel::new(vertices, triangles, uv, landmarks)
        .expect("ellipsoid satisfies the model invariants")
}
