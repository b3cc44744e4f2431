//! Annotated face model representation and affine 3D-to-2D pose estimation.

mod obj;
mod pose;

pub use obj::{
    read_afm, read_landmarks2d, read_projection, write_afm, write_landmarks2d, write_projection,
};
pub use pose::{
    default_lambda, depth_of, estimate_pose, project, refine_pose_lm, Landmarks2D,
    PoseSolveReport, ProjectionMatrix,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("need at least 4 landmarks, found {0}")]
    InsufficientLandmarks(usize),
    #[error("2D/3D landmark count mismatch: {x2d} vs {x3d}")]
    LandmarkCountMismatch { x2d: usize, x3d: usize },
    #[error("singular design matrix; the 3D landmarks are rank deficient, use lambda > 0")]
    SingularDesign,
    #[error("degenerate pose: the affine rows are parallel, no depth direction exists")]
    DegeneratePose,
    #[error("invalid mesh: {0}")]
    MeshInvalid(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("mesh file error at line {line}: {message}")]
    MeshFormat { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl GeometryError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        GeometryError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// A triangle mesh with a UV chart and named landmark vertices, shared as
/// the canonical face geometry across subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedFaceModel {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    uv: Vec<[f64; 2]>,
    landmark_indices: Vec<usize>,
}

impl AnnotatedFaceModel {
    /// Validates and assembles a model:
    /// triangle indices in range, UV coordinates in `[0,1]`, at least 4
    /// landmark vertices, and no UV-degenerate triangle.
    pub fn new(
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        uv: Vec<[f64; 2]>,
        landmark_indices: Vec<usize>,
    ) -> Result<Self, GeometryError> {
        let v = vertices.len();
        if uv.len() != v {
            return Err(GeometryError::MeshInvalid(format!(
                "uv count {} != vertex count {v}",
                uv.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite("vertex coordinates"));
        }
        for (i, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&idx| idx >= v) {
                return Err(GeometryError::MeshInvalid(format!(
                    "triangle {i} references vertex out of range (V = {v})"
                )));
            }
            let area = uv_signed_area(&uv[tri[0]], &uv[tri[1]], &uv[tri[2]]);
            if area.abs() < 1e-12 {
                return Err(GeometryError::MeshInvalid(format!(
                    "triangle {i} is degenerate in UV space"
                )));
            }
        }
        for coord in uv.iter().flatten() {
            if !(0.0..=1.0).contains(coord) {
                return Err(GeometryError::MeshInvalid(
                    "uv coordinate outside [0,1]".into(),
                ));
            }
        }
        if landmark_indices.len() < 4 {
            return Err(GeometryError::InsufficientLandmarks(landmark_indices.len()));
        }
        if landmark_indices.iter().any(|&idx| idx >= v) {
            return Err(GeometryError::MeshInvalid(
                "landmark index out of range".into(),
            ));
        }
        Ok(Self {
            vertices,
            triangles,
            uv,
            landmark_indices,
        })
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn uv(&self) -> &[[f64; 2]] {
        &self.uv
    }

    pub fn landmark_indices(&self) -> &[usize] {
        &self.landmark_indices
    }

    /// 3D coordinates of the landmark vertices, in canonical order.
    pub fn landmark_points(&self) -> Vec<[f64; 3]> {
        self.landmark_indices
            .iter()
            .map(|&i| self.vertices[i])
            .collect()
    }
}

pub(crate) fn uv_signed_area(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
