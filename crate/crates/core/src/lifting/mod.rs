//! UV geometry images, Z-buffer self-occlusion masks and texture lifting.
//!
//! A geometry image stores, per UV pixel, the interpolated 3D surface
//! position of the face model. Projecting those positions with the camera
//! and keeping, per image pixel, only the nearest depth yields the
//! self-occlusion mask; sampling the input image at the surviving
//! projections produces the pose-normalized UV texture.

mod texture;
mod visibility;

pub use texture::{lift_texture, LiftedTexture};
pub use visibility::{suggest_eps, zbuffer_visibility, OcclusionMask, Visibility};

use crate::datamodel::DataError;
use crate::geometry::{AnnotatedFaceModel, GeometryError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("geometry image resolution {width}x{height} is below the 8x8 minimum")]
    ResolutionTooSmall { width: usize, height: usize },
    #[error("depth tolerance eps must be positive, got {0}")]
    InvalidEps(f64),
    #[error("resolution mismatch: {0}")]
    SizeMismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Triangle index and barycentric weights a pixel was interpolated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

/// Per-UV-pixel interpolated 3D surface positions.
#[derive(Debug, Clone)]
pub struct GeometryImage {
    width: usize,
    height: usize,
    positions: Vec<[f64; 3]>,
    valid: Vec<bool>,
    provenance: Vec<Option<Provenance>>,
}

impl GeometryImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn position(&self, x: usize, y: usize) -> [f64; 3] {
        self.positions[y * self.width + x]
    }

    pub fn provenance(&self, x: usize, y: usize) -> Option<Provenance> {
        self.provenance[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub(crate) fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub(crate) fn valid_flags(&self) -> &[bool] {
        &self.valid
    }
}

/// Rasterizes the model's UV chart into an `width x height` geometry image.
///
/// A pixel whose UV center falls inside a triangle receives the
/// barycentric-interpolated 3D position of that triangle; where UV triangles
/// overlap the lowest triangle index wins. Pixel `(x, y)` has UV center
/// `((x+0.5)/W, (y+0.5)/H)`.
pub fn rasterize_geometry_image(
    model: &AnnotatedFaceModel,
    width: usize,
    height: usize,
) -> Result<GeometryImage, LiftError> {
    if width < 8 || height < 8 {
        return Err(LiftError::ResolutionTooSmall { width, height });
    }
    let mut image = GeometryImage {
        width,
        height,
        positions: vec![[0.0; 3]; width * height],
        valid: vec![false; width * height],
        provenance: vec![None; width * height],
    };
    let wf = width as f64;
    let hf = height as f64;

    for (tri_idx, tri) in model.triangles().iter().enumerate() {
        let [a, b, c] = [model.uv()[tri[0]], model.uv()[tri[1]], model.uv()[tri[2]]];
        // Pixel-space corner coordinates.
        let pa = [a[0] * wf, a[1] * hf];
        let pb = [b[0] * wf, b[1] * hf];
        let pc = [c[0] * wf, c[1] * hf];
        let min_x = pa[0].min(pb[0]).min(pc[0]);
        let max_x = pa[0].max(pb[0]).max(pc[0]);
        let min_y = pa[1].min(pb[1]).min(pc[1]);
        let max_y = pa[1].max(pb[1]).max(pc[1]);
        // Pixels whose center (x+0.5, y+0.5) can fall inside the bbox.
        let x0 = ((min_x - 0.5).ceil().max(0.0)) as usize;
        let x1 = ((max_x - 0.5).floor().min(wf - 1.0)).max(0.0) as usize;
        let y0 = ((min_y - 0.5).ceil().max(0.0)) as usize;
        let y1 = ((max_y - 0.5).floor().min(hf - 1.0)).max(0.0) as usize;

        let v3 = [
            model.vertices()[tri[0]],
            model.vertices()[tri[1]],
            model.vertices()[tri[2]],
        ];
        for y in y0..=y1 {
            for x in x0..=x1 {
                let idx = y * width + x;
                if image.valid[idx] {
                    continue;
                }
                let px = x as f64 + 0.5;
                let py = y as f64 + 0.5;
                let Some(bary) = barycentric(&pa, &pb, &pc, px, py) else {
                    continue;
                };
                let position = [
                    bary[0] * v3[0][0] + bary[1] * v3[1][0] + bary[2] * v3[2][0],
                    bary[0] * v3[0][1] + bary[1] * v3[1][1] + bary[2] * v3[2][1],
                    bary[0] * v3[0][2] + bary[1] * v3[1][2] + bary[2] * v3[2][2],
                ];
                image.positions[idx] = position;
                image.valid[idx] = true;
                image.provenance[idx] = Some(Provenance {
                    triangle: tri_idx,
                    barycentric: bary,
                });
            }
        }
    }
    Ok(image)
}

const EDGE_TOLERANCE: f64 = 1e-12;

/// Barycentric coordinates of `(px, py)` in the triangle, or `None` when the
/// point is outside. Weights are clamped nonnegative and normalized to sum 1.
fn barycentric(
    a: &[f64; 2],
    b: &[f64; 2],
    c: &[f64; 2],
    px: f64,
    py: f64,
) -> Option<[f64; 3]> {
    let denom = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    if denom.abs() < 1e-24 {
        return None;
    }
    let w0 = ((b[1] - c[1]) * (px - c[0]) + (c[0] - b[0]) * (py - c[1])) / denom;
    let w1 = ((c[1] - a[1]) * (px - c[0]) + (a[0] - c[0]) * (py - c[1])) / denom;
    let w2 = 1.0 - w0 - w1;
    let tol = -EDGE_TOLERANCE;
    if w0 < tol || w1 < tol || w2 < tol {
        return None;
    }
    let w0 = w0.max(0.0);
    let w1 = w1.max(0.0);
    let w2 = w2.max(0.0);
    let sum = w0 + w1 + w2;
    Some([w0 / sum, w1 / sum, w2 / sum])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnnotatedFaceModel;

    fn planar_quad() -> AnnotatedFaceModel {
        AnnotatedFaceModel::new(
            vec![
                [0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [2.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![0, 1, 2, 3],
        )
        .unwrap()
    }

    #[test]
    fn planar_quad_fills_every_pixel_affinely() {
        let g = rasterize_geometry_image(&planar_quad(), 32, 32).unwrap();
        assert_eq!(g.valid_count(), 32 * 32);
        for y in 0..32 {
            for x in 0..32 {
                let u = (x as f64 + 0.5) / 32.0;
                let v = (y as f64 + 0.5) / 32.0;
                let p = g.position(x, y);
                // Positions are affine in (u, v) on a planar quad.
                assert!((p[0] - 2.0 * u).abs() < 1e-9, "x at ({x},{y})");
                assert!((p[1] - v).abs() < 1e-9, "y at ({x},{y})");
                assert!(p[2].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uncovered_uv_region_stays_invalid() {
        // Mesh covering only the left half of UV space.
        let model = AnnotatedFaceModel::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 1.0]],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let g = rasterize_geometry_image(&model, 32, 32).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let u = (x as f64 + 0.5) / 32.0;
                assert_eq!(g.is_valid(x, y), u < 0.5, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn small_resolution_rejected() {
        let err = rasterize_geometry_image(&planar_quad(), 4, 32).unwrap_err();
        assert!(matches!(err, LiftError::ResolutionTooSmall { .. }));
    }

    #[test]
    fn barycentric_weights_are_normalized_and_nonnegative() {
        let g = rasterize_geometry_image(&planar_quad(), 16, 16).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let p = g.provenance(x, y).unwrap();
                let sum: f64 = p.barycentric.iter().sum();
                assert!((sum - 1.0).abs() < 1e-6);
                assert!(p.barycentric.iter().all(|&w| w >= 0.0));
            }
        }
    }

    #[test]
    fn overlapping_triangles_resolve_to_lowest_index() {
        // Two identical UV triangles with different 3D geometry.
        let model = AnnotatedFaceModel::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 5.0],
                [1.0, 0.0, 5.0],
                [0.0, 1.0, 5.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
            ],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let g = rasterize_geometry_image(&model, 16, 16).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                if let Some(p) = g.provenance(x, y) {
                    assert_eq!(p.triangle, 0);
                    assert!(g.position(x, y)[2].abs() < 1e-12);
                }
            }
        }
    }
}
