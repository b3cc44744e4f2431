//! Affine software rendering of synthetic identities.
//!
//! The camera family is exactly the affine model used by the pose module,
//! so ground-truth projections are recoverable to machine precision from
//! the rendered landmarks.

use super::{SyntheticIdentity, SynthError};
use crate::datamodel::ImageBuffer;
use crate::geometry::{depth_of, project, Landmarks2D, ProjectionMatrix};

/// Head pose in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl Pose {
    pub fn new(pitch: f64, yaw: f64, roll: f64) -> Self {
        Self { pitch, yaw, roll }
    }

    pub fn frontal() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

/// One rendered view with its ground truth.
#[derive(Debug, Clone)]
pub struct RenderedSample {
    pub image: ImageBuffer,
    pub pose: Pose,
    pub gt_landmarks2d: Landmarks2D,
    pub gt_projection: ProjectionMatrix,
}

// All generated meshes fit inside this model-space radius.
const MODEL_BOUND: f64 = 1.9;

fn rotation(pose: &Pose) -> [[f64; 3]; 3] {
    let (pitch, yaw, roll) = (
        pose.pitch.to_radians(),
        pose.yaw.to_radians(),
        pose.roll.to_radians(),
    );
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    // M = Rz(roll) * Rx(pitch) * Ry(yaw): yaw first, then pitch, then roll.
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
    let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
    mat_mul(&rz, &mat_mul(&rx, &ry))
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// The ground-truth affine camera for a pose: rotation, uniform scale that
/// keeps the whole model inside the image, image-centered translation,
/// y-down image convention. At the frontal pose +z (the face) points at the
/// viewer and has minimal depth.
pub fn camera_for(pose: &Pose, image_size: (usize, usize)) -> ProjectionMatrix {
    let (w, h) = image_size;
    let m = rotation(pose);
    let scale = (0.5 * w.min(h) as f64 - 4.0) / MODEL_BOUND;
    let cx = w as f64 / 2.0;
    let cy = h as f64 / 2.0;
    ProjectionMatrix::from_affine([
        [scale * m[0][0], scale * m[0][1], scale * m[0][2], cx],
        [-scale * m[1][0], -scale * m[1][1], -scale * m[1][2], cy],
    ])
    .expect("rotation-derived camera is finite")
}

/// Renders the textured mesh under an affine camera; background is 0.
pub fn render(
    identity: &SyntheticIdentity,
    pose: &Pose,
    image_size: (usize, usize),
) -> Result<RenderedSample, SynthError> {
    if pose.pitch.abs() > 30.0 || pose.yaw.abs() > 90.0 || pose.roll.abs() > 30.0 {
        return Err(SynthError::PoseOutOfRange {
            pitch: pose.pitch,
            yaw: pose.yaw,
            roll: pose.roll,
        });
    }
    let camera = camera_for(pose, image_size);
    let mesh = &identity.mesh;
    let projected = project(&camera, mesh.vertices());
    let depths = depth_of(&camera, mesh.vertices())?;

    let (w, h) = image_size;
    let mut image = ImageBuffer::zeros(w, h, 1);
    let mut zbuf = vec![f64::INFINITY; w * h];

    for tri in mesh.triangles() {
        let p = [projected[tri[0]], projected[tri[1]], projected[tri[2]]];
        let d = [depths[tri[0]], depths[tri[1]], depths[tri[2]]];
        let t = [mesh.uv()[tri[0]], mesh.uv()[tri[1]], mesh.uv()[tri[2]]];
        let min_x = p[0][0].min(p[1][0]).min(p[2][0]);
        let max_x = p[0][0].max(p[1][0]).max(p[2][0]);
        let min_y = p[0][1].min(p[1][1]).min(p[2][1]);
        let max_y = p[0][1].max(p[1][1]).max(p[2][1]);
        let x0 = ((min_x - 0.5).ceil().max(0.0)) as usize;
        let x1 = ((max_x - 0.5).floor().min(w as f64 - 1.0)).max(0.0) as usize;
        let y0 = ((min_y - 0.5).ceil().max(0.0)) as usize;
        let y1 = ((max_y - 0.5).floor().min(h as f64 - 1.0)).max(0.0) as usize;
        if min_x > max_x || min_y > max_y {
            continue;
        }
        for y in y0..=y1 {
            for x in x0..=x1 {
                let px = x as f64 + 0.5;
                let py = y as f64 + 0.5;
                let Some(bary) = image_barycentric(&p, px, py) else {
                    continue;
                };
                let depth = bary[0] * d[0] + bary[1] * d[1] + bary[2] * d[2];
                let cell = y * w + x;
                if depth >= zbuf[cell] {
                    continue;
                }
                zbuf[cell] = depth;
                let u = bary[0] * t[0][0] + bary[1] * t[1][0] + bary[2] * t[2][0];
                let v = bary[0] * t[0][1] + bary[1] * t[1][1] + bary[2] * t[2][1];
                let sample = identity.albedo.sample_bilinear_clamped(
                    u * identity.albedo.width() as f64,
                    v * identity.albedo.height() as f64,
                );
                image.set(x, y, 0, sample[0]);
            }
        }
    }

    let gt_landmarks2d = Landmarks2D::new(project(&camera, &mesh.landmark_points()))
        .expect("projections of finite points are finite");
    Ok(RenderedSample {
        image,
        pose: *pose,
        gt_landmarks2d,
        gt_projection: camera,
    })
}

fn image_barycentric(p: &[[f64; 2]; 3], px: f64, py: f64) -> Option<[f64; 3]> {
    let denom = (p[1][1] - p[2][1]) * (p[0][0] - p[2][0])
        + (p[2][0] - p[1][0]) * (p[0][1] - p[2][1]);
    if denom.abs() < 1e-18 {
        return None;
    }
    let w0 = ((p[1][1] - p[2][1]) * (px - p[2][0]) + (p[2][0] - p[1][0]) * (py - p[2][1])) / denom;
    let w1 = ((p[2][1] - p[0][1]) * (px - p[2][0]) + (p[0][0] - p[2][0]) * (py - p[2][1])) / denom;
    let w2 = 1.0 - w0 - w1;
    if w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12 {
        return None;
    }
    Some([w0.max(0.0), w1.max(0.0), w2.max(0.0)])
}
