//! Brute-force verification helpers, deliberately independent of the
//! production code paths they are used to check: ray casting instead of
//! Z-buffering, exhaustive per-pixel triangle scans instead of incremental
//! rasterization, dense Gaussian elimination instead of the packaged
//! Cholesky solver.
//!
//! Compiled only under the `oracle` feature (test builds).

use crate::geometry::{AnnotatedFaceModel, ProjectionMatrix};

/// Möller–Trumbore ray/triangle intersection; returns the ray parameter t.
pub fn ray_triangle(
    origin: [f64; 3],
    dir: [f64; 3],
    a: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
) -> Option<f64> {
    let e1 = sub(b, a);
    let e2 = sub(c, a);
    let p = cross(dir, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = sub(origin, a);
    let u = dot(s, p) * inv;
    if !(-1e-9..=1.0 + 1e-9).contains(&u) {
        return None;
    }
    let q = cross(s, e1);
    let v = dot(dir, q) * inv;
    if v < -1e-9 || u + v > 1.0 + 1e-9 {
        return None;
    }
    Some(dot(e2, q) * inv)
}

/// True when `point` (on the mesh surface) can see the camera: no triangle
/// intersects the ray from the point toward the camera.
///
/// The camera direction comes from the projection's depth row: smaller
/// depth = nearer, so the camera lies toward the negative depth direction.
pub fn ray_cast_visible(
    mesh: &AnnotatedFaceModel,
    p: &ProjectionMatrix,
    point: [f64; 3],
    skip_triangle: Option<usize>,
) -> bool {
    let d = p.depth_row();
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let towards_camera = [-d[0] / norm, -d[1] / norm, -d[2] / norm];
    for (i, tri) in mesh.triangles().iter().enumerate() {
        if Some(i) == skip_triangle {
            continue;
        }
        let (a, b, c) = (
            mesh.vertices()[tri[0]],
            mesh.vertices()[tri[1]],
            mesh.vertices()[tri[2]],
        );
        if let Some(t) = ray_triangle(point, towards_camera, a, b, c) {
            if t > 1e-6 {
                return false;
            }
        }
    }
    true
}

/// Exhaustive geometry-image reference: for every pixel, scans all
/// triangles in index order and interpolates inside the first hit.
/// Returns `(triangle, barycentric, position)` per pixel.
#[allow(clippy::type_complexity)]
pub fn brute_force_geometry_image(
    mesh: &AnnotatedFaceModel,
    width: usize,
    height: usize,
) -> Vec<Option<(usize, [f64; 3], [f64; 3])>> {
    let mut out = vec![None; width * height];
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 + 0.5) / width as f64;
            let v = (y as f64 + 0.5) / height as f64;
            'tri: for (t, tri) in mesh.triangles().iter().enumerate() {
                let (a, b, c) = (mesh.uv()[tri[0]], mesh.uv()[tri[1]], mesh.uv()[tri[2]]);
                let denom =
                    (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
                if denom.abs() < 1e-24 {
                    continue;
                }
                let w0 = ((b[1] - c[1]) * (u - c[0]) + (c[0] - b[0]) * (v - c[1])) / denom;
                let w1 = ((c[1] - a[1]) * (u - c[0]) + (a[0] - c[0]) * (v - c[1])) / denom;
                let w2 = 1.0 - w0 - w1;
                if w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12 {
                    continue 'tri;
                }
                let (pa, pb, pc) = (
                    mesh.vertices()[tri[0]],
                    mesh.vertices()[tri[1]],
                    mesh.vertices()[tri[2]],
                );
                let position = [
                    w0 * pa[0] + w1 * pb[0] + w2 * pc[0],
                    w0 * pa[1] + w1 * pb[1] + w2 * pc[1],
                    w0 * pa[2] + w1 * pb[2] + w2 * pc[2],
                ];
                out[y * width + x] = Some((t, [w0, w1, w2], position));
                break 'tri;
            }
        }
    }
    out
}

/// Independent ridge solve of the pose normal equations by dense Gaussian
/// elimination with partial pivoting. Returns the 2×4 affine matrix.
pub fn ridge_normal_equation_solve(
    x2d: &[[f64; 2]],
    x3d: &[[f64; 3]],
    lambda: f64,
) -> Option<[[f64; 4]; 2]> {
    let mut ata = [[0.0f64; 4]; 4];
    let mut bx = [0.0f64; 4];
    let mut by = [0.0f64; 4];
    for (p, q) in x3d.iter().zip(x2d) {
        let h = [p[0], p[1], p[2], 1.0];
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += h[i] * h[j];
            }
            bx[i] += h[i] * q[0];
            by[i] += h[i] * q[1];
        }
    }
    for (i, row) in ata.iter_mut().enumerate() {
        row[i] += lambda;
    }
    Some([gauss_solve(ata, bx)?, gauss_solve(ata, by)?])
}

fn gauss_solve(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let mut pivot = col;
        for row in col + 1..4 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let factor = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for col in (0..4).rev() {
        let mut sum = b[col];
        for k in col + 1..4 {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    Some(x)
}

/// Regularized least-squares objective evaluated directly.
pub fn pose_objective(
    affine: &[[f64; 4]; 2],
    x2d: &[[f64; 2]],
    x3d: &[[f64; 3]],
    lambda: f64,
) -> f64 {
    let mut value = 0.0;
    for (p, q) in x3d.iter().zip(x2d) {
        let h = [p[0], p[1], p[2], 1.0];
        for row in 0..2 {
            let pred: f64 = (0..4).map(|j| affine[row][j] * h[j]).sum();
            value += (q[row] - pred) * (q[row] - pred);
        }
    }
    value + lambda * affine.iter().flatten().map(|v| v * v).sum::<f64>()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
