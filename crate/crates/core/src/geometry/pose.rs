//! Affine camera model and pose solvers.
//!
//! The camera is a 2×4 affine matrix acting on homogeneous 3D points. It is
//! fit to 2D/3D landmark correspondences by ridge-regularized least squares
//! (closed form), optionally refined by Levenberg–Marquardt. A depth row is
//! derived from the affine part for Z-ordering: smaller depth = nearer.

use super::GeometryError;
use nalgebra::{Matrix4, Vector4};

/// Detected or ground-truth 2D landmark positions in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmarks2D {
    points: Vec<[f64; 2]>,
}

impl Landmarks2D {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite("2D landmarks"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// 2×4 affine camera plus a derived depth row.
///
/// The depth row's linear part is the normalized cross product of the two
/// affine linear rows, scaled by the mean of their norms; its translation
/// entry is zero. Depth ordering only needs consistency, not an absolute
/// offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    affine: [[f64; 4]; 2],
    depth_row: [f64; 4],
}

impl ProjectionMatrix {
    pub fn from_affine(affine: [[f64; 4]; 2]) -> Result<Self, GeometryError> {
        if affine.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("projection matrix"));
        }
        let depth_row = derive_depth_row(&affine);
        Ok(Self { affine, depth_row })
    }

    pub fn affine(&self) -> &[[f64; 4]; 2] {
        &self.affine
    }

    pub fn depth_row(&self) -> &[f64; 4] {
        &self.depth_row
    }

    /// True when no depth direction exists (parallel affine rows).
    pub fn is_depth_degenerate(&self) -> bool {
        let d = &self.depth_row;
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < 1e-12
    }
}

fn derive_depth_row(affine: &[[f64; 4]; 2]) -> [f64; 4] {
    let r1 = [affine[0][0], affine[0][1], affine[0][2]];
    let r2 = [affine[1][0], affine[1][1], affine[1][2]];
    let cross = [
        r1[1] * r2[2] - r1[2] * r2[1],
        r1[2] * r2[0] - r1[0] * r2[2],
        r1[0] * r2[1] - r1[1] * r2[0],
    ];
    let norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    if norm < 1e-12 {
        return [0.0; 4];
    }
    let n1 = (r1[0] * r1[0] + r1[1] * r1[1] + r1[2] * r1[2]).sqrt();
    let n2 = (r2[0] * r2[0] + r2[1] * r2[1] + r2[2] * r2[2]).sqrt();
    let scale = 0.5 * (n1 + n2) / norm;
    [cross[0] * scale, cross[1] * scale, cross[2] * scale, 0.0]
}

/// Solver diagnostics; `objective_value` is the regularized least-squares
/// objective evaluated at the returned matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSolveReport {
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Relative ridge default: `1e-3 * trace(AᵀA) / 12` for the homogeneous
/// design matrix A of the given 3D landmarks.
pub fn default_lambda(x3d: &[[f64; 3]]) -> f64 {
    let ata = gram(x3d);
    1e-3 * ata.trace() / 12.0
}

fn gram(x3d: &[[f64; 3]]) -> Matrix4<f64> {
    let mut ata = Matrix4::zeros();
    for p in x3d {
        let h = Vector4::new(p[0], p[1], p[2], 1.0);
        ata += h * h.transpose();
    }
    ata
}

fn rhs(x3d: &[[f64; 3]], x2d: &[[f64; 2]]) -> (Vector4<f64>, Vector4<f64>) {
    let mut bx = Vector4::zeros();
    let mut by = Vector4::zeros();
    for (p, q) in x3d.iter().zip(x2d) {
        let h = Vector4::new(p[0], p[1], p[2], 1.0);
        bx += h * q[0];
        by += h * q[1];
    }
    (bx, by)
}

fn objective(affine: &[[f64; 4]; 2], x2d: &[[f64; 2]], x3d: &[[f64; 3]], lambda: f64) -> f64 {
    let mut value = 0.0;
    for (p, q) in x3d.iter().zip(x2d) {
        let h = [p[0], p[1], p[2], 1.0];
        for row in 0..2 {
            let pred: f64 = (0..4).map(|j| affine[row][j] * h[j]).sum();
            let r = q[row] - pred;
            value += r * r;
        }
    }
    let penalty: f64 = affine.iter().flatten().map(|v| v * v).sum();
    value + lambda * penalty
}

fn check_inputs(
    x2d: &Landmarks2D,
    x3d: &[[f64; 3]],
    lambda: f64,
) -> Result<(), GeometryError> {
    if x2d.len() < 4 {
        return Err(GeometryError::InsufficientLandmarks(x2d.len()));
    }
    if x2d.len() != x3d.len() {
        return Err(GeometryError::LandmarkCountMismatch {
            x2d: x2d.len(),
            x3d: x3d.len(),
        });
    }
    if x3d.iter().flatten().any(|c| !c.is_finite()) {
        return Err(GeometryError::NonFinite("3D landmarks"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(GeometryError::NonFinite("lambda"));
    }
    Ok(())
}

/// Closed-form ridge fit of the affine camera.
///
/// Minimizes `||X2D − P·X3D_h||² + λ||P||²` via the normal equations. The
/// two matrix rows decouple: each is a 4-coefficient ridge regression with
/// the shared Gram matrix `AᵀA + λI`.
pub fn estimate_pose(
    x2d: &Landmarks2D,
    x3d: &[[f64; 3]],
    lambda: f64,
) -> Result<(ProjectionMatrix, PoseSolveReport), GeometryError> {
    check_inputs(x2d, x3d, lambda)?;
    let ata = gram(x3d);
    let (bx, by) = rhs(x3d, x2d.points());
    let m = ata + Matrix4::identity() * lambda;
    let chol = m.cholesky().ok_or(GeometryError::SingularDesign)?;
    let px = chol.solve(&bx);
    let py = chol.solve(&by);
    if px.iter().chain(py.iter()).any(|v| !v.is_finite()) {
        return Err(GeometryError::SingularDesign);
    }
    let affine = [
        [px[0], px[1], px[2], px[3]],
        [py[0], py[1], py[2], py[3]],
    ];
    let p = ProjectionMatrix::from_affine(affine)?;
    let report = PoseSolveReport {
        objective_value: objective(&affine, x2d.points(), x3d, lambda),
        iterations: 0,
        converged: true,
    };
    Ok((p, report))
}

/// Levenberg–Marquardt refinement of an initial camera.
///
/// Residuals are the stacked reprojection errors plus `sqrt(λ)`-scaled
/// parameters; damping starts at `1e-3 · max diag(AᵀA)`, shrinks ×0.1 on an
/// accepted step and grows ×10 on a rejected one. Terminates when the step
/// norm drops below `tol` or the iteration budget runs out. The objective
/// never increases across accepted steps.
pub fn refine_pose_lm(
    p0: &ProjectionMatrix,
    x2d: &Landmarks2D,
    x3d: &[[f64; 3]],
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> Result<(ProjectionMatrix, PoseSolveReport), GeometryError> {
    check_inputs(x2d, x3d, lambda)?;
    let ata = gram(x3d);
    let (bx, by) = rhs(x3d, x2d.points());

    let mut affine = *p0.affine();
    let mut f_current = objective(&affine, x2d.points(), x3d, lambda);
    let mut mu = 1e-3 * ata.diagonal().max();
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..max_iters {
        iterations += 1;
        // Gradient/2 per row: (AᵀA + λI)·p_r − Aᵀb_r.
        let damped = ata + Matrix4::identity() * (lambda + mu);
        let Some(chol) = damped.cholesky() else {
            mu *= 10.0;
            continue;
        };
        let mut step_norm_sq = 0.0;
        let mut trial = affine;
        for (row, b) in [(0, &bx), (1, &by)] {
            let p = Vector4::new(affine[row][0], affine[row][1], affine[row][2], affine[row][3]);
            let grad_half = (ata + Matrix4::identity() * lambda) * p - b;
            let delta = chol.solve(&(-grad_half));
            step_norm_sq += delta.norm_squared();
            for j in 0..4 {
                trial[row][j] += delta[j];
            }
        }
        if step_norm_sq.sqrt() < tol {
            // Already at (or numerically at) the optimum; keep the current
            // iterate untouched.
            converged = true;
            break;
        }
        let f_trial = objective(&trial, x2d.points(), x3d, lambda);
        if f_trial <= f_current {
            affine = trial;
            f_current = f_trial;
            mu *= 0.1;
        } else {
            mu *= 10.0;
            if !mu.is_finite() {
                break;
            }
        }
    }

    let p = ProjectionMatrix::from_affine(affine)?;
    let report = PoseSolveReport {
        objective_value: f_current,
        iterations,
        converged,
    };
    Ok((p, report))
}

/// Applies the affine camera to 3D points: row i = affine · [p_i, 1].
pub fn project(p: &ProjectionMatrix, pts: &[[f64; 3]]) -> Vec<[f64; 2]> {
    let a = p.affine();
    pts.iter()
        .map(|v| {
            [
                a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2] + a[0][3],
                a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2] + a[1][3],
            ]
        })
        .collect()
}

/// Depth values under the derived depth row; smaller = nearer the camera.
pub fn depth_of(p: &ProjectionMatrix, pts: &[[f64; 3]]) -> Result<Vec<f64>, GeometryError> {
    if p.is_depth_degenerate() {
        return Err(GeometryError::DegeneratePose);
    }
    let d = p.depth_row();
    Ok(pts
        .iter()
        .map(|v| d[0] * v[0] + d[1] * v[1] + d[2] * v[2] + d[3])
        .collect())
}
