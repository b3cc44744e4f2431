//! Lifting pixel values from the input image into UV space.

use super::{GeometryImage, LiftError, OcclusionMask, Visibility};
use crate::datamodel::ImageBuffer;
use crate::geometry::{project, ProjectionMatrix};

/// UV-space texture produced by lifting; same raster as the geometry image,
/// fill value 0 outside the visible region.
pub type LiftedTexture = ImageBuffer;

/// Samples the input image at the projected position of every visible
/// geometry-image pixel; all other pixels receive the fill value 0.
///
/// The mask must come from `zbuffer_visibility` on the same geometry image
/// and camera. Sampling is bilinear and independent of traversal order.
pub fn lift_texture(
    img: &ImageBuffer,
    p: &ProjectionMatrix,
    g: &GeometryImage,
    z: &OcclusionMask,
) -> Result<LiftedTexture, LiftError> {
    if z.width() != g.width() || z.height() != g.height() {
        return Err(LiftError::SizeMismatch(format!(
            "mask {}x{} vs geometry image {}x{}",
            z.width(),
            z.height(),
            g.width(),
            g.height()
        )));
    }
    let channels = img.channels();
    let projections = project(p, g.positions());
    let mut data = vec![0.0f32; g.width() * g.height() * channels];
    for (i, [px, py]) in projections.iter().enumerate() {
        let x = i % g.width();
        let y = i / g.width();
        if z.state(x, y) != Visibility::Visible {
            continue;
        }
        if let Some(sample) = img.sample_bilinear(*px, *py) {
            data[i * channels..(i + 1) * channels].copy_from_slice(&sample);
        }
    }
    Ok(ImageBuffer::new(g.width(), g.height(), channels, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AnnotatedFaceModel;
    use crate::lifting::{rasterize_geometry_image, zbuffer_visibility};

    fn plane_mesh() -> AnnotatedFaceModel {
        AnnotatedFaceModel::new(
            vec![
                [0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [2.0, 2.0, 0.0],
                [0.0, 2.0, 0.0],
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![0, 1, 2, 3],
        )
        .unwrap()
    }

    fn frontal_camera(scale: f64, tx: f64, ty: f64) -> ProjectionMatrix {
        ProjectionMatrix::from_affine([[scale, 0.0, 0.0, tx], [0.0, -scale, 0.0, ty]]).unwrap()
    }

    #[test]
    fn constant_image_lifts_to_constant_texture() {
        let mesh = plane_mesh();
        let g = rasterize_geometry_image(&mesh, 32, 32).unwrap();
        let p = frontal_camera(32.0, 0.0, 64.0);
        let z = zbuffer_visibility(&g, &p, (64, 64), 1e-3).unwrap();
        let img = ImageBuffer::from_fn(64, 64, |_, _| 0.625);
        let t = lift_texture(&img, &p, &g, &z).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                assert!((t.get(x, y, 0) - 0.625).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn horizontal_ramp_reproduces_along_u() {
        let mesh = plane_mesh();
        let g = rasterize_geometry_image(&mesh, 32, 32).unwrap();
        let p = frontal_camera(32.0, 0.0, 64.0);
        let z = zbuffer_visibility(&g, &p, (64, 64), 1e-3).unwrap();
        // Intensity is a linear ramp in image x; bilinear sampling of a
        // linear ramp is exact, so the texture must be the analytic ramp in u.
        let img = ImageBuffer::from_fn(64, 64, |x, _| x as f32 / 63.0);
        let t = lift_texture(&img, &p, &g, &z).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let u = (x as f64 + 0.5) / 32.0;
                let px = 64.0 * u; // image-space x of the sample
                let expected = ((px - 0.5) / 63.0) as f32;
                assert!(
                    (t.get(x, y, 0) - expected).abs() < 1e-5,
                    "({x},{y}): {} vs {expected}",
                    t.get(x, y, 0)
                );
            }
        }
    }

    #[test]
    fn out_of_image_pixels_are_zero_filled() {
        let mesh = plane_mesh();
        let g = rasterize_geometry_image(&mesh, 16, 16).unwrap();
        // Camera pointing far away from the image: everything out of image.
        let p = frontal_camera(16.0, -1000.0, 0.0);
        let z = zbuffer_visibility(&g, &p, (32, 32), 1e-3).unwrap();
        assert_eq!(z.count(Visibility::OutOfImage), 16 * 16);
        let img = ImageBuffer::from_fn(32, 32, |_, _| 1.0);
        let t = lift_texture(&img, &p, &g, &z).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lifting_is_deterministic() {
        let mesh = plane_mesh();
        let g = rasterize_geometry_image(&mesh, 32, 32).unwrap();
        let p = frontal_camera(32.0, 0.0, 64.0);
        let z = zbuffer_visibility(&g, &p, (64, 64), 1e-3).unwrap();
        let img = ImageBuffer::from_fn(64, 64, |x, y| ((x * 7 + y * 13) % 64) as f32 / 63.0);
        let a = lift_texture(&img, &p, &g, &z).unwrap();
        let b = lift_texture(&img, &p, &g, &z).unwrap();
        assert_eq!(a, b);
    }
}
