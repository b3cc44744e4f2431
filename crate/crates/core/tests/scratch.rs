use urface_core::lifting::{
    lift_texture, rasterize_geometry_image, suggest_eps, zbuffer_visibility, Visibility,
};
use urface_core::synth::{generate_identity, render, Pose};

#[test]
fn closure_error_anatomy() {
    for seed in [1u64, 3, 5, 8] {
    let identity = generate_identity(seed);
    for size in [128usize, 144, 160] {
    for yaw in [90.0] {
        let pose = Pose::new(0.0, yaw, 0.0);
        let sample = render(&identity, &pose, (size, size)).unwrap();
        let g = rasterize_geometry_image(&identity.mesh, 256, 256).unwrap();
        let eps = suggest_eps(&g, &sample.gt_projection).unwrap();
        let mask = zbuffer_visibility(&g, &sample.gt_projection, (size, size), eps).unwrap();
        let texture = lift_texture(&sample.image, &sample.gt_projection, &g, &mask).unwrap();

        // Coverage map: which image pixels did the renderer paint?
        let covered: Vec<bool> = sample.image.data().iter().map(|&v| v > 0.0).collect();

        let pts: Vec<[f64; 3]> = (0..256 * 256)
            .filter(|i| g.is_valid(i % 256, i / 256))
            .map(|i| g.position(i % 256, i / 256))
            .collect();
        let idxs: Vec<usize> = (0..256 * 256)
            .filter(|i| g.is_valid(i % 256, i / 256))
            .collect();
        let projections = urface_core::geometry::project(&sample.gt_projection, &pts);

        // err^2 bucketed by whether the bilinear footprint touches an
        // unpainted image pixel.
        let mut clean = (0.0f64, 0usize);
        let mut dirty = (0.0f64, 0usize);
        for (k, &i) in idxs.iter().enumerate() {
            let (x, y) = (i % 256, i / 256);
            if mask.state(x, y) != Visibility::Visible {
                continue;
            }
            let [px, py] = projections[k];
            let fx = (px - 0.5).floor() as isize;
            let fy = (py - 0.5).floor() as isize;
            let mut touches_background = false;
            for dy in 0..2isize {
                for dx in 0..2isize {
                    let cx = (fx + dx).clamp(0, size as isize - 1) as usize;
                    let cy = (fy + dy).clamp(0, size as isize - 1) as usize;
                    if !covered[cy * size + cx] {
                        touches_background = true;
                    }
                }
            }
            let d = texture.get(x, y, 0) as f64 - identity.albedo.get(x, y, 0) as f64;
            if touches_background {
                dirty.0 += d * d;
                dirty.1 += 1;
            } else {
                clean.0 += d * d;
                clean.1 += 1;
            }
        }
        let total_n = clean.1 + dirty.1;
        let total = ((clean.0 + dirty.0) / total_n as f64).sqrt();
        println!(
            "seed={seed} size={size} yaw={yaw}: total RMS {total:.4} ({total_n} px) | clean RMS {:.4} ({} px) | touching-bg RMS {:.4} ({} px)",
            (clean.0 / clean.1.max(1) as f64).sqrt(),
            clean.1,
            (dirty.0 / dirty.1.max(1) as f64).sqrt(),
            dirty.1
        );
    }
    }
}
}
