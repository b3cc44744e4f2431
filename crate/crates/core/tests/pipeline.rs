//! Cross-module checks: synthetic rendering closed against texture lifting,
//! Z-buffer visibility against ray casting, and rasterization against an
//! exhaustive reference.

use rand::prelude::*;
use urface_core::geometry::{estimate_pose, AnnotatedFaceModel, ProjectionMatrix};
use urface_core::lifting::{
    lift_texture, rasterize_geometry_image, suggest_eps, zbuffer_visibility, Visibility,
};
use urface_core::oracle;
use urface_core::synth::{ellipsoid_mesh, generate_identity, render, Pose};

fn render_and_mask(
    identity: &urface_core::synth::SyntheticIdentity,
    pose: &Pose,
    image_size: (usize, usize),
    uv_res: usize,
) -> (
    urface_core::datamodel::ImageBuffer,
    ProjectionMatrix,
    urface_core::lifting::GeometryImage,
    urface_core::lifting::OcclusionMask,
) {
    let sample = render(identity, pose, image_size).unwrap();
    let g = rasterize_geometry_image(&identity.mesh, uv_res, uv_res).unwrap();
    let eps = suggest_eps(&g, &sample.gt_projection).unwrap();
    let mask = zbuffer_visibility(&g, &sample.gt_projection, image_size, eps).unwrap();
    (sample.image, sample.gt_projection, g, mask)
}

#[test]
fn lifted_texture_reproduces_albedo_on_visible_pixels() {
    for seed in [1u64, 8] {
        let identity = generate_identity(seed);
        for pose in [
            Pose::frontal(),
            Pose::new(0.0, 60.0, 0.0),
            Pose::new(0.0, 90.0, 0.0),
            Pose::new(30.0, -90.0, 0.0),
            Pose::new(-30.0, 30.0, 0.0),
        ] {
            let (image, projection, g, mask) =
                render_and_mask(&identity, &pose, (160, 160), 256);
            let texture = lift_texture(&image, &projection, &g, &mask).unwrap();
            let mut sq_sum = 0.0f64;
            let mut count = 0usize;
            for y in 0..256 {
                for x in 0..256 {
                    if mask.state(x, y) != Visibility::Visible {
                        continue;
                    }
                    let got = texture.get(x, y, 0) as f64;
                    let want = identity.albedo.get(x, y, 0) as f64;
                    sq_sum += (got - want) * (got - want);
                    count += 1;
                }
            }
            assert!(count > 10_000, "visible region unexpectedly small: {count}");
            let rms = (sq_sum / count as f64).sqrt();
            assert!(
                rms < 0.05,
                "seed {seed} pose {pose:?}: closure RMS {rms:.4}"
            );
        }
    }
}

#[test]
fn self_occlusion_grows_with_yaw() {
    for seed in 0..5u64 {
        let identity = generate_identity(seed);
        let fraction = |yaw: f64| {
            let (_, _, _, mask) =
                render_and_mask(&identity, &Pose::new(0.0, yaw, 0.0), (160, 160), 256);
            mask.visible_fraction()
        };
        let frontal = fraction(0.0);
        let mid = fraction(30.0);
        let profile = fraction(90.0);
        assert!(
            frontal > mid && mid > profile,
            "seed {seed}: fractions {frontal:.3} / {mid:.3} / {profile:.3}"
        );
    }
}

#[test]
fn frontal_mask_is_mirror_symmetric() {
    for seed in [11u64, 13, 18] {
        let identity = generate_identity(seed);
        let (_, _, _, mask) = render_and_mask(&identity, &Pose::frontal(), (160, 160), 256);
        let mut differing = 0usize;
        let res = 256;
        for y in 0..res {
            for x in 0..res {
                let a = mask.state(x, y) == Visibility::Visible;
                let b = mask.state(res - 1 - x, y) == Visibility::Visible;
                if a != b {
                    differing += 1;
                }
            }
        }
        let fraction = differing as f64 / (res * res) as f64;
        assert!(fraction <= 0.01, "seed {seed}: asymmetric pixels {fraction:.4}");
    }
}

#[test]
fn zbuffer_agrees_with_ray_casting_on_the_ellipsoid() {
    let mesh = ellipsoid_mesh([0.9, 1.0, 0.8]);
    let g = rasterize_geometry_image(&mesh, 96, 96).unwrap();
    let camera = urface_core::synth::camera_for(&Pose::new(0.0, 90.0, 0.0), (160, 160));
    // Geometric-visibility measurement: the tolerance must cover the full
    // intra-pixel depth spread of grazing surface patches (slopes up to
    // ~tan 80 degrees at one-pixel cells), an order above the pipeline's
    // general-purpose suggestion.
    let eps = 5.0 * suggest_eps(&g, &camera).unwrap();
    let mask = zbuffer_visibility(&g, &camera, (160, 160), eps).unwrap();

    let mut oracle_visible = 0usize;
    let mut valid = 0usize;
    let mut disagreements = 0usize;
    for y in 0..96 {
        for x in 0..96 {
            if !g.is_valid(x, y) {
                continue;
            }
            valid += 1;
            let provenance = g.provenance(x, y).unwrap();
            let visible_by_ray = oracle::ray_cast_visible(
                &mesh,
                &camera,
                g.position(x, y),
                Some(provenance.triangle),
            );
            if visible_by_ray {
                oracle_visible += 1;
            }
            let visible_by_zbuf = mask.state(x, y) == Visibility::Visible;
            if visible_by_ray != visible_by_zbuf {
                disagreements += 1;
            }
        }
    }
    let oracle_fraction = oracle_visible as f64 / valid as f64;
    assert!(
        (oracle_fraction - 0.5).abs() <= 0.05,
        "ray-cast visible fraction {oracle_fraction:.3}"
    );
    let zbuf_fraction = mask.visible_fraction();
    assert!(
        (zbuf_fraction - 0.5).abs() <= 0.05,
        "z-buffer visible fraction {zbuf_fraction:.3}"
    );
    let disagreement_rate = disagreements as f64 / valid as f64;
    assert!(
        disagreement_rate <= 0.05,
        "z-buffer vs ray cast disagreement {disagreement_rate:.3}"
    );
}

#[test]
fn depth_buffer_never_exceeds_visible_contributors() {
    // Independent recomputation of the per-image-pixel minimum depth: every
    // visible pixel's depth must be within eps of that minimum.
    let mesh = ellipsoid_mesh([0.9, 1.0, 0.8]);
    let g = rasterize_geometry_image(&mesh, 64, 64).unwrap();
    let camera = urface_core::synth::camera_for(&Pose::new(0.0, 45.0, 0.0), (128, 128));
    let eps = suggest_eps(&g, &camera).unwrap();
    let mask = zbuffer_visibility(&g, &camera, (128, 128), eps).unwrap();

    let mut positions = Vec::new();
    for y in 0..64 {
        for x in 0..64 {
            if g.is_valid(x, y) {
                positions.push((x, y, g.position(x, y)));
            }
        }
    }
    let points: Vec<[f64; 3]> = positions.iter().map(|&(_, _, p)| p).collect();
    let projections = urface_core::geometry::project(&camera, &points);
    let depths = urface_core::geometry::depth_of(&camera, &points).unwrap();

    let mut min_per_cell = std::collections::HashMap::new();
    for (i, [px, py]) in projections.iter().enumerate() {
        if *px >= 0.0 && *px < 128.0 && *py >= 0.0 && *py < 128.0 {
            let cell = (*px as usize, *py as usize);
            let entry = min_per_cell.entry(cell).or_insert(f64::INFINITY);
            *entry = entry.min(depths[i]);
        }
    }
    for (i, &(x, y, _)) in positions.iter().enumerate() {
        if mask.state(x, y) != Visibility::Visible {
            continue;
        }
        let [px, py] = projections[i];
        let cell = (px as usize, py as usize);
        let min = min_per_cell[&cell];
        assert!(
            depths[i] <= min + eps,
            "visible pixel ({x},{y}) deeper than the cell minimum"
        );
    }
}

#[test]
fn geometry_image_matches_exhaustive_reference() {
    let identity = generate_identity(21);
    let g = rasterize_geometry_image(&identity.mesh, 48, 48).unwrap();
    let reference = oracle::brute_force_geometry_image(&identity.mesh, 48, 48);
    for y in 0..48 {
        for x in 0..48 {
            match (&reference[y * 48 + x], g.is_valid(x, y)) {
                (Some((tri, _, position)), true) => {
                    let got = g.provenance(x, y).unwrap();
                    assert_eq!(got.triangle, *tri, "triangle at ({x},{y})");
                    let p = g.position(x, y);
                    for k in 0..3 {
                        assert!(
                            (p[k] - position[k]).abs() < 1e-9,
                            "position {k} at ({x},{y})"
                        );
                    }
                }
                (None, false) => {}
                (expected, got) => {
                    panic!("validity mismatch at ({x},{y}): oracle {expected:?}, raster {got}")
                }
            }
        }
    }
}

#[test]
fn estimate_pose_matches_independent_normal_equation_solver() {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..25 {
        let x3d: Vec<[f64; 3]> = (0..9)
            .map(|_| {
                [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let x2d: Vec<[f64; 2]> = (0..9)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let lambda = rng.random_range(0.0..1.0);
        let (p, report) = estimate_pose(
            &urface_core::geometry::Landmarks2D::new(x2d.clone()).unwrap(),
            &x3d,
            lambda,
        )
        .unwrap();
        let reference = oracle::ridge_normal_equation_solve(&x2d, &x3d, lambda).unwrap();
        let ref_objective = oracle::pose_objective(&reference, &x2d, &x3d, lambda);
        let rel = (report.objective_value - ref_objective).abs() / ref_objective.max(1e-30);
        assert!(rel < 1e-8, "objective mismatch {rel}");
        for (row, ref_row) in p.affine().iter().zip(&reference) {
            for (v, e) in row.iter().zip(ref_row) {
                assert!((v - e).abs() < 1e-6, "{v} vs {e}");
            }
        }
    }
}

#[test]
fn nose_tip_is_first_ray_hit_at_frontal_pose() {
    let identity = generate_identity(33);
    let camera = urface_core::synth::camera_for(&Pose::frontal(), (160, 160));
    let nose_index = identity.mesh.landmark_indices()[0];
    let nose = identity.mesh.vertices()[nose_index];
    // The nose tip must see the camera unobstructed...
    assert!(oracle::ray_cast_visible(&identity.mesh, &camera, nose, None));
    // ...and carry the minimal depth among all vertices.
    let depths = urface_core::geometry::depth_of(&camera, identity.mesh.vertices()).unwrap();
    let min = depths.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(depths[nose_index] <= min + 1e-9);
}

#[test]
fn eps_monotonicity_on_fuzzed_meshes() {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let mesh = random_mesh(&mut rng);
        let g = rasterize_geometry_image(&mesh, 16, 16).unwrap();
        let affine = [
            [
                rng.random_range(2.0..6.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                16.0,
            ],
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(2.0..6.0),
                rng.random_range(-1.0..1.0),
                16.0,
            ],
        ];
        let camera = ProjectionMatrix::from_affine(affine).unwrap();
        if camera.is_depth_degenerate() {
            continue;
        }
        let e1 = rng.random_range(1e-6..0.01);
        let e2 = e1 * rng.random_range(2.0..100.0);
        let small = zbuffer_visibility(&g, &camera, (32, 32), e1).unwrap();
        let large = zbuffer_visibility(&g, &camera, (32, 32), e2).unwrap();
        for (i, (s, l)) in small.states().iter().zip(large.states()).enumerate() {
            if *s == Visibility::Visible {
                assert_eq!(
                    *l,
                    Visibility::Visible,
                    "case {case}: pixel {i} hidden by larger eps"
                );
            }
        }
    }
}

/// Random mesh: one jittered triangle per cell of a 4x4 UV grid, with random
/// 3D geometry. Guarantees valid UV (in-bounds, non-degenerate).
fn random_mesh(rng: &mut rand_chacha::ChaCha8Rng) -> AnnotatedFaceModel {
    let mut vertices = Vec::new();
    let mut uv = Vec::new();
    let mut triangles = Vec::new();
    for cy in 0..4 {
        for cx in 0..4 {
            let base = vertices.len();
            let u0 = cx as f64 * 0.25;
            let v0 = cy as f64 * 0.25;
            // Corners jittered inside the cell, kept well separated.
            let corners = [
                [u0 + rng.random_range(0.01..0.08), v0 + rng.random_range(0.01..0.08)],
                [u0 + rng.random_range(0.17..0.24), v0 + rng.random_range(0.01..0.08)],
                [u0 + rng.random_range(0.01..0.24), v0 + rng.random_range(0.17..0.24)],
            ];
            for c in corners {
                uv.push(c);
                vertices.push([
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
            }
            triangles.push([base, base + 1, base + 2]);
        }
    }
    AnnotatedFaceModel::new(vertices, triangles, uv, vec![0, 1, 2, 3]).unwrap()
}
