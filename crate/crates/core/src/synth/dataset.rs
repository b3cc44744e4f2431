//! Multi-pose dataset generation: renders every identity over the 3×7
//! (pitch, yaw) grid and writes sigsets, images, meshes, landmark files and
//! ground-truth projections.

use super::{generate_identity, render, Pose, SynthError};
use crate::datamodel::{DataRecord, Sigset, SigsetEntry};
use crate::evaluation::{GRID_PITCHES, GRID_YAWS};
use crate::geometry::{write_afm, write_landmarks2d, write_projection};
use std::fs;
use std::path::{Path, PathBuf};

/// The 21 grid poses as (pitch, yaw) degrees, in pose-index order: columns
/// (yaw −90 → +90) left to right, and within a column pitch +30, 0, −30 top
/// to bottom. Index 11 is the frontal pose.
pub fn pose_grid_cells() -> Vec<(i32, i32)> {
    let mut cells = Vec::with_capacity(21);
    for yaw in GRID_YAWS {
        for pitch in GRID_PITCHES {
            cells.push((pitch, yaw));
        }
    }
    cells
}

/// 1-based pose index of a grid cell.
pub fn pose_index(pitch: i32, yaw: i32) -> Option<usize> {
    let col = GRID_YAWS.iter().position(|&y| y == yaw)?;
    let row = GRID_PITCHES.iter().position(|&p| p == pitch)?;
    Some(col * 3 + row + 1)
}

/// Where a generated dataset lives.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub root: PathBuf,
    pub gallery_sigset: PathBuf,
    pub probe_sigsets: Vec<PathBuf>,
}

impl DatasetPaths {
    /// The 20 (gallery, probe) sigset pairs of the identification protocol.
    pub fn sigset_pairs(&self) -> Vec<(PathBuf, PathBuf)> {
        self.probe_sigsets
            .iter()
            .map(|p| (self.gallery_sigset.clone(), p.clone()))
            .collect()
    }
}

/// Generates `n_identities` identities and renders each over all 21 grid
/// poses into `out_dir`.
///
/// Layout: `meshes/identity_NNN.obj` (+ `.landmarks` sidecar),
/// `images/idNNN_posePP.png` with `.lmk` and `.proj` sidecars, and
/// `sigsets/gallery.csv` plus one `sigsets/probe_pose_PP.csv` per
/// non-frontal pose. Sigset paths are relative to the sigset file's
/// directory, so the tree is relocatable; identity seeds are
/// `master_seed + i`, making regeneration byte-identical.
pub fn build_pose_grid_dataset(
    n_identities: usize,
    master_seed: u64,
    out_dir: &Path,
    image_size: (usize, usize),
) -> Result<DatasetPaths, SynthError> {
    if n_identities < 2 {
        return Err(SynthError::TooFewIdentities(n_identities));
    }
    let meshes_dir = out_dir.join("meshes");
    let images_dir = out_dir.join("images");
    let sigsets_dir = out_dir.join("sigsets");
    for dir in [&meshes_dir, &images_dir, &sigsets_dir] {
        fs::create_dir_all(dir).map_err(|e| SynthError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
    }

    let cells = pose_grid_cells();
    // entries[pose_index - 1] collects one sigset row per identity.
    let mut entries: Vec<Vec<SigsetEntry>> = vec![Vec::new(); cells.len()];

    for i in 0..n_identities {
        let identity = generate_identity(master_seed + i as u64);
        let mesh_name = format!("identity_{i:03}.obj");
        let mesh_path = meshes_dir.join(&mesh_name);
        let sidecar_path = meshes_dir.join(format!("identity_{i:03}.landmarks"));
        write_afm(&identity.mesh, &mesh_path, &sidecar_path)?;

        for &(pitch, yaw) in &cells {
            let index = pose_index(pitch, yaw).expect("grid cell");
            let stem = format!("id{i:03}_pose{index:02}");
            let sample = render(
                &identity,
                &Pose::new(pitch as f64, yaw as f64, 0.0),
                image_size,
            )?;
            sample.image.save_png(&images_dir.join(format!("{stem}.png")))?;
            write_landmarks2d(
                &sample.gt_landmarks2d,
                &images_dir.join(format!("{stem}.lmk")),
            )?;
            write_projection(
                &sample.gt_projection,
                &images_dir.join(format!("{stem}.proj")),
            )?;

            let mut record = DataRecord::new();
            record.set("id", stem.clone());
            record.set("subject", format!("subject_{i:03}"));
            record.set("path", format!("../images/{stem}.png"));
            record.set("mesh", format!("../meshes/{mesh_name}"));
            record.set("landmarks", format!("../images/{stem}.lmk"));
            record.set("pose", index.to_string());
            record.set("pitch", pitch.to_string());
            record.set("yaw", yaw.to_string());
            entries[index - 1].push(SigsetEntry {
                id: stem.clone(),
                subject: format!("subject_{i:03}"),
                path: format!("../images/{stem}.png"),
                record,
            });
        }
    }

    let frontal = pose_index(0, 0).expect("frontal cell");
    let mut gallery_sigset = PathBuf::new();
    let mut probe_sigsets = Vec::new();
    for (&(pitch, yaw), rows) in cells.iter().zip(entries) {
        let index = pose_index(pitch, yaw).expect("grid cell");
        let (name, path) = if index == frontal {
            ("gallery".to_string(), sigsets_dir.join("gallery.csv"))
        } else {
            let name = format!("probe_pose_{index:02}");
            let path = sigsets_dir.join(format!("{name}.csv"));
            (name, path)
        };
        let sigset = Sigset::new(name, rows)?;
        crate::datamodel::write_sigset(&sigset, &path)?;
        if index == frontal {
            gallery_sigset = path;
        } else {
            probe_sigsets.push(path);
        }
    }

    Ok(DatasetPaths {
        root: out_dir.to_path_buf(),
        gallery_sigset,
        probe_sigsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::read_sigset;

    #[test]
    fn grid_has_21_cells_in_pose_index_order() {
        let cells = pose_grid_cells();
        assert_eq!(cells.len(), 21);
        assert_eq!(cells[0], (30, -90));
        assert_eq!(cells[2], (-30, -90), "pose 3 is pitch -30, yaw -90");
        assert_eq!(cells[10], (0, 0), "pose 11 is frontal");
        assert_eq!(pose_index(-30, -90), Some(3));
        assert_eq!(pose_index(0, 0), Some(11));
        assert_eq!(pose_index(0, 45), None);
        // Exactly the advertised pitch/yaw values appear.
        for (pitch, yaw) in cells {
            assert!(GRID_PITCHES.contains(&pitch));
            assert!(GRID_YAWS.contains(&yaw));
        }
    }

    #[test]
    fn too_few_identities_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_pose_grid_dataset(1, 0, dir.path(), (64, 64)),
            Err(SynthError::TooFewIdentities(1))
        ));
    }

    #[test]
    fn dataset_counts_and_files_line_up() {
        let dir = tempfile::tempdir().unwrap();
        let paths = build_pose_grid_dataset(3, 42, dir.path(), (64, 64)).unwrap();
        assert_eq!(paths.probe_sigsets.len(), 20);
        assert_eq!(paths.sigset_pairs().len(), 20);

        let gallery = read_sigset(&paths.gallery_sigset).unwrap();
        assert_eq!(gallery.len(), 3);
        for probe in &paths.probe_sigsets {
            let sigset = read_sigset(probe).unwrap();
            assert_eq!(sigset.len(), 3);
            // Referenced files exist relative to the sigset directory.
            for entry in &sigset.entries {
                let base = probe.parent().unwrap();
                assert!(base.join(&entry.path).exists(), "missing {}", entry.path);
                let mesh = entry.record.get("mesh").unwrap();
                assert!(base.join(mesh).exists(), "missing {mesh}");
                let lmk = entry.record.get("landmarks").unwrap();
                assert!(base.join(lmk).exists(), "missing {lmk}");
            }
        }
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = build_pose_grid_dataset(2, 9, dir_a.path(), (64, 64)).unwrap();
        let b = build_pose_grid_dataset(2, 9, dir_b.path(), (64, 64)).unwrap();
        for rel in [
            "sigsets/gallery.csv",
            "sigsets/probe_pose_01.csv",
            "images/id000_pose01.png",
            "images/id001_pose21.png",
            "images/id000_pose11.lmk",
            "meshes/identity_001.obj",
        ] {
            let bytes_a = std::fs::read(a.root.join(rel)).unwrap();
            let bytes_b = std::fs::read(b.root.join(rel)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{rel} differs between runs");
        }
    }
}
