//! File formats for meshes and pose providers.
//!
//! * Mesh: OBJ subset with `v`, `vt` and triangular `f` statements, plus a
//!   sidecar text file listing landmark vertex indices (0-based, one per
//!   line, `#` comments allowed) in canonical order.
//! * 2D landmarks: text file with one `x y` pair per line.
//! * Projection: two lines of four numbers (the affine rows).

use super::{AnnotatedFaceModel, GeometryError, Landmarks2D, ProjectionMatrix};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Reads a mesh and its landmark sidecar into an [`AnnotatedFaceModel`].
pub fn read_afm(obj_path: &Path, landmarks_path: &Path) -> Result<AnnotatedFaceModel, GeometryError> {
    let obj_text = fs::read_to_string(obj_path).map_err(|e| GeometryError::io(obj_path, e))?;
    let (vertices, uv, triangles) = parse_obj(&obj_text)?;
    let sidecar = fs::read_to_string(landmarks_path)
        .map_err(|e| GeometryError::io(landmarks_path, e))?;
    let landmark_indices = parse_landmark_sidecar(&sidecar)?;
    AnnotatedFaceModel::new(vertices, triangles, uv, landmark_indices)
}

/// Writes the mesh as OBJ plus the landmark sidecar.
pub fn write_afm(
    model: &AnnotatedFaceModel,
    obj_path: &Path,
    landmarks_path: &Path,
) -> Result<(), GeometryError> {
    let mut obj = String::new();
    for v in model.vertices() {
        writeln!(obj, "v {} {} {}", v[0], v[1], v[2]).unwrap();
    }
    for t in model.uv() {
        writeln!(obj, "vt {} {}", t[0], t[1]).unwrap();
    }
    for f in model.triangles() {
        writeln!(obj, "f {}/{} {}/{} {}/{}", f[0] + 1, f[0] + 1, f[1] + 1, f[1] + 1, f[2] + 1, f[2] + 1)
            .unwrap();
    }
    fs::write(obj_path, obj).map_err(|e| GeometryError::io(obj_path, e))?;
    let mut sidecar = String::from("# landmark vertex indices, canonical order\n");
    for idx in model.landmark_indices() {
        writeln!(sidecar, "{idx}").unwrap();
    }
    fs::write(landmarks_path, sidecar).map_err(|e| GeometryError::io(landmarks_path, e))
}

type ParsedObj = (Vec<[f64; 3]>, Vec<[f64; 2]>, Vec<[usize; 3]>);

fn parse_obj(text: &str) -> Result<ParsedObj, GeometryError> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut uv_pool: Vec<[f64; 2]> = Vec::new();
    let mut faces: Vec<[(usize, Option<usize>); 3]> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let keyword = parts.next().unwrap();
        let fail = |message: String| GeometryError::MeshFormat { line, message };
        match keyword {
            "v" => {
                let coords = parse_floats::<3>(parts, line, "v")?;
                vertices.push(coords);
            }
            "vt" => {
                let coords = parse_floats::<2>(parts, line, "vt")?;
                uv_pool.push(coords);
            }
            "f" => {
                let refs: Vec<&str> = parts.collect();
                if refs.len() != 3 {
                    return Err(fail(format!(
                        "face with {} corners (only triangles are supported)",
                        refs.len()
                    )));
                }
                let mut corners = [(0usize, None); 3];
                for (i, r) in refs.iter().enumerate() {
                    let mut fields = r.split('/');
                    let v_str = fields.next().unwrap_or("");
                    let v_idx: usize = v_str.parse().map_err(|_| GeometryError::MeshFormat {
                        line,
                        message: format!("bad vertex index '{v_str}'"),
                    })?;
                    let vt_idx = match fields.next() {
                        None | Some("") => None,
                        Some(s) => Some(s.parse::<usize>().map_err(|_| {
                            GeometryError::MeshFormat {
                                line,
                                message: format!("bad texture index '{s}'"),
                            }
                        })?),
                    };
                    corners[i] = (v_idx, vt_idx);
                }
                faces.push(corners);
            }
            // vn, o, g, s, usemtl, mtllib: ignored subset extensions.
            _ => {}
        }
    }

    // Assemble a per-vertex UV table. OBJ indexes UVs per corner; the model
    // requires a single chart, so conflicting assignments are an error.
    let v_count = vertices.len();
    let mut uv: Vec<Option<[f64; 2]>> = vec![None; v_count];
    let mut triangles = Vec::with_capacity(faces.len());
    for corners in &faces {
        let mut tri = [0usize; 3];
        for (slot, &(v_idx, vt_idx)) in tri.iter_mut().zip(corners) {
            if v_idx == 0 || v_idx > v_count {
                return Err(GeometryError::MeshFormat {
                    line: 0,
                    message: format!("face vertex index {v_idx} out of range"),
                });
            }
            let v0 = v_idx - 1;
            let t0 = match vt_idx {
                Some(t) if t >= 1 && t <= uv_pool.len() => t - 1,
                Some(t) => {
                    return Err(GeometryError::MeshFormat {
                        line: 0,
                        message: format!("face texture index {t} out of range"),
                    })
                }
                None if v0 < uv_pool.len() => v0,
                None => {
                    return Err(GeometryError::MeshFormat {
                        line: 0,
                        message: "face corner has no texture coordinate".into(),
                    })
                }
            };
            let candidate = uv_pool[t0];
            match uv[v0] {
                None => uv[v0] = Some(candidate),
                Some(existing) => {
                    if (existing[0] - candidate[0]).abs() > 1e-9
                        || (existing[1] - candidate[1]).abs() > 1e-9
                    {
                        return Err(GeometryError::MeshFormat {
                            line: 0,
                            message: format!(
                                "vertex {v0} has conflicting texture coordinates"
                            ),
                        });
                    }
                }
            }
            *slot = v0;
        }
        triangles.push(tri);
    }

    let uv: Vec<[f64; 2]> = uv
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| GeometryError::MeshFormat {
                line: 0,
                message: format!("vertex {i} is never referenced with a texture coordinate"),
            })
        })
        .collect::<Result<_, _>>()?;

    Ok((vertices, uv, triangles))
}

fn parse_floats<const N: usize>(
    parts: std::str::SplitWhitespace<'_>,
    line: usize,
    keyword: &str,
) -> Result<[f64; N], GeometryError> {
    let values: Vec<f64> = parts
        .map(|s| {
            s.parse::<f64>().map_err(|_| GeometryError::MeshFormat {
                line,
                message: format!("bad number '{s}' in '{keyword}' statement"),
            })
        })
        .collect::<Result<_, _>>()?;
    values.try_into().map_err(|_| GeometryError::MeshFormat {
        line,
        message: format!("'{keyword}' statement needs exactly {N} numbers"),
    })
}

fn parse_landmark_sidecar(text: &str) -> Result<Vec<usize>, GeometryError> {
    let mut indices = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let idx = trimmed.parse::<usize>().map_err(|_| GeometryError::MeshFormat {
            line: lineno + 1,
            message: format!("bad landmark vertex index '{trimmed}'"),
        })?;
        indices.push(idx);
    }
    Ok(indices)
}

/// Reads a 2D landmark file: one `x y` pair per line.
pub fn read_landmarks2d(path: &Path) -> Result<Landmarks2D, GeometryError> {
    let text = fs::read_to_string(path).map_err(|e| GeometryError::io(path, e))?;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = trimmed
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|_| GeometryError::MeshFormat {
                    line: lineno + 1,
                    message: format!("bad coordinate '{s}'"),
                })
            })
            .collect::<Result<_, _>>()?;
        if coords.len() != 2 {
            return Err(GeometryError::MeshFormat {
                line: lineno + 1,
                message: "expected two coordinates per line".into(),
            });
        }
        points.push([coords[0], coords[1]]);
    }
    Landmarks2D::new(points)
}

/// Writes a 2D landmark file.
pub fn write_landmarks2d(landmarks: &Landmarks2D, path: &Path) -> Result<(), GeometryError> {
    let mut text = String::new();
    for p in landmarks.points() {
        writeln!(text, "{} {}", p[0], p[1]).unwrap();
    }
    fs::write(path, text).map_err(|e| GeometryError::io(path, e))
}

/// Writes the two affine rows as text.
pub fn write_projection(p: &ProjectionMatrix, path: &Path) -> Result<(), GeometryError> {
    let a = p.affine();
    let text = format!(
        "{} {} {} {}\n{} {} {} {}\n",
        a[0][0], a[0][1], a[0][2], a[0][3], a[1][0], a[1][1], a[1][2], a[1][3]
    );
    fs::write(path, text).map_err(|e| GeometryError::io(path, e))
}

/// Reads a 2×4 projection text file.
pub fn read_projection(path: &Path) -> Result<ProjectionMatrix, GeometryError> {
    let text = fs::read_to_string(path).map_err(|e| GeometryError::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let values: Vec<f64> = trimmed
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|_| GeometryError::MeshFormat {
                    line: lineno + 1,
                    message: format!("bad number '{s}'"),
                })
            })
            .collect::<Result<_, _>>()?;
        if values.len() != 4 {
            return Err(GeometryError::MeshFormat {
                line: lineno + 1,
                message: "expected four numbers per row".into(),
            });
        }
        rows.push([values[0], values[1], values[2], values[3]]);
    }
    if rows.len() != 2 {
        return Err(GeometryError::MeshFormat {
            line: 0,
            message: format!("expected two rows, found {}", rows.len()),
        });
    }
    ProjectionMatrix::from_affine([rows[0], rows[1]])
}
