//! Patch-based signatures with per-patch occlusion encoding.
//!
//! The lifted texture is divided into K patches; each usable patch (visible
//! fraction at or above the threshold) carries a unit-norm D-dimensional
//! feature row, each unusable patch an all-zero row. Two presets are built
//! in: 64 non-overlapping grid patches and 8 partially-overlapping patches,
//! both with D = 1024.

mod descriptor;
mod file;

pub use descriptor::{FeatureExtractor, GradientHistogramDescriptor};
pub use file::{read_signature, write_signature};

use crate::datamodel::ImageBuffer;
use crate::lifting::{LiftedTexture, OcclusionMask, Visibility};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("texture size {width}x{height} not divisible by 8 as the grid presets require")]
    IndivisibleTexture { width: usize, height: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("occlusion threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("extractor '{name}' produced dimension {got}, preset requires {want}")]
    DimensionMismatch {
        name: String,
        got: usize,
        want: usize,
    },
    #[error("extractor output invalid: {0}")]
    ExtractorOutput(String),
    #[error("patch rectangle out of texture bounds: {0}")]
    PatchOutOfBounds(String),
    #[error("signature file error: {0}")]
    File(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Per-patch feature dimension shared by both grid presets.
pub const PRESET_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutPreset {
    /// 8×8 grid of non-overlapping patches (K = 64).
    Prfs64,
    /// 2×4 grid of partially-overlapping patches (K = 8).
    Dprfs8,
    Custom,
}

impl LayoutPreset {
    pub fn code(self) -> u8 {
        match self {
            LayoutPreset::Prfs64 => 0,
            LayoutPreset::Dprfs8 => 1,
            LayoutPreset::Custom => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(LayoutPreset::Prfs64),
            1 => Some(LayoutPreset::Dprfs8),
            2 => Some(LayoutPreset::Custom),
            _ => None,
        }
    }
}

/// One patch rectangle in texture pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl PatchRect {
    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

/// K patch rectangles pinned to a texture size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLayout {
    preset: LayoutPreset,
    texture_width: usize,
    texture_height: usize,
    patches: Vec<PatchRect>,
}

impl PatchLayout {
    pub fn preset(&self) -> LayoutPreset {
        self.preset
    }

    pub fn texture_size(&self) -> (usize, usize) {
        (self.texture_width, self.texture_height)
    }

    pub fn patches(&self) -> &[PatchRect] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// A custom layout from explicit rectangles (all within bounds).
    pub fn custom(
        texture_width: usize,
        texture_height: usize,
        patches: Vec<PatchRect>,
    ) -> Result<Self, SignatureError> {
        for r in &patches {
            if r.w == 0 || r.h == 0 || r.x + r.w > texture_width || r.y + r.h > texture_height {
                return Err(SignatureError::PatchOutOfBounds(format!(
                    "{}x{}+{}+{} in {texture_width}x{texture_height}",
                    r.w, r.h, r.x, r.y
                )));
            }
        }
        Ok(Self {
            preset: LayoutPreset::Custom,
            texture_width,
            texture_height,
            patches,
        })
    }
}

/// Builds the patch layout for a preset.
///
/// * `Prfs64`: an 8×8 grid of `(W/8)×(H/8)` rectangles tiling the texture.
/// * `Dprfs8`: 2 rows × 4 columns spanning the texture with ~25% overlap
///   between neighbors in each direction. Solving `4w − 3·(w/4) = W` gives
///   the column width `w = 4W/13` with stride `3w/4`; rows use `h = 4H/7`.
///   Positions are rounded to integers.
///
/// Grid presets require W and H divisible by 8.
pub fn make_layout(
    preset: LayoutPreset,
    texture_width: usize,
    texture_height: usize,
) -> Result<PatchLayout, SignatureError> {
    if texture_width % 8 != 0 || texture_height % 8 != 0 {
        return Err(SignatureError::IndivisibleTexture {
            width: texture_width,
            height: texture_height,
        });
    }
    let patches = match preset {
        LayoutPreset::Prfs64 => {
            let pw = texture_width / 8;
            let ph = texture_height / 8;
            let mut patches = Vec::with_capacity(64);
            for row in 0..8 {
                for col in 0..8 {
                    patches.push(PatchRect {
                        x: col * pw,
                        y: row * ph,
                        w: pw,
                        h: ph,
                    });
                }
            }
            patches
        }
        LayoutPreset::Dprfs8 => {
            let pw = (4.0 * texture_width as f64 / 13.0).round() as usize;
            let ph = (4.0 * texture_height as f64 / 7.0).round() as usize;
            let stride_x = (texture_width - pw) as f64 / 3.0;
            let mut patches = Vec::with_capacity(8);
            for row in 0..2 {
                let y = row * (texture_height - ph);
                for col in 0..4 {
                    let x = (col as f64 * stride_x).round() as usize;
                    patches.push(PatchRect { x, y, w: pw, h: ph });
                }
            }
            patches
        }
        LayoutPreset::Custom => {
            return Err(SignatureError::File(
                "custom layouts are built with PatchLayout::custom".into(),
            ))
        }
    };
    Ok(PatchLayout {
        preset,
        texture_width,
        texture_height,
        patches,
    })
}

/// Per-patch visible fractions and usability flags.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionEncoding {
    pub fractions: Vec<f64>,
    pub flags: Vec<bool>,
    pub threshold: f64,
}

/// Counts visible pixels per patch: `fraction = visible / area`,
/// `flag = fraction >= threshold`.
pub fn encode_occlusion(
    z: &OcclusionMask,
    layout: &PatchLayout,
    threshold: f64,
) -> Result<OcclusionEncoding, SignatureError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SignatureError::InvalidThreshold(threshold));
    }
    if (z.width(), z.height()) != layout.texture_size() {
        return Err(SignatureError::SizeMismatch(format!(
            "mask {}x{} vs layout texture {}x{}",
            z.width(),
            z.height(),
            layout.texture_size().0,
            layout.texture_size().1
        )));
    }
    let mut fractions = Vec::with_capacity(layout.len());
    let mut flags = Vec::with_capacity(layout.len());
    for rect in layout.patches() {
        let mut visible = 0usize;
        for y in rect.y..rect.y + rect.h {
            for x in rect.x..rect.x + rect.w {
                if z.state(x, y) == Visibility::Visible {
                    visible += 1;
                }
            }
        }
        let fraction = visible as f64 / rect.area() as f64;
        fractions.push(fraction);
        flags.push(fraction >= threshold);
    }
    Ok(OcclusionEncoding {
        fractions,
        flags,
        threshold,
    })
}

/// A K×D feature block plus its occlusion encoding.
///
/// Usable patches hold unit-L2 feature rows; unusable patches hold zero
/// rows, keeping the block a fixed shape. `subject_hint` is an optional
/// in-memory label and is not persisted by the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub preset: LayoutPreset,
    pub patch_count: usize,
    pub dim: usize,
    pub features: Vec<f32>,
    pub encoding: OcclusionEncoding,
    pub subject_hint: Option<String>,
}

impl Signature {
    pub fn row(&self, patch: usize) -> &[f32] {
        &self.features[patch * self.dim..(patch + 1) * self.dim]
    }

    pub fn usable(&self, patch: usize) -> bool {
        self.encoding.flags[patch]
    }

    pub fn same_shape(&self, other: &Signature) -> bool {
        self.preset == other.preset
            && self.patch_count == other.patch_count
            && self.dim == other.dim
    }
}

/// Runs the extractor on every usable patch and assembles the signature.
///
/// Usable rows are L2-normalized; unusable patches stay zero. The extractor
/// dimension must match the preset dimension (1024 for the grid presets).
pub fn extract_signature(
    texture: &LiftedTexture,
    z: &OcclusionMask,
    layout: &PatchLayout,
    extractor: &dyn FeatureExtractor,
    threshold: f64,
) -> Result<Signature, SignatureError> {
    if (texture.width(), texture.height()) != layout.texture_size() {
        return Err(SignatureError::SizeMismatch(format!(
            "texture {}x{} vs layout texture {}x{}",
            texture.width(),
            texture.height(),
            layout.texture_size().0,
            layout.texture_size().1
        )));
    }
    let dim = extractor.dim();
    if layout.preset() != LayoutPreset::Custom && dim != PRESET_DIM {
        return Err(SignatureError::DimensionMismatch {
            name: extractor.name().to_owned(),
            got: dim,
            want: PRESET_DIM,
        });
    }
    let encoding = encode_occlusion(z, layout, threshold)?;
    let k = layout.len();
    let mut features = vec![0.0f32; k * dim];
    for (i, rect) in layout.patches().iter().enumerate() {
        if !encoding.flags[i] {
            continue;
        }
        let patch = crop_patch(texture, rect)?;
        let visible = patch_visibility(z, rect);
        let raw = extractor.extract(&patch, &visible);
        if raw.len() != dim {
            return Err(SignatureError::DimensionMismatch {
                name: extractor.name().to_owned(),
                got: raw.len(),
                want: dim,
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(SignatureError::ExtractorOutput(format!(
                "non-finite feature from '{}' on patch {i}",
                extractor.name()
            )));
        }
        let norm = raw.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm < 1e-20 {
            return Err(SignatureError::ExtractorOutput(format!(
                "zero-norm feature from '{}' on usable patch {i}",
                extractor.name()
            )));
        }
        let row = &mut features[i * dim..(i + 1) * dim];
        for (dst, &src) in row.iter_mut().zip(&raw) {
            *dst = (src as f64 / norm) as f32;
        }
    }
    Ok(Signature {
        preset: layout.preset(),
        patch_count: k,
        dim,
        features,
        encoding,
        subject_hint: None,
    })
}

fn crop_patch(texture: &ImageBuffer, rect: &PatchRect) -> Result<ImageBuffer, SignatureError> {
    texture
        .crop(rect.x, rect.y, rect.w, rect.h)
        .map_err(|e| SignatureError::SizeMismatch(e.to_string()))
}

fn patch_visibility(z: &OcclusionMask, rect: &PatchRect) -> Vec<bool> {
    let mut out = Vec::with_capacity(rect.area());
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            out.push(z.state(x, y) == Visibility::Visible);
        }
    }
    out
}
