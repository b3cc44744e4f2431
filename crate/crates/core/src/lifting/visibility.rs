//! Z-buffer self-occlusion estimation over the geometry image.

use super::{GeometryImage, LiftError};
use crate::datamodel::DataError;
use crate::geometry::{depth_of, project, ProjectionMatrix};
use std::path::Path;

/// Visibility state of one UV pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Visible,
    SelfOccluded,
    OutOfImage,
    InvalidUv,
}

impl Visibility {
    /// Fixed 8-bit codes used by the PNG mask format.
    pub fn code(self) -> u8 {
        match self {
            Visibility::Visible => 255,
            Visibility::SelfOccluded => 128,
            Visibility::OutOfImage => 64,
            Visibility::InvalidUv => 0,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            255 => Some(Visibility::Visible),
            128 => Some(Visibility::SelfOccluded),
            64 => Some(Visibility::OutOfImage),
            0 => Some(Visibility::InvalidUv),
            _ => None,
        }
    }
}

/// Per-UV-pixel visibility; `InvalidUv` exactly where the geometry image is
/// invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    states: Vec<Visibility>,
}

impl OcclusionMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn state(&self, x: usize, y: usize) -> Visibility {
        self.states[y * self.width + x]
    }

    pub fn states(&self) -> &[Visibility] {
        &self.states
    }

    pub fn count(&self, state: Visibility) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Visible pixels over valid (non-`InvalidUv`) pixels.
    pub fn visible_fraction(&self) -> f64 {
        let valid = self.states.len() - self.count(Visibility::InvalidUv);
        if valid == 0 {
            return 0.0;
        }
        self.count(Visibility::Visible) as f64 / valid as f64
    }

    /// Builds a mask directly from states (used by tests and file readers).
    pub fn from_states(
        width: usize,
        height: usize,
        states: Vec<Visibility>,
    ) -> Result<Self, LiftError> {
        if states.len() != width * height {
            return Err(LiftError::SizeMismatch(format!(
                "{} states for {width}x{height} mask",
                states.len()
            )));
        }
        Ok(Self {
            width,
            height,
            states,
        })
    }

    /// Saves as an 8-bit gray PNG with the fixed state codes.
    pub fn save_png(&self, path: &Path) -> Result<(), LiftError> {
        let bytes: Vec<u8> = self.states.iter().map(|s| s.code()).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("state count matches dimensions")
            .save(path)
            .map_err(|e| {
                LiftError::Data(DataError::Image(format!(
                    "cannot write {}: {e}",
                    path.display()
                )))
            })
    }

    /// Loads a mask PNG written by [`OcclusionMask::save_png`].
    pub fn load_png(path: &Path) -> Result<Self, LiftError> {
        let img = image::open(path)
            .map_err(|e| {
                LiftError::Data(DataError::Image(format!(
                    "cannot read {}: {e}",
                    path.display()
                )))
            })?
            .to_luma8();
        let (w, h) = img.dimensions();
        let states = img
            .as_raw()
            .iter()
            .map(|&b| {
                Visibility::from_code(b).ok_or_else(|| {
                    LiftError::Data(DataError::Image(format!(
                        "byte {b} is not a mask state code"
                    )))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_states(w as usize, h as usize, states)
    }
}

/// Suggested depth tolerance: 2% of the projected depth range.
///
/// The tolerance must swallow the depth spread that samples of one smooth
/// surface exhibit inside a single image pixel, otherwise neighbors
/// spuriously occlude each other wherever the UV sampling density reaches
/// the image resolution; it must stay far below genuine sheet separations.
/// A few percent of the depth range sits between the two regimes.
pub fn suggest_eps(g: &GeometryImage, p: &ProjectionMatrix) -> Result<f64, LiftError> {
    let depths = depth_of(p, g.positions())?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (d, &valid) in depths.iter().zip(g.valid_flags()) {
        if valid {
            min = min.min(*d);
            max = max.max(*d);
        }
    }
    let range = max - min;
    if !range.is_finite() || range <= 0.0 {
        return Ok(1e-6);
    }
    Ok(0.02 * range)
}

/// Classifies every geometry-image pixel as visible, self-occluded or out of
/// image by projecting it and keeping per image pixel only depths within
/// `eps` of the nearest.
///
/// A pixel counts as in-image when its projection has full bilinear support
/// (at least half a pixel inside every border) *and* every image pixel in
/// its sampling footprint is covered by the projected surface (within one
/// cell of some projected sample) — samples failing either condition could
/// not be lifted faithfully and are marked `OutOfImage`. Ties within `eps`
/// of the minimum count as visible.
pub fn zbuffer_visibility(
    g: &GeometryImage,
    p: &ProjectionMatrix,
    image_size: (usize, usize),
    eps: f64,
) -> Result<OcclusionMask, LiftError> {
    if !(eps > 0.0) {
        return Err(LiftError::InvalidEps(eps));
    }
    let (img_w, img_h) = image_size;
    let wf = img_w as f64;
    let hf = img_h as f64;
    let projections = project(p, g.positions());
    let depths = depth_of(p, g.positions())?;

    // Nearest depth per image pixel. Every valid pixel projecting onto the
    // grid contributes, including border pixels that cannot be sampled.
    let mut buffer = vec![f64::INFINITY; img_w * img_h];
    for i in 0..projections.len() {
        if !g.valid_flags()[i] {
            continue;
        }
        let [px, py] = projections[i];
        if px >= 0.0 && px < wf && py >= 0.0 && py < hf {
            let cell = (py as usize) * img_w + px as usize;
            if depths[i] < buffer[cell] {
                buffer[cell] = depths[i];
            }
        }
    }

    // Image-pixel coverage of the projected surface: bbox fill of the quads
    // spanned by neighboring geometry-image samples. Each bbox is padded by
    // half its own extent — the surface overhangs its outermost sample
    // centers by half a sample spacing, so the padding tracks the local
    // sampling density: generous for sparse grids, tight at grazing rims.
    let mut covered = vec![false; img_w * img_h];
    let gw = g.width();
    let gh = g.height();
    for gy in 0..gh.saturating_sub(1) {
        for gx in 0..gw.saturating_sub(1) {
            let corners = [
                gy * gw + gx,
                gy * gw + gx + 1,
                (gy + 1) * gw + gx,
                (gy + 1) * gw + gx + 1,
            ];
            if corners.iter().any(|&i| !g.valid_flags()[i]) {
                continue;
            }
            let mut min_x = f64::INFINITY;
            let mut max_x = f64::NEG_INFINITY;
            let mut min_y = f64::INFINITY;
            let mut max_y = f64::NEG_INFINITY;
            for &i in &corners {
                let [px, py] = projections[i];
                min_x = min_x.min(px);
                max_x = max_x.max(px);
                min_y = min_y.min(py);
                max_y = max_y.max(py);
            }
            if min_x > max_x || min_y > max_y {
                continue;
            }
            let pad_x = 0.5 * (max_x - min_x);
            let pad_y = 0.5 * (max_y - min_y);
            // Mark cells whose *center* falls inside the padded bbox — the
            // same point-sampled semantics a rasterizer uses to paint them.
            let x0 = (min_x - pad_x - 0.5).ceil().max(0.0) as usize;
            let x1 = ((max_x + pad_x - 0.5).floor().min(wf - 1.0)).max(0.0) as usize;
            let y0 = (min_y - pad_y - 0.5).ceil().max(0.0) as usize;
            let y1 = ((max_y + pad_y - 0.5).floor().min(hf - 1.0)).max(0.0) as usize;
            if x0 > x1 || y0 > y1 {
                continue;
            }
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    covered[cy * img_w + cx] = true;
                }
            }
        }
    }

    let in_support =
        |px: f64, py: f64| px >= 0.5 && py >= 0.5 && px <= wf - 0.5 && py <= hf - 0.5;
    let footprint_covered = |px: f64, py: f64| {
        let x0 = ((px - 0.5).floor() as usize).min(img_w - 1);
        let y0 = ((py - 0.5).floor() as usize).min(img_h - 1);
        let x1 = (x0 + 1).min(img_w - 1);
        let y1 = (y0 + 1).min(img_h - 1);
        covered[y0 * img_w + x0]
            && covered[y0 * img_w + x1]
            && covered[y1 * img_w + x0]
            && covered[y1 * img_w + x1]
    };

    let states = (0..projections.len())
        .map(|i| {
            if !g.valid_flags()[i] {
                return Visibility::InvalidUv;
            }
            let [px, py] = projections[i];
            if !in_support(px, py) || !footprint_covered(px, py) {
                return Visibility::OutOfImage;
            }
            let cell = (py as usize).min(img_h - 1) * img_w + (px as usize).min(img_w - 1);
            if depths[i] <= buffer[cell] + eps {
                Visibility::Visible
            } else {
                Visibility::SelfOccluded
            }
        })
        .collect();

    OcclusionMask::from_states(g.width(), g.height(), states)
}
