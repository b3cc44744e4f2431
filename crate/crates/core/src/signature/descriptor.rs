//! Pluggable per-patch feature extraction.

use crate::datamodel::ImageBuffer;

/// A deterministic per-patch feature extractor.
///
/// Implementations must be stateless (or internally synchronized): the
/// pipeline invokes them concurrently across images and patches. Identical
/// inputs must yield identical outputs.
pub trait FeatureExtractor: Send + Sync {
    fn name(&self) -> &str;

    /// Output dimension D.
    fn dim(&self) -> usize;

    /// Computes a D-vector from patch pixels and the per-pixel visibility
    /// mask (row-major, `patch.width() * patch.height()` entries).
    fn extract(&self, patch: &ImageBuffer, visible: &[bool]) -> Vec<f32>;
}

/// Default descriptor: gradient-orientation histograms on a 4×4 spatial
/// grid with 8 orientation bins per cell and soft orientation binning.
///
/// Gradients come from central differences on the channel-mean intensity;
/// border and masked pixels contribute nothing. The 128 raw values are
/// zero-padded (or truncated) to the configured dimension. A patch without
/// any gradient mass falls back to a one-hot vector at index 0 so usable
/// patches always normalize.
#[derive(Debug, Clone)]
pub struct GradientHistogramDescriptor {
    dim: usize,
}

const GRID: usize = 4;
const ORIENTATIONS: usize = 8;

impl GradientHistogramDescriptor {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "descriptor dimension must be at least 1");
        Self { dim }
    }
}

impl Default for GradientHistogramDescriptor {
    fn default() -> Self {
        Self::new(super::PRESET_DIM)
    }
}

impl FeatureExtractor for GradientHistogramDescriptor {
    fn name(&self) -> &str {
        "gradient-histogram"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn extract(&self, patch: &ImageBuffer, visible: &[bool]) -> Vec<f32> {
        let w = patch.width();
        let h = patch.height();
        let mut hist = [0.0f64; GRID * GRID * ORIENTATIONS];
        let mut mass = 0.0f64;
        if w >= 3 && h >= 3 {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    if !visible[y * w + x] {
                        continue;
                    }
                    let gx = (patch.intensity(x + 1, y) - patch.intensity(x - 1, y)) as f64;
                    let gy = (patch.intensity(x, y + 1) - patch.intensity(x, y - 1)) as f64;
                    let magnitude = (gx * gx + gy * gy).sqrt();
                    if magnitude < 1e-12 {
                        continue;
                    }
                    let mut angle = gy.atan2(gx);
                    if angle < 0.0 {
                        angle += std::f64::consts::TAU;
                    }
                    // Soft assignment between the two nearest orientation bins.
                    let pos = angle / std::f64::consts::TAU * ORIENTATIONS as f64;
                    let b0 = (pos.floor() as usize) % ORIENTATIONS;
                    let frac = pos - pos.floor();
                    let b1 = (b0 + 1) % ORIENTATIONS;
                    let cell_x = (x * GRID / w).min(GRID - 1);
                    let cell_y = (y * GRID / h).min(GRID - 1);
                    let base = (cell_y * GRID + cell_x) * ORIENTATIONS;
                    hist[base + b0] += magnitude * (1.0 - frac);
                    hist[base + b1] += magnitude * frac;
                    mass += magnitude;
                }
            }
        }
        let mut out = vec![0.0f32; self.dim];
        if mass == 0.0 {
            out[0] = 1.0;
            return out;
        }
        for (dst, &src) in out.iter_mut().zip(hist.iter()) {
            *dst = src as f32;
        }
        out
    }
}
