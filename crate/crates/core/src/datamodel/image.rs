//! Normalized-intensity image buffers with PNG I/O and bilinear sampling.

use super::DataError;
use std::path::Path;

/// Row-major image with interleaved channels and intensities in `[0, 1]`.
///
/// The continuous coordinate convention places the center of pixel `(x, y)`
/// at `(x + 0.5, y + 0.5)`; bilinear sampling uses it throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    /// Creates a buffer from raw samples; `data.len()` must equal
    /// `width * height * channels`, all values finite, channels 1 or 3.
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self, DataError> {
        if width == 0 || height == 0 {
            return Err(DataError::Image("image dimensions must be >= 1".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(DataError::Image(format!(
                "unsupported channel count {channels} (expected 1 or 3)"
            )));
        }
        if data.len() != width * height * channels {
            return Err(DataError::Image(format!(
                "sample count {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Image("non-finite pixel value".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// All-zero buffer.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::new(width, height, channels, vec![0.0; width * height * channels])
            .expect("valid zero buffer")
    }

    /// Builds a single-channel buffer from a function of pixel coordinates.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, 1, data).expect("valid generated buffer")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    /// Mean over channels at a pixel.
    pub fn intensity(&self, x: usize, y: usize) -> f32 {
        let base = (y * self.width + x) * self.channels;
        let sum: f32 = self.data[base..base + self.channels].iter().sum();
        sum / self.channels as f32
    }

    /// True when `(x, y)` has full bilinear support inside the image.
    pub fn in_bilinear_support(&self, x: f64, y: f64) -> bool {
        x >= 0.5 && y >= 0.5 && x <= self.width as f64 - 0.5 && y <= self.height as f64 - 0.5
    }

    /// Bilinear sample at continuous coordinates, one output per channel.
    /// Returns `None` when the sample footprint leaves the image.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<Vec<f32>> {
        if !self.in_bilinear_support(x, y) {
            return None;
        }
        Some(self.sample_bilinear_clamped(x, y))
    }

    /// Bilinear sample with coordinates clamped into the supported range.
    pub fn sample_bilinear_clamped(&self, x: f64, y: f64) -> Vec<f32> {
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let dx = (fx - x0 as f64) as f32;
        let dy = (fy - y0 as f64) as f32;
        (0..self.channels)
            .map(|c| {
                let v00 = self.get(x0, y0, c);
                let v10 = self.get(x1, y0, c);
                let v01 = self.get(x0, y1, c);
                let v11 = self.get(x1, y1, c);
                let top = v00 + (v10 - v00) * dx;
                let bot = v01 + (v11 - v01) * dx;
                top + (bot - top) * dy
            })
            .collect()
    }

    /// Copies the `w x h` rectangle at `(x, y)` into a new buffer.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self, DataError> {
        if x + w > self.width || y + h > self.height || w == 0 || h == 0 {
            return Err(DataError::Image(format!(
                "crop {w}x{h}+{x}+{y} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Self::new(w, h, self.channels, data)
    }

    /// Loads a PNG; grayscale sources become 1-channel, everything else RGB.
    pub fn load_png(path: &Path) -> Result<Self, DataError> {
        let img = image::open(path).map_err(|e| DataError::Image(format!(
            "cannot read {}: {e}",
            path.display()
        )))?;
        let (channels, raw, w, h) = match img {
            image::DynamicImage::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                (1, g.into_raw(), w, h)
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = rgb.dimensions();
                (3, rgb.into_raw(), w, h)
            }
        };
        let data = raw.iter().map(|&b| b as f32 / 255.0).collect();
        Self::new(w as usize, h as usize, channels, data)
    }

    /// Saves as an 8-bit PNG (gray or RGB according to channel count).
    pub fn save_png(&self, path: &Path) -> Result<(), DataError> {
        let to_byte = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let bytes: Vec<u8> = self.data.iter().map(|&v| to_byte(v)).collect();
        let result = if self.channels == 1 {
            image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
                .expect("buffer length checked at construction")
                .save(path)
        } else {
            image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes)
                .expect("buffer length checked at construction")
                .save(path)
        };
        result.map_err(|e| DataError::Image(format!("cannot write {}: {e}", path.display())))
    }
}

/// Rescales so the short side is at least `lo` and the long side at most
/// `hi`, preserving aspect ratio; in-range images pass through unchanged.
/// When both constraints bind, the `hi` cap wins. Idempotent.
pub fn normalize_resolution(img: &ImageBuffer, lo: u32, hi: u32) -> ImageBuffer {
    let w = img.width() as f64;
    let h = img.height() as f64;
    let min_side = w.min(h);
    let max_side = w.max(h);
    let mut scale = 1.0;
    if min_side < lo as f64 {
        scale = lo as f64 / min_side;
    }
    if max_side * scale > hi as f64 {
        scale = hi as f64 / max_side;
    }
    if scale == 1.0 {
        return img.clone();
    }
    let new_w = ((w * scale).round() as usize).max(1);
    let new_h = ((h * scale).round() as usize).max(1);
    resize_bilinear(img, new_w, new_h)
}

fn resize_bilinear(img: &ImageBuffer, new_w: usize, new_h: usize) -> ImageBuffer {
    let sx = img.width() as f64 / new_w as f64;
    let sy = img.height() as f64 / new_h as f64;
    let channels = img.channels();
    let mut data = Vec::with_capacity(new_w * new_h * channels);
    for y in 0..new_h {
        for x in 0..new_w {
            let src_x = (x as f64 + 0.5) * sx;
            let src_y = (y as f64 + 0.5) * sy;
            data.extend(img.sample_bilinear_clamped(src_x, src_y));
        }
    }
    ImageBuffer::new(new_w, new_h, channels, data).expect("resize produces a valid buffer")
}
