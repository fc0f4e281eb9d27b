//! Gesture-volume preprocessing.
//!
//! A frame sequence of any length becomes a `32 × 28 × 28 × 3` volume:
//! intensity, Sobel gradient magnitude and absolute frame difference, each
//! channel normalized to zero mean and unit variance over the whole volume.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::imaging::{grayscale, pnm, FloatImage, ImageBuffer};
use crate::neuralnet::Tensor;

pub const TARGET_FRAMES: usize = 32;
pub const TARGET_SIZE: usize = 28;
pub const VOLUME_CHANNELS: usize = 3;

/// Ordered, non-empty frames of uniform size and channel count.
#[derive(Clone, Debug, PartialEq)]
pub struct GestureSequence {
    frames: Vec<ImageBuffer>,
}

impl GestureSequence {
    pub fn new(frames: Vec<ImageBuffer>) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::InvalidInput("gesture sequence is empty".into()))?;
        if let Some(f) = frames.iter().find(|f| !f.same_size(first) || f.channels() != first.channels()) {
            return invalid(format!(
                "frame {}x{}x{} differs from first frame {}x{}x{}",
                f.width(),
                f.height(),
                f.channels(),
                first.width(),
                first.height(),
                first.channels()
            ));
        }
        Ok(Self { frames })
    }

    /// Loads `frame_0000.pgm`, `frame_0001.pgm`, ... from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_frames(dir)?)
    }

    pub fn frames(&self) -> &[ImageBuffer] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Reads every `frame_NNNN.pgm`/`.ppm` in `dir`, sorted by name.
pub fn load_frames(dir: impl AsRef<Path>) -> Result<Vec<ImageBuffer>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("frame_") && (name.ends_with(".pgm") || name.ends_with(".ppm"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return invalid(format!("no frame_*.pgm files in {}", dir.display()));
    }
    paths.iter().map(pnm::read).collect()
}

/// Name of frame `k` inside a frame directory.
pub fn frame_name(k: usize, ext: &str) -> String {
    format!("frame_{k:04}.{ext}")
}

/// Nearest-neighbour source index for output frame `k`:
/// `round(k * (n - 1) / (target - 1))`, half up, endpoints pinned.
pub fn resample_index(k: usize, n: usize, target: usize) -> usize {
    if target <= 1 {
        return 0;
    }
    // exact rational rounding: floor((2 k (n-1) + (target-1)) / (2 (target-1)))
    (2 * k * (n - 1) + (target - 1)) / (2 * (target - 1))
}

pub fn resample_temporal(seq: &GestureSequence, target: usize) -> Result<GestureSequence> {
    if target == 0 {
        return invalid("target frame count must be positive");
    }
    let n = seq.len();
    let frames = (0..target).map(|k| seq.frames[resample_index(k, n, target)].clone()).collect();
    GestureSequence::new(frames)
}

/// 2×2 block mean per channel, rounded half up.
pub fn downsample_spatial(img: &ImageBuffer, factor: usize) -> Result<ImageBuffer> {
    if factor != 2 {
        return Err(Error::UnsupportedConfig(format!("only factor 2 is supported, got {factor}")));
    }
    if img.width() % 2 != 0 || img.height() % 2 != 0 {
        return invalid(format!("downsampling needs even dimensions, got {}x{}", img.width(), img.height()));
    }
    let (w, h, c) = (img.width() / 2, img.height() / 2, img.channels());
    let mut data = Vec::with_capacity(w * h * c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let s = img.get(2 * x, 2 * y, ch) as u32
                    + img.get(2 * x + 1, 2 * y, ch) as u32
                    + img.get(2 * x, 2 * y + 1, ch) as u32
                    + img.get(2 * x + 1, 2 * y + 1, ch) as u32;
                data.push(((s + 2) / 4) as u8);
            }
        }
    }
    ImageBuffer::from_vec(w, h, c, data)
}

/// `sqrt(Gx^2 + Gy^2)` with 3×3 Sobel kernels and edge-replicated borders.
pub fn sobel_magnitude(img: &ImageBuffer) -> Result<FloatImage> {
    img.require_channels(1, "sobel_magnitude")?;
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return invalid(format!("image {w}x{h} is smaller than the 3x3 kernel"));
    }
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        img.get(xc, yc, 0) as f64
    };
    FloatImage::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
        let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        gx.hypot(gy)
    })
}

/// `(v - mean) / std` with population variance; all zeros when `std < 1e-12`.
pub fn normalize_channel(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else {
        values.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
}

/// Builds the normalized `(32, 28, 28, 3)` classifier input volume.
///
/// Frames must be 56×56 or 28×28; colour frames are converted to gray
/// first. Channels are intensity, Sobel magnitude, and the absolute
/// difference from the previous resampled frame (zero for the first).
pub fn build_volume(seq: &GestureSequence) -> Result<Tensor> {
    let first = &seq.frames()[0];
    let size = (first.width(), first.height());
    if size != (2 * TARGET_SIZE, 2 * TARGET_SIZE) && size != (TARGET_SIZE, TARGET_SIZE) {
        return invalid(format!("frames must be 56x56 or 28x28, got {}x{}", size.0, size.1));
    }
    let resampled = resample_temporal(seq, TARGET_FRAMES)?;

    let small: Vec<ImageBuffer> = resampled
        .frames()
        .par_iter()
        .map(|f| {
            let gray = if f.channels() == 3 { grayscale(f)? } else { f.clone() };
            if gray.width() == TARGET_SIZE {
                Ok(gray)
            } else {
                downsample_spatial(&gray, 2)
            }
        })
        .collect::<Result<_>>()?;
    let gradients: Vec<FloatImage> = small.par_iter().map(sobel_magnitude).collect::<Result<_>>()?;

    let plane = TARGET_SIZE * TARGET_SIZE;
    let mut channels = vec![Vec::with_capacity(TARGET_FRAMES * plane); VOLUME_CHANNELS];
    for (k, frame) in small.iter().enumerate() {
        channels[0].extend(frame.data().iter().map(|&v| v as f64));
        channels[1].extend_from_slice(gradients[k].data());
        match k.checked_sub(1) {
            Some(prev) => {
                channels[2].extend(frame.data().iter().zip(small[prev].data()).map(|(&a, &b)| a.abs_diff(b) as f64))
            }
            None => channels[2].extend(std::iter::repeat_n(0.0, plane)),
        }
    }
    for ch in &mut channels {
        normalize_channel(ch);
    }

    let mut data = vec![0.0; TARGET_FRAMES * plane * VOLUME_CHANNELS];
    for (i, slot) in data.chunks_exact_mut(VOLUME_CHANNELS).enumerate() {
        for (c, ch) in channels.iter().enumerate() {
            slot[c] = ch[i];
        }
    }
    Tensor::from_vec(vec![TARGET_FRAMES, TARGET_SIZE, TARGET_SIZE, VOLUME_CHANNELS], data)
}
