//! Digit datasets: IDX files and a seeded synthetic generator.

pub mod idx;
pub mod synth;

use crate::error::{invalid, Result};
use crate::imaging::ImageBuffer;
use crate::neuralnet::Tensor;

pub use idx::{load_idx, read_idx_images, read_idx_labels, save_idx, write_idx_images, write_idx_labels};
pub use synth::synth_digits;

pub const DIGIT_SIZE: usize = 28;
pub const DIGIT_CLASSES: usize = 10;

/// `N` gray `28×28` images with labels `0..10`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitDataset {
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl DigitDataset {
    pub fn new(pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        let plane = DIGIT_SIZE * DIGIT_SIZE;
        if pixels.len() != labels.len() * plane {
            return invalid(format!("{} pixels do not hold {} 28x28 images", pixels.len(), labels.len()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= DIGIT_CLASSES) {
            return invalid(format!("label {l} is not a digit"));
        }
        Ok(Self { pixels, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn image_bytes(&self, i: usize) -> &[u8] {
        let plane = DIGIT_SIZE * DIGIT_SIZE;
        &self.pixels[i * plane..(i + 1) * plane]
    }

    pub fn image(&self, i: usize) -> ImageBuffer {
        ImageBuffer::from_vec(DIGIT_SIZE, DIGIT_SIZE, 1, self.image_bytes(i).to_vec()).expect("28x28 plane")
    }

    /// Samples `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let plane = DIGIT_SIZE * DIGIT_SIZE;
        Self {
            pixels: self.pixels[range.start * plane..range.end * plane].to_vec(),
            labels: self.labels[range].to_vec(),
        }
    }

    /// Images as `28×28×1` tensors scaled to `[0, 1]`.
    pub fn unit_tensors(&self) -> Vec<Tensor> {
        (0..self.len())
            .map(|i| {
                let data = self.image_bytes(i).iter().map(|&v| v as f64 / 255.0).collect();
                Tensor::from_vec(vec![DIGIT_SIZE, DIGIT_SIZE, 1], data).expect("28x28 plane")
            })
            .collect()
    }

    /// Images as `28×28×1` tensors, each shifted and scaled to zero mean
    /// and unit variance.
    pub fn standardized_tensors(&self) -> Vec<Tensor> {
        let mut out = self.unit_tensors();
        for t in &mut out {
            crate::preprocess::normalize_channel(t.data_mut());
        }
        out
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize).collect()
    }
}
