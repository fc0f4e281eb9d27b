use crate::error::{invalid, Result};

/// Row-major, channel-interleaved byte image. `channels` is 1 or 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    /// All-zero image.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::from_vec(width, height, channels, vec![0; width * height * channels])
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid(format!("image dimensions must be positive, got {width}x{height}"));
        }
        if channels != 1 && channels != 3 {
            return invalid(format!("image must have 1 or 3 channels, got {channels}"));
        }
        if data.len() != width * height * channels {
            return invalid(format!("data length {} does not match {width}x{height}x{channels}", data.len()));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Single-channel image filled from `f(x, y)`.
    pub fn from_fn_gray(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, 1, data)
    }

    /// Three-channel image filled from `f(x, y) -> [r, g, b]`.
    pub fn from_fn_rgb(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::from_vec(width, height, 3, data)
    }

    /// Image of one repeated pixel value.
    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Result<Self> {
        let data = pixel.iter().copied().cycle().take(width * height * pixel.len()).collect();
        Self::from_vec(width, height, pixel.len(), data)
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    pub fn same_size(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// All channels of the pixel at `(x, y)`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub(crate) fn require_channels(&self, channels: usize, what: &str) -> Result<()> {
        if self.channels != channels {
            return invalid(format!("{what} expects a {channels}-channel image, got {}", self.channels));
        }
        Ok(())
    }
}

/// A single-channel image whose values are exactly `0` or `max_value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    image: ImageBuffer,
    max_value: u8,
}

impl BinaryMask {
    /// Wraps an image, checking that every value is 0 or `max_value`.
    pub fn from_image(image: ImageBuffer, max_value: u8) -> Result<Self> {
        image.require_channels(1, "binary mask")?;
        if let Some(v) = image.data().iter().find(|&&v| v != 0 && v != max_value) {
            return invalid(format!("mask value {v} is neither 0 nor {max_value}"));
        }
        Ok(Self { image, max_value })
    }

    pub(crate) fn from_image_unchecked(image: ImageBuffer, max_value: u8) -> Self {
        Self { image, max_value }
    }

    /// Mask with every pixel set (or cleared).
    pub fn filled(width: usize, height: usize, set: bool) -> Result<Self> {
        let v = if set { 255 } else { 0 };
        Ok(Self { image: ImageBuffer::filled(width, height, &[v])?, max_value: 255 })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let image = ImageBuffer::from_fn_gray(width, height, |x, y| if f(x, y) { 255 } else { 0 })?;
        Ok(Self { image, max_value: 255 })
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn max_value(&self) -> u8 {
        self.max_value
    }

    pub fn as_image(&self) -> &ImageBuffer {
        &self.image
    }

    pub fn into_image(self) -> ImageBuffer {
        self.image
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.image.get(x, y, 0) != 0
    }

    /// Number of set pixels.
    pub fn count(&self) -> usize {
        self.image.data().iter().filter(|&&v| v != 0).count()
    }

    /// Swaps set and cleared pixels.
    pub fn inverted(&self) -> Self {
        let mut image = self.image.clone();
        let max = self.max_value;
        for v in image.data_mut() {
            *v = if *v == 0 { max } else { 0 };
        }
        Self { image, max_value: max }
    }
}

/// Pixel coordinate: `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

impl Point {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Single-channel real-valued image, e.g. a back-projection likelihood map or
/// a gradient magnitude image.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatImage {
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid(format!("image dimensions must be positive, got {width}x{height}"));
        }
        if data.len() != width * height {
            return invalid(format!("data length {} does not match {width}x{height}", data.len()));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    /// Byte image converted to reals, channel 0 only.
    pub fn from_gray(img: &ImageBuffer) -> Result<Self> {
        img.require_channels(1, "float conversion")?;
        Self::from_vec(img.width(), img.height(), img.data().iter().map(|&v| v as f64).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiplies every value by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|v| v * k).collect() }
    }

    /// Transposed copy (rows become columns).
    pub fn transposed(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x)).expect("non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ImageBuffer::from_vec(0, 3, 1, vec![]).is_err());
        assert!(ImageBuffer::from_vec(2, 2, 2, vec![0; 8]).is_err());
        assert!(ImageBuffer::from_vec(2, 2, 3, vec![0; 11]).is_err());
        assert!(ImageBuffer::from_vec(2, 2, 3, vec![0; 12]).is_ok());
    }

    #[test]
    fn mask_rejects_stray_values() {
        let img = ImageBuffer::from_vec(2, 1, 1, vec![0, 17]).unwrap();
        assert!(BinaryMask::from_image(img, 255).is_err());
        let img = ImageBuffer::from_vec(2, 1, 1, vec![0, 17]).unwrap();
        assert!(BinaryMask::from_image(img, 17).is_ok());
    }

    #[test]
    fn invert_is_involution() {
        let m = BinaryMask::from_fn(5, 4, |x, y| (x + y) % 3 == 0).unwrap();
        assert_eq!(m.inverted().inverted(), m);
        assert_eq!(m.count() + m.inverted().count(), 20);
    }
}
