//! Big-endian IDX files (`0x00000803` images, `0x00000801` labels).

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use super::{DigitDataset, DIGIT_SIZE};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn field<T>(r: std::io::Result<T>, name: &str) -> Result<T> {
    r.map_err(|_| Error::Format(format!("IDX: truncated before {name}")))
}

/// Parses an image file into `(count, rows, cols, pixels)`.
pub fn read_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut cur = Cursor::new(bytes);
    let magic = field(cur.read_u32::<BigEndian>(), "magic")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!("IDX: image magic is {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let n = field(cur.read_u32::<BigEndian>(), "image count")? as usize;
    let rows = field(cur.read_u32::<BigEndian>(), "row count")? as usize;
    let cols = field(cur.read_u32::<BigEndian>(), "column count")? as usize;
    let mut pixels = vec![0u8; n * rows * cols];
    field(cur.read_exact(&mut pixels), "pixel data")?;
    Ok((n, rows, cols, pixels))
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    let magic = field(cur.read_u32::<BigEndian>(), "magic")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!("IDX: label magic is {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let n = field(cur.read_u32::<BigEndian>(), "label count")? as usize;
    let mut labels = vec![0u8; n];
    field(cur.read_exact(&mut labels), "label data")?;
    Ok(labels)
}

pub fn write_idx_images(n: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.write_u32::<BigEndian>(v).expect("vec write");
    }
    out.extend_from_slice(pixels);
    out
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABELS_MAGIC).expect("vec write");
    out.write_u32::<BigEndian>(labels.len() as u32).expect("vec write");
    out.extend_from_slice(labels);
    out
}

/// Parses an image/label pair into a digit dataset.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<DigitDataset> {
    let (n, rows, cols, pixels) = read_idx_images(images)?;
    if (rows, cols) != (DIGIT_SIZE, DIGIT_SIZE) {
        return Err(Error::Format(format!("IDX: images are {rows}x{cols}, expected 28x28")));
    }
    let labels = read_idx_labels(labels)?;
    if labels.len() != n {
        return Err(Error::Format(format!("IDX: {n} images but {} labels", labels.len())));
    }
    DigitDataset::new(pixels, labels).map_err(|e| Error::Format(format!("IDX: {e}")))
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<DigitDataset> {
    parse_idx(&fs::read(images_path)?, &fs::read(labels_path)?)
}

pub fn save_idx(ds: &DigitDataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    fs::write(images_path, write_idx_images(ds.len(), DIGIT_SIZE, DIGIT_SIZE, ds.pixels()))?;
    fs::write(labels_path, write_idx_labels(ds.labels()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// One-sample files built byte by byte from the format definition.
    fn minimal() -> (Vec<u8>, Vec<u8>) {
        let mut img = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 28, 0, 0, 0, 28];
        img.extend((0..784).map(|i| (i % 251) as u8));
        let lab = vec![0, 0, 8, 1, 0, 0, 0, 1, 7];
        (img, lab)
    }

    #[test]
    fn parses_minimal_files() {
        let (img, lab) = minimal();
        let ds = parse_idx(&img, &lab).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels(), &[7]);
        assert_eq!(ds.image_bytes(0)[250], 250);
        assert_eq!(ds.image_bytes(0)[251], 0);
    }

    #[test]
    fn wrong_magic() {
        let (mut img, lab) = minimal();
        img[3] = 2;
        let err = parse_idx(&img, &lab).unwrap_err().to_string();
        assert!(err.contains("magic"), "{err}");
    }

    #[test]
    fn count_mismatch() {
        let mut img = write_idx_images(2, 28, 28, &[0; 2 * 784]);
        let lab = write_idx_labels(&[1, 2, 3]);
        let err = parse_idx(&img, &lab).unwrap_err().to_string();
        assert!(err.contains("2 images but 3 labels"), "{err}");
        img.truncate(100);
        assert!(parse_idx(&img, &lab).unwrap_err().to_string().contains("pixel data"));
    }

    #[test]
    fn rejects_other_sizes() {
        let img = write_idx_images(1, 27, 28, &[0; 27 * 28]);
        assert!(matches!(parse_idx(&img, &write_idx_labels(&[0])), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip(labels in proptest::collection::vec(0u8..10, 0..5), seed in any::<u8>()) {
            let pixels: Vec<u8> = (0..labels.len() * 784).map(|i| (i as u8).wrapping_mul(seed)).collect();
            let ds = DigitDataset::new(pixels, labels).unwrap();
            let img = write_idx_images(ds.len(), 28, 28, ds.pixels());
            let lab = write_idx_labels(ds.labels());
            prop_assert_eq!(parse_idx(&img, &lab).unwrap(), ds);
        }
    }
}
