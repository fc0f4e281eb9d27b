//! Binary PGM (`P5`) and PPM (`P6`) with maxval 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Encodes as `P5` (1 channel) or `P6` (3 channels).
pub fn encode(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn decode(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| fmt_err("missing magic"))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(fmt_err(&format!("unsupported magic {:?}", String::from_utf8_lossy(other)))),
    };
    let width = next_number(bytes, &mut pos, "width")?;
    let height = next_number(bytes, &mut pos, "height")?;
    let maxval = next_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(fmt_err(&format!("maxval must be 255, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(fmt_err("missing whitespace after maxval"));
    }
    pos += 1;
    let len = width * height * channels;
    let raster = bytes.get(pos..pos + len).ok_or_else(|| fmt_err("truncated raster"))?;
    ImageBuffer::from_vec(width, height, channels, raster.to_vec()).map_err(|e| fmt_err(&e.to_string()))
}

pub fn read(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    decode(&fs::read(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write(path: impl AsRef<Path>, img: &ImageBuffer) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(img))?;
    Ok(())
}

fn fmt_err(msg: &str) -> Error {
    Error::Format(format!("PNM: {msg}"))
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        if bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        } else if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

fn next_number(bytes: &[u8], pos: &mut usize, field: &str) -> Result<usize> {
    let tok = next_token(bytes, pos).ok_or_else(|| fmt_err(&format!("missing {field}")))?;
    std::str::from_utf8(tok).ok().and_then(|s| s.parse().ok()).ok_or_else(|| fmt_err(&format!("bad {field}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = ImageBuffer::from_vec(2, 1, 1, vec![7, 9]).unwrap();
        assert_eq!(encode(&img), b"P5\n2 1\n255\n\x07\x09");
        let rgb = ImageBuffer::from_vec(1, 1, 3, vec![1, 2, 3]).unwrap();
        assert_eq!(encode(&rgb), b"P6\n1 1\n255\n\x01\x02\x03");
    }

    #[test]
    fn raster_starting_with_whitespace_byte() {
        // first pixel value 10 is '\n'; only one separator byte may be consumed
        let img = ImageBuffer::from_vec(2, 1, 1, vec![10, 32]).unwrap();
        assert_eq!(decode(&encode(&img)).unwrap(), img);
    }

    #[test]
    fn accepts_comments() {
        let img = decode(b"P5 # comment\n1 1\n255\n\xff").unwrap();
        assert_eq!(img.data(), &[255]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decode(b"P4\n1 1\n255\n\0"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n1 1\n15\n\0"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P5\n2 2\n255\n\0"), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..6, h in 1usize..6, rgb in any::<bool>(), seed in any::<u64>()) {
            let c = if rgb { 3 } else { 1 };
            let data: Vec<u8> = (0..w * h * c).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
            let img = ImageBuffer::from_vec(w, h, c, data).unwrap();
            prop_assert_eq!(decode(&encode(&img)).unwrap(), img);
        }
    }
}
