//! Pixel-level segmentation primitives.
//!
//! Masks use 255 for foreground (the hand) and 0 for background, so that
//! moments computed downstream weight the region of interest.

mod buffer;
mod hull;
pub mod pnm;

pub use buffer::{BinaryMask, FloatImage, ImageBuffer, Point};
pub use hull::convex_hull;

use crate::error::{invalid, Result};

/// Unweighted channel mean, rounded half up.
pub fn grayscale(src: &ImageBuffer) -> Result<ImageBuffer> {
    src.require_channels(3, "grayscale")?;
    let data = src.data().chunks_exact(3).map(|p| mean3(p[0], p[1], p[2])).collect();
    ImageBuffer::from_vec(src.width(), src.height(), 1, data)
}

#[inline]
fn mean3(r: u8, g: u8, b: u8) -> u8 {
    // floor(s/3 + 1/2) == floor((2s + 3) / 6); s <= 765 so the result fits a byte.
    let s = r as u32 + g as u32 + b as u32;
    ((2 * s + 3) / 6) as u8
}

/// `max_value` where `src > threshold` (strict), 0 elsewhere.
pub fn threshold_binary(src: &ImageBuffer, threshold: u8, max_value: u8) -> Result<BinaryMask> {
    src.require_channels(1, "threshold_binary")?;
    let data = src.data().iter().map(|&v| if v > threshold { max_value } else { 0 }).collect();
    let image = ImageBuffer::from_vec(src.width(), src.height(), 1, data)?;
    Ok(BinaryMask::from_image_unchecked(image, max_value))
}

/// Foreground mask of pixels whose color is far from `key_color`.
///
/// The per-channel absolute difference from the key color is averaged to
/// gray and thresholded; background (near the key) becomes 0.
pub fn color_distance_mask(frame: &ImageBuffer, key_color: [u8; 3], threshold: u8) -> Result<BinaryMask> {
    frame.require_channels(3, "color_distance_mask")?;
    let diff: Vec<u8> = frame
        .data()
        .chunks_exact(3)
        .map(|p| mean3(p[0].abs_diff(key_color[0]), p[1].abs_diff(key_color[1]), p[2].abs_diff(key_color[2])))
        .collect();
    let gray = ImageBuffer::from_vec(frame.width(), frame.height(), 1, diff)?;
    threshold_binary(&gray, threshold, 255)
}

/// Keeps `frame` where the mask is set and substitutes `new_bg` elsewhere.
pub fn replace_background(frame: &ImageBuffer, new_bg: &ImageBuffer, mask: &BinaryMask) -> Result<ImageBuffer> {
    if frame.channels() != new_bg.channels() {
        return invalid("frame and background channel counts differ");
    }
    if !frame.same_size(new_bg) || frame.width() != mask.width() || frame.height() != mask.height() {
        return invalid(format!(
            "dimension mismatch: frame {}x{}, background {}x{}, mask {}x{}",
            frame.width(),
            frame.height(),
            new_bg.width(),
            new_bg.height(),
            mask.width(),
            mask.height()
        ));
    }
    let c = frame.channels();
    let mut out = new_bg.clone();
    let dst = out.data_mut();
    for (i, &m) in mask.as_image().data().iter().enumerate() {
        if m != 0 {
            dst[i * c..(i + 1) * c].copy_from_slice(&frame.data()[i * c..(i + 1) * c]);
        }
    }
    Ok(out)
}

/// Thresholded absolute difference of two gray frames; 255 marks motion.
pub fn frame_difference(frame_t: &ImageBuffer, frame_prev: &ImageBuffer, threshold: u8) -> Result<BinaryMask> {
    frame_t.require_channels(1, "frame_difference")?;
    frame_prev.require_channels(1, "frame_difference")?;
    if !frame_t.same_size(frame_prev) {
        return invalid(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            frame_t.width(),
            frame_t.height(),
            frame_prev.width(),
            frame_prev.height()
        ));
    }
    let diff = frame_t.data().iter().zip(frame_prev.data()).map(|(&a, &b)| a.abs_diff(b)).collect();
    let diff = ImageBuffer::from_vec(frame_t.width(), frame_t.height(), 1, diff)?;
    threshold_binary(&diff, threshold, 255)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn px(r: u8, g: u8, b: u8) -> ImageBuffer {
        ImageBuffer::from_vec(1, 1, 3, vec![r, g, b]).unwrap()
    }

    fn gray1(v: u8) -> ImageBuffer {
        ImageBuffer::from_vec(1, 1, 1, vec![v]).unwrap()
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(grayscale(&px(10, 20, 30)).unwrap().data(), &[20]);
        assert_eq!(grayscale(&px(0, 0, 0)).unwrap().data(), &[0]);
        assert_eq!(grayscale(&px(255, 255, 254)).unwrap().data(), &[255]);
        // 1/3 rounds down, 2/3 rounds up, 1.5 would round up
        assert_eq!(grayscale(&px(1, 0, 0)).unwrap().data(), &[0]);
        assert_eq!(grayscale(&px(1, 1, 0)).unwrap().data(), &[1]);
    }

    #[test]
    fn grayscale_needs_three_channels() {
        assert!(matches!(grayscale(&gray1(3)), Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_binary(&gray1(130), 100, 255).unwrap().as_image().data(), &[255]);
        assert_eq!(threshold_binary(&gray1(100), 100, 255).unwrap().as_image().data(), &[0]);
        let img = ImageBuffer::from_fn_gray(16, 16, |x, y| (x * 16 + y) as u8).unwrap();
        for t in [1u8, 77, 200, 254] {
            let once = threshold_binary(&img, t, 255).unwrap();
            let twice = threshold_binary(once.as_image(), t, 255).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn color_mask_examples() {
        let key = [0, 200, 0];
        assert_eq!(color_distance_mask(&px(0, 200, 0), key, 10).unwrap().as_image().data(), &[0]);
        assert_eq!(color_distance_mask(&px(90, 90, 90), [0, 0, 0], 50).unwrap().as_image().data(), &[255]);
        let frame = ImageBuffer::filled(7, 5, &key).unwrap();
        assert_eq!(color_distance_mask(&frame, key, 0).unwrap().count(), 0);
    }

    #[test]
    fn replace_background_cases() {
        let frame = ImageBuffer::from_fn_rgb(6, 4, |x, y| [x as u8, y as u8, 7]).unwrap();
        let bg = ImageBuffer::filled(6, 4, &[200, 100, 50]).unwrap();
        let all = BinaryMask::filled(6, 4, true).unwrap();
        let none = BinaryMask::filled(6, 4, false).unwrap();
        assert_eq!(replace_background(&frame, &bg, &all).unwrap(), frame);
        assert_eq!(replace_background(&frame, &bg, &none).unwrap(), bg);

        let checker = BinaryMask::from_fn(6, 4, |x, y| (x + y) % 2 == 0).unwrap();
        let out = replace_background(&frame, &bg, &checker).unwrap();
        for y in 0..4 {
            for x in 0..6 {
                let expect = if (x + y) % 2 == 0 { frame.pixel(x, y) } else { bg.pixel(x, y) };
                assert_eq!(out.pixel(x, y), expect);
            }
        }

        let small = BinaryMask::filled(5, 4, true).unwrap();
        assert!(replace_background(&frame, &bg, &small).is_err());
    }

    #[test]
    fn frame_difference_cases() {
        let a = ImageBuffer::from_fn_gray(8, 8, |x, y| (x * y) as u8).unwrap();
        assert_eq!(frame_difference(&a, &a, 0).unwrap().count(), 0);

        let mut b = a.clone();
        b.set(3, 5, 0, a.get(3, 5, 0) + 200);
        let d = frame_difference(&b, &a, 50).unwrap();
        assert_eq!(d.count(), 1);
        assert!(d.is_set(3, 5));

        let mut c = a.clone();
        c.set(1, 1, 0, a.get(1, 1, 0) + 50);
        assert_eq!(frame_difference(&c, &a, 50).unwrap().count(), 0);

        let other = ImageBuffer::new(8, 7, 1).unwrap();
        assert!(frame_difference(&a, &other, 10).is_err());
    }

    fn gray_image(w: usize, h: usize) -> impl Strategy<Value = ImageBuffer> {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |d| ImageBuffer::from_vec(w, h, 1, d).unwrap())
    }

    proptest! {
        #[test]
        fn threshold_values_binary_and_monotone(img in gray_image(9, 7), t1 in any::<u8>(), t2 in any::<u8>(), max in 1u8..) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let a = threshold_binary(&img, lo, max).unwrap();
            let b = threshold_binary(&img, hi, max).unwrap();
            for (&va, &vb) in a.as_image().data().iter().zip(b.as_image().data()) {
                prop_assert!(va == 0 || va == max);
                prop_assert!(vb <= va);
            }
        }

        #[test]
        fn frame_difference_symmetric(a in gray_image(6, 5), b in gray_image(6, 5), t in any::<u8>()) {
            prop_assert_eq!(frame_difference(&a, &b, t).unwrap(), frame_difference(&b, &a, t).unwrap());
        }

        #[test]
        fn background_round_trip(
            fg in proptest::collection::vec(any::<u8>(), 5 * 4 * 3),
            bits in proptest::collection::vec(any::<bool>(), 5 * 4),
        ) {
            let frame = ImageBuffer::from_vec(5, 4, 3, fg).unwrap();
            let bg = ImageBuffer::from_fn_rgb(5, 4, |x, y| [x as u8 ^ 0x5a, y as u8, 3]).unwrap();
            let mask = BinaryMask::from_fn(5, 4, |x, y| bits[y * 5 + x]).unwrap();
            let swapped = replace_background(&frame, &bg, &mask).unwrap();
            // foreground survives untouched, so compositing the old background back restores the frame
            prop_assert_eq!(replace_background(&swapped, &frame, &mask).unwrap(), frame.clone());
            // and the substituted region is exactly the new background
            prop_assert_eq!(replace_background(&swapped, &bg, &mask.inverted()).unwrap(), bg);
        }
    }
}
