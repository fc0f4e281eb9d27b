//! Seeded synthetic digits.
//!
//! Each class is a fixed stroke skeleton in the unit square. Samples get a
//! random scale, rotation, shear, offset, stroke width and brightness, plus
//! pixel noise, and are rendered anti-aliased onto a 28×28 canvas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DigitDataset, DIGIT_CLASSES, DIGIT_SIZE};

type Stroke = &'static [(f64, f64)];

const ZERO: &[Stroke] = &[&[
    (0.5, 0.0),
    (0.85, 0.15),
    (1.0, 0.5),
    (0.85, 0.85),
    (0.5, 1.0),
    (0.15, 0.85),
    (0.0, 0.5),
    (0.15, 0.15),
    (0.5, 0.0),
]];
const ONE: &[Stroke] = &[&[(0.25, 0.25), (0.55, 0.0), (0.55, 1.0)]];
const TWO: &[Stroke] = &[&[(0.0, 0.15), (0.4, 0.0), (1.0, 0.15), (1.0, 0.45), (0.0, 1.0), (1.0, 1.0)]];
const THREE: &[Stroke] = &[&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], &[(0.3, 0.5), (1.0, 0.5)]];
const FOUR: &[Stroke] = &[&[(0.75, 1.0), (0.75, 0.0), (0.0, 0.65), (1.0, 0.65)]];
const FIVE: &[Stroke] = &[&[(1.0, 0.0), (0.05, 0.0), (0.0, 0.45), (0.8, 0.45), (1.0, 0.7), (0.8, 1.0), (0.0, 1.0)]];
const SIX: &[Stroke] = &[&[(0.9, 0.0), (0.1, 0.4), (0.0, 1.0), (1.0, 1.0), (1.0, 0.55), (0.0, 0.55)]];
const SEVEN: &[Stroke] = &[&[(0.0, 0.0), (1.0, 0.0), (0.35, 1.0)]];
const EIGHT: &[Stroke] = &[&[(0.1, 0.0), (0.9, 0.0), (0.9, 1.0), (0.1, 1.0), (0.1, 0.0)], &[(0.1, 0.5), (0.9, 0.5)]];
const NINE: &[Stroke] = &[&[(1.0, 0.45), (0.0, 0.45), (0.0, 0.0), (1.0, 0.0), (1.0, 0.45), (0.6, 1.0)]];

const GLYPHS: [&[Stroke]; DIGIT_CLASSES] = [ZERO, ONE, TWO, THREE, FOUR, FIVE, SIX, SEVEN, EIGHT, NINE];

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Renders one sample of `digit` with randomized geometry.
pub fn render_digit(digit: usize, rng: &mut impl Rng) -> Vec<u8> {
    let size = DIGIT_SIZE as f64;
    let height = rng.random_range(15.0..20.0);
    let width = height * rng.random_range(0.55..0.8);
    let angle: f64 = rng.random_range(-0.2..0.2);
    let shear = rng.random_range(-0.2..0.2);
    let cx = size / 2.0 + rng.random_range(-2.5..2.5);
    let cy = size / 2.0 + rng.random_range(-2.5..2.5);
    let half_width = rng.random_range(0.9..1.6);
    let ink = rng.random_range(170.0..255.0);
    let (sin, cos) = angle.sin_cos();

    let place = |(u, v): (f64, f64)| {
        let x = (u - 0.5) * width + shear * (v - 0.5) * height;
        let y = (v - 0.5) * height;
        (cx + x * cos - y * sin, cy + x * sin + y * cos)
    };
    let segments: Vec<((f64, f64), (f64, f64))> =
        GLYPHS[digit].iter().flat_map(|stroke| stroke.windows(2).map(|w| (place(w[0]), place(w[1])))).collect();

    let mut out = Vec::with_capacity(DIGIT_SIZE * DIGIT_SIZE);
    for y in 0..DIGIT_SIZE {
        for x in 0..DIGIT_SIZE {
            let p = (x as f64, y as f64);
            let d = segments.iter().map(|&(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min);
            let coverage = (half_width + 0.5 - d).clamp(0.0, 1.0);
            let noise = rng.random_range(0.0..24.0);
            out.push((coverage * ink + noise).round().min(255.0) as u8);
        }
    }
    out
}

/// `n` labelled samples; labels are drawn uniformly.
pub fn synth_digits(n: usize, seed: u64) -> DigitDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = Vec::with_capacity(n * DIGIT_SIZE * DIGIT_SIZE);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let d = rng.random_range(0..DIGIT_CLASSES);
        pixels.extend(render_digit(d, &mut rng));
        labels.push(d as u8);
    }
    DigitDataset::new(pixels, labels).expect("generator emits valid samples")
}
