//! Moment-based CamShift tracking.
//!
//! A histogram of the target is built once from a region of interest in the
//! first frame. Every frame is back-projected through it into a likelihood
//! map, mean shift moves the search window to the local mode, and the window
//! is then resized from the zeroth moment of the map under it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::imaging::{FloatImage, ImageBuffer};

/// Search window: top-left corner and extent, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub x: i64,
    pub y: i64,
    pub w: usize,
    pub h: usize,
}

impl Window {
    pub fn new(x: i64, y: i64, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    /// Pixel-coordinate center, `(x + (w-1)/2, y + (h-1)/2)`.
    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + (self.w as f64 - 1.0) / 2.0, self.y as f64 + (self.h as f64 - 1.0) / 2.0)
    }

    /// Half-open pixel ranges of the window clipped to a `width`×`height`
    /// image, or `None` when the two do not overlap.
    pub fn clip(&self, width: usize, height: usize) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let x0 = self.x.max(0);
        let y0 = self.y.max(0);
        let x1 = (self.x + self.w as i64).min(width as i64);
        let y1 = (self.y + self.h as i64).min(height as i64);
        (x0 < x1 && y0 < y1).then(|| (x0 as usize..x1 as usize, y0 as usize..y1 as usize))
    }

    /// Same-sized window whose center is as close to `(cx, cy)` as the pixel
    /// grid and the image bounds allow.
    fn recentered(&self, cx: f64, cy: f64, width: usize, height: usize) -> Window {
        let x = round_half_up(cx - (self.w as f64 - 1.0) / 2.0);
        let y = round_half_up(cy - (self.h as f64 - 1.0) / 2.0);
        Window { x: clamp_origin(x, self.w, width), y: clamp_origin(y, self.h, height), w: self.w, h: self.h }
    }
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

fn clamp_origin(v: i64, extent: usize, limit: usize) -> i64 {
    if extent >= limit {
        0
    } else {
        v.clamp(0, (limit - extent) as i64)
    }
}

/// Raw moments `M_ij` and central moments `mu_pq` up to total order 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    /// `raw[i][j] = M_ij`, zero where `i + j > 2`.
    pub raw: [[f64; 3]; 3],
    /// `central[p][q] = mu_pq`, zero where `p + q > 2`.
    pub central: [[f64; 3]; 3],
}

impl MomentSet {
    pub fn m00(&self) -> f64 {
        self.raw[0][0]
    }

    pub fn centroid(&self) -> (f64, f64) {
        (self.raw[1][0] / self.raw[0][0], self.raw[0][1] / self.raw[0][0])
    }
}

fn check_order(i: u32, j: u32) -> Result<()> {
    if i > 2 || j > 2 || i + j > 2 {
        return invalid(format!("moment order ({i}, {j}) unsupported; need i + j <= 2"));
    }
    Ok(())
}

/// `M_ij = sum_x sum_y x^i y^j I(x, y)`, optionally restricted to a window.
pub fn raw_moment(img: &FloatImage, i: u32, j: u32, window: Option<&Window>) -> Result<f64> {
    check_order(i, j)?;
    Ok(raw_moments(img, window)[i as usize][j as usize])
}

fn raw_moments(img: &FloatImage, window: Option<&Window>) -> [[f64; 3]; 3] {
    let (xs, ys) = match window {
        Some(w) => match w.clip(img.width(), img.height()) {
            Some(r) => r,
            None => return [[0.0; 3]; 3],
        },
        None => (0..img.width(), 0..img.height()),
    };
    let mut m = [[0.0; 3]; 3];
    for y in ys {
        let fy = y as f64;
        // per-row sums keep the x-weighted terms exact for integer images
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for x in xs.clone() {
            let v = img.get(x, y);
            let fx = x as f64;
            s0 += v;
            s1 += fx * v;
            s2 += fx * fx * v;
        }
        m[0][0] += s0;
        m[1][0] += s1;
        m[2][0] += s2;
        m[0][1] += fy * s0;
        m[1][1] += fy * s1;
        m[0][2] += fy * fy * s0;
    }
    m
}

/// All moments of the image (or a window of it).
pub fn moments(img: &FloatImage, window: Option<&Window>) -> Result<MomentSet> {
    let raw = raw_moments(img, window);
    if raw[0][0] <= 0.0 {
        return Err(Error::EmptyRegion("image mass M00 is zero".into()));
    }
    let (xb, yb) = (raw[1][0] / raw[0][0], raw[0][1] / raw[0][0]);
    let mut central = [[0.0; 3]; 3];
    // binomial expansion of (x - xb)^p (y - yb)^q
    for p in 0..3usize {
        for q in 0..3 - p {
            let mut acc = 0.0;
            for k in 0..=p {
                for l in 0..=q {
                    acc +=
                        binom(p, k) * binom(q, l) * (-xb).powi((p - k) as i32) * (-yb).powi((q - l) as i32) * raw[k][l];
                }
            }
            central[p][q] = acc;
        }
    }
    Ok(MomentSet { raw, central })
}

fn binom(n: usize, k: usize) -> f64 {
    match (n, k) {
        (2, 1) => 2.0,
        _ => 1.0,
    }
}

/// `mu_pq` about the centroid.
pub fn central_moment(img: &FloatImage, p: u32, q: u32, window: Option<&Window>) -> Result<f64> {
    check_order(p, q)?;
    Ok(moments(img, window)?.central[p as usize][q as usize])
}

/// `(M10 / M00, M01 / M00)`.
pub fn centroid(img: &FloatImage, window: Option<&Window>) -> Result<(f64, f64)> {
    let raw = raw_moments(img, window);
    if raw[0][0] <= 0.0 {
        return Err(Error::EmptyRegion("image mass M00 is zero".into()));
    }
    Ok((raw[1][0] / raw[0][0], raw[0][1] / raw[0][0]))
}

/// Intensity histogram normalized so the fullest bin weighs 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bins: Vec<f64>,
}

impl Histogram {
    pub fn from_weights(bins: Vec<f64>) -> Result<Self> {
        if bins.is_empty() || bins.len() > 256 {
            return invalid(format!("histogram needs 1..=256 bins, got {}", bins.len()));
        }
        if bins.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return invalid("histogram weights must lie in [0, 1]");
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    #[inline]
    pub fn bin_of(&self, v: u8) -> usize {
        v as usize * self.bins.len() / 256
    }

    #[inline]
    pub fn weight(&self, v: u8) -> f64 {
        self.bins[self.bin_of(v)]
    }
}

pub fn build_histogram(img: &ImageBuffer, roi: &Window, bin_count: usize) -> Result<Histogram> {
    img.require_channels(1, "build_histogram")?;
    if bin_count == 0 || bin_count > 256 {
        return invalid(format!("bin_count must be in 1..=256, got {bin_count}"));
    }
    let (xs, ys) = roi
        .clip(img.width(), img.height())
        .ok_or_else(|| Error::EmptyRegion("ROI does not intersect the image".into()))?;
    let mut counts = vec![0u64; bin_count];
    for y in ys {
        for x in xs.clone() {
            counts[img.get(x, y, 0) as usize * bin_count / 256] += 1;
        }
    }
    let max = *counts.iter().max().expect("bin_count >= 1") as f64;
    Ok(Histogram { bins: counts.iter().map(|&c| c as f64 / max).collect() })
}

/// Replaces every pixel with its bin's histogram weight.
pub fn back_project(img: &ImageBuffer, hist: &Histogram) -> Result<FloatImage> {
    img.require_channels(1, "back_project")?;
    FloatImage::from_vec(img.width(), img.height(), img.data().iter().map(|&v| hist.weight(v)).collect())
}

/// Outcome of one mean-shift or CamShift search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub window: Window,
    pub centroid: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    pub lost: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftParams {
    pub max_iter: usize,
    pub eps: f64,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        Self { max_iter: 20, eps: 1.0 }
    }
}

fn validate_search(prob: &FloatImage, start: &Window, params: &MeanShiftParams) -> Result<()> {
    if params.max_iter == 0 {
        return invalid("max_iter must be at least 1");
    }
    if !(params.eps > 0.0) {
        return invalid("eps must be positive");
    }
    if start.w == 0 || start.h == 0 || start.clip(prob.width(), prob.height()).is_none() {
        return invalid(format!("window {start:?} does not intersect the image"));
    }
    Ok(())
}

/// Moves a fixed-size window onto the mode of `prob`.
///
/// Each iteration recenters the window on the centroid of the mass under
/// it. The search stops once the window moves by less than `eps` pixels
/// (`converged = true`) or after `max_iter` iterations.
pub fn mean_shift(prob: &FloatImage, start: Window, params: &MeanShiftParams) -> Result<TrackState> {
    validate_search(prob, &start, params)?;
    let mut window = start;
    let mut centroid = window.center();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let m = raw_moments(prob, Some(&window));
        if m[0][0] <= 0.0 {
            return Err(Error::LostTrack(format!("no probability mass under window {window:?}")));
        }
        centroid = (m[1][0] / m[0][0], m[0][1] / m[0][0]);
        let next = window.recentered(centroid.0, centroid.1, prob.width(), prob.height());
        let dx = (next.x - window.x) as f64;
        let dy = (next.y - window.y) as f64;
        window = next;
        if dx.hypot(dy) < params.eps {
            converged = true;
            break;
        }
    }
    Ok(TrackState { window, centroid, iterations, converged, lost: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamShiftParams {
    pub search: MeanShiftParams,
    /// Nominal peak of the likelihood map; back-projected maps peak at 1.
    pub p_max: f64,
}

impl Default for CamShiftParams {
    fn default() -> Self {
        Self { search: MeanShiftParams::default(), p_max: 1.0 }
    }
}

/// Side length `2 * sqrt(M00 / p_max)` of the adapted search window.
pub fn adapted_size(m00: f64, p_max: f64) -> f64 {
    2.0 * (m00 / p_max).sqrt()
}

/// Mean shift followed by window-size adaptation.
///
/// The returned state's window is centered on the converged centroid with
/// side `s = 2 * sqrt(M00 / p_max)` (shaped to the input aspect ratio) and
/// clamped to `[4, image extent]`.
pub fn camshift_step(prob: &FloatImage, window: Window, params: &CamShiftParams) -> Result<TrackState> {
    if !(params.p_max > 0.0) {
        return invalid("p_max must be positive");
    }
    let mut state = mean_shift(prob, window, &params.search)?;
    let m00 = raw_moments(prob, Some(&state.window))[0][0];
    let s = adapted_size(m00, params.p_max);
    let aspect = (window.w as f64 / window.h as f64).sqrt();
    let side = |v: f64, extent: usize| (round_half_up(v).max(0) as usize).max(4).min(extent);
    let resized = Window { w: side(s * aspect, prob.width()), h: side(s / aspect, prob.height()), ..state.window };
    state.window = resized.recentered(state.centroid.0, state.centroid.1, prob.width(), prob.height());
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub bin_count: usize,
    pub camshift: CamShiftParams,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self { bin_count: 32, camshift: CamShiftParams::default() }
    }
}

/// Runs CamShift over a gray frame sequence, one state per frame.
///
/// Frames where the window holds no mass are flagged `lost`; the previous
/// window is reused for the next frame.
pub fn track_sequence(frames: &[ImageBuffer], initial_roi: Window, config: &TrackConfig) -> Result<Vec<TrackState>> {
    let first = frames.first().ok_or_else(|| Error::InvalidInput("no frames to track".into()))?;
    if let Some(f) = frames.iter().find(|f| !f.same_size(first) || f.channels() != 1) {
        return invalid(format!(
            "all frames must be {}x{} gray, found {}x{}x{}",
            first.width(),
            first.height(),
            f.width(),
            f.height(),
            f.channels()
        ));
    }
    let hist = build_histogram(first, &initial_roi, config.bin_count)?;
    let mut window = initial_roi;
    let mut centroid = initial_roi.center();
    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        let prob = back_project(frame, &hist)?;
        match camshift_step(&prob, window, &config.camshift) {
            Ok(state) => {
                window = state.window;
                centroid = state.centroid;
                out.push(state);
            }
            Err(Error::LostTrack(_)) => {
                out.push(TrackState { window, centroid, iterations: 0, converged: false, lost: true });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// CSV rows `frame,cx,cy,wx,wy,ww,wh,converged,lost`.
pub fn tracks_to_csv(states: &[TrackState]) -> String {
    let mut s = String::from("frame,cx,cy,wx,wy,ww,wh,converged,lost\n");
    for (i, t) in states.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{:.3},{:.3},{},{},{},{},{},{}",
            t.centroid.0, t.centroid.1, t.window.x, t.window.y, t.window.w, t.window.h, t.converged as u8, t.lost as u8
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(w: usize, h: usize, v: f64) -> FloatImage {
        FloatImage::from_fn(w, h, |_, _| v).unwrap()
    }

    fn single(w: usize, h: usize, px: usize, py: usize, v: f64) -> FloatImage {
        FloatImage::from_fn(w, h, |x, y| if (x, y) == (px, py) { v } else { 0.0 }).unwrap()
    }

    /// Independent double loop straight from the definitions.
    fn oracle_raw(img: &FloatImage, i: i32, j: i32) -> f64 {
        let mut s = 0.0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                s += (x as f64).powi(i) * (y as f64).powi(j) * img.get(x, y);
            }
        }
        s
    }

    fn oracle_central(img: &FloatImage, p: i32, q: i32) -> f64 {
        let m00 = oracle_raw(img, 0, 0);
        let xb = oracle_raw(img, 1, 0) / m00;
        let yb = oracle_raw(img, 0, 1) / m00;
        let mut s = 0.0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                s += (x as f64 - xb).powi(p) * (y as f64 - yb).powi(q) * img.get(x, y);
            }
        }
        s
    }

    #[test]
    fn raw_moment_examples() {
        let u = uniform(3, 3, 1.0);
        assert_eq!(raw_moment(&u, 0, 0, None).unwrap(), 9.0);
        assert_eq!(raw_moment(&u, 1, 0, None).unwrap(), 9.0);
        assert_eq!(raw_moment(&u, 0, 1, None).unwrap(), 9.0);

        let s = single(4, 3, 2, 1, 5.0);
        assert_eq!(raw_moment(&s, 0, 0, None).unwrap(), 5.0);
        assert_eq!(raw_moment(&s, 1, 0, None).unwrap(), 10.0);
        assert_eq!(raw_moment(&s, 0, 1, None).unwrap(), 5.0);

        assert!(matches!(raw_moment(&u, 2, 1, None), Err(Error::InvalidInput(_))));
        assert!(matches!(raw_moment(&u, 3, 0, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn raw_moment_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = FloatImage::from_fn(8, 8, |_, _| 0.0).unwrap();
        let data: Vec<f64> = (0..64).map(|_| rng.random::<u8>() as f64).collect();
        let img = FloatImage::from_vec(img.width(), img.height(), data).unwrap();
        for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            assert_eq!(raw_moment(&img, i, j, None).unwrap(), oracle_raw(&img, i as i32, j as i32));
        }
    }

    #[test]
    fn windowed_moment_matches_cropped_image() {
        let img = FloatImage::from_fn(10, 9, |x, y| ((x * 7 + y * 3) % 11) as f64).unwrap();
        let w = Window::new(2, 3, 4, 5);
        let manual: f64 = (3..8).flat_map(|y| (2..6).map(move |x| (x, y))).map(|(x, y)| x as f64 * img.get(x, y)).sum();
        assert_eq!(raw_moment(&img, 1, 0, Some(&w)).unwrap(), manual);
        let outside = Window::new(20, 20, 3, 3);
        assert_eq!(raw_moment(&img, 0, 0, Some(&outside)).unwrap(), 0.0);
    }

    #[test]
    fn central_moment_examples() {
        let img = FloatImage::from_fn(5, 1, |x, _| if x == 0 || x == 4 { 3.0 } else { 0.0 }).unwrap();
        assert_eq!(central_moment(&img, 0, 0, None).unwrap(), raw_moment(&img, 0, 0, None).unwrap());
        assert!(central_moment(&img, 1, 0, None).unwrap().abs() < 1e-12);
        assert!((central_moment(&img, 2, 0, None).unwrap() - 8.0 * 3.0).abs() < 1e-12);
        let empty = uniform(3, 3, 0.0);
        assert!(matches!(central_moment(&empty, 1, 1, None), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&uniform(3, 3, 1.0), None).unwrap(), (1.0, 1.0));
        assert_eq!(centroid(&single(4, 3, 2, 1, 9.0), None).unwrap(), (2.0, 1.0));
        assert!(matches!(centroid(&uniform(3, 3, 0.0), None), Err(Error::EmptyRegion(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> =
            (0..20 * 15).map(|_| if rng.random_bool(0.1) { rng.random_range(1..256) as f64 } else { 0.0 }).collect();
        let img = FloatImage::from_vec(20, 15, data).unwrap();
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for y in 0..15 {
            for x in 0..20 {
                let v = img.get(x, y);
                sx += x as f64 * v;
                sy += y as f64 * v;
                sw += v;
            }
        }
        let (cx, cy) = centroid(&img, None).unwrap();
        assert!((cx - sx / sw).abs() < 1e-12 && (cy - sy / sw).abs() < 1e-12);
    }

    #[test]
    fn histogram_examples() {
        let img = ImageBuffer::filled(6, 6, &[77]).unwrap();
        let h = build_histogram(&img, &Window::new(1, 1, 3, 3), 32).unwrap();
        assert_eq!(h.bins().iter().filter(|&&w| w == 1.0).count(), 1);
        assert_eq!(h.bins().iter().filter(|&&w| w == 0.0).count(), 31);

        let img = ImageBuffer::from_vec(4, 1, 1, vec![10, 10, 200, 10]).unwrap();
        let h = build_histogram(&img, &Window::new(0, 0, 4, 1), 256).unwrap();
        assert_eq!(h.bins()[10], 1.0);
        assert_eq!(h.bins()[200], 1.0 / 3.0);

        let h1 = build_histogram(&img, &Window::new(0, 0, 4, 1), 1).unwrap();
        assert_eq!(h1.bins(), &[1.0]);

        assert!(matches!(build_histogram(&img, &Window::new(9, 9, 2, 2), 8), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn back_projection_examples() {
        let img = ImageBuffer::from_fn_gray(8, 8, |x, _| if x < 4 { 50 } else { 220 }).unwrap();
        let h = build_histogram(&img, &Window::new(0, 0, 4, 8), 32).unwrap();
        let p = back_project(&img, &h).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(p.get(x, y), if x < 4 { 1.0 } else { 0.0 });
            }
        }

        let img = ImageBuffer::from_vec(4, 1, 1, vec![10, 10, 200, 10]).unwrap();
        let h = build_histogram(&img, &Window::new(0, 0, 4, 1), 256).unwrap();
        assert_eq!(back_project(&img, &h).unwrap().get(2, 0), 1.0 / 3.0);

        let zero = Histogram::from_weights(vec![0.0; 16]).unwrap();
        assert!(back_project(&img, &zero).unwrap().data().iter().all(|&v| v == 0.0));
    }

    fn square_blob(w: usize, h: usize, x0: usize, y0: usize, side: usize, v: f64) -> FloatImage {
        FloatImage::from_fn(
            w,
            h,
            |x, y| if (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y) { v } else { 0.0 },
        )
        .unwrap()
    }

    #[test]
    fn mean_shift_fixed_point() {
        let prob = square_blob(40, 40, 10, 10, 10, 1.0);
        let s = mean_shift(&prob, Window::new(8, 8, 14, 14), &MeanShiftParams { max_iter: 10, eps: 0.5 }).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.window, Window::new(8, 8, 14, 14));
        assert_eq!(s.centroid, (14.5, 14.5));
    }

    #[test]
    fn mean_shift_recovers_offset_start() {
        let prob = square_blob(60, 40, 20, 15, 10, 1.0);
        let (bx, by) = centroid(&prob, None).unwrap();
        let start = Window::new(20 - 2 + 5, 15 - 2, 14, 14);
        let s = mean_shift(&prob, start, &MeanShiftParams { max_iter: 20, eps: 0.5 }).unwrap();
        assert!(s.converged);
        let (cx, cy) = s.window.center();
        assert!((cx - bx).hypot(cy - by) <= 1.0, "center ({cx}, {cy}) vs blob ({bx}, {by})");
    }

    #[test]
    fn mean_shift_empty_map_is_lost() {
        let prob = uniform(10, 10, 0.0);
        assert!(matches!(
            mean_shift(&prob, Window::new(0, 0, 4, 4), &MeanShiftParams::default()),
            Err(Error::LostTrack(_))
        ));
        assert!(mean_shift(&prob, Window::new(0, 0, 4, 4), &MeanShiftParams { max_iter: 0, eps: 1.0 }).is_err());
        assert!(mean_shift(&prob, Window::new(30, 0, 4, 4), &MeanShiftParams::default()).is_err());
    }

    #[test]
    fn camshift_size_rule() {
        // 8x8 block of ones: M00 = 64, s = 16
        let prob = square_blob(64, 64, 20, 20, 8, 1.0);
        let s = camshift_step(&prob, Window::new(18, 18, 12, 12), &CamShiftParams::default()).unwrap();
        assert_eq!((s.window.w, s.window.h), (16, 16));
        assert_eq!(adapted_size(64.0, 1.0), 16.0);

        // weights 0.25 -> 1.0 doubles the side
        let quarter = square_blob(64, 64, 20, 20, 8, 0.25);
        let sq = camshift_step(&quarter, Window::new(18, 18, 12, 12), &CamShiftParams::default()).unwrap();
        assert_eq!(sq.window.w * 2, s.window.w);

        // tiny blob clamps to 4
        let dot = single(32, 32, 10, 10, 1.0);
        let sd = camshift_step(&dot, Window::new(8, 8, 5, 5), &CamShiftParams::default()).unwrap();
        assert_eq!((sd.window.w, sd.window.h), (4, 4));
    }

    #[test]
    fn camshift_preserves_aspect() {
        let prob = square_blob(80, 80, 30, 30, 12, 1.0);
        // 2:1 start window; s = 24, w = 24*sqrt(2), h = 24/sqrt(2)
        let s = camshift_step(&prob, Window::new(24, 30, 24, 12), &CamShiftParams::default()).unwrap();
        assert_eq!((s.window.w, s.window.h), (34, 17));
    }

    fn disc_frame(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> ImageBuffer {
        ImageBuffer::from_fn_gray(w, h, |x, y| {
            if (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r {
                200
            } else {
                20
            }
        })
        .unwrap()
    }

    #[test]
    fn static_blob_track() {
        let frames: Vec<_> = (0..10).map(|_| disc_frame(64, 64, 30.0, 28.0, 8.0)).collect();
        let states = track_sequence(&frames, Window::new(25, 23, 11, 11), &TrackConfig::default()).unwrap();
        assert_eq!(states.len(), 10);
        let c0 = states[0].centroid;
        for s in &states {
            assert!(s.converged && !s.lost);
            assert!((s.centroid.0 - c0.0).hypot(s.centroid.1 - c0.1) < 1.0);
        }
    }

    #[test]
    fn translating_blob_track() {
        let frames: Vec<_> = (0..20).map(|k| disc_frame(120, 60, 20.0 + 2.0 * k as f64, 30.0, 7.0)).collect();
        let states = track_sequence(&frames, Window::new(16, 26, 9, 9), &TrackConfig::default()).unwrap();
        for pair in states.windows(2) {
            assert!(pair[1].centroid.0 > pair[0].centroid.0);
        }
        let last = states.last().unwrap();
        assert!((last.centroid.0 - 58.0).abs() <= 2.0);
    }

    #[test]
    fn dropout_frame_is_flagged_and_recovered() {
        let mut frames: Vec<_> = (0..6).map(|_| disc_frame(64, 64, 30.0, 30.0, 8.0)).collect();
        frames[3] = ImageBuffer::new(64, 64, 1).unwrap();
        let states = track_sequence(&frames, Window::new(25, 25, 11, 11), &TrackConfig::default()).unwrap();
        assert!(states[3].lost);
        assert_eq!(states[3].window, states[2].window);
        assert!(!states[4].lost && !states[5].lost);
        assert!((states[5].centroid.0 - states[0].centroid.0).abs() < 1.0);
        assert!(track_sequence(&[], Window::new(0, 0, 2, 2), &TrackConfig::default()).is_err());
    }

    #[test]
    fn csv_layout() {
        let st = TrackState {
            window: Window::new(1, 2, 3, 4),
            centroid: (1.23456, 7.0),
            iterations: 2,
            converged: true,
            lost: false,
        };
        assert_eq!(tracks_to_csv(&[st]), "frame,cx,cy,wx,wy,ww,wh,converged,lost\n0,1.235,7.000,1,2,3,4,1,0\n");
    }

    fn int_image() -> impl Strategy<Value = FloatImage> {
        (8usize..=32, 8usize..=32).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u8..=255, w * h)
                .prop_map(move |d| FloatImage::from_vec(w, h, d.into_iter().map(f64::from).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn moments_match_oracle(img in int_image()) {
            prop_assume!(oracle_raw(&img, 0, 0) > 0.0);
            let m = moments(&img, None).unwrap();
            let ext = img.width().max(img.height()) as f64;
            for (i, j) in [(0usize, 0usize), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                prop_assert_eq!(m.raw[i][j], oracle_raw(&img, i as i32, j as i32));
                let o = oracle_central(&img, i as i32, j as i32);
                prop_assert!((m.central[i][j] - o).abs() <= 1e-9 * m.m00() * ext * ext);
            }
            prop_assert_eq!(m.central[0][0], m.m00());
            prop_assert!(m.central[1][0].abs() <= 1e-9 * m.m00() * ext);
            prop_assert!(m.central[0][1].abs() <= 1e-9 * m.m00() * ext);
        }

        #[test]
        fn centroid_translation_equivariant(
            bits in proptest::collection::vec(0u8..4, 10 * 10), dx in 0usize..6, dy in 0usize..6,
        ) {
            prop_assume!(bits.iter().any(|&b| b > 0));
            let a = FloatImage::from_fn(16, 16, |x, y| if x < 10 && y < 10 { bits[y * 10 + x] as f64 } else { 0.0 }).unwrap();
            let b = FloatImage::from_fn(16, 16, |x, y| {
                if x >= dx && y >= dy && x - dx < 10 && y - dy < 10 { bits[(y - dy) * 10 + x - dx] as f64 } else { 0.0 }
            }).unwrap();
            let (ax, ay) = centroid(&a, None).unwrap();
            let (bx, by) = centroid(&b, None).unwrap();
            prop_assert!((bx - ax - dx as f64).abs() < 1e-9 && (by - ay - dy as f64).abs() < 1e-9);
        }

        #[test]
        fn back_projection_range(data in proptest::collection::vec(any::<u8>(), 12 * 9), bins in 1usize..=64) {
            let img = ImageBuffer::from_vec(12, 9, 1, data).unwrap();
            let h = build_histogram(&img, &Window::new(2, 2, 6, 5), bins).unwrap();
            prop_assert!(h.bins().iter().any(|&w| w == 1.0));
            let p = back_project(&img, &h).unwrap();
            for (i, &v) in p.data().iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, h.bins()[h.bin_of(img.data()[i])]);
            }
        }

        #[test]
        fn camshift_scale_invariant(k in 0.1f64..10.0, x0 in 5usize..30, side in 3usize..10) {
            let prob = square_blob(48, 48, x0, 12, side, 0.8);
            let start = Window::new(x0 as i64 - 2, 10, side + 4, side + 4);
            let base = camshift_step(&prob, start, &CamShiftParams::default()).unwrap();
            let scaled = camshift_step(&prob.scaled(k), start, &CamShiftParams { p_max: k, ..Default::default() }).unwrap();
            prop_assert_eq!((base.window.w, base.window.h), (scaled.window.w, scaled.window.h));
        }
    }
}
