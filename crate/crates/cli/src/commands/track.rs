use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gesture_core::imaging::pnm;
use gesture_core::tracking::{
    track_sequence, tracks_to_csv, CamShiftParams, MeanShiftParams, TrackConfig, TrackState, Window,
};
use gesture_core::{Error, ImageBuffer};
use serde_json::json;

use super::emit;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::inputs::{check_output, load_gray_frames, parse_list};

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Directory of frame_NNNN.pgm frames.
    #[arg(long, value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Initial region of interest as X,Y,W,H in frame 0.
    #[arg(long, value_name = "X,Y,W,H")]
    pub roi: Option<String>,
    /// CSV output path.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Trajectory overlay PPM (default: the CSV path with a .ppm extension).
    #[arg(long, value_name = "PATH")]
    pub overlay: Option<PathBuf>,
    /// Histogram bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Mean-shift iteration cap per frame.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Mean-shift convergence distance in pixels.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Nominal peak of the likelihood map used for window sizing.
    #[arg(long)]
    pub p_max: Option<f64>,
}

const KEYS: [&str; 8] = ["input", "roi", "out", "overlay", "bins", "max_iter", "eps", "p_max"];

pub fn run(args: TrackArgs, config: Option<&Path>) -> CliResult<()> {
    let s = Settings::load(config, &KEYS)?;
    let input: PathBuf = s.required("input", args.input)?;
    let roi: String = s.required("roi", args.roi)?;
    let [x, y, w, h] = parse_list::<i64, 4>(&roi, "--roi")?;
    let out: PathBuf = s.required("out", args.out)?;
    let overlay: PathBuf = s.or("overlay", args.overlay, out.with_extension("ppm"))?;
    let defaults = TrackConfig::default();
    let config = TrackConfig {
        bin_count: s.or("bins", args.bins, defaults.bin_count)?,
        camshift: CamShiftParams {
            search: MeanShiftParams {
                max_iter: s.or("max_iter", args.max_iter, defaults.camshift.search.max_iter)?,
                eps: s.or("eps", args.eps, defaults.camshift.search.eps)?,
            },
            p_max: s.or("p_max", args.p_max, defaults.camshift.p_max)?,
        },
    };
    if config.bin_count == 0 || config.bin_count > 256 {
        return usage(format!("--bins must be in 1..=256, got {}", config.bin_count));
    }
    if config.camshift.search.max_iter == 0 || !(config.camshift.search.eps > 0.0) || !(config.camshift.p_max > 0.0) {
        return usage("--max-iter, --eps and --p-max must be positive");
    }
    check_output(&out)?;
    check_output(&overlay)?;
    if overlay == out {
        return usage("--overlay must differ from --out");
    }

    let frames = load_gray_frames(&input)?;
    let (fw, fh) = (frames[0].width() as i64, frames[0].height() as i64);
    if w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > fw || y + h > fh {
        return usage(format!("roi {x},{y},{w},{h} is not inside the {fw}x{fh} first frame"));
    }
    let roi = Window::new(x, y, w as usize, h as usize);

    let states = track_sequence(&frames, roi, &config)?;
    if states[0].lost {
        return Err(Error::LostTrack("target has no histogram mass in frame 0".into()).into());
    }
    let image = draw_overlay(frames.last().expect("at least one frame"), &states)?;
    fs::write(&out, tracks_to_csv(&states))?;
    pnm::write(&overlay, &image)?;
    emit(&json!({
        "frames": states.len(),
        "converged": states.iter().filter(|t| t.converged).count(),
        "lost": states.iter().filter(|t| t.lost).count(),
    }));
    Ok(())
}

/// Last frame in gray with the centroid path in red and the final window
/// in green.
pub fn draw_overlay(frame: &ImageBuffer, states: &[TrackState]) -> CliResult<ImageBuffer> {
    let (w, h) = (frame.width(), frame.height());
    let mut img = ImageBuffer::from_fn_rgb(w, h, |x, y| {
        let v = frame.get(x, y, 0);
        [v, v, v]
    })?;
    let mut put = |x: i64, y: i64, c: [u8; 3]| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            for (ch, v) in c.into_iter().enumerate() {
                img.set(x as usize, y as usize, ch, v);
            }
        }
    };
    if let Some(last) = states.last() {
        let win = last.window;
        let (x0, y0) = (win.x, win.y);
        let (x1, y1) = (win.x + win.w as i64 - 1, win.y + win.h as i64 - 1);
        for x in x0..=x1 {
            put(x, y0, [0, 255, 0]);
            put(x, y1, [0, 255, 0]);
        }
        for y in y0..=y1 {
            put(x0, y, [0, 255, 0]);
            put(x1, y, [0, 255, 0]);
        }
    }
    let pts: Vec<(i64, i64)> =
        states.iter().map(|t| (t.centroid.0.round() as i64, t.centroid.1.round() as i64)).collect();
    for pair in pts.windows(2) {
        for (x, y) in line(pair[0], pair[1]) {
            put(x, y, [255, 0, 0]);
        }
    }
    if let Some(&(x, y)) = pts.first() {
        put(x, y, [255, 0, 0]);
    }
    Ok(img)
}

/// Bresenham segment, both ends included.
fn line((mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64)) -> Vec<(i64, i64)> {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
    let mut err = dx + dy;
    let mut out = Vec::new();
    loop {
        out.push((x0, y0));
        if (x0, y0) == (x1, y1) {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bresenham_endpoints() {
        assert_eq!(line((0, 0), (3, 0)), vec![(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(line((2, 2), (0, 0)), vec![(2, 2), (1, 1), (0, 0)]);
        let l = line((0, 0), (5, 2));
        assert_eq!((l.first(), l.last(), l.len()), (Some(&(0, 0)), Some(&(5, 2)), 6));
    }
}
