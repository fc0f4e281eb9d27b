use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gesture_core::imaging::{color_distance_mask, convex_hull, pnm, replace_background};
use gesture_core::preprocess::load_frames;
use gesture_core::{Error, ImageBuffer};
use serde_json::json;

use super::emit;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::inputs::{parse_list, require_dir, require_file};

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Directory of frame_NNNN.ppm (or .pgm) frames.
    #[arg(long, value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Background key color as R,G,B.
    #[arg(long, value_name = "R,G,B")]
    pub key_color: Option<String>,
    /// Mean absolute color distance above which a pixel is foreground.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Replacement background (PPM, same size as the frames).
    #[arg(long, value_name = "PATH")]
    pub background: Option<PathBuf>,
    /// Output directory for mask_NNNN.pgm and composite_NNNN.ppm.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

const KEYS: [&str; 5] = ["input", "key_color", "threshold", "background", "out"];

fn to_rgb(img: ImageBuffer) -> CliResult<ImageBuffer> {
    if img.channels() == 3 {
        return Ok(img);
    }
    let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
    Ok(ImageBuffer::from_vec(img.width(), img.height(), 3, data)?)
}

pub fn run(args: SegmentArgs, config: Option<&Path>) -> CliResult<()> {
    let s = Settings::load(config, &KEYS)?;
    let input: PathBuf = s.required("input", args.input)?;
    let key: String = s.or("key_color", args.key_color, "0,255,0".into())?;
    let key = parse_list::<u8, 3>(&key, "--key-color")?;
    let threshold: u8 = s.or("threshold", args.threshold, 60)?;
    let background: Option<PathBuf> = s.get("background", args.background)?;
    let out: PathBuf = s.required("out", args.out)?;

    require_dir(&input)?;
    let frames: Vec<ImageBuffer> = load_frames(&input)?.into_iter().map(to_rgb).collect::<CliResult<_>>()?;
    let first = &frames[0];
    if let Some(f) = frames.iter().find(|f| !f.same_size(first)) {
        return usage(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            first.width(),
            first.height(),
            f.width(),
            f.height()
        ));
    }
    let background = match background {
        Some(p) => {
            require_file(&p)?;
            let bg = to_rgb(pnm::read(&p)?)?;
            if !bg.same_size(first) {
                return usage(format!(
                    "background is {}x{} but frames are {}x{}",
                    bg.width(),
                    bg.height(),
                    first.width(),
                    first.height()
                ));
            }
            Some(bg)
        }
        None => None,
    };
    if out.exists() && !out.is_dir() {
        return usage(format!("output path {} is not a directory", out.display()));
    }

    let masks = frames.iter().map(|f| color_distance_mask(f, key, threshold)).collect::<Result<Vec<_>, _>>()?;
    let composites = match &background {
        Some(bg) => {
            Some(frames.iter().zip(&masks).map(|(f, m)| replace_background(f, bg, m)).collect::<Result<Vec<_>, _>>()?)
        }
        None => None,
    };

    fs::create_dir_all(&out)?;
    for (k, mask) in masks.iter().enumerate() {
        pnm::write(out.join(format!("mask_{k:04}.pgm")), mask.as_image())?;
        if let Some(c) = &composites {
            pnm::write(out.join(format!("composite_{k:04}.ppm")), &c[k])?;
        }
        let hull = match convex_hull(mask) {
            Ok(pts) => json!(pts.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>()),
            Err(Error::EmptyRegion(_)) => serde_json::Value::Null,
            Err(e) => return Err(e.into()),
        };
        emit(&json!({ "frame": k, "foreground": mask.count(), "hull": hull }));
    }
    Ok(())
}
