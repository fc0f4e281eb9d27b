//! Shared input handling: datasets, frame directories, output paths.

use std::path::{Path, PathBuf};

use clap::Args;
use gesture_core::data::idx::load_idx;
use gesture_core::data::synth::synth_digits;
use gesture_core::data::{DigitDataset, DIGIT_SIZE};
use gesture_core::imaging::grayscale;
use gesture_core::neuralnet::Tensor;
use gesture_core::preprocess::{load_frames, normalize_channel};
use gesture_core::ImageBuffer;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::error::{usage, CliResult};

pub const DATA_KEYS: [&str; 3] = ["idx_images", "idx_labels", "synth"];

/// Digit data from an IDX pair or the synthetic generator.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// IDX image file (N×28×28 bytes).
    #[arg(long, value_name = "PATH")]
    pub idx_images: Option<PathBuf>,
    /// IDX label file matching --idx-images.
    #[arg(long, value_name = "PATH")]
    pub idx_labels: Option<PathBuf>,
    /// Generate this many seeded synthetic digits instead of reading IDX.
    #[arg(long, value_name = "N")]
    pub synth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Idx { images: PathBuf, labels: PathBuf },
    Synth(usize),
}

impl DataArgs {
    pub fn resolve(self, s: &Settings) -> CliResult<DataSource> {
        let images: Option<PathBuf> = s.get("idx_images", self.idx_images)?;
        let labels: Option<PathBuf> = s.get("idx_labels", self.idx_labels)?;
        let synth: Option<usize> = s.get("synth", self.synth)?;
        match (images, labels, synth) {
            (None, None, Some(0)) => usage("--synth needs a positive sample count"),
            (None, None, Some(n)) => Ok(DataSource::Synth(n)),
            (Some(images), Some(labels), None) => {
                require_file(&images)?;
                require_file(&labels)?;
                Ok(DataSource::Idx { images, labels })
            }
            (None, None, None) => usage("no data: pass --idx-images with --idx-labels, or --synth N"),
            (_, _, Some(_)) => usage("--synth cannot be combined with IDX files"),
            _ => usage("--idx-images and --idx-labels must be given together"),
        }
    }
}

impl DataSource {
    /// Loads the data. `extra` additional synthetic samples are appended
    /// for held-out use; IDX files are returned as-is.
    pub fn load(&self, seed: u64, extra: usize) -> CliResult<DigitDataset> {
        Ok(match self {
            DataSource::Idx { images, labels } => load_idx(images, labels)?,
            DataSource::Synth(n) => synth_digits(n + extra, seed),
        })
    }
}

pub fn require_file(p: &Path) -> CliResult<()> {
    if !p.is_file() {
        return usage(format!("input file {} does not exist", p.display()));
    }
    Ok(())
}

pub fn require_dir(p: &Path) -> CliResult<()> {
    if !p.is_dir() {
        return usage(format!("input directory {} does not exist", p.display()));
    }
    Ok(())
}

/// Output files must land in an existing directory.
pub fn check_output(p: &Path) -> CliResult<()> {
    let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return usage(format!("output directory {} does not exist", parent.display()));
    }
    if p.is_dir() {
        return usage(format!("output path {} is a directory", p.display()));
    }
    Ok(())
}

/// Frames of a directory, converted to gray.
pub fn load_gray_frames(dir: &Path) -> CliResult<Vec<ImageBuffer>> {
    require_dir(dir)?;
    load_frames(dir)?
        .into_iter()
        .map(|f| if f.channels() == 3 { grayscale(&f).map_err(Into::into) } else { Ok(f) })
        .collect()
}

/// Per-sample scaling applied to digit images before the classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputNorm {
    /// Pixel values divided by 255.
    None,
    /// Zero mean and unit variance per image.
    #[default]
    Standardize,
}

/// Parses a kebab- or snake-case name into a serde enum.
pub fn parse_name<T: DeserializeOwned>(name: &str, what: &str) -> CliResult<T> {
    match serde_json::from_value(serde_json::Value::String(name.replace('-', "_"))) {
        Ok(v) => Ok(v),
        Err(_) => usage(format!("unknown {what} {name:?}")),
    }
}

/// Digits as `[size, size, 1]` tensors, enlarged by pixel replication when
/// `size` is a multiple of 28.
pub fn digit_tensors(ds: &DigitDataset, size: usize, norm: InputNorm) -> CliResult<Vec<Tensor>> {
    if size % DIGIT_SIZE != 0 || size == 0 {
        return usage(format!("digit input size must be a multiple of {DIGIT_SIZE}, got {size}"));
    }
    let k = size / DIGIT_SIZE;
    Ok((0..ds.len())
        .map(|i| {
            let img = ds.image_bytes(i);
            let mut data: Vec<f64> =
                (0..size * size).map(|p| img[(p / size / k) * DIGIT_SIZE + (p % size) / k] as f64 / 255.0).collect();
            if norm == InputNorm::Standardize {
                normalize_channel(&mut data);
            }
            Tensor::from_vec(vec![size, size, 1], data).expect("shape matches")
        })
        .collect())
}

/// Parses `a,b,c,...` into exactly `N` integers.
pub fn parse_list<T: std::str::FromStr, const N: usize>(s: &str, what: &str) -> CliResult<[T; N]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return usage(format!("{what} needs {N} comma-separated values, got {s:?}"));
    }
    let mut out = Vec::with_capacity(N);
    for p in parts {
        match p.parse() {
            Ok(v) => out.push(v),
            Err(_) => return usage(format!("{what}: cannot parse {p:?}")),
        }
    }
    match out.try_into() {
        Ok(a) => Ok(a),
        Err(_) => unreachable!(),
    }
}
