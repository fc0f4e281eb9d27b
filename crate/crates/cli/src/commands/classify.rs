use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gesture_core::data::idx::{load_idx, read_idx_images};
use gesture_core::data::{DigitDataset, DIGIT_SIZE};
use gesture_core::neuralnet::layers::PROB_FLOOR;
use gesture_core::neuralnet::{argmax, fuse_predict, ModelFile, Network, Tensor};
use gesture_core::preprocess::{build_volume, GestureSequence, TARGET_SIZE, VOLUME_CHANNELS};
use gesture_core::{Error, Result};
use rayon::prelude::*;
use serde_json::json;

use super::emit;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::inputs::{digit_tensors, require_dir, require_file, InputNorm};

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// GNET classifier; give twice to fuse a low- and a high-resolution model.
    #[arg(long = "model", value_name = "PATH")]
    pub models: Vec<PathBuf>,
    /// IDX image file of digits to classify.
    #[arg(long, value_name = "PATH")]
    pub idx_images: Option<PathBuf>,
    /// Matching IDX labels; adds a "label" field and reports accuracy.
    #[arg(long, value_name = "PATH")]
    pub idx_labels: Option<PathBuf>,
    /// Gesture frame directory, classified as one sample.
    #[arg(long, value_name = "DIR")]
    pub frames: Option<PathBuf>,
}

const KEYS: [&str; 4] = ["model", "idx_images", "idx_labels", "frames"];

enum Input {
    Digits(DigitDataset, bool),
    Volume(Tensor),
}

/// The network and the digit scaling it was trained with (none when the
/// header does not say).
fn load_model(path: &Path) -> CliResult<(Network, InputNorm)> {
    require_file(path)?;
    let file = ModelFile::load(path)?;
    let norm = match file.header.config.as_ref().and_then(|c| c.get("input_norm")) {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Format(format!("bad input_norm in model header: {e}")))?,
        None => InputNorm::None,
    };
    Ok((file.into_network()?, norm))
}

/// Per-sample class probabilities of one model.
fn predict_all((net, norm): &(Network, InputNorm), input: &Input) -> Result<Vec<Vec<f64>>> {
    let [h, w, c] = net.input_shape();
    match input {
        Input::Digits(ds, _) => {
            if c != 1 || h != w || h % DIGIT_SIZE != 0 {
                return Err(Error::Format(format!(
                    "model expects {h}x{w}x{c} inputs, digits are {DIGIT_SIZE}x{DIGIT_SIZE}x1"
                )));
            }
            let xs = digit_tensors(ds, h, *norm).map_err(|e| Error::InvalidInput(e.to_string()))?;
            xs.par_iter().map(|x| net.predict(x)).collect()
        }
        Input::Volume(v) => {
            if [h, w, c] != [TARGET_SIZE, TARGET_SIZE, VOLUME_CHANNELS] {
                return Err(Error::Format(format!(
                    "model expects {h}x{w}x{c} inputs, gesture frames are {TARGET_SIZE}x{TARGET_SIZE}x{VOLUME_CHANNELS}"
                )));
            }
            let plane = TARGET_SIZE * TARGET_SIZE * VOLUME_CHANNELS;
            let frames: Vec<Vec<f64>> = v
                .data()
                .par_chunks(plane)
                .map(|d| net.predict(&Tensor::from_vec(vec![h, w, c], d.to_vec())?))
                .collect::<Result<_>>()?;
            Ok(vec![geometric_mean(&frames)])
        }
    }
}

/// Normalized geometric mean of per-frame distributions.
pub fn geometric_mean(frames: &[Vec<f64>]) -> Vec<f64> {
    let classes = frames[0].len();
    let logs: Vec<f64> = (0..classes)
        .map(|k| frames.iter().map(|p| p[k].max(PROB_FLOOR).ln()).sum::<f64>() / frames.len() as f64)
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

pub fn run(args: ClassifyArgs, config: Option<&Path>) -> CliResult<()> {
    let s = Settings::load(config, &KEYS)?;
    let models: Vec<PathBuf> = if args.models.is_empty() { s.or("model", None, Vec::new())? } else { args.models };
    if models.is_empty() || models.len() > 2 {
        return usage(format!("give one or two --model files, got {}", models.len()));
    }
    let idx_images: Option<PathBuf> = s.get("idx_images", args.idx_images)?;
    let idx_labels: Option<PathBuf> = s.get("idx_labels", args.idx_labels)?;
    let frames: Option<PathBuf> = s.get("frames", args.frames)?;

    let input = match (idx_images, idx_labels, frames) {
        (Some(images), labels, None) => {
            require_file(&images)?;
            match labels {
                Some(labels) => {
                    require_file(&labels)?;
                    Input::Digits(load_idx(&images, &labels)?, true)
                }
                None => {
                    let (n, rows, cols, pixels) = read_idx_images(&fs::read(&images)?)?;
                    if (rows, cols) != (DIGIT_SIZE, DIGIT_SIZE) {
                        return Err(Error::Format(format!("images are {rows}x{cols}, expected 28x28")).into());
                    }
                    Input::Digits(DigitDataset::new(pixels, vec![0; n])?, false)
                }
            }
        }
        (None, None, Some(dir)) => {
            require_dir(&dir)?;
            Input::Volume(build_volume(&GestureSequence::load_dir(&dir)?)?)
        }
        (None, Some(_), _) => return usage("--idx-labels needs --idx-images"),
        (None, None, None) => return usage("nothing to classify: pass --idx-images or --frames"),
        _ => return usage("--frames cannot be combined with IDX input"),
    };
    let nets = models.iter().map(|p| load_model(p)).collect::<CliResult<Vec<_>>>()?;
    if nets.len() == 2 && nets[0].0.architecture().num_classes() != nets[1].0.architecture().num_classes() {
        return Err(Error::Format("the two models predict different class counts".into()).into());
    }

    let per_model = nets.iter().map(|n| predict_all(n, &input)).collect::<Result<Vec<_>>>()?;
    let mut hits = 0;
    for i in 0..per_model[0].len() {
        let (probs, class) = match per_model.as_slice() {
            [one] => (one[i].clone(), argmax(&one[i])),
            [low, high] => fuse_predict(&low[i], &high[i])?,
            _ => unreachable!("one or two models"),
        };
        let mut line = json!({ "index": i, "probabilities": probs, "class": class });
        if let Input::Digits(ds, true) = &input {
            let label = ds.labels()[i] as usize;
            hits += usize::from(label == class);
            line["label"] = json!(label);
        }
        emit(&line);
    }
    if let Input::Digits(ds, true) = &input {
        eprintln!("accuracy {:.4} over {} samples", hits as f64 / ds.len() as f64, ds.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_mean_of_identical_frames() {
        let p = vec![0.2, 0.5, 0.3];
        let g = geometric_mean(&[p.clone(), p.clone(), p.clone()]);
        for (a, b) in g.iter().zip(&p) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = geometric_mean(&[vec![0.9, 0.1], vec![0.1, 0.9]]);
        assert!((g[0] - 0.5).abs() < 1e-12);
    }
}
