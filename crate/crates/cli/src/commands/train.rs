use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use gesture_core::neuralnet::{accuracy, init_params_with, train, Architecture, InitScheme, ModelFile, TrainConfig};
use serde_json::json;

use super::emit;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::inputs::{check_output, digit_tensors, parse_name, DataArgs, InputNorm, DATA_KEYS};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Network architecture; only `figure1` is built in.
    #[arg(long)]
    pub arch: Option<String>,
    /// Print the layer/parameter table and exit without training.
    #[arg(long)]
    pub print_params: bool,
    /// Square input side: 28 (low resolution) or 56 (high resolution).
    #[arg(long)]
    pub input_size: Option<usize>,
    /// Convolution weight range: `channel-fan` (default) or `as-printed`.
    #[arg(long)]
    pub init: Option<String>,
    /// Per-image input scaling: `standardize` (default) or `none`.
    #[arg(long)]
    pub input_norm: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Samples held out for evaluation (taken from the end of the data).
    #[arg(long)]
    pub held_out: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model output path (GNET).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Optional JSON file for the loss history.
    #[arg(long, value_name = "PATH")]
    pub history: Option<PathBuf>,
}

const KEYS: [&str; 13] = [
    "arch",
    "print_params",
    "input_size",
    "init",
    "input_norm",
    "held_out",
    "epochs",
    "batch_size",
    "learning_rate",
    "momentum",
    "seed",
    "out",
    "history",
];

pub const DROPOUT: (f64, f64) = (0.25, 0.5);

pub fn architecture(name: &str, input_size: usize) -> CliResult<Architecture> {
    if name != "figure1" {
        return usage(format!("unknown architecture {name:?}; only \"figure1\" is available"));
    }
    if input_size != 28 && input_size != 56 {
        return usage(format!("--input-size must be 28 or 56, got {input_size}"));
    }
    Ok(Architecture::figure1(input_size, 1, DROPOUT)?)
}

/// Keras-style parameter table.
pub fn param_table(arch: &Architecture) -> String {
    let mut s = format!("{:<32}{:<24}{:>10}\n", "Layer (type)", "Output Shape", "Param #");
    for (row, layer) in arch.summary().iter().zip(&arch.layers) {
        let shape = row.output_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ");
        s += &format!(
            "{:<32}{:<24}{:>10}\n",
            format!("{} ({})", row.name, layer.kind_name()),
            format!("(None, {shape})"),
            row.params
        );
    }
    s += &format!("Total params: {}\n", thousands(arch.total_params()));
    s
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

pub fn run(args: TrainArgs, config: Option<&Path>) -> CliResult<()> {
    let keys: Vec<&str> = KEYS.iter().chain(&DATA_KEYS).copied().collect();
    let s = Settings::load(config, &keys)?;
    let arch_name: String = s.or("arch", args.arch, "figure1".into())?;
    let input_size: usize = s.or("input_size", args.input_size, 28)?;
    let arch = architecture(&arch_name, input_size)?;
    if s.flag("print_params", args.print_params)? {
        print!("{}", param_table(&arch));
        return Ok(());
    }

    let source = args.data.resolve(&s)?;
    let defaults = TrainConfig::default();
    let train_config = TrainConfig {
        learning_rate: s.or("learning_rate", args.learning_rate, defaults.learning_rate)?,
        momentum: s.or("momentum", args.momentum, defaults.momentum)?,
        batch_size: s.or("batch_size", args.batch_size, defaults.batch_size)?,
        epochs: s.or("epochs", args.epochs, defaults.epochs)?,
        seed: s.or("seed", args.seed, defaults.seed)?,
    };
    train_config.validate()?;
    let init: InitScheme = parse_name(&s.or("init", args.init, "channel_fan".into())?, "init scheme")?;
    let norm: InputNorm = parse_name(&s.or("input_norm", args.input_norm, "standardize".into())?, "input norm")?;
    let held_out: usize = s.or("held_out", args.held_out, 200)?;
    let out: PathBuf = s.required("out", args.out)?;
    let history: Option<PathBuf> = s.get("history", args.history)?;
    check_output(&out)?;
    if let Some(h) = &history {
        check_output(h)?;
    }

    let data = source.load(train_config.seed, held_out)?;
    if held_out >= data.len() {
        return usage(format!("--held-out {held_out} leaves no training samples out of {}", data.len()));
    }
    let split = data.len() - held_out;
    let (train_set, test_set) = (data.slice(0..split), data.slice(split..data.len()));
    let xs = digit_tensors(&train_set, input_size, norm)?;
    let ys = train_set.label_indices();

    let mut net = init_params_with(&arch, train_config.seed, init);
    let report = train(&mut net, &xs, &ys, &train_config)?;
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        emit(&json!({ "epoch": i + 1, "loss": loss }));
    }
    let train_acc = accuracy(&net, &xs, &ys)?;
    let held_acc = if held_out > 0 {
        Some(accuracy(&net, &digit_tensors(&test_set, input_size, norm)?, &test_set.label_indices())?)
    } else {
        None
    };

    let meta = json!({
        "train": train_config,
        "input_size": input_size,
        "samples": split,
        "init": init,
        "input_norm": norm,
    });
    ModelFile::classifier(&net, train_config.seed, Some(meta)).save(&out)?;
    if let Some(h) = &history {
        fs::write(h, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    }
    emit(&json!({
        "initial_loss": report.initial_loss,
        "final_loss": report.epoch_losses.last(),
        "train_accuracy": train_acc,
        "held_out_accuracy": held_acc,
    }));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure1_table() {
        let t = param_table(&architecture("figure1", 28).unwrap());
        assert!(t.ends_with("Total params: 1,199,882\n"), "{t}");
        assert_eq!(t.lines().count(), 10);
        assert!(t.contains("convolution2d_1 (Convolution2D)"));
    }

    #[test]
    fn digit_grouping() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1000), "1,000");
        assert_eq!(thousands(1199882), "1,199,882");
    }

    #[test]
    fn rejects_unknown_arch_and_size() {
        assert!(architecture("resnet", 28).is_err());
        assert!(architecture("figure1", 32).is_err());
    }
}
