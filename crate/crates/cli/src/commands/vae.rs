use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use gesture_core::data::DIGIT_SIZE;
use gesture_core::generative::{latent_grid, mosaic, train_vae, VaeConfig, VaeLayout, VaeParams};
use gesture_core::imaging::pnm;
use gesture_core::neuralnet::{ModelFile, Tensor};
use serde_json::json;

use super::emit;
use crate::config::Settings;
use crate::error::{usage, CliResult};
use crate::inputs::{check_output, require_file, DataArgs, DATA_KEYS};

#[derive(Debug, Args)]
pub struct VaeArgs {
    #[command(subcommand)]
    pub action: VaeAction,
}

#[derive(Debug, Subcommand)]
pub enum VaeAction {
    /// Train on digit images and write the model plus loss history.
    Train(VaeTrainArgs),
    /// Decode a lattice over the 2-D latent space into a PGM mosaic.
    Grid(VaeGridArgs),
    /// Write an untrained model (random or all-zero weights).
    Init(VaeInitArgs),
}

#[derive(Debug, Args)]
pub struct VaeTrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub latent: Option<usize>,
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
    /// Loss history JSON (default: the model path with a .json extension).
    #[arg(long, value_name = "PATH")]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VaeGridArgs {
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Tiles per side.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Latent coordinates span [-radius, radius].
    #[arg(long)]
    pub radius: Option<f64>,
    /// Mosaic output (PGM).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VaeInitArgs {
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub latent: Option<usize>,
    /// All weights and biases zero.
    #[arg(long)]
    pub zero: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

const TRAIN_KEYS: [&str; 9] =
    ["hidden", "latent", "epochs", "batch_size", "learning_rate", "momentum", "seed", "out", "history"];
const GRID_KEYS: [&str; 4] = ["model", "grid", "radius", "out"];
const INIT_KEYS: [&str; 5] = ["hidden", "latent", "zero", "seed", "out"];

pub fn run(args: VaeArgs, config: Option<&Path>) -> CliResult<()> {
    match args.action {
        VaeAction::Train(a) => run_train(a, config),
        VaeAction::Grid(a) => run_grid(a, config),
        VaeAction::Init(a) => run_init(a, config),
    }
}

fn run_train(args: VaeTrainArgs, config: Option<&Path>) -> CliResult<()> {
    let keys: Vec<&str> = TRAIN_KEYS.iter().chain(&DATA_KEYS).copied().collect();
    let s = Settings::load(config, &keys)?;
    let source = args.data.resolve(&s)?;
    let d = VaeConfig::default();
    let cfg = VaeConfig {
        hidden: s.or("hidden", args.hidden, d.hidden)?,
        latent: s.or("latent", args.latent, d.latent)?,
        learning_rate: s.or("learning_rate", args.learning_rate, d.learning_rate)?,
        momentum: s.or("momentum", args.momentum, d.momentum)?,
        batch_size: s.or("batch_size", args.batch_size, d.batch_size)?,
        epochs: s.or("epochs", args.epochs, d.epochs)?,
        seed: s.or("seed", args.seed, d.seed)?,
    };
    cfg.validate()?;
    let out: PathBuf = s.required("out", args.out)?;
    let history: PathBuf = s.or("history", args.history, out.with_extension("json"))?;
    check_output(&out)?;
    check_output(&history)?;
    if history == out {
        return usage("--history must differ from --out");
    }

    let data: Vec<Vec<f64>> = source.load(cfg.seed, 0)?.unit_tensors().into_iter().map(Tensor::into_vec).collect();
    let (params, losses) = train_vae(&data, &cfg)?;
    for (i, l) in losses.iter().enumerate() {
        emit(&json!({ "epoch": i + 1, "loss": l }));
    }
    params.to_model_file(cfg.seed, Some(json!(cfg))).save(&out)?;
    fs::write(&history, serde_json::to_string_pretty(&json!({ "epoch_losses": losses })).expect("serializes") + "\n")?;
    Ok(())
}

fn run_grid(args: VaeGridArgs, config: Option<&Path>) -> CliResult<()> {
    let s = Settings::load(config, &GRID_KEYS)?;
    let model: PathBuf = s.required("model", args.model)?;
    let grid: usize = s.or("grid", args.grid, 10)?;
    let radius: f64 = s.or("radius", args.radius, 3.0)?;
    let out: PathBuf = s.required("out", args.out)?;
    if grid == 0 || !(radius >= 0.0 && radius.is_finite()) {
        return usage("--grid must be positive and --radius finite and non-negative");
    }
    check_output(&out)?;
    require_file(&model)?;
    let params = VaeParams::from_model_file(ModelFile::load(&model)?)?;
    let tiles = latent_grid(&params, grid, radius)?;
    let image = mosaic(&tiles, grid)?;
    pnm::write(&out, &image)?;
    emit(&json!({ "grid": grid, "radius": radius, "width": image.width(), "height": image.height() }));
    Ok(())
}

fn run_init(args: VaeInitArgs, config: Option<&Path>) -> CliResult<()> {
    let s = Settings::load(config, &INIT_KEYS)?;
    let d = VaeConfig::default();
    let layout = VaeLayout::new(
        DIGIT_SIZE * DIGIT_SIZE,
        s.or("hidden", args.hidden, d.hidden)?,
        s.or("latent", args.latent, d.latent)?,
    )?;
    let seed: u64 = s.or("seed", args.seed, 0)?;
    let out: PathBuf = s.required("out", args.out)?;
    check_output(&out)?;
    let params = if s.flag("zero", args.zero)? { VaeParams::zeros(layout) } else { VaeParams::init(layout, seed) };
    params.to_model_file(seed, None).save(&out)?;
    Ok(())
}
