//! `gesture` command-line tool.
//!
//! Every subcommand resolves its parameters from flags, then from an
//! optional `--config` JSON object, then from built-in defaults. All inputs
//! are loaded and checked before the first output file is written.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
mod error;
pub mod inputs;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "gesture", version, about = "Hand-gesture segmentation, tracking and recognition")]
pub struct Cli {
    /// JSON object of parameter defaults; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Color-keyed foreground masks and background replacement.
    Segment(commands::segment::SegmentArgs),
    /// CamShift tracking of a region through a frame directory.
    Track(commands::track::TrackArgs),
    /// Train the digit classifier.
    Train(commands::train::TrainArgs),
    /// Classify digits or a gesture frame directory with one or two models.
    Classify(commands::classify::ClassifyArgs),
    /// Variational autoencoder training and latent-space mosaics.
    Vae(commands::vae::VaeArgs),
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Segment(a) => commands::segment::run(a, config),
        Command::Track(a) => commands::track::run(a, config),
        Command::Train(a) => commands::train::run(a, config),
        Command::Classify(a) => commands::classify::run(a, config),
        Command::Vae(a) => commands::vae::run(a, config),
    }
}
