//! Hand-gesture recognition toolkit.
//!
//! The crate is split along the stages of the pipeline:
//!
//! - [`imaging`]: color-keyed segmentation, thresholding, background
//!   replacement, frame differencing and convex-hull localization, plus
//!   binary PGM/PPM I/O.
//! - [`tracking`]: image moments, histogram back-projection, mean shift and
//!   CamShift over frame sequences.
//! - [`preprocess`]: turns a variable-length frame sequence into a fixed
//!   32×28×28×3 normalized volume.
//! - [`neuralnet`]: a small tensor library, the digit CNN, NLL training with
//!   Nesterov momentum, the `GNET` model format and two-network fusion.
//! - [`generative`]: a Bernoulli-decoder variational autoencoder with a 2-D
//!   latent space.
//! - [`data`]: IDX dataset reading/writing and a seeded synthetic digit
//!   generator.
//!
//! Coordinates follow one convention everywhere: `x` is the column, `y` the
//! row, origin at the top-left.

pub mod data;
pub mod error;
pub mod generative;
pub mod imaging;
pub mod neuralnet;
pub mod preprocess;
pub mod tracking;

pub use error::{Error, Result};
pub use imaging::{BinaryMask, ImageBuffer, Point};
