//! From-scratch CNN: tensors, layers, Nesterov training, fusion and the
//! `GNET` model format.

pub mod fusion;
pub mod init;
pub mod layers;
pub mod model_io;
pub mod network;
pub mod optim;
mod tensor;
pub mod train;

pub use fusion::fuse_predict;
pub use init::{init_params, init_params_with, InitScheme};
pub use layers::{conv2d, dense, dropout, maxpool2x2, nll_loss, relu, softmax};
pub use model_io::{ModelFile, ModelHeader, ModelKind};
pub use network::{Activation, Architecture, LayerSpec, LayerSummary, Network};
pub use optim::Nesterov;
pub use tensor::Tensor;
pub use train::{accuracy, argmax, predict_batch, train, TrainConfig, TrainReport};
