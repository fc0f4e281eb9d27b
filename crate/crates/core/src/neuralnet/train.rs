use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{mix_seed, Network};
use super::optim::Nesterov;
use super::Tensor;
use crate::error::{invalid, Error, Result};

/// Samples per gradient work unit. Fixed so that the summation order, and
/// therefore the trained weights, do not depend on the thread count.
const GRAD_CHUNK: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, momentum: 0.9, batch_size: 40, epochs: 5, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return invalid(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return invalid(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return invalid("batch size and epoch count must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean NLL over the training set before the first update (no dropout).
    pub initial_loss: f64,
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch NLL training with Nesterov momentum.
///
/// Every epoch reshuffles the samples with a generator seeded from
/// `(seed, epoch)`; dropout masks are seeded per sample position, so a run
/// is reproducible bit for bit.
pub fn train(net: &mut Network, inputs: &[Tensor], labels: &[usize], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if inputs.is_empty() || inputs.len() != labels.len() {
        return invalid(format!("{} inputs for {} labels", inputs.len(), labels.len()));
    }
    let classes = net.architecture().num_classes();
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return invalid(format!("label {bad} out of range for {classes} classes"));
    }

    let initial_loss = mean_loss(net, inputs, labels)?;
    let mut opt = Nesterov::new(net.params(), config.learning_rate, config.momentum)?;
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let epoch_seed = mix_seed(config.seed, epoch as u64);
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed));
        let mut total = 0.0;
        let mut batches = 0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let base = b * config.batch_size;
            let partials: Vec<(f64, Vec<Tensor>)> = batch
                .par_chunks(GRAD_CHUNK)
                .enumerate()
                .map(|(c, idx)| {
                    let xs: Vec<&Tensor> = idx.iter().map(|&i| &inputs[i]).collect();
                    let ys: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                    let seeds: Vec<Option<u64>> = (0..idx.len())
                        .map(|k| Some(mix_seed(epoch_seed, (base + c * GRAD_CHUNK + k) as u64)))
                        .collect();
                    net.accumulate(&xs, &ys, &seeds)
                })
                .collect::<Result<_>>()?;

            let mut iter = partials.into_iter();
            let (mut loss, mut grads) = iter.next().expect("non-empty batch");
            for (l, g) in iter {
                loss += l;
                grads.iter_mut().zip(&g).for_each(|(a, b)| a.add_assign(b));
            }
            let inv = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(inv));
            let loss = loss * inv;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("loss became {loss} in epoch {}", epoch + 1)));
            }
            opt.step(net.params_mut(), &grads)?;
            total += loss;
            batches += 1;
        }
        epoch_losses.push(total / batches as f64);
    }
    Ok(TrainReport { initial_loss, epoch_losses })
}

/// Class probabilities for many inputs, in order.
pub fn predict_batch(net: &Network, inputs: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    inputs.par_iter().map(|x| net.predict(x)).collect()
}

/// Mean NLL in inference mode.
pub fn mean_loss(net: &Network, inputs: &[Tensor], labels: &[usize]) -> Result<f64> {
    let probs = predict_batch(net, inputs)?;
    super::layers::nll_loss(&probs, labels)
}

/// Fraction of inputs whose most probable class equals the label.
pub fn accuracy(net: &Network, inputs: &[Tensor], labels: &[usize]) -> Result<f64> {
    if inputs.is_empty() {
        return invalid("accuracy of an empty set");
    }
    let probs = predict_batch(net, inputs)?;
    let hits = probs.iter().zip(labels).filter(|(p, &y)| argmax(p) == y).count();
    Ok(hits as f64 / inputs.len() as f64)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
