//! Variational autoencoder with a Gaussian encoder and Bernoulli decoder.
//!
//! ```text
//! encoder: x (N) -> relu(dense H) -> mu (L), log_var (L)
//! decoder: z (L) -> relu(dense H) -> sigmoid(dense N)
//! ```
//!
//! Training minimizes the negative evidence lower bound, estimated with one
//! reparameterized noise draw per sample and step.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::imaging::ImageBuffer;
use crate::neuralnet::layers::{dense, dense_backward};
use crate::neuralnet::{ModelFile, ModelHeader, ModelKind, Nesterov, Tensor};

/// Bernoulli means are clamped to `[RECON_EPS, 1 - RECON_EPS]` before logs.
pub const RECON_EPS: f64 = 1e-7;

const GRAD_CHUNK: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeLayout {
    pub input: usize,
    pub hidden: usize,
    pub latent: usize,
}

impl VaeLayout {
    pub fn new(input: usize, hidden: usize, latent: usize) -> Result<Self> {
        if input == 0 || hidden == 0 || latent == 0 {
            return invalid(format!("VAE sizes must be positive, got {input}/{hidden}/{latent}"));
        }
        Ok(Self { input, hidden, latent })
    }

    /// 784 inputs, 256 hidden units, 2 latent dimensions.
    pub fn digits() -> Self {
        Self { input: 28 * 28, hidden: 256, latent: 2 }
    }

    /// Encoder then decoder tensors, weights stored input-major.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let (n, h, l) = (self.input, self.hidden, self.latent);
        vec![vec![n, h], vec![h], vec![h, l], vec![l], vec![h, l], vec![l], vec![l, h], vec![h], vec![h, n], vec![n]]
    }
}

/// Encoder and decoder weights.
#[derive(Clone, Debug, PartialEq)]
pub struct VaeParams {
    layout: VaeLayout,
    tensors: Vec<Tensor>,
}

/// Posterior parameters for one input and the sample drawn from them.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub eps: Vec<f64>,
    pub z: Vec<f64>,
}

impl LatentCode {
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if mu.len() != log_var.len() || mu.len() != eps.len() {
            return invalid("mu, log_var and eps lengths differ");
        }
        let z = reparameterize(&mu, &log_var, &eps);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("latent sample is not finite".into()));
        }
        Ok(Self { mu, log_var, eps, z })
    }
}

impl VaeParams {
    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(layout: VaeLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = layout
            .param_shapes()
            .into_iter()
            .map(|shape| {
                if shape.len() == 1 {
                    return Tensor::zeros(&shape);
                }
                let bound = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("bound is finite");
                let n = shape[0] * shape[1];
                Tensor::from_vec(shape, (0..n).map(|_| dist.sample(&mut rng)).collect()).expect("shape matches")
            })
            .collect();
        Self { layout, tensors }
    }

    pub fn zeros(layout: VaeLayout) -> Self {
        Self { layout, tensors: layout.param_shapes().iter().map(|s| Tensor::zeros(s)).collect() }
    }

    pub fn from_tensors(layout: VaeLayout, tensors: Vec<Tensor>) -> Result<Self> {
        let shapes = layout.param_shapes();
        if tensors.len() != shapes.len() || tensors.iter().zip(&shapes).any(|(t, s)| t.shape() != s.as_slice()) {
            return invalid("tensor shapes do not match the VAE layout");
        }
        Ok(Self { layout, tensors })
    }

    pub fn layout(&self) -> VaeLayout {
        self.layout
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// `(mu, log_var)` for an input in `[0, 1]^N`.
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let (_, mu, lv) = self.encode_inner(&Tensor::vector(x.to_vec()))?;
        Ok((mu.into_vec(), lv.into_vec()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.layout.input {
            return invalid(format!("VAE expects {} inputs, got {}", self.layout.input, x.len()));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("VAE inputs must lie in [0, 1]");
        }
        Ok(())
    }

    fn encode_inner(&self, x: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        let t = &self.tensors;
        let h = relu(dense(x, &t[0], &t[1])?);
        let mu = dense(&h, &t[2], &t[3])?;
        let lv = dense(&h, &t[4], &t[5])?;
        Ok((h, mu, lv))
    }

    fn decode_inner(&self, z: &Tensor) -> Result<(Tensor, Tensor)> {
        let t = &self.tensors;
        let h = relu(dense(z, &t[6], &t[7])?);
        let out = dense(&h, &t[8], &t[9])?.map(sigmoid);
        Ok((h, out))
    }

    /// Bernoulli means, each strictly inside `(0, 1)` before rounding.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.layout.latent {
            return invalid(format!("latent vector has {} components, expected {}", z.len(), self.layout.latent));
        }
        Ok(self.decode_inner(&Tensor::vector(z.to_vec()))?.1.into_vec())
    }

    /// Negative ELBO of one sample with fixed noise `eps`, and its gradient
    /// added into `grads`.
    pub fn loss_and_grad(&self, x: &[f64], eps: &[f64], grads: &mut [Tensor]) -> Result<f64> {
        let t = &self.tensors;
        let xt = Tensor::vector(x.to_vec());
        let (h_enc, mu, lv) = self.encode_inner(&xt)?;
        let code = LatentCode::new(mu.into_vec(), lv.into_vec(), eps.to_vec())?;
        let zt = Tensor::vector(code.z.clone());
        let (h_dec, recon) = self.decode_inner(&zt)?;
        let loss = -elbo(x, recon.data(), &code.mu, &code.log_var);

        // d/d(logit) of the clamped Bernoulli log-likelihood
        let g_logit: Vec<f64> = recon
            .data()
            .iter()
            .zip(x)
            .map(|(&r, &xi)| if r < RECON_EPS || r > 1.0 - RECON_EPS { 0.0 } else { r - xi })
            .collect();
        let g_logit = Tensor::vector(g_logit);
        let (g_rest, g_top) = grads.split_at_mut(8);
        let (gw, gb) = g_top.split_at_mut(1);
        let mut g_hdec = dense_backward(&h_dec, &t[8], &g_logit, &mut gw[0], &mut gb[0], true).expect("requested");
        relu_backward(&h_dec, &mut g_hdec);
        let (g_enc, g_dec) = g_rest.split_at_mut(6);
        let (gw, gb) = g_dec.split_at_mut(1);
        let g_z = dense_backward(&zt, &t[6], &g_hdec, &mut gw[0], &mut gb[0], true).expect("requested");

        let mut g_mu = Vec::with_capacity(code.mu.len());
        let mut g_lv = Vec::with_capacity(code.mu.len());
        for j in 0..code.mu.len() {
            let sigma = (0.5 * code.log_var[j]).exp();
            g_mu.push(g_z.data()[j] + code.mu[j]);
            g_lv.push(g_z.data()[j] * code.eps[j] * 0.5 * sigma + 0.5 * (sigma * sigma - 1.0));
        }
        let (g_first, g_heads) = g_enc.split_at_mut(2);
        let (g_mu_part, g_lv_part) = g_heads.split_at_mut(2);
        let (gw, gb) = g_mu_part.split_at_mut(1);
        let mut g_henc =
            dense_backward(&h_enc, &t[2], &Tensor::vector(g_mu), &mut gw[0], &mut gb[0], true).expect("requested");
        let (gw, gb) = g_lv_part.split_at_mut(1);
        let g_from_lv =
            dense_backward(&h_enc, &t[4], &Tensor::vector(g_lv), &mut gw[0], &mut gb[0], true).expect("requested");
        g_henc.add_assign(&g_from_lv);
        relu_backward(&h_enc, &mut g_henc);
        let (gw, gb) = g_first.split_at_mut(1);
        dense_backward(&xt, &t[0], &g_henc, &mut gw[0], &mut gb[0], false);
        Ok(loss)
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.tensors.iter().map(|p| Tensor::zeros(p.shape())).collect()
    }

    pub fn to_model_file(&self, seed: u64, config: Option<serde_json::Value>) -> ModelFile {
        ModelFile {
            header: ModelHeader {
                kind: ModelKind::Vae,
                architecture: None,
                fingerprint: None,
                layout: Some(serde_json::to_value(self.layout).expect("layout serializes")),
                shapes: self.layout.param_shapes(),
                seed,
                config,
            },
            tensors: self.tensors.clone(),
        }
    }

    pub fn from_model_file(file: ModelFile) -> Result<Self> {
        if file.header.kind != ModelKind::Vae {
            return Err(Error::Format("model file holds a classifier, not a VAE".into()));
        }
        let layout = file.header.layout.ok_or_else(|| Error::Format("VAE without layout".into()))?;
        let layout: VaeLayout =
            serde_json::from_value(layout).map_err(|e| Error::Format(format!("bad VAE layout: {e}")))?;
        Self::from_tensors(layout, file.tensors).map_err(|e| Error::Format(e.to_string()))
    }
}

fn relu(t: Tensor) -> Tensor {
    t.map(|v| v.max(0.0))
}

fn relu_backward(out: &Tensor, grad: &mut Tensor) {
    for (g, &o) in grad.data_mut().iter_mut().zip(out.data()) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `z = mu + exp(log_var / 2) * eps`, elementwise.
pub fn reparameterize(mu: &[f64], log_var: &[f64], eps: &[f64]) -> Vec<f64> {
    mu.iter().zip(log_var).zip(eps).map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e).collect()
}

/// `KL(N(mu, exp(log_var)) || N(0, 1)) = -1/2 sum(1 + log_var - mu^2 - exp(log_var))`.
pub fn kl_gaussian(mu: &[f64], log_var: &[f64]) -> f64 {
    -0.5 * mu.iter().zip(log_var).map(|(&m, &lv)| 1.0 + lv - m * m - lv.exp()).sum::<f64>()
}

/// Bernoulli log-likelihood of `x` under `recon`, minus the KL term.
pub fn elbo(x: &[f64], recon: &[f64], mu: &[f64], log_var: &[f64]) -> f64 {
    let ll: f64 = x
        .iter()
        .zip(recon)
        .map(|(&xi, &r)| {
            let r = r.clamp(RECON_EPS, 1.0 - RECON_EPS);
            xi * r.ln() + (1.0 - xi) * (1.0 - r).ln()
        })
        .sum();
    ll - kl_gaussian(mu, log_var)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeConfig {
    pub hidden: usize,
    pub latent: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self { hidden: 256, latent: 2, learning_rate: 5e-4, momentum: 0.9, batch_size: 25, epochs: 20, seed: 0 }
    }
}

impl VaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.latent == 0 {
            return invalid("hidden and latent sizes must be positive");
        }
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

/// Trains a fresh VAE on images in `[0, 1]^N`. Returns the parameters and
/// the mean negative ELBO of each epoch's mini-batches.
pub fn train_vae(data: &[Vec<f64>], config: &VaeConfig) -> Result<(VaeParams, Vec<f64>)> {
    config.validate()?;
    let first = data.first().ok_or_else(|| Error::InvalidInput("VAE training set is empty".into()))?;
    let layout = VaeLayout::new(first.len(), config.hidden, config.latent)?;
    let mut params = VaeParams::init(layout, config.seed);
    for x in data {
        params.check_input(x)?;
    }
    let history = train_vae_from(&mut params, data, config)?;
    Ok((params, history))
}

/// Continues training existing parameters.
pub fn train_vae_from(params: &mut VaeParams, data: &[Vec<f64>], config: &VaeConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if data.is_empty() {
        return invalid("VAE training set is empty");
    }
    let latent = params.layout.latent;
    let mut opt = Nesterov::new(params.tensors(), config.learning_rate, config.momentum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5641_4500);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let noise: Vec<Vec<f64>> =
                batch.iter().map(|_| (0..latent).map(|_| rng.sample(StandardNormal)).collect()).collect();
            let parts: Vec<(f64, Vec<Tensor>)> = batch
                .par_chunks(GRAD_CHUNK)
                .zip(noise.par_chunks(GRAD_CHUNK))
                .map(|(idx, eps)| {
                    let mut grads = params.zero_grads();
                    let mut loss = 0.0;
                    for (&i, e) in idx.iter().zip(eps) {
                        loss += params.loss_and_grad(&data[i], e, &mut grads)?;
                    }
                    Ok((loss, grads))
                })
                .collect::<Result<_>>()?;
            let mut parts = parts.into_iter();
            let (mut loss, mut grads) = parts.next().expect("batch is non-empty");
            for (l, g) in parts {
                loss += l;
                grads.iter_mut().zip(&g).for_each(|(a, b)| a.add_assign(b));
            }
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("negative ELBO became non-finite in epoch {}", epoch + 1)));
            }
            let inv = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(inv));
            opt.step(params.tensors_mut(), &grads)?;
            total += loss;
        }
        history.push(total / data.len() as f64);
    }
    Ok(history)
}

/// Decodes a `grid`×`grid` lattice over `[-radius, radius]^2`, row-major
/// with the first latent coordinate along columns. No sampling is done.
pub fn latent_grid(params: &VaeParams, grid: usize, radius: f64) -> Result<Vec<Vec<f64>>> {
    if params.layout.latent != 2 {
        return Err(Error::UnsupportedConfig(format!(
            "latent grid needs a 2-D latent space, model has {}",
            params.layout.latent
        )));
    }
    if grid == 0 || !(radius >= 0.0 && radius.is_finite()) {
        return invalid(format!("grid must be positive and radius finite, got {grid} and {radius}"));
    }
    let coord = |i: usize| if grid == 1 { 0.0 } else { -radius + 2.0 * radius * i as f64 / (grid - 1) as f64 };
    let mut tiles = Vec::with_capacity(grid * grid);
    for row in 0..grid {
        for col in 0..grid {
            tiles.push(params.decode(&[coord(col), coord(row)])?);
        }
    }
    Ok(tiles)
}

/// Packs square tiles (values in `[0, 1]`) into one gray image.
pub fn mosaic(tiles: &[Vec<f64>], grid: usize) -> Result<ImageBuffer> {
    if grid == 0 || tiles.len() != grid * grid {
        return invalid(format!("{} tiles do not form a {grid}x{grid} grid", tiles.len()));
    }
    let n = tiles[0].len();
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n || tiles.iter().any(|t| t.len() != n) {
        return invalid("mosaic tiles must all be the same square size");
    }
    let full = grid * side;
    ImageBuffer::from_fn_gray(full, full, |x, y| {
        let tile = &tiles[(y / side) * grid + x / side];
        (tile[(y % side) * side + x % side].clamp(0.0, 1.0) * 255.0).round() as u8
    })
}
