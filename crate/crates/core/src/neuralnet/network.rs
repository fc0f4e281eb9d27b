use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layers::{self, softmax};
use super::Tensor;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
    Softmax,
}

/// One layer of a network description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d { filters: usize, kernel: usize, activation: Activation },
    Maxpool2x2,
    Dropout { rate: f64 },
    Flatten,
    Dense { units: usize, activation: Activation },
    Relu,
    Softmax,
}

impl LayerSpec {
    fn activation(&self) -> Option<Activation> {
        match self {
            LayerSpec::Conv2d { activation, .. } | LayerSpec::Dense { activation, .. } => Some(*activation),
            LayerSpec::Relu => Some(Activation::Relu),
            LayerSpec::Softmax => Some(Activation::Softmax),
            _ => None,
        }
    }

    fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. })
    }

    /// Row label in the style of the parameter table.
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "Convolution2D",
            LayerSpec::Maxpool2x2 => "MaxPooling2D",
            LayerSpec::Dropout { .. } => "Dropout",
            LayerSpec::Flatten => "Flatten",
            LayerSpec::Dense { .. } => "Dense",
            LayerSpec::Relu => "ReLU",
            LayerSpec::Softmax => "Softmax",
        }
    }
}

/// Input shape plus layer list. Validated on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// `[height, width, channels]`.
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

/// One row of [`Architecture::summary`].
#[derive(Clone, Debug, PartialEq)]
pub struct LayerSummary {
    pub name: String,
    pub output_shape: Vec<usize>,
    pub params: usize,
}

impl Architecture {
    pub fn new(input: [usize; 3], layers: Vec<LayerSpec>) -> Result<Self> {
        let arch = Self { input, layers };
        arch.output_shapes()?;
        Ok(arch)
    }

    /// Two 3×3 convolutions (32, 64 filters), 2×2 max pooling, dropout,
    /// a 128-unit hidden layer, dropout and a 10-way softmax.
    pub fn figure1(input_size: usize, channels: usize, dropout: (f64, f64)) -> Result<Self> {
        Self::new(
            [input_size, input_size, channels],
            vec![
                LayerSpec::Conv2d { filters: 32, kernel: 3, activation: Activation::Relu },
                LayerSpec::Conv2d { filters: 64, kernel: 3, activation: Activation::Relu },
                LayerSpec::Maxpool2x2,
                LayerSpec::Dropout { rate: dropout.0 },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 128, activation: Activation::Relu },
                LayerSpec::Dropout { rate: dropout.1 },
                LayerSpec::Dense { units: 10, activation: Activation::Softmax },
            ],
        )
    }

    /// Shape after every layer; errors on any incompatibility.
    pub fn output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        if self.input.contains(&0) {
            return invalid(format!("input shape {:?} has a zero extent", self.input));
        }
        let mut shape = self.input.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match (layer, shape.as_slice()) {
                (LayerSpec::Conv2d { filters, kernel, .. }, &[h, w, _]) => {
                    if *filters == 0 || *kernel == 0 || *kernel > h || *kernel > w {
                        return invalid(format!("layer {i}: conv {kernel}x{kernel}/{filters} on {h}x{w}"));
                    }
                    vec![h - kernel + 1, w - kernel + 1, *filters]
                }
                (LayerSpec::Maxpool2x2, &[h, w, c]) => {
                    if h % 2 != 0 || w % 2 != 0 {
                        return invalid(format!("layer {i}: max pooling needs even extents, got {h}x{w}"));
                    }
                    vec![h / 2, w / 2, c]
                }
                (LayerSpec::Flatten, s) => vec![s.iter().product()],
                (LayerSpec::Dense { units, .. }, &[_]) if *units > 0 => vec![*units],
                (LayerSpec::Dropout { rate }, s) => {
                    if !(0.0..1.0).contains(rate) {
                        return invalid(format!("layer {i}: dropout rate {rate} outside [0, 1)"));
                    }
                    s.to_vec()
                }
                (LayerSpec::Relu | LayerSpec::Softmax, s) => s.to_vec(),
                (l, s) => return invalid(format!("layer {i}: {l:?} cannot take input of shape {s:?}")),
            };
            out.push(shape.clone());
        }
        let softmaxes: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.activation() == Some(Activation::Softmax))
            .map(|(i, _)| i)
            .collect();
        if softmaxes != [self.layers.len().wrapping_sub(1)] {
            return invalid("network needs exactly one softmax, on its final layer");
        }
        Ok(out)
    }

    pub fn num_classes(&self) -> usize {
        self.output_shapes().expect("validated").last().map(|s| s.iter().product()).unwrap_or(0)
    }

    /// Trainable parameters per layer: `K*K*Cin*Cout + Cout` for
    /// convolutions, `N*M + M` for dense layers, 0 otherwise.
    pub fn count_params(&self) -> Vec<usize> {
        self.param_shapes_per_layer().iter().map(|p| p.iter().map(|s| s.iter().product::<usize>()).sum()).collect()
    }

    pub fn total_params(&self) -> usize {
        self.count_params().iter().sum()
    }

    /// Weight and bias shapes per layer (empty for parameter-free layers).
    pub fn param_shapes_per_layer(&self) -> Vec<Vec<Vec<usize>>> {
        let mut shape = self.input.to_vec();
        let shapes = self.output_shapes().unwrap_or_default();
        self.layers
            .iter()
            .zip(shapes)
            .map(|(layer, next)| {
                let p = match layer {
                    LayerSpec::Conv2d { filters, kernel, .. } => {
                        vec![vec![*kernel, *kernel, shape[2], *filters], vec![*filters]]
                    }
                    LayerSpec::Dense { units, .. } => vec![vec![shape[0], *units], vec![*units]],
                    _ => vec![],
                };
                shape = next;
                p
            })
            .collect()
    }

    /// Flat list of parameter tensor shapes in layer order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.param_shapes_per_layer().into_iter().flatten().collect()
    }

    /// Table rows with Keras-style names, e.g. `convolution2d_1`.
    pub fn summary(&self) -> Vec<LayerSummary> {
        let shapes = self.output_shapes().expect("validated");
        let counts = self.count_params();
        let mut seen = std::collections::HashMap::new();
        self.layers
            .iter()
            .zip(shapes)
            .zip(counts)
            .map(|((l, s), p)| {
                let n = seen.entry(l.kind_name()).or_insert(0);
                *n += 1;
                LayerSummary { name: format!("{}_{}", l.kind_name().to_lowercase(), n), output_shape: s, params: p }
            })
            .collect()
    }

    /// Hex digest of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("architecture serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Architecture plus parameter tensors `[W_1, b_1, W_2, b_2, ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    params: Vec<Tensor>,
    offsets: Vec<Option<usize>>,
}

/// Per-layer values saved by a forward pass for the backward pass.
pub struct Trace {
    /// `activations[0]` is the input, `activations[i + 1]` the output of layer `i`.
    activations: Vec<Tensor>,
    pool_argmax: Vec<Option<Vec<usize>>>,
    dropout_masks: Vec<Option<Vec<f64>>>,
}

impl Trace {
    pub fn output(&self) -> &Tensor {
        self.activations.last().expect("non-empty")
    }
}

impl Network {
    pub fn from_params(arch: Architecture, params: Vec<Tensor>) -> Result<Self> {
        let expected = arch.param_shapes();
        if expected.len() != params.len() || expected.iter().zip(&params).any(|(s, p)| s.as_slice() != p.shape()) {
            return Err(Error::Format(format!(
                "parameter shapes {:?} do not match architecture {:?}",
                params.iter().map(|p| p.shape().to_vec()).collect::<Vec<_>>(),
                expected
            )));
        }
        let mut offsets = Vec::with_capacity(arch.layers.len());
        let mut next = 0;
        for l in &arch.layers {
            if l.has_params() {
                offsets.push(Some(next));
                next += 2;
            } else {
                offsets.push(None);
            }
        }
        Ok(Self { arch, params, offsets })
    }

    /// Every parameter zero.
    pub fn zeros(arch: Architecture) -> Self {
        let params = arch.param_shapes().iter().map(|s| Tensor::zeros(s)).collect();
        Self::from_params(arch, params).expect("shapes from the architecture")
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<Tensor> {
        self.params
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.arch.input
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape() != self.arch.input {
            return invalid(format!("input shape {:?}, network expects {:?}", input.shape(), self.arch.input));
        }
        Ok(())
    }

    /// Forward pass keeping everything the backward pass needs. Dropout is
    /// active only when `rng` is given.
    pub fn forward_trace(&self, input: &Tensor, mut rng: Option<&mut ChaCha8Rng>) -> Result<Trace> {
        self.check_input(input)?;
        let n = self.arch.layers.len();
        let mut activations = Vec::with_capacity(n + 1);
        let mut pool_argmax = vec![None; n];
        let mut dropout_masks = vec![None; n];
        activations.push(input.clone());
        for (i, layer) in self.arch.layers.iter().enumerate() {
            let x = &activations[i];
            let y = match layer {
                LayerSpec::Conv2d { activation, .. } => {
                    let o = self.offsets[i].expect("conv has params");
                    activate(layers::conv2d(x, &self.params[o], &self.params[o + 1])?, *activation)
                }
                LayerSpec::Dense { activation, .. } => {
                    let o = self.offsets[i].expect("dense has params");
                    activate(layers::dense(x, &self.params[o], &self.params[o + 1])?, *activation)
                }
                LayerSpec::Maxpool2x2 => {
                    let (y, arg) = layers::maxpool2x2(x)?;
                    pool_argmax[i] = Some(arg);
                    y
                }
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(r) => {
                        let (y, mask) = layers::dropout(x, *rate, r, true)?;
                        dropout_masks[i] = mask;
                        y
                    }
                    None => x.clone(),
                },
                LayerSpec::Flatten => x.clone().reshape(&[x.len()])?,
                LayerSpec::Relu => layers::relu(x),
                LayerSpec::Softmax => activate(x.clone(), Activation::Softmax),
            };
            activations.push(y);
        }
        Ok(Trace { activations, pool_argmax, dropout_masks })
    }

    /// Class probabilities in inference mode.
    pub fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input, None)?.output().data().to_vec())
    }

    /// Gradient of `-log p[label]` for one traced sample, accumulated into
    /// `grads`. Returns the sample's loss.
    pub fn backward(&self, trace: &Trace, label: usize, grads: &mut [Tensor]) -> Result<f64> {
        let probs = trace.output().data();
        if label >= probs.len() {
            return invalid(format!("label {label} out of range for {} classes", probs.len()));
        }
        let loss = -probs[label].max(layers::PROB_FLOOR).ln();

        // softmax + NLL: gradient w.r.t. the logits is p - onehot
        let mut grad = Tensor::from_vec(trace.output().shape().to_vec(), probs.to_vec())?;
        grad.data_mut()[label] -= 1.0;
        let mut at_logits = true;

        for i in (0..self.arch.layers.len()).rev() {
            let input = &trace.activations[i];
            let output = &trace.activations[i + 1];
            let need_input_grad = i > 0;
            let layer = &self.arch.layers[i];
            if !at_logits && layer.activation() == Some(Activation::Relu) {
                layers::relu_backward(output, &mut grad);
            }
            at_logits = false;
            grad = match layer {
                LayerSpec::Conv2d { .. } => {
                    let o = self.offsets[i].expect("conv has params");
                    let (gw, gb) = split_pair(grads, o);
                    match layers::conv2d_backward(input, &self.params[o], &grad, gw, gb, need_input_grad) {
                        Some(g) => g,
                        None => break,
                    }
                }
                LayerSpec::Dense { .. } => {
                    let o = self.offsets[i].expect("dense has params");
                    let (gw, gb) = split_pair(grads, o);
                    match layers::dense_backward(input, &self.params[o], &grad, gw, gb, need_input_grad) {
                        Some(g) => g,
                        None => break,
                    }
                }
                LayerSpec::Maxpool2x2 => layers::maxpool2x2_backward(
                    input.shape(),
                    trace.pool_argmax[i].as_ref().expect("pool traced"),
                    &grad,
                ),
                LayerSpec::Dropout { .. } => {
                    if let Some(mask) = &trace.dropout_masks[i] {
                        for (g, m) in grad.data_mut().iter_mut().zip(mask) {
                            *g *= m;
                        }
                    }
                    grad
                }
                LayerSpec::Flatten => grad.reshape(input.shape())?,
                LayerSpec::Relu | LayerSpec::Softmax => grad,
            };
        }
        Ok(loss)
    }

    /// Batch-averaged loss and gradients (inference-mode dropout unless
    /// `dropout_seed` is set, in which case sample `k` uses a generator
    /// seeded from `dropout_seed` and `k`).
    pub fn loss_and_grads(
        &self,
        inputs: &[&Tensor],
        labels: &[usize],
        dropout_seed: Option<u64>,
    ) -> Result<(f64, Vec<Tensor>)> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return invalid(format!("{} inputs for {} labels", inputs.len(), labels.len()));
        }
        let seeds: Vec<Option<u64>> = (0..inputs.len()).map(|k| dropout_seed.map(|s| mix_seed(s, k as u64))).collect();
        let (loss, mut grads) = self.accumulate(inputs, labels, &seeds)?;
        let inv = 1.0 / inputs.len() as f64;
        grads.iter_mut().for_each(|g| g.scale(inv));
        Ok((loss * inv, grads))
    }

    /// Summed loss and gradients over samples, in order. `seeds[k]` enables
    /// dropout for sample `k`.
    pub fn accumulate(
        &self,
        inputs: &[&Tensor],
        labels: &[usize],
        seeds: &[Option<u64>],
    ) -> Result<(f64, Vec<Tensor>)> {
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        for ((x, &y), seed) in inputs.iter().zip(labels).zip(seeds) {
            let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
            let trace = self.forward_trace(x, rng.as_mut())?;
            loss += self.backward(&trace, y, &mut grads)?;
        }
        Ok((loss, grads))
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| Tensor::zeros(p.shape())).collect()
    }
}

fn split_pair(grads: &mut [Tensor], o: usize) -> (&mut Tensor, &mut Tensor) {
    let (a, b) = grads[o..o + 2].split_at_mut(1);
    (&mut a[0], &mut b[0])
}

fn activate(t: Tensor, act: Activation) -> Tensor {
    match act {
        Activation::None => t,
        Activation::Relu => layers::relu(&t),
        Activation::Softmax => {
            let shape = t.shape().to_vec();
            Tensor::from_vec(shape, softmax(t.data())).expect("same length")
        }
    }
}

/// SplitMix64-style combination of a seed and a stream index.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure1_counts() {
        let a = Architecture::figure1(28, 1, (0.25, 0.5)).unwrap();
        assert_eq!(a.count_params(), vec![320, 18496, 0, 0, 0, 1_179_776, 0, 1290]);
        assert_eq!(a.total_params(), 1_199_882);
        let shapes = a.output_shapes().unwrap();
        assert_eq!(shapes[0], vec![26, 26, 32]);
        assert_eq!(shapes[1], vec![24, 24, 64]);
        assert_eq!(shapes[2], vec![12, 12, 64]);
        assert_eq!(shapes[4], vec![9216]);
        assert_eq!(shapes[7], vec![10]);
        let names: Vec<String> = a.summary().into_iter().map(|r| r.name).collect();
        assert_eq!(names[0], "convolution2d_1");
        assert_eq!(names[7], "dense_2");
    }

    #[test]
    fn three_channel_first_layer() {
        let a = Architecture::figure1(28, 3, (0.25, 0.5)).unwrap();
        assert_eq!(a.count_params()[0], 32 * (3 * 3 * 3) + 32);
    }

    #[test]
    fn empty_network_counts_zero() {
        let a = Architecture { input: [4, 4, 1], layers: vec![] };
        assert_eq!(a.total_params(), 0);
        assert!(a.output_shapes().is_err(), "no terminal softmax");
    }

    #[test]
    fn rejects_bad_layouts() {
        let soft = LayerSpec::Dense { units: 3, activation: Activation::Softmax };
        assert!(Architecture::new([4, 4, 1], vec![soft.clone()]).is_err(), "dense on 3-D input");
        assert!(Architecture::new([5, 5, 1], vec![LayerSpec::Maxpool2x2, LayerSpec::Flatten, soft.clone()]).is_err());
        assert!(Architecture::new([4, 4, 1], vec![LayerSpec::Flatten, soft.clone(), LayerSpec::Softmax]).is_err());
        assert!(Architecture::new([4, 4, 1], vec![LayerSpec::Flatten, soft]).is_ok());
    }

    #[test]
    fn fingerprint_tracks_architecture() {
        let a = Architecture::figure1(28, 1, (0.25, 0.5)).unwrap();
        let b = Architecture::figure1(56, 1, (0.25, 0.5)).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn zero_net_bias_gradient_is_softmax_minus_onehot() {
        let arch = Architecture::new(
            [4, 4, 1],
            vec![LayerSpec::Flatten, LayerSpec::Dense { units: 3, activation: Activation::Softmax }],
        )
        .unwrap();
        let net = Network::zeros(arch);
        let x = Tensor::zeros(&[4, 4, 1]);
        let (loss, g) = net.loss_and_grads(&[&x], &[1], None).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
        let third = 1.0 / 3.0;
        assert_eq!(g[1].data(), &[third, third - 1.0, third]);
    }
}
