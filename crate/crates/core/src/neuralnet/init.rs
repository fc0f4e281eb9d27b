use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::network::{Architecture, LayerSpec, Network};
use super::Tensor;

/// Standard deviation of the normal draw for dense-layer weights.
pub const DENSE_WEIGHT_STD: f64 = 0.01;

/// Half-width `6 / (n_in + n_out)` of the uniform convolution-weight range,
/// with `n_in = K*K*Cin` and `n_out = K*K*Cout`.
///
/// Note this is the bound as printed, without the square root of the usual
/// Glorot rule, so conv weights start very small.
pub fn conv_bound(kernel: usize, cin: usize, cout: usize) -> f64 {
    let fan_in = kernel * kernel * cin;
    let fan_out = kernel * kernel * cout;
    6.0 / (fan_in + fan_out) as f64
}

/// How `n_in` and `n_out` are counted for the convolution bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Fans include the kernel area, as in [`conv_bound`].
    #[default]
    AsPrinted,
    /// Fans are channel counts: `6 / (Cin + Cout)`, a factor `K*K` wider.
    ChannelFan,
}

/// Seeded initialization.
///
/// Convolution weights are uniform in `[-W_b, W_b]` (see [`conv_bound`]),
/// dense weights are `N(0, 0.01^2)`. Biases start at 1 so ReLU units have a
/// non-zero derivative, except the output layer whose biases are 0.
pub fn init_params(arch: &Architecture, seed: u64) -> Network {
    init_params_with(arch, seed, InitScheme::AsPrinted)
}

/// [`init_params`] with a choice of convolution fan counting. Everything
/// except the conv bound is identical, including the random stream.
pub fn init_params_with(arch: &Architecture, seed: u64, scheme: InitScheme) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, DENSE_WEIGHT_STD).expect("positive std");
    let last_param_layer =
        arch.layers.iter().rposition(|l| matches!(l, LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. }));
    let mut params = Vec::new();
    for ((i, layer), shapes) in arch.layers.iter().enumerate().zip(arch.param_shapes_per_layer()) {
        let (wshape, bshape) = match shapes.as_slice() {
            [w, b] => (w, b),
            _ => continue,
        };
        let n: usize = wshape.iter().product();
        let weights: Vec<f64> = match layer {
            LayerSpec::Conv2d { kernel, filters, .. } => {
                let b = match scheme {
                    InitScheme::AsPrinted => conv_bound(*kernel, wshape[2], *filters),
                    InitScheme::ChannelFan => conv_bound(1, wshape[2], *filters),
                };
                (0..n).map(|_| rng.random_range(-b..=b)).collect()
            }
            _ => (0..n).map(|_| normal.sample(&mut rng)).collect(),
        };
        let bias = if Some(i) == last_param_layer { 0.0 } else { 1.0 };
        params.push(Tensor::from_vec(wshape.clone(), weights).expect("shape from architecture"));
        params.push(Tensor::full(bshape, bias));
    }
    Network::from_params(arch.clone(), params).expect("shapes from architecture")
}
