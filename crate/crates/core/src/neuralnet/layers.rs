//! Forward and backward kernels for the individual layer types.
//!
//! Image activations are `H × W × C` tensors; convolution kernels are stored
//! as `K × K × Cin × Cout`, dense weights as `N × M`.

use rand::Rng;

use super::Tensor;
use crate::error::{invalid, Error, Result};

fn dims3(t: &Tensor, what: &str) -> Result<(usize, usize, usize)> {
    match *t.shape() {
        [h, w, c] => Ok((h, w, c)),
        _ => invalid(format!("{what} expects an HxWxC tensor, got shape {:?}", t.shape())),
    }
}

fn conv_dims(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize, usize, usize)> {
    let (h, w, cin) = dims3(input, "conv2d")?;
    let (k, cout) = match *kernels.shape() {
        [k1, k2, ci, co] if k1 == k2 && ci == cin => (k1, co),
        _ => {
            return invalid(format!("conv2d kernels {:?} incompatible with input {:?}", kernels.shape(), input.shape()))
        }
    };
    if bias.shape() != [cout] {
        return invalid(format!("conv2d bias {:?} should be [{cout}]", bias.shape()));
    }
    if k > h || k > w {
        return invalid(format!("kernel {k}x{k} larger than input {h}x{w}"));
    }
    Ok((h, w, cin, k, cout))
}

/// Valid cross-correlation plus per-channel bias.
pub fn conv2d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (h, w, cin, k, cout) = conv_dims(input, kernels, bias)?;
    let (oh, ow) = (h - k + 1, w - k + 1);
    let x = input.data();
    let wt = kernels.data();
    let mut out = vec![0.0; oh * ow * cout];
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &mut out[(oy * ow + ox) * cout..][..cout];
            row.copy_from_slice(bias.data());
            for ky in 0..k {
                for kx in 0..k {
                    let src = &x[((oy + ky) * w + ox + kx) * cin..][..cin];
                    let wbase = (ky * k + kx) * cin;
                    for (ci, &a) in src.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        let wrow = &wt[(wbase + ci) * cout..][..cout];
                        for (o, &wv) in row.iter_mut().zip(wrow) {
                            *o += a * wv;
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(vec![oh, ow, cout], out)
}

/// Gradients of a convolution. `grad_input` is skipped when not needed.
pub fn conv2d_backward(
    input: &Tensor,
    kernels: &Tensor,
    grad_out: &Tensor,
    grad_kernels: &mut Tensor,
    grad_bias: &mut Tensor,
    need_input_grad: bool,
) -> Option<Tensor> {
    let (h, w, cin) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (k, cout) = (kernels.shape()[0], kernels.shape()[3]);
    let (oh, ow) = (h - k + 1, w - k + 1);
    let x = input.data();
    let wt = kernels.data();
    let g = grad_out.data();
    let gw = grad_kernels.data_mut();
    let mut gx = need_input_grad.then(|| vec![0.0; x.len()]);

    for oy in 0..oh {
        for ox in 0..ow {
            let grow = &g[(oy * ow + ox) * cout..][..cout];
            for (b, &gv) in grad_bias.data_mut().iter_mut().zip(grow) {
                *b += gv;
            }
            for ky in 0..k {
                for kx in 0..k {
                    let sidx = ((oy + ky) * w + ox + kx) * cin;
                    let wbase = (ky * k + kx) * cin;
                    for ci in 0..cin {
                        let off = (wbase + ci) * cout;
                        let a = x[sidx + ci];
                        if a != 0.0 {
                            for (dw, &gv) in gw[off..off + cout].iter_mut().zip(grow) {
                                *dw += a * gv;
                            }
                        }
                        if let Some(gx) = gx.as_mut() {
                            let mut acc = 0.0;
                            for (&wv, &gv) in wt[off..off + cout].iter().zip(grow) {
                                acc += wv * gv;
                            }
                            gx[sidx + ci] += acc;
                        }
                    }
                }
            }
        }
    }
    gx.map(|d| Tensor::from_vec(input.shape().to_vec(), d).expect("same shape as input"))
}

/// 2×2 max pooling. Returns the pooled tensor and, for every output element,
/// the flat input index of the maximum (first maximum wins on ties).
pub fn maxpool2x2(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (h, w, c) = dims3(input, "maxpool2x2")?;
    if h % 2 != 0 || w % 2 != 0 {
        return invalid(format!("maxpool2x2 needs even extents, got {h}x{w}"));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = ((2 * oy) * w + 2 * ox) * c + ch;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::from_vec(vec![oh, ow, c], out)?, arg))
}

pub fn maxpool2x2_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut gx = Tensor::zeros(input_shape);
    let d = gx.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        d[i] += g;
    }
    gx
}

pub fn relu(input: &Tensor) -> Tensor {
    input.map(|z| z.max(0.0))
}

/// Zeroes the gradient wherever the ReLU output was not positive.
pub fn relu_backward(output: &Tensor, grad: &mut Tensor) {
    for (g, &o) in grad.data_mut().iter_mut().zip(output.data()) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

fn dense_dims(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize)> {
    let n = input.len();
    match *weights.shape() {
        [wn, m] if wn == n && bias.shape() == [m] && input.shape().len() == 1 => Ok((n, m)),
        _ => invalid(format!(
            "dense: input {:?}, weights {:?}, bias {:?} do not agree",
            input.shape(),
            weights.shape(),
            bias.shape()
        )),
    }
}

/// `x · W + b`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (_, m) = dense_dims(input, weights, bias)?;
    let mut out = bias.data().to_vec();
    for (&a, wrow) in input.data().iter().zip(weights.data().chunks_exact(m)) {
        if a == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(wrow) {
            *o += a * wv;
        }
    }
    Ok(Tensor::vector(out))
}

pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    grad_out: &Tensor,
    grad_weights: &mut Tensor,
    grad_bias: &mut Tensor,
    need_input_grad: bool,
) -> Option<Tensor> {
    let m = weights.shape()[1];
    let g = grad_out.data();
    for (b, &gv) in grad_bias.data_mut().iter_mut().zip(g) {
        *b += gv;
    }
    for (&a, gwrow) in input.data().iter().zip(grad_weights.data_mut().chunks_exact_mut(m)) {
        if a == 0.0 {
            continue;
        }
        for (dw, &gv) in gwrow.iter_mut().zip(g) {
            *dw += a * gv;
        }
    }
    need_input_grad.then(|| {
        let gx = weights.data().chunks_exact(m).map(|wrow| wrow.iter().zip(g).map(|(w, g)| w * g).sum()).collect();
        Tensor::vector(gx)
    })
}

/// Inverted dropout. In training mode each element is zeroed with
/// probability `rate` and survivors are scaled by `1 / (1 - rate)`; the
/// returned mask holds that per-element factor. Inference is the identity.
pub fn dropout(input: &Tensor, rate: f64, rng: &mut impl Rng, training: bool) -> Result<(Tensor, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return invalid(format!("dropout rate must be in [0, 1), got {rate}"));
    }
    if !training || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.len()).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
    let mut out = input.clone();
    for (o, m) in out.data_mut().iter_mut().zip(&mask) {
        *o *= m;
    }
    Ok((out, Some(mask)))
}

/// `exp(z_c) / sum_q exp(z_q)`, shifted by the maximum logit.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub const PROB_FLOOR: f64 = 1e-12;

/// Mean negative log-probability of the correct classes.
pub fn nll_loss(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probs.len() != labels.len() || probs.is_empty() {
        return invalid(format!("{} probability vectors for {} labels", probs.len(), labels.len()));
    }
    let mut total = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        if y >= p.len() {
            return invalid(format!("label {y} out of range for {} classes", p.len()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("probability vector sums to {s}")));
        }
        total -= p[y].max(PROB_FLOOR).ln();
    }
    Ok(total / probs.len() as f64)
}
