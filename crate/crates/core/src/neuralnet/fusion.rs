use super::train::argmax;
use crate::error::{invalid, Error, Result};

fn check_distribution(p: &[f64], which: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid(format!("{which} probabilities must be finite and non-negative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return invalid(format!("{which} probabilities sum to {s}"));
    }
    Ok(())
}

/// Combines the two sub-network outputs by element-wise product.
///
/// The product is renormalized to a probability vector; the predicted class
/// is its argmax, lowest index on ties.
pub fn fuse_predict(probs_low: &[f64], probs_high: &[f64]) -> Result<(Vec<f64>, usize)> {
    if probs_low.len() != probs_high.len() {
        return invalid(format!("cannot fuse {} and {} classes", probs_low.len(), probs_high.len()));
    }
    check_distribution(probs_low, "low-resolution")?;
    check_distribution(probs_high, "high-resolution")?;
    let product: Vec<f64> = probs_low.iter().zip(probs_high).map(|(a, b)| a * b).collect();
    let total: f64 = product.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateFusion);
    }
    let fused: Vec<f64> = product.iter().map(|p| p / total).collect();
    let class = argmax(&fused);
    Ok((fused, class))
}
