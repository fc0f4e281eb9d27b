use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{invalid, Error, Result};

/// Nesterov accelerated gradient.
///
/// With `g` the batch-averaged loss gradient, each step applies
///
/// ```text
/// v <- mu * v - lr * g
/// w <- w + mu * v - lr * g
/// ```
///
/// which is the usual look-ahead form `w <- w + mu^2 v_prev - (1 + mu) lr g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nesterov {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Tensor>,
}

impl Nesterov {
    /// Zero velocity for every parameter tensor.
    pub fn new(params: &[Tensor], learning_rate: f64, momentum: f64) -> Result<Self> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return invalid(format!("learning rate must be positive, got {learning_rate}"));
        }
        if !(0.0..1.0).contains(&momentum) {
            return invalid(format!("momentum must be in [0, 1), got {momentum}"));
        }
        Ok(Self { learning_rate, momentum, velocity: params.iter().map(|p| Tensor::zeros(p.shape())).collect() })
    }

    pub fn velocity(&self) -> &[Tensor] {
        &self.velocity
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.velocity.len() {
            return invalid("parameter, gradient and velocity lists differ in length");
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return invalid(format!("gradient {i} has shape {:?}, parameter {:?}", g.shape(), p.shape()));
            }
            if !g.all_finite() {
                return Err(Error::Numeric(format!("non-finite gradient in parameter tensor {i}")));
            }
        }
        let (mu, lr) = (self.momentum, self.learning_rate);
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            for ((w, &gv), vel) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                *vel = mu * *vel - lr * gv;
                *w += mu * *vel - lr * gv;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(v: f64) -> Vec<Tensor> {
        vec![Tensor::vector(vec![v])]
    }

    #[test]
    fn hand_evaluated_steps() {
        let mut w = one(0.0);
        let mut opt = Nesterov::new(&w, 0.1, 0.9).unwrap();
        opt.step(&mut w, &one(1.0)).unwrap();
        assert!((opt.velocity()[0].data()[0] + 0.1).abs() < 1e-15);
        assert!((w[0].data()[0] + 0.19).abs() < 1e-15);

        let before = w[0].data()[0];
        opt.step(&mut w, &one(1.0)).unwrap();
        assert!((opt.velocity()[0].data()[0] + 0.19).abs() < 1e-15);
        assert!((w[0].data()[0] - before + 0.271).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_settings_and_gradients() {
        let w = one(0.0);
        assert!(Nesterov::new(&w, 0.0, 0.9).is_err());
        assert!(Nesterov::new(&w, 0.1, 1.0).is_err());
        let mut w = one(2.0);
        let mut opt = Nesterov::new(&w, 0.1, 0.5).unwrap();
        assert!(matches!(opt.step(&mut w, &one(f64::NAN)), Err(Error::Numeric(_))));
        assert_eq!(w[0].data()[0], 2.0);
    }

    proptest! {
        #[test]
        fn zero_momentum_is_sgd(w0 in -10.0f64..10.0, g in -10.0f64..10.0, lr in 1e-4f64..1.0) {
            let mut w = one(w0);
            let mut opt = Nesterov::new(&w, lr, 0.0).unwrap();
            opt.step(&mut w, &one(g)).unwrap();
            prop_assert_eq!(w[0].data()[0], w0 - lr * g);
        }

        #[test]
        fn closed_form_matches(gs in proptest::collection::vec(-5.0f64..5.0, 1..8), mu in 0.0f64..0.99, lr in 1e-3f64..0.5) {
            let mut w = one(0.0);
            let mut opt = Nesterov::new(&w, lr, mu).unwrap();
            let (mut wc, mut vc) = (0.0f64, 0.0f64);
            for g in gs {
                opt.step(&mut w, &one(g)).unwrap();
                wc += mu * mu * vc - (1.0 + mu) * lr * g;
                vc = mu * vc - lr * g;
            }
            prop_assert!((w[0].data()[0] - wc).abs() < 1e-9);
        }
    }
}
