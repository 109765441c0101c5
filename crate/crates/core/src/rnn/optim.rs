//! RMSprop.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    mean_square: Vec<f64>,
}

impl RmsProp {
    pub fn new(len: usize, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        Self { learning_rate, decay, epsilon, mean_square: vec![0.0; len] }
    }

    pub fn mean_square(&self) -> &[f64] {
        &self.mean_square
    }

    /// `v <- decay * v + (1 - decay) * g^2`, then `w <- w - lr * g / (sqrt(v) + eps)`.
    pub fn step(&mut self, weights: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.mean_square.len();
        if weights.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
        }
        if grads.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: grads.len() });
        }
        for ((w, &g), v) in weights.iter_mut().zip(grads).zip(&mut self.mean_square) {
            *v = self.decay * *v + (1.0 - self.decay) * g * g;
            *w -= self.learning_rate * g / (libm::sqrt(*v) + self.epsilon);
        }
        Ok(())
    }
}
