//! Fully connected layer.

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::tensor::Tensor;
use super::NnError;

/// `y = φ(W·x + b)` over a flat input vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `[outputs, inputs]`.
    pub weights: Tensor,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Vec<f64>,
    preact: Vec<f64>,
}

impl Dense {
    pub fn outputs(&self) -> usize {
        self.weights.shape[0]
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape[1]
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, DenseCache), NnError> {
        if input.size() != self.inputs() {
            return Err(NnError::ShapeMismatch(format!(
                "dense of {} inputs applied to {:?}",
                self.inputs(),
                input.shape
            )));
        }
        let (m, n) = (self.outputs(), self.inputs());
        let mut preact = vec![0.0; m];
        for o in 0..m {
            let mut acc = self.bias[o];
            let row = &self.weights.data[o * n..(o + 1) * n];
            for (w, x) in row.iter().zip(&input.data) {
                acc += w * x;
            }
            preact[o] = acc;
        }
        let out: Vec<f64> = preact.iter().map(|&z| self.activation.apply(z)).collect();
        Ok((
            Tensor::from_vec(&[m], out)?,
            DenseCache { input: input.data.clone(), preact },
        ))
    }

    pub fn backward(
        &self,
        cache: &DenseCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, Tensor, Vec<f64>), NnError> {
        let (m, n) = (self.outputs(), self.inputs());
        if grad_out.size() != m {
            return Err(NnError::ShapeMismatch(format!(
                "dense backward gradient {:?} vs {m} outputs",
                grad_out.shape
            )));
        }
        let mut grad_w = self.weights.zeros_like();
        let mut grad_b = vec![0.0; m];
        let mut grad_in = vec![0.0; n];
        for o in 0..m {
            let g = grad_out.data[o] * self.activation.derivative(cache.preact[o]);
            grad_b[o] = g;
            for i in 0..n {
                grad_w.data[o * n + i] = g * cache.input[i];
                grad_in[i] += g * self.weights.data[o * n + i];
            }
        }
        Ok((Tensor::from_vec(&[n], grad_in)?, grad_w, grad_b))
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = self.weights.data.clone();
        out.extend(&self.bias);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let k = self.weights.data.len();
        self.weights.data.copy_from_slice(&params[..k]);
        self.bias.copy_from_slice(&params[k..]);
    }

    pub fn param_count(&self) -> usize {
        self.weights.data.len() + self.bias.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_is_w_x_plus_b() {
        let dense = Dense {
            weights: Tensor::from_vec(&[2, 3], vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.5]).unwrap(),
            bias: vec![1.0, -1.0],
            activation: Activation::Linear,
        };
        let x = Tensor::from_vec(&[3], vec![2.0, 4.0, 6.0]).unwrap();
        let y = dense.forward(&x).unwrap();
        assert_eq!(y.data, vec![2.0 - 6.0 + 1.0, 6.0 - 1.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dense = Dense {
            weights: Tensor::zeros(&[2, 3]),
            bias: vec![0.0; 2],
            activation: Activation::Linear,
        };
        let x = Tensor::zeros(&[4]);
        assert!(dense.forward(&x).is_err());
    }
}
