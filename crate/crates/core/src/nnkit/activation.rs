//! Pointwise activations and the softmax.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// dφ/dz at preactivation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable softmax over one axis.
pub fn softmax(input: &Tensor, axis: usize) -> Result<Tensor, NnError> {
    if axis >= input.rank() {
        return Err(NnError::ShapeMismatch(format!(
            "softmax axis {axis} of shape {:?}",
            input.shape
        )));
    }
    if !input.all_finite() {
        return Err(NnError::NonFiniteInput);
    }
    let n = input.shape[axis];
    let outer: usize = input.shape[..axis].iter().product();
    let inner: usize = input.shape[axis + 1..].iter().product();
    let mut out = input.zeros_like();
    for o in 0..outer {
        for k in 0..inner {
            let idx = |i: usize| (o * n + i) * inner + k;
            let max = (0..n).map(|i| input.data[idx(i)]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for i in 0..n {
                let e = (input.data[idx(i)] - max).exp();
                out.data[idx(i)] = e;
                total += e;
            }
            for i in 0..n {
                out.data[idx(i)] /= total;
            }
        }
    }
    Ok(out)
}

/// Softmax Jacobian-vector product: given the forward output `y` and an
/// upstream gradient, both over `axis`.
pub fn softmax_backward(y: &Tensor, grad: &Tensor, axis: usize) -> Result<Tensor, NnError> {
    if y.shape != grad.shape {
        return Err(NnError::ShapeMismatch(format!(
            "softmax backward {:?} vs {:?}",
            y.shape, grad.shape
        )));
    }
    let n = y.shape[axis];
    let outer: usize = y.shape[..axis].iter().product();
    let inner: usize = y.shape[axis + 1..].iter().product();
    let mut out = y.zeros_like();
    for o in 0..outer {
        for k in 0..inner {
            let idx = |i: usize| (o * n + i) * inner + k;
            let dot: f64 = (0..n).map(|i| grad.data[idx(i)] * y.data[idx(i)]).sum();
            for i in 0..n {
                out.data[idx(i)] = y.data[idx(i)] * (grad.data[idx(i)] - dot);
            }
        }
    }
    Ok(out)
}
