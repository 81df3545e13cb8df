//! 1D and 2D convolution with stride, dilation and all padding methods,
//! forward and backward.

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::pad::{pad_axis, pad_axis_backward, AxisPad};
use super::tensor::Tensor;
use super::NnError;

/// A 2D convolution layer over `[channels, height, width]` maps. Height is
/// the time axis and width the variables axis throughout this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    /// `[out_channels, in_channels, k_h, k_w]`.
    pub kernel: Tensor,
    pub bias: Vec<f64>,
    pub stride: (usize, usize),
    pub dilation: (usize, usize),
    pub pad_h: AxisPad,
    pub pad_w: AxisPad,
    pub activation: Activation,
}

/// Cached intermediates for the backward pass.
#[derive(Debug, Clone)]
pub struct Conv2dCache {
    padded: Tensor,
    preact: Tensor,
    input_shape: Vec<usize>,
}

impl Conv2dCache {
    /// Shape of the layer's output.
    pub fn preact_shape(&self) -> Vec<usize> {
        self.preact.shape.clone()
    }
}

fn out_extent(padded: usize, k: usize, dilation: usize, stride: usize) -> Result<usize, NnError> {
    let span = dilation * (k - 1) + 1;
    if padded < span {
        return Err(NnError::ShapeMismatch(format!(
            "kernel span {span} exceeds padded extent {padded}"
        )));
    }
    Ok((padded - span) / stride + 1)
}

impl Conv2d {
    pub fn out_channels(&self) -> usize {
        self.kernel.shape[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape[1]
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernel.shape[2], self.kernel.shape[3])
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, Conv2dCache), NnError> {
        if input.rank() != 3 || input.shape[0] != self.in_channels() {
            return Err(NnError::ShapeMismatch(format!(
                "conv2d over {:?} with kernel {:?}",
                input.shape, self.kernel.shape
            )));
        }
        let padded = pad_axis(&pad_axis(input, 1, &self.pad_h)?, 2, &self.pad_w)?;
        let (kh, kw) = self.kernel_size();
        let oh = out_extent(padded.shape[1], kh, self.dilation.0, self.stride.0)?;
        let ow = out_extent(padded.shape[2], kw, self.dilation.1, self.stride.1)?;
        let co = self.out_channels();
        let ci = self.in_channels();
        let mut preact = Tensor::zeros(&[co, oh, ow]);
        for o in 0..co {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = self.bias[o];
                    for c in 0..ci {
                        for u in 0..kh {
                            for v in 0..kw {
                                let y = i * self.stride.0 + u * self.dilation.0;
                                let x = j * self.stride.1 + v * self.dilation.1;
                                acc += self.kernel.at(&[o, c, u, v]) * padded.at(&[c, y, x]);
                            }
                        }
                    }
                    preact.set(&[o, i, j], acc);
                }
            }
        }
        let output = preact.map(|z| self.activation.apply(z));
        let cache = Conv2dCache { padded, preact, input_shape: input.shape.clone() };
        Ok((output, cache))
    }

    /// Gradients of the loss w.r.t. input, kernel and bias given the
    /// upstream output gradient.
    pub fn backward(
        &self,
        cache: &Conv2dCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, Tensor, Vec<f64>), NnError> {
        let (kh, kw) = self.kernel_size();
        let co = self.out_channels();
        let ci = self.in_channels();
        if grad_out.shape != cache.preact.shape {
            return Err(NnError::ShapeMismatch(format!(
                "conv2d backward gradient {:?} vs output {:?}",
                grad_out.shape, cache.preact.shape
            )));
        }
        let (oh, ow) = (grad_out.shape[1], grad_out.shape[2]);
        let mut grad_pre = grad_out.clone();
        for (g, z) in grad_pre.data.iter_mut().zip(&cache.preact.data) {
            *g *= self.activation.derivative(*z);
        }
        let mut grad_kernel = self.kernel.zeros_like();
        let mut grad_bias = vec![0.0; co];
        let mut grad_padded = cache.padded.zeros_like();
        for o in 0..co {
            for i in 0..oh {
                for j in 0..ow {
                    let g = grad_pre.at(&[o, i, j]);
                    if g == 0.0 {
                        continue;
                    }
                    grad_bias[o] += g;
                    for c in 0..ci {
                        for u in 0..kh {
                            for v in 0..kw {
                                let y = i * self.stride.0 + u * self.dilation.0;
                                let x = j * self.stride.1 + v * self.dilation.1;
                                grad_kernel.add_at(&[o, c, u, v], g * cache.padded.at(&[c, y, x]));
                                grad_padded.add_at(&[c, y, x], g * self.kernel.at(&[o, c, u, v]));
                            }
                        }
                    }
                }
            }
        }
        // Undo the padding: wrapped and mirrored positions accumulate onto
        // their sources.
        let h_orig = cache.input_shape[1];
        let grad_h = pad_axis_backward(&grad_padded, 2, cache.input_shape[2], &self.pad_w)?;
        let grad_input = pad_axis_backward(&grad_h, 1, h_orig, &self.pad_h)?;
        Ok((grad_input, grad_kernel, grad_bias))
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = self.kernel.data.clone();
        out.extend(&self.bias);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let k = self.kernel.data.len();
        self.kernel.data.copy_from_slice(&params[..k]);
        self.bias.copy_from_slice(&params[k..]);
    }

    pub fn param_count(&self) -> usize {
        self.kernel.data.len() + self.bias.len()
    }
}

/// A 1D convolution layer over `[channels, time]` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    /// `[out_channels, in_channels, k]`.
    pub kernel: Tensor,
    pub bias: Vec<f64>,
    pub stride: usize,
    pub dilation: usize,
    pub pad: AxisPad,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache(Conv2dCache);

impl Conv1d {
    pub fn out_channels(&self) -> usize {
        self.kernel.shape[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape[1]
    }

    fn as_2d(&self) -> Conv2d {
        let [co, ci, k] = [self.kernel.shape[0], self.kernel.shape[1], self.kernel.shape[2]];
        Conv2d {
            kernel: self.kernel.reshape(&[co, ci, k, 1]).expect("same size"),
            bias: self.bias.clone(),
            stride: (self.stride, 1),
            dilation: (self.dilation, 1),
            pad_h: self.pad,
            pad_w: AxisPad::valid(),
            activation: self.activation,
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, Conv1dCache), NnError> {
        if input.rank() != 2 {
            return Err(NnError::ShapeMismatch(format!("conv1d over {:?}", input.shape)));
        }
        let lifted = input.reshape(&[input.shape[0], input.shape[1], 1])?;
        let (out, cache) = self.as_2d().forward_cached(&lifted)?;
        let squeezed = out.reshape(&[out.shape[0], out.shape[1]])?;
        Ok((squeezed, Conv1dCache(cache)))
    }

    pub fn backward(
        &self,
        cache: &Conv1dCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, Tensor, Vec<f64>), NnError> {
        let lifted = grad_out.reshape(&[grad_out.shape[0], grad_out.shape[1], 1])?;
        let (gi, gk, gb) = self.as_2d().backward(&cache.0, &lifted)?;
        let gi = gi.reshape(&[gi.shape[0], gi.shape[1]])?;
        let [co, ci, k] = [self.kernel.shape[0], self.kernel.shape[1], self.kernel.shape[2]];
        let gk = gk.reshape(&[co, ci, k])?;
        Ok((gi, gk, gb))
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = self.kernel.data.clone();
        out.extend(&self.bias);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let k = self.kernel.data.len();
        self.kernel.data.copy_from_slice(&params[..k]);
        self.bias.copy_from_slice(&params[k..]);
    }

    pub fn param_count(&self) -> usize {
        self.kernel.data.len() + self.bias.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnkit::pad::PadMethod;

    fn conv2d(kernel: Tensor, pad_h: AxisPad, pad_w: AxisPad) -> Conv2d {
        let co = kernel.shape[0];
        Conv2d {
            kernel,
            bias: vec![0.0; co],
            stride: (1, 1),
            dilation: (1, 1),
            pad_h,
            pad_w,
            activation: Activation::Linear,
        }
    }

    #[test]
    fn identity_kernel_reproduces_the_input() {
        let input = Tensor::from_vec(&[1, 2, 3], vec![1.0, -2.0, 3.0, 4.0, 0.5, -1.0]).unwrap();
        let kernel = Tensor::from_vec(&[1, 1, 1, 1], vec![1.0]).unwrap();
        let conv = conv2d(kernel, AxisPad::valid(), AxisPad::valid());
        assert_eq!(conv.forward(&input).unwrap(), input);
    }

    #[test]
    fn all_ones_kernel_on_a_constant_map() {
        let input = Tensor::from_vec(&[1, 5, 5], vec![1.0; 25]).unwrap();
        let kernel = Tensor::from_vec(&[1, 1, 3, 3], vec![1.0; 9]).unwrap();
        let conv = conv2d(kernel, AxisPad::valid(), AxisPad::valid());
        let out = conv.forward(&input).unwrap();
        assert_eq!(out.shape, vec![1, 3, 3]);
        assert!(out.data.iter().all(|v| (*v - 9.0).abs() < 1e-12));
    }

    #[test]
    fn valid_output_shrinks_same_preserves() {
        let input = Tensor::zeros(&[1, 10, 6]);
        let kernel = Tensor::zeros(&[2, 1, 3, 3]);
        let valid = conv2d(kernel.clone(), AxisPad::valid(), AxisPad::valid());
        assert_eq!(valid.forward(&input).unwrap().shape, vec![2, 8, 4]);
        // Same padding: (k-1)/2 one side, k/2 the other keeps the extent.
        let same = Conv2d {
            pad_h: AxisPad::new(PadMethod::Same, 1),
            pad_w: AxisPad::new(PadMethod::Same, 1),
            ..valid
        };
        assert_eq!(same.forward(&input).unwrap().shape, vec![2, 10, 6]);
    }

    #[test]
    fn causal_preserves_time_roll_preserves_variables() {
        let input = Tensor::zeros(&[1, 12, 9]);
        let kernel = Tensor::zeros(&[1, 1, 2, 3]);
        let conv = Conv2d {
            kernel,
            bias: vec![0.0],
            stride: (1, 1),
            dilation: (2, 1),
            // Causal width dr×(k−1) keeps the time extent; roll width
            // ⌊k_w/2⌋ keeps the variables extent.
            pad_h: AxisPad::new(PadMethod::Causal, 2),
            pad_w: AxisPad::new(PadMethod::Roll, 1),
            activation: Activation::Linear,
        };
        assert_eq!(conv.forward(&input).unwrap().shape, vec![1, 12, 9]);
    }

    #[test]
    fn mismatched_channels_are_rejected() {
        let input = Tensor::zeros(&[2, 4, 4]);
        let kernel = Tensor::zeros(&[1, 3, 2, 2]);
        let conv = conv2d(kernel, AxisPad::valid(), AxisPad::valid());
        assert!(matches!(conv.forward(&input), Err(NnError::ShapeMismatch(_))));
    }

    #[test]
    fn conv1d_equals_its_2d_lift() {
        let input = Tensor::from_vec(&[1, 6], (1..=6).map(|v| v as f64).collect()).unwrap();
        let conv = Conv1d {
            kernel: Tensor::from_vec(&[1, 1, 3], vec![0.5, 1.0, -0.5]).unwrap(),
            bias: vec![0.25],
            stride: 1,
            dilation: 1,
            pad: AxisPad::valid(),
            activation: Activation::Linear,
        };
        let out = conv.forward(&input).unwrap();
        assert_eq!(out.shape, vec![1, 4]);
        // Hand-computed: 0.5·x[t] + x[t+1] − 0.5·x[t+2] + 0.25.
        let expect: Vec<f64> =
            (0..4).map(|t| 0.5 * (t + 1) as f64 + (t + 2) as f64 - 0.5 * (t + 3) as f64 + 0.25).collect();
        for (a, b) in out.data.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
