//! Soft attention blocks.
//!
//! All three blocks produce an attention map that sums to one along the
//! attended axis and scale the block input elementwise, so the context
//! keeps the input's shape. Placement before a recurrent layer attends
//! the raw variables; placement after attends the returned internal
//! sequences. The convolutional variants compute each head's scores with
//! a small convolution stack whose final output must collapse to a single
//! channel (or be channel-averaged).

use serde::{Deserialize, Serialize};

use super::activation::{softmax, softmax_backward};
use super::conv::{Conv1d, Conv1dCache, Conv2d, Conv2dCache};
use super::tensor::Tensor;
use super::NnError;

/// Elementwise context: `c = α ⊙ h`. The residual multiply that
/// reconnects attention to the main pipeline.
pub fn scale_by_alpha(h: &Tensor, alpha: &Tensor) -> Result<Tensor, NnError> {
    h.hadamard(alpha)
}

/// Standard soft attention: a shared dense map over the time axis scores
/// every position, a softmax turns the scores into weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseAttention {
    /// `[time, time]`, shared across variables.
    pub weights: Tensor,
    /// `[time]`.
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseAttentionCache {
    input: Tensor,
    alpha: Tensor,
}

impl DenseAttention {
    pub fn time_steps(&self) -> usize {
        self.weights.shape[0]
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    /// The attention weights alone, one column per variable, each column
    /// summing to one.
    pub fn alpha(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.1.alpha)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, DenseAttentionCache), NnError> {
        let t = self.time_steps();
        if input.rank() != 2 || input.shape[0] != t {
            return Err(NnError::ShapeMismatch(format!(
                "dense attention over {:?} with {t} time steps",
                input.shape
            )));
        }
        let v = input.shape[1];
        let mut scores = Tensor::zeros(&[t, v]);
        for t_out in 0..t {
            for var in 0..v {
                let mut acc = self.bias[t_out];
                for t_in in 0..t {
                    acc += self.weights.at(&[t_out, t_in]) * input.at(&[t_in, var]);
                }
                scores.set(&[t_out, var], acc);
            }
        }
        let alpha = softmax(&scores, 0)?;
        let context = scale_by_alpha(input, &alpha)?;
        Ok((context, DenseAttentionCache { input: input.clone(), alpha }))
    }

    pub fn backward(
        &self,
        cache: &DenseAttentionCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, Tensor, Vec<f64>), NnError> {
        let t = self.time_steps();
        let v = cache.input.shape[1];
        let grad_alpha = grad_out.hadamard(&cache.input)?;
        let mut grad_input = grad_out.hadamard(&cache.alpha)?;
        let grad_scores = softmax_backward(&cache.alpha, &grad_alpha, 0)?;
        let mut grad_w = self.weights.zeros_like();
        let mut grad_b = vec![0.0; t];
        for t_out in 0..t {
            for var in 0..v {
                let g = grad_scores.at(&[t_out, var]);
                if g == 0.0 {
                    continue;
                }
                grad_b[t_out] += g;
                for t_in in 0..t {
                    grad_w.add_at(&[t_out, t_in], g * cache.input.at(&[t_in, var]));
                    grad_input.add_at(&[t_in, var], g * self.weights.at(&[t_out, t_in]));
                }
            }
        }
        Ok((grad_input, grad_w, grad_b))
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

/// How a multichannel head output collapses to one score series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadReduce {
    /// The final convolution itself must output a single channel.
    FinalConv,
    /// Average the final convolution's channels.
    AveragePool,
}

/// Multi-head convolutional attention over a `[time, variables]` map: one
/// small 1D convolution stack per variable (or per recurrent sequence when
/// placed after the recurrent layer) scores its series, and the softmaxed
/// scores scale the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvAttention1d {
    pub heads: Vec<Vec<Conv1d>>,
    pub reduce: HeadReduce,
}

#[derive(Debug, Clone)]
pub struct ConvAttention1dCache {
    input: Tensor,
    alpha: Tensor,
    head_caches: Vec<Vec<Conv1dCache>>,
    head_channels: Vec<usize>,
}

impl ConvAttention1d {
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn alpha(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.1.alpha)
    }

    pub fn forward_cached(
        &self,
        input: &Tensor,
    ) -> Result<(Tensor, ConvAttention1dCache), NnError> {
        if input.rank() != 2 || input.shape[1] != self.heads.len() {
            return Err(NnError::ShapeMismatch(format!(
                "conv attention with {} heads over {:?}",
                self.heads.len(),
                input.shape
            )));
        }
        let (t, v) = (input.shape[0], input.shape[1]);
        let mut alpha = Tensor::zeros(&[t, v]);
        let mut head_caches = Vec::with_capacity(v);
        let mut head_channels = Vec::with_capacity(v);
        for (var, head) in self.heads.iter().enumerate() {
            // The head sees its own series as a one-channel sequence.
            let mut series = Tensor::zeros(&[1, t]);
            for step in 0..t {
                series.data[step] = input.at(&[step, var]);
            }
            let mut caches = Vec::with_capacity(head.len());
            let mut current = series;
            for conv in head {
                let (next, cache) = conv.forward_cached(&current)?;
                caches.push(cache);
                current = next;
            }
            if current.shape[1] != t {
                return Err(NnError::ShapeMismatch(format!(
                    "head {var} returned {} steps, input has {t}",
                    current.shape[1]
                )));
            }
            let channels = current.shape[0];
            let scores = match self.reduce {
                HeadReduce::FinalConv => {
                    if channels != 1 {
                        return Err(NnError::HeadOutputNotSingleChannel(channels));
                    }
                    current.reshape(&[t])?
                }
                HeadReduce::AveragePool => {
                    let mut avg = vec![0.0; t];
                    for c in 0..channels {
                        for step in 0..t {
                            avg[step] += current.at(&[c, step]);
                        }
                    }
                    Tensor::from_vec(&[t], avg.iter().map(|s| s / channels as f64).collect())?
                }
            };
            let weights = softmax(&scores, 0)?;
            for step in 0..t {
                alpha.set(&[step, var], weights.data[step]);
            }
            head_caches.push(caches);
            head_channels.push(channels);
        }
        let context = scale_by_alpha(input, &alpha)?;
        Ok((context, ConvAttention1dCache { input: input.clone(), alpha, head_caches, head_channels }))
    }

    /// Input gradient plus per-head convolution gradients shaped like the
    /// block itself.
    pub fn backward(
        &self,
        cache: &ConvAttention1dCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, ConvAttention1d), NnError> {
        let (t, v) = (cache.input.shape[0], cache.input.shape[1]);
        let grad_alpha = grad_out.hadamard(&cache.input)?;
        let mut grad_input = grad_out.hadamard(&cache.alpha)?;
        let mut grad_heads = Vec::with_capacity(v);
        for (var, head) in self.heads.iter().enumerate() {
            let mut alpha_col = Tensor::zeros(&[t]);
            let mut grad_col = Tensor::zeros(&[t]);
            for step in 0..t {
                alpha_col.data[step] = cache.alpha.at(&[step, var]);
                grad_col.data[step] = grad_alpha.at(&[step, var]);
            }
            let grad_scores = softmax_backward(&alpha_col, &grad_col, 0)?;
            let channels = cache.head_channels[var];
            let mut grad_map = match self.reduce {
                HeadReduce::FinalConv => grad_scores.reshape(&[1, t])?,
                HeadReduce::AveragePool => {
                    let mut data = Vec::with_capacity(channels * t);
                    for _ in 0..channels {
                        data.extend(grad_scores.data.iter().map(|g| g / channels as f64));
                    }
                    Tensor::from_vec(&[channels, t], data)?
                }
            };
            let mut conv_grads = Vec::with_capacity(head.len());
            for (conv, conv_cache) in head.iter().zip(&cache.head_caches[var]).rev() {
                let (gx, gk, gb) = conv.backward(conv_cache, &grad_map)?;
                conv_grads.push(Conv1d { kernel: gk, bias: gb, ..conv.clone() });
                grad_map = gx;
            }
            conv_grads.reverse();
            grad_heads.push(conv_grads);
            // The head read the same column it scored.
            for step in 0..t {
                grad_input.add_at(&[step, var], grad_map.at(&[0, step]));
            }
        }
        Ok((grad_input, ConvAttention1d { heads: grad_heads, reduce: self.reduce }))
    }

    pub fn params(&self) -> Vec<f64> {
        self.heads.iter().flatten().flat_map(|c| c.params()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for conv in self.heads.iter_mut().flatten() {
            let n = conv.param_count();
            conv.set_params(&params[offset..offset + n]);
            offset += n;
        }
    }

    pub fn param_count(&self) -> usize {
        self.heads.iter().flatten().map(|c| c.param_count()).sum()
    }
}

/// Convolutional attention over segmented inputs `[segments, time,
/// variables]`: one 2D convolution stack per variable scores its
/// `segments × time` map, and the softmax over the whole map yields that
/// variable's attention weights. Roll padding on the segments axis (set
/// in the convolution specs) lets the border kernels correlate the first
/// and last segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvAttention2d {
    pub heads: Vec<Vec<Conv2d>>,
}

#[derive(Debug, Clone)]
pub struct ConvAttention2dCache {
    input: Tensor,
    alpha: Tensor,
    head_caches: Vec<Vec<Conv2dCache>>,
}

impl ConvAttention2d {
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn alpha(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.1.alpha)
    }

    pub fn forward_cached(
        &self,
        input: &Tensor,
    ) -> Result<(Tensor, ConvAttention2dCache), NnError> {
        if input.rank() != 3 || input.shape[2] != self.heads.len() {
            return Err(NnError::ShapeMismatch(format!(
                "2d conv attention with {} heads over {:?}",
                self.heads.len(),
                input.shape
            )));
        }
        let (s, t, v) = (input.shape[0], input.shape[1], input.shape[2]);
        let mut alpha = Tensor::zeros(&[s, t, v]);
        let mut head_caches = Vec::with_capacity(v);
        for (var, head) in self.heads.iter().enumerate() {
            let mut map = Tensor::zeros(&[1, s, t]);
            for seg in 0..s {
                for step in 0..t {
                    map.set(&[0, seg, step], input.at(&[seg, step, var]));
                }
            }
            let mut caches = Vec::with_capacity(head.len());
            let mut current = map;
            for conv in head {
                let (next, cache) = conv.forward_cached(&current)?;
                caches.push(cache);
                current = next;
            }
            if current.shape != vec![1, s, t] {
                return Err(NnError::ShapeMismatch(format!(
                    "head {var} returned {:?}, wanted [1, {s}, {t}]",
                    current.shape
                )));
            }
            // One softmax over the whole segments×time map.
            let weights = softmax(&current.reshape(&[s * t])?, 0)?;
            for seg in 0..s {
                for step in 0..t {
                    alpha.set(&[seg, step, var], weights.data[seg * t + step]);
                }
            }
            head_caches.push(caches);
        }
        let context = scale_by_alpha(input, &alpha)?;
        Ok((context, ConvAttention2dCache { input: input.clone(), alpha, head_caches }))
    }

    pub fn backward(
        &self,
        cache: &ConvAttention2dCache,
        grad_out: &Tensor,
    ) -> Result<(Tensor, ConvAttention2d), NnError> {
        let (s, t, v) = (cache.input.shape[0], cache.input.shape[1], cache.input.shape[2]);
        let grad_alpha = grad_out.hadamard(&cache.input)?;
        let mut grad_input = grad_out.hadamard(&cache.alpha)?;
        let mut grad_heads = Vec::with_capacity(v);
        for (var, head) in self.heads.iter().enumerate() {
            let mut alpha_flat = Tensor::zeros(&[s * t]);
            let mut grad_flat = Tensor::zeros(&[s * t]);
            for seg in 0..s {
                for step in 0..t {
                    alpha_flat.data[seg * t + step] = cache.alpha.at(&[seg, step, var]);
                    grad_flat.data[seg * t + step] = grad_alpha.at(&[seg, step, var]);
                }
            }
            let grad_scores = softmax_backward(&alpha_flat, &grad_flat, 0)?;
            let mut grad_map = grad_scores.reshape(&[1, s, t])?;
            let mut conv_grads = Vec::with_capacity(head.len());
            for (conv, conv_cache) in head.iter().zip(&cache.head_caches[var]).rev() {
                let (gx, gk, gb) = conv.backward(conv_cache, &grad_map)?;
                conv_grads.push(Conv2d { kernel: gk, bias: gb, ..conv.clone() });
                grad_map = gx;
            }
            conv_grads.reverse();
            grad_heads.push(conv_grads);
            for seg in 0..s {
                for step in 0..t {
                    grad_input.add_at(&[seg, step, var], grad_map.at(&[0, seg, step]));
                }
            }
        }
        Ok((grad_input, ConvAttention2d { heads: grad_heads }))
    }

    pub fn params(&self) -> Vec<f64> {
        self.heads.iter().flatten().flat_map(|c| c.params()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for conv in self.heads.iter_mut().flatten() {
            let n = conv.param_count();
            conv.set_params(&params[offset..offset + n]);
            offset += n;
        }
    }

    pub fn param_count(&self) -> usize {
        self.heads.iter().flatten().map(|c| c.param_count()).sum()
    }
}
