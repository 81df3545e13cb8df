//! WaveNet residual blocks and the 2D classification variant.
//!
//! Each block runs gated tanh×sigmoid dilated convolutions with causal
//! padding on the time axis, a 1×1 channel-wise pooling convolution, and
//! residual plus skip additions. The dilation grows as `k^N` with block
//! depth. The 2D variant additionally roll-pads the variables axis and
//! downsamples time with strided convolutions before global average
//! pooling and a softmax over the class maps.

use serde::{Deserialize, Serialize};

use super::activation::{softmax, softmax_backward, Activation};
use super::conv::{Conv1d, Conv1dCache, Conv2d, Conv2dCache};
use super::pad::{AxisPad, PadMethod};
use super::tensor::Tensor;
use super::{Initializer, NnError};

/// One 1D residual block: `pool(tanh(filter(x)) ⊙ σ(gate(x)))` added to
/// both the residual path and the skip accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveNetBlock {
    pub filter: Conv1d,
    pub gate: Conv1d,
    pub pool: Conv1d,
}

#[derive(Debug, Clone)]
pub struct WaveNetBlockCache {
    filter_out: Tensor,
    gate_out: Tensor,
    filter_cache: Conv1dCache,
    gate_cache: Conv1dCache,
    pool_cache: Conv1dCache,
}

impl WaveNetBlock {
    /// Block at depth index `n` (1-based): dilation `k^n`, causal padding
    /// of width `dilation × (k−1)`.
    pub fn new(init: &mut Initializer, channels: usize, k: usize, n: u32) -> WaveNetBlock {
        let dilation = k.pow(n);
        let causal = AxisPad::new(PadMethod::Causal, dilation * (k - 1));
        let dilated = |init: &mut Initializer, activation| Conv1d {
            kernel: init.conv1d(channels, channels, k),
            bias: vec![0.0; channels],
            stride: 1,
            dilation,
            pad: causal,
            activation,
        };
        WaveNetBlock {
            filter: dilated(init, Activation::Tanh),
            gate: dilated(init, Activation::Sigmoid),
            pool: Conv1d {
                kernel: init.conv1d(channels, channels, 1),
                bias: vec![0.0; channels],
                stride: 1,
                dilation: 1,
                pad: AxisPad::valid(),
                activation: Activation::Linear,
            },
        }
    }

    pub fn forward(&self, input: &Tensor, skip: &Tensor) -> Result<(Tensor, Tensor), NnError> {
        let (r, s, _) = self.forward_cached(input, skip)?;
        Ok((r, s))
    }

    pub fn forward_cached(
        &self,
        input: &Tensor,
        skip: &Tensor,
    ) -> Result<(Tensor, Tensor, WaveNetBlockCache), NnError> {
        let (filter_out, filter_cache) = self.filter.forward_cached(input)?;
        let (gate_out, gate_cache) = self.gate.forward_cached(input)?;
        let gated = filter_out.hadamard(&gate_out)?;
        let (pool_out, pool_cache) = self.pool.forward_cached(&gated)?;
        let residual = input.add(&pool_out)?;
        let skip_out = skip.add(&pool_out)?;
        Ok((
            residual,
            skip_out,
            WaveNetBlockCache { filter_out, gate_out, filter_cache, gate_cache, pool_cache },
        ))
    }

    /// Backward through the block. `grad_residual` and `grad_skip` are the
    /// gradients on the two outputs; returns the input gradient and the
    /// parameter gradients shaped like the block.
    pub fn backward(
        &self,
        cache: &WaveNetBlockCache,
        grad_residual: &Tensor,
        grad_skip: &Tensor,
    ) -> Result<(Tensor, WaveNetBlock), NnError> {
        // The pooled map feeds both outputs.
        let grad_pool_out = grad_residual.add(grad_skip)?;
        let (grad_gated, gk_pool, gb_pool) = self.pool.backward(&cache.pool_cache, &grad_pool_out)?;
        let grad_filter_out = grad_gated.hadamard(&cache.gate_out)?;
        let grad_gate_out = grad_gated.hadamard(&cache.filter_out)?;
        let (gx_filter, gk_filter, gb_filter) =
            self.filter.backward(&cache.filter_cache, &grad_filter_out)?;
        let (gx_gate, gk_gate, gb_gate) = self.gate.backward(&cache.gate_cache, &grad_gate_out)?;
        // Residual identity plus both convolution paths.
        let grad_input = grad_residual.add(&gx_filter)?.add(&gx_gate)?;
        Ok((
            grad_input,
            WaveNetBlock {
                filter: Conv1d { kernel: gk_filter, bias: gb_filter, ..self.filter.clone() },
                gate: Conv1d { kernel: gk_gate, bias: gb_gate, ..self.gate.clone() },
                pool: Conv1d { kernel: gk_pool, bias: gb_pool, ..self.pool.clone() },
            },
        ))
    }
}

/// One 2D residual block: causal dilated time axis, roll-padded variables
/// axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveNetBlock2d {
    pub filter: Conv2d,
    pub gate: Conv2d,
    pub pool: Conv2d,
}

#[derive(Debug, Clone)]
pub struct WaveNetBlock2dCache {
    filter_out: Tensor,
    gate_out: Tensor,
    filter_cache: Conv2dCache,
    gate_cache: Conv2dCache,
    pool_cache: Conv2dCache,
}

impl WaveNetBlock2d {
    pub fn new(
        init: &mut Initializer,
        channels: usize,
        kernel: (usize, usize),
        n: u32,
    ) -> Result<WaveNetBlock2d, NnError> {
        let (kh, kw) = kernel;
        if kw % 2 == 0 {
            return Err(NnError::EvenRollKernel(kw));
        }
        let dilation = kh.pow(n);
        let dilated = |init: &mut Initializer, activation| Conv2d {
            kernel: init.conv2d(channels, channels, kh, kw),
            bias: vec![0.0; channels],
            stride: (1, 1),
            dilation: (dilation, 1),
            pad_h: AxisPad::new(PadMethod::Causal, dilation * (kh - 1)),
            pad_w: AxisPad::new(PadMethod::Roll, kw / 2),
            activation,
        };
        Ok(WaveNetBlock2d {
            filter: dilated(init, Activation::Tanh),
            gate: dilated(init, Activation::Sigmoid),
            pool: Conv2d {
                kernel: init.conv2d(channels, channels, 1, 1),
                bias: vec![0.0; channels],
                stride: (1, 1),
                dilation: (1, 1),
                pad_h: AxisPad::valid(),
                pad_w: AxisPad::valid(),
                activation: Activation::Linear,
            },
        })
    }

    pub fn forward_cached(
        &self,
        input: &Tensor,
        skip: &Tensor,
    ) -> Result<(Tensor, Tensor, WaveNetBlock2dCache), NnError> {
        let (filter_out, filter_cache) = self.filter.forward_cached(input)?;
        let (gate_out, gate_cache) = self.gate.forward_cached(input)?;
        let gated = filter_out.hadamard(&gate_out)?;
        let (pool_out, pool_cache) = self.pool.forward_cached(&gated)?;
        let residual = input.add(&pool_out)?;
        let skip_out = skip.add(&pool_out)?;
        Ok((
            residual,
            skip_out,
            WaveNetBlock2dCache { filter_out, gate_out, filter_cache, gate_cache, pool_cache },
        ))
    }

    pub fn backward(
        &self,
        cache: &WaveNetBlock2dCache,
        grad_residual: &Tensor,
        grad_skip: &Tensor,
    ) -> Result<(Tensor, WaveNetBlock2d), NnError> {
        let grad_pool_out = grad_residual.add(grad_skip)?;
        let (grad_gated, gk_pool, gb_pool) = self.pool.backward(&cache.pool_cache, &grad_pool_out)?;
        let grad_filter_out = grad_gated.hadamard(&cache.gate_out)?;
        let grad_gate_out = grad_gated.hadamard(&cache.filter_out)?;
        let (gx_filter, gk_filter, gb_filter) =
            self.filter.backward(&cache.filter_cache, &grad_filter_out)?;
        let (gx_gate, gk_gate, gb_gate) = self.gate.backward(&cache.gate_cache, &grad_gate_out)?;
        let grad_input = grad_residual.add(&gx_filter)?.add(&gx_gate)?;
        Ok((
            grad_input,
            WaveNetBlock2d {
                filter: Conv2d { kernel: gk_filter, bias: gb_filter, ..self.filter.clone() },
                gate: Conv2d { kernel: gk_gate, bias: gb_gate, ..self.gate.clone() },
                pool: Conv2d { kernel: gk_pool, bias: gb_pool, ..self.pool.clone() },
            },
        ))
    }
}

/// WaveNet over a `[time, variables]` map: an entry convolution lifts the
/// single channel, dilated residual blocks accumulate skips, strided head
/// convolutions downsample only the time axis, and the class-map averages
/// go through a softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveNet2d {
    pub entry: Conv2d,
    pub blocks: Vec<WaveNetBlock2d>,
    pub head: Vec<Conv2d>,
    pub classes: usize,
}

#[derive(Debug, Clone)]
pub struct WaveNet2dCache {
    entry_cache: Conv2dCache,
    block_caches: Vec<WaveNetBlock2dCache>,
    head_caches: Vec<Conv2dCache>,
    class_map_positions: usize,
    probs: Tensor,
    input_shape: Vec<usize>,
}

impl WaveNet2d {
    /// Builds the classifier: `channels`-wide blocks of depth `depth` with
    /// kernel `(k_h, k_w)` (odd `k_w`), two strided head convolutions that
    /// downsample time, and `classes` output maps.
    pub fn new(
        seed: u64,
        channels: usize,
        kernel: (usize, usize),
        depth: u32,
        time_stride: usize,
        classes: usize,
    ) -> Result<WaveNet2d, NnError> {
        let (kh, kw) = kernel;
        if kw % 2 == 0 {
            return Err(NnError::EvenRollKernel(kw));
        }
        let mut init = Initializer::new(seed);
        let entry = Conv2d {
            kernel: init.conv2d(channels, 1, kh, kw),
            bias: vec![0.0; channels],
            stride: (1, 1),
            dilation: (1, 1),
            pad_h: AxisPad::new(PadMethod::Causal, kh - 1),
            pad_w: AxisPad::new(PadMethod::Roll, kw / 2),
            activation: Activation::Tanh,
        };
        let blocks = (1..=depth)
            .map(|n| WaveNetBlock2d::new(&mut init, channels, kernel, n))
            .collect::<Result<Vec<_>, _>>()?;
        // Downsample only the time steps dimension, then emit one map per
        // class.
        let mid = Conv2d {
            kernel: init.conv2d(channels, channels, kh, kw),
            bias: vec![0.0; channels],
            stride: (time_stride.max(2), 1),
            dilation: (1, 1),
            pad_h: AxisPad::new(PadMethod::Causal, kh - 1),
            pad_w: AxisPad::new(PadMethod::Roll, kw / 2),
            activation: Activation::Relu,
        };
        let classifier = Conv2d {
            kernel: init.conv2d(classes, channels, kh, kw),
            bias: vec![0.0; classes],
            stride: (time_stride.max(2), 1),
            dilation: (1, 1),
            pad_h: AxisPad::new(PadMethod::Causal, kh - 1),
            pad_w: AxisPad::new(PadMethod::Roll, kw / 2),
            activation: Activation::Linear,
        };
        Ok(WaveNet2d { entry, blocks, head: vec![mid, classifier], classes })
    }

    /// Class probabilities for one `[time, variables]` input.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward_cached(input)?.0)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, WaveNet2dCache), NnError> {
        if input.rank() != 2 {
            return Err(NnError::ShapeMismatch(format!("wavenet2d over {:?}", input.shape)));
        }
        let lifted = input.reshape(&[1, input.shape[0], input.shape[1]])?;
        let (mut x, entry_cache) = self.entry.forward_cached(&lifted)?;
        let mut skip = x.zeros_like();
        let mut block_caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (residual, skip_out, cache) = block.forward_cached(&x, &skip)?;
            x = residual;
            skip = skip_out;
            block_caches.push(cache);
        }
        let mut y = skip;
        let mut head_caches = Vec::with_capacity(self.head.len());
        for conv in &self.head {
            let (next, cache) = conv.forward_cached(&y)?;
            head_caches.push(cache);
            y = next;
        }
        // Global average pooling per class map, then softmax.
        let positions = y.shape[1] * y.shape[2];
        let mut logits = Tensor::zeros(&[self.classes]);
        for class in 0..self.classes {
            let start = class * positions;
            logits.data[class] =
                y.data[start..start + positions].iter().sum::<f64>() / positions as f64;
        }
        let probs = softmax(&logits, 0)?;
        let cache = WaveNet2dCache {
            entry_cache,
            block_caches,
            head_caches,
            class_map_positions: positions,
            probs: probs.clone(),
            input_shape: input.shape.clone(),
        };
        Ok((probs, cache))
    }

    /// Backward from a gradient on the output probabilities. Returns the
    /// input gradient and parameter gradients shaped like the network.
    pub fn backward(
        &self,
        cache: &WaveNet2dCache,
        grad_probs: &Tensor,
    ) -> Result<(Tensor, WaveNet2d), NnError> {
        let grad_logits = softmax_backward(&cache.probs, grad_probs, 0)?;
        self.backward_from_logits(cache, &grad_logits)
    }

    /// Backward from a gradient on the pre-softmax logits (the natural
    /// entry point for cross-entropy training).
    pub fn backward_from_logits(
        &self,
        cache: &WaveNet2dCache,
        grad_logits: &Tensor,
    ) -> Result<(Tensor, WaveNet2d), NnError> {
        let positions = cache.class_map_positions;
        let last_shape = cache.head_caches.last().expect("head is non-empty").preact_shape();
        let mut grad_y = Tensor::zeros(&last_shape);
        for class in 0..self.classes {
            let g = grad_logits.data[class] / positions as f64;
            for p in 0..positions {
                grad_y.data[class * positions + p] = g;
            }
        }
        let mut head_grads = Vec::with_capacity(self.head.len());
        for (conv, conv_cache) in self.head.iter().zip(&cache.head_caches).rev() {
            let (gx, gk, gb) = conv.backward(conv_cache, &grad_y)?;
            head_grads.push(Conv2d { kernel: gk, bias: gb, ..conv.clone() });
            grad_y = gx;
        }
        head_grads.reverse();
        // grad_y is now the gradient on the skip sum; every block's pooled
        // output receives it, and the residual chain runs in reverse.
        let grad_skip = grad_y;
        let mut grad_residual = grad_skip.zeros_like();
        let mut block_grads = Vec::with_capacity(self.blocks.len());
        for (block, block_cache) in self.blocks.iter().zip(&cache.block_caches).rev() {
            let (gx, grads) = block.backward(block_cache, &grad_residual, &grad_skip)?;
            block_grads.push(grads);
            grad_residual = gx;
        }
        block_grads.reverse();
        let (gx, gk, gb) = self.entry.backward(&cache.entry_cache, &grad_residual)?;
        let grad_input = gx.reshape(&cache.input_shape)?;
        Ok((
            grad_input,
            WaveNet2d {
                entry: Conv2d { kernel: gk, bias: gb, ..self.entry.clone() },
                blocks: block_grads,
                head: head_grads,
                classes: self.classes,
            },
        ))
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = self.entry.params();
        for b in &self.blocks {
            out.extend(b.filter.params());
            out.extend(b.gate.params());
            out.extend(b.pool.params());
        }
        for c in &self.head {
            out.extend(c.params());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        let mut take = |conv: &mut Conv2d, params: &[f64]| {
            let n = conv.param_count();
            conv.set_params(&params[offset..offset + n]);
            offset += n;
        };
        take(&mut self.entry, params);
        for b in &mut self.blocks {
            take(&mut b.filter, params);
            take(&mut b.gate, params);
            take(&mut b.pool, params);
        }
        for c in &mut self.head {
            take(c, params);
        }
    }

    pub fn param_count(&self) -> usize {
        self.entry.param_count()
            + self
                .blocks
                .iter()
                .map(|b| b.filter.param_count() + b.gate.param_count() + b.pool.param_count())
                .sum::<usize>()
            + self.head.iter().map(|c| c.param_count()).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe_block_stack(k: usize, depth: u32, t: usize) -> impl Fn(&Tensor) -> Tensor {
        let mut init = Initializer::new(42 + k as u64 + depth as u64);
        let blocks: Vec<WaveNetBlock> =
            (1..=depth).map(|n| WaveNetBlock::new(&mut init, 2, k, n)).collect();
        move |input: &Tensor| {
            let mut x = input.clone();
            let mut skip = Tensor::zeros(&[2, t]);
            for b in &blocks {
                let (r, s) = b.forward(&x, &skip).unwrap();
                x = r;
                skip = s;
            }
            skip
        }
    }

    #[test]
    fn outputs_only_depend_on_the_past() {
        let t = 40;
        let run = probe_block_stack(2, 3, t);
        let base = Tensor::from_vec(&[2, t], (0..2 * t).map(|v| (v as f64).sin()).collect()).unwrap();
        let out = run(&base);
        for probe_t in [10, 20, 33] {
            let mut bumped = base.clone();
            bumped.set(&[0, probe_t + 1], 5.0);
            bumped.set(&[1, probe_t + 1], -5.0);
            let out2 = run(&bumped);
            for c in 0..2 {
                for step in 0..=probe_t {
                    assert_eq!(
                        out.at(&[c, step]),
                        out2.at(&[c, step]),
                        "future perturbation leaked to t={step}"
                    );
                }
            }
        }
    }

    #[test]
    fn receptive_field_matches_the_dilation_formula() {
        let t = 130;
        for k in [2usize, 3] {
            for depth in 1..=4u32 {
                if k.pow(depth) * (k - 1) >= t {
                    continue;
                }
                let run = probe_block_stack(k, depth, t);
                let base = Tensor::zeros(&[2, t]);
                let out = run(&base);
                let rf: usize = (1..=depth).map(|n| k.pow(n) * (k - 1)).sum::<usize>() + 1;
                let probe = t - 1;
                // Perturbing the earliest input inside the field moves the
                // output; one step before it does not.
                let mut inside = base.clone();
                inside.set(&[0, probe + 1 - rf], 1.0);
                let out_inside = run(&inside);
                assert_ne!(out.at(&[0, probe]), out_inside.at(&[0, probe]), "k={k} depth={depth}");
                if probe + 1 > rf {
                    let mut outside = base.clone();
                    outside.set(&[0, probe - rf], 1.0);
                    let out_outside = run(&outside);
                    assert_eq!(
                        out.at(&[0, probe]),
                        out_outside.at(&[0, probe]),
                        "k={k} depth={depth}"
                    );
                }
            }
        }
    }

    #[test]
    fn identity_pooling_with_zero_gates_passes_the_input_through() {
        let mut init = Initializer::new(9);
        let mut block = WaveNetBlock::new(&mut init, 2, 2, 1);
        // Zero the gated path and make the pooling a pass-through: the
        // residual output must equal the input exactly.
        block.filter.kernel = block.filter.kernel.zeros_like();
        block.filter.bias = vec![0.0; 2];
        block.pool.kernel = Tensor::from_vec(&[2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        block.pool.bias = vec![0.0; 2];
        let input = Tensor::from_vec(&[2, 6], (0..12).map(|v| v as f64 * 0.25).collect()).unwrap();
        let skip = Tensor::zeros(&[2, 6]);
        let (residual, _) = block.forward(&input, &skip).unwrap();
        // tanh(0) zeroes the gated product, so pooling contributes nothing.
        assert_eq!(residual, input);
    }

    #[test]
    fn wavenet2d_probabilities_sum_to_one() {
        let net = WaveNet2d::new(7, 4, (2, 3), 3, 2, 5).unwrap();
        let input = Tensor::from_vec(
            &[64, 9],
            (0..64 * 9).map(|v| ((v * 31) % 17) as f64 * 0.1 - 0.8).collect(),
        )
        .unwrap();
        let probs = net.forward(&input).unwrap();
        assert_eq!(probs.shape, vec![5]);
        let total: f64 = probs.data.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(probs.data.iter().all(|p| (0.0..1.0).contains(p)));
    }

    #[test]
    fn wavenet2d_time_causality_holds_through_the_stack() {
        // With all strides at 1 the per-position class maps are causal in
        // time; check through the full network by reading the classifier
        // input implicitly via probability changes on a truncated
        // evaluation. Direct check: identical prefixes produce identical
        // prefix activations, so probabilities react only through the
        // averaged tail.
        let net = WaveNet2d::new(3, 3, (2, 3), 2, 2, 4).unwrap();
        let t = 32;
        let a = Tensor::from_vec(&[t, 4], (0..t * 4).map(|v| (v as f64 * 0.37).cos()).collect())
            .unwrap();
        let mut b = a.clone();
        // Perturb only the final step: probabilities may move, but an
        // evaluation truncated before the perturbation must not.
        b.set(&[t - 1, 0], 9.0);
        let a_trunc = Tensor::from_vec(&[t - 1, 4], a.data[..(t - 1) * 4].to_vec()).unwrap();
        let b_trunc = Tensor::from_vec(&[t - 1, 4], b.data[..(t - 1) * 4].to_vec()).unwrap();
        let pa = net.forward(&a_trunc).unwrap();
        let pb = net.forward(&b_trunc).unwrap();
        assert_eq!(pa, pb);
    }
}
