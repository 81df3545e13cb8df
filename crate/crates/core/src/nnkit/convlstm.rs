//! ConvLSTM2D: a recurrent layer over segmented inputs whose internal
//! matrix multiplications are convolutions over the time×variables map.
//! Forward only; it never sits on a training path.

use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, Activation};
use super::conv::Conv2d;
use super::pad::{AxisPad, PadMethod};
use super::tensor::Tensor;
use super::{Initializer, NnError};

/// Gate convolutions in `[input, forget, cell, output]` order: one set
/// over the segment input, one over the hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLstm2d {
    pub input_convs: [Conv2d; 4],
    pub hidden_convs: [Conv2d; 4],
    pub filters: usize,
}

impl ConvLstm2d {
    /// Builds a cell with `filters` output maps and a `(k_t, k_v)` kernel,
    /// same padding on time and, when `roll_on_variables` is set, roll
    /// padding on the variables axis (odd `k_v` required).
    pub fn new(
        init: &mut Initializer,
        filters: usize,
        kernel: (usize, usize),
        roll_on_variables: bool,
    ) -> Result<ConvLstm2d, NnError> {
        let (kt, kv) = kernel;
        if roll_on_variables && kv % 2 == 0 {
            return Err(NnError::EvenRollKernel(kv));
        }
        let pad_w = if roll_on_variables {
            AxisPad::new(PadMethod::Roll, kv / 2)
        } else {
            AxisPad::new(PadMethod::Same, kv / 2)
        };
        let conv = |init: &mut Initializer, ci: usize| Conv2d {
            kernel: init.conv2d(filters, ci, kt, kv),
            bias: vec![0.0; filters],
            stride: (1, 1),
            dilation: (1, 1),
            pad_h: AxisPad::new(PadMethod::Same, kt / 2),
            pad_w,
            activation: Activation::Linear,
        };
        Ok(ConvLstm2d {
            input_convs: std::array::from_fn(|_| conv(init, 1)),
            hidden_convs: std::array::from_fn(|_| conv(init, filters)),
            filters,
        })
    }

    /// Runs the recurrence over the segments axis of a
    /// `[segments, time, variables]` input, returning every hidden state
    /// as `[segments, filters, time, variables]`.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        if input.rank() != 3 {
            return Err(NnError::ShapeMismatch(format!("convlstm2d over {:?}", input.shape)));
        }
        let (segments, t, v) = (input.shape[0], input.shape[1], input.shape[2]);
        let map_len = self.filters * t * v;
        let mut h = Tensor::zeros(&[self.filters, t, v]);
        let mut c = Tensor::zeros(&[self.filters, t, v]);
        let mut out = Tensor::zeros(&[segments, self.filters, t, v]);
        for s in 0..segments {
            let x =
                Tensor::from_vec(&[1, t, v], input.data[s * t * v..(s + 1) * t * v].to_vec())?;
            let mut gates = Vec::with_capacity(4);
            for g in 0..4 {
                let zx = self.input_convs[g].forward(&x)?;
                let zh = self.hidden_convs[g].forward(&h)?;
                if zx.shape != h.shape || zh.shape != h.shape {
                    return Err(NnError::ShapeMismatch(format!(
                        "gate map {:?}/{:?} against state {:?}",
                        zx.shape, zh.shape, h.shape
                    )));
                }
                gates.push(zx.add(&zh)?);
            }
            for k in 0..map_len {
                let i = sigmoid(gates[0].data[k]);
                let f = sigmoid(gates[1].data[k]);
                let g = gates[2].data[k].tanh();
                let o = sigmoid(gates[3].data[k]);
                c.data[k] = f * c.data[k] + i * g;
                h.data[k] = o * c.data[k].tanh();
            }
            out.data[s * map_len..(s + 1) * map_len].copy_from_slice(&h.data);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_a_constant_zero_map() {
        let mut init = Initializer::new(3);
        let mut cell = ConvLstm2d::new(&mut init, 2, (3, 3), true).unwrap();
        for conv in cell.input_convs.iter_mut().chain(cell.hidden_convs.iter_mut()) {
            conv.kernel = conv.kernel.zeros_like();
            conv.bias = vec![0.0; conv.bias.len()];
        }
        let input = Tensor::from_vec(&[3, 4, 5], (0..60).map(|k| k as f64 * 0.1).collect()).unwrap();
        let out = cell.forward(&input).unwrap();
        // All gates are σ(0) or tanh(0): the cell state stays zero and so
        // does every hidden map.
        assert!(out.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_segment_reduces_to_a_single_gated_convolution() {
        let mut init = Initializer::new(11);
        let cell = ConvLstm2d::new(&mut init, 1, (1, 3), false).unwrap();
        let (t, v) = (3, 4);
        let input =
            Tensor::from_vec(&[1, t, v], (0..12).map(|k| ((k * 7) % 5) as f64 * 0.3 - 0.4).collect())
                .unwrap();
        let out = cell.forward(&input).unwrap();

        // Hand-composed oracle: with zero initial state the hidden-state
        // convolutions contribute nothing, leaving one gated step.
        let x = input.reshape(&[1, t, v]).unwrap();
        let zi = cell.input_convs[0].forward(&x).unwrap();
        let zg = cell.input_convs[2].forward(&x).unwrap();
        let zo = cell.input_convs[3].forward(&x).unwrap();
        for k in 0..t * v {
            let c = sigmoid(zi.data[k]) * zg.data[k].tanh();
            let expect = sigmoid(zo.data[k]) * c.tanh();
            assert!((out.data[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_extents_are_preserved() {
        let mut init = Initializer::new(5);
        let cell = ConvLstm2d::new(&mut init, 3, (3, 3), true).unwrap();
        let input = Tensor::zeros(&[7, 24, 9]);
        let out = cell.forward(&input).unwrap();
        assert_eq!(out.shape, vec![7, 3, 24, 9]);
    }

    #[test]
    fn even_roll_kernel_is_rejected() {
        let mut init = Initializer::new(5);
        assert!(matches!(
            ConvLstm2d::new(&mut init, 2, (3, 4), true),
            Err(NnError::EvenRollKernel(4))
        ));
    }
}
