//! Padding methods for convolution inputs.
//!
//! Beyond the usual zero variants this includes wrap padding and its
//! single-axis form, roll padding, which copies the opposite columns of
//! the variables axis only and leaves time untouched (a cylinder rather
//! than a torus).

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PadMethod {
    /// No padding.
    Valid,
    /// Zeros on both sides.
    Same,
    /// Mirror including the border element.
    Reflect,
    /// Mirror excluding the border element.
    Reflect101,
    /// A fixed value on both sides.
    Constant(f64),
    /// The first (last) `t` elements tiled cyclically.
    Tile(usize),
    /// Zeros on the left only, preserving temporal causality.
    Causal,
    /// The opposite end's elements on both sides.
    Wrap,
    /// Wrap, used on the variables axis of a time×variables map.
    Roll,
}

/// One spatial axis's padding: method plus width per side (Causal pads the
/// left only; Valid ignores the width).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisPad {
    pub method: PadMethod,
    pub width: usize,
}

impl AxisPad {
    pub const fn valid() -> AxisPad {
        AxisPad { method: PadMethod::Valid, width: 0 }
    }

    pub const fn new(method: PadMethod, width: usize) -> AxisPad {
        AxisPad { method, width }
    }

    pub fn left_width(&self) -> usize {
        match self.method {
            PadMethod::Valid => 0,
            _ => self.width,
        }
    }

    pub fn right_width(&self) -> usize {
        match self.method {
            PadMethod::Valid | PadMethod::Causal => 0,
            _ => self.width,
        }
    }
}

/// Where each padded position of one axis comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PadSource {
    Index(usize),
    Fill(f64),
}

/// The source of every position of a padded axis of extent `n`.
pub fn pad_plan(n: usize, pad: &AxisPad) -> Result<Vec<PadSource>, NnError> {
    let w = pad.width;
    let check_copy_width = |max: usize| {
        if w > max {
            Err(NnError::PadWiderThanInput { width: w, extent: n })
        } else {
            Ok(())
        }
    };
    let mut plan = Vec::with_capacity(n + pad.left_width() + pad.right_width());
    match pad.method {
        PadMethod::Valid => {}
        PadMethod::Same => {
            plan.extend(std::iter::repeat(PadSource::Fill(0.0)).take(w));
        }
        PadMethod::Constant(value) => {
            plan.extend(std::iter::repeat(PadSource::Fill(value)).take(w));
        }
        PadMethod::Causal => {
            plan.extend(std::iter::repeat(PadSource::Fill(0.0)).take(w));
        }
        PadMethod::Reflect => {
            // dcba | abcdef
            check_copy_width(n)?;
            plan.extend((0..w).rev().map(PadSource::Index));
        }
        PadMethod::Reflect101 => {
            // edcb | abcdef
            check_copy_width(n.saturating_sub(1))?;
            plan.extend((1..=w).rev().map(PadSource::Index));
        }
        PadMethod::Tile(t) => {
            // abab | abcdef for t = 2
            if t == 0 || t > n {
                return Err(NnError::PadWiderThanInput { width: t, extent: n });
            }
            plan.extend((0..w).map(|i| PadSource::Index(i % t)));
        }
        PadMethod::Wrap | PadMethod::Roll => {
            // cdef | abcdef
            check_copy_width(n)?;
            plan.extend((n - w..n).map(PadSource::Index));
        }
    }
    plan.extend((0..n).map(PadSource::Index));
    match pad.method {
        PadMethod::Valid | PadMethod::Causal => {}
        PadMethod::Same => {
            plan.extend(std::iter::repeat(PadSource::Fill(0.0)).take(w));
        }
        PadMethod::Constant(value) => {
            plan.extend(std::iter::repeat(PadSource::Fill(value)).take(w));
        }
        PadMethod::Reflect => {
            // abcdef | fedc
            plan.extend((n - w..n).rev().map(PadSource::Index));
        }
        PadMethod::Reflect101 => {
            // abcdef | edcb
            plan.extend((n - 1 - w..n - 1).rev().map(PadSource::Index));
        }
        PadMethod::Tile(t) => {
            // abcdef | efef for t = 2
            plan.extend((0..w).map(|i| PadSource::Index(n - t + (i % t))));
        }
        PadMethod::Wrap | PadMethod::Roll => {
            // abcdef | abcd
            plan.extend((0..w).map(PadSource::Index));
        }
    }
    Ok(plan)
}

fn apply_plan(data: &[f64], plan: &[PadSource]) -> Vec<f64> {
    plan.iter()
        .map(|src| match src {
            PadSource::Index(i) => data[*i],
            PadSource::Fill(v) => *v,
        })
        .collect()
}

/// Pads the spatial axes of a `[channels, ...spatial]` tensor. `spec`
/// carries one entry per spatial axis.
pub fn pad(input: &Tensor, spec: &[AxisPad]) -> Result<Tensor, NnError> {
    if input.rank() != spec.len() + 1 {
        return Err(NnError::ShapeMismatch(format!(
            "padding spec for {} axes against shape {:?}",
            spec.len(),
            input.shape
        )));
    }
    let mut current = input.clone();
    for (axis, pad) in spec.iter().enumerate() {
        current = pad_axis(&current, axis + 1, pad)?;
    }
    Ok(current)
}

/// Pads one axis of a tensor of any rank.
pub fn pad_axis(input: &Tensor, axis: usize, pad: &AxisPad) -> Result<Tensor, NnError> {
    let n = input.shape[axis];
    let plan = pad_plan(n, pad)?;
    let mut shape = input.shape.clone();
    shape[axis] = plan.len();
    // Walk the tensor as [outer, axis, inner].
    let outer: usize = input.shape[..axis].iter().product();
    let inner: usize = input.shape[axis + 1..].iter().product();
    let mut data = Vec::with_capacity(outer * plan.len() * inner);
    for o in 0..outer {
        for src in &plan {
            match src {
                PadSource::Index(i) => {
                    let start = (o * n + i) * inner;
                    data.extend_from_slice(&input.data[start..start + inner]);
                }
                PadSource::Fill(v) => data.extend(std::iter::repeat(*v).take(inner)),
            }
        }
    }
    Tensor::from_vec(&shape, data)
}

/// Routes a padded-space gradient back onto the unpadded input: copied
/// positions accumulate onto their sources, filled positions vanish.
pub fn pad_axis_backward(
    grad_padded: &Tensor,
    axis: usize,
    original_extent: usize,
    pad: &AxisPad,
) -> Result<Tensor, NnError> {
    let plan = pad_plan(original_extent, pad)?;
    if grad_padded.shape[axis] != plan.len() {
        return Err(NnError::ShapeMismatch(format!(
            "padded gradient extent {} against plan {}",
            grad_padded.shape[axis],
            plan.len()
        )));
    }
    let mut shape = grad_padded.shape.clone();
    shape[axis] = original_extent;
    let mut out = Tensor::zeros(&shape);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    for o in 0..outer {
        for (p, src) in plan.iter().enumerate() {
            if let PadSource::Index(i) = src {
                let from = (o * plan.len() + p) * inner;
                let to = (o * original_extent + i) * inner;
                for k in 0..inner {
                    out.data[to + k] += grad_padded.data[from + k];
                }
            }
        }
    }
    Ok(out)
}
