//! A small, self-contained neural kernel.
//!
//! Dense, 1D/2D convolution (all padding methods including roll padding),
//! soft and multi-head convolutional attention, an LSTM with
//! backpropagation through time, a forward-only ConvLSTM2D, WaveNet
//! residual blocks, and a deterministic SGD training loop. Everything is
//! `f64` and every trainable path has an analytic backward pass checked
//! against central finite differences.

mod activation;
mod attention;
mod conv;
mod convlstm;
mod dense;
pub mod gradcheck;
mod init;
mod lstm;
mod model;
mod pad;
mod tensor;
mod wavenet;

pub use activation::{sigmoid, softmax, softmax_backward, Activation};
pub use attention::{scale_by_alpha, ConvAttention1d, ConvAttention2d, DenseAttention, HeadReduce};
pub use conv::{Conv1d, Conv2d};
pub use convlstm::ConvLstm2d;
pub use dense::Dense;
pub use init::Initializer;
pub use lstm::{Lstm, LstmCell};
pub use model::{Layer, Model, OptimizerKind, TrainConfig, TrainReport};
pub use pad::{pad, pad_axis, pad_axis_backward, pad_plan, AxisPad, PadMethod, PadSource};
pub use tensor::Tensor;
pub use wavenet::{WaveNet2d, WaveNetBlock};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("padding width {width} is wider than the input extent {extent}")]
    PadWiderThanInput { width: usize, extent: usize },
    #[error("attention head's final convolution must output one channel, got {0}")]
    HeadOutputNotSingleChannel(usize),
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("roll padding requires an odd kernel width, got {0}")]
    EvenRollKernel(usize),
    #[error("the graph contains a forward-only layer; training is not available")]
    GraphContainsForwardOnlyLayer,
    #[error("model archive: {0}")]
    Archive(String),
}
