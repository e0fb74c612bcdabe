//! Minimal self-contained neural-network stack: tensors, dense and
//! per-position (kernel-size-1) convolution layers, weighted
//! cross-entropy, AdamW, the one-cycle schedule, finite-difference
//! gradient verification, and checkpoint files.
//!
//! All compute is f64; checkpoints store parameters as little-endian
//! f32. Only the two fixed model graphs in `models` are supported, so
//! backward passes are hand-written rather than taped.

mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod optim;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use gradcheck::grad_check;
pub use layers::{DenseLayer, PointwiseConvLayer};
pub use loss::weighted_cross_entropy;
pub use optim::{AdamW, AdamWConfig, OneCycleSchedule};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("step {0} outside schedule of {1} steps")]
    StepOutOfRange(usize, usize),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that exposes its (parameter, gradient) tensor pairs in a
/// fixed order. The order defines optimizer state and checkpoint layout.
pub trait ParamVisitor {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor));

    fn zero_grads(&mut self) {
        self.visit_params(&mut |_, g| g.data.fill(0.0));
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p, _| n += p.data.len());
        n
    }
}

/// ReLU, elementwise.
pub fn relu(x: &Tensor) -> Tensor {
    Tensor {
        shape: x.shape.clone(),
        data: x.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// Gradient of ReLU given the pre-activation input.
pub fn relu_backward(pre: &Tensor, dy: &Tensor) -> Tensor {
    debug_assert_eq!(pre.shape, dy.shape);
    Tensor {
        shape: dy.shape.clone(),
        data: pre
            .data
            .iter()
            .zip(&dy.data)
            .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

/// Row-wise softmax of a [batch, c] tensor, numerically stable.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let c = *logits.shape.last().expect("softmax on empty shape");
    let mut out = logits.clone();
    for row in out.data.chunks_mut(c) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}
