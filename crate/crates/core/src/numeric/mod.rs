//! Dense 64-bit tensors and the small set of differentiable building blocks
//! the Q-network needs: dense layers, 2-D convolution, an LSTM cell, Adam,
//! gradient checking, and a binary checkpoint format.
//!
//! Everything here is deterministic. Matrix products go through a single
//! gemm kernel and all other loops are plain sequential Rust, so identical
//! inputs produce bit-identical outputs on every run.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod linalg;
mod tensor;

pub use adam::{adam_step, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use checkpoint::{
    load_checkpoint, load_checkpoint_from, save_checkpoint, save_checkpoint_to, CheckpointError,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use gradcheck::{grad_check, Differentiable, GradientCheckReport, ParameterCheck};
pub use layers::{
    Activation, Conv2d, Conv2dCache, Dense, DenseCache, LstmCache, LstmCell, Padding,
};
pub use linalg::matmul;
pub use tensor::Tensor;

use thiserror::Error;

/// Errors produced by tensor construction and layer forward/backward passes.
#[derive(Debug, Error)]
pub enum NumericError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: {message}")]
    InvalidArgument { op: &'static str, message: String },
    #[error("non-finite values detected in {context}")]
    NonFinite { context: String },
}

/// A trainable tensor bundled with its gradient and Adam state.
///
/// The gradient and both moment buffers always have the exact shape of the
/// value; nothing in this module can change one without the others.
#[derive(Clone, Debug)]
pub struct Parameter {
    pub value: Tensor,
    pub grad: Tensor,
    pub(crate) moment1: Tensor,
    pub(crate) moment2: Tensor,
    pub(crate) steps: u64,
}

impl Parameter {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        let moment1 = grad.clone();
        let moment2 = grad.clone();
        Parameter {
            value,
            grad,
            moment1,
            moment2,
            steps: 0,
        }
    }

    /// Clears the accumulated gradient in place.
    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }

    /// Number of optimizer steps applied so far.
    pub fn step_count(&self) -> u64 {
        self.steps
    }

    /// Replaces the value, resetting gradient and optimizer state.
    pub fn reset_value(&mut self, value: Tensor) -> Result<(), NumericError> {
        if value.shape() != self.value.shape() {
            return Err(NumericError::ShapeMismatch {
                op: "parameter reset",
                left: self.value.shape().to_vec(),
                right: value.shape().to_vec(),
            });
        }
        self.value = value;
        self.grad.data_mut().fill(0.0);
        self.moment1.data_mut().fill(0.0);
        self.moment2.data_mut().fill(0.0);
        self.steps = 0;
        Ok(())
    }

    /// Copies the value from another parameter without touching optimizer
    /// state. Shapes must match.
    pub fn copy_value_from(&mut self, other: &Parameter) -> Result<(), NumericError> {
        if other.value.shape() != self.value.shape() {
            return Err(NumericError::ShapeMismatch {
                op: "parameter copy",
                left: self.value.shape().to_vec(),
                right: other.value.shape().to_vec(),
            });
        }
        self.value
            .data_mut()
            .copy_from_slice(other.value.data());
        Ok(())
    }
}

/// Fills a tensor with samples from the uniform distribution on [-bound, bound).
/// A zero bound yields a zero tensor without consuming randomness.
pub fn uniform_init(shape: &[usize], bound: f64, rng: &mut impl rand::Rng) -> Tensor {
    if bound == 0.0 {
        return Tensor::zeros(shape);
    }
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::from_vec(shape, data).expect("shape/len agree by construction")
}
