//! Forward and backward rules for the layers both architectures use.
//!
//! Every layer carries an explicit backward rule. Parameterized layers
//! accumulate gradients into a zeroed value of their own type, so a layer's
//! gradient has exactly the layer's shape.

mod bidirectional;
mod conv;
mod dense;
mod embedding;
pub(crate) mod gru;
mod lstm;
mod pooling;
mod stochastic;

pub use bidirectional::{bidirectional_run, BiTrace, Bidirectional};
pub use conv::{cnn_feature_extract, max_over_time, max_over_time_backward, BranchTrace, ConvBranch};
pub use dense::{dense, Dense, DenseTrace};
pub use embedding::Embedding;
pub use gru::{gru_step, GruCell, GruSeqTrace, GruStepTrace};
pub use lstm::{lstm_step, LstmCell, LstmSeqTrace};
pub use pooling::{global_average_pool, global_average_pool_backward};
pub use stochastic::{dropout, gaussian_noise, DropoutMask, NoiseDraw};

use crate::error::{Error, Result};
use crate::numeric::Tensor;

/// Training or inference. Noise and dropout are identities in `Eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Weight matrices and filters; the only tensors L2 applies to.
    Kernel,
    Bias,
    Embedding,
}

impl ParamKind {
    pub fn code(self) -> u8 {
        match self {
            ParamKind::Kernel => 0,
            ParamKind::Bias => 1,
            ParamKind::Embedding => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ParamKind::Kernel),
            1 => Some(ParamKind::Bias),
            2 => Some(ParamKind::Embedding),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedParam<'a> {
    pub name: String,
    pub kind: ParamKind,
    pub trainable: bool,
    pub tensor: &'a Tensor,
}

impl<'a> NamedParam<'a> {
    pub fn new(name: impl Into<String>, kind: ParamKind, tensor: &'a Tensor) -> Self {
        NamedParam {
            name: name.into(),
            kind,
            trainable: true,
            tensor,
        }
    }

    pub(crate) fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}.{}", self.name);
        self
    }
}

/// Uniform access to a layer's tensors. `named_params` and `params_mut`
/// list the same tensors in the same order.
pub trait Parameterized {
    fn named_params(&self) -> Vec<NamedParam<'_>>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn param_count(&self) -> usize {
        self.named_params().iter().map(|p| p.tensor.len()).sum()
    }
}

/// A recurrent cell that can be unrolled over a `[len × input]` sequence
/// starting from a zero state.
pub trait RecurrentCell: Parameterized + Clone {
    type SeqTrace: Clone;

    fn input_size(&self) -> usize;
    fn hidden_size(&self) -> usize;

    /// Returns the hidden state at every step, `[len × hidden]`.
    fn forward_seq(&self, xs: &Tensor) -> Result<(Tensor, Self::SeqTrace)>;

    /// Backpropagation through time. Accumulates parameter gradients into
    /// `grads` and returns the gradient with respect to the inputs.
    fn backward_seq(&self, trace: &Self::SeqTrace, grad_hs: &Tensor, grads: &mut Self) -> Result<Tensor>;

    fn zeros_like(&self) -> Self;
}

pub(crate) fn check_seq(op: &'static str, xs: &Tensor, input: usize) -> Result<()> {
    if xs.rank() != 2 || xs.cols() != input {
        return Err(Error::DimensionMismatch {
            op,
            left: vec![input],
            right: xs.shape().to_vec(),
        });
    }
    Ok(())
}
