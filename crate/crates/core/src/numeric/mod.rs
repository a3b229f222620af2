//! Dense tensors, activations, and seeded initialization.

mod activation;
mod init;
mod rng;
mod tensor;

pub use activation::{activation, sigmoid, softmax, softmax_into, Activation};
pub(crate) use activation::activation_backward;
pub use init::{fans, init_params, Init};
pub use rng::RngStream;
pub use tensor::Tensor;
pub(crate) use tensor::{axpy, gemm, matvec_acc, matvec_t_acc, MatRef};
