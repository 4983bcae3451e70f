//! Tensors, layers with analytic gradients, BCE loss, SGD, gradient checking
//! and the weights archive.

pub mod archive;
pub mod gradcheck;
pub mod layers;
pub mod linalg;
pub mod loss;
pub mod optim;
mod rng;
mod tensor;

pub use gradcheck::{check_layer_family, finite_diff_check, Differentiable, GradCheckConfig, GradCheckReport, LayerFamily};
pub use layers::{Buffer, Init, Layer, LayerMode, Parameter};
pub use loss::bce_loss;
pub use optim::sgd_step;
pub use rng::RngState;
pub use tensor::{Scalar, Tensor};
