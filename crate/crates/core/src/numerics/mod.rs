//! Dense matrix arithmetic, the feedforward classifier, and first-order
//! optimizer steps. Everything downstream computes on this substrate.

mod matrix;
mod network;

pub use matrix::Matrix;
pub use network::{
    finite_difference_gradient, softmax_cross_entropy, softmax_rows, Activation, Gradients,
    Network,
};
