//! Numeric substrate: dense matrices, sparse products, activations, losses,
//! dropout, and Adam, each with hand-derived gradients.

pub mod adam;
pub mod dense;
pub mod ops;
pub mod sparse;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use dense::{matmul, matmul_at_b, matmul_bt, DenseMatrix};
pub use ops::{dropout, elu, elu_grad, masked_cross_entropy, softmax_rows, DropoutMask};
pub use sparse::{normalize_adjacency, spmm};
