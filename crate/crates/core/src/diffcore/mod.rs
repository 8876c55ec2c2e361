//! Dense tensors, a reverse-mode tape and the deterministic random source.
//!
//! Forward values are computed eagerly as primitives are recorded; a single
//! reverse sweep over the tape yields gradients for every parameter leaf.

mod fdcheck;
mod rng;
mod tape;
mod tensor;

pub use fdcheck::finite_difference_check;
pub use rng::{draw_standard_normal, DeterministicRng, RngState};
pub use tape::{sigmoid, GradientMap, NodeId, Primitive, Tape, LEAKY_SLOPE, LOG_FLOOR};
pub use tensor::Tensor;
