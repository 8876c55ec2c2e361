//! Suspicious-payment detection with a jointly trained GAN and VAE.
//!
//! The crate is organised bottom-up:
//!
//! - [`diffcore`]: tensors, reverse-mode tape, deterministic RNG
//! - [`nets`]: the four MLPs and the adversarial / variational / joint losses
//! - [`payflow`]: PaySim-format ingestion, synthetic flow generation, encoding, splits
//! - [`trainloop`]: Adam, the three training procedures, checkpoints
//! - [`detect`]: anomaly scoring, threshold calibration, classification
//! - [`evalkit`]: metrics and the cross-time, per-pattern and sparsity experiments

pub mod detect;
pub mod diffcore;
pub mod error;
pub mod evalkit;
pub mod nets;
pub mod payflow;
pub mod trainloop;

pub use error::{Error, Result};
