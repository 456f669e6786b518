//! Parity-feature classifiers trained with quantum-style machinery and
//! deployed as purely classical signed-parity pipelines.
//!
//! The crate is split along the life cycle of a model:
//!
//! - [`datasets`]: planted-parity generators, file ingestion, one-hot,
//!   binarization and PCA encodings.
//! - [`parity`]: hard and relaxed parity features, word thresholding,
//!   enumeration and the classical ranking oracles.
//! - [`simulator`]: a dense state-vector simulator for the layered
//!   rotation/entangler ansatz, with shift-rule and adjoint gradients.
//! - [`losses`]: MMD, discriminative and penalty terms, the temperature
//!   schedule and the Adam/AdamW optimizer.
//! - [`models`]: linear heads, the deployable parity classifier, baselines
//!   and the learned projection encoder.
//! - [`pipelines`]: native-binary word selection, the basis/moment swap
//!   comparison, sPQC-Parity and the FGSM/rounding harness.
//! - [`cli`]: configuration, subcommands and report rendering.
//!
//! Bit convention everywhere: bit `i` of a data vector is qubit `i` and has
//! index weight `2^i` in a state vector.

pub mod bits;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod losses;
pub mod models;
pub mod parity;
pub mod pipelines;
pub mod simulator;

pub use bits::BitString;
pub use error::{Error, Result};

/// Seeds used for every multi-seed experiment unless overridden.
pub const DEFAULT_SEEDS: [u64; 5] = [42, 123, 456, 789, 1024];
