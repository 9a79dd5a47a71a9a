//! Representational alignment between independently trained networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`metrics`] - distance ranks, Information Imbalance and the histogram
//!   estimator of the conditional copula entropy (CCE).
//! * [`teacher`] - the noisy linear teacher and its datasets.
//! * [`network`] - two-layer students (linear / ReLU) trained by full-batch
//!   gradient descent.
//! * [`theory`] - Marchenko-Pastur integrals, asymptotic and finite-size
//!   alignment, generalization error and the global-minimum oracle.
//! * [`experiments`] - seeded ensemble sweeps with CSV output.
//! * [`classifier`] - IDX ingestion, label noise and a one-hidden-layer
//!   classifier trained with minibatch SGD.
//!
//! Data-parallel loops go through [`Execution`]; with the `parallel` feature
//! disabled every policy runs sequentially.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod seed;
pub mod teacher;
pub mod theory;

pub use error::{Error, Result};
pub use exec::Execution;
