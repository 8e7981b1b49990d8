//! Reconstruction of a hidden common driver from two observed chaotic series.
//!
//! Two logistic maps `x` and `y` are both forced by a third, unobserved map
//! `z`. A two-stage feedforward network is trained to predict `x_t` from
//! `x_{t-1}` and the delay vector `[y_t, y_{t-1}]`. The first stage (the
//! *mapper*) only sees the delay vector and talks to the second stage (the
//! *coach*) through a single scalar. After training, the mapper alone is an
//! estimator of `z_{t-1}`.
//!
//! Modules, bottom-up:
//!
//! - [`dynamics`]: the coupled map system and its analytic inverse.
//! - [`embedding`]: delay embeddings and the aligned supervised dataset.
//! - [`neuralnet`]: dense layers, backprop, MSE, ADAM, gradient checking.
//! - [`mapper_coach`]: the composed network, training, reconstruction, model files.
//! - [`experiment`]: restarts, r², clustering, and the evaluation report.
//! - [`cli`]: configuration and subcommand implementations.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod mapper_coach;
pub mod neuralnet;
pub mod table;

pub use error::{Error, Result};
