//! Classifiers, resampling and evaluation for small binary-labelled tabular
//! datasets, built for mortality-risk scoring from symptom indicators.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! experiment runner and the command line live in the `maternal` crate.
//!
//! Pipeline pieces, in workflow order:
//!
//! * [`data`]: raw tables, mean imputation, schema projection, seeded
//!   splitting and a synthetic generator.
//! * [`resample`]: SMOTE oversampling to an exact 50:50 class balance.
//! * [`stats`]: Pearson correlation and the labelled correlation matrix.
//! * [`tree`], [`ensemble`], [`svm`], [`nnet`]: the five classifiers.
//! * [`eval`]: confusion matrices and accuracy/precision/recall/F1.
//! * [`model`]: a tagged union over every trained classifier.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod ensemble;
mod error;
pub mod eval;
mod matrix;
pub mod model;
pub mod nnet;
pub mod resample;
pub mod rng;
pub mod stats;
pub mod svm;
pub mod tree;

pub use error::{Error, Result};
pub use matrix::Matrix;
