//! Building symptom-to-diagnosis training data from EHR timelines, training
//! diagnosis classifiers on it, and measuring how accuracy changes as the
//! number of covered diseases grows.
//!
//! The pipeline, module by module:
//!
//! * [`ehr`]: timelines, phenotypes, symptom universe, clinical cases
//! * [`synth`]: synthetic disease worlds and patient timelines
//! * [`text`]: tokenizer, symptom matcher and NegEx-style negation
//! * [`cases`]: resolved encounter windows and case construction
//! * [`dataset`]: encoding, patient split, balancing, coverage splits
//! * [`models`]: logistic regression, MLP and embedding MLP
//! * [`metrics`]: top-k and mean per-class accuracy
//! * [`stats`]: OLS slope test
//! * [`sweep`]: the accuracy-versus-coverage experiment

pub mod cases;
pub mod dataset;
pub mod ehr;
pub mod error;
pub mod metrics;
pub mod models;
pub mod seed;
pub mod stats;
pub mod sweep;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
