//! Noise entropy regularisation for text classifiers.
//!
//! A classifier trained with plain cross-entropy tends to be confidently wrong
//! on sentences from outside its training distribution. This crate trains a
//! small embedding classifier with an extra loss term that pulls predictions
//! on word-level noised copies of the training sentences towards the uniform
//! distribution, and ships the evaluation stack used to measure the effect:
//! uniform disparity, IND-OOD disparity, AUROC, EER, MSP and ODIN detectors.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod cli;
pub mod corpus;
pub mod detect;
pub mod error;
pub mod evaluate;
pub mod model;
pub mod noise;
pub mod prob;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Distribution = prob::CategoricalDistribution<f64>;
pub type Logits = prob::Logits<f64>;
pub type Classifier = model::EmbeddingClassifier<f64>;
pub type NaiveBayes = model::TfidfNbClassifier<f64>;
pub type Gradients = model::ParameterGradients<f64>;
pub type Trainer = train::AdamW<f64>;
