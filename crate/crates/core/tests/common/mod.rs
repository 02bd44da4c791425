//! Finite-difference helpers shared by the integration tests.

#![allow(dead_code)]

use noier::corpus::{LabeledExample, Sentence, Vocabulary};
use noier::model::{EmbeddingClassifier, ModelConfig, Parameters};
use noier::rng::RandomSource;
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
/// Below this magnitude both gradients count as zero.
pub const FD_ZERO: f64 = 1e-7;

pub fn tiny_model(seed: u64, classes: usize) -> EmbeddingClassifier<f64> {
    let vocab = Vocabulary::from_words((0..10).map(|i| format!("w{i}")));
    let cfg = ModelConfig {
        dim: 4,
        hidden: 4,
        dropout: 0.0,
        init_scale: 1.0,
    };
    EmbeddingClassifier::new(vocab, classes, &cfg, &mut RandomSource::new(seed))
}

/// Words `w0..w11`; the last two are out of vocabulary.
pub fn random_sentence(rng: &mut RandomSource) -> Sentence {
    let n = rng.random_range(1..6);
    Sentence::new((0..n).map(|_| format!("w{}", rng.random_range(0..12))).collect()).unwrap()
}

pub fn random_batch(rng: &mut RandomSource, n: usize, classes: usize) -> Vec<LabeledExample> {
    (0..n)
        .map(|_| LabeledExample {
            sentence: random_sentence(rng),
            label: rng.random_range(0..classes),
        })
        .collect()
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < FD_ZERO {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Largest relative error between `grads` and central differences of `loss`
/// over every parameter of `model`.
pub fn max_param_error<F>(model: &EmbeddingClassifier<f64>, grads: &Parameters<f64>, loss: F) -> f64
where
    F: Fn(&EmbeddingClassifier<f64>) -> f64,
{
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for t in 0..5 {
        for i in 0..grads.tensors()[t].len() {
            let orig = probe.params().tensors()[t][i];
            probe.params_mut().tensors_mut()[t][i] = orig + FD_STEP;
            let up = loss(&probe);
            probe.params_mut().tensors_mut()[t][i] = orig - FD_STEP;
            let down = loss(&probe);
            probe.params_mut().tensors_mut()[t][i] = orig;
            worst = worst.max(rel_err(grads.tensors()[t][i], (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Largest relative error between `grad` and central differences of `f` at `x`.
pub fn max_vector_error<F>(x: &[f64], grad: &[f64], f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let up = f(&probe);
        probe[i] = x[i] - FD_STEP;
        let down = f(&probe);
        probe[i] = x[i];
        worst = worst.max(rel_err(grad[i], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}
