//! Classifiers: a mean-embedding MLP with hand-written gradients, and a TF-IDF naive Bayes baseline.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::prob::{softmax, softmax_slice, CategoricalDistribution, Logits};
use crate::rng::RandomSource;
use crate::scalar::Scalar;
use crate::train::TrainConfig;

/// Anything that maps a sentence to a distribution over the IND classes.
pub trait ProbabilisticClassifier<T: Scalar> {
    fn num_classes(&self) -> usize;

    fn predict_proba(&self, s: &Sentence) -> CategoricalDistribution<T>;

    fn predict(&self, s: &Sentence) -> usize {
        self.predict_proba(s).argmax()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub vocab_size: usize,
    pub dim: usize,
    pub hidden: usize,
    pub classes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub hidden: usize,
    pub dropout: f64,
    /// Weights and embeddings start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            hidden: 128,
            dropout: 0.1,
            init_scale: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig("model.dim and model.hidden must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("model.dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::InvalidConfig("model.init_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Flat parameter tensors, row-major.
///
/// `embedding` is `vocab_size x dim`, `w1` is `dim x hidden`, `w2` is `hidden x classes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Parameters<T: Scalar> {
    pub embedding: Vec<T>,
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

/// Gradients share the parameter layout.
pub type ParameterGradients<T> = Parameters<T>;

impl<T: Scalar> Parameters<T> {
    pub fn zeros(shape: ModelShape) -> Self {
        Self {
            embedding: vec![T::zero(); shape.vocab_size * shape.dim],
            w1: vec![T::zero(); shape.dim * shape.hidden],
            b1: vec![T::zero(); shape.hidden],
            w2: vec![T::zero(); shape.hidden * shape.classes],
            b2: vec![T::zero(); shape.classes],
        }
    }

    pub fn tensors(&self) -> [&[T]; 5] {
        [&self.embedding, &self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<T>; 5] {
        [&mut self.embedding, &mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += factor * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, factor: T) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += factor * s;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Mean of word embedding rows for a sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceEmbedding<T: Scalar>(pub Vec<T>);

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T: Scalar> {
    pub ids: Vec<usize>,
    /// Input to the hidden layer (possibly perturbed sentence embedding).
    pub embedding: Vec<T>,
    pub pre_activation: Vec<T>,
    /// Hidden activation after ReLU and dropout.
    pub hidden: Vec<T>,
    /// Inverted-dropout multipliers, when dropout was active.
    pub mask: Option<Vec<T>>,
    pub logits: Vec<T>,
}

/// Mean-embedding -> ReLU hidden layer -> linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingClassifier<T: Scalar> {
    vocab: Vocabulary,
    shape: ModelShape,
    dropout: f64,
    params: Parameters<T>,
}

impl<T: Scalar> EmbeddingClassifier<T> {
    /// Random init from `rng`: weights and embeddings uniform in `[-init_scale, init_scale]`, biases zero.
    pub fn new(vocab: Vocabulary, classes: usize, cfg: &ModelConfig, rng: &mut RandomSource) -> Self {
        let shape = ModelShape {
            vocab_size: vocab.len(),
            dim: cfg.dim,
            hidden: cfg.hidden,
            classes,
        };
        let mut params = Parameters::zeros(shape);
        let a = cfg.init_scale;
        for t in [&mut params.embedding, &mut params.w1, &mut params.w2] {
            for v in t.iter_mut() {
                *v = T::of(rng.random_range(-a..=a));
            }
        }
        Self {
            vocab,
            shape,
            dropout: cfg.dropout,
            params,
        }
    }

    pub fn from_parts(vocab: Vocabulary, shape: ModelShape, dropout: f64, params: Parameters<T>) -> Result<Self> {
        let expected = Parameters::<T>::zeros(shape);
        for (a, b) in expected.tensors().iter().zip(params.tensors()) {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    got: b.len(),
                });
            }
        }
        if vocab.len() != shape.vocab_size {
            return Err(Error::DimensionMismatch {
                expected: shape.vocab_size,
                got: vocab.len(),
            });
        }
        Ok(Self {
            vocab,
            shape,
            dropout,
            params,
        })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn params(&self) -> &Parameters<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters<T> {
        &mut self.params
    }

    pub fn encode(&self, s: &Sentence) -> Vec<usize> {
        self.vocab.encode(s)
    }

    fn embed_ids(&self, ids: &[usize]) -> Vec<T> {
        let d = self.shape.dim;
        let mut e = vec![T::zero(); d];
        for &id in ids {
            for (acc, &v) in e.iter_mut().zip(&self.params.embedding[id * d..(id + 1) * d]) {
                *acc += v;
            }
        }
        let n = T::of_usize(ids.len());
        for v in &mut e {
            *v /= n;
        }
        e
    }

    /// Mean of the embedding rows of the sentence's words; OOV words use the unknown row.
    pub fn embed(&self, s: &Sentence) -> SentenceEmbedding<T> {
        SentenceEmbedding(self.embed_ids(&self.encode(s)))
    }

    /// Forward pass from a sentence embedding, keeping intermediates.
    pub fn forward_from_embedding_cached(
        &self,
        ids: Vec<usize>,
        embedding: Vec<T>,
        dropout_rng: Option<&mut RandomSource>,
    ) -> ForwardCache<T> {
        let ModelShape { dim, hidden, classes, .. } = self.shape;
        let p = &self.params;
        let mut pre = p.b1.clone();
        for (i, &ei) in embedding.iter().enumerate().take(dim) {
            let row = &p.w1[i * hidden..(i + 1) * hidden];
            for (acc, &w) in pre.iter_mut().zip(row) {
                *acc += ei * w;
            }
        }
        let mut h: Vec<T> = pre.iter().map(|&v| v.max(T::zero())).collect();
        let mask = match dropout_rng {
            Some(rng) if self.dropout > 0.0 => {
                let keep = 1.0 - self.dropout;
                let scale = T::of(1.0 / keep);
                let m: Vec<T> = (0..hidden)
                    .map(|_| if rng.random_bool(keep) { scale } else { T::zero() })
                    .collect();
                for (hv, &mv) in h.iter_mut().zip(&m) {
                    *hv *= mv;
                }
                Some(m)
            }
            _ => None,
        };
        let mut logits = p.b2.clone();
        for (j, &hj) in h.iter().enumerate() {
            if hj == T::zero() {
                continue;
            }
            let row = &p.w2[j * classes..(j + 1) * classes];
            for (acc, &w) in logits.iter_mut().zip(row) {
                *acc += hj * w;
            }
        }
        ForwardCache {
            ids,
            embedding,
            pre_activation: pre,
            hidden: h,
            mask,
            logits,
        }
    }

    pub fn forward_ids_cached(&self, ids: Vec<usize>, dropout_rng: Option<&mut RandomSource>) -> ForwardCache<T> {
        let e = self.embed_ids(&ids);
        self.forward_from_embedding_cached(ids, e, dropout_rng)
    }

    pub fn forward_cached(&self, s: &Sentence, dropout_rng: Option<&mut RandomSource>) -> ForwardCache<T> {
        self.forward_ids_cached(self.encode(s), dropout_rng)
    }

    /// Inference-mode logits (no dropout).
    pub fn forward(&self, s: &Sentence) -> Logits<T> {
        Logits::new(self.forward_cached(s, None).logits).expect("finite parameters give finite logits")
    }

    /// Training-mode logits with dropout on the hidden layer.
    pub fn forward_train(&self, s: &Sentence, rng: &mut RandomSource) -> Logits<T> {
        Logits::new(self.forward_cached(s, Some(rng)).logits).expect("finite parameters give finite logits")
    }

    pub fn logits_from_embedding(&self, e: &SentenceEmbedding<T>) -> Logits<T> {
        let cache = self.forward_from_embedding_cached(Vec::new(), e.0.clone(), None);
        Logits::new(cache.logits).expect("finite parameters give finite logits")
    }

    /// Accumulates parameter gradients for one example into `grads` and
    /// returns the gradient with respect to the cached input embedding.
    fn backward_one(&self, cache: &ForwardCache<T>, dlogits: &[T], grads: &mut ParameterGradients<T>) -> Vec<T> {
        let ModelShape { dim, hidden, classes, .. } = self.shape;
        let p = &self.params;
        for (g, &d) in grads.b2.iter_mut().zip(dlogits) {
            *g += d;
        }
        let mut dpre = vec![T::zero(); hidden];
        for j in 0..hidden {
            let w2row = &p.w2[j * classes..(j + 1) * classes];
            let hj = cache.hidden[j];
            if hj != T::zero() {
                let grow = &mut grads.w2[j * classes..(j + 1) * classes];
                for (g, &d) in grow.iter_mut().zip(dlogits) {
                    *g += hj * d;
                }
            }
            if cache.pre_activation[j] <= T::zero() {
                continue;
            }
            let mut dh: T = w2row.iter().zip(dlogits).map(|(&w, &d)| w * d).sum();
            if let Some(m) = &cache.mask {
                dh *= m[j];
            }
            dpre[j] = dh;
        }
        for (g, &d) in grads.b1.iter_mut().zip(&dpre) {
            *g += d;
        }
        let mut de = vec![T::zero(); dim];
        for i in 0..dim {
            let ei = cache.embedding[i];
            let w1row = &p.w1[i * hidden..(i + 1) * hidden];
            let grow = &mut grads.w1[i * hidden..(i + 1) * hidden];
            let mut acc = T::zero();
            for j in 0..hidden {
                grow[j] += ei * dpre[j];
                acc += w1row[j] * dpre[j];
            }
            de[i] = acc;
        }
        if !cache.ids.is_empty() {
            let inv = T::one() / T::of_usize(cache.ids.len());
            for &id in &cache.ids {
                let row = &mut grads.embedding[id * dim..(id + 1) * dim];
                for (g, &d) in row.iter_mut().zip(&de) {
                    *g += d * inv;
                }
            }
        }
        de
    }

    /// Gradients of a loss given `dL/dlogits` for each cached example.
    ///
    /// The per-example logit gradients are expected to already include any
    /// batch-mean factor, so the result is the exact gradient of that loss.
    /// Embedding rows of words absent from the batch get zero gradient.
    pub fn backward(&self, caches: &[ForwardCache<T>], loss_grads: &[Vec<T>]) -> ParameterGradients<T> {
        let mut grads = Parameters::zeros(self.shape);
        self.backward_into(caches, loss_grads, &mut grads);
        grads
    }

    pub fn backward_into(&self, caches: &[ForwardCache<T>], loss_grads: &[Vec<T>], grads: &mut ParameterGradients<T>) {
        assert_eq!(caches.len(), loss_grads.len(), "one logit gradient per cached example");
        for (c, g) in caches.iter().zip(loss_grads) {
            self.backward_one(c, g, grads);
        }
    }

    /// `dL/d(sentence embedding)` for a single cached forward pass.
    pub fn embedding_gradient(&self, cache: &ForwardCache<T>, dlogits: &[T]) -> Vec<T> {
        let mut scratch = Parameters::zeros(ModelShape {
            vocab_size: 0,
            ..self.shape
        });
        let detached = ForwardCache {
            ids: Vec::new(),
            ..cache.clone()
        };
        self.backward_one(&detached, dlogits, &mut scratch)
    }

    pub fn to_checkpoint(&self, noise: &NoiseConfig, train: &TrainConfig) -> Checkpoint<T> {
        Checkpoint {
            format_version: Checkpoint::<T>::VERSION,
            shape: self.shape,
            dropout: self.dropout,
            vocab_hash: self.vocab.hash(),
            noise: noise.clone(),
            train: train.clone(),
            params: self.params.clone(),
        }
    }
}

impl<T: Scalar> ProbabilisticClassifier<T> for EmbeddingClassifier<T> {
    fn num_classes(&self) -> usize {
        self.shape.classes
    }

    fn predict_proba(&self, s: &Sentence) -> CategoricalDistribution<T> {
        softmax(&self.forward(s))
    }
}

/// Versioned JSON container for a trained classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Checkpoint<T: Scalar> {
    pub format_version: u32,
    pub shape: ModelShape,
    pub dropout: f64,
    pub vocab_hash: String,
    pub noise: NoiseConfig,
    pub train: TrainConfig,
    pub params: Parameters<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub const VERSION: u32 = 1;

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let ck: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.format_version != Self::VERSION {
            return Err(Error::UnsupportedVersion(ck.format_version));
        }
        Ok(ck)
    }

    /// Rebuilds the classifier; fails if `vocab` is not the one it was trained with.
    pub fn into_model(self, vocab: Vocabulary) -> Result<EmbeddingClassifier<T>> {
        let got = vocab.hash();
        if got != self.vocab_hash {
            return Err(Error::VocabularyMismatch {
                expected: self.vocab_hash,
                got,
            });
        }
        EmbeddingClassifier::from_parts(vocab, self.shape, self.dropout, self.params)
    }
}

/// Multinomial naive Bayes over L2-normalized TF-IDF vectors with add-one smoothing.
#[derive(Clone, Debug, PartialEq)]
pub struct TfidfNbClassifier<T: Scalar> {
    index: HashMap<String, usize>,
    idf: Vec<T>,
    /// `[class][word]` log-likelihoods.
    log_likelihood: Vec<Vec<T>>,
    /// Per-class log-likelihood of a word never seen in training.
    log_unseen: Vec<T>,
    log_prior: Vec<T>,
}

impl<T: Scalar> TfidfNbClassifier<T> {
    fn term_counts(&self, s: &Sentence) -> Vec<(usize, T)> {
        let mut counts: Vec<(usize, T)> = Vec::new();
        for w in s.words() {
            if let Some(&i) = self.index.get(&Vocabulary::fold(w)) {
                match counts.iter_mut().find(|(j, _)| *j == i) {
                    Some((_, c)) => *c += T::one(),
                    None => counts.push((i, T::one())),
                }
            }
        }
        counts.sort_by_key(|(i, _)| *i);
        counts
    }

    /// TF-IDF features over known words, L2-normalized. Unknown words are ignored.
    pub fn features(&self, s: &Sentence) -> Vec<(usize, T)> {
        let mut x: Vec<(usize, T)> = self
            .term_counts(s)
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i]))
            .collect();
        let norm = x.iter().map(|(_, v)| *v * *v).sum::<T>().sqrt();
        if norm > T::zero() {
            for (_, v) in &mut x {
                *v /= norm;
            }
        }
        x
    }

    /// Smoothed likelihood of `word` under `class`; finite and nonzero for every word.
    pub fn word_likelihood(&self, class: usize, word: &str) -> T {
        match self.index.get(&Vocabulary::fold(word)) {
            Some(&i) => self.log_likelihood[class][i].exp(),
            None => self.log_unseen[class].exp(),
        }
    }

    pub fn log_priors(&self) -> &[T] {
        &self.log_prior
    }

    pub fn priors(&self) -> Vec<T> {
        self.log_prior.iter().map(|v| v.exp()).collect()
    }

    pub fn log_likelihood(&self, class: usize, word: &str) -> Option<T> {
        self.index.get(&Vocabulary::fold(word)).map(|&i| self.log_likelihood[class][i])
    }

    /// Unnormalized class log-scores: `log prior + sum_w x_w log theta_cw`.
    pub fn class_log_scores(&self, s: &Sentence) -> Vec<T> {
        let x = self.features(s);
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(&prior, ll)| prior + x.iter().map(|&(i, v)| v * ll[i]).sum::<T>())
            .collect()
    }
}

impl<T: Scalar> ProbabilisticClassifier<T> for TfidfNbClassifier<T> {
    fn num_classes(&self) -> usize {
        self.log_prior.len()
    }

    fn predict_proba(&self, s: &Sentence) -> CategoricalDistribution<T> {
        CategoricalDistribution::new(softmax_slice(&self.class_log_scores(s)))
            .expect("log-sum-exp posterior is a distribution")
    }
}

/// Fits IDF `ln((1 + N) / (1 + df)) + 1`, class priors from frequencies and
/// add-one smoothed word likelihoods from summed TF-IDF weights.
pub fn nb_fit<T: Scalar>(train: &LabeledDataset) -> TfidfNbClassifier<T> {
    let k = train.num_classes();
    let n_docs = train.len();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut df: Vec<usize> = Vec::new();
    let docs: Vec<Vec<(usize, usize)>> = train
        .examples()
        .iter()
        .map(|e| {
            let mut counts: Vec<(usize, usize)> = Vec::new();
            for w in e.sentence.words() {
                let folded = Vocabulary::fold(w);
                let next = index.len();
                let i = *index.entry(folded).or_insert(next);
                if i == df.len() {
                    df.push(0);
                }
                match counts.iter_mut().find(|(j, _)| *j == i) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((i, 1)),
                }
            }
            for (i, _) in &counts {
                df[*i] += 1;
            }
            counts
        })
        .collect();

    let v = index.len();
    let n = T::of_usize(n_docs);
    let idf: Vec<T> = df
        .iter()
        .map(|&d| ((T::one() + n) / (T::one() + T::of_usize(d))).ln() + T::one())
        .collect();

    let mut weights = vec![vec![T::zero(); v]; k];
    let mut class_counts = vec![0usize; k];
    for (doc, e) in docs.iter().zip(train.examples()) {
        class_counts[e.label] += 1;
        let norm = doc
            .iter()
            .map(|&(i, tf)| {
                let x = T::of_usize(tf) * idf[i];
                x * x
            })
            .sum::<T>()
            .sqrt();
        for &(i, tf) in doc {
            weights[e.label][i] += T::of_usize(tf) * idf[i] / norm;
        }
    }

    let vocab_size = T::of_usize(v);
    let mut log_likelihood = Vec::with_capacity(k);
    let mut log_unseen = Vec::with_capacity(k);
    for w in &weights {
        let denom = w.iter().copied().sum::<T>() + vocab_size;
        log_likelihood.push(w.iter().map(|&x| ((x + T::one()) / denom).ln()).collect());
        log_unseen.push((T::one() / denom).ln());
    }
    let log_prior = class_counts
        .iter()
        .map(|&c| (T::of_usize(c) / n).ln())
        .collect();

    TfidfNbClassifier {
        index,
        idf,
        log_likelihood,
        log_unseen,
        log_prior,
    }
}

pub fn nb_predict_proba<T: Scalar>(m: &TfidfNbClassifier<T>, s: &Sentence) -> CategoricalDistribution<T> {
    m.predict_proba(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab_from, tokenize, LabeledExample, SplitTag};
    use crate::prob::msp;

    fn vocab() -> Vocabulary {
        Vocabulary::from_words(["apple", "banana", "cherry", "date"].map(String::from))
    }

    fn tiny(seed: u64) -> EmbeddingClassifier<f64> {
        let cfg = ModelConfig {
            dim: 4,
            hidden: 4,
            dropout: 0.0,
            init_scale: 1.0,
        };
        EmbeddingClassifier::new(vocab(), 3, &cfg, &mut RandomSource::new(seed))
    }

    fn row(m: &EmbeddingClassifier<f64>, id: usize) -> Vec<f64> {
        let d = m.shape().dim;
        m.params().embedding[id * d..(id + 1) * d].to_vec()
    }

    #[test]
    fn embed_examples() {
        let m = tiny(1);
        let one = Sentence::from_words(&["banana"]);
        assert_eq!(m.embed(&one).0, row(&m, m.vocab().id("banana")));
        let two = Sentence::from_words(&["banana", "banana"]);
        assert_eq!(m.embed(&two).0, m.embed(&one).0);
        let oov = Sentence::from_words(&["xyz", "qqq"]);
        assert_eq!(m.embed(&oov).0, row(&m, Vocabulary::UNKNOWN));
    }

    #[test]
    fn zero_output_layer_gives_uniform() {
        let mut m = tiny(2);
        m.params_mut().w2.iter_mut().for_each(|v| *v = 0.0);
        let s = Sentence::from_words(&["apple", "date"]);
        assert!(m.forward(&s).values().iter().all(|&v| v == 0.0));
        assert_eq!(msp(&m.predict_proba(&s)), 1.0 / 3.0);
    }

    #[test]
    fn inference_is_deterministic() {
        let m = tiny(3);
        let s = Sentence::from_words(&["apple", "cherry", "zzz"]);
        assert_eq!(m.forward(&s), m.forward(&s));
    }

    #[test]
    fn dropout_changes_training_forward_only() {
        let cfg = ModelConfig {
            dim: 8,
            hidden: 32,
            dropout: 0.5,
            init_scale: 1.0,
        };
        let m: EmbeddingClassifier<f64> = EmbeddingClassifier::new(vocab(), 2, &cfg, &mut RandomSource::new(4));
        let s = Sentence::from_words(&["apple"]);
        let mut rng = RandomSource::new(5);
        let a = m.forward_train(&s, &mut rng);
        let b = m.forward_train(&s, &mut rng);
        assert_ne!(a, b);
        assert_eq!(m.forward(&s), m.forward(&s));
    }

    #[test]
    fn zero_loss_grads_give_zero_gradients() {
        let m = tiny(6);
        let caches: Vec<_> = ["apple banana", "cherry"]
            .iter()
            .map(|t| m.forward_cached(&tokenize(t).unwrap(), None))
            .collect();
        let g = m.backward(&caches, &[vec![0.0; 3], vec![0.0; 3]]);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn absent_rows_have_zero_gradient() {
        let m = tiny(7);
        let caches = vec![m.forward_cached(&Sentence::from_words(&["apple", "banana"]), None)];
        let g = m.backward(&caches, &[vec![0.3, -0.1, -0.2]]);
        let d = m.shape().dim;
        for word in ["cherry", "date"] {
            let id = m.vocab().id(word);
            assert!(g.embedding[id * d..(id + 1) * d].iter().all(|&v| v == 0.0));
        }
        let id = m.vocab().id("apple");
        assert!(g.embedding[id * d..(id + 1) * d].iter().any(|&v| v != 0.0));
    }

    fn param_at(p: &mut Parameters<f64>, t: usize, i: usize) -> &mut f64 {
        &mut p.tensors_mut()[t][i]
    }

    #[test]
    fn logit_gradient_wrt_w2_matches_finite_differences() {
        // d(logit_c)/dW2 via backward with a one-hot upstream gradient.
        let m = tiny(8);
        let s = Sentence::from_words(&["apple", "cherry"]);
        for c in 0..3 {
            let mut up = vec![0.0; 3];
            up[c] = 1.0;
            let g = m.backward(&[m.forward_cached(&s, None)], &[up]);
            for i in 0..m.params().w2.len() {
                let h = 1e-5;
                let mut plus = m.clone();
                *param_at(plus.params_mut(), 3, i) += h;
                let mut minus = m.clone();
                *param_at(minus.params_mut(), 3, i) -= h;
                let fd = (plus.forward(&s).values()[c] - minus.forward(&s).values()[c]) / (2.0 * h);
                let an = g.w2[i];
                assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-8), "{fd} {an}");
            }
        }
    }

    #[test]
    fn checkpoint_roundtrip_and_hash_check() {
        let m = tiny(9);
        let ck = m.to_checkpoint(&NoiseConfig::default(), &TrainConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ck.save(&path).unwrap();
        let back = Checkpoint::<f64>::load(&path).unwrap().into_model(vocab()).unwrap();
        assert_eq!(back, m);
        let other = Vocabulary::from_words(["apple"].map(String::from));
        assert!(matches!(
            Checkpoint::<f64>::load(&path).unwrap().into_model(other),
            Err(Error::VocabularyMismatch { .. })
        ));
    }

    #[test]
    fn generic_over_f32() {
        let cfg = ModelConfig {
            dim: 4,
            hidden: 4,
            ..ModelConfig::default()
        };
        let m: EmbeddingClassifier<f32> = EmbeddingClassifier::new(vocab(), 2, &cfg, &mut RandomSource::new(1));
        let p = m.predict_proba(&Sentence::from_words(&["apple"]));
        assert_eq!(p.num_classes(), 2);
    }

    fn nb_data(rows: &[(&str, usize)]) -> LabeledDataset {
        let ex = rows
            .iter()
            .map(|(t, l)| LabeledExample {
                sentence: tokenize(t).unwrap(),
                label: *l,
            })
            .collect();
        LabeledDataset::new(ex, vec!["a".into(), "b".into()], SplitTag::Train).unwrap()
    }

    #[test]
    fn nb_priors_and_dominance() {
        let d = nb_data(&[("stock market up", 0), ("stock falls", 0), ("market rally", 0), ("goal scored", 1)]);
        let nb: TfidfNbClassifier<f64> = nb_fit(&d);
        let pr = nb.priors();
        assert!((pr[0] - 0.75).abs() < 1e-12 && (pr[1] - 0.25).abs() < 1e-12);
        let s = Sentence::from_words(&["rally"]);
        assert_eq!(nb.predict(&s), 0);
        for c in 0..2 {
            let l = nb.word_likelihood(c, "neverseen");
            assert!(l.is_finite() && l > 0.0);
        }
    }

    #[test]
    fn nb_unseen_sentence_returns_priors() {
        let d = nb_data(&[("a b", 0), ("a c", 0), ("d e", 1)]);
        let nb: TfidfNbClassifier<f64> = nb_fit(&d);
        let p = nb.predict_proba(&Sentence::from_words(&["zz", "yy"]));
        for (a, b) in p.probs().iter().zip(nb.priors()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nb_matches_direct_product_oracle() {
        let texts = [
            ("the cat sat on the mat", 0),
            ("a cat and a dog", 0),
            ("dogs chase cats", 0),
            ("stocks rise on profit", 1),
            ("profit warning hits stocks", 1),
            ("market and stocks", 1),
        ];
        let d = nb_data(&texts);
        let nb: TfidfNbClassifier<f64> = nb_fit(&d);
        let vocab = build_vocab_from(d.examples().iter().map(|e| &e.sentence), 1);
        let words: Vec<&String> = vocab.corpus_words().iter().collect();
        let mut rng = RandomSource::new(11);
        for _ in 0..20 {
            let n = rng.random_range(1..6);
            let ws: Vec<String> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        "unseen".to_string()
                    } else {
                        words[rng.random_range(0..words.len())].clone()
                    }
                })
                .collect();
            let s = Sentence::new(ws).unwrap();
            // Direct route: prior * prod(theta ^ x), normalized by the plain sum.
            let x = nb.features(&s);
            let raw: Vec<f64> = (0..2)
                .map(|c| {
                    let mut v = nb.priors()[c];
                    for &(i, xi) in &x {
                        v *= nb.log_likelihood[c][i].exp().powf(xi);
                    }
                    v
                })
                .collect();
            let z: f64 = raw.iter().sum();
            let p = nb.predict_proba(&s);
            for c in 0..2 {
                assert!((p.probs()[c] - raw[c] / z).abs() <= 1e-9);
            }
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!(p.probs().iter().all(|&q| q > 0.0 && q < 1.0));
        }
    }
}
