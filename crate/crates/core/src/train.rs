//! Cross-entropy plus noise entropy regularisation, optimized with AdamW.
//!
//! Each step computes the cross-entropy on a batch of IND sentences and the
//! mean JSD-to-uniform of the model's predictions on a second input set:
//! noised copies of the batch (`noier`), the batch itself (`ger`), or the
//! batch's sentence embeddings with Gaussian noise added (`cner`). The total
//! loss is `ce + alpha * er`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, LabeledExample, Sentence};
use crate::error::{Error, Result};
use crate::evaluate::{f1, Averaging};
use crate::model::{EmbeddingClassifier, ForwardCache, ParameterGradients, Parameters, ProbabilisticClassifier};
use crate::noise::{generate_noise, noise_batch, NoiseConfig};
use crate::prob::{jsd_to_uniform_with_grad, msp, softmax_slice};
use crate::rng::RandomSource;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// ER on word-level noised copies of the batch.
    Noier,
    /// Cross-entropy only.
    PlainCe,
    /// ER on the unmodified IND batch.
    Ger,
    /// ER on Gaussian-perturbed sentence embeddings of the batch.
    Cner,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Noier => "noier",
            Self::PlainCe => "plain_ce",
            Self::Ger => "ger",
            Self::Cner => "cner",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the ER term.
    pub alpha: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adamw: AdamWConfig,
    pub max_epochs: usize,
    pub patience: usize,
    pub variant: Variant,
    pub cner_sigma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            batch_size: 32,
            learning_rate: 1e-3,
            adamw: AdamWConfig::default(),
            max_epochs: 30,
            patience: 3,
            variant: Variant::Noier,
            cner_sigma: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("train.alpha must be >= 0, got {}", self.alpha));
        }
        if self.batch_size == 0 {
            return bad("train.batch_size must be >= 1".into());
        }
        if self.patience == 0 {
            return bad("train.patience must be >= 1".into());
        }
        if self.max_epochs == 0 {
            return bad("train.max_epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("train.learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.cner_sigma >= 0.0) {
            return bad(format!("train.cner_sigma must be >= 0, got {}", self.cner_sigma));
        }
        let a = &self.adamw;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return bad("train.adamw betas must be in [0, 1)".into());
        }
        if !(a.epsilon > 0.0) || !(a.weight_decay >= 0.0) {
            return bad("train.adamw.epsilon must be > 0 and weight_decay >= 0".into());
        }
        Ok(())
    }
}

/// Decoupled-weight-decay Adam.
#[derive(Clone, Debug)]
pub struct AdamW<T: Scalar> {
    cfg: AdamWConfig,
    learning_rate: T,
    m: Parameters<T>,
    v: Parameters<T>,
    step: i32,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(like: &Parameters<T>, learning_rate: f64, cfg: AdamWConfig) -> Self {
        let zeros = |p: &Parameters<T>| {
            let mut z = p.clone();
            z.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|v| *v = T::zero()));
            z
        };
        Self {
            cfg,
            learning_rate: T::of(learning_rate),
            m: zeros(like),
            v: zeros(like),
            step: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
    pub fn update(&mut self, params: &mut Parameters<T>, grads: &ParameterGradients<T>) {
        self.step += 1;
        let b1 = T::of(self.cfg.beta1);
        let b2 = T::of(self.cfg.beta2);
        let eps = T::of(self.cfg.epsilon);
        let wd = T::of(self.cfg.weight_decay);
        let lr = self.learning_rate;
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        let one = T::one();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (one - b1) * gi;
                v[i] = b2 * v[i] + (one - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] = p[i] - lr * (m_hat / (v_hat.sqrt() + eps)) - lr * wd * p[i];
            }
        }
    }
}

/// Mean cross-entropy (nats) of `labels` under `softmax(logits)`, with `dL/dlogits = (p - onehot) / n`.
pub fn ce_from_logits<T: Scalar>(logits: &[Vec<T>], labels: &[usize]) -> (T, Vec<Vec<T>>) {
    let n = T::of_usize(logits.len());
    let mut total = T::zero();
    let grads = logits
        .iter()
        .zip(labels)
        .map(|(z, &y)| {
            let max = z.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
            total += lse - z[y];
            let mut g = softmax_slice(z);
            g[y] -= T::one();
            g.into_iter().map(|v| v / n).collect()
        })
        .collect();
    (total / n, grads)
}

/// Mean JSD-to-uniform (bits) of `softmax(logits)` with per-example logit gradients.
pub fn er_from_logits<T: Scalar>(logits: &[Vec<T>]) -> (T, Vec<Vec<T>>) {
    let n = T::of_usize(logits.len());
    let mut total = T::zero();
    let grads = logits
        .iter()
        .map(|z| {
            let (v, g) = jsd_to_uniform_with_grad(z);
            total += v;
            g.into_iter().map(|x| x / n).collect()
        })
        .collect();
    (total / n, grads)
}

/// Inference-mode cross-entropy of `model` on `batch`.
pub fn ce_loss<T: Scalar>(model: &EmbeddingClassifier<T>, batch: &[LabeledExample]) -> (T, Vec<Vec<T>>) {
    let logits: Vec<Vec<T>> = batch.iter().map(|e| model.forward_cached(&e.sentence, None).logits).collect();
    let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
    ce_from_logits(&logits, &labels)
}

/// Inference-mode ER loss of `model` on `noised`.
pub fn er_loss<T: Scalar>(model: &EmbeddingClassifier<T>, noised: &[Sentence]) -> (T, Vec<Vec<T>>) {
    let logits: Vec<Vec<T>> = noised.iter().map(|s| model.forward_cached(s, None).logits).collect();
    er_from_logits(&logits)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub ce: f64,
    pub er: f64,
}
// Child-stream indices under a training step's RandomSource.
/// Child-stream indices under a training step's [`RandomSource`].
pub const STREAM_DROPOUT: u64 = 0;
pub const STREAM_NOISE: u64 = 1;
pub const STREAM_ER_DROPOUT: u64 = 2;
pub const STREAM_CNER: u64 = 3;

/// Total-loss gradient for one batch, without applying it.
///
/// Every random draw comes from a child stream of `rng`, one per purpose, so
/// with `alpha = 0` the parameters follow exactly the `plain_ce` trajectory.
pub fn batch_gradients<T: Scalar>(
    model: &EmbeddingClassifier<T>,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    noise_cfg: &NoiseConfig,
    rng: &RandomSource,
) -> (ParameterGradients<T>, StepLosses) {
    let mut dropout_rng = rng.child(STREAM_DROPOUT);
    let caches: Vec<ForwardCache<T>> = batch
        .iter()
        .map(|e| model.forward_cached(&e.sentence, Some(&mut dropout_rng)))
        .collect();
    let logits: Vec<Vec<T>> = caches.iter().map(|c| c.logits.clone()).collect();
    let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
    let (ce, ce_grads) = ce_from_logits(&logits, &labels);
    let mut grads = model.backward(&caches, &ce_grads);

    let er_caches: Option<Vec<ForwardCache<T>>> = match cfg.variant {
        Variant::PlainCe => None,
        Variant::Ger => Some(caches),
        Variant::Noier => {
            let mut noise_rng = rng.child(STREAM_NOISE);
            let mut er_dropout = rng.child(STREAM_ER_DROPOUT);
            Some(
                batch
                    .iter()
                    .map(|e| {
                        let noised = generate_noise(&e.sentence, noise_cfg, Some(model.vocab()), &mut noise_rng);
                        model.forward_cached(&noised, Some(&mut er_dropout))
                    })
                    .collect(),
            )
        }
        Variant::Cner => {
            let mut gauss_rng = rng.child(STREAM_CNER);
            let mut er_dropout = rng.child(STREAM_ER_DROPOUT);
            let normal = Normal::new(0.0, cfg.cner_sigma).expect("sigma validated nonnegative");
            Some(
                batch
                    .iter()
                    .map(|e| {
                        let ids = model.encode(&e.sentence);
                        let mut emb = model.embed(&e.sentence).0;
                        for v in &mut emb {
                            *v += T::of(normal.sample(&mut gauss_rng));
                        }
                        model.forward_from_embedding_cached(ids, emb, Some(&mut er_dropout))
                    })
                    .collect(),
            )
        }
    };

    let mut er = T::zero();
    if let Some(er_caches) = er_caches {
        let er_logits: Vec<Vec<T>> = er_caches.iter().map(|c| c.logits.clone()).collect();
        let (loss, er_grads) = er_from_logits(&er_logits);
        er = loss;
        let alpha = T::of(cfg.alpha);
        let scaled: Vec<Vec<T>> = er_grads
            .into_iter()
            .map(|g| g.into_iter().map(|v| v * alpha).collect())
            .collect();
        model.backward_into(&er_caches, &scaled, &mut grads);
    }
    (
        grads,
        StepLosses {
            ce: ce.as_f64(),
            er: er.as_f64(),
        },
    )
}

/// One optimization step on `batch`.
pub fn train_step<T: Scalar>(
    model: &mut EmbeddingClassifier<T>,
    optimizer: &mut AdamW<T>,
    batch: &[LabeledExample],
    cfg: &TrainConfig,
    noise_cfg: &NoiseConfig,
    rng: &RandomSource,
) -> StepLosses {
    let (grads, losses) = batch_gradients(model, batch, cfg, noise_cfg, rng);
    optimizer.update(model.params_mut(), &grads);
    losses
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_ce: f64,
    pub train_er: f64,
    pub val_loss: f64,
    pub val_f1: f64,
    /// Mean MSP on a fixed noised copy of the validation set.
    pub val_noise_msp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: Variant,
    pub epochs: Vec<EpochMetrics>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Appends one row per epoch to a CSV log, writing the header if the file is new.
    pub fn append_csv(&self, path: &Path) -> Result<()> {
        let fresh = !path.exists();
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "variant,epoch,train_ce,train_er,val_loss,val_f1,val_noise_msp")?;
        }
        for e in &self.epochs {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                self.variant, e.epoch, e.train_ce, e.train_er, e.val_loss, e.val_f1, e.val_noise_msp
            )?;
        }
        Ok(())
    }
}

/// Patience-based early stopping on a loss that should decrease.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    /// Records an epoch's loss; returns `(improved, should_stop)`.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> (bool, bool) {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            (true, false)
        } else {
            self.bad_epochs += 1;
            (false, self.bad_epochs >= self.patience)
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

const SHUFFLE_STREAM: u64 = u64::MAX;
const VAL_NOISE_STREAM: u64 = u64::MAX - 1;

/// Trains until validation CE stops improving for `patience` epochs; returns the best-epoch model.
pub fn train<T: Scalar>(
    model: EmbeddingClassifier<T>,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    noise_cfg: &NoiseConfig,
    cfg: &TrainConfig,
) -> Result<(EmbeddingClassifier<T>, TrainReport)> {
    cfg.validate()?;
    noise_cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidConfig("training and validation sets must be nonempty".into()));
    }
    if train_set.num_classes() != model.num_classes() || val_set.num_classes() != model.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: model.num_classes(),
            got: train_set.num_classes(),
        });
    }

    let val_sentences = val_set.sentences();
    let val_labels = val_set.labels();
    let val_noised = noise_batch(
        &val_sentences,
        noise_cfg,
        Some(model.vocab()),
        RandomSource::derive(cfg.seed, &[VAL_NOISE_STREAM]).seed(),
    );

    let mut model = model;
    let mut optimizer = AdamW::new(model.params(), cfg.learning_rate, cfg.adamw.clone());
    let mut best = model.clone();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopped_epoch = cfg.max_epochs;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut RandomSource::derive(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]));
        let (mut ce_sum, mut er_sum, mut n_batches) = (0.0, 0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<LabeledExample> = chunk.iter().map(|&i| train_set.examples()[i].clone()).collect();
            let step_rng = RandomSource::derive(cfg.seed, &[epoch as u64, b as u64]);
            let losses = train_step(&mut model, &mut optimizer, &batch, cfg, noise_cfg, &step_rng);
            if !model.params().all_finite() {
                return Err(Error::Diverged { epoch });
            }
            ce_sum += losses.ce;
            er_sum += losses.er;
            n_batches += 1;
        }

        let (val_loss, _) = ce_loss(&model, val_set.examples());
        let preds: Vec<usize> = val_sentences.iter().map(|s| model.predict(s)).collect();
        let val_f1 = f1(&preds, &val_labels, model.num_classes(), Averaging::Macro)?;
        let val_noise_msp = val_noised
            .iter()
            .map(|s| msp(&model.predict_proba(s)).as_f64())
            .sum::<f64>()
            / val_noised.len() as f64;
        let val_loss = val_loss.as_f64();
        epochs.push(EpochMetrics {
            epoch,
            train_ce: ce_sum / n_batches as f64,
            train_er: er_sum / n_batches as f64,
            val_loss,
            val_f1,
            val_noise_msp,
        });

        let (improved, stop) = stopper.observe(epoch, val_loss);
        if improved {
            best = model.clone();
        }
        if stop {
            stopped_epoch = epoch;
            break;
        }
    }

    Ok((
        best,
        TrainReport {
            variant: cfg.variant,
            epochs,
            stopped_epoch,
            best_epoch: stopper.best_epoch(),
            best_val_loss: stopper.best(),
        },
    ))
}
