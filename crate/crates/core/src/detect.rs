//! Threshold detectors over model confidence: MSP and ODIN.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::evaluate::{auroc, eer_point, ScoreKind, ScoreSet};
use crate::model::{EmbeddingClassifier, ProbabilisticClassifier, SentenceEmbedding};
use crate::prob::{msp, tempered_softmax, CategoricalDistribution};
use crate::scalar::Scalar;

/// Temperature and embedding-space perturbation size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdinConfig {
    pub temperature: f64,
    pub epsilon: f64,
}

impl Default for OdinConfig {
    fn default() -> Self {
        Self {
            temperature: 1000.0,
            epsilon: 0.0014,
        }
    }
}

impl OdinConfig {
    pub const TEMPERATURES: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
    pub const EPSILONS: [f64; 11] = [0.0, 0.0005, 0.001, 0.0014, 0.002, 0.0024, 0.005, 0.01, 0.05, 0.1, 0.2];

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::NonPositiveTemperature(self.temperature));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("odin.epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Models that expose a differentiable sentence-embedding input.
pub trait EmbeddingPath<T: Scalar>: ProbabilisticClassifier<T> {
    fn embedding_model(&self) -> Option<&EmbeddingClassifier<T>>;
}

impl<T: Scalar> EmbeddingPath<T> for EmbeddingClassifier<T> {
    fn embedding_model(&self) -> Option<&EmbeddingClassifier<T>> {
        Some(self)
    }
}

impl<T: Scalar> EmbeddingPath<T> for crate::model::TfidfNbClassifier<T> {
    fn embedding_model(&self) -> Option<&EmbeddingClassifier<T>> {
        None
    }
}

pub fn msp_score<T: Scalar, M: ProbabilisticClassifier<T> + ?Sized>(model: &M, s: &Sentence) -> f64 {
    msp(&model.predict_proba(s)).as_f64()
}

fn sign<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `log S_yhat(e; T)` and its gradient with respect to the sentence embedding `e`.
pub fn log_tempered_msp_gradient<T: Scalar>(
    model: &EmbeddingClassifier<T>,
    e: &SentenceEmbedding<T>,
    temperature: T,
) -> Result<(T, Vec<T>)> {
    let cache = model.forward_from_embedding_cached(Vec::new(), e.0.clone(), None);
    let logits = crate::prob::Logits::new(cache.logits.clone())?;
    let p = tempered_softmax(&logits, temperature)?;
    let top = p.argmax();
    let dz: Vec<T> = p
        .probs()
        .iter()
        .enumerate()
        .map(|(j, &pj)| {
            let delta = if j == top { T::one() } else { T::zero() };
            (delta - pj) / temperature
        })
        .collect();
    Ok((p.probs()[top].ln(), model.embedding_gradient(&cache, &dz)))
}

/// Tempered MSP after stepping the sentence embedding by `epsilon` along the
/// sign of the gradient of the log max-class probability.
pub fn odin_score<T: Scalar, M: EmbeddingPath<T> + ?Sized>(model: &M, s: &Sentence, cfg: &OdinConfig) -> Result<f64> {
    cfg.validate()?;
    let m = model.embedding_model().ok_or(Error::NotDifferentiable)?;
    let temperature = T::of(cfg.temperature);
    let e = m.embed(s);
    let perturbed = if cfg.epsilon > 0.0 {
        let (_, grad) = log_tempered_msp_gradient(m, &e, temperature)?;
        let eps = T::of(cfg.epsilon);
        // x - eps * sign(-grad)
        SentenceEmbedding(e.0.iter().zip(&grad).map(|(&x, &g)| x - eps * sign(-g)).collect())
    } else {
        e
    };
    let p: CategoricalDistribution<T> = tempered_softmax(&m.logits_from_embedding(&perturbed), temperature)?;
    Ok(msp(&p).as_f64())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoreFunction {
    Msp,
    Odin(OdinConfig),
}

impl ScoreFunction {
    pub fn kind(&self) -> ScoreKind {
        match self {
            Self::Msp => ScoreKind::Msp,
            Self::Odin(_) => ScoreKind::Odin,
        }
    }

    pub fn score<T: Scalar, M: EmbeddingPath<T> + ?Sized>(&self, model: &M, s: &Sentence) -> Result<f64> {
        match self {
            Self::Msp => Ok(msp_score(model, s)),
            Self::Odin(cfg) => odin_score(model, s, cfg),
        }
    }

    pub fn score_sets<T: Scalar, M: EmbeddingPath<T> + ?Sized>(
        &self,
        model: &M,
        ind: &[Sentence],
        ood: &[Sentence],
    ) -> Result<ScoreSet> {
        let score_all = |xs: &[Sentence]| xs.iter().map(|s| self.score(model, s)).collect::<Result<Vec<f64>>>();
        Ok(ScoreSet::new(score_all(ind)?, score_all(ood)?, self.kind()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThresholdPolicy {
    /// Threshold at the FRR/FAR crossing.
    EerPoint,
    /// Largest threshold keeping at least this fraction of IND scores at or above it.
    TprAt(f64),
}

/// Picks a threshold from IND/OOD scores.
///
/// `TprAt` counts a score equal to the threshold as accepted, matching the
/// FRR convention of the EER sweep; [`detect`] itself uses a strict `>`.
pub fn calibrate_threshold(scores: &ScoreSet, policy: ThresholdPolicy) -> Result<f64> {
    match policy {
        ThresholdPolicy::EerPoint => Ok(eer_point(scores)?.threshold),
        ThresholdPolicy::TprAt(q) => {
            if scores.ind_scores.is_empty() {
                return Err(Error::EmptySet);
            }
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::InvalidConfig(format!("tpr target must be in (0, 1], got {q}")));
            }
            let mut ind = scores.ind_scores.clone();
            ind.sort_by(f64::total_cmp);
            let n = ind.len();
            let need = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
            Ok(ind[n - need.min(n)])
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Ind,
    Ood,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub score: ScoreFunction,
    pub threshold: f64,
}

impl Detector {
    pub fn decide(&self, score: f64) -> Verdict {
        if score > self.threshold {
            Verdict::Ind
        } else {
            Verdict::Ood
        }
    }
}

/// IND iff the score is strictly above the threshold.
pub fn detect<T: Scalar, M: EmbeddingPath<T> + ?Sized>(detector: &Detector, model: &M, s: &Sentence) -> Result<Verdict> {
    Ok(detector.decide(detector.score.score(model, s)?))
}

/// Grid search over the standard ODIN space, maximizing AUROC of `ind` against `ood`.
/// Ties keep the earlier grid point (temperature-major order).
pub fn odin_search<T: Scalar>(
    model: &EmbeddingClassifier<T>,
    ind: &[Sentence],
    ood: &[Sentence],
) -> Result<(OdinConfig, f64)> {
    let mut best: Option<(OdinConfig, f64)> = None;
    for &temperature in &OdinConfig::TEMPERATURES {
        for &epsilon in &OdinConfig::EPSILONS {
            let cfg = OdinConfig { temperature, epsilon };
            let a = auroc(&ScoreFunction::Odin(cfg).score_sets(model, ind, ood)?)?;
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((cfg, a));
            }
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// Writes `sentence_id,score,verdict` rows.
pub fn export_scores(path: &Path, scores: &[f64], detector: &Detector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sentence_id", "score", "verdict"])?;
    for (i, &s) in scores.iter().enumerate() {
        let verdict = match detector.decide(s) {
            Verdict::Ind => "IND",
            Verdict::Ood => "OOD",
        };
        w.write_record([i.to_string(), format!("{s:.9}"), verdict.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::model::{nb_fit, ModelConfig};
    use crate::rng::RandomSource;
    use rand::Rng;

    fn model(seed: u64, classes: usize) -> EmbeddingClassifier<f64> {
        let v = Vocabulary::from_words((0..20).map(|i| format!("w{i}")));
        let cfg = ModelConfig {
            dim: 4,
            hidden: 4,
            dropout: 0.0,
            init_scale: 1.0,
        };
        EmbeddingClassifier::new(v, classes, &cfg, &mut RandomSource::new(seed))
    }

    fn random_sentence(rng: &mut RandomSource) -> Sentence {
        let n = rng.random_range(1..6);
        Sentence::new((0..n).map(|_| format!("w{}", rng.random_range(0..25))).collect()).unwrap()
    }

    #[test]
    fn odin_degenerates_to_msp() {
        let m = model(1, 3);
        let mut rng = RandomSource::new(2);
        let plain = OdinConfig {
            temperature: 1.0,
            epsilon: 0.0,
        };
        for _ in 0..100 {
            let s = random_sentence(&mut rng);
            assert!((odin_score(&m, &s, &plain).unwrap() - msp_score(&m, &s)).abs() <= 1e-12);
            let hot = OdinConfig {
                temperature: 7.0,
                epsilon: 0.0,
            };
            let direct = msp(&tempered_softmax(&m.forward(&s), 7.0).unwrap());
            assert_eq!(odin_score(&m, &s, &hot).unwrap(), direct);
        }
    }

    #[test]
    fn odin_perturbation_raises_tempered_msp() {
        // A small step along the gradient sign increases log S_yhat to first order.
        let m = model(3, 3);
        let mut rng = RandomSource::new(4);
        let mut raised = 0;
        for _ in 0..50 {
            let s = random_sentence(&mut rng);
            let base = odin_score(&m, &s, &OdinConfig { temperature: 10.0, epsilon: 0.0 }).unwrap();
            let pert = odin_score(&m, &s, &OdinConfig { temperature: 10.0, epsilon: 1e-3 }).unwrap();
            if pert >= base {
                raised += 1;
            }
        }
        assert_eq!(raised, 50);
    }

    #[test]
    fn odin_rejects_naive_bayes() {
        use crate::corpus::{tokenize, LabeledDataset, LabeledExample, SplitTag};
        let d = LabeledDataset::new(
            vec![
                LabeledExample { sentence: tokenize("a b").unwrap(), label: 0 },
                LabeledExample { sentence: tokenize("c d").unwrap(), label: 1 },
            ],
            vec!["x".into(), "y".into()],
            SplitTag::Train,
        )
        .unwrap();
        let nb = nb_fit::<f64>(&d);
        let s = Sentence::from_words(&["a"]);
        assert!(matches!(odin_score(&nb, &s, &OdinConfig::default()), Err(Error::NotDifferentiable)));
        assert_eq!(ScoreFunction::Msp.score(&nb, &s).unwrap(), msp_score(&nb, &s));
    }

    #[test]
    fn msp_score_examples() {
        let mut m = model(5, 4);
        m.params_mut().w2.iter_mut().for_each(|v| *v = 0.0);
        let s = Sentence::from_words(&["w1", "w2"]);
        assert_eq!(msp_score(&m, &s), 0.25);
        m.params_mut().b2[2] = 20.0;
        assert!(msp_score(&m, &s) > 0.999);
        assert_eq!(msp_score(&m, &s), msp(&m.predict_proba(&s)));
    }

    #[test]
    fn odin_auroc_invariant_to_logit_shift() {
        let m = model(6, 3);
        let mut shifted = m.clone();
        shifted.params_mut().b2.iter_mut().for_each(|b| *b += 3.5);
        let mut rng = RandomSource::new(7);
        let ind: Vec<Sentence> = (0..30).map(|_| random_sentence(&mut rng)).collect();
        let ood: Vec<Sentence> = (0..30).map(|_| random_sentence(&mut rng)).collect();
        let f = ScoreFunction::Odin(OdinConfig { temperature: 10.0, epsilon: 0.002 });
        let a = auroc(&f.score_sets(&m, &ind, &ood).unwrap()).unwrap();
        let b = auroc(&f.score_sets(&shifted, &ind, &ood).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn calibration_examples() {
        let s = ScoreSet::new(vec![0.9, 0.8], vec![0.3, 0.2], ScoreKind::Msp);
        assert!((calibrate_threshold(&s, ThresholdPolicy::EerPoint).unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(calibrate_threshold(&s, ThresholdPolicy::TprAt(1.0)).unwrap(), 0.8);
        let ind: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let s = ScoreSet::new(ind, vec![0.0], ScoreKind::Msp);
        assert_eq!(calibrate_threshold(&s, ThresholdPolicy::TprAt(0.95)).unwrap(), 0.06);
        let empty = ScoreSet::new(vec![], vec![0.1], ScoreKind::Msp);
        assert!(matches!(calibrate_threshold(&empty, ThresholdPolicy::EerPoint), Err(Error::EmptySet)));
    }

    #[test]
    fn detect_strict_inequality_and_monotone() {
        let d = Detector { score: ScoreFunction::Msp, threshold: 0.5 };
        assert_eq!(d.decide(0.51), Verdict::Ind);
        assert_eq!(d.decide(0.5), Verdict::Ood);
        for s in [0.1, 0.4, 0.55, 0.9] {
            let mut last = Verdict::Ind;
            for t in [0.2, 0.5, 0.7, 0.95] {
                let v = Detector { threshold: t, ..d }.decide(s);
                assert!(!(last == Verdict::Ood && v == Verdict::Ind));
                last = v;
            }
        }
        let m = model(8, 2);
        let s = Sentence::from_words(&["w3"]);
        assert_eq!(detect(&d, &m, &s).unwrap(), detect(&d, &m, &s).unwrap());
    }

    #[test]
    fn odin_search_covers_grid() {
        let m = model(9, 3);
        let mut rng = RandomSource::new(10);
        let ind: Vec<Sentence> = (0..10).map(|_| random_sentence(&mut rng)).collect();
        let ood: Vec<Sentence> = (0..10).map(|_| random_sentence(&mut rng)).collect();
        let (cfg, best) = odin_search(&m, &ind, &ood).unwrap();
        assert!(OdinConfig::TEMPERATURES.contains(&cfg.temperature));
        assert!(OdinConfig::EPSILONS.contains(&cfg.epsilon));
        let again = auroc(&ScoreFunction::Odin(cfg).score_sets(&m, &ind, &ood).unwrap()).unwrap();
        assert_eq!(best, again);
    }
}
