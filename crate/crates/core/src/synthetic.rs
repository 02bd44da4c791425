//! Seeded synthetic IND/OOD benchmark.
//!
//! IND sentences mix class topic words with general words. OOD sentences are
//! built the same way from a second vocabulary with its own topics; every OOD
//! word list reuses a fixed fraction of the matching IND list and fills the
//! rest with words never seen in IND text.

use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, LabeledExample, Sentence, SplitTag};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub topic_words: usize,
    pub general_words: usize,
    /// Fraction of OOD vocabulary shared with the IND vocabulary.
    pub overlap: f64,
    /// Probability that an IND word is drawn from its class topic list.
    pub topic_prob: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub train: usize,
    pub test_ind: usize,
    pub test_ood: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            topic_words: 40,
            general_words: 120,
            overlap: 0.3,
            topic_prob: 0.25,
            min_len: 8,
            max_len: 16,
            train: 2000,
            test_ind: 500,
            test_ood: 500,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Same benchmark with sentences of at most 8 words.
    pub fn short(self) -> Self {
        Self {
            min_len: 3,
            max_len: 8,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synthetic: {m}")));
        if self.classes < 2 {
            return bad("classes must be >= 2");
        }
        if self.topic_words == 0 || self.general_words == 0 {
            return bad("topic_words and general_words must be positive");
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return bad("overlap must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.topic_prob) {
            return bad("topic_prob must be in [0, 1]");
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("need 1 <= min_len <= max_len");
        }
        if self.train < 2 * self.classes || self.test_ind == 0 || self.test_ood == 0 {
            return bad("split sizes too small");
        }
        Ok(())
    }

    fn ind_vocab_size(&self) -> usize {
        self.classes * self.topic_words + self.general_words
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticBenchmark {
    pub train: LabeledDataset,
    pub test_ind: LabeledDataset,
    pub test_ood: Vec<Sentence>,
    pub ind_vocabulary: Vec<String>,
    pub ood_vocabulary: Vec<String>,
}

const SYLLABLES: [&str; 20] = [
    "ba", "ke", "lo", "mi", "nu", "pa", "re", "si", "to", "vu", "da", "fe", "go", "hi", "ju", "ka", "le", "mo", "ni", "po",
];

/// Distinct lowercase pseudo-word for every index.
fn pseudo_word(mut i: usize) -> String {
    let mut w = String::new();
    for _ in 0..3 {
        w.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
    }
    while i > 0 {
        w.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
    }
    w
}

pub fn class_name(k: usize) -> String {
    format!("topic{k}")
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    cfg.validate()?;
    let mut rng = RandomSource::derive(cfg.seed, &[0x5e7]);
    let n_ind = cfg.ind_vocab_size();
    let mut ids: Vec<usize> = (0..n_ind * 3).collect();
    ids.shuffle(&mut rng);
    let words: Vec<String> = ids.iter().map(|&i| pseudo_word(i)).collect();
    let (ind_words, fresh) = words.split_at(n_ind);
    let topics: Vec<&[String]> = (0..cfg.classes)
        .map(|k| &ind_words[k * cfg.topic_words..(k + 1) * cfg.topic_words])
        .collect();
    let general = &ind_words[cfg.classes * cfg.topic_words..];

    // The OOD vocabulary mirrors the IND layout: one topic list per class
    // plus a general list, each reusing `overlap` of the matching IND list.
    let mut fresh = fresh.iter().cloned();
    let mut mirror = |list: &[String], rng: &mut RandomSource| -> Vec<String> {
        let shared = (cfg.overlap * list.len() as f64).round() as usize;
        let mut out: Vec<String> = list.choose_multiple(rng, shared).cloned().collect();
        out.extend(fresh.by_ref().take(list.len() - shared));
        out
    };
    let ood_topics: Vec<Vec<String>> = topics.iter().map(|t| mirror(t, &mut rng)).collect();
    let ood_general = mirror(general, &mut rng);
    let mut ood_words: Vec<String> = ood_topics.iter().flatten().chain(&ood_general).cloned().collect();
    ood_words.sort();

    let sentence = |topic: &[String], general: &[String], rng: &mut RandomSource| {
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let words: Vec<String> = (0..len)
            .map(|_| {
                let pool = if rng.random_bool(cfg.topic_prob) { topic } else { general };
                pool.choose(rng).expect("nonempty pool").clone()
            })
            .collect();
        Sentence::from_words(&words)
    };
    let class_names: Vec<String> = (0..cfg.classes).map(class_name).collect();
    let labeled = |n: usize, stream: u64, tag: SplitTag| {
        let mut rng = RandomSource::derive(cfg.seed, &[stream]);
        let examples = (0..n)
            .map(|i| {
                let label = i % cfg.classes;
                LabeledExample {
                    sentence: sentence(topics[label], general, &mut rng),
                    label,
                }
            })
            .collect();
        LabeledDataset::new(examples, class_names.clone(), tag)
    };
    let train = labeled(cfg.train, 1, SplitTag::Train)?;
    let test_ind = labeled(cfg.test_ind, 2, SplitTag::Test)?;

    let mut ood_rng = RandomSource::derive(cfg.seed, &[3]);
    let test_ood = (0..cfg.test_ood)
        .map(|i| sentence(&ood_topics[i % cfg.classes], &ood_general, &mut ood_rng))
        .collect();

    Ok(SyntheticBenchmark {
        train,
        test_ind,
        test_ood,
        ind_vocabulary: ind_words.to_vec(),
        ood_vocabulary: ood_words,
    })
}

/// Paths written by [`SyntheticBenchmark::write_csv`].
#[derive(Clone, Debug)]
pub struct BenchmarkFiles {
    pub train: PathBuf,
    pub test_ind: PathBuf,
    pub test_ood: PathBuf,
}

impl SyntheticBenchmark {
    /// Writes `train.csv` and `test_ind.csv` (`text,label`) and `test_ood.csv` (`text`).
    pub fn write_csv(&self, dir: &Path) -> Result<BenchmarkFiles> {
        std::fs::create_dir_all(dir)?;
        let files = BenchmarkFiles {
            train: dir.join("train.csv"),
            test_ind: dir.join("test_ind.csv"),
            test_ood: dir.join("test_ood.csv"),
        };
        for (path, data) in [(&files.train, &self.train), (&files.test_ind, &self.test_ind)] {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(["text", "label"])?;
            for e in data.examples() {
                w.write_record([e.sentence.join(), data.class_names()[e.label].clone()])?;
            }
            w.flush()?;
        }
        let mut w = csv::Writer::from_path(&files.test_ood)?;
        w.write_record(["text"])?;
        for s in &self.test_ood {
            w.write_record([s.join()])?;
        }
        w.flush()?;
        Ok(files)
    }
}
