//! Word-level pseudo-OOD generation.
//!
//! Three noise functions operate on whole words, independently of any model
//! tokenizer: deletion, permutation of a subset of positions, and replacement
//! by random out-of-vocabulary strings. [`generate_noise`] picks one function
//! uniformly at random and retries until the sentence actually changes.

use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFunction {
    Deletion,
    Replacement,
    Permutation,
}

impl NoiseFunction {
    /// Selection order: the uniform draw maps to deletion first, then replacement, then permutation.
    pub const ALL: [NoiseFunction; 3] = [Self::Deletion, Self::Replacement, Self::Permutation];

    pub fn short_name(self) -> &'static str {
        match self {
            Self::Deletion => "Del",
            Self::Replacement => "Repl",
            Self::Permutation => "Permute",
        }
    }
}

impl fmt::Display for NoiseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Deletion => "Deletion",
            Self::Replacement => "Replacement",
            Self::Permutation => "Permutation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub p_del: f64,
    pub p_repl: f64,
    pub r_perm: f64,
    pub enabled: Vec<NoiseFunction>,
    pub max_retries: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p_del: 0.1,
            p_repl: 0.15,
            r_perm: 0.8,
            enabled: NoiseFunction::ALL.to_vec(),
            max_retries: 16,
        }
    }
}

impl NoiseConfig {
    pub fn with_enabled(mut self, enabled: &[NoiseFunction]) -> Self {
        self.enabled = enabled.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.enabled.is_empty() {
            return bad("noise.enabled must name at least one function".into());
        }
        if !(0.0..=1.0).contains(&self.p_del) {
            return bad(format!("noise.p_del must be in [0, 1], got {}", self.p_del));
        }
        if !(0.0..=1.0).contains(&self.p_repl) {
            return bad(format!("noise.p_repl must be in [0, 1], got {}", self.p_repl));
        }
        if !(self.r_perm > 0.0 && self.r_perm <= 1.0) {
            return bad(format!("noise.r_perm must be in (0, 1], got {}", self.r_perm));
        }
        if self.max_retries == 0 {
            return bad("noise.max_retries must be positive".into());
        }
        Ok(())
    }

    fn is_enabled(&self, f: NoiseFunction) -> bool {
        self.enabled.contains(&f)
    }
}

/// Removes each word independently with probability `p_del`, never emptying the sentence.
pub fn delete_words(s: &Sentence, p_del: f64, rng: &mut RandomSource) -> Sentence {
    let kept: Vec<String> = s
        .words()
        .iter()
        .filter(|_| !rng.random_bool(p_del))
        .cloned()
        .collect();
    if kept.is_empty() {
        let i = rng.random_range(0..s.len());
        return Sentence::from_vec_unchecked(vec![s.words()[i].clone()]);
    }
    Sentence::from_vec_unchecked(kept)
}

/// Number of positions touched by a permutation of ratio `r_perm` over `len` words.
pub fn permutation_count(r_perm: f64, len: usize) -> usize {
    // The epsilon keeps products like 0.6 * 10 from rounding up past the integer.
    let k = (r_perm * len as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(len)
}

/// Shuffles the words at `ceil(r_perm * len)` uniformly chosen positions among themselves.
pub fn permute_words(s: &Sentence, r_perm: f64, rng: &mut RandomSource) -> Result<Sentence> {
    if s.len() < 2 {
        return Err(Error::SentenceTooShort(s.len()));
    }
    let k = permutation_count(r_perm, s.len());
    let mut positions = index::sample(rng, s.len(), k).into_vec();
    positions.sort_unstable();
    let mut picked: Vec<String> = positions.iter().map(|&i| s.words()[i].clone()).collect();
    picked.shuffle(rng);
    let mut words = s.words().to_vec();
    for (&pos, w) in positions.iter().zip(picked) {
        words[pos] = w;
    }
    Ok(Sentence::from_vec_unchecked(words))
}

const REPLACEMENT_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Random uppercase/digit string of length 2..=8 that `vocab` does not know.
pub fn random_word(vocab: Option<&Vocabulary>, rng: &mut RandomSource) -> String {
    loop {
        let len = rng.random_range(2..=8);
        let w: String = (0..len)
            .map(|_| REPLACEMENT_ALPHABET[rng.random_range(0..REPLACEMENT_ALPHABET.len())] as char)
            .collect();
        if vocab.is_none_or(|v| !v.contains(&w)) {
            return w;
        }
    }
}

/// Replaces each word independently with probability `p_repl` by a random OOV string.
pub fn replace_words(s: &Sentence, p_repl: f64, vocab: Option<&Vocabulary>, rng: &mut RandomSource) -> Sentence {
    let words = s
        .words()
        .iter()
        .map(|w| {
            if rng.random_bool(p_repl) {
                random_word(vocab, rng)
            } else {
                w.clone()
            }
        })
        .collect();
    Sentence::from_vec_unchecked(words)
}

/// A noised sentence and the function that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Noised {
    pub sentence: Sentence,
    /// `None` when the retry budget ran out and the single-word fallback fired.
    pub function: Option<NoiseFunction>,
}

/// Functions that may be drawn for `s` under `cfg`.
fn candidates(s: &Sentence, cfg: &NoiseConfig) -> Vec<NoiseFunction> {
    NoiseFunction::ALL
        .into_iter()
        .filter(|&f| cfg.is_enabled(f))
        .filter(|&f| f != NoiseFunction::Permutation || s.len() >= 2)
        .collect()
}

/// Draws one function: the unit interval is divided evenly among the candidates.
fn select(cands: &[NoiseFunction], rng: &mut RandomSource) -> NoiseFunction {
    let p: f64 = rng.random();
    let i = ((p * cands.len() as f64) as usize).min(cands.len() - 1);
    cands[i]
}

/// Applies one randomly chosen noise function, retrying until the output differs from `s`.
///
/// After `cfg.max_retries` unchanged attempts a single uniformly chosen word
/// is replaced, which always changes the sentence.
pub fn generate_noise_traced(
    s: &Sentence,
    cfg: &NoiseConfig,
    vocab: Option<&Vocabulary>,
    rng: &mut RandomSource,
) -> Noised {
    let cands = candidates(s, cfg);
    if !cands.is_empty() {
        for _ in 0..cfg.max_retries {
            let f = select(&cands, rng);
            let out = apply(f, s, cfg, vocab, rng);
            if out != *s {
                return Noised {
                    sentence: out,
                    function: Some(f),
                };
            }
        }
    }
    let mut words = s.words().to_vec();
    let i = rng.random_range(0..words.len());
    let mut w = random_word(vocab, rng);
    while w == words[i] {
        w = random_word(vocab, rng);
    }
    words[i] = w;
    Noised {
        sentence: Sentence::from_vec_unchecked(words),
        function: None,
    }
}

pub fn generate_noise(
    s: &Sentence,
    cfg: &NoiseConfig,
    vocab: Option<&Vocabulary>,
    rng: &mut RandomSource,
) -> Sentence {
    generate_noise_traced(s, cfg, vocab, rng).sentence
}

/// Runs a single noise function once (no retry loop).
pub fn apply(
    f: NoiseFunction,
    s: &Sentence,
    cfg: &NoiseConfig,
    vocab: Option<&Vocabulary>,
    rng: &mut RandomSource,
) -> Sentence {
    match f {
        NoiseFunction::Deletion => delete_words(s, cfg.p_del, rng),
        NoiseFunction::Replacement => replace_words(s, cfg.p_repl, vocab, rng),
        NoiseFunction::Permutation => match permute_words(s, cfg.r_perm, rng) {
            Ok(out) => out,
            Err(_) => s.clone(),
        },
    }
}

/// Noises every sentence with a per-item stream derived from `(seed, index)`.
pub fn noise_batch(
    sentences: &[Sentence],
    cfg: &NoiseConfig,
    vocab: Option<&Vocabulary>,
    seed: u64,
) -> Vec<Sentence> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = RandomSource::derive(seed, &[i as u64]);
            generate_noise(s, cfg, vocab, &mut rng)
        })
        .collect()
}
