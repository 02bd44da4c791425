//! Dataset ingestion: cleanup, word-level tokenization, loading, splitting and vocabulary.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// An ordered, nonempty list of words. Casing is preserved.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Sentence {
    words: Vec<String>,
}

impl Sentence {
    pub fn new(words: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptySentence);
        }
        if words.iter().any(|w| w.is_empty() || w.chars().any(char::is_whitespace)) {
            return Err(Error::Parse {
                row: 0,
                message: "words must be nonempty and contain no whitespace".into(),
            });
        }
        Ok(Self { words })
    }

    /// Builds a sentence from whitespace-free words.
    ///
    /// Panics if `words` is empty or any word is empty; meant for literals in tests and examples.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        Self::new(words.iter().map(|w| w.as_ref().to_string()).collect())
            .expect("invalid sentence literal")
    }

    pub(crate) fn from_vec_unchecked(words: Vec<String>) -> Self {
        debug_assert!(!words.is_empty());
        Self { words }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn join(&self) -> String {
        self.words.join(" ")
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

impl TryFrom<Vec<String>> for Sentence {
    type Error = Error;

    fn try_from(words: Vec<String>) -> Result<Self> {
        Self::new(words)
    }
}

impl From<Sentence> for Vec<String> {
    fn from(s: Sentence) -> Self {
        s.words
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub sentence: Sentence,
    pub label: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    examples: Vec<LabeledExample>,
    class_names: Vec<String>,
    split_tag: SplitTag,
}

impl LabeledDataset {
    pub fn new(
        examples: Vec<LabeledExample>,
        class_names: Vec<String>,
        split_tag: SplitTag,
    ) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a dataset needs at least 2 classes, got {}",
                class_names.len()
            )));
        }
        if let Some(bad) = examples.iter().find(|e| e.label >= class_names.len()) {
            return Err(Error::DimensionMismatch {
                expected: class_names.len(),
                got: bad.label,
            });
        }
        Ok(Self {
            examples,
            class_names,
            split_tag,
        })
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn split_tag(&self) -> SplitTag {
        self.split_tag
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn sentences(&self) -> Vec<Sentence> {
        self.examples.iter().map(|e| e.sentence.clone()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    pub fn avg_sentence_length(&self) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        let total: usize = self.examples.iter().map(|e| e.sentence.len()).sum();
        total as f64 / self.examples.len() as f64
    }

    pub fn with_tag(mut self, tag: SplitTag) -> Self {
        self.split_tag = tag;
        self
    }
}

/// Removes URLs, strips leading `#` from hashtags and normalizes whitespace.
pub fn preprocess(raw_text: &str) -> String {
    const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

    let mut out = String::with_capacity(raw_text.len());
    for token in raw_text.split_whitespace() {
        // A URL runs from its prefix to the end of the whitespace-delimited token.
        let lower = token.to_ascii_lowercase();
        let cut = URL_PREFIXES
            .iter()
            .filter_map(|p| lower.find(p))
            .min()
            .unwrap_or(token.len());
        let kept = token[..cut].trim_start_matches('#');
        if kept.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(kept);
    }
    out
}

/// Splits on whitespace, preserving case.
pub fn tokenize(text: &str) -> Result<Sentence> {
    let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    Ok(Sentence { words })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Self::Csv),
            "jsonl" | "ndjson" => Some(Self::Jsonl),
            _ => None,
        }
    }
}

/// Column/field names used when reading a dataset file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub format: DataFormat,
    pub text_field: String,
    pub label_field: String,
}

/// Outcome of a load: the dataset plus what was dropped along the way.
#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub dataset: LabeledDataset,
    pub dropped: usize,
}

impl LoadedDataset {
    pub fn summary(&self) -> String {
        let hist = self
            .dataset
            .class_names()
            .iter()
            .zip(self.dataset.class_histogram())
            .map(|(c, n)| format!("{c}={n}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "loaded {} examples, dropped {} empty, classes: {}",
            self.dataset.len(),
            self.dropped,
            hist
        )
    }
}

struct RawRow {
    row: usize,
    text: String,
    label: Option<String>,
}

fn read_rows(path: &Path, format: DataFormat, text_field: &str, label_field: Option<&str>) -> Result<Vec<RawRow>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    match format {
        DataFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
            let headers = reader.headers()?.clone();
            let col = |name: &str| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::UnknownField(name.to_string()))
            };
            let text_col = col(text_field)?;
            let label_col = label_field.map(col).transpose()?;
            let mut rows = Vec::new();
            for (i, record) in reader.records().enumerate() {
                // Header is row 1.
                let row = i + 2;
                let record = record.map_err(|e| Error::Parse {
                    row,
                    message: e.to_string(),
                })?;
                let get = |c: usize| {
                    record.get(c).map(str::to_string).ok_or_else(|| Error::Parse {
                        row,
                        message: format!("missing column {c}"),
                    })
                };
                rows.push(RawRow {
                    row,
                    text: get(text_col)?,
                    label: label_col.map(get).transpose()?,
                });
            }
            Ok(rows)
        }
        DataFormat::Jsonl => {
            let reader = BufReader::new(File::open(path)?);
            let mut rows = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let row = i + 1;
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    row,
                    message: e.to_string(),
                })?;
                let obj = value.as_object().ok_or_else(|| Error::Parse {
                    row,
                    message: "expected a JSON object".into(),
                })?;
                let field = |name: &str| -> Result<String> {
                    match obj.get(name) {
                        None => Err(Error::UnknownField(name.to_string())),
                        Some(serde_json::Value::String(s)) => Ok(s.clone()),
                        Some(serde_json::Value::Null) => Ok(String::new()),
                        Some(other) => Ok(other.to_string()),
                    }
                };
                rows.push(RawRow {
                    row,
                    text: field(text_field)?,
                    label: label_field.map(field).transpose()?,
                });
            }
            Ok(rows)
        }
    }
}

/// Reads a labeled file; class names are the sorted distinct labels.
pub fn load_dataset(path: &Path, fields: &FieldSpec) -> Result<LoadedDataset> {
    load_impl(path, fields, None, SplitTag::Train)
}

/// Reads a labeled file whose labels must come from `class_names` (e.g. a test split).
pub fn load_dataset_with_classes(
    path: &Path,
    fields: &FieldSpec,
    class_names: &[String],
    tag: SplitTag,
) -> Result<LoadedDataset> {
    load_impl(path, fields, Some(class_names), tag)
}

fn load_impl(
    path: &Path,
    fields: &FieldSpec,
    classes: Option<&[String]>,
    tag: SplitTag,
) -> Result<LoadedDataset> {
    let rows = read_rows(path, fields.format, &fields.text_field, Some(&fields.label_field))?;
    let class_names: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut names: Vec<String> = rows.iter().filter_map(|r| r.label.clone()).collect();
            names.sort();
            names.dedup();
            names
        }
    };
    let index: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut examples = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for r in &rows {
        let label_name = r.label.as_deref().unwrap_or_default();
        let label = *index.get(label_name).ok_or_else(|| Error::Parse {
            row: r.row,
            message: format!("unknown label `{label_name}`"),
        })?;
        match tokenize(&preprocess(&r.text)) {
            Ok(sentence) => examples.push(LabeledExample { sentence, label }),
            Err(Error::EmptySentence) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(LoadedDataset {
        dataset: LabeledDataset::new(examples, class_names, tag)?,
        dropped,
    })
}

/// Reads only the text column (labels, if present, are ignored). Used for OOD sets.
pub fn load_sentences(path: &Path, format: DataFormat, text_field: &str) -> Result<(Vec<Sentence>, usize)> {
    let rows = read_rows(path, format, text_field, None)?;
    let mut out = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for r in rows {
        match tokenize(&preprocess(&r.text)) {
            Ok(s) => out.push(s),
            Err(_) => dropped += 1,
        }
    }
    Ok((out, dropped))
}

/// Stratified split into (train, validation). Deterministic for a fixed seed.
///
/// The total validation size is `round(n * val_fraction)`, apportioned over
/// classes by largest remainder, with every class keeping at least one
/// example on each side.
pub fn split(
    dataset: &LabeledDataset,
    val_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "val_fraction must be in (0, 1), got {val_fraction}"
        )));
    }
    let k = dataset.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, e) in dataset.examples().iter().enumerate() {
        by_class[e.label].push(i);
    }
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::TooFewExamples {
                class: dataset.class_names()[c].clone(),
                count: idx.len(),
            });
        }
    }

    let n = dataset.len();
    let target = ((n as f64) * val_fraction).round() as usize;
    let quotas: Vec<f64> = by_class
        .iter()
        .map(|idx| idx.len() as f64 * target as f64 / n as f64)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(k * 2) {
        if remaining == 0 {
            break;
        }
        if take[c] + 1 < by_class[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }
    for (c, t) in take.iter_mut().enumerate() {
        *t = (*t).clamp(1, by_class[c].len() - 1);
    }

    let mut rng = RandomSource::new(seed);
    let mut is_val = vec![false; n];
    for (c, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(take[c]) {
            is_val[i] = true;
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (i, e) in dataset.examples().iter().enumerate() {
        if is_val[i] {
            val.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    let names = dataset.class_names().to_vec();
    Ok((
        LabeledDataset::new(train, names.clone(), SplitTag::Train)?,
        LabeledDataset::new(val, names, SplitTag::Validation)?,
    ))
}

/// Word to id map over case-folded words. Id 0 is padding, id 1 is unknown.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    format_version: u32,
    words: Vec<String>,
}

impl From<VocabularyFile> for Vocabulary {
    fn from(f: VocabularyFile) -> Self {
        Self::from_words(f.words.into_iter().skip(Vocabulary::RESERVED))
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            format_version: 1,
            words: v.words,
        }
    }
}

impl Vocabulary {
    pub const PADDING: usize = 0;
    pub const UNKNOWN: usize = 1;
    const RESERVED: usize = 2;

    /// Builds a vocabulary from already case-folded corpus words, in id order.
    pub fn from_words<I: IntoIterator<Item = String>>(corpus_words: I) -> Self {
        let mut words = vec!["<pad>".to_string(), "<unk>".to_string()];
        let mut index = HashMap::new();
        for w in corpus_words {
            if !index.contains_key(&w) {
                index.insert(w.clone(), words.len());
                words.push(w);
            }
        }
        Self { words, index }
    }

    pub fn fold(word: &str) -> String {
        word.to_lowercase()
    }

    /// Id of `word` after case folding; `UNKNOWN` when absent.
    pub fn id(&self, word: &str) -> usize {
        self.index
            .get(&Self::fold(word))
            .copied()
            .unwrap_or(Self::UNKNOWN)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(&Self::fold(word))
    }

    pub fn encode(&self, s: &Sentence) -> Vec<usize> {
        s.words().iter().map(|w| self.id(w)).collect()
    }

    /// Total id count including the reserved ids.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() == Self::RESERVED
    }

    /// Corpus words in id order (reserved ids excluded).
    pub fn corpus_words(&self) -> &[String] {
        &self.words[Self::RESERVED..]
    }

    /// Hex SHA-256 over the id-ordered word list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.words {
            h.update(w.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Words with case-folded frequency `>= min_count`, ordered by descending count then alphabetically.
pub fn build_vocab(train: &LabeledDataset, min_count: usize) -> Vocabulary {
    build_vocab_from(train.examples().iter().map(|e| &e.sentence), min_count)
}

pub fn build_vocab_from<'a, I: IntoIterator<Item = &'a Sentence>>(sentences: I, min_count: usize) -> Vocabulary {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in sentences {
        for w in s.words() {
            *counts.entry(Vocabulary::fold(w)).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count.max(1))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_words(kept.into_iter().map(|(w, _)| w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn ds(rows: &[(&str, usize)], k: usize) -> LabeledDataset {
        let examples = rows
            .iter()
            .map(|(t, l)| LabeledExample {
                sentence: tokenize(t).unwrap(),
                label: *l,
            })
            .collect();
        LabeledDataset::new(examples, (0..k).map(|c| c.to_string()).collect(), SplitTag::Train).unwrap()
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(preprocess("check https://x.co now"), "check now");
        assert_eq!(preprocess("#covid19 cases rise"), "covid19 cases rise");
        assert_eq!(preprocess("plain title"), "plain title");
        assert_eq!(preprocess("  see www.example.org/a?b=1   and http://t.co/x "), "see and");
        assert_eq!(preprocess("# ## #"), "");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("HP shares tumble on profit news").unwrap().words(),
            ["HP", "shares", "tumble", "on", "profit", "news"]
        );
        assert_eq!(tokenize("a  b").unwrap().words(), ["a", "b"]);
        assert!(matches!(tokenize(""), Err(Error::EmptySentence)));
    }

    #[test]
    fn load_csv_and_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("d.csv");
        let mut f = File::create(&csv_path).unwrap();
        writeln!(f, "text,label\n\"hello, world\",pos\nbad day,neg\ngood day,pos").unwrap();
        let fields = FieldSpec {
            format: DataFormat::Csv,
            text_field: "text".into(),
            label_field: "label".into(),
        };
        let loaded = load_dataset(&csv_path, &fields).unwrap();
        assert_eq!(loaded.dataset.num_classes(), 2);
        assert_eq!(loaded.dataset.len(), 3);
        assert_eq!(loaded.dataset.class_names(), ["neg", "pos"]);
        assert_eq!(loaded.dataset.examples()[0].sentence.words(), ["hello,", "world"]);

        let empty_path = dir.path().join("e.csv");
        std::fs::write(&empty_path, "text,label\nfine,a\n\"   \",b\nhttps://only.url,b\nok,b\n").unwrap();
        let loaded = load_dataset(&empty_path, &fields).unwrap();
        assert_eq!(loaded.dropped, 2);
        assert_eq!(loaded.dataset.len(), 2);

        let missing = dir.path().join("m.csv");
        std::fs::write(&missing, "text,category\na,b\n").unwrap();
        assert!(matches!(load_dataset(&missing, &fields), Err(Error::UnknownField(f)) if f == "label"));

        let jl = dir.path().join("d.jsonl");
        std::fs::write(&jl, "{\"t\":\"a b\",\"y\":1}\n\n{\"t\":\"c\",\"y\":0}\n").unwrap();
        let fields = FieldSpec {
            format: DataFormat::Jsonl,
            text_field: "t".into(),
            label_field: "y".into(),
        };
        let loaded = load_dataset(&jl, &fields).unwrap();
        assert_eq!(loaded.dataset.class_names(), ["0", "1"]);
        assert_eq!(loaded.dataset.labels(), [1, 0]);

        std::fs::write(&jl, "{\"t\":\"a b\",\"y\":1}\nnot json\n").unwrap();
        assert!(matches!(load_dataset(&jl, &fields), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let rows: Vec<(String, usize)> = (0..100).map(|i| (format!("w{i} x"), usize::from(i >= 40))).collect();
        let rows: Vec<(&str, usize)> = rows.iter().map(|(t, l)| (t.as_str(), *l)).collect();
        let d = ds(&rows, 2);
        let (tr, va) = split(&d, 0.1, 3).unwrap();
        assert_eq!((tr.len(), va.len()), (90, 10));
        let h = va.class_histogram();
        assert!((h[0] as i64 - 4).abs() <= 1 && (h[1] as i64 - 6).abs() <= 1, "{h:?}");
        let (tr2, va2) = split(&d, 0.1, 3).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(va, va2);
        assert_eq!(va.split_tag(), SplitTag::Validation);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let d = ds(&[("a", 0), ("b", 0), ("c", 1)], 2);
        assert!(matches!(split(&d, 0.5, 0), Err(Error::TooFewExamples { count: 1, .. })));
    }

    #[test]
    fn vocab_examples() {
        let d = ds(&[("a b", 0), ("a", 1)], 2);
        let v = build_vocab(&d, 1);
        assert_eq!(v.corpus_words(), ["a", "b"]);
        let v2 = build_vocab(&d, 2);
        assert_eq!(v2.corpus_words(), ["a"]);
        assert_eq!(v.id("zzz"), Vocabulary::UNKNOWN);
        assert_eq!(v.id("A"), v.id("a"));
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.hash(), v.hash());
    }

    proptest! {
        #[test]
        fn tokenize_join_roundtrip(words in prop::collection::vec("[A-Za-z0-9#,.]{1,8}", 1..12)) {
            let s = Sentence::new(words.clone()).unwrap();
            let t = tokenize(&s.join()).unwrap();
            prop_assert_eq!(t.words(), &words[..]);
        }

        #[test]
        fn preprocess_idempotent(text in "[ a-zA-Z#:/.w]{0,40}") {
            let once = preprocess(&text);
            prop_assert_eq!(preprocess(&once), once.clone());
        }

        #[test]
        fn split_is_partition(n0 in 2usize..30, n1 in 2usize..30, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let rows: Vec<(String, usize)> = (0..n0 + n1).map(|i| (format!("w{i}"), usize::from(i >= n0))).collect();
            let rows: Vec<(&str, usize)> = rows.iter().map(|(t, l)| (t.as_str(), *l)).collect();
            let d = ds(&rows, 2);
            let (tr, va) = split(&d, frac, seed).unwrap();
            prop_assert_eq!(tr.len() + va.len(), d.len());
            let mut all: Vec<String> = tr.examples().iter().chain(va.examples()).map(|e| e.sentence.join()).collect();
            all.sort();
            let mut orig: Vec<String> = d.examples().iter().map(|e| e.sentence.join()).collect();
            orig.sort();
            prop_assert_eq!(all, orig);
        }

        #[test]
        fn absent_words_are_unknown(word in "[a-z]{9,12}") {
            let d = ds(&[("alpha beta", 0), ("gamma", 1)], 2);
            let v = build_vocab(&d, 1);
            prop_assert_eq!(v.id(&word), Vocabulary::UNKNOWN);
        }
    }
}
