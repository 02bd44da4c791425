//! Config-driven command line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_vocab, load_dataset, load_dataset_with_classes, load_sentences, split, DataFormat, FieldSpec, LabeledDataset,
    Sentence, SplitTag, Vocabulary,
};
use crate::detect::{calibrate_threshold, export_scores, odin_search, Detector, OdinConfig, ScoreFunction, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, export_histogram, read_csv_column, welch_t_test, ScoreSet};
use crate::model::{nb_fit, Checkpoint, EmbeddingClassifier, ModelConfig, ProbabilisticClassifier};
use crate::noise::{apply, NoiseConfig, NoiseFunction};
use crate::rng::RandomSource;
use crate::search::{ablation_sweep, fit, grid_search, pseudo_ood, GridSpec, RunConfig, SearchData};
use crate::synthetic::{generate, SyntheticConfig};
use crate::train::TrainConfig;

#[derive(Debug, Parser)]
#[command(name = "noier", version, about = "Noise entropy regularisation for OOD sentence detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Override a config key, e.g. `--set train.alpha=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, preprocess and split the data; write the prepared splits and vocabulary.
    Prepare(ConfigArgs),
    /// Train a classifier and write its checkpoint and training report.
    Train(ConfigArgs),
    /// Evaluate the trained checkpoint on the test sets.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint to load instead of `<output_dir>/model.json`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Grid search over noise hyperparameters by validation IOD.
    Hpsearch(ConfigArgs),
    /// Train and test one model per subset of noise functions.
    Ablation(ConfigArgs),
    /// Print training sentences next to their noised versions.
    NoisePreview {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, default_value_t = 5)]
        n: usize,
    },
    /// Fit and evaluate the TF-IDF naive Bayes baseline.
    Nb(ConfigArgs),
    /// Write the synthetic benchmark as CSV files plus a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sentences of at most 8 words.
        #[arg(long)]
        short: bool,
    },
    /// Welch's t-test between one column of two result CSVs.
    Ttest {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "auroc")]
        column: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: PathBuf,
    pub test_ind: Option<PathBuf>,
    pub test_ood: Option<PathBuf>,
    /// Real OOD sentences for validation IOD in `hpsearch`; noised validation otherwise.
    pub dev_ood: Option<PathBuf>,
    /// Inferred from the train file extension when absent.
    pub format: Option<DataFormat>,
    #[serde(default = "default_text_field")]
    pub text_field: String,
    #[serde(default = "default_label_field")]
    pub label_field: String,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
}

fn default_text_field() -> String {
    "text".into()
}
fn default_label_field() -> String {
    "label".into()
}
fn default_val_fraction() -> f64 {
    0.1
}
fn default_min_count() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreChoice {
    Msp,
    Odin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub score: ScoreChoice,
    /// Pick ODIN's temperature and epsilon on validation data when `[odin]` is absent.
    pub odin_search: bool,
    pub bins: usize,
    pub svg: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            score: ScoreChoice::Msp,
            odin_search: true,
            bins: 20,
            svg: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub odin: Option<OdinConfig>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub grid: GridSpec,
    /// Repeats per row of the ablation table.
    #[serde(default = "default_ablation_repeats")]
    pub ablation_repeats: usize,
}

fn default_ablation_repeats() -> usize {
    3
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Sets `a.b.c = value` in a TOML table, creating tables along the way.
/// The value is parsed as TOML and taken as a string if that fails; an
/// empty value removes the key.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(format!("override `{assignment}` is not KEY=VALUE")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_error(format!("bad override key `{key}`")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = root;
    for p in parents {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_error(format!("override `{key}`: `{p}` is not a table")))?;
    }
    if raw.is_empty() {
        table.remove(*last);
    } else {
        table.insert(last.to_string(), value);
    }
    Ok(())
}

impl ExperimentConfig {
    /// Reads the file, applies overrides and validates everything except path existence.
    /// Relative paths in the file are taken relative to the file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_error(format!("{}: {}", path.display(), e.message())))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg = Self::from_table(table)?;
        cfg.rebase(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    /// Makes relative paths relative to `dir` (the config file's directory).
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.train);
        for p in [&mut self.data.test_ind, &mut self.data.test_ood, &mut self.data.dev_ood].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        if table.get("train").and_then(|t| t.get("seed")).is_some() {
            return Err(config_error("set the top-level `seed`, not `train.seed`"));
        }
        let mut cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| config_error(e.message().to_string()))?;
        cfg.train.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.noise.validate()?;
        self.train.validate()?;
        self.grid.validate()?;
        if let Some(o) = &self.odin {
            o.validate()?;
        }
        let d = &self.data;
        if !(d.val_fraction > 0.0 && d.val_fraction < 1.0) {
            return Err(config_error(format!("data.val_fraction must be in (0, 1), got {}", d.val_fraction)));
        }
        if d.min_count == 0 {
            return Err(config_error("data.min_count must be >= 1"));
        }
        if self.eval.bins == 0 {
            return Err(config_error("eval.bins must be >= 1"));
        }
        if self.ablation_repeats == 0 {
            return Err(config_error("ablation_repeats must be >= 1"));
        }
        self.format()?;
        Ok(())
    }

    pub fn format(&self) -> Result<DataFormat> {
        self.data
            .format
            .or_else(|| DataFormat::from_path(&self.data.train))
            .ok_or_else(|| config_error("data.format is not set and cannot be inferred from the train file"))
    }

    fn fields(&self) -> Result<FieldSpec> {
        Ok(FieldSpec {
            format: self.format()?,
            text_field: self.data.text_field.clone(),
            label_field: self.data.label_field.clone(),
        })
    }

    fn run_config(&self) -> RunConfig {
        RunConfig {
            model: self.model.clone(),
            noise: self.noise.clone(),
            train: self.train.clone(),
        }
    }

    /// Fails with the first configured path that does not exist.
    pub fn require(&self, paths: &[Option<&PathBuf>]) -> Result<()> {
        for p in paths.iter().flatten() {
            if !p.exists() {
                return Err(Error::MissingFile(p.to_path_buf()));
            }
        }
        Ok(())
    }
}

/// 0 on success, 2 for configuration or validation problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::MissingFile(_)
        | Error::UnknownField(_)
        | Error::NonPositiveTemperature(_)
        | Error::TooFewExamples { .. } => 2,
        _ => 1,
    }
}

/// Prepared splits as written by `prepare`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedData {
    pub format_version: u32,
    pub seed: u64,
    pub vocab_hash: String,
    pub train: LabeledDataset,
    pub val: LabeledDataset,
}

impl PreparedData {
    pub const VERSION: u32 = 1;
}

struct Prepared {
    train: LabeledDataset,
    val: LabeledDataset,
    vocab: Vocabulary,
    dropped: usize,
}

fn prepare_data(cfg: &ExperimentConfig) -> Result<Prepared> {
    let loaded = load_dataset(&cfg.data.train, &cfg.fields()?)?;
    let (train, val) = split(&loaded.dataset, cfg.data.val_fraction, cfg.seed)?;
    let vocab = build_vocab(&train, cfg.data.min_count);
    Ok(Prepared {
        train,
        val,
        vocab,
        dropped: loaded.dropped,
    })
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn read_json<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<S> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn save_prepared(cfg: &ExperimentConfig, p: &Prepared) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("vocab.json"), &p.vocab)?;
    write_json(
        &cfg.output_dir.join("prepared.json"),
        &PreparedData {
            format_version: PreparedData::VERSION,
            seed: cfg.seed,
            vocab_hash: p.vocab.hash(),
            train: p.train.clone(),
            val: p.val.clone(),
        },
    )
}

fn load_prepared(dir: &Path) -> Result<Prepared> {
    let data: PreparedData = read_json(&dir.join("prepared.json"))?;
    if data.format_version != PreparedData::VERSION {
        return Err(Error::UnsupportedVersion(data.format_version));
    }
    let vocab: Vocabulary = read_json(&dir.join("vocab.json"))?;
    if vocab.hash() != data.vocab_hash {
        return Err(Error::VocabularyMismatch {
            expected: data.vocab_hash,
            got: vocab.hash(),
        });
    }
    Ok(Prepared {
        train: data.train,
        val: data.val,
        vocab,
        dropped: 0,
    })
}

/// One dataset summary line: classes, split sizes and average sentence length.
fn summary_line(name: &str, p: &Prepared, test: Option<usize>) -> String {
    let all = p.train.len() + p.val.len();
    let avg = (p.train.avg_sentence_length() * p.train.len() as f64 + p.val.avg_sentence_length() * p.val.len() as f64)
        / all as f64;
    format!(
        "{:<16} {:>3} {:>8} {:>8} {:>8} {:>10.2}",
        name,
        p.train.num_classes(),
        p.train.len(),
        p.val.len(),
        test.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
        avg
    )
}

fn cmd_prepare(cfg: &ExperimentConfig) -> Result<()> {
    cfg.require(&[Some(&cfg.data.train), cfg.data.test_ind.as_ref()])?;
    let test = match &cfg.data.test_ind {
        Some(path) => Some(load_dataset(path, &cfg.fields()?)?.dataset.len()),
        None => None,
    };
    let p = prepare_data(cfg)?;
    save_prepared(cfg, &p)?;
    let name = cfg.data.train.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    println!("{:<16} {:>3} {:>8} {:>8} {:>8} {:>10}", "dataset", "K", "train", "val", "test", "avg len");
    println!("{}", summary_line(&name, &p, test));
    println!(
        "dropped {} empty sentences; vocabulary {} words (hash {})",
        p.dropped,
        p.vocab.len(),
        &p.vocab.hash()[..12]
    );
    Ok(())
}

fn cmd_train(cfg: &ExperimentConfig) -> Result<()> {
    cfg.require(&[Some(&cfg.data.train)])?;
    let p = prepare_data(cfg)?;
    save_prepared(cfg, &p)?;
    let run = cfg.run_config();
    let (model, report) = fit(&p.train, &p.val, &p.vocab, &run)?;
    model
        .to_checkpoint(&run.noise, &run.train)
        .save(&cfg.output_dir.join("model.json"))?;
    report.save_json(&cfg.output_dir.join("train_report.json"))?;
    let csv = cfg.output_dir.join("train_epochs.csv");
    if csv.exists() {
        fs::remove_file(&csv)?;
    }
    report.append_csv(&csv)?;
    println!(
        "variant {}: best epoch {} of {} (val CE {:.4})",
        report.variant, report.best_epoch, report.stopped_epoch, report.best_val_loss
    );
    Ok(())
}

fn load_ood(cfg: &ExperimentConfig, path: Option<&PathBuf>) -> Result<Option<Vec<Sentence>>> {
    path.map(|p| load_sentences(p, cfg.format()?, &cfg.data.text_field).map(|(s, _)| s))
        .transpose()
}

/// With an explicit checkpoint and no prepared splits in the output
/// directory, the splits are rebuilt from the config; the checkpoint's
/// vocabulary hash guards against a mismatch.
fn load_model(cfg: &ExperimentConfig, checkpoint: Option<&PathBuf>) -> Result<(EmbeddingClassifier<f64>, Prepared)> {
    let p = if checkpoint.is_some() && !cfg.output_dir.join("prepared.json").exists() {
        cfg.require(&[Some(&cfg.data.train)])?;
        prepare_data(cfg)?
    } else {
        load_prepared(&cfg.output_dir)?
    };
    let path = checkpoint.cloned().unwrap_or_else(|| cfg.output_dir.join("model.json"));
    let model = Checkpoint::<f64>::load(&path)?.into_model(p.vocab.clone())?;
    Ok((model, p))
}

fn cmd_eval(cfg: &ExperimentConfig, checkpoint: Option<&PathBuf>) -> Result<()> {
    let test_path = cfg
        .data
        .test_ind
        .as_ref()
        .ok_or_else(|| config_error("eval needs data.test_ind"))?;
    cfg.require(&[Some(test_path), cfg.data.test_ood.as_ref(), checkpoint])?;
    let (model, p) = load_model(cfg, checkpoint)?;
    let test = load_dataset_with_classes(test_path, &cfg.fields()?, p.train.class_names(), SplitTag::Test)?.dataset;
    let ood = load_ood(cfg, cfg.data.test_ood.as_ref())?;

    // Detector settings come from validation data only: IND validation
    // sentences against their noised copies.
    let val_ind = p.val.sentences();
    let val_ood = pseudo_ood(&p.val, &cfg.noise, &p.vocab, cfg.seed);
    let score = match cfg.eval.score {
        ScoreChoice::Msp => ScoreFunction::Msp,
        ScoreChoice::Odin => match cfg.odin {
            Some(o) => ScoreFunction::Odin(o),
            None if cfg.eval.odin_search => ScoreFunction::Odin(odin_search(&model, &val_ind, &val_ood)?.0),
            None => ScoreFunction::Odin(OdinConfig::default()),
        },
    };
    let threshold = calibrate_threshold(&score.score_sets(&model, &val_ind, &val_ood)?, ThresholdPolicy::EerPoint)?;
    let detector = Detector { score, threshold };

    let sentences = test.sentences();
    let report = evaluate(&model, &sentences, &test.labels(), ood.as_deref(), |s| score.score(&model, s))?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    report.save(&out.join("eval_report.json"), &out.join("eval_report.csv"))?;
    write_json(&out.join("detector.json"), &detector)?;
    let ind_scores = sentences
        .iter()
        .map(|s| score.score(&model, s))
        .collect::<Result<Vec<f64>>>()?;
    export_scores(&out.join("scores_ind.csv"), &ind_scores, &detector)?;
    if let Some(ood) = &ood {
        let ood_scores = ood.iter().map(|s| score.score(&model, s)).collect::<Result<Vec<f64>>>()?;
        export_scores(&out.join("scores_ood.csv"), &ood_scores, &detector)?;
        let set = ScoreSet::new(ind_scores, ood_scores, score.kind());
        export_histogram(&set, cfg.eval.bins, model.num_classes(), &out.join("histogram"), cfg.eval.svg)?;
    }
    println!("{}", crate::evaluate::EvalReport::CSV_HEADER);
    println!("{}", report.csv_row());
    Ok(())
}

fn cmd_hpsearch(cfg: &ExperimentConfig) -> Result<()> {
    cfg.require(&[Some(&cfg.data.train), cfg.data.dev_ood.as_ref()])?;
    let p = prepare_data(cfg)?;
    let dev_ood = load_ood(cfg, cfg.data.dev_ood.as_ref())?;
    let data = SearchData {
        train: &p.train,
        val: &p.val,
        vocab: &p.vocab,
    };
    let result = grid_search(data, &cfg.grid, &cfg.run_config(), dev_ood.as_deref())?;
    fs::create_dir_all(&cfg.output_dir)?;
    result.save(&cfg.output_dir.join("hpsearch.csv"), &cfg.output_dir.join("hpsearch.json"))?;
    let s = &result.selected;
    let diverged: usize = result.points.iter().map(|p| p.diverged).sum();
    println!(
        "selected p_del={} p_repl={} r_perm={} (point {}, {} diverged runs)",
        s.p_del, s.p_repl, s.r_perm, result.selected_index, diverged
    );
    Ok(())
}

fn cmd_ablation(cfg: &ExperimentConfig) -> Result<()> {
    let test_path = cfg
        .data
        .test_ind
        .as_ref()
        .ok_or_else(|| config_error("ablation needs data.test_ind"))?;
    let ood_path = cfg
        .data
        .test_ood
        .as_ref()
        .ok_or_else(|| config_error("ablation needs data.test_ood"))?;
    cfg.require(&[Some(&cfg.data.train), Some(test_path), Some(ood_path)])?;
    let p = prepare_data(cfg)?;
    let test = load_dataset_with_classes(test_path, &cfg.fields()?, p.train.class_names(), SplitTag::Test)?.dataset;
    let ood = load_ood(cfg, Some(ood_path))?.unwrap_or_default();
    let data = SearchData {
        train: &p.train,
        val: &p.val,
        vocab: &p.vocab,
    };
    let table = ablation_sweep(data, &test, &ood, &cfg.run_config(), cfg.ablation_repeats)?;
    fs::create_dir_all(&cfg.output_dir)?;
    table.save(&cfg.output_dir.join("ablation.csv"), &cfg.output_dir.join("ablation.json"))?;
    println!("{:<18} {:>7} {:>9} {:>7} {:>7}", "", "F1", "IODx100", "AUROC", "EER");
    for (name, row) in table.names.iter().zip(&table.rows) {
        match row.mean {
            Some(m) => println!("{name:<18} {:>7.2} {:>9.2} {:>7.2} {:>7.2}", m.f1, m.iod_x100, m.auroc, m.eer),
            None => println!("{name:<18} all runs diverged"),
        }
    }
    Ok(())
}

fn cmd_noise_preview(cfg: &ExperimentConfig, n: usize) -> Result<()> {
    cfg.require(&[Some(&cfg.data.train)])?;
    let p = prepare_data(cfg)?;
    let mut rng = RandomSource::derive(cfg.seed, &[0x9e]);
    for e in p.train.examples().iter().take(n) {
        println!("{:<9}| {}", "Original", e.sentence);
        for f in [NoiseFunction::Deletion, NoiseFunction::Permutation, NoiseFunction::Replacement] {
            let noised = apply(f, &e.sentence, &cfg.noise, Some(&p.vocab), &mut rng);
            println!("{:<9}| {}", f.short_name(), noised);
        }
        println!();
    }
    Ok(())
}

fn cmd_nb(cfg: &ExperimentConfig) -> Result<()> {
    let test_path = cfg
        .data
        .test_ind
        .as_ref()
        .ok_or_else(|| config_error("nb needs data.test_ind"))?;
    cfg.require(&[Some(&cfg.data.train), Some(test_path), cfg.data.test_ood.as_ref()])?;
    let train = load_dataset(&cfg.data.train, &cfg.fields()?)?.dataset;
    let test = load_dataset_with_classes(test_path, &cfg.fields()?, train.class_names(), SplitTag::Test)?.dataset;
    let ood = load_ood(cfg, cfg.data.test_ood.as_ref())?;
    let nb = nb_fit::<f64>(&train);
    let report = evaluate(&nb, &test.sentences(), &test.labels(), ood.as_deref(), |s| {
        Ok(crate::prob::msp(&nb.predict_proba(s)))
    })?;
    fs::create_dir_all(&cfg.output_dir)?;
    report.save(&cfg.output_dir.join("nb_report.json"), &cfg.output_dir.join("nb_report.csv"))?;
    println!("{}", crate::evaluate::EvalReport::CSV_HEADER);
    println!("{}", report.csv_row());
    Ok(())
}

/// Config written next to the synthetic benchmark files.
pub fn synthetic_config_toml(seed: u64) -> String {
    format!(
        r#"seed = {seed}
output_dir = "run"

[data]
train = "train.csv"
test_ind = "test_ind.csv"
test_ood = "test_ood.csv"
text_field = "text"
label_field = "label"
val_fraction = 0.1
min_count = 1

[model]
dim = 64
hidden = 128
dropout = 0.1

[noise]
p_del = 0.1
p_repl = 0.15
r_perm = 0.8
enabled = ["deletion", "replacement", "permutation"]

[train]
variant = "noier"
alpha = 1.0
batch_size = 32
learning_rate = 0.001
max_epochs = 30
patience = 3
"#
    )
}

fn cmd_synth(out: &Path, seed: u64, short: bool) -> Result<()> {
    let mut sc = SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    };
    if short {
        sc = sc.short();
    }
    let bench = generate(&sc)?;
    let files = bench.write_csv(out)?;
    fs::write(out.join("experiment.toml"), synthetic_config_toml(seed))?;
    println!(
        "wrote {}, {}, {} and experiment.toml",
        files.train.display(),
        files.test_ind.display(),
        files.test_ood.display()
    );
    Ok(())
}

fn cmd_ttest(a: &Path, b: &Path, column: &str) -> Result<()> {
    // Only per-run rows take part when the file has a `row` column.
    let runs = |p: &Path| -> Result<Vec<f64>> {
        if !p.exists() {
            return Err(Error::MissingFile(p.to_path_buf()));
        }
        let mut reader = csv::Reader::from_path(p)?;
        let has_row = reader.headers()?.iter().any(|h| h == "row");
        if !has_row {
            return read_csv_column(p, column);
        }
        let headers = reader.headers()?.clone();
        let row_col = headers.iter().position(|h| h == "row").expect("checked");
        let col = headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::UnknownField(column.to_string()))?;
        let mut out = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.get(row_col) == Some("run") && !rec[col].is_empty() {
                out.push(rec[col].parse().map_err(|_| Error::Parse {
                    row: i + 2,
                    message: format!("`{}` is not a number", &rec[col]),
                })?);
            }
        }
        Ok(out)
    };
    let t = welch_t_test(&runs(a)?, &runs(b)?)?;
    println!("t = {:.4}, df = {:.2}, p = {:.4}", t.t, t.df, t.p_value);
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let load = |c: &ConfigArgs| ExperimentConfig::load(&c.config, &c.overrides);
    match cli.command {
        Command::Prepare(c) => cmd_prepare(&load(&c)?),
        Command::Train(c) => cmd_train(&load(&c)?),
        Command::Eval { config, checkpoint } => cmd_eval(&load(&config)?, checkpoint.as_ref()),
        Command::Hpsearch(c) => cmd_hpsearch(&load(&c)?),
        Command::Ablation(c) => cmd_ablation(&load(&c)?),
        Command::NoisePreview { config, n } => cmd_noise_preview(&load(&config)?, n),
        Command::Nb(c) => cmd_nb(&load(&c)?),
        Command::Synth { out, seed, short } => cmd_synth(&out, seed, short),
        Command::Ttest { a, b, column } => cmd_ttest(&a, &b, &column),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> toml::Table {
        synthetic_config_toml(7).parse().unwrap()
    }

    #[test]
    fn synthetic_config_parses_and_sets_seed() {
        let cfg = ExperimentConfig::from_table(base()).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.format().unwrap(), DataFormat::Csv);
        assert_eq!(cfg.noise, NoiseConfig::default());
    }

    #[test]
    fn overrides_mirror_keys() {
        let mut t = base();
        apply_override(&mut t, "train.alpha=0.25").unwrap();
        apply_override(&mut t, "noise.enabled=[\"replacement\"]").unwrap();
        apply_override(&mut t, "odin.temperature = 100").unwrap();
        apply_override(&mut t, "odin.epsilon=0.002").unwrap();
        apply_override(&mut t, "output_dir=elsewhere").unwrap();
        let cfg = ExperimentConfig::from_table(t).unwrap();
        let mut u = base();
        apply_override(&mut u, "data.test_ood=").unwrap();
        assert!(ExperimentConfig::from_table(u).unwrap().data.test_ood.is_none());
        assert_eq!(cfg.train.alpha, 0.25);
        assert_eq!(cfg.noise.enabled, vec![NoiseFunction::Replacement]);
        assert_eq!(cfg.odin, Some(OdinConfig { temperature: 100.0, epsilon: 0.002 }));
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert!(apply_override(&mut base(), "novalue").is_err());
        assert!(apply_override(&mut base(), "seed.x=1").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        for bad in ["train.alpha=-1", "noise.p_del=1.5", "data.val_fraction=1.0", "odin.temperature=0", "grid.repeats=0", "bogus=1", "train.seed=3"] {
            let mut t = base();
            apply_override(&mut t, bad).unwrap();
            if bad.starts_with("odin") {
                apply_override(&mut t, "odin.epsilon=0.0").unwrap();
            }
            let err = ExperimentConfig::from_table(t).unwrap_err();
            assert_eq!(exit_code(&err), 2, "{bad}: {err}");
        }
        let mut t = base();
        t.remove("seed");
        assert!(ExperimentConfig::from_table(t).is_err());
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/x.toml"), &[]).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(err.to_string().contains("/nonexistent/x.toml"));
        assert_eq!(exit_code(&Error::Diverged { epoch: 1 }), 1);
    }
}
