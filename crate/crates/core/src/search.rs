//! Noise-hyperparameter grid search and the noise-function ablation sweep.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDataset, Sentence, Vocabulary};
use crate::detect::msp_score;
use crate::error::{Error, Result};
use crate::evaluate::{evaluate, EvalReport};
use crate::model::{EmbeddingClassifier, ModelConfig};
use crate::noise::{noise_batch, NoiseConfig, NoiseFunction};
use crate::rng::RandomSource;
use crate::train::{train, TrainConfig, TrainReport, Variant};

/// Everything needed to train one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub noise: NoiseConfig,
    pub train: TrainConfig,
}

const INIT_STREAM: u64 = 0x1417;
const PSEUDO_OOD_STREAM: u64 = u64::MAX - 2;

/// Initializes a model from `run.train.seed` and trains it.
pub fn fit(
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    vocab: &Vocabulary,
    run: &RunConfig,
) -> Result<(EmbeddingClassifier<f64>, TrainReport)> {
    run.model.validate()?;
    let mut init = RandomSource::derive(run.train.seed, &[INIT_STREAM]);
    let model = EmbeddingClassifier::new(vocab.clone(), train_set.num_classes(), &run.model, &mut init);
    train(model, train_set, val_set, &run.noise, &run.train)
}

/// MSP-scored evaluation of `model` on a labeled IND set and optional OOD sentences.
pub fn evaluate_msp(model: &EmbeddingClassifier<f64>, ind: &LabeledDataset, ood: Option<&[Sentence]>) -> Result<EvalReport> {
    evaluate(model, &ind.sentences(), &ind.labels(), ood, |s| Ok(msp_score(model, s)))
}

/// Noised copies of the validation sentences, shared by every grid point.
pub fn pseudo_ood(val_set: &LabeledDataset, noise: &NoiseConfig, vocab: &Vocabulary, seed: u64) -> Vec<Sentence> {
    noise_batch(
        &val_set.sentences(),
        noise,
        Some(vocab),
        RandomSource::derive(seed, &[PSEUDO_OOD_STREAM]).seed(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub p_del_grid: Vec<f64>,
    pub p_repl_grid: Vec<f64>,
    pub r_perm_grid: Vec<f64>,
    pub repeats: usize,
    /// Noise used to build the validation pseudo-OOD set.
    pub validation_noise: NoiseConfig,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            p_del_grid: (1..=8).map(|i| i as f64 * 0.05).map(round4).collect(),
            p_repl_grid: (1..=8).map(|i| i as f64 * 0.05).map(round4).collect(),
            r_perm_grid: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            repeats: 3,
            validation_noise: NoiseConfig::default(),
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("grid: {m}")));
        if self.p_del_grid.is_empty() || self.p_repl_grid.is_empty() || self.r_perm_grid.is_empty() {
            return bad("grids must be nonempty");
        }
        let unit = |v: &[f64]| v.iter().all(|x| (0.0..=1.0).contains(x));
        if !unit(&self.p_del_grid) || !unit(&self.p_repl_grid) || !unit(&self.r_perm_grid) {
            return bad("grid values must be within [0, 1]");
        }
        if self.r_perm_grid.contains(&0.0) {
            return bad("r_perm values must be positive");
        }
        if self.repeats == 0 {
            return bad("repeats must be positive");
        }
        self.validation_noise.validate()
    }

    /// Grid points in `p_del`-major order.
    pub fn points(&self, base: &NoiseConfig) -> Vec<NoiseConfig> {
        let mut out = Vec::new();
        for &p_del in &self.p_del_grid {
            for &p_repl in &self.p_repl_grid {
                for &r_perm in &self.r_perm_grid {
                    out.push(NoiseConfig {
                        p_del,
                        p_repl,
                        r_perm,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Metrics for one trained model, or `None` if training diverged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub point: usize,
    pub repeat: usize,
    pub seed: u64,
    pub report: Option<EvalReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub noise: NoiseConfig,
    pub runs: usize,
    pub diverged: usize,
    pub mean: Option<Means>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub f1: f64,
    pub iod_x100: f64,
    pub iod_x100_std: f64,
    pub auroc: f64,
    pub eer: f64,
}

fn summarize(reports: &[&EvalReport]) -> Option<Means> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&EvalReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
    let iod = mean(&|r| r.iod_x100.unwrap_or(f64::NAN));
    let var = reports
        .iter()
        .map(|r| (r.iod_x100.unwrap_or(f64::NAN) - iod).powi(2))
        .sum::<f64>()
        / n;
    Some(Means {
        f1: mean(&|r| r.f1_macro),
        iod_x100: iod,
        iod_x100_std: var.sqrt(),
        auroc: mean(&|r| r.auroc.unwrap_or(f64::NAN)),
        eer: mean(&|r| r.eer.unwrap_or(f64::NAN)),
    })
}

fn summaries(labels: Vec<NoiseConfig>, runs: &[RunRecord]) -> Vec<PointSummary> {
    labels
        .into_iter()
        .enumerate()
        .map(|(i, noise)| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.point == i).collect();
            let ok: Vec<&EvalReport> = mine.iter().filter_map(|r| r.report.as_ref()).collect();
            PointSummary {
                noise,
                runs: ok.len(),
                diverged: mine.len() - ok.len(),
                mean: summarize(&ok),
            }
        })
        .collect()
}

/// Shared inputs of a grid search or ablation.
#[derive(Clone, Copy)]
pub struct SearchData<'a> {
    pub train: &'a LabeledDataset,
    pub val: &'a LabeledDataset,
    pub vocab: &'a Vocabulary,
}

struct Job {
    point: usize,
    repeat: usize,
    run: RunConfig,
}

/// Trains one model per job in parallel; records come back in job order.
fn run_jobs<F>(data: SearchData<'_>, jobs: Vec<Job>, eval: F) -> Result<Vec<RunRecord>>
where
    F: Fn(&EmbeddingClassifier<f64>) -> Result<EvalReport> + Sync,
{
    jobs.into_par_iter()
        .map(|job| {
            let report = match fit(data.train, data.val, data.vocab, &job.run) {
                Ok((model, _)) => Some(eval(&model)?),
                Err(Error::Diverged { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(RunRecord {
                point: job.point,
                repeat: job.repeat,
                seed: job.run.train.seed,
                report,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub selected: NoiseConfig,
    pub selected_index: usize,
    pub points: Vec<PointSummary>,
    pub runs: Vec<RunRecord>,
}

/// Trains `grid.repeats` NoiER models per grid point and selects the point with
/// the highest mean validation IOD; ties keep the earlier point.
///
/// Validation OOD is `dev_ood` when given, otherwise noised validation sentences.
/// Runs that diverge are recorded and left out of the means.
pub fn grid_search(
    data: SearchData<'_>,
    grid: &GridSpec,
    base: &RunConfig,
    dev_ood: Option<&[Sentence]>,
) -> Result<SearchResult> {
    grid.validate()?;
    base.train.validate()?;
    let points = grid.points(&base.noise);
    for p in &points {
        p.validate()?;
    }
    let master = base.train.seed;
    let ood: Vec<Sentence> = match dev_ood {
        Some(o) => o.to_vec(),
        None => pseudo_ood(data.val, &grid.validation_noise, data.vocab, master),
    };
    let mut jobs = Vec::new();
    for (i, noise) in points.iter().enumerate() {
        for r in 0..grid.repeats {
            let mut run = base.clone();
            run.noise = noise.clone();
            run.train.variant = Variant::Noier;
            run.train.seed = RandomSource::derive(master, &[i as u64, r as u64]).seed();
            jobs.push(Job { point: i, repeat: r, run });
        }
    }
    let runs = run_jobs(data, jobs, |m| evaluate_msp(m, data.val, Some(&ood)))?;
    let summary = summaries(points, &runs);
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in summary.iter().enumerate() {
        if let Some(m) = p.mean {
            if best.is_none_or(|(_, b)| m.iod_x100 > b) {
                best = Some((i, m.iod_x100));
            }
        }
    }
    let (selected_index, _) = best.ok_or(Error::Diverged { epoch: 0 })?;
    Ok(SearchResult {
        selected: summary[selected_index].noise.clone(),
        selected_index,
        points: summary,
        runs,
    })
}

pub const RESULTS_HEADER: &str = "row,point,p_del,p_repl,r_perm,enabled,repeat,seed,f1,iod_x100,auroc,eer";

/// Shortest round-trip representation, so the selection can be recomputed from the file.
fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn enabled_label(n: &NoiseConfig) -> String {
    n.enabled.iter().map(|f| f.short_name()).collect::<Vec<_>>().join("+")
}

/// One `run` row per trained model (metrics empty when diverged), then one
/// `mean` row per point whose `repeat` column holds the number of finished runs.
fn results_csv(points: &[PointSummary], runs: &[RunRecord], names: Option<&[String]>) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    let label = |i: usize| names.map(|n| n[i].clone()).unwrap_or_else(|| i.to_string());
    let cfg = |i: usize| {
        let n = &points[i].noise;
        format!("{},{},{},{}", n.p_del, n.p_repl, n.r_perm, enabled_label(n))
    };
    for r in runs {
        let rep = r.report.as_ref();
        let _ = writeln!(
            out,
            "run,{},{},{},{},{},{},{},{}",
            label(r.point),
            cfg(r.point),
            r.repeat,
            r.seed,
            fmt_opt(rep.map(|x| x.f1_macro)),
            fmt_opt(rep.and_then(|x| x.iod_x100)),
            fmt_opt(rep.and_then(|x| x.auroc)),
            fmt_opt(rep.and_then(|x| x.eer)),
        );
    }
    for (i, p) in points.iter().enumerate() {
        let m = p.mean;
        let _ = writeln!(
            out,
            "mean,{},{},{},,{},{},{},{}",
            label(i),
            cfg(i),
            p.runs,
            fmt_opt(m.map(|x| x.f1)),
            fmt_opt(m.map(|x| x.iod_x100)),
            fmt_opt(m.map(|x| x.auroc)),
            fmt_opt(m.map(|x| x.eer)),
        );
    }
    out
}

impl SearchResult {
    pub fn to_csv(&self) -> String {
        results_csv(&self.points, &self.runs, None)
    }

    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv())?;
        std::fs::write(json_path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// The seven nonempty subsets of noise functions, in table order.
pub fn ablation_subsets() -> Vec<(String, Vec<NoiseFunction>)> {
    use NoiseFunction::*;
    vec![
        ("Full".into(), vec![Deletion, Replacement, Permutation]),
        ("w/o Deletion".into(), vec![Replacement, Permutation]),
        ("w/o Permutation".into(), vec![Deletion, Replacement]),
        ("w/o Replacement".into(), vec![Deletion, Permutation]),
        ("only Deletion".into(), vec![Deletion]),
        ("only Permutation".into(), vec![Permutation]),
        ("only Replacement".into(), vec![Replacement]),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub names: Vec<String>,
    pub rows: Vec<PointSummary>,
    pub runs: Vec<RunRecord>,
}

impl AblationTable {
    pub fn row(&self, name: &str) -> Option<&PointSummary> {
        self.names.iter().position(|n| n == name).map(|i| &self.rows[i])
    }

    pub fn to_csv(&self) -> String {
        results_csv(&self.rows, &self.runs, Some(&self.names))
    }

    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv())?;
        std::fs::write(json_path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Trains `repeats` NoiER models for each noise-function subset and evaluates
/// them on the test sets. Repeat `r` uses the same seed in every row, so rows
/// are paired.
pub fn ablation_sweep(
    data: SearchData<'_>,
    test_ind: &LabeledDataset,
    test_ood: &[Sentence],
    base: &RunConfig,
    repeats: usize,
) -> Result<AblationTable> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be positive".into()));
    }
    base.train.validate()?;
    let subsets = ablation_subsets();
    let mut configs = Vec::new();
    let mut jobs = Vec::new();
    for (i, (_, enabled)) in subsets.iter().enumerate() {
        let noise = base.noise.clone().with_enabled(enabled);
        noise.validate()?;
        for r in 0..repeats {
            let mut run = base.clone();
            run.noise = noise.clone();
            run.train.variant = Variant::Noier;
            run.train.seed = RandomSource::derive(base.train.seed, &[r as u64]).seed();
            jobs.push(Job { point: i, repeat: r, run });
        }
        configs.push(noise);
    }
    let runs = run_jobs(data, jobs, |m| evaluate_msp(m, test_ind, Some(test_ood)))?;
    Ok(AblationTable {
        names: subsets.into_iter().map(|(n, _)| n).collect(),
        rows: summaries(configs, &runs),
        runs,
    })
}
