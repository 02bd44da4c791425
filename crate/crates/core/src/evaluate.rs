//! OOD evaluation metrics: UD, IOD, AUROC, EER and F1, plus score histograms.
//!
//! Scores follow the "higher means more in-distribution" convention; IND is
//! the positive class everywhere. Percentages are on a 0-100 scale.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::model::ProbabilisticClassifier;
use crate::prob::{jsd, CategoricalDistribution};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Msp,
    Odin,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub ind_scores: Vec<f64>,
    pub ood_scores: Vec<f64>,
    pub score_kind: ScoreKind,
}

impl ScoreSet {
    pub fn new(ind_scores: Vec<f64>, ood_scores: Vec<f64>, score_kind: ScoreKind) -> Self {
        Self {
            ind_scores,
            ood_scores,
            score_kind,
        }
    }

    fn check(&self) -> Result<()> {
        if self.ind_scores.is_empty() || self.ood_scores.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(())
    }

    /// IND and OOD lists exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.ood_scores.clone(), self.ind_scores.clone(), self.score_kind)
    }
}

/// Mean JSD (bits) between the model's predictions and uniform.
pub fn uniform_disparity<T: Scalar, M: ProbabilisticClassifier<T> + ?Sized>(
    sentences: &[Sentence],
    model: &M,
) -> Result<f64> {
    if sentences.is_empty() {
        return Err(Error::EmptySet);
    }
    let u = CategoricalDistribution::<T>::uniform(model.num_classes());
    let total: f64 = sentences
        .iter()
        .map(|s| jsd(&model.predict_proba(s), &u).map(Scalar::as_f64))
        .sum::<Result<f64>>()?;
    Ok(total / sentences.len() as f64)
}

/// `UD(ind) - UD(ood)`; negative values mean the model is more decisive on OOD than on IND.
pub fn iod<T: Scalar, M: ProbabilisticClassifier<T> + ?Sized>(
    ind: &[Sentence],
    ood: &[Sentence],
    model: &M,
) -> Result<f64> {
    Ok(uniform_disparity(ind, model)? - uniform_disparity(ood, model)?)
}

/// Mann-Whitney AUROC, ties counted one half, in percent.
pub fn auroc(scores: &ScoreSet) -> Result<f64> {
    scores.check()?;
    let mut all: Vec<(f64, bool)> = scores
        .ind_scores
        .iter()
        .map(|&s| (s, true))
        .chain(scores.ood_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of midranks of the IND scores.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let n_ind = scores.ind_scores.len() as f64;
    let n_ood = scores.ood_scores.len() as f64;
    let u = rank_sum - n_ind * (n_ind + 1.0) / 2.0;
    Ok(100.0 * u / (n_ind * n_ood))
}

/// Where the FRR and FAR curves cross.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EerPoint {
    /// Error rate at the crossing, as a fraction.
    pub rate: f64,
    /// Threshold separating the last swept score with FRR < FAR from the first with FRR >= FAR.
    pub threshold: f64,
}

fn frac_below(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&x| x < t) as f64 / sorted.len() as f64
}

/// Sweeps thresholds over the union of observed scores.
///
/// `FRR(t)` is the share of IND scores below `t`, `FAR(t)` the share of OOD
/// scores at or above `t`. A sentinel threshold above every score closes the
/// sweep. When `FRR - FAR` changes sign between adjacent thresholds without
/// touching zero, the rate is linearly interpolated.
pub fn eer_point(scores: &ScoreSet) -> Result<EerPoint> {
    scores.check()?;
    let mut ind = scores.ind_scores.clone();
    let mut ood = scores.ood_scores.clone();
    ind.sort_by(f64::total_cmp);
    ood.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = ind.iter().chain(&ood).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let rates = |t: f64| (frac_below(&ind, t), 1.0 - frac_below(&ood, t));
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &thresholds {
        let (frr, far) = rates(t);
        if frr - far >= 0.0 {
            return Ok(crossing(prev, t, frr, far));
        }
        prev = Some((t, frr, far));
    }
    let (t_last, frr_last, far_last) = prev.expect("at least one threshold");
    // Sentinel above every score: FRR = 1, FAR = 0.
    let d0 = frr_last - far_last;
    let lambda = -d0 / (1.0 - d0);
    Ok(EerPoint {
        rate: frr_last + lambda * (1.0 - frr_last),
        threshold: t_last,
    })
}

fn crossing(prev: Option<(f64, f64, f64)>, t: f64, frr: f64, far: f64) -> EerPoint {
    let Some((t0, frr0, far0)) = prev else {
        return EerPoint { rate: frr, threshold: t };
    };
    let d0 = frr0 - far0;
    let d1 = frr - far;
    let threshold = 0.5 * (t0 + t);
    if d1 == 0.0 {
        return EerPoint { rate: frr, threshold };
    }
    let lambda = -d0 / (d1 - d0);
    EerPoint {
        rate: frr0 + lambda * (frr - frr0),
        threshold,
    }
}

/// Equal error rate in percent.
pub fn eer(scores: &ScoreSet) -> Result<f64> {
    Ok(100.0 * eer_point(scores)?.rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Macro,
    Micro,
}

/// F1 in percent over `k` classes. Under macro averaging a class absent from
/// both predictions and labels contributes 0.
pub fn f1(preds: &[usize], labels: &[usize], k: usize, averaging: Averaging) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if let Some(&bad) = preds.iter().chain(labels).find(|&&c| c >= k) {
        return Err(Error::DimensionMismatch { expected: k, got: bad });
    }
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fn_ = vec![0usize; k];
    for (&p, &y) in preds.iter().zip(labels) {
        if p == y {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[y] += 1;
        }
    }
    let f = |tp: usize, fp: usize, fn_: usize| {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let score = match averaging {
        Averaging::Macro => (0..k).map(|c| f(tp[c], fp[c], fn_[c])).sum::<f64>() / k as f64,
        Averaging::Micro => f(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum()),
    };
    Ok(100.0 * score)
}

/// One evaluation row. OOD metrics are `None` when no OOD set was supplied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub ud_ind: f64,
    pub ud_ood: Option<f64>,
    pub iod_x100: Option<f64>,
    pub auroc: Option<f64>,
    pub eer: Option<f64>,
    pub n_ind: usize,
    pub n_ood: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "f1,iod_x100,auroc,eer";

    /// `f1,iod_x100,auroc,eer` values; absent OOD metrics are left empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        format!("{:.4},{},{},{}", self.f1_macro, opt(self.iod_x100), opt(self.auroc), opt(self.eer))
    }

    pub fn save(&self, json_path: &Path, csv_path: &Path) -> Result<()> {
        std::fs::write(json_path, serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::write(csv_path, format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row()))?;
        Ok(())
    }
}

/// Scores every sentence with `score` and assembles the full report.
pub fn evaluate<T, M, F>(
    model: &M,
    ind: &[Sentence],
    ind_labels: &[usize],
    ood: Option<&[Sentence]>,
    score: F,
) -> Result<EvalReport>
where
    T: Scalar,
    M: ProbabilisticClassifier<T> + ?Sized,
    F: Fn(&Sentence) -> Result<f64>,
{
    let preds: Vec<usize> = ind.iter().map(|s| model.predict(s)).collect();
    let k = model.num_classes();
    let f1_macro = f1(&preds, ind_labels, k, Averaging::Macro)?;
    let f1_micro = f1(&preds, ind_labels, k, Averaging::Micro)?;
    let ud_ind = uniform_disparity(ind, model)?;
    let mut report = EvalReport {
        f1_macro,
        f1_micro,
        ud_ind,
        ud_ood: None,
        iod_x100: None,
        auroc: None,
        eer: None,
        n_ind: ind.len(),
        n_ood: 0,
    };
    if let Some(ood) = ood.filter(|o| !o.is_empty()) {
        let ud_ood = uniform_disparity(ood, model)?;
        let set = ScoreSet::new(
            ind.iter().map(&score).collect::<Result<_>>()?,
            ood.iter().map(&score).collect::<Result<_>>()?,
            ScoreKind::Custom,
        );
        report.ud_ood = Some(ud_ood);
        report.iod_x100 = Some((ud_ind - ud_ood) * 100.0);
        report.auroc = Some(auroc(&set)?);
        report.eer = Some(eer(&set)?);
        report.n_ood = ood.len();
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub ind_density: Vec<f64>,
    pub ood_density: Vec<f64>,
}

fn densities(scores: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let b = ((s - lo) / width).floor();
        let b = if b.is_nan() { 0 } else { (b.max(0.0) as usize).min(bins - 1) };
        counts[b] += 1;
    }
    let n = scores.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / (n * width)).collect()
}

/// Density histograms over `[1/K, 1]`; out-of-range scores land in the edge bins.
pub fn histogram(scores: &ScoreSet, bins: usize, num_classes: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("histogram needs at least 2 bins, got {bins}")));
    }
    let lo = 1.0 / num_classes.max(1) as f64;
    let hi = 1.0;
    let edges = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    Ok(Histogram {
        edges,
        ind_density: densities(&scores.ind_scores, lo, hi, bins),
        ood_density: densities(&scores.ood_scores, lo, hi, bins),
    })
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,ind_density,ood_density\n");
        for i in 0..self.ind_density.len() {
            let _ = writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.6}",
                self.edges[i],
                self.edges[i + 1],
                self.ind_density[i],
                self.ood_density[i]
            );
        }
        out
    }

    /// Overlaid filled step histograms, IND in blue and OOD in red.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let lo = self.edges[0];
        let hi = *self.edges.last().expect("edges");
        let ymax = self
            .ind_density
            .iter()
            .chain(&self.ood_density)
            .copied()
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let x = |v: f64| pad + (v - lo) / (hi - lo) * (w - 2.0 * pad);
        let y = |v: f64| h - pad - v / ymax * (h - 2.0 * pad);
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
            w / 2.0,
            escape(title)
        );
        for (dens, color) in [(&self.ind_density, "#1f77b4"), (&self.ood_density, "#d62728")] {
            let mut path = format!("M {:.2} {:.2}", x(lo), y(0.0));
            for (i, &d) in dens.iter().enumerate() {
                let _ = write!(path, " L {:.2} {:.2} L {:.2} {:.2}", x(self.edges[i]), y(d), x(self.edges[i + 1]), y(d));
            }
            let _ = write!(path, " L {:.2} {:.2} Z", x(hi), y(0.0));
            let _ = writeln!(svg, "<path d=\"{path}\" fill=\"{color}\" fill-opacity=\"0.4\" stroke=\"{color}\"/>");
        }
        let _ = writeln!(
            svg,
            "<line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <text x=\"{pad}\" y=\"{t}\" font-family=\"sans-serif\" font-size=\"11\">{lo:.3}</text>\n\
             <text x=\"{r}\" y=\"{t}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1.0</text>\n\
             <text x=\"{r}\" y=\"40\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">IND</text>\n\
             <text x=\"{r}\" y=\"54\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">OOD</text>",
            b = h - pad,
            r = w - pad,
            t = h - pad + 16.0,
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `<stem>.csv` and, if `svg` is set, `<stem>.svg`.
pub fn export_histogram(scores: &ScoreSet, bins: usize, num_classes: usize, stem: &Path, svg: bool) -> Result<Histogram> {
    let hist = histogram(scores, bins, num_classes)?;
    std::fs::write(stem.with_extension("csv"), hist.to_csv())?;
    if svg {
        std::fs::write(stem.with_extension("svg"), hist.to_svg("Maximum predicted probability"))?;
    }
    Ok(hist)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch's two-sample t-test (two-sided).
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidConfig("t-test needs at least 2 runs per group".into()));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64], m: f64| x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma) / a.len() as f64, var(b, mb) / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        return Ok(TTest {
            t: if ma == mb { 0.0 } else { f64::INFINITY.copysign(ma - mb) },
            df: (a.len() + b.len() - 2) as f64,
            p_value: p,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let p_value = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TTest { t, df, p_value })
}

/// Reads one numeric column from a CSV with a header row.
pub fn read_csv_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let idx = reader
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::UnknownField(column.to_string()))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(idx).unwrap_or_default();
        if cell.is_empty() {
            continue;
        }
        out.push(cell.parse::<f64>().map_err(|e| Error::Parse {
            row: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cmp::Ordering;
    use crate::model::ProbabilisticClassifier;
    use proptest::prelude::*;

    struct Fixed(Vec<Vec<f64>>);

    impl ProbabilisticClassifier<f64> for Fixed {
        fn num_classes(&self) -> usize {
            self.0[0].len()
        }

        fn predict_proba(&self, s: &Sentence) -> CategoricalDistribution<f64> {
            let i = s.words()[0].parse::<usize>().unwrap_or(0) % self.0.len();
            CategoricalDistribution::new(self.0[i].clone()).unwrap()
        }
    }

    fn sents(ids: &[usize]) -> Vec<Sentence> {
        ids.iter().map(|i| Sentence::from_words(&[i.to_string()])).collect()
    }

    fn set(ind: &[f64], ood: &[f64]) -> ScoreSet {
        ScoreSet::new(ind.to_vec(), ood.to_vec(), ScoreKind::Custom)
    }

    fn brute_auroc(s: &ScoreSet) -> f64 {
        let mut acc = 0.0;
        for &i in &s.ind_scores {
            for &o in &s.ood_scores {
                acc += match i.partial_cmp(&o).unwrap() {
                    Ordering::Greater => 1.0,
                    Ordering::Equal => 0.5,
                    Ordering::Less => 0.0,
                };
            }
        }
        100.0 * acc / (s.ind_scores.len() * s.ood_scores.len()) as f64
    }

    #[test]
    fn ud_examples() {
        let uniform = Fixed(vec![vec![0.5, 0.5]]);
        assert_eq!(uniform_disparity::<f64, _>(&sents(&[0, 1, 2]), &uniform).unwrap(), 0.0);
        let one_hot = Fixed(vec![vec![1.0, 0.0]]);
        assert!((uniform_disparity::<f64, _>(&sents(&[0, 0]), &one_hot).unwrap() - 0.311278).abs() < 1e-6);
        let mixed = Fixed(vec![vec![0.9, 0.1]]);
        let single = uniform_disparity::<f64, _>(&sents(&[0]), &mixed).unwrap();
        let direct = jsd(&CategoricalDistribution::new(vec![0.9, 0.1]).unwrap(), &CategoricalDistribution::uniform(2)).unwrap();
        assert_eq!(single, direct);
        assert!(matches!(uniform_disparity::<f64, _>(&[], &mixed), Err(Error::EmptySet)));
    }

    #[test]
    fn iod_examples() {
        // Sentence "0" -> one-hot, "1" -> uniform.
        let m = Fixed(vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        let a = sents(&[0, 1, 0]);
        assert_eq!(iod::<f64, _>(&a, &a, &m).unwrap(), 0.0);
        let pos = iod::<f64, _>(&sents(&[0, 0]), &sents(&[1, 1]), &m).unwrap();
        assert!((pos - 0.311278).abs() < 1e-6);
        assert!((pos * 100.0 - 31.13).abs() < 0.005);
        let neg = iod::<f64, _>(&sents(&[1, 1]), &sents(&[0, 0]), &m).unwrap();
        assert!((neg + 0.311278).abs() < 1e-6);
        assert_eq!(neg, -pos);
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&set(&[0.9, 0.8], &[0.3, 0.2])).unwrap(), 100.0);
        assert_eq!(auroc(&set(&[0.9, 0.4], &[0.5, 0.2])).unwrap(), 75.0);
        assert_eq!(auroc(&set(&[0.1, 0.5, 0.5], &[0.5, 0.1, 0.5])).unwrap(), 50.0);
        assert!(matches!(auroc(&set(&[], &[0.1])), Err(Error::EmptySet)));
    }

    #[test]
    fn eer_examples() {
        assert_eq!(eer(&set(&[0.9, 0.8], &[0.3, 0.2])).unwrap(), 0.0);
        assert_eq!(eer(&set(&[0.5], &[0.5])).unwrap(), 50.0);
        assert_eq!(eer(&set(&[0.2, 0.7], &[0.7, 0.2])).unwrap(), 50.0);
        let e = eer(&set(&[0.9, 0.8, 0.3], &[0.7, 0.2, 0.1])).unwrap();
        assert!((e - 100.0 / 3.0).abs() < 1e-9);
        let p = eer_point(&set(&[0.9, 0.8], &[0.3, 0.2])).unwrap();
        assert!((p.threshold - 0.55).abs() < 1e-12);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(&[0, 1, 2], &[0, 1, 2], 3, Averaging::Macro).unwrap(), 100.0);
        let m = f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2, Averaging::Macro).unwrap();
        assert!((m - 100.0 / 3.0).abs() < 1e-9);
        let preds = [0, 2, 1, 1, 0];
        let labels = [0, 1, 1, 2, 0];
        let acc = 100.0 * 3.0 / 5.0;
        assert!((f1(&preds, &labels, 3, Averaging::Micro).unwrap() - acc).abs() < 1e-9);
        assert!(matches!(f1(&[0], &[0, 1], 2, Averaging::Macro), Err(Error::LengthMismatch { .. })));
        // Class 2 absent from both sides contributes zero.
        assert!((f1(&[0, 1], &[0, 1], 3, Averaging::Macro).unwrap() - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&set(&[0.91, 0.92, 0.95], &[0.6, 0.6]), 10, 2).unwrap();
        let width = 0.05;
        assert!((h.ind_density[8] - 1.0 / width).abs() < 1e-9);
        assert_eq!(h.ind_density.iter().filter(|&&d| d != 0.0).count(), 1);
        let h = histogram(&set(&[0.3, 0.45, 0.99, 1.0, 0.7], &[0.25, 0.5]), 7, 4).unwrap();
        for dens in [&h.ind_density, &h.ood_density] {
            let total: f64 = dens.iter().enumerate().map(|(i, d)| d * (h.edges[i + 1] - h.edges[i])).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        assert!(histogram(&set(&[0.5], &[0.5]), 1, 2).is_err());
        assert!(h.to_svg("t").starts_with("<svg"));
        assert!(h.to_csv().starts_with("bin_left,bin_right,ind_density,ood_density\n"));
    }

    #[test]
    fn welch_matches_reference() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let r = welch_t_test(&a, &b).unwrap();
        assert!((r.t + 2.455356398286006).abs() < 1e-9, "{r:?}");
        assert!((r.p_value - 0.021378001462866985).abs() < 1e-6, "{r:?}");
    }

    fn score_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0u8..20).prop_map(|v| v as f64 / 20.0), 1..15)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn auroc_matches_pairwise_oracle(ind in score_vec(), ood in score_vec()) {
            let s = set(&ind, &ood);
            prop_assert!((auroc(&s).unwrap() - brute_auroc(&s)).abs() <= 1e-9);
        }

        #[test]
        fn auroc_rank_invariance_and_swap(ind in score_vec(), ood in score_vec()) {
            let s = set(&ind, &ood);
            let a = auroc(&s).unwrap();
            let t = set(&ind.iter().map(|v| (3.0 * v).exp()).collect::<Vec<_>>(), &ood.iter().map(|v| (3.0 * v).exp()).collect::<Vec<_>>());
            prop_assert!((auroc(&t).unwrap() - a).abs() <= 1e-9);
            prop_assert!((auroc(&s.swapped()).unwrap() - (100.0 - a)).abs() <= 1e-9);
        }

        #[test]
        fn eer_monotone_invariance(ind in score_vec(), ood in score_vec()) {
            let s = set(&ind, &ood);
            let t = set(&ind.iter().map(|v| v * v * v + 2.0).collect::<Vec<_>>(), &ood.iter().map(|v| v * v * v + 2.0).collect::<Vec<_>>());
            let (a, b) = (eer(&s).unwrap(), eer(&t).unwrap());
            prop_assert!((a - b).abs() <= 0.5);
            prop_assert!((0.0..=100.0).contains(&a));
        }
    }
}
