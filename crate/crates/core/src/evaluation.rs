//! Confusion matrices, averaged classification metrics and one-vs-rest AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with rows = actual class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let k = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::dim("ConfusionMatrix::from_rows", &[k, k], &[k, r.len()]));
        }
        Ok(ConfusionMatrix {
            classes: k,
            counts: rows.into_iter().flatten().collect(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.classes + predicted]
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.counts[actual * self.classes + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.classes).map(|a| self.get(a, c)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.classes.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Relabels class `c` as `perm[c]` on both axes.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.classes];
        if perm.len() != self.classes
            || perm
                .iter()
                .any(|&p| p >= self.classes || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Param("not a permutation of the class indices".into()));
        }
        let mut out = ConfusionMatrix::new(self.classes);
        for a in 0..self.classes {
            for p in 0..self.classes {
                out.counts[perm[a] * self.classes + perm[p]] = self.get(a, p);
            }
        }
        Ok(out)
    }

    /// Header `actual,pred_0,..,pred_{K-1}` then one row per actual class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("actual");
        for p in 0..self.classes {
            s.push_str(&format!(",pred_{p}"));
        }
        s.push('\n');
        for a in 0..self.classes {
            s.push_str(&a.to_string());
            for p in 0..self.classes {
                s.push_str(&format!(",{}", self.get(a, p)));
            }
            s.push('\n');
        }
        s
    }
}

impl TryFrom<Vec<Vec<u64>>> for ConfusionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u64>>) -> Result<Self> {
        ConfusionMatrix::from_rows(rows)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<u64>> {
    fn from(m: ConfusionMatrix) -> Self {
        m.rows()
    }
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::dim("confusion_matrix", &[actual.len()], &[predicted.len()]));
    }
    let mut m = ConfusionMatrix::new(classes);
    for (&a, &p) in actual.iter().zip(predicted) {
        if let Some(&label) = [a, p].iter().find(|&&l| l >= classes) {
            return Err(Error::Label { label, classes });
        }
        m.add(a, p);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Macro,
    Micro,
    #[default]
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a zero denominator forced the value to 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub averaging: Averaging,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when any contributing per-class value hit a zero denominator.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> (f64, bool) {
    if p + r == 0.0 {
        (0.0, true)
    } else {
        (2.0 * p * r / (p + r), false)
    }
}

pub fn per_class_metrics(m: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..m.classes())
        .map(|c| {
            let tp = m.get(c, c);
            let (precision, precision_undefined) = ratio(tp, m.col_sum(c));
            let (recall, recall_undefined) = ratio(tp, m.row_sum(c));
            let (f1, f1_undefined) = harmonic(precision, recall);
            ClassMetrics {
                class: c,
                support: m.row_sum(c),
                precision,
                recall,
                f1,
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect()
}

pub fn classification_metrics(m: &ConfusionMatrix, averaging: Averaging) -> Result<Metrics> {
    let total = m.total();
    if m.classes() == 0 || total == 0 {
        return Err(Error::Metric("confusion matrix has no counts".into()));
    }
    let accuracy = m.trace() as f64 / total as f64;
    let per_class = per_class_metrics(m);
    let any_undefined = per_class
        .iter()
        .any(|c| c.precision_undefined || c.recall_undefined || c.f1_undefined);
    let (precision, recall, f1, zero_division) = match averaging {
        Averaging::Micro => {
            // Pooled false positives and false negatives both equal the off-diagonal mass.
            let (p, _) = ratio(m.trace(), total);
            let (f1, undef) = harmonic(p, p);
            (p, p, f1, undef)
        }
        Averaging::Macro => {
            let k = per_class.len() as f64;
            let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
            (mean(|c| c.precision), mean(|c| c.recall), mean(|c| c.f1), any_undefined)
        }
        Averaging::Weighted => {
            let t = total as f64;
            let wmean =
                |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / t;
            let undef = per_class
                .iter()
                .any(|c| c.support > 0 && (c.precision_undefined || c.recall_undefined || c.f1_undefined));
            (wmean(|c| c.precision), wmean(|c| c.recall), wmean(|c| c.f1), undef)
        }
    };
    Ok(Metrics {
        averaging,
        accuracy,
        precision,
        recall,
        f1,
        zero_division,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    /// Mean over classes that had both positives and negatives.
    pub macro_auc: f64,
    /// `None` for skipped classes.
    pub per_class: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
}

/// Ranks starting at 1, tied values sharing their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j hold ranks i+1..=j.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        i = j;
    }
    ranks
}

/// Rank-sum AUC of `score` separating `positive` rows from the rest.
fn binary_auc(score: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(score);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Macro one-vs-rest AUC from an `N × K` row-major score matrix.
pub fn roc_auc_ovr(scores: &[f64], actual: &[usize], classes: usize) -> Result<AucResult> {
    if scores.len() != actual.len() * classes {
        return Err(Error::dim("roc_auc_ovr", &[actual.len(), classes], &[scores.len()]));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    if let Some(&label) = actual.iter().find(|&&a| a >= classes) {
        return Err(Error::Label { label, classes });
    }
    let mut per_class = Vec::with_capacity(classes);
    let mut skipped = Vec::new();
    for c in 0..classes {
        let column: Vec<f64> = scores.iter().skip(c).step_by(classes).copied().collect();
        let positive: Vec<bool> = actual.iter().map(|&a| a == c).collect();
        let auc = binary_auc(&column, &positive);
        if auc.is_none() {
            skipped.push(c);
        }
        per_class.push(auc);
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Metric(
            "AUC undefined: no class has both positive and negative examples".into(),
        ));
    }
    Ok(AucResult {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        per_class,
        skipped_classes: skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportMetadata {
    pub model_id: String,
    pub dataset_id: String,
    pub split_seed: Option<u64>,
    /// Producing tool and version, e.g. `fnwl 0.1.0`.
    #[serde(default)]
    pub tool: String,
    /// Effective configuration of the producing run.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucSource {
    Scores,
    /// Only hard predictions were available; each row scores 1 on its predicted class.
    OneHotPredictions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub source: AucSource,
    pub degenerate: bool,
    #[serde(flatten)]
    pub result: AucResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub zero_division: bool,
}

impl From<&Metrics> for AveragedScores {
    fn from(m: &Metrics) -> Self {
        AveragedScores {
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            zero_division: m.zero_division,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub classes: usize,
    pub total: u64,
    pub confusion_matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub default_averaging: Averaging,
    #[serde(rename = "macro")]
    pub macro_avg: AveragedScores,
    #[serde(rename = "micro")]
    pub micro_avg: AveragedScores,
    #[serde(rename = "weighted")]
    pub weighted_avg: AveragedScores,
    pub auc: Option<AucSummary>,
    pub per_class: Vec<ClassMetrics>,
}

/// Scores behind a report's AUC: a row-major `N × K` matrix with its labels.
pub struct ScoreInput<'a> {
    pub scores: &'a [f64],
    pub actual: &'a [usize],
}

/// Assembles a report. Without scores the AUC falls back to one-hot scores
/// rebuilt from the matrix cells and is marked degenerate; it is `None` when
/// even that is undefined.
pub fn build_report(
    m: &ConfusionMatrix,
    scores: Option<ScoreInput<'_>>,
    metadata: ReportMetadata,
) -> Result<EvaluationReport> {
    let k = m.classes();
    let micro = classification_metrics(m, Averaging::Micro)?;
    let macro_m = classification_metrics(m, Averaging::Macro)?;
    let weighted = classification_metrics(m, Averaging::Weighted)?;
    let auc = match scores {
        Some(s) => {
            if s.actual.len() as u64 != m.total() {
                return Err(Error::dim("build_report", &[m.total() as usize], &[s.actual.len()]));
            }
            Some(AucSummary {
                source: AucSource::Scores,
                degenerate: false,
                result: roc_auc_ovr(s.scores, s.actual, k)?,
            })
        }
        None => {
            let mut scores = Vec::new();
            let mut actual = Vec::new();
            for a in 0..k {
                for p in 0..k {
                    for _ in 0..m.get(a, p) {
                        scores.extend((0..k).map(|c| if c == p { 1.0 } else { 0.0 }));
                        actual.push(a);
                    }
                }
            }
            roc_auc_ovr(&scores, &actual, k).ok().map(|result| AucSummary {
                source: AucSource::OneHotPredictions,
                degenerate: true,
                result,
            })
        }
    };
    Ok(EvaluationReport {
        metadata,
        classes: k,
        total: m.total(),
        confusion_matrix: m.clone(),
        accuracy: micro.accuracy,
        default_averaging: Averaging::Weighted,
        macro_avg: (&macro_m).into(),
        micro_avg: (&micro).into(),
        weighted_avg: (&weighted).into(),
        auc,
        per_class: per_class_metrics(m),
    })
}

impl EvaluationReport {
    /// Pretty JSON with a trailing newline; field order is fixed by the struct.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
