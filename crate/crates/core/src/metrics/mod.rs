//! Confusion-matrix metrics and Table-style report rendering.

mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::predictions::PredictionSet;

pub use report::{parse_rows, render_report, Column, Report};

/// Binary confusion matrix with hate (label 1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, gold: Label, pred: Label) {
        match (gold, pred) {
            (Label::Hate, Label::Hate) => self.tp += 1,
            (Label::NonHate, Label::Hate) => self.fp += 1,
            (Label::NonHate, Label::NonHate) => self.tn += 1,
            (Label::Hate, Label::NonHate) => self.fn_ += 1,
        }
    }
}

/// Counts predictions against gold labels. Ids must match exactly.
pub fn confusion(preds: &PredictionSet, gold: &Corpus) -> Result<ConfusionMatrix> {
    let gold_ids: Vec<u64> = gold.ids().collect();
    preds.check_same_ids(&gold_ids)?;
    let mut cm = ConfusionMatrix::default();
    for s in gold {
        let g = s
            .label
            .ok_or_else(|| Error::validation(format!("gold sample {} has no label", s.id)))?;
        cm.add(g, preds.label(s.id).expect("ids checked"));
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Hate class only.
    #[default]
    PositiveClass,
    /// Unweighted mean over both classes.
    Macro,
    /// Pooled counts over both classes; equals accuracy for binary tasks.
    Micro,
    /// Mean over both classes weighted by gold support.
    Weighted,
}

impl Averaging {
    pub const ALL: [Averaging; 4] = [
        Averaging::PositiveClass,
        Averaging::Macro,
        Averaging::Micro,
        Averaging::Weighted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::PositiveClass => "positive_class",
            Averaging::Macro => "macro",
            Averaging::Micro => "micro",
            Averaging::Weighted => "weighted",
        }
    }
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Averaging::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown averaging `{s}`")))
    }
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A metric whose denominator was zero and was reported as 0.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    NoSamples,
    PrecisionUndefinedHate,
    RecallUndefinedHate,
    F1UndefinedHate,
    PrecisionUndefinedNonHate,
    RecallUndefinedNonHate,
    F1UndefinedNonHate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub averaging: Averaging,
    #[serde(default)]
    pub degenerate_flags: Vec<Degenerate>,
}

impl MetricRow {
    pub fn value(&self, c: Column) -> f64 {
        match c {
            Column::Recall => self.recall,
            Column::Precision => self.precision,
            Column::F1 => self.f1,
            Column::Accuracy => self.accuracy,
        }
    }
}

struct ClassScores {
    precision: f64,
    recall: f64,
    f1: f64,
}

fn ratio(num: usize, den: usize, flag: Degenerate, flags: &mut Vec<Degenerate>) -> f64 {
    if den == 0 {
        flags.push(flag);
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64, flag: Degenerate, flags: &mut Vec<Degenerate>) -> f64 {
    if p + r == 0.0 {
        flags.push(flag);
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn class_scores(tp: usize, fp: usize, fn_: usize, hate: bool, flags: &mut Vec<Degenerate>) -> ClassScores {
    use Degenerate::*;
    let (pf, rf, ff) = if hate {
        (PrecisionUndefinedHate, RecallUndefinedHate, F1UndefinedHate)
    } else {
        (PrecisionUndefinedNonHate, RecallUndefinedNonHate, F1UndefinedNonHate)
    };
    let precision = ratio(tp, tp + fp, pf, flags);
    let recall = ratio(tp, tp + fn_, rf, flags);
    let f1 = harmonic(precision, recall, ff, flags);
    ClassScores { precision, recall, f1 }
}

/// Recall, precision, F1 and accuracy under `averaging`. Zero denominators
/// yield 0.0 and a [`Degenerate`] flag.
pub fn compute_metrics(cm: &ConfusionMatrix, averaging: Averaging) -> MetricRow {
    let total = cm.total();
    let mut flags = Vec::new();
    if total == 0 {
        return MetricRow {
            recall: 0.0,
            precision: 0.0,
            f1: 0.0,
            accuracy: 0.0,
            averaging,
            degenerate_flags: vec![Degenerate::NoSamples],
        };
    }
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let (precision, recall, f1) = match averaging {
        Averaging::PositiveClass => {
            let s = class_scores(cm.tp, cm.fp, cm.fn_, true, &mut flags);
            (s.precision, s.recall, s.f1)
        }
        Averaging::Micro => {
            // Every sample is one prediction and one gold label, so pooled
            // precision and recall both reduce to accuracy.
            (accuracy, accuracy, accuracy)
        }
        Averaging::Macro | Averaging::Weighted => {
            let pos = class_scores(cm.tp, cm.fp, cm.fn_, true, &mut flags);
            let neg = class_scores(cm.tn, cm.fn_, cm.fp, false, &mut flags);
            let (wp, wn) = if averaging == Averaging::Macro {
                (0.5, 0.5)
            } else {
                let t = total as f64;
                ((cm.tp + cm.fn_) as f64 / t, (cm.tn + cm.fp) as f64 / t)
            };
            (
                wp * pos.precision + wn * neg.precision,
                wp * pos.recall + wn * neg.recall,
                wp * pos.f1 + wn * neg.f1,
            )
        }
    };
    MetricRow {
        recall,
        precision,
        f1,
        accuracy,
        averaging,
        degenerate_flags: flags,
    }
}

/// `compute_metrics(confusion(preds, gold))`.
pub fn evaluate(preds: &PredictionSet, gold: &Corpus, averaging: Averaging) -> Result<MetricRow> {
    Ok(compute_metrics(&confusion(preds, gold)?, averaging))
}
