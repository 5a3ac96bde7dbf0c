//! Dataset schema: samples, splits and the in-memory corpus.
//!
//! A [`Corpus`] is immutable once built. Construction normalizes every text
//! to Unicode NFC, sorts samples by ascending id and rejects duplicate ids,
//! empty texts and unlabeled samples in labeled splits.

mod io;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub use io::{export, ingest, read_corpus, write_corpus, Format};
pub use stats::{render_stats_table, stats, CorpusStats, StatsCell};

/// Binary class label. `Hate` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonHate = 0,
    Hate = 1,
}

impl Label {
    pub fn is_hate(self) -> bool {
        self == Label::Hate
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_bool(hate: bool) -> Self {
        if hate {
            Label::Hate
        } else {
            Label::NonHate
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Label::NonHate),
            1 => Ok(Label::Hate),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Language tag. Only the two languages of the task are recognized; other
/// Devanagari text passes through untagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Hi,
    Ne,
}

impl Lang {
    pub const ALL: [Lang; 2] = [Lang::Hi, Lang::Ne];

    pub fn code(self) -> &'static str {
        match self {
            Lang::Hi => "hi",
            Lang::Ne => "ne",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Lang::Hi => "Hindi",
            Lang::Ne => "Nepali",
        }
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hi" => Ok(Lang::Hi),
            "ne" => Ok(Lang::Ne),
            other => Err(Error::validation(format!(
                "unknown language tag `{other}` (expected `hi` or `ne`)"
            ))),
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Original,
    Backtranslated,
    Duplicated,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Original => "original",
            Origin::Backtranslated => "backtranslated",
            Origin::Duplicated => "duplicated",
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Origin::Original),
            "backtranslated" => Ok(Origin::Backtranslated),
            "duplicated" => Ok(Origin::Duplicated),
            other => Err(Error::validation(format!("unknown origin `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Evaluation,
    Test,
}

impl Split {
    /// Train and evaluation splits must carry a label on every sample.
    pub fn is_labeled(self) -> bool {
        !matches!(self, Split::Test)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Evaluation => "evaluation",
            Split::Test => "test",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Split::Train => "Train",
            Split::Evaluation => "Evaluation",
            Split::Test => "Test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "evaluation" | "eval" | "dev" => Ok(Split::Evaluation),
            "test" => Ok(Split::Test),
            other => Err(Error::validation(format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One text instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: u64,
    pub text: String,
    pub label: Option<Label>,
    pub lang: Option<Lang>,
    pub origin: Origin,
}

impl Sample {
    pub fn new(id: u64, text: impl Into<String>) -> Self {
        Sample {
            id,
            text: text.into(),
            label: None,
            lang: None,
            origin: Origin::Original,
        }
    }

    pub fn labeled(id: u64, text: impl Into<String>, label: Label, lang: Option<Lang>) -> Self {
        Sample {
            label: Some(label),
            lang,
            ..Sample::new(id, text)
        }
    }

    pub fn is_hate(&self) -> bool {
        self.label == Some(Label::Hate)
    }
}

/// Predicate on label and language. `None` fields match anything.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleFilter {
    pub label: Option<Label>,
    pub lang: Option<Lang>,
}

impl SampleFilter {
    pub fn label(label: Label) -> Self {
        SampleFilter {
            label: Some(label),
            lang: None,
        }
    }

    pub fn lang(mut self, lang: Lang) -> Self {
        self.lang = Some(lang);
        self
    }

    pub fn matches(&self, s: &Sample) -> bool {
        self.label.is_none_or(|l| s.label == Some(l)) && self.lang.is_none_or(|l| s.lang == Some(l))
    }
}

/// An ordered, validated collection of samples belonging to one split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    split: Split,
    samples: Vec<Sample>,
}

impl Corpus {
    pub fn new(split: Split, mut samples: Vec<Sample>) -> Result<Self> {
        for s in &mut samples {
            normalize_in_place(&mut s.text);
            if s.text.trim().is_empty() {
                return Err(Error::validation(format!("sample {}: text is empty", s.id)));
            }
            if split.is_labeled() && s.label.is_none() {
                return Err(Error::validation(format!(
                    "sample {}: missing label in labeled split `{split}`",
                    s.id
                )));
            }
        }
        samples.sort_by_key(|s| s.id);
        if let Some(w) = samples.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id));
        }
        Ok(Corpus { split, samples })
    }

    pub fn empty(split: Split) -> Self {
        Corpus {
            split,
            samples: Vec::new(),
        }
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.samples.iter().map(|s| s.id)
    }

    pub fn get(&self, id: u64) -> Option<&Sample> {
        self.samples
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| &self.samples[i])
    }

    pub fn max_id(&self) -> Option<u64> {
        self.samples.last().map(|s| s.id)
    }

    /// True when every sample carries a label.
    pub fn is_labeled(&self) -> bool {
        self.samples.iter().all(|s| s.label.is_some())
    }

    /// Samples satisfying `pred`, order preserved.
    pub fn filter_by(&self, pred: impl Fn(&Sample) -> bool) -> Corpus {
        Corpus {
            split: self.split,
            samples: self.samples.iter().filter(|s| pred(s)).cloned().collect(),
        }
    }

    /// Union of two corpora with disjoint id spaces. The split of `self` is kept.
    pub fn merge(&self, other: &Corpus) -> Result<Corpus> {
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Corpus::new(self.split, samples)
    }

    /// Appends `other` with fresh ids above `self.max_id()`, keeping the
    /// relative order of `other`'s ids.
    pub fn append_renumbered(&self, other: &Corpus) -> Result<Corpus> {
        let first = self.max_id().map_or(0, |m| m + 1);
        let mut samples = self.samples.clone();
        samples.extend((first..).zip(&other.samples).map(|(id, s)| Sample { id, ..s.clone() }));
        Corpus::new(self.split, samples)
    }

    pub fn with_split(self, split: Split) -> Result<Corpus> {
        Corpus::new(split, self.samples)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

pub(crate) fn normalize_in_place(text: &mut String) {
    if !unicode_normalization::is_nfc(text) {
        *text = text.nfc().collect();
    }
}
