//! Minority-class augmentation: backtranslation through a pivot language,
//! a cosine-similarity acceptance gate, and duplication of positives.

mod translate;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Lang, Origin, Sample};
use crate::embeddings::{cosine_similarity, embed, EmbeddingProvider};
use crate::error::{Error, ErrorKind, Result};

pub use translate::{backtranslate, IdentityTranslator, PerturbTranslator, TableTranslator, Translator};

/// Which positives [`duplicate_minority`] copies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicateScope {
    /// Only positives with `origin = original`.
    #[default]
    OriginalOnly,
    /// Every positive, backtranslations included.
    AllPositives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Acceptance requires `similarity > threshold` (strict).
    pub threshold: f64,
    pub pivot: String,
    pub languages_to_augment: BTreeSet<Lang>,
    pub duplicate_minority: bool,
    pub duplicate_scope: DuplicateScope,
    /// Abort when more than this fraction of backtranslations fail.
    pub max_failure_rate: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            threshold: 0.9,
            pivot: "en".into(),
            languages_to_augment: Lang::ALL.into_iter().collect(),
            duplicate_minority: true,
            duplicate_scope: DuplicateScope::OriginalOnly,
            max_failure_rate: 0.5,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::validation(format!(
                "augmentation threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.pivot.trim().is_empty() {
            return Err(Error::validation("pivot language is empty"));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return Err(Error::validation("max_failure_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// One backtranslation attempt and its gate verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub source_id: u64,
    pub augmented_text: String,
    pub similarity: f64,
    pub accepted: bool,
}

/// Scores `augmented` against `original` and accepts iff the cosine
/// similarity of their embeddings is strictly greater than `threshold`.
pub fn gate(
    provider: &dyn EmbeddingProvider,
    source_id: u64,
    original: &str,
    augmented: &str,
    threshold: f64,
) -> Result<AugmentationRecord> {
    let a = embed(provider, original)?;
    let b = embed(provider, augmented)?;
    let similarity = cosine_similarity(&a, &b)?;
    Ok(AugmentationRecord {
        source_id,
        augmented_text: augmented.to_string(),
        similarity,
        accepted: similarity > threshold,
    })
}

/// Re-applies the gate to an existing audit trail at another threshold.
pub fn regate(records: &[AugmentationRecord], threshold: f64) -> Vec<AugmentationRecord> {
    records
        .iter()
        .map(|r| AugmentationRecord {
            accepted: r.similarity > threshold,
            ..r.clone()
        })
        .collect()
}

/// Allocates ids above the corpus maximum.
struct IdAllocator(u64);

impl IdAllocator {
    fn after(corpus: &Corpus) -> Self {
        IdAllocator(corpus.max_id().unwrap_or(0))
    }

    fn next(&mut self) -> u64 {
        self.0 += 1;
        self.0
    }
}

fn duplicates(corpus: &Corpus, scope: DuplicateScope, ids: &mut IdAllocator) -> Vec<Sample> {
    corpus
        .iter()
        .filter(|s| s.is_hate() && (scope == DuplicateScope::AllPositives || s.origin == Origin::Original))
        .map(|s| Sample {
            id: ids.next(),
            origin: Origin::Duplicated,
            ..s.clone()
        })
        .collect()
}

/// Adds one copy of every positive sample (see [`DuplicateScope`]) with a
/// fresh id above the current maximum and `origin = duplicated`.
pub fn duplicate_minority(corpus: &Corpus, scope: DuplicateScope) -> Result<Corpus> {
    if !corpus.is_labeled() {
        return Err(Error::validation("duplicate_minority requires a labeled corpus"));
    }
    let mut ids = IdAllocator::after(corpus);
    let extra = duplicates(corpus, scope, &mut ids);
    if extra.is_empty() {
        return Ok(corpus.clone());
    }
    let mut samples = corpus.samples().to_vec();
    samples.extend(extra);
    Corpus::new(corpus.split(), samples)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationSummary {
    pub input: usize,
    /// Positives eligible for backtranslation.
    pub attempted: usize,
    pub failed: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub duplicated: usize,
    pub output: usize,
}

impl AugmentationSummary {
    /// `out = in + accepted + duplicated`
    pub fn identity_line(&self) -> String {
        format!(
            "{} = {} + {} + {}",
            self.output, self.input, self.accepted, self.duplicated
        )
    }

    pub fn identity_holds(&self) -> bool {
        self.output == self.input + self.accepted + self.duplicated
    }
}

#[derive(Debug, Clone)]
pub struct AugmentationOutcome {
    pub corpus: Corpus,
    /// One record per successful backtranslation, ascending source id.
    pub records: Vec<AugmentationRecord>,
    /// Samples whose backtranslation failed, with the reason.
    pub failures: Vec<(u64, String)>,
    pub summary: AugmentationSummary,
}

/// Backtranslates every original positive whose language is selected,
/// keeps the variants that pass the gate, then optionally duplicates
/// positives.
///
/// Per-sample backend failures are recorded and skipped; when the failure
/// fraction exceeds `max_failure_rate` the run aborts. Work runs in
/// parallel when both backends are reentrant, and results are committed in
/// ascending source id either way.
pub fn augment(
    corpus: &Corpus,
    cfg: &AugmentationConfig,
    translator: &dyn Translator,
    provider: &dyn EmbeddingProvider,
) -> Result<AugmentationOutcome> {
    cfg.validate()?;
    if !corpus.is_labeled() {
        return Err(Error::validation("augmentation requires a labeled corpus"));
    }

    let candidates: Vec<&Sample> = corpus
        .iter()
        .filter(|s| {
            s.label == Some(Label::Hate)
                && s.origin == Origin::Original
                && s.lang.is_some_and(|l| cfg.languages_to_augment.contains(&l))
        })
        .collect();

    let attempt = |s: &&Sample| -> Result<AugmentationRecord> {
        let lang = s.lang.expect("filtered on lang");
        let text = backtranslate(translator, &s.text, lang, &cfg.pivot)?;
        gate(provider, s.id, &s.text, &text, cfg.threshold)
    };
    let results: Vec<Result<AugmentationRecord>> = if translator.reentrant() && provider.reentrant() {
        candidates.par_iter().map(attempt).collect()
    } else {
        candidates.iter().map(attempt).collect()
    };

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (s, r) in candidates.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) if e.kind() == ErrorKind::Backend => failures.push((s.id, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let attempted = candidates.len();
    if attempted > 0 && failures.len() as f64 > cfg.max_failure_rate * attempted as f64 {
        return Err(Error::AugmentationAborted {
            failed: failures.len(),
            attempted,
        });
    }

    let mut ids = IdAllocator::after(corpus);
    let mut samples = corpus.samples().to_vec();
    let mut accepted = 0;
    for rec in records.iter().filter(|r| r.accepted) {
        let src = corpus.get(rec.source_id).expect("record source in corpus");
        samples.push(Sample {
            id: ids.next(),
            text: rec.augmented_text.clone(),
            origin: Origin::Backtranslated,
            ..src.clone()
        });
        accepted += 1;
    }
    let with_bt = Corpus::new(corpus.split(), samples)?;

    let mut duplicated = 0;
    let out = if cfg.duplicate_minority {
        let extra = duplicates(&with_bt, cfg.duplicate_scope, &mut ids);
        duplicated = extra.len();
        let mut samples = with_bt.into_samples();
        samples.extend(extra);
        Corpus::new(corpus.split(), samples)?
    } else {
        with_bt
    };

    let summary = AugmentationSummary {
        input: corpus.len(),
        attempted,
        failed: failures.len(),
        accepted,
        rejected: records.len() - accepted,
        duplicated,
        output: out.len(),
    };
    debug_assert!(summary.identity_holds());
    Ok(AugmentationOutcome {
        corpus: out,
        records,
        failures,
        summary,
    })
}

pub fn write_audit(records: &[AugmentationRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::validation(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_audit(path: impl AsRef<Path>) -> Result<Vec<AugmentationRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            row: i + 1,
            field: "record".into(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
