use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Head, ModelHandle, ModelSpec, TrainingBackend, TrainingConfig};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::util::fnv1a_str;

/// Deterministic stand-in for GPU fine-tuning.
///
/// In lexicon mode (the default) training fits a Bernoulli naive Bayes
/// model over whitespace tokens; each spec keeps a seeded random subset of
/// the vocabulary, sized by its head, so different specs disagree the way
/// real models do. In marker mode the model predicts hate iff the text
/// contains one of the marker tokens, regardless of training data.
#[derive(Debug, Clone)]
pub struct MockBackend {
    heads: BTreeSet<Head>,
    markers: Option<Vec<String>>,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend {
            heads: Head::ALL.into_iter().collect(),
            markers: None,
        }
    }
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_markers<I: IntoIterator<Item = S>, S: Into<String>>(markers: I) -> Self {
        MockBackend {
            markers: Some(markers.into_iter().map(Into::into).collect()),
            ..Self::default()
        }
    }

    /// Drops support for `head`, for exercising capability errors.
    pub fn without(mut self, head: Head) -> Self {
        self.heads.remove(&head);
        self
    }
}

/// Fraction of the vocabulary each head keeps.
fn vocabulary_keep(head: Head) -> f64 {
    match head {
        Head::Native => 0.9,
        Head::LogisticRegression => 0.8,
        Head::Tabnet => 0.6,
        Head::LstmCnnFc => 0.5,
        Head::LstmFc => 0.4,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MockState {
    Lexicon {
        bias: f64,
        max_tokens: usize,
        weights: BTreeMap<String, f64>,
    },
    Markers {
        markers: Vec<String>,
    },
}

impl ModelHandle for MockState {
    fn scores(&self, texts: &[&str]) -> Result<Vec<f64>> {
        Ok(texts
            .iter()
            .map(|t| match self {
                MockState::Markers { markers } => {
                    let hit = t.split_whitespace().any(|tok| markers.iter().any(|m| m == tok));
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                }
                MockState::Lexicon {
                    bias,
                    max_tokens,
                    weights,
                } => {
                    let toks: BTreeSet<&str> = t.split_whitespace().take(*max_tokens).collect();
                    let logit = bias + toks.iter().filter_map(|tok| weights.get(*tok)).sum::<f64>();
                    1.0 / (1.0 + (-logit).exp())
                }
            })
            .collect())
    }

    fn state(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("mock state serializes")
    }
}

impl TrainingBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn supports(&self, head: Head) -> bool {
        self.heads.contains(&head)
    }

    fn train(&self, spec: &ModelSpec, corpus: &Corpus, cfg: &TrainingConfig) -> Result<Box<dyn ModelHandle>> {
        if let Some(markers) = &self.markers {
            return Ok(Box::new(MockState::Markers {
                markers: markers.clone(),
            }));
        }
        let mut hate_df: BTreeMap<&str, f64> = BTreeMap::new();
        let mut other_df: BTreeMap<&str, f64> = BTreeMap::new();
        let (mut n_hate, mut n_other) = (0.0, 0.0);
        for s in corpus {
            let toks: BTreeSet<&str> = s.text.split_whitespace().take(cfg.max_sequence_length).collect();
            let df = if s.is_hate() {
                n_hate += 1.0;
                &mut hate_df
            } else {
                n_other += 1.0;
                &mut other_df
            };
            for t in toks {
                *df.entry(t).or_insert(0.0) += 1.0;
            }
        }

        let vocab: BTreeSet<&str> = hate_df.keys().chain(other_df.keys()).copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a_str(cfg.seed, &spec.id));
        let keep = vocabulary_keep(spec.head);
        let alpha = 1.0;
        let mut weights = BTreeMap::new();
        for t in vocab {
            let h = hate_df.get(t).copied().unwrap_or(0.0);
            let o = other_df.get(t).copied().unwrap_or(0.0);
            // Draw for every token so the subset is stable under frequency cutoffs.
            let kept = rng.gen_bool(keep);
            if h + o < 2.0 || !kept {
                continue;
            }
            let w = ((h + alpha) / (n_hate + 2.0 * alpha)).ln() - ((o + alpha) / (n_other + 2.0 * alpha)).ln();
            weights.insert(t.to_string(), w);
        }
        Ok(Box::new(MockState::Lexicon {
            bias: ((n_hate + 1.0) / (n_other + 1.0)).ln(),
            max_tokens: cfg.max_sequence_length,
            weights,
        }))
    }

    fn restore(&self, _spec: &ModelSpec, state: &serde_json::Value) -> Result<Box<dyn ModelHandle>> {
        let s: MockState =
            serde_json::from_value(state.clone()).map_err(|e| Error::validation(format!("mock model state: {e}")))?;
        Ok(Box::new(s))
    }
}
