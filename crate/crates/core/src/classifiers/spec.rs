use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoder family a model draws its token representations from. The
/// concrete checkpoint for each slot comes from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderSlot {
    /// MuRIL further fine-tuned on Hindi abusive-language data.
    MurilAbusive,
    Muril,
    IndicBert,
    /// Cross-lingual RoBERTa.
    XlmRoberta,
    /// Static subword vectors (Hindi + Nepali), no contextual encoder.
    StaticVectors,
}

impl EncoderSlot {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderSlot::MurilAbusive => "muril_abusive",
            EncoderSlot::Muril => "muril",
            EncoderSlot::IndicBert => "indic_bert",
            EncoderSlot::XlmRoberta => "xlm_roberta",
            EncoderSlot::StaticVectors => "static_vectors",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingSource {
    /// Embeddings produced by the encoder itself.
    #[serde(rename = "self")]
    SelfEncoded,
    StaticVectors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// The checkpoint's own sequence-classification head, fine-tuned end to end.
    Native,
    Tabnet,
    LstmCnnFc,
    LogisticRegression,
    LstmFc,
}

impl Head {
    pub const ALL: [Head; 5] = [
        Head::Native,
        Head::Tabnet,
        Head::LstmCnnFc,
        Head::LogisticRegression,
        Head::LstmFc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Head::Native => "native",
            Head::Tabnet => "tabnet",
            Head::LstmCnnFc => "lstm_cnn_fc",
            Head::LogisticRegression => "logistic_regression",
            Head::LstmFc => "lstm_fc",
        }
    }

    /// Declarative layer stack, input to output.
    pub fn layers(self, p: &HeadParams) -> Vec<Layer> {
        match self {
            Head::Native => vec![Layer::EncoderClassifier],
            Head::Tabnet => vec![
                Layer::TabNet {
                    decision_width: p.hidden,
                },
                Layer::Linear { outputs: 2 },
            ],
            Head::LstmCnnFc => vec![
                Layer::Recurrent { hidden: p.hidden },
                Layer::Conv1d {
                    kernel: p.conv_kernel,
                    channels: p.hidden,
                },
                Layer::Dropout { p: p.dropout },
                Layer::Dense { units: p.hidden },
                Layer::Linear { outputs: 2 },
            ],
            Head::LogisticRegression => vec![Layer::Linear { outputs: 1 }],
            Head::LstmFc => vec![
                Layer::Recurrent { hidden: p.hidden },
                Layer::Dropout { p: p.dropout },
                Layer::Linear { outputs: 2 },
            ],
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Layer sizes for heads whose widths are not fixed by the registry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadParams {
    pub hidden: usize,
    pub conv_kernel: usize,
    pub dropout: f64,
}

impl Default for HeadParams {
    fn default() -> Self {
        HeadParams {
            hidden: 256,
            conv_kernel: 3,
            dropout: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    EncoderClassifier,
    TabNet {
        decision_width: usize,
    },
    /// Bidirectional LSTM over token states.
    Recurrent {
        hidden: usize,
    },
    Conv1d {
        kernel: usize,
        channels: usize,
    },
    Dropout {
        p: f64,
    },
    Dense {
        units: usize,
    },
    Linear {
        outputs: usize,
    },
}

/// One encoder/head configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub name: String,
    pub encoder: EncoderSlot,
    /// Concrete checkpoint, filled from configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    pub embedding_source: EmbeddingSource,
    pub head: Head,
    #[serde(default)]
    pub head_params: HeadParams,
    pub trainable_encoder: bool,
    /// True for specs outside the built-in registry.
    #[serde(default)]
    pub custom: bool,
}

impl ModelSpec {
    /// A user-defined configuration, flagged as custom.
    pub fn custom(
        id: impl Into<String>,
        encoder: EncoderSlot,
        embedding_source: EmbeddingSource,
        head: Head,
        trainable_encoder: bool,
    ) -> Result<Self> {
        let id = id.into();
        let mut spec = entry(&id, &id, encoder, embedding_source, head, trainable_encoder);
        spec.custom = true;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::validation("model id is empty"));
        }
        if self.embedding_source == EmbeddingSource::StaticVectors && self.head != Head::LstmFc {
            return Err(Error::validation(format!(
                "{}: static vectors are only paired with the lstm_fc head",
                self.id
            )));
        }
        if (self.encoder == EncoderSlot::StaticVectors) != (self.embedding_source == EmbeddingSource::StaticVectors) {
            return Err(Error::validation(format!(
                "{}: static_vectors encoder and embedding source must go together",
                self.id
            )));
        }
        if !(0.0..1.0).contains(&self.head_params.dropout)
            || self.head_params.hidden == 0
            || self.head_params.conv_kernel == 0
        {
            return Err(Error::validation(format!("{}: invalid head parameters", self.id)));
        }
        Ok(())
    }

    pub fn layers(&self) -> Vec<Layer> {
        self.head.layers(&self.head_params)
    }
}

fn entry(
    id: &str,
    name: &str,
    encoder: EncoderSlot,
    embedding_source: EmbeddingSource,
    head: Head,
    trainable_encoder: bool,
) -> ModelSpec {
    ModelSpec {
        id: id.to_string(),
        name: name.to_string(),
        encoder,
        checkpoint: None,
        embedding_source,
        head,
        head_params: HeadParams::default(),
        trainable_encoder,
        custom: false,
    }
}

/// The eight built-in configurations, M1 through M8.
pub fn registry() -> Vec<ModelSpec> {
    use EmbeddingSource::SelfEncoded;
    use EncoderSlot::*;
    vec![
        entry("M1", "MuRIL abusive", MurilAbusive, SelfEncoded, Head::Native, true),
        entry("M2", "MuRIL + TabNet", Muril, SelfEncoded, Head::Tabnet, false),
        entry("M3", "MuRIL", Muril, SelfEncoded, Head::Native, true),
        entry("M4", "IndicBERT", IndicBert, SelfEncoded, Head::Native, true),
        entry(
            "M5",
            "IndicBERT + LSTM-CNN",
            IndicBert,
            SelfEncoded,
            Head::LstmCnnFc,
            true,
        ),
        entry(
            "M6",
            "XLM-Roberta + Logistic Regression",
            XlmRoberta,
            SelfEncoded,
            Head::LogisticRegression,
            false,
        ),
        entry("M7", "XLM-Roberta", XlmRoberta, SelfEncoded, Head::Native, true),
        entry(
            "M8",
            "FastText + LSTM",
            StaticVectors,
            EmbeddingSource::StaticVectors,
            Head::LstmFc,
            false,
        ),
    ]
}

pub fn lookup(id: &str) -> Option<ModelSpec> {
    registry().into_iter().find(|s| s.id == id)
}

/// Registry specs for `ids`, in the given order, with checkpoints and head
/// parameters applied. Unknown ids are a validation error.
pub fn resolve(
    ids: &[String],
    checkpoints: &BTreeMap<EncoderSlot, String>,
    head_params: HeadParams,
) -> Result<Vec<ModelSpec>> {
    ids.iter()
        .map(|id| {
            let mut spec = lookup(id).ok_or_else(|| Error::validation(format!("unknown model id `{id}`")))?;
            spec.checkpoint = checkpoints.get(&spec.encoder).cloned();
            spec.head_params = head_params;
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_rows() {
        let r = registry();
        assert_eq!(r.len(), 8);
        let ids: Vec<_> = r.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8"]);
        assert!(r.iter().all(|s| !s.custom && s.validate().is_ok()));
    }

    #[test]
    fn rows_match_table() {
        let r = registry();
        assert_eq!(r[6].head, Head::Native);
        assert_eq!(r[6].encoder, EncoderSlot::XlmRoberta);
        assert_eq!(r[7].embedding_source, EmbeddingSource::StaticVectors);
        assert_eq!(r[7].head, Head::LstmFc);
        assert_eq!(r[0].encoder, EncoderSlot::MurilAbusive);
        assert_eq!(r[1].head, Head::Tabnet);
        assert_eq!(r[4].head, Head::LstmCnnFc);
        assert_eq!(r[5].head, Head::LogisticRegression);
        assert!(!r[5].trainable_encoder);
        let static_rows: Vec<_> = r
            .iter()
            .filter(|s| s.embedding_source == EmbeddingSource::StaticVectors)
            .collect();
        assert_eq!(static_rows.len(), 1);
    }

    #[test]
    fn custom_specs_are_flagged_and_validated() {
        let s = ModelSpec::custom(
            "X1",
            EncoderSlot::Muril,
            EmbeddingSource::SelfEncoded,
            Head::LstmFc,
            true,
        )
        .unwrap();
        assert!(s.custom);
        assert!(ModelSpec::custom(
            "X2",
            EncoderSlot::StaticVectors,
            EmbeddingSource::StaticVectors,
            Head::Native,
            false
        )
        .is_err());
    }

    #[test]
    fn head_layer_defaults() {
        let layers = Head::LstmCnnFc.layers(&HeadParams::default());
        assert_eq!(layers[0], Layer::Recurrent { hidden: 256 });
        assert_eq!(
            layers[1],
            Layer::Conv1d {
                kernel: 3,
                channels: 256
            }
        );
        assert_eq!(layers[2], Layer::Dropout { p: 0.1 });
        assert_eq!(
            Head::LogisticRegression.layers(&HeadParams::default()),
            vec![Layer::Linear { outputs: 1 }]
        );
    }

    #[test]
    fn resolve_applies_checkpoints() {
        let cps = BTreeMap::from([(EncoderSlot::XlmRoberta, "xlmr-base".to_string())]);
        let specs = resolve(&["M7".into(), "M6".into(), "M1".into()], &cps, HeadParams::default()).unwrap();
        assert_eq!(specs[0].checkpoint.as_deref(), Some("xlmr-base"));
        assert_eq!(specs[2].checkpoint, None);
        assert!(resolve(&["M9".into()], &cps, HeadParams::default()).is_err());
    }

    #[test]
    fn serde_names() {
        let v = serde_json::to_value(&registry()[7]).unwrap();
        assert_eq!(v["embedding_source"], "static-vectors");
        assert_eq!(v["head"], "lstm_fc");
        assert_eq!(
            serde_json::to_value(&registry()[0]).unwrap()["embedding_source"],
            "self"
        );
    }
}
