//! Three-stage hard-label cascade.
//!
//! The primary model's positive verdict is final. Samples it calls
//! negative go to the secondary model, whose positives are also final.
//! Whatever both call negative is decided by the fallback model. The rule
//! is therefore extensionally `p OR s OR f`; the implementation keeps the
//! staged form so every output records which stage decided it.

use serde::{Deserialize, Serialize};

use crate::classifiers::{predict, TrainedModel};
use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::predictions::{Branch, Prediction, PredictionSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSpec {
    pub primary: String,
    pub secondary: String,
    pub fallback: String,
}

impl Default for CascadeSpec {
    fn default() -> Self {
        CascadeSpec {
            primary: "M7".into(),
            secondary: "M3".into(),
            fallback: "M1".into(),
        }
    }
}

impl CascadeSpec {
    pub fn new(primary: impl Into<String>, secondary: impl Into<String>, fallback: impl Into<String>) -> Result<Self> {
        let spec = CascadeSpec {
            primary: primary.into(),
            secondary: secondary.into(),
            fallback: fallback.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.primary == self.secondary || self.primary == self.fallback || self.secondary == self.fallback {
            return Err(Error::validation(format!(
                "cascade members must be distinct, got ({}, {}, {})",
                self.primary, self.secondary, self.fallback
            )));
        }
        Ok(())
    }

    pub fn ids(&self) -> [&str; 3] {
        [&self.primary, &self.secondary, &self.fallback]
    }

    /// `ensemble(primary,secondary,fallback)`
    pub fn output_id(&self) -> String {
        format!("ensemble({},{},{})", self.primary, self.secondary, self.fallback)
    }
}

/// The cascade decision together with the stage that made it.
pub fn cascade_branch(primary: Label, secondary: Label, fallback: Label) -> (Label, Branch) {
    if primary == Label::Hate {
        (Label::Hate, Branch::Primary)
    } else if secondary == Label::Hate {
        (Label::Hate, Branch::Secondary)
    } else {
        (fallback, Branch::Fallback)
    }
}

pub fn cascade_predict(primary: Label, secondary: Label, fallback: Label) -> Label {
    cascade_branch(primary, secondary, fallback).0
}

/// Applies the cascade per sample id. All three sets must cover the same
/// ids; the output carries branch provenance.
pub fn ensemble_run(
    spec: &CascadeSpec,
    primary: &PredictionSet,
    secondary: &PredictionSet,
    fallback: &PredictionSet,
) -> Result<PredictionSet> {
    spec.validate()?;
    primary.check_same_ids(secondary.ids())?;
    primary.check_same_ids(fallback.ids())?;
    let mut out = PredictionSet::new(spec.output_id());
    for (id, p) in primary.iter() {
        let s = secondary.label(id).expect("id sets checked");
        let f = fallback.label(id).expect("id sets checked");
        let (label, branch) = cascade_branch(p.label, s, f);
        out.insert(
            id,
            Prediction {
                label,
                score: None,
                branch: Some(branch),
            },
        )?;
    }
    Ok(out)
}

/// Picks the three member sets out of `sets` by model id.
pub fn ensemble_from(spec: &CascadeSpec, sets: &[PredictionSet]) -> Result<PredictionSet> {
    let find = |id: &str| {
        sets.iter()
            .find(|s| s.model_id() == id)
            .ok_or_else(|| Error::validation(format!("no predictions for cascade member `{id}`")))
    };
    ensemble_run(
        spec,
        find(&spec.primary)?,
        find(&spec.secondary)?,
        find(&spec.fallback)?,
    )
}

/// Runs the three members on `corpus` and combines them.
pub fn predict_cascade(spec: &CascadeSpec, members: [&TrainedModel; 3], corpus: &Corpus) -> Result<PredictionSet> {
    for (model, id) in members.iter().zip(spec.ids()) {
        if model.spec.id != id {
            return Err(Error::validation(format!(
                "cascade expects `{id}` but got model `{}`",
                model.spec.id
            )));
        }
    }
    let p = predict(members[0], corpus)?;
    let s = predict(members[1], corpus)?;
    let f = predict(members[2], corpus)?;
    ensemble_run(spec, &p, &s, &f)
}
