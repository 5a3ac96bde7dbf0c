//! Per-sample binary predictions and the submission file format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Scores strictly above this map to the positive class.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Which cascade stage decided an ensemble prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Primary,
    Secondary,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub score: Option<f64>,
    pub branch: Option<Branch>,
}

impl Prediction {
    pub fn hard(label: Label) -> Self {
        Prediction {
            label,
            score: None,
            branch: None,
        }
    }

    pub fn scored(score: f64) -> Self {
        Prediction {
            label: Label::from_bool(score > DECISION_THRESHOLD),
            score: Some(score),
            branch: None,
        }
    }
}

/// Predictions of one model (or ensemble), keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    model_id: String,
    entries: BTreeMap<u64, Prediction>,
}

impl PredictionSet {
    pub fn new(model_id: impl Into<String>) -> Self {
        PredictionSet {
            model_id: model_id.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Builds a set of hard labels.
    pub fn from_labels(model_id: impl Into<String>, labels: impl IntoIterator<Item = (u64, Label)>) -> Result<Self> {
        let mut set = PredictionSet::new(model_id);
        for (id, l) in labels {
            set.insert(id, Prediction::hard(l))?;
        }
        Ok(set)
    }

    /// Adds one prediction. Rejects an id already present, and a score that
    /// is out of `[0, 1]` or disagrees with the decision rule.
    pub fn insert(&mut self, id: u64, p: Prediction) -> Result<()> {
        if let Some(s) = p.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::validation(format!("sample {id}: score {s} outside [0, 1]")));
            }
            if Label::from_bool(s > DECISION_THRESHOLD) != p.label {
                return Err(Error::validation(format!(
                    "sample {id}: label {} disagrees with score {s}",
                    p.label
                )));
            }
        }
        if self.entries.insert(id, p).is_some() {
            return Err(Error::validation(format!(
                "prediction set `{}`: id {id} already present",
                self.model_id
            )));
        }
        Ok(())
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn set_model_id(&mut self, id: impl Into<String>) {
        self.model_id = id.into();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Prediction> {
        self.entries.get(&id)
    }

    pub fn label(&self, id: u64) -> Option<Label> {
        self.entries.get(&id).map(|p| p.label)
    }

    pub fn ids(&self) -> std::collections::btree_map::Keys<'_, u64, Prediction> {
        self.entries.keys()
    }

    /// Entries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &Prediction)> + '_ {
        self.entries.iter().map(|(&id, p)| (id, p))
    }

    pub fn has_scores(&self) -> bool {
        !self.entries.is_empty() && self.entries.values().all(|p| p.score.is_some())
    }

    pub fn positives(&self) -> usize {
        self.entries.values().filter(|p| p.label.is_hate()).count()
    }

    /// Errors unless `self` and `other` cover exactly the same ids.
    pub fn check_same_ids<'a>(&'a self, other: impl IntoIterator<Item = &'a u64> + Clone) -> Result<()> {
        let same = self.entries.len() == other.clone().into_iter().count()
            && other.clone().into_iter().all(|id| self.entries.contains_key(id));
        if same {
            Ok(())
        } else {
            Err(Error::id_mismatch(self.entries.keys(), other))
        }
    }
}

/// Writes one `{"index": id, "prediction": 0|1}` object per line in
/// ascending id order, plus `"branch"` for ensemble output. Scores are not
/// persisted.
pub fn save_predictions(set: &PredictionSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_predictions(set, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_predictions<W: Write>(set: &PredictionSet, mut w: W) -> std::io::Result<()> {
    for (id, p) in set.iter() {
        let mut obj = Map::new();
        obj.insert("index".into(), id.into());
        obj.insert("prediction".into(), p.label.as_u8().into());
        if let Some(b) = p.branch {
            obj.insert("branch".into(), serde_json::to_value(b).expect("branch serializes"));
        }
        serde_json::to_writer(&mut w, &obj)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads a prediction file; the model id is the file stem.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    let path = path.as_ref();
    let model_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::validation(format!("{}: cannot derive model id", path.display())))?;
    load_predictions_as(path, model_id)
}

pub fn load_predictions_as(path: impl AsRef<Path>, model_id: &str) -> Result<PredictionSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(BufReader::new(file), model_id)
}

pub fn read_predictions<R: BufRead>(reader: R, model_id: &str) -> Result<PredictionSet> {
    let bad = |row: usize, field: &str, msg: String| Error::MalformedRow {
        row,
        field: field.into(),
        message: msg,
    };
    let mut set = PredictionSet::new(model_id);
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| bad(row, "line", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| bad(row, "json", e.to_string()))?;
        let id = obj
            .get("index")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad(row, "index", "expected non-negative integer".into()))?;
        let raw = obj
            .get("prediction")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad(row, "prediction", "expected 0 or 1".into()))?;
        let label = u8::try_from(raw)
            .map_err(|_| format!("expected 0 or 1, got {raw}"))
            .and_then(Label::try_from)
            .map_err(|m| bad(row, "prediction", m))?;
        let branch = match obj.get("branch") {
            None | Some(Value::Null) => None,
            Some(v) => Some(serde_json::from_value(v.clone()).map_err(|e| bad(row, "branch", e.to_string()))?),
        };
        set.insert(
            id,
            Prediction {
                label,
                score: None,
                branch,
            },
        )
        .map_err(|e| bad(row, "index", e.to_string()))?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let mut set = PredictionSet::from_labels("M7", [(3, Label::Hate), (1, Label::NonHate)]).unwrap();
        set.insert(
            9,
            Prediction {
                label: Label::Hate,
                score: None,
                branch: Some(Branch::Secondary),
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("M7.jsonl");
        save_predictions(&set, &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "{\"index\":1,\"prediction\":0}\n{\"index\":3,\"prediction\":1}\n{\"index\":9,\"prediction\":1,\"branch\":\"secondary\"}\n"
        );
        assert_eq!(load_predictions(&p).unwrap(), set);
    }

    #[test]
    fn rejects_out_of_domain_prediction() {
        let src = "{\"index\":0,\"prediction\":1}\n{\"index\":1,\"prediction\":2}\n";
        match read_predictions(src.as_bytes(), "x") {
            Err(Error::MalformedRow { row: 2, field, .. }) => assert_eq!(field, "prediction"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_repeated_index() {
        let src = "{\"index\":0,\"prediction\":1}\n{\"index\":0,\"prediction\":0}\n";
        assert!(matches!(
            read_predictions(src.as_bytes(), "x"),
            Err(Error::MalformedRow { row: 2, .. })
        ));
    }

    #[test]
    fn score_rule() {
        let mut s = PredictionSet::new("m");
        s.insert(0, Prediction::scored(0.5)).unwrap();
        assert_eq!(s.label(0), Some(Label::NonHate));
        s.insert(1, Prediction::scored(0.5000001)).unwrap();
        assert_eq!(s.label(1), Some(Label::Hate));
        let bad = Prediction {
            label: Label::Hate,
            score: Some(0.2),
            branch: None,
        };
        assert!(s.insert(2, bad).is_err());
        assert!(s.insert(3, Prediction::scored(1.5)).is_err());
        assert!(s.insert(0, Prediction::hard(Label::Hate)).is_err());
    }

    #[test]
    fn same_ids() {
        let a = PredictionSet::from_labels("a", [(1, Label::Hate), (2, Label::Hate)]).unwrap();
        assert!(a.check_same_ids(&[1, 2]).is_ok());
        match a.check_same_ids(&[2, 3]) {
            Err(Error::IdMismatch { only_left, only_right }) => {
                assert_eq!(only_left, vec![1]);
                assert_eq!(only_right, vec![3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
