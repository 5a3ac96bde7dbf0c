//! Pins the outputs of the deterministic stand-in backends so that gate
//! decisions and augmented corpora stay stable across releases.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden`.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Value};

use hatecascade::augmentation::{backtranslate, PerturbTranslator};
use hatecascade::corpus::Lang;
use hatecascade::embeddings::{cosine_similarity, embed, HashEmbedder, Pooling};

const TEXTS: [(&str, Lang); 4] = [
    ("यह अच्छा दिन है", Lang::Hi),
    ("तुम बेकार गंदे हो", Lang::Hi),
    ("आज मौसम राम्रो छ", Lang::Ne),
    ("फोहोरी मान्छे भाग", Lang::Ne),
];

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden.json")
}

fn current() -> Value {
    let mean = HashEmbedder::new(16, Pooling::Mean, 7).unwrap();
    let first = HashEmbedder::new(16, Pooling::FirstToken, 7).unwrap();
    let tr = PerturbTranslator::new(7, "en");
    let rows: Vec<Value> = TEXTS
        .iter()
        .map(|&(text, lang)| {
            let bt = backtranslate(&tr, text, lang, "en").unwrap();
            let a = embed(&mean, text).unwrap();
            let b = embed(&mean, &bt).unwrap();
            json!({
                "text": text,
                "mean": a.values(),
                "first_token": embed(&first, text).unwrap().values(),
                "backtranslated": bt,
                "similarity": cosine_similarity(&a, &b).unwrap(),
            })
        })
        .collect();
    Value::Array(rows)
}

fn close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => (x.as_f64().unwrap() - y.as_f64().unwrap()).abs() <= 1e-12,
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| close(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| close(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn stand_in_backends_match_golden() {
    let got = current();
    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let want: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(
        close(&got, &want),
        "golden mismatch:\n{}",
        serde_json::to_string_pretty(&got).unwrap()
    );
}

#[test]
fn mean_pooling_ignores_word_order() {
    let e = HashEmbedder::new(16, Pooling::Mean, 7).unwrap();
    let a = embed(&e, "यह अच्छा दिन है").unwrap();
    let b = embed(&e, "अच्छा यह दिन है").unwrap();
    assert_eq!(cosine_similarity(&a, &b).unwrap(), 1.0);
    let f = HashEmbedder::new(16, Pooling::FirstToken, 7).unwrap();
    let c = cosine_similarity(
        &embed(&f, "यह अच्छा दिन है").unwrap(),
        &embed(&f, "अच्छा यह दिन है").unwrap(),
    )
    .unwrap();
    assert!(c < 1.0);
}
