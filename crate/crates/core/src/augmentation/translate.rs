use std::collections::HashMap;

use crate::corpus::Lang;
use crate::error::{Error, Result};
use crate::util::{fnv1a_str, splitmix64};

/// A machine translation backend. Implementations must be deterministic
/// for a given instance (fixed beam search, no sampling).
pub trait Translator: Send + Sync {
    fn name(&self) -> &str;

    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String>;

    fn reentrant(&self) -> bool {
        false
    }
}

impl<T: Translator + ?Sized> Translator for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String> {
        (**self).translate(text, source, target)
    }
    fn reentrant(&self) -> bool {
        (**self).reentrant()
    }
}

/// Translates `text` from `source` into `pivot` and back.
pub fn backtranslate(translator: &dyn Translator, text: &str, source: Lang, pivot: &str) -> Result<String> {
    if source.code() == pivot {
        return Err(Error::validation(format!(
            "source language `{source}` equals the pivot language"
        )));
    }
    let forward = translator.translate(text, source.code(), pivot)?;
    if forward.trim().is_empty() {
        return Err(Error::AugmentationFailure(format!(
            "`{}` returned empty {source}->{pivot} translation",
            translator.name()
        )));
    }
    let back = translator.translate(&forward, pivot, source.code())?;
    if back.trim().is_empty() {
        return Err(Error::AugmentationFailure(format!(
            "`{}` returned empty {pivot}->{source} translation",
            translator.name()
        )));
    }
    Ok(back)
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate(&self, text: &str, _source: &str, _target: &str) -> Result<String> {
        Ok(text.to_string())
    }

    fn reentrant(&self) -> bool {
        true
    }
}

/// Applies a fixed text-to-text table on every leg; unmapped text passes
/// through unchanged.
#[derive(Debug, Clone, Default)]
pub struct TableTranslator {
    table: HashMap<String, String>,
}

impl TableTranslator {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        TableTranslator {
            table: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

impl Translator for TableTranslator {
    fn name(&self) -> &str {
        "table"
    }

    fn translate(&self, text: &str, _source: &str, _target: &str) -> Result<String> {
        Ok(self.table.get(text).cloned().unwrap_or_else(|| text.to_string()))
    }

    fn reentrant(&self) -> bool {
        true
    }
}

/// Paraphrase stand-in: passes text through on the way to the pivot and
/// applies one or two hash-seeded token edits (drop, adjacent swap or
/// suffix trim) on the way back. Gives a realistic spread of similarity
/// scores without a translation model.
#[derive(Debug, Clone)]
pub struct PerturbTranslator {
    seed: u64,
    pivot: String,
}

impl PerturbTranslator {
    pub fn new(seed: u64, pivot: impl Into<String>) -> Self {
        PerturbTranslator {
            seed,
            pivot: pivot.into(),
        }
    }
}

impl Translator for PerturbTranslator {
    fn name(&self) -> &str {
        "perturb"
    }

    fn translate(&self, text: &str, _source: &str, target: &str) -> Result<String> {
        if target == self.pivot {
            return Ok(text.to_string());
        }
        let mut tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let mut h = fnv1a_str(self.seed, text);
        let edits = 1 + (splitmix64(h) % 2) as usize;
        for _ in 0..edits {
            h = splitmix64(h);
            let n = tokens.len();
            let pos = (h >> 8) as usize % n.max(1);
            match h % 3 {
                0 if n > 1 => {
                    tokens.remove(pos);
                }
                1 if n > 1 => {
                    let j = if pos + 1 < n { pos + 1 } else { pos - 1 };
                    tokens.swap(pos, j);
                }
                _ => {
                    let t = &mut tokens[pos];
                    if t.chars().count() > 1 {
                        t.pop();
                    }
                }
            }
        }
        Ok(tokens.join(" "))
    }

    fn reentrant(&self) -> bool {
        true
    }
}
