use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{Corpus, Label, Lang};

/// Per-(language, label) sample counts. Samples with no language tag or no
/// label land in cells whose key has a `None` component; those cells make up
/// the residual.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    counts: BTreeMap<(Option<Lang>, Option<Label>), usize>,
    total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsCell {
    pub lang: Option<Lang>,
    pub label: Option<Label>,
    pub count: usize,
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let mut counts = BTreeMap::new();
    for s in corpus {
        *counts.entry((s.lang, s.label)).or_insert(0) += 1;
    }
    CorpusStats {
        counts,
        total: corpus.len(),
    }
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn count(&self, lang: Option<Lang>, label: Option<Label>) -> usize {
        self.counts.get(&(lang, label)).copied().unwrap_or(0)
    }

    /// Samples lacking a language tag or a label.
    pub fn residual(&self) -> usize {
        self.counts
            .iter()
            .filter(|((lang, label), _)| lang.is_none() || label.is_none())
            .map(|(_, n)| n)
            .sum()
    }

    /// Non-zero cells in (lang, label) order.
    pub fn cells(&self) -> Vec<StatsCell> {
        self.counts
            .iter()
            .map(|(&(lang, label), &count)| StatsCell { lang, label, count })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "cells": self.cells(), "residual": self.residual(), "total": self.total })
    }
}

fn row_name(lang: Lang, label: Label) -> String {
    let class = match label {
        Label::NonHate => "Non-Hate",
        Label::Hate => "Hate",
    };
    format!("{} {}", lang.display_name(), class)
}

/// Renders one or more stats side by side, one column per entry, with the
/// row layout Hindi/Nepali non-hate, then Hindi/Nepali hate, then residual
/// and total.
pub fn render_stats_table(columns: &[(&str, &CorpusStats)]) -> String {
    let mut rows: Vec<(String, Vec<usize>)> = Vec::new();
    for label in [Label::NonHate, Label::Hate] {
        for lang in Lang::ALL {
            rows.push((
                row_name(lang, label),
                columns.iter().map(|(_, s)| s.count(Some(lang), Some(label))).collect(),
            ));
        }
    }
    if columns.iter().any(|(_, s)| s.residual() > 0) {
        rows.push((
            "Untagged/Unlabeled".into(),
            columns.iter().map(|(_, s)| s.residual()).collect(),
        ));
    }
    let total = columns.iter().map(|(_, s)| s.total()).collect::<Vec<_>>();

    let name_w = rows
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(0)
        .max("Category".len());
    let col_w: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, (h, _))| {
            rows.iter()
                .map(|(_, v)| v[i].to_string().len())
                .chain([h.len(), total[i].to_string().len()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<name_w$}", "Category");
    for ((h, _), w) in columns.iter().zip(&col_w) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    let rule = "-".repeat(name_w + col_w.iter().map(|w| w + 2).sum::<usize>());
    out.push_str(&rule);
    out.push('\n');
    for (name, vals) in rows
        .iter()
        .chain(std::iter::once(&("Total".to_string(), total.clone())))
    {
        if name == "Total" {
            out.push_str(&rule);
            out.push('\n');
        }
        let _ = write!(out, "{name:<name_w$}");
        for (v, w) in vals.iter().zip(&col_w) {
            let _ = write!(out, "  {v:>w$}");
        }
        out.push('\n');
    }
    out
}
