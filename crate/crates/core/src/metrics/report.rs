use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::MetricRow;
use crate::classifiers::lookup;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    Recall,
    Precision,
    F1,
    Accuracy,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::Recall, Column::Precision, Column::F1, Column::Accuracy];

    pub fn header(self) -> &'static str {
        match self {
            Column::Recall => "Recall",
            Column::Precision => "Precision",
            Column::F1 => "F1 Score",
            Column::Accuracy => "Accuracy",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Column::Recall => "recall",
            Column::Precision => "precision",
            Column::F1 => "f1",
            Column::Accuracy => "accuracy",
        }
    }
}

/// Rows ordered registry ids first (by number), then ensembles, then the rest.
fn row_order(id: &str) -> (u8, u64, String) {
    if let Some(n) = id.strip_prefix('M').and_then(|n| n.parse::<u64>().ok()) {
        (0, n, String::new())
    } else if is_ensemble(id) {
        (1, 0, id.to_string())
    } else {
        (2, 0, id.to_string())
    }
}

fn is_ensemble(id: &str) -> bool {
    id.starts_with("ensemble")
}

fn display_name(id: &str) -> String {
    if let Some(spec) = lookup(id) {
        return spec.name;
    }
    if let Some(members) = id.strip_prefix("ensemble(").and_then(|r| r.strip_suffix(')')) {
        return format!("Ensemble ({})", members.split(',').collect::<Vec<_>>().join(", "));
    }
    if is_ensemble(id) {
        return "Ensemble".into();
    }
    id.to_string()
}

/// Values are compared at the 4 decimals they are printed with.
fn rounded(v: f64) -> i64 {
    (v * 1e4).round() as i64
}

/// Rendered metric table with best/worst flags per column.
#[derive(Debug, Clone)]
pub struct Report {
    rows: Vec<(String, MetricRow)>,
    best: BTreeMap<Column, Vec<usize>>,
    worst: BTreeMap<Column, Vec<usize>>,
}

pub fn render_report<I>(rows: I) -> Report
where
    I: IntoIterator<Item = (String, MetricRow)>,
{
    let mut rows: Vec<(String, MetricRow)> = rows.into_iter().collect();
    rows.sort_by_key(|(id, _)| row_order(id));
    let mut best = BTreeMap::new();
    let mut worst = BTreeMap::new();
    for c in Column::ALL {
        let vals: Vec<i64> = rows.iter().map(|(_, r)| rounded(r.value(c))).collect();
        if let (Some(&hi), Some(&lo)) = (vals.iter().max(), vals.iter().min()) {
            best.insert(c, (0..vals.len()).filter(|&i| vals[i] == hi).collect());
            worst.insert(c, (0..vals.len()).filter(|&i| vals[i] == lo).collect());
        }
    }
    Report { rows, best, worst }
}

/// Parses the report JSON shape back into rows.
pub fn parse_rows(value: &Value) -> Result<Vec<(String, MetricRow)>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::validation("report JSON must be an object keyed by model id"))?;
    obj.iter()
        .map(|(id, v)| {
            let row: MetricRow =
                serde_json::from_value(v.clone()).map_err(|e| Error::validation(format!("row `{id}`: {e}")))?;
            for c in Column::ALL {
                let x = row.value(c);
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::validation(format!(
                        "row `{id}`: {} = {x} outside [0, 1]",
                        c.key()
                    )));
                }
            }
            Ok((id.clone(), row))
        })
        .collect()
}

impl Report {
    pub fn rows(&self) -> &[(String, MetricRow)] {
        &self.rows
    }

    pub fn best(&self, c: Column) -> Vec<&str> {
        self.ids(&self.best, c)
    }

    pub fn worst(&self, c: Column) -> Vec<&str> {
        self.ids(&self.worst, c)
    }

    fn ids(&self, m: &BTreeMap<Column, Vec<usize>>, c: Column) -> Vec<&str> {
        m.get(&c)
            .map(|v| v.iter().map(|&i| self.rows[i].0.as_str()).collect())
            .unwrap_or_default()
    }

    fn marker(&self, i: usize, c: Column) -> &'static str {
        let b = self.best.get(&c).is_some_and(|v| v.contains(&i));
        let w = self.worst.get(&c).is_some_and(|v| v.contains(&i));
        match (b, w) {
            (true, true) => "+-",
            (true, false) => "+",
            (false, true) => "-",
            _ => "",
        }
    }

    /// Fixed-width table: one row per model, four metric columns at 4
    /// decimals, `+` marking the best and `-` the worst value per column.
    pub fn text(&self) -> String {
        let names: Vec<String> = self.rows.iter().map(|(id, _)| display_name(id)).collect();
        let ids: Vec<&str> = self
            .rows
            .iter()
            .map(|(id, _)| if is_ensemble(id) { "" } else { id.as_str() })
            .collect();
        let id_w = ids.iter().map(|s| s.len()).max().unwrap_or(0).max(2);
        let name_w = names
            .iter()
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(0)
            .max("Model".len());
        let col_w = 11;

        let mut out = String::new();
        let _ = write!(out, "{:<id_w$}  {:<name_w$}", "", "Model");
        for c in Column::ALL {
            let _ = write!(out, "  {:<col_w$}", c.header());
        }
        let line_w = out.trim_end().chars().count();
        out.truncate(out.trim_end().len());
        out.push('\n');
        let rule = "-".repeat(line_w);
        out.push_str(&rule);
        out.push('\n');
        for (i, (id, row)) in self.rows.iter().enumerate() {
            if is_ensemble(id) && i > 0 && !is_ensemble(&self.rows[i - 1].0) {
                out.push_str(&rule);
                out.push('\n');
            }
            let pad = name_w - names[i].chars().count();
            let mut line = format!("{:<id_w$}  {}{}", ids[i], names[i], " ".repeat(pad));
            for c in Column::ALL {
                let cell = format!("{:.4}{}", row.value(c), self.marker(i, c));
                let _ = write!(line, "  {cell:<col_w$}");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push_str(&rule);
        out.push('\n');
        let mut averagings: Vec<&str> = self.rows.iter().map(|(_, r)| r.averaging.as_str()).collect();
        averagings.dedup();
        let _ = writeln!(
            out,
            "averaging: {}; + best in column, - worst in column",
            averagings.join(", ")
        );
        for (id, row) in &self.rows {
            if !row.degenerate_flags.is_empty() {
                let flags: Vec<String> = row
                    .degenerate_flags
                    .iter()
                    .map(|f| {
                        serde_json::to_value(f)
                            .expect("flag serializes")
                            .as_str()
                            .unwrap_or_default()
                            .to_string()
                    })
                    .collect();
                let _ = writeln!(out, "note: {id}: {} (reported as 0.0)", flags.join(", "));
            }
        }
        out
    }

    /// `{model_id: {recall, precision, f1, accuracy, averaging, degenerate_flags}}`
    /// in row order.
    pub fn json(&self) -> Value {
        let mut obj = Map::new();
        for (id, row) in &self.rows {
            obj.insert(id.clone(), serde_json::to_value(row).expect("row serializes"));
        }
        Value::Object(obj)
    }

    /// Bar chart of one metric across models as a standalone SVG document.
    pub fn svg(&self, c: Column) -> String {
        let n = self.rows.len().max(1);
        let (left, right, top, bottom) = (48.0, 16.0, 36.0, 40.0);
        let bar_slot = 56.0;
        let width = left + right + bar_slot * n as f64;
        let height = 320.0;
        let plot_h = height - top - bottom;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, c.header());
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let y = top + plot_h * (1.0 - v);
            let _ = writeln!(
                s,
                r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
                width - right,
                left - 4.0,
                y + 4.0
            );
        }
        for (i, (id, row)) in self.rows.iter().enumerate() {
            let v = row.value(c).clamp(0.0, 1.0);
            let x = left + bar_slot * i as f64 + 8.0;
            let h = plot_h * v;
            let y = top + plot_h - h;
            let fill = match self.marker(i, c) {
                "+" | "+-" => "#3a9d5d",
                "-" => "#c0392b",
                _ => "#8899aa",
            };
            let label = if is_ensemble(id) { "Ens." } else { id.as_str() };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="40" height="{h:.1}" fill="{fill}"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.4}</text><text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x + 20.0,
                y - 4.0,
                x + 20.0,
                top + plot_h + 16.0,
                xml_escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
