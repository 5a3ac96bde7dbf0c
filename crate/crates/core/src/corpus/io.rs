use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use super::{Corpus, Label, Lang, Origin, Sample, Split};
use crate::error::{Error, Result};

/// On-disk corpus format.
///
/// CSV uses the header `index,tweet,label,lang` (plus `origin` for
/// augmented corpora). JSONL uses keys `id`, `text`, `label`, `lang`,
/// `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::validation(format!("unknown format `{other}`"))),
        }
    }
}

/// Reads a corpus file. All samples come back with `origin = original`
/// unless the file carries an explicit origin column.
pub fn ingest(path: impl AsRef<Path>, format: Format, split: Split) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), format, split).map_err(|e| match e {
        Error::EmptyInput(_) => Error::EmptyInput(path.display().to_string()),
        other => other,
    })
}

pub fn read_corpus<R: Read>(reader: R, format: Format, split: Split) -> Result<Corpus> {
    let samples = match format {
        Format::Csv => read_csv(reader, split)?,
        Format::Jsonl => read_jsonl(reader, split)?,
    };
    if samples.is_empty() {
        return Err(Error::EmptyInput("corpus".into()));
    }
    Corpus::new(split, samples)
}

fn malformed(row: usize, field: &str, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        row,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_label(raw: &str, row: usize, split: Split) -> Result<Option<Label>> {
    if raw.is_empty() {
        if split.is_labeled() {
            return Err(malformed(row, "label", format!("required in `{split}` split")));
        }
        return Ok(None);
    }
    let v: u8 = raw
        .parse()
        .map_err(|_| malformed(row, "label", format!("expected 0 or 1, got `{raw}`")))?;
    Label::try_from(v).map(Some).map_err(|m| malformed(row, "label", m))
}

fn parse_lang(raw: &str, row: usize) -> Result<Option<Lang>> {
    if raw.is_empty() {
        return Ok(None);
    }
    Lang::from_str(raw)
        .map(Some)
        .map_err(|e| malformed(row, "lang", e.to_string()))
}

fn parse_origin(raw: &str, row: usize) -> Result<Origin> {
    if raw.is_empty() {
        return Ok(Origin::Original);
    }
    Origin::from_str(raw).map_err(|e| malformed(row, "origin", e.to_string()))
}

fn read_csv<R: Read>(reader: R, split: Split) -> Result<Vec<Sample>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(Error::EmptyInput("corpus".into())),
        Err(e) => return Err(malformed(1, "header", e.to_string())),
    };
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let index_col = col("index").ok_or_else(|| malformed(1, "index", "missing column"))?;
    let tweet_col = col("tweet").ok_or_else(|| malformed(1, "tweet", "missing column"))?;
    let label_col = col("label");
    let lang_col = col("lang");
    let origin_col = col("origin");
    if split.is_labeled() {
        if label_col.is_none() {
            return Err(malformed(1, "label", format!("column required in `{split}` split")));
        }
        if lang_col.is_none() {
            return Err(malformed(1, "lang", format!("column required in `{split}` split")));
        }
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            malformed(row, "record", e.to_string())
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("");
        let raw_id = field(Some(index_col));
        let id: u64 = raw_id
            .trim()
            .parse()
            .map_err(|_| malformed(row, "index", format!("expected non-negative integer, got `{raw_id}`")))?;
        let text = field(Some(tweet_col));
        if text.trim().is_empty() {
            return Err(malformed(row, "tweet", "empty text"));
        }
        out.push(Sample {
            id,
            text: text.to_string(),
            label: parse_label(field(label_col).trim(), row, split)?,
            lang: parse_lang(field(lang_col).trim(), row)?,
            origin: parse_origin(field(origin_col).trim(), row)?,
        });
    }
    Ok(out)
}

fn read_jsonl<R: Read>(reader: R, split: Split) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| malformed(row, "line", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| malformed(row, "json", e.to_string()))?;
        let id = obj
            .get("id")
            .ok_or_else(|| malformed(row, "id", "missing"))?
            .as_u64()
            .ok_or_else(|| malformed(row, "id", "expected non-negative integer"))?;
        let text = obj
            .get("text")
            .ok_or_else(|| malformed(row, "text", "missing"))?
            .as_str()
            .ok_or_else(|| malformed(row, "text", "expected string"))?;
        if text.trim().is_empty() {
            return Err(malformed(row, "text", "empty text"));
        }
        let label = match obj.get("label") {
            None | Some(Value::Null) => parse_label("", row, split)?,
            Some(v) => {
                let n = v.as_u64().ok_or_else(|| malformed(row, "label", "expected 0 or 1"))?;
                parse_label(&n.to_string(), row, split)?
            }
        };
        let str_field = |key: &str| -> Result<&str> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(""),
                Some(Value::String(s)) => Ok(s.as_str()),
                Some(_) => Err(malformed(row, key, "expected string")),
            }
        };
        out.push(Sample {
            id,
            text: text.to_string(),
            label,
            lang: parse_lang(str_field("lang")?, row)?,
            origin: parse_origin(str_field("origin")?, row)?,
        });
    }
    Ok(out)
}

/// Writes a corpus in ascending id order. The `origin` column/key is only
/// emitted when some sample is not an original.
pub fn export(corpus: &Corpus, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_corpus(corpus, &mut w, format)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W, format: Format) -> Result<()> {
    let with_origin = corpus.iter().any(|s| s.origin != Origin::Original);
    match format {
        Format::Csv => write_csv(corpus, writer, with_origin),
        Format::Jsonl => write_jsonl(corpus, writer, with_origin),
    }
}

fn write_csv<W: Write>(corpus: &Corpus, writer: W, with_origin: bool) -> Result<()> {
    let to_err = |e: csv::Error| Error::validation(format!("csv write: {e}"));
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header = vec!["index", "tweet", "label", "lang"];
    if with_origin {
        header.push("origin");
    }
    w.write_record(&header).map_err(to_err)?;
    for s in corpus {
        let id = s.id.to_string();
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        let lang = s.lang.map(Lang::code).unwrap_or("");
        let mut rec = vec![id.as_str(), s.text.as_str(), label.as_str(), lang];
        if with_origin {
            rec.push(s.origin.as_str());
        }
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::validation(format!("csv write: {e}")))
}

fn write_jsonl<W: Write>(corpus: &Corpus, mut writer: W, with_origin: bool) -> Result<()> {
    let io_err = |e: std::io::Error| Error::validation(format!("jsonl write: {e}"));
    for s in corpus {
        let mut obj = Map::new();
        obj.insert("id".into(), s.id.into());
        obj.insert("text".into(), s.text.clone().into());
        if let Some(l) = s.label {
            obj.insert("label".into(), l.as_u8().into());
        }
        if let Some(l) = s.lang {
            obj.insert("lang".into(), l.code().into());
        }
        if with_origin {
            obj.insert("origin".into(), s.origin.as_str().into());
        }
        serde_json::to_writer(&mut writer, &obj).map_err(|e| Error::validation(e.to_string()))?;
        writer.write_all(b"\n").map_err(io_err)?;
    }
    writer.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str, format: Format, split: Split) -> Result<Corpus> {
        read_corpus(s.as_bytes(), format, split)
    }

    #[test]
    fn four_row_csv() {
        let src = "index,tweet,label,lang\n3,घ,1,hi\n0,क,0,hi\n1,ख,1,ne\n2,ग,0,ne\n";
        let c = read(src, Format::Csv, Split::Train).unwrap();
        assert_eq!(c.ids().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert!(c.iter().all(|s| s.origin == Origin::Original));
        assert_eq!(c.get(1).unwrap().lang, Some(Lang::Ne));
    }

    #[test]
    fn csv_quoting_and_multiline() {
        let src = "index,tweet,label,lang\n0,\"a, \"\"quoted\"\"\nline\",1,hi\n";
        let c = read(src, Format::Csv, Split::Train).unwrap();
        assert_eq!(c.samples()[0].text, "a, \"quoted\"\nline");
    }

    #[test]
    fn duplicate_id_is_named() {
        let src = "index,tweet,label,lang\n7,a,0,hi\n7,b,1,ne\n";
        assert!(matches!(
            read(src, Format::Csv, Split::Train),
            Err(Error::DuplicateId(7))
        ));
    }

    #[test]
    fn malformed_row_names_row_and_field() {
        let src = "index,tweet,label,lang\n0,a,0,hi\n1,b,2,hi\n";
        match read(src, Format::Csv, Split::Train) {
            Err(Error::MalformedRow { row, field, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(field, "label");
            }
            other => panic!("unexpected {other:?}"),
        }
        let src = "{\"id\":0,\"text\":\"a\",\"label\":0}\n{\"id\":\"x\",\"text\":\"b\",\"label\":0}\n";
        match read(src, Format::Jsonl, Split::Train) {
            Err(Error::MalformedRow { row, field, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(field, "id");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(read("", Format::Csv, Split::Test), Err(Error::EmptyInput(_))));
        assert!(matches!(
            read("index,tweet\n", Format::Csv, Split::Test),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            read("\n\n", Format::Jsonl, Split::Test),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn labeled_split_needs_lang_column() {
        let src = "index,tweet,label\n0,a,1\n";
        assert!(read(src, Format::Csv, Split::Train).is_err());
        assert!(read("index,tweet\n0,a\n", Format::Csv, Split::Test).is_ok());
    }

    #[test]
    fn missing_lang_value_is_allowed() {
        let src = "index,tweet,label,lang\n0,a,1,\n";
        let c = read(src, Format::Csv, Split::Train).unwrap();
        assert_eq!(c.samples()[0].lang, None);
    }

    #[test]
    fn csv_and_jsonl_agree() {
        let csv = "index,tweet,label,lang\n0,नमस्ते,0,ne\n1,\"x,y\",1,hi\n";
        let jsonl = "{\"id\":1,\"text\":\"x,y\",\"label\":1,\"lang\":\"hi\"}\n{\"id\":0,\"text\":\"नमस्ते\",\"label\":0,\"lang\":\"ne\"}\n";
        assert_eq!(
            read(csv, Format::Csv, Split::Train).unwrap(),
            read(jsonl, Format::Jsonl, Split::Train).unwrap()
        );
    }

    #[test]
    fn origin_column_written_only_when_needed() {
        let mut c = read("index,tweet,label,lang\n0,a,1,hi\n", Format::Csv, Split::Train).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,tweet,label,lang\n0,a,1,hi\n");

        let mut s = c.samples()[0].clone();
        s.id = 1;
        s.origin = Origin::Duplicated;
        c = c.merge(&Corpus::new(Split::Train, vec![s]).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf, Format::Jsonl).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"id\":0,\"text\":\"a\",\"label\":1,\"lang\":\"hi\",\"origin\":\"original\"}\n\
             {\"id\":1,\"text\":\"a\",\"label\":1,\"lang\":\"hi\",\"origin\":\"duplicated\"}\n"
        );
        assert_eq!(read(&text, Format::Jsonl, Split::Train).unwrap(), c);
    }
}
