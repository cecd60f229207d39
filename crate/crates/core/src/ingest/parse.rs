use std::io::Read;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{AppEvent, Diagnostic, EmaResponse, ScreenInterval};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.jsonl` /
    /// `.json` is CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?} (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutcome<T> {
    pub records: Vec<T>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T> ParseOutcome<T> {
    /// Number of data rows seen (accepted plus rejected).
    pub fn rows(&self) -> usize {
        self.records.len() + self.diagnostics.len()
    }
}

/// A row type that can be built from its named columns in order.
trait Row: Sized {
    const COLUMNS: &'static [&'static str];

    fn from_fields(fields: &[String]) -> Result<Self, String>;
}

fn non_empty(field: &str, name: &str) -> Result<String, String> {
    let v = field.trim();
    if v.is_empty() {
        Err(format!("empty {name}"))
    } else {
        Ok(v.to_owned())
    }
}

fn timestamp(field: &str, name: &str) -> Result<Timestamp, String> {
    Timestamp::parse(field).ok_or_else(|| format!("bad {name} {:?}", field.trim()))
}

impl Row for AppEvent {
    const COLUMNS: &'static [&'static str] = &["user_id", "app_id", "start_ts", "end_ts"];

    fn from_fields(f: &[String]) -> Result<Self, String> {
        let user_id = non_empty(&f[0], "user_id")?;
        let app_id = non_empty(&f[1], "app_id")?.to_ascii_lowercase();
        let start = timestamp(&f[2], "start_ts")?;
        let end = timestamp(&f[3], "end_ts")?;
        if end < start {
            return Err(format!("end_ts {end} before start_ts {start}"));
        }
        Ok(AppEvent {
            user_id,
            app_id,
            start,
            end,
        })
    }
}

impl Row for ScreenInterval {
    const COLUMNS: &'static [&'static str] = &["user_id", "start_ts", "end_ts"];

    fn from_fields(f: &[String]) -> Result<Self, String> {
        let user_id = non_empty(&f[0], "user_id")?;
        let start = timestamp(&f[1], "start_ts")?;
        let end = timestamp(&f[2], "end_ts")?;
        if end < start {
            return Err(format!("end_ts {end} before start_ts {start}"));
        }
        Ok(ScreenInterval {
            user_id,
            start,
            end,
        })
    }
}

impl Row for EmaResponse {
    const COLUMNS: &'static [&'static str] = &["user_id", "ts", "level"];

    fn from_fields(f: &[String]) -> Result<Self, String> {
        let user_id = non_empty(&f[0], "user_id")?;
        let at = timestamp(&f[1], "ts")?;
        let raw = f[2].trim();
        let level: i64 = raw
            .parse()
            .map_err(|_| format!("bad level {raw:?}"))?;
        if !(1..=5).contains(&level) {
            return Err(format!("level {level} outside 1..=5"));
        }
        Ok(EmaResponse {
            user_id,
            at,
            level: level as u8,
        })
    }
}

fn read_all<R: Read>(mut source: R) -> Result<String> {
    let mut buf = String::new();
    source
        .read_to_string(&mut buf)
        .map_err(|e| Error::io("reading input stream", e))?;
    Ok(buf)
}

fn parse_csv<T: Row>(text: &str) -> Result<ParseOutcome<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Schema("missing header row".into()));
    }
    let mut index = Vec::with_capacity(T::COLUMNS.len());
    for col in T::COLUMNS {
        match headers.iter().position(|h| h == *col) {
            Some(i) => index.push(i),
            None => return Err(Error::Schema(format!("missing required column {col:?}"))),
        }
    }

    let mut out = ParseOutcome {
        records: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(line);
                if record.len() != headers.len() {
                    out.diagnostics.push(Diagnostic {
                        line,
                        reason: format!(
                            "expected {} fields, found {}",
                            headers.len(),
                            record.len()
                        ),
                    });
                    continue;
                }
                let fields: Vec<String> = index.iter().map(|&i| record[i].to_owned()).collect();
                match T::from_fields(&fields) {
                    Ok(r) => out.records.push(r),
                    Err(reason) => out.diagnostics.push(Diagnostic { line, reason }),
                }
            }
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(e.into());
                }
                let line = e.position().map(|p| p.line()).unwrap_or(line);
                out.diagnostics.push(Diagnostic {
                    line,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn parse_jsonl<T: Row>(text: &str) -> Result<ParseOutcome<T>> {
    let mut out = ParseOutcome {
        records: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str::<serde_json::Value>(raw)
            .map_err(|e| format!("invalid json: {e}"))
            .and_then(|value| {
                let obj = value
                    .as_object()
                    .ok_or_else(|| "expected a json object".to_owned())?;
                let fields = T::COLUMNS
                    .iter()
                    .map(|col| match obj.get(*col) {
                        Some(serde_json::Value::String(s)) => Ok(s.clone()),
                        Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
                        Some(other) => Err(format!("field {col:?} has unsupported value {other}")),
                        None => Err(format!("missing field {col:?}")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                T::from_fields(&fields)
            });
        match row {
            Ok(r) => out.records.push(r),
            Err(reason) => out.diagnostics.push(Diagnostic { line, reason }),
        }
    }
    Ok(out)
}

fn parse_rows<T: Row, R: Read>(source: R, format: Format) -> Result<ParseOutcome<T>> {
    let text = read_all(source)?;
    match format {
        Format::Csv => parse_csv(&text),
        Format::Jsonl => parse_jsonl(&text),
    }
}

/// Reads app events (`user_id,app_id,start_ts,end_ts`). App ids are
/// lowercased.
pub fn parse_app_events<R: Read>(source: R, format: Format) -> Result<ParseOutcome<AppEvent>> {
    parse_rows(source, format)
}

/// Reads screen-on intervals (`user_id,start_ts,end_ts`).
pub fn parse_screen_intervals<R: Read>(
    source: R,
    format: Format,
) -> Result<ParseOutcome<ScreenInterval>> {
    parse_rows(source, format)
}

/// Reads stress responses (`user_id,ts,level`). Levels outside 1..=5,
/// including the 0 "no data" marker, are rejected row by row.
pub fn parse_ema<R: Read>(source: R, format: Format) -> Result<ParseOutcome<EmaResponse>> {
    parse_rows(source, format)
}
