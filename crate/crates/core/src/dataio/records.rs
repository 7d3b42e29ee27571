//! Line-delimited behavioral records.
//!
//! Each line is one JSON object: `{"id": "...", "label": 0|1, "features": {...}}`
//! where `features` is an ordered map whose values are booleans, strings,
//! lists of strings, numbers, or `null` for a missing observation.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde_json::{Map, Value};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Bool(bool),
    Text(String),
    List(Vec<String>),
    Number(f64),
    Missing,
}

impl FieldValue {
    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            FieldValue::Bool(_) => Some(ValueKind::Bool),
            FieldValue::Text(_) => Some(ValueKind::Text),
            FieldValue::List(_) => Some(ValueKind::List),
            FieldValue::Number(_) => Some(ValueKind::Number),
            FieldValue::Missing => None,
        }
    }

    fn from_json(value: &Value) -> std::result::Result<Self, String> {
        Ok(match value {
            Value::Null => FieldValue::Missing,
            Value::Bool(b) => FieldValue::Bool(*b),
            Value::String(s) => FieldValue::Text(s.clone()),
            Value::Number(n) => FieldValue::Number(
                n.as_f64().ok_or_else(|| format!("number {n} is not representable"))?,
            ),
            Value::Array(items) => FieldValue::List(
                items
                    .iter()
                    .map(|item| match item {
                        Value::String(s) => Ok(s.clone()),
                        other => Err(format!("list elements must be strings, got {other}")),
                    })
                    .collect::<std::result::Result<_, _>>()?,
            ),
            Value::Object(_) => return Err("nested objects are not valid feature values".into()),
        })
    }

    fn to_json(&self) -> Value {
        match self {
            FieldValue::Bool(b) => Value::Bool(*b),
            FieldValue::Text(s) => Value::String(s.clone()),
            FieldValue::List(items) => {
                Value::Array(items.iter().cloned().map(Value::String).collect())
            }
            FieldValue::Number(x) => serde_json::Number::from_f64(*x)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            FieldValue::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Bool,
    Text,
    List,
    Number,
}

/// One parsed sample. `label` is 0 for benign and 1 for ransomware.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorRecord {
    pub id: String,
    pub label: u8,
    pub fields: Vec<(String, FieldValue)>,
}

impl BehaviorRecord {
    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(name, _)| name.as_str())
    }

    fn to_json(&self) -> Value {
        let mut features = Map::new();
        for (name, value) in &self.fields {
            features.insert(name.clone(), value.to_json());
        }
        let mut obj = Map::new();
        obj.insert("id".into(), Value::String(self.id.clone()));
        obj.insert("label".into(), Value::from(self.label));
        obj.insert("features".into(), Value::Object(features));
        Value::Object(obj)
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<BehaviorRecord> {
    let parse_err = |message: String| Error::Parse { line: line_no, message };
    let value: Value = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| parse_err("record must be a JSON object".into()))?;

    let id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(parse_err("`id` must be a string".into())),
        None => return Err(Error::Schema(format!("line {line_no}: missing `id`"))),
    };
    let label = match obj.get("label") {
        None | Some(Value::Null) => {
            return Err(Error::Schema(format!("line {line_no}: missing `label`")))
        }
        Some(v) => match v.as_u64() {
            Some(0) => 0,
            Some(1) => 1,
            _ => {
                return Err(Error::Schema(format!(
                    "line {line_no}: label must be 0 or 1, got {v}"
                )))
            }
        },
    };
    let features = match obj.get("features") {
        Some(Value::Object(map)) => map,
        Some(_) => return Err(parse_err("`features` must be an object".into())),
        None => return Err(Error::Schema(format!("line {line_no}: missing `features`"))),
    };
    let fields = features
        .iter()
        .map(|(name, v)| {
            FieldValue::from_json(v)
                .map(|fv| (name.clone(), fv))
                .map_err(|m| parse_err(format!("field `{name}`: {m}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BehaviorRecord { id, label, fields })
}

/// Parses line-delimited records. Blank lines are skipped; every record must
/// carry the same ordered field list as the first one.
pub fn parse_records<R: BufRead>(reader: R) -> Result<Vec<BehaviorRecord>> {
    let mut records: Vec<BehaviorRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, line_no)?;
        if let Some(first) = records.first() {
            if !first.field_names().eq(record.field_names()) {
                return Err(Error::Schema(format!(
                    "line {line_no}: field list differs from the first record"
                )));
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_records<W: Write>(mut writer: W, records: &[BehaviorRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, &record.to_json())
            .map_err(|e| Error::Format(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn duplicate_key(record: &BehaviorRecord) -> String {
    // Field values only; exact f64 bits so that 0.1 and 0.1000000001 stay distinct.
    let mut key = format!("{}|", record.label);
    for (_, value) in &record.fields {
        match value {
            FieldValue::Number(x) => key.push_str(&format!("n{:016x}", x.to_bits())),
            other => key.push_str(&other.to_json().to_string()),
        }
        key.push('\u{1f}');
    }
    key
}

/// Drops later exact duplicates (same label and field values, ids ignored),
/// keeping the first occurrence and the original order.
pub fn deduplicate(records: Vec<BehaviorRecord>) -> Vec<BehaviorRecord> {
    let mut seen = HashSet::with_capacity(records.len());
    records
        .into_iter()
        .filter(|r| seen.insert(duplicate_key(r)))
        .collect()
}
