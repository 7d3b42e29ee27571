//! Type-directed numeric encoding of behavioral fields.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::records::{BehaviorRecord, FieldValue, ValueKind};
use crate::{Error, Result};

/// How string-valued fields become numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StringRule {
    #[default]
    Length,
    /// Rank in descending frequency order; the most frequent value is rank 0.
    FrequencyRank,
    /// Raw occurrence count in the fitting records.
    FrequencyCount,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodingOptions {
    #[serde(default)]
    pub default_string_rule: StringRule,
    #[serde(default)]
    pub string_rules: BTreeMap<String, StringRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldRule {
    Boolean,
    StringLength,
    StringRank(HashMap<String, usize>),
    StringCount(HashMap<String, usize>),
    ListCount,
    Number,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingPlan {
    pub fields: Vec<(String, FieldRule)>,
}

#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub values: Array2<f64>,
    pub labels: Vec<usize>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }
}

fn frequency_table(records: &[BehaviorRecord], col: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in records {
        if let FieldValue::Text(s) = &r.fields[col].1 {
            *counts.entry(s.as_str()).or_default() += 1;
        }
    }
    let mut table: Vec<(String, usize)> =
        counts.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    // Ties broken lexicographically so ranks are deterministic.
    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    table
}

/// Infers one rule per field from the first non-missing value, building any
/// frequency tables from `records` only.
pub fn fit_encoding(records: &[BehaviorRecord], options: &EncodingOptions) -> Result<EncodingPlan> {
    let first = records
        .first()
        .ok_or_else(|| Error::Schema("cannot fit an encoding on zero records".into()))?;

    let mut fields = Vec::with_capacity(first.fields.len());
    for (col, (name, _)) in first.fields.iter().enumerate() {
        let mut kind: Option<ValueKind> = None;
        for r in records {
            let Some((other_name, value)) = r.fields.get(col) else {
                return Err(Error::Schema(format!("record `{}` is missing field `{name}`", r.id)));
            };
            if other_name != name {
                return Err(Error::Schema(format!(
                    "record `{}` has field `{other_name}` where `{name}` was expected",
                    r.id
                )));
            }
            match (kind, value.kind()) {
                (_, None) => {}
                (None, k) => kind = k,
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::Schema(format!(
                        "field `{name}` mixes {a:?} and {b:?} values"
                    )))
                }
                _ => {}
            }
        }

        let rule = match kind {
            Some(ValueKind::Bool) => FieldRule::Boolean,
            Some(ValueKind::List) => FieldRule::ListCount,
            // All-missing columns encode as zeros through the pass-through rule.
            Some(ValueKind::Number) | None => FieldRule::Number,
            Some(ValueKind::Text) => {
                let rule = options
                    .string_rules
                    .get(name)
                    .copied()
                    .unwrap_or(options.default_string_rule);
                match rule {
                    StringRule::Length => FieldRule::StringLength,
                    StringRule::FrequencyRank => FieldRule::StringRank(
                        frequency_table(records, col)
                            .into_iter()
                            .enumerate()
                            .map(|(rank, (value, _))| (value, rank))
                            .collect(),
                    ),
                    StringRule::FrequencyCount => {
                        FieldRule::StringCount(frequency_table(records, col).into_iter().collect())
                    }
                }
            }
        };
        fields.push((name.clone(), rule));
    }
    Ok(EncodingPlan { fields })
}

fn encode_value(
    rule: &FieldRule,
    value: &FieldValue,
    name: &str,
    record_id: &str,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let mismatch = || {
        Error::Schema(format!(
            "record `{record_id}`: field `{name}` value {value:?} does not fit rule {rule:?}"
        ))
    };
    Ok(match (rule, value) {
        (_, FieldValue::Missing) => 0.0,
        (FieldRule::Boolean, FieldValue::Bool(b)) => f64::from(u8::from(*b)),
        (FieldRule::StringLength, FieldValue::Text(s)) => s.chars().count() as f64,
        (FieldRule::StringRank(table), FieldValue::Text(s)) => match table.get(s) {
            Some(rank) => *rank as f64,
            None => {
                warnings.push(format!(
                    "record `{record_id}`: unseen value {s:?} in field `{name}` mapped to rank {}",
                    table.len()
                ));
                table.len() as f64
            }
        },
        (FieldRule::StringCount(table), FieldValue::Text(s)) => match table.get(s) {
            Some(count) => *count as f64,
            None => {
                warnings.push(format!(
                    "record `{record_id}`: unseen value {s:?} in field `{name}` mapped to count 0"
                ));
                0.0
            }
        },
        (FieldRule::ListCount, FieldValue::List(items)) => items.len() as f64,
        (FieldRule::Number, FieldValue::Number(x)) if x.is_finite() => *x,
        (FieldRule::Number, FieldValue::Number(_)) => {
            return Err(Error::Schema(format!(
                "record `{record_id}`: field `{name}` is not finite"
            )))
        }
        _ => return Err(mismatch()),
    })
}

/// Applies `plan` to `records`, returning the unstandardized matrix and any
/// warnings about values absent from the fitted frequency tables.
pub fn encode(records: &[BehaviorRecord], plan: &EncodingPlan) -> Result<(FeatureMatrix, Vec<String>)> {
    let cols = plan.fields.len();
    let mut values = Array2::<f64>::zeros((records.len(), cols));
    let mut warnings = Vec::new();
    for (i, record) in records.iter().enumerate() {
        if record.fields.len() != cols {
            return Err(Error::Schema(format!(
                "record `{}` has {} fields, plan expects {cols}",
                record.id,
                record.fields.len()
            )));
        }
        for (j, ((name, rule), (field_name, value))) in
            plan.fields.iter().zip(&record.fields).enumerate()
        {
            if name != field_name {
                return Err(Error::Schema(format!(
                    "record `{}` has field `{field_name}` where `{name}` was expected",
                    record.id
                )));
            }
            values[[i, j]] = encode_value(rule, value, name, &record.id, &mut warnings)?;
        }
    }
    Ok((
        FeatureMatrix {
            names: plan.fields.iter().map(|(n, _)| n.clone()).collect(),
            values,
            labels: records.iter().map(|r| usize::from(r.label)).collect(),
        },
        warnings,
    ))
}

pub fn write_csv<W: std::io::Write>(writer: W, matrix: &FeatureMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_owned()];
    header.extend(matrix.names.iter().cloned());
    out.write_record(&header)?;
    for (row, label) in matrix.values.rows().into_iter().zip(&matrix.labels) {
        let mut line = vec![label.to_string()];
        line.extend(row.iter().map(|v| v.to_string()));
        out.write_record(&line)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, fields: Vec<(&str, FieldValue)>) -> BehaviorRecord {
        BehaviorRecord {
            id: id.into(),
            label: 0,
            fields: fields.into_iter().map(|(n, v)| (n.to_owned(), v)).collect(),
        }
    }

    fn text(s: &str) -> FieldValue {
        FieldValue::Text(s.into())
    }

    #[test]
    fn rules_follow_value_types() {
        let records = vec![record(
            "a",
            vec![
                ("b", FieldValue::Bool(true)),
                ("s", text("abcd")),
                ("l", FieldValue::List(vec!["a".into(), "b".into(), "c".into()])),
                ("n", FieldValue::Number(2.5)),
            ],
        )];
        let plan = fit_encoding(&records, &EncodingOptions::default()).unwrap();
        let rules: Vec<_> = plan.fields.iter().map(|(_, r)| r.clone()).collect();
        assert_eq!(
            rules,
            vec![FieldRule::Boolean, FieldRule::StringLength, FieldRule::ListCount, FieldRule::Number]
        );
        let (m, warnings) = encode(&records, &plan).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(m.values.row(0).to_vec(), vec![1.0, 4.0, 3.0, 2.5]);
    }

    #[test]
    fn booleans_and_empty_lists() {
        let records = vec![
            record("a", vec![("b", FieldValue::Bool(true)), ("l", FieldValue::List(vec![]))]),
            record("b", vec![("b", FieldValue::Bool(false)), ("l", FieldValue::List(vec!["x".into()]))]),
        ];
        let plan = fit_encoding(&records, &EncodingOptions::default()).unwrap();
        let (m, _) = encode(&records, &plan).unwrap();
        assert_eq!(m.values.column(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(m.values.column(1).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn mixed_types_rejected() {
        let records = vec![
            record("a", vec![("f", FieldValue::Bool(true))]),
            record("b", vec![("f", FieldValue::Missing)]),
            record("c", vec![("f", text("x"))]),
        ];
        assert!(matches!(
            fit_encoding(&records, &EncodingOptions::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn rule_inferred_past_missing_values() {
        let records = vec![
            record("a", vec![("f", FieldValue::Missing)]),
            record("b", vec![("f", FieldValue::Bool(true))]),
        ];
        let plan = fit_encoding(&records, &EncodingOptions::default()).unwrap();
        assert_eq!(plan.fields[0].1, FieldRule::Boolean);
        let (m, _) = encode(&records, &plan).unwrap();
        assert_eq!(m.values.column(0).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn unseen_rank_maps_to_sentinel_with_warning() {
        let options = EncodingOptions {
            default_string_rule: StringRule::FrequencyRank,
            ..Default::default()
        };
        let fit = vec![
            record("a", vec![("c", text("us"))]),
            record("b", vec![("c", text("de"))]),
            record("c", vec![("c", text("us"))]),
        ];
        let plan = fit_encoding(&fit, &options).unwrap();
        let apply = vec![record("d", vec![("c", text("fr"))]), record("e", vec![("c", text("us"))])];
        let (m, warnings) = encode(&apply, &plan).unwrap();
        assert_eq!(m.values.column(0).to_vec(), vec![2.0, 0.0]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn frequency_count_rule() {
        let options = EncodingOptions {
            string_rules: [("c".to_owned(), StringRule::FrequencyCount)].into_iter().collect(),
            ..Default::default()
        };
        let fit = vec![
            record("a", vec![("c", text("us"))]),
            record("b", vec![("c", text("de"))]),
            record("c", vec![("c", text("us"))]),
        ];
        let plan = fit_encoding(&fit, &options).unwrap();
        let (m, _) = encode(&fit, &plan).unwrap();
        assert_eq!(m.values.column(0).to_vec(), vec![2.0, 1.0, 2.0]);
    }
}
