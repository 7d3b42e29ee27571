mod common;

use std::collections::{BTreeMap, HashMap};

use ndarray::{array, Array2, Axis};
use proptest::prelude::*;
use qweight::dataio::{
    deduplicate, encode, fit_encoding, generate_synthetic, parse_records, standardize, write_records, BehaviorRecord,
    Difficulty, EncodingOptions, FieldValue, Standardizer, StringRule, SyntheticConfig,
};
use qweight::nn::{predict, train, ModelConfig, Model};
use qweight::Error;

fn record(id: &str, label: u8, fields: Vec<(&str, FieldValue)>) -> BehaviorRecord {
    BehaviorRecord { id: id.into(), label, fields: fields.into_iter().map(|(n, v)| (n.to_owned(), v)).collect() }
}

#[test]
fn parses_rows_in_order() {
    let text = r#"{"id":"a","label":1,"features":{"x":1.5,"y":"ab"}}
{"id":"b","label":0,"features":{"x":2,"y":"c"}}
"#;
    let recs = parse_records(text.as_bytes()).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].id, "a");
    assert_eq!(recs[1].fields[0].1, FieldValue::Number(2.0));
}

#[test]
fn label_two_is_schema_error() {
    let text = r#"{"id":"a","label":2,"features":{"x":1}}"#;
    assert!(matches!(parse_records(text.as_bytes()), Err(Error::Schema(_))));
}

#[test]
fn malformed_row_reports_line_number() {
    let text = "{\"id\":\"a\",\"label\":1,\"features\":{\"x\":1}}\n{not json\n";
    match parse_records(text.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn synthetic_file_round_trips() {
    let (records, _) = generate_synthetic(&SyntheticConfig::default()).unwrap();
    assert_eq!(records.len(), 1000);
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    assert_eq!(parse_records(buf.as_slice()).unwrap(), records);
}

#[test]
fn synthetic_is_deterministic_and_balanced() {
    let config = SyntheticConfig { seed: 42, ..Default::default() };
    let bytes = |c: &SyntheticConfig| {
        let mut buf = Vec::new();
        write_records(&mut buf, &generate_synthetic(c).unwrap().0).unwrap();
        buf
    };
    assert_eq!(bytes(&config), bytes(&config));
    let (records, tags) = generate_synthetic(&config).unwrap();
    assert_eq!(records.iter().filter(|r| r.label == 1).count(), 500);
    assert_eq!(tags.iter().filter(|&&t| t == Difficulty::Hard).count(), 200);
}

#[test]
fn easy_synthetic_data_is_linearly_separable() {
    let config = SyntheticConfig { hard_fraction: 0.0, seed: 5, ..Default::default() };
    let (records, _) = generate_synthetic(&config).unwrap();
    let plan = fit_encoding(&records, &EncodingOptions::default()).unwrap();
    let (m, _) = encode(&records, &plan).unwrap();
    let half = m.rows() / 2;
    let (train_x, stats) = standardize(m.values.slice(ndarray::s![..half, ..]), None).unwrap();
    let (test_x, _) = standardize(m.values.slice(ndarray::s![half.., ..]), Some(&stats)).unwrap();
    let cfg = ModelConfig { epochs: 30, learning_rate: 0.01, ..ModelConfig::logreg(m.values.ncols()) };
    let mut model = Model::new(cfg, &mut common::rng(1)).unwrap();
    train(&mut model, train_x.view(), &m.labels[..half], &vec![1.0; half], &mut common::rng(2)).unwrap();
    let (_, pred) = predict(&model, test_x.view()).unwrap();
    let correct = pred.iter().zip(&m.labels[half..]).filter(|(p, y)| p == y).count();
    let acc = correct as f64 / (m.rows() - half) as f64;
    assert!(acc >= 0.99, "held-out accuracy {acc}");
}

#[test]
fn duplicates_with_new_ids_are_dropped() {
    let a = record("1", 1, vec![("x", FieldValue::Number(1.0))]);
    let b = record("2", 1, vec![("x", FieldValue::Number(1.0))]);
    let c = record("3", 0, vec![("x", FieldValue::Number(2.0))]);
    let out = deduplicate(vec![a.clone(), b, c.clone()]);
    assert_eq!(out, vec![a, c]);
}

#[test]
fn encoding_rules_follow_value_types() {
    let recs = vec![
        record("1", 0, vec![
            ("flag", FieldValue::Bool(true)),
            ("name", FieldValue::Text("abcd".into())),
            ("calls", FieldValue::List(vec!["a".into(), "b".into(), "c".into()])),
            ("size", FieldValue::Number(2.5)),
        ]),
        record("2", 1, vec![
            ("flag", FieldValue::Bool(false)),
            ("name", FieldValue::Text("".into())),
            ("calls", FieldValue::List(vec![])),
            ("size", FieldValue::Number(-1.0)),
        ]),
    ];
    let plan = fit_encoding(&recs, &EncodingOptions::default()).unwrap();
    let (m, warnings) = encode(&recs, &plan).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(m.values, array![[1.0, 4.0, 3.0, 2.5], [0.0, 0.0, 0.0, -1.0]]);
    assert_eq!(m.labels, vec![0, 1]);
}

#[test]
fn mixed_types_are_rejected() {
    let recs = vec![
        record("1", 0, vec![("x", FieldValue::Bool(true))]),
        record("2", 0, vec![("x", FieldValue::Number(1.0))]),
    ];
    assert!(matches!(fit_encoding(&recs, &EncodingOptions::default()), Err(Error::Schema(_))));
}

fn text_records(values: &[&str]) -> Vec<BehaviorRecord> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| record(&i.to_string(), 0, vec![("s", FieldValue::Text((*v).into()))]))
        .collect()
}

fn rank_options() -> EncodingOptions {
    EncodingOptions { default_string_rule: StringRule::FrequencyRank, string_rules: BTreeMap::new() }
}

#[test]
fn unseen_value_gets_sentinel_rank_and_warning() {
    let plan = fit_encoding(&text_records(&["a", "a", "b"]), &rank_options()).unwrap();
    let (m, warnings) = encode(&text_records(&["a", "zzz"]), &plan).unwrap();
    assert_eq!(m.values.column(0).to_vec(), vec![0.0, 2.0]);
    assert_eq!(warnings.len(), 1);
}

#[test]
fn standardize_hand_example() {
    let x = array![[0.0, 5.0], [2.0, 5.0]];
    let (z, stats) = standardize(x.view(), None).unwrap();
    assert_eq!(z, array![[-1.0, 0.0], [1.0, 0.0]]);
    assert_eq!(stats.mean.to_vec(), vec![1.0, 5.0]);
    assert_eq!(stats.std.to_vec(), vec![1.0, 1.0]);
}

#[test]
fn standardize_with_stats_does_not_refit() {
    let train_x = array![[0.0], [2.0]];
    let (_, stats) = standardize(train_x.view(), None).unwrap();
    let (held_out, same) = standardize(array![[4.0]].view(), Some(&stats)).unwrap();
    assert_eq!(held_out[[0, 0]], 3.0);
    assert_eq!(same, stats);
    assert!(standardize(array![[1.0, 2.0]].view(), Some(&stats)).is_err());
}

fn matrix_strategy() -> impl Strategy<Value = Array2<f64>> {
    (2usize..30, 1usize..6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-1e3f64..1e3, r * c).prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
    })
}

fn records_strategy() -> impl Strategy<Value = Vec<BehaviorRecord>> {
    proptest::collection::vec((0u8..2, 0i32..4, 0usize..3), 0..40).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (label, x, s))| {
                record(&i.to_string(), label, vec![
                    ("x", FieldValue::Number(f64::from(x))),
                    ("s", FieldValue::Text(["p", "q", "r"][s].into())),
                ])
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn deduplicate_is_idempotent_and_stable(records in records_strategy()) {
        let once = deduplicate(records.clone());
        prop_assert_eq!(deduplicate(once.clone()), once.clone());
        // Order-stable: survivors keep their relative input order.
        let positions: Vec<usize> = once.iter().map(|r| records.iter().position(|o| o.id == r.id).unwrap()).collect();
        prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn frequency_rank_matches_counter(values in proptest::collection::vec(0usize..6, 1..60)) {
        let names = ["u", "v", "w", "x", "y", "z"];
        let strs: Vec<&str> = values.iter().map(|&v| names[v]).collect();
        let recs = text_records(&strs);
        let plan = fit_encoding(&recs, &rank_options()).unwrap();
        let (m, _) = encode(&recs, &plan).unwrap();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for s in &strs {
            *counts.entry(s).or_default() += 1;
        }
        for (i, s) in strs.iter().enumerate() {
            // Rank = number of values strictly more frequent, or equally
            // frequent and lexicographically smaller.
            let rank = counts
                .iter()
                .filter(|(k, c)| **c > counts[s] || (**c == counts[s] && **k < *s))
                .count();
            prop_assert_eq!(m.values[[i, 0]], rank as f64);
        }
        let top = strs.iter().max_by(|a, b| counts[*a].cmp(&counts[*b]).then(b.cmp(a))).unwrap();
        prop_assert_eq!(m.values[[strs.iter().position(|s| s == top).unwrap(), 0]], 0.0);
    }

    #[test]
    fn standardized_columns_are_centered(x in matrix_strategy()) {
        let (z, stats) = standardize(x.view(), None).unwrap();
        for (j, col) in z.axis_iter(Axis(1)).enumerate() {
            let mean = col.mean().unwrap();
            if x.column(j).iter().all(|&v| v == x[[0, j]]) {
                prop_assert!(col.iter().all(|&v| v == 0.0));
                continue;
            }
            prop_assert!(mean.abs() < 1e-9);
            let std = col.mapv(|v| (v - mean).powi(2)).mean().unwrap().sqrt();
            prop_assert!((std - 1.0).abs() < 1e-6);
            prop_assert!(stats.std[j] > 0.0);
        }
        let back = stats.inverse(z.view()).unwrap();
        prop_assert!(back.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
        let (again, _) = standardize(z.view(), None).unwrap();
        prop_assert!(again.iter().zip(z.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn encode_preserves_rows(records in records_strategy()) {
        prop_assume!(!records.is_empty());
        let plan = fit_encoding(&records, &EncodingOptions::default()).unwrap();
        let (m, _) = encode(&records, &plan).unwrap();
        prop_assert_eq!(m.rows(), records.len());
        prop_assert!(m.values.iter().all(|v| v.is_finite()));
        for (i, r) in records.iter().enumerate() {
            prop_assert_eq!(m.labels[i], usize::from(r.label));
        }
    }
}

#[test]
fn fitted_standardizer_is_reusable() {
    let x = array![[1.0, 10.0], [3.0, 30.0], [5.0, 20.0]];
    let s = Standardizer::fit(x.view()).unwrap();
    assert_eq!(s.transform(x.view()).unwrap(), standardize(x.view(), None).unwrap().0);
}
