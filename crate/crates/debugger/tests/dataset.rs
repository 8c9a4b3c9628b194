use std::collections::BTreeSet;

use adaptive_debug::dataset::{load_dataset, parse_dataset, DatasetError, DatasetFilter};
use adaptive_debug_core::{BugCategory, ComplexityLevel};

fn record(id: &str, category: &str, complexity: &str) -> String {
    serde_json::json!({
        "id": id,
        "title": id,
        "description": "double the input",
        "buggy_code": "print(int(input()) * 3)",
        "category": category,
        "complexity": complexity,
        "tests": [{"input": "2", "expected_output": "4"}]
    })
    .to_string()
}

fn three() -> String {
    [
        record("a", "syntax", "easy"),
        record("b", "logic", "medium"),
        record("c", "reference", "hard"),
    ]
    .join("\n")
}

fn ids(text: &str, filter: &DatasetFilter) -> Vec<String> {
    parse_dataset(text, filter)
        .unwrap()
        .instances
        .into_iter()
        .map(|i| i.id)
        .collect()
}

#[test]
fn loads_all_valid_records_in_seeded_order() {
    let filter = DatasetFilter { seed: 7, ..DatasetFilter::default() };
    let first = ids(&three(), &filter);
    assert_eq!(first.len(), 3);
    assert_eq!(first, ids(&three(), &filter));
    let sorted: BTreeSet<_> = first.iter().cloned().collect();
    assert_eq!(sorted, ["a", "b", "c"].map(String::from).into());

    let orders: BTreeSet<Vec<String>> = (0..20)
        .map(|seed| ids(&three(), &DatasetFilter { seed, ..DatasetFilter::default() }))
        .collect();
    assert!(orders.len() > 1, "seed has no effect on order");
}

#[test]
fn filter_by_category_and_limit() {
    let filter = DatasetFilter {
        categories: Some([BugCategory::Syntax].into()),
        limit: Some(1),
        ..DatasetFilter::default()
    };
    let dataset = parse_dataset(&three(), &filter).unwrap();
    assert_eq!(dataset.instances.len(), 1);
    assert_eq!(dataset.instances[0].category, BugCategory::Syntax);

    let filter = DatasetFilter {
        complexities: Some([ComplexityLevel::Medium, ComplexityLevel::High].into()),
        ..DatasetFilter::default()
    };
    let mut got = ids(&three(), &filter);
    got.sort();
    assert_eq!(got, ["b", "c"]);

    let filter = DatasetFilter { limit: Some(0), ..DatasetFilter::default() };
    assert!(matches!(parse_dataset(&three(), &filter), Err(DatasetError::InvalidFilter)));
}

#[test]
fn a_single_bad_record_among_many_is_skipped_and_named() {
    let mut lines: Vec<String> = (0..12).map(|i| record(&format!("ok{i}"), "logic", "easy")).collect();
    lines.insert(4, record("weird", "oob", "easy"));
    let dataset = parse_dataset(&lines.join("\n"), &DatasetFilter::default()).unwrap();
    assert_eq!(dataset.instances.len(), 12);
    assert_eq!(dataset.skipped.len(), 1);
    let err = &dataset.skipped[0];
    assert_eq!(err.line, 5);
    assert_eq!(err.id.as_deref(), Some("weird"));
    let shown = err.to_string();
    assert!(shown.contains("line 5") && shown.contains("weird"), "{shown}");
}

#[test]
fn too_many_bad_records_abort() {
    let text = format!("{}\n{}", three(), record("bad", "oob", "easy"));
    match parse_dataset(&text, &DatasetFilter::default()) {
        Err(DatasetError::TooManyInvalid { failed, total, errors }) => {
            assert_eq!((failed, total), (1, 4));
            assert_eq!(errors[0].line, 4);
            assert_eq!(errors[0].id.as_deref(), Some("bad"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn rejects_unknown_complexity_duplicates_and_bad_json() {
    let mut lines: Vec<String> = (0..30).map(|i| record(&format!("r{i}"), "logic", "easy")).collect();
    lines.push(record("vague", "logic", "unknown"));
    lines.push(record("r3", "logic", "easy"));
    lines.push("{not json".into());
    let dataset = parse_dataset(&lines.join("\n"), &DatasetFilter::default()).unwrap();
    let reasons: Vec<_> = dataset.skipped.iter().map(|e| (e.line, e.id.clone())).collect();
    assert_eq!(
        reasons,
        [(31, Some("vague".into())), (32, Some("r3".into())), (33, None)]
    );
    assert!(dataset.skipped[1].reason.contains("duplicate"));
}

#[test]
fn empty_and_missing_files() {
    assert!(matches!(parse_dataset("\n\n", &DatasetFilter::default()), Err(DatasetError::Empty)));
    let missing = std::path::Path::new("/nonexistent/dataset.jsonl");
    assert!(matches!(load_dataset(missing, &DatasetFilter::default()), Err(DatasetError::Io { .. })));
}

#[test]
fn bench_fixture_loads() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bench5/dataset.jsonl");
    let dataset = load_dataset(&path, &DatasetFilter::default()).unwrap();
    assert_eq!(dataset.instances.len(), 5);
    assert!(dataset.skipped.is_empty());
}
