mod support;

use adaptive_debug::report::{
    figure_csv, read_jsonl, render_report, write_figures, ReportError, ReportFormat, ReportRun,
};
use adaptive_debug_core::baseline::BaselineOutcome;
use adaptive_debug_core::SessionOutcome;
use support::{synthetic_outcomes, write_model_runs, MODEL_RUNS};

fn model_runs() -> Vec<ReportRun> {
    MODEL_RUNS
        .iter()
        .map(|(label, fa, fb)| {
            let (a, b) = synthetic_outcomes(*fa, *fb);
            ReportRun::new(*label, &a, Some(&b)).unwrap()
        })
        .collect()
}

#[test]
fn csv_matches_the_reported_comparison() {
    let csv = render_report(&model_runs(), ReportFormat::Csv).unwrap();
    assert_eq!(
        csv,
        "run,total,baseline_fixed,baseline_percent,adaptive_fixed,adaptive_percent,gain_points\n\
         Llama3,50,26,52,35,70,18\n\
         DeepSeek,50,32,64,38,76,12\n\
         Mistral,50,29,58,33,66,8\n\
         GPT-4,50,41,82,44,88,6\n\
         mean,,,,,,11\n"
    );
}

#[test]
fn markdown_agrees_with_csv() {
    let runs = model_runs();
    let csv = render_report(&runs, ReportFormat::Csv).unwrap();
    let md = render_report(&runs, ReportFormat::Markdown).unwrap();
    assert!(md.ends_with("\nMean gain: 11 points\n"), "{md}");
    let md_rows: Vec<Vec<String>> = md
        .lines()
        .skip(2)
        .take_while(|l| l.starts_with('|'))
        .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
        .collect();
    let csv_rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("mean"))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(md_rows, csv_rows);
}

#[test]
fn json_report_carries_mean_gain() {
    let json = render_report(&model_runs(), ReportFormat::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["mean_gain_points"], 11.0);
    assert_eq!(v["runs"][0]["label"], "Llama3");
    assert_eq!(v["runs"][3]["gain_points"], 6.0);
}

#[test]
fn adaptive_only_runs_leave_baseline_columns_blank() {
    let (a, _) = synthetic_outcomes(10, 0);
    let run = ReportRun::new("solo", &a, None).unwrap();
    let csv = render_report(&[run], ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().nth(1), Some("solo,50,,,10,20,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn empty_inputs_are_errors() {
    assert!(matches!(ReportRun::new("x", &[], None), Err(ReportError::Empty)));
    assert!(matches!(render_report(&[], ReportFormat::Markdown), Err(ReportError::Empty)));
    let (a, b) = synthetic_outcomes(1, 1);
    assert!(ReportRun::new("x", &a, Some(&b[..49])).is_err());
}

#[test]
fn outcomes_round_trip_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_model_runs(dir.path());
    let (_, a, b) = &files[0];
    let adaptive: Vec<SessionOutcome> = read_jsonl(a).unwrap();
    let baseline: Vec<BaselineOutcome> = read_jsonl(b).unwrap();
    assert_eq!((adaptive.len(), baseline.len()), (50, 50));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, format!("{}\n\nnot json\n", serde_json::to_string(&adaptive[0]).unwrap())).unwrap();
    match read_jsonl::<SessionOutcome>(&bad) {
        Err(ReportError::Malformed { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn figure_series() {
    let (a, b) = synthetic_outcomes(35, 26);
    let run = ReportRun::new("m", &a, Some(&b)).unwrap();
    let csv = figure_csv(&run.summary.agents_histogram_by_complexity);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("complexity,value,instance_count"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3);
    let total: u32 = rows
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse::<u32>().unwrap())
        .sum();
    assert_eq!(total, 50);

    let dir = tempfile::tempdir().unwrap();
    write_figures(dir.path(), &run.summary).unwrap();
    let agents = std::fs::read_to_string(dir.path().join("agents_by_complexity.csv")).unwrap();
    assert_eq!(agents, csv);
    assert!(dir.path().join("iterations_by_complexity.csv").exists());
}
