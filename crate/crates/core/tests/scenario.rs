use std::path::{Path, PathBuf};

use edgecache::scenario::{
    load_scenario, parse_scenario, run_scenario, summarize, write_scenario, Algorithm, Figure,
    CSV_HEADER,
};
use edgecache::Error;

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn paper_scenario_has_paper_settings() {
    let s = load_scenario(scenario_file("paper_fig2.scenario")).unwrap();
    let edgecache::scenario::CatalogSpec::Generated(p) = &s.catalog else {
        panic!("expected generated catalog");
    };
    assert_eq!(p.num_videos, 21);
    assert_eq!(p.gamma, 0.6);
    assert_eq!((p.size_min, p.size_max), (3, 65));
    assert_eq!(s.population.num_users, 900);
    assert_eq!(s.sim.requests_per_day, 900);
    assert_eq!(s.sim.lambda, 0.9);
    assert_eq!(s.sim.capacities, vec![50, 150, 250, 350, 450, 500]);
    assert_eq!(s.algorithms, Algorithm::ALL.to_vec());
}

#[test]
fn shipped_scenarios_round_trip() {
    for name in [
        "paper_fig2.scenario",
        "desk_small.scenario",
        "oracle_sweep.scenario",
    ] {
        let s = load_scenario(scenario_file(name)).unwrap();
        let text = write_scenario(&s);
        assert_eq!(
            parse_scenario(&text, Path::new(name), "other").unwrap(),
            s,
            "{name}"
        );
    }
}

#[test]
fn desk_small_row_count_and_order() {
    let s = load_scenario(scenario_file("desk_small.scenario")).unwrap();
    let run = run_scenario(&s, 2).unwrap();
    assert_eq!(run.rows.len(), 2 * 3 * 2 * 6);
    let keys: Vec<_> = run
        .rows
        .iter()
        .map(|r| (r.algorithm.as_str(), r.capacity, r.day))
        .collect();
    let mut expected = Vec::new();
    for a in ["PROPOSED", "LRU"] {
        for c in [40, 100, 160] {
            for d in 0..2 {
                expected.extend(std::iter::repeat_n((a, c, d), 6));
            }
        }
    }
    assert_eq!(keys, expected);
    assert!(run.rows.iter().step_by(6).all(|r| r.content_type == "ALL"));
    for r in &run.rows {
        let predicted = r.predicted_hit_ratio.is_some();
        assert_eq!(predicted, r.algorithm == "PROPOSED");
        assert!(r.empirical_hit_ratio.is_finite() && r.mean_startup_delay_ms >= 0.0);
    }
    assert_eq!(run.placements.len(), 3 * 2);
}

#[test]
fn output_is_independent_of_worker_count() {
    let s = load_scenario(scenario_file("desk_small.scenario")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for jobs in [1, 4] {
        let out = dir.path().join(jobs.to_string());
        run_scenario(&s, jobs).unwrap().write(&out).unwrap();
        bytes.push((
            std::fs::read(out.join("results.csv")).unwrap(),
            std::fs::read(out.join("placement.jsonl")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
    let header = String::from_utf8(bytes[0].0.clone()).unwrap();
    assert_eq!(header.lines().next().unwrap(), CSV_HEADER.join(","));
}

#[test]
fn paper_proposed_hit_ratio_rises_with_capacity() {
    let mut s = load_scenario(scenario_file("paper_fig2.scenario")).unwrap();
    s.algorithms = vec![Algorithm::Proposed];
    let run = run_scenario(&s, 0).unwrap();
    let ratios: Vec<f64> = run
        .cells
        .iter()
        .map(|(_, _, m)| m.total().hit_ratio())
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]), "{ratios:?}");
}

#[test]
fn summarize_cross_foots_and_lists_all_algorithms() {
    let s = load_scenario(scenario_file("paper_fig2.scenario")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = run_scenario(&s, 0).unwrap().write(dir.path()).unwrap();
    let summary = summarize(&csv).unwrap();
    assert!(summary.warnings.is_empty(), "{:?}", summary.warnings);
    let fig2a = summary.table(Figure::Fig2a).unwrap();
    assert!(fig2a.title.contains("S=350"));
    let algs: Vec<_> = fig2a.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(algs, ["PROPOSED", "LRU", "LFU", "WGDSF*"]);
    assert_eq!(summary.table(Figure::Fig3).unwrap().rows.len(), 6);
    assert_eq!(summary.table(Figure::Fig5).unwrap().rows.len(), 24);
}

#[test]
fn summarize_rejects_tampered_counts() {
    let s = load_scenario(scenario_file("desk_small.scenario")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = run_scenario(&s, 1).unwrap().write(dir.path()).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // bump the request count of the first per-type row
    let mut fields: Vec<String> = lines[2].split(',').map(String::from).collect();
    fields[5] = (fields[5].parse::<u64>().unwrap() + 1).to_string();
    lines[2] = fields.join(",");
    std::fs::write(&csv, lines.join("\n") + "\n").unwrap();
    match summarize(&csv) {
        Err(Error::Schema { column, .. }) => assert_eq!(column, "requests"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_files_report_their_path() {
    let err = load_scenario("/nonexistent/x.scenario").unwrap_err();
    assert!(!err.is_validation());
    assert!(err.to_string().contains("/nonexistent/x.scenario"));
    let err = summarize(Path::new("/nonexistent/results.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/results.csv"));
}

#[test]
fn unwritable_output_dir_is_an_io_error() {
    let s = load_scenario(scenario_file("desk_small.scenario")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let err = run_scenario(&s, 1)
        .unwrap()
        .write(&blocker.join("out"))
        .unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
}
