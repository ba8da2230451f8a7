use std::process::Command;

use spin_steering::{AngleSearchPolicy, CriterionId};
use spin_steering_cli::*;

fn quick_policy() -> AngleSearchPolicy {
    AngleSearchPolicy {
        coarse_points: 36,
        ..Default::default()
    }
}

fn config(n: Vec<usize>, mu_max: f64, steps: usize, criteria: &str) -> SweepConfig {
    SweepConfig {
        n_atoms: n,
        mu_min: 0.0,
        mu_max,
        mu_steps: steps,
        criteria: parse_criteria(criteria).unwrap(),
        angle_policy: quick_policy(),
        ..Default::default()
    }
}

#[test]
fn four_atom_sweep_coincidence() {
    let out = run_sweep(&config(vec![4], 0.5, 21, "delta1,delta2:2")).unwrap();
    assert_eq!(out.rows.len(), 42);
    for pair in out.rows.chunks(2) {
        assert_eq!(pair[0].mu, pair[1].mu);
        assert_eq!(pair[0].criterion, CriterionId::Delta1);
        assert!((pair[0].value - pair[1].value).abs() <= 1e-6);
    }
}

#[test]
fn product_state_sweep_is_zero() {
    let out = run_sweep(&config(vec![6], 0.0, 1, "delta1,delta2:1,delta2:2,delta3:1,delta3:2,delta4")).unwrap();
    assert_eq!(out.rows.len(), 6);
    for r in &out.rows {
        assert!(r.value.abs() < 1e-9, "{:?}", r);
    }
}

#[test]
fn rows_are_sorted_and_consistent() {
    let out = run_sweep(&config(vec![5, 3], 0.4, 3, "delta4,delta1,delta3:1")).unwrap();
    let keys: Vec<_> = out
        .rows
        .iter()
        .map(|r| (r.n_atoms, (r.mu * 1e6) as i64, r.criterion, r.order))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for r in &out.rows {
        assert!((r.value - (r.first_term - r.second_term)).abs() < 1e-10);
    }
}

#[test]
fn csv_round_trips_exactly() {
    let out = run_sweep(&config(vec![3], 0.7, 4, "delta1,delta2:1,delta4")).unwrap();
    let text = rows_to_csv(&out.rows);
    assert!(text.starts_with(CSV_HEADER));
    assert_eq!(parse_csv(&text).unwrap(), out.rows);
}

#[test]
fn worker_count_does_not_change_output() {
    let mut c = config(vec![3, 4], 0.6, 5, "delta1,delta2:2,delta3:1,delta4");
    c.workers = 1;
    let one = rows_to_csv(&run_sweep(&c).unwrap().rows);
    c.workers = 8;
    let eight = rows_to_csv(&run_sweep(&c).unwrap().rows);
    assert_eq!(one, eight);
}

#[test]
fn json_output_echoes_config() {
    let mut c = config(vec![2], 0.2, 2, "delta1");
    c.format = OutputFormat::Json;
    c.emit_first_terms = true;
    let out = run_sweep(&c).unwrap();
    let (text, extra) = output::render(&c, &out);
    assert!(extra.is_none());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["n_atoms"][0], 2);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][0]["criterion"], "delta1");
    assert!(!v["first_terms"].as_array().unwrap().is_empty());
}

#[test]
fn plot_rules() {
    assert!(matches!(render_svg(&[]), Err(CliError::NoData)));
    let out = run_sweep(&config(vec![4], 0.5, 21, "delta1,delta2:2")).unwrap();
    let svg = render_svg(&out.rows).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(render_svg(&out.rows).unwrap(), svg);
    let two = run_sweep(&config(vec![2, 3], 0.3, 3, "delta1")).unwrap();
    let svg = render_svg(&two.rows).unwrap();
    assert!(svg.contains("N = 2") && svg.contains("N = 3"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn atomic_write_leaves_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(vec![2], 0.1, 2, "delta1");
    c.output_path = Some(dir.path().join("out.csv"));
    c.emit_first_terms = true;
    let out = run_sweep(&c).unwrap();
    write_output(&c, &out).unwrap();
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["out.csv", "out.first_terms.csv"]);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steer-hier"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let plot = dir.path().join("s.svg");
    let ok = bin()
        .args(["sweep", "--n", "3", "--mu-steps", "2", "--mu-max", "0.2", "--criteria", "delta1,delta4"])
        .args(["--grid-points", "16", "--out"])
        .arg(&out)
        .arg("--plot")
        .arg(&plot)
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(parse_csv(&text).unwrap().len(), 4);
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with("<svg"));

    let bad = bin().args(["sweep", "--n", "41"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
    let bad = bin().args(["sweep", "--criteria", "delta7"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
    let io = bin()
        .args(["sweep", "--n", "2", "--mu-steps", "1", "--grid-points", "8", "--out", "/nonexistent/dir/x.csv"])
        .status()
        .unwrap();
    assert_eq!(io.code(), Some(3));
}

#[test]
fn workers_default_comes_from_environment() {
    let run = |workers: &str| {
        bin()
            .env("STEER_HIER_WORKERS", workers)
            .args(["sweep", "--n", "3", "--mu-steps", "3", "--mu-max", "0.4", "--grid-points", "16"])
            .args(["--criteria", "delta2:1,delta3:1"])
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("4");
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = bin().env("STEER_HIER_WORKERS", "0").args(["sweep", "--n", "2"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn hierarchy_subcommand_prints_table() {
    let out = bin()
        .args(["hierarchy", "--n", "4", "--mu-steps", "3", "--mu-max", "0.5", "--grid-points", "24"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 3);
    assert!(text.contains("delta3:2"));
}
