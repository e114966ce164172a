use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn cghz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cghz"))
        .args(args)
        .env_remove("CGHZ_MAX_MN")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, name: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(name))
        .unwrap_or_else(|| panic!("no `{name}` line in\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn run_balanced_two_by_two() {
    let o = cghz(&["run", "--m", "2", "--n", "2", "--alpha", "0.7071067811865476"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!((field(&text, "success_probability") - 0.125).abs() < 1e-10);
    assert!((field(&text, "min_fidelity") - 1.0).abs() < 1e-9);
    assert_eq!(field(&text, "outcomes"), 16.0);
}

#[test]
fn run_three_photon_blocks() {
    let o = cghz(&["run", "--m", "3", "--n", "2", "--alpha", "0.6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((field(&stdout(&o), "success_probability") - 0.0288).abs() < 1e-10);
}

#[test]
fn run_rejects_degenerate_alpha() {
    for alpha in ["1", "0", "1.5", "nan"] {
        let o = cghz(&["run", "--m", "2", "--n", "2", "--alpha", alpha]);
        assert_eq!(o.status.code(), Some(2), "alpha {alpha}");
    }
    assert_eq!(
        cghz(&["run", "--m", "1", "--n", "2", "--alpha", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(cghz(&["run", "--bogus"]).status.code(), Some(2));
}

#[test]
fn run_json_and_csv() {
    let o = cghz(&["run", "--m", "2", "--n", "2", "--alpha", "0.6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["success_probability"].as_f64().unwrap() - 0.1152).abs() < 1e-10);

    let o = cghz(&["run", "--m", "2", "--n", "2", "--alpha", "0.6", "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "pattern,probability,fidelity,correction");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    assert!(rows[0].starts_with("++++,") && rows[0].ends_with(','));
    let total: f64 = rows
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 0.1152).abs() < 1e-10);
}

#[test]
fn cap_is_enforced_and_overridable() {
    let o = cghz(&["run", "--m", "5", "--n", "2", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_cghz"))
        .args(["run", "--m", "2", "--n", "3", "--alpha", "0.5"])
        .env("CGHZ_MAX_MN", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn trace_stages() {
    let o = cghz(&["trace", "--m", "2", "--n", "2", "--alpha", "1", "--stage", "prepared"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# copy 1 (4 terms)"));
    assert!(text.contains("-0.500000000000 × |H⟩a2 |H⟩c2 |V⟩b2 |V⟩d2"));

    let o = cghz(&["trace", "--m", "2", "--n", "2", "--alpha", "0.6", "--stage", "hwp"]);
    assert!(stdout(&o).contains("(64 terms)"));
    let o = cghz(&[
        "trace",
        "--m",
        "2",
        "--n",
        "2",
        "--alpha",
        "0.6",
        "--stage",
        "postselect",
    ]);
    assert!(stdout(&o).contains("(8 terms)"));
    let o = cghz(&["trace", "--m", "2", "--n", "2", "--alpha", "0.6", "--stage", "nowhere"]);
    assert_eq!(o.status.code(), Some(2));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn default_sweep_is_exact_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = cghz(&["sweep", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101);
    for l in &lines[1..] {
        let err: f64 = l.split(',').nth(5).unwrap().parse().unwrap();
        assert!(err <= 1e-9);
    }
}

#[test]
fn sweep_balanced_column() {
    let o = cghz(&["sweep", "--alphas", "0.7071067811865476", "--columns", "m,N,p_analytic"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let got: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let want = [0.125, 0.0625, 0.03125, 0.0078125];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-15);
    }
    assert_eq!(text.lines().next(), Some("m,N,p_analytic"));
}

#[test]
fn sweep_input_errors() {
    assert_eq!(cghz(&["sweep", "--alphas", ""]).status.code(), Some(2));
    assert_eq!(cghz(&["sweep", "--alphas", "0.5,1.0"]).status.code(), Some(2));
    assert_eq!(cghz(&["sweep", "--columns", "m,nope"]).status.code(), Some(2));
    let o = cghz(&["sweep", "--alphas", "0.5", "--out", "/nonexistent/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn sweep_marks_oversized_rows() {
    let o = cghz(&["sweep", "--m-values", "5", "--n-values", "2", "--alphas", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("5,2,0.5,"));
    assert!(row.contains(",,"));
}

#[test]
fn sweep_json_round_trips() {
    let o = cghz(&[
        "sweep",
        "--alphas",
        "0.3,0.6",
        "--m-values",
        "2",
        "--n-values",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<cghz_ecp::SweepRow> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[1].p_analytic - 0.1152).abs() < 1e-15);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# run\nm = 3\nn = 2\nalpha = 0.6\n").unwrap();
    let o = cghz(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!((field(&stdout(&o), "success_probability") - 0.0288).abs() < 1e-10);

    let o = cghz(&["run", "--config", cfg.to_str().unwrap(), "--m", "2"]);
    assert!((field(&stdout(&o), "success_probability") - 0.1152).abs() < 1e-10);

    std::fs::write(&cfg, "m = 2\ncolour = blue\n").unwrap();
    assert_eq!(cghz(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.conf");
    assert_eq!(
        cghz(&["run", "--config", missing.to_str().unwrap()]).status.code(),
        Some(4)
    );
}

#[test]
fn verify_passes_and_catches_a_bad_pbs() {
    let start = Instant::now();
    let o = cghz(&["verify", "--quick"]);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 11);

    let o = cghz(&["verify", "--quick", "--perturb-pbs"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("FAIL equation regression")));
}

#[test]
fn sequential_flag_gives_identical_output() {
    let args = ["run", "--m", "2", "--n", "3", "--alpha", "0.3", "--format", "json"];
    let par = cghz(&args);
    let mut seq_args = vec!["--sequential"];
    seq_args.extend(args);
    let seq = cghz(&seq_args);
    assert_eq!(par.stdout, seq.stdout);
}
