use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lppl_cli::report::{read_fit_report, sha256_hex, to_json, RunManifest};
use tempfile::TempDir;

/// SHA-256 of `lppl synth` with every flag at its default. Frozen from the
/// first run; a change means the generator stream or the CSV format moved.
const GOLDEN_SYNTH_DIGEST: &str =
    "95647920a804808555125880e94977a406445ae175031a6b412a3a73866874e9";

fn lppl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lppl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Weekly noiseless series from the default model.
fn noiseless(dir: &TempDir) -> std::path::PathBuf {
    let path = dir.path().join("clean.csv");
    let o = lppl(&[
        "synth",
        "--noise",
        "0",
        "--step-days",
        "7",
        "--out",
        p(&path),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path
}

#[test]
fn synth_default_matches_golden_digest() {
    let o = lppl(&["synth"]);
    assert_eq!(code(&o), 0);
    assert_eq!(sha256_hex(&o.stdout), GOLDEN_SYNTH_DIGEST);
    assert_eq!(o.stdout, lppl(&["synth"]).stdout);
}

#[test]
fn synth_writes_sidecar_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.csv");
    assert_eq!(code(&lppl(&["synth", "--seed", "4", "--out", p(&out)])), 0);
    let bytes = fs::read(&out).unwrap();
    let m: RunManifest =
        serde_json::from_slice(&fs::read(dir.path().join("s.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m.command, "synth");
    assert_eq!(m.outputs[0].sha256, sha256_hex(&bytes));
    assert_eq!(m.config["synth_config"]["seed"], 4);
}

#[test]
fn synth_rejects_non_positive_step() {
    for step in ["0", "-1"] {
        let o = lppl(&["synth", "--step-days", step]);
        assert_eq!(code(&o), 1, "{}", stderr(&o));
    }
}

#[test]
fn fit_recovers_noiseless_synth() {
    let dir = TempDir::new().unwrap();
    let input = noiseless(&dir);
    let out = dir.path().join("fit");
    let o = lppl(&[
        "fit",
        "--input",
        p(&input),
        "--tc-step",
        "0.01",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let report = read_fit_report(&out.join("report.json")).unwrap();
    let params = report.fit.params;
    assert!((params.params.t_crit - 2010.75).abs() <= 0.01, "{params:?}");
    assert!((params.amplitude - 5.0).abs() <= 0.1, "{params:?}");
    assert!(!report.fit.degenerate);

    let curve = fs::read_to_string(out.join("curve.csv")).unwrap();
    let input_rows = fs::read_to_string(&input).unwrap().lines().count();
    assert!(curve.starts_with("t,observed,model\n"));
    assert_eq!(curve.lines().count(), input_rows);
    for line in curve.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[2]).abs() < 1e-3 * v[1], "{line}");
    }

    let m: RunManifest =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(
        m.input.unwrap().sha256,
        sha256_hex(&fs::read(&input).unwrap())
    );
    let names: Vec<_> = m
        .outputs
        .iter()
        .map(|f| f.path.rsplit('/').next().unwrap())
        .collect();
    assert_eq!(names, ["report.json", "curve.csv", "trace.csv"]);
}

#[test]
fn fit_outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = noiseless(&dir);
    let mut seen = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = lppl(&[
            "fit",
            "--input",
            p(&input),
            "--tc-step",
            "0.05",
            "--out",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["report.json", "curve.csv", "trace.csv"]
            .iter()
            .map(|f| fs::read(out.join(f)).unwrap())
            .collect();
        seen.push(files);
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn report_round_trips_through_reader() {
    let dir = TempDir::new().unwrap();
    let input = noiseless(&dir);
    let out = dir.path().join("fit");
    let o = lppl(&[
        "fit",
        "--input",
        p(&input),
        "--tc-step",
        "0.05",
        "--log-price",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    let report = read_fit_report(&out.join("report.json")).unwrap();
    assert!(report.config.fit_log_price);
    assert_eq!(to_json(&report).unwrap(), text);
}

#[test]
fn fit_missing_input_is_usage_error() {
    let o = lppl(&["fit", "--input", "/definitely/not/here.csv"]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("/definitely/not/here.csv"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn fit_window_excluding_all_data() {
    let dir = TempDir::new().unwrap();
    let input = noiseless(&dir);
    for flags in [
        &["--window-start", "2030-01-01", "--window-end", "2031-01-01"][..],
        &["--window-start", "2030-01-01"][..],
    ] {
        let mut args = vec!["fit", "--input", p(&input), "--out", p(dir.path())];
        args.extend_from_slice(flags);
        let o = lppl(&args);
        assert_eq!(code(&o), 2, "{}", stderr(&o));
        assert!(stderr(&o).contains("empty series"), "{}", stderr(&o));
    }
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&lppl(&["fit"])), 1);
    assert_eq!(code(&lppl(&["frobnicate"])), 1);
    assert_eq!(
        code(&lppl(&["fit", "--input", "x.csv", "--side", "sideways"])),
        1
    );
    assert_eq!(code(&lppl(&["--help"])), 0);
}

#[test]
fn malformed_csv_is_computation_error() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "date,price\n2008-01-02,90\n2008-01-03,abc\n").unwrap();
    let o = lppl(&["fit", "--input", p(&input), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn extrema_table_from_flags() {
    let o = lppl(&[
        "extrema",
        "--t-crit",
        "10",
        "--lambda",
        "2",
        "--amplitude",
        "1",
        "--phase",
        "0",
        "--from",
        "2",
        "--to",
        "10",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let maxima: Vec<f64> = text
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("max,"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(text.starts_with("kind,t,x\n"));
    for (got, want) in maxima.iter().zip([2.0, 6.0, 8.0, 9.0, 9.5, 9.75]) {
        assert!((got - want).abs() < 1e-12, "{maxima:?}");
    }
    // last maximum at least one day before t_crit
    assert!(*maxima.last().unwrap() <= 10.0 - 1.0 / 365.0);
}

#[test]
fn extrema_empty_range_and_zero_amplitude() {
    let base = [
        "extrema", "--t-crit", "10", "--phase", "0", "--from", "9.999", "--to", "10",
    ];
    let o = lppl(&[&base[..], &["--amplitude", "1"]].concat());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "kind,t,x\n");

    let o = lppl(&[&base[..], &["--amplitude", "0"]].concat());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("zero"), "{}", stderr(&o));
}

#[test]
fn extrema_from_fit_report() {
    let dir = TempDir::new().unwrap();
    let input = noiseless(&dir);
    let out = dir.path().join("fit");
    assert_eq!(
        code(&lppl(&[
            "fit",
            "--input",
            p(&input),
            "--tc-step",
            "0.05",
            "--out",
            p(&out)
        ])),
        0
    );
    let table = dir.path().join("extrema.csv");
    let report = out.join("report.json");
    let o = lppl(&[
        "extrema",
        "--report",
        p(&report),
        "--from",
        "2000",
        "--to",
        "2010.5",
        "--out",
        p(&table),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&table).unwrap().lines().count() > 5);
    assert!(dir.path().join("extrema.csv.manifest.json").exists());
}

fn composite(dir: &TempDir, height: &str) -> std::path::PathBuf {
    let path = dir.path().join(format!("composite-{height}.csv"));
    let a_env = format!("-{}", height.parse::<f64>().unwrap() / 1.03f64.sqrt());
    let amp = a_env.trim_start_matches('-').to_string();
    let o = lppl(&[
        "synth",
        "--t-crit",
        "2010.7",
        "--amplitude",
        "10",
        "--to",
        "2008.45",
        "--step-days",
        "7",
        "--overlay-t-crit",
        "2008.53",
        "--overlay-ramp-start",
        "2007.5",
        "--overlay-p-crit",
        height,
        "--overlay-a-env",
        &a_env,
        "--overlay-amplitude",
        &amp,
        "--overlay-phase",
        "2",
        "--out",
        p(&path),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path
}

#[test]
fn superbubble_composite_and_single_bubble() {
    let dir = TempDir::new().unwrap();
    for (height, expect) in [("5", true), ("0", false)] {
        let input = composite(&dir, height);
        let out = dir.path().join(format!("sb-{height}.json"));
        let o = lppl(&[
            "superbubble",
            "--input",
            p(&input),
            "--short-start",
            "2007.6",
            "--tc-step",
            "0.02",
            "--out",
            p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let doc: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
        assert_eq!(doc["is_superbubble"], expect, "{doc}");
        if expect {
            let gap = doc["gap_years"].as_f64().unwrap();
            assert!((gap - 2.2).abs() <= 0.1, "gap {gap}");
        }
    }
}

#[test]
fn superbubble_short_window_not_suffix() {
    let dir = TempDir::new().unwrap();
    let input = composite(&dir, "5");
    let o = lppl(&[
        "superbubble",
        "--input",
        p(&input),
        "--short-start",
        "2007.6",
        "--short-end",
        "2008.2",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("suffix"), "{}", stderr(&o));
}
