use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fmean_cli::Report;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn fmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmean"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn mean_of_one_and_four_is_two() {
    let cfg = scenario("mean.toml");
    let o = fmean(&["mean", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o)
        .lines()
        .any(|l| l.split_whitespace().eq(["mean", "2.0"])));
}

#[test]
fn martingale_check_passes() {
    let cfg = scenario("martingale.toml");
    let o = fmean(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let report = Report::from_toml(&text).unwrap();
    assert_eq!(report.passed, Some(true));
    match report.get("max_residual") {
        Some(fmean_cli::report::Cell::Real(r)) => assert!(*r <= 1e-10),
        other => panic!("unexpected {other:?}"),
    }
    let table = fmean(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&table).lines().any(|l| l == "PASS"));
}

#[test]
fn malformed_probabilities_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "command = \"ce\"\n[mean_function]\nname = \"log\"\n[space]\nprobs = [0.3, 0.6]\n[variables]\nX = [1.0, 2.0]\n",
    );
    let o = fmean(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("invalid probabilities") && err.contains("sum"),
        "{err}"
    );
}

#[test]
fn saturated_inversion_exits_three() {
    // Φ(40) rounds to 1, the open end of the codomain.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "[mean_function]\nname = \"normal_cdf\"\n[options]\npoints = [40.0, 50.0]\n",
    );
    let o = fmean(&["mean", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("codomain"));
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        // unresolved variable
        "command = \"ce\"\n[mean_function]\nname = \"log\"\n[space]\nprobs = [1.0]\n[variables]\nY = [1.0]\n",
        // value outside the domain
        "command = \"ce\"\n[mean_function]\nname = \"log\"\n[space]\nprobs = [1.0]\n[variables]\nX = [-1.0]\n",
        // unknown function
        "command = \"mean\"\n[mean_function]\nname = \"cosh\"\n[options]\npoints = [1.0]\n",
        // missing option
        "command = \"exit-time\"\n[mean_function]\nname = \"log\"\n[chain]\ntransition = [[1.0]]\nstate_values = [1.0]\n",
        // no command at all
        "[mean_function]\nname = \"log\"\n",
        // not TOML
        "command = [",
    ];
    for text in cases {
        let cfg = write_config(&dir, text);
        let o = fmean(&["run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
    }
    let o = fmean(&["run", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fmean(&["frobnicate", "--config", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_scenario_result_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let out = dir.path().join("result.toml");
        let o = fmean(&[
            "run",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--format",
            "csv",
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}: {}",
            path.display(),
            stderr(&o)
        );
        let text = std::fs::read_to_string(&out).unwrap();
        let report = Report::from_toml(&text).unwrap();
        assert_eq!(report.to_toml().unwrap(), text, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 12);
}

#[test]
fn schedule_as_csv() {
    let cfg = scenario("ce_schedule.toml");
    let o = fmean(&[
        "ce-schedule",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let schedule = text.split("\n\n").nth(1).unwrap();
    let mut reader = csv::Reader::from_reader(schedule.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["k", "state_0", "state_1"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[5][1], "1.0");
    assert_eq!(&rows[5][2], "4.0");
    // C_4(0) = exp(0.1 ln 4)
    let c: f64 = rows[4][1].parse().unwrap();
    assert!((c - 4f64.powf(0.1)).abs() < 1e-14);
}

#[test]
fn seed_and_workers() {
    let cfg = scenario("exit_time.toml");
    let cfg = cfg.to_str().unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["run", "--config", cfg, "--format", "structured"];
        args.extend_from_slice(extra);
        let o = fmean(&args);
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    let base = run(&[]);
    assert_eq!(base, run(&["--workers", "1"]));
    assert_eq!(base, run(&["--workers", "4"]));
    let other = run(&["--seed", "5"]);
    assert_ne!(base, other);
    assert!(String::from_utf8(other).unwrap().contains("seed = 5"));
}

#[test]
fn tolerance_override_applies() {
    let cfg = scenario("var_decomp.toml");
    let o = fmean(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--tol=-1",
        "--format",
        "structured",
    ]);
    let report = Report::from_toml(&stdout(&o)).unwrap();
    assert_eq!(report.passed, Some(false));
}

#[test]
fn log_level_from_environment() {
    let cfg = scenario("mean.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_fmean"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("FMEAN_LOG", "info")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("running mean"));
    let quiet = fmean(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&quiet).is_empty());
}

#[test]
fn library_entry_point_matches_binary() {
    let cfg = scenario("wmean.toml");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = fmean_cli::run(
        ["fmean", "run", "--config", cfg.to_str().unwrap()],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    assert_eq!(
        out,
        fmean(&["run", "--config", cfg.to_str().unwrap()]).stdout
    );
    let mut help = Vec::new();
    assert_eq!(fmean_cli::run(["fmean", "--help"], &mut help, &mut err), 0);
    assert!(String::from_utf8(help).unwrap().contains("--workers"));
}
