use std::path::Path;
use std::process::{Command, Output};

use fdaloha_cli::figures::{FIG1_COLUMNS, FIG2_COLUMNS, FIG3_COLUMNS, FIG4_COLUMNS};

fn fdaloha(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fdaloha"));
    cmd.args(args).env_remove("FDALOHA_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    fdaloha(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Comment lines and CSV lines of an output file.
fn split(text: &str) -> (Vec<&str>, Vec<&str>) {
    text.lines().partition(|l| l.starts_with('#'))
}

fn header_of(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let (_, csv) = split(&text);
    csv[0].split(',').map(str::to_string).collect()
}

const SMALL_SIM: [&str; 8] = [
    "--horizon",
    "400",
    "--runs",
    "3",
    "--side",
    "20",
    "--jobs",
    "1",
];

#[test]
fn omega_reports_the_default_channel() {
    let text = stdout(&run(&["omega"]));
    let (comments, csv) = split(&text);
    assert!(comments[0].starts_with("# fdaloha "));
    assert!(comments.contains(&"# alpha=4") && comments.contains(&"# theta=2"));
    assert_eq!(csv.len(), 2);
    let fields: Vec<&str> = csv[1].split(',').collect();
    let omega1: f64 = fields[4].parse().unwrap();
    assert!((omega1 - 6.97886419964).abs() < 1e-9);
}

#[test]
fn invalid_settings_exit_with_two() {
    for args in [
        vec!["fixedpoint", "--q", "1.5"],
        vec!["omega", "--set", "bogus=1"],
        vec!["omega", "--set", "noequals"],
        vec!["simulate", "--q-grid", "0.5:0.1:3"],
        vec!["fixedpoint", "--mode", "triplex"],
        vec!["boundary", "--lambda-grid", "0.2,0.1"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).starts_with("error:"),
            "{args:?}"
        );
    }
}

#[test]
fn unstable_fixed_point_is_an_input_error() {
    let out = run(&["fixedpoint", "--lambda", "0.2", "--q", "0.5", "--a", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_precedence_is_flag_then_environment_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "# small run\nseed = 3\n").unwrap();
    let config = config.to_str().unwrap();
    let sim = |seed_flag: Option<&str>, env: Option<&str>| {
        let mut args = vec!["simulate", "--config", config];
        args.extend(SMALL_SIM);
        if let Some(s) = seed_flag {
            args.extend(["--seed", s]);
        }
        let mut cmd = fdaloha(&args);
        if let Some(e) = env {
            cmd.env("FDALOHA_SEED", e);
        }
        stdout(&cmd.output().unwrap())
    };
    let from_file = sim(None, None);
    let from_env = sim(None, Some("5"));
    let from_flag = sim(Some("5"), Some("7"));
    assert!(from_file.contains("# seed=3"));
    assert!(from_env.contains("# seed=5"));
    assert_eq!(from_env, from_flag);
    assert_ne!(split(&from_file).1, split(&from_env).1);
    assert_eq!(sim(Some("3"), Some("5")), from_file);
}

#[test]
fn bad_seed_variable_is_rejected() {
    let out = fdaloha(&["omega"])
        .env("FDALOHA_SEED", "soon")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let mut one = vec!["simulate", "--per-run"];
    one.extend(SMALL_SIM);
    let mut four = one.clone();
    *four.last_mut().unwrap() = "4";
    let strip = |s: String| split(&s).1.join("\n");
    assert_eq!(strip(stdout(&run(&one))), strip(stdout(&run(&four))));
}

#[test]
fn figures_write_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for n in ["1", "2", "3", "4"] {
        stdout(&run(&["figure", n, "--no-sim", "--out-dir", out]));
    }
    let p = dir.path();
    assert_eq!(header_of(&p.join("fig1.csv")), FIG1_COLUMNS);
    assert_eq!(header_of(&p.join("fig2.csv")), FIG2_COLUMNS);
    assert_eq!(header_of(&p.join("fig4.csv")), FIG4_COLUMNS);
    for lambda in ["0.05", "0.15", "0.3"] {
        assert_eq!(
            header_of(&p.join(format!("fig3_lambda{lambda}.csv"))),
            FIG3_COLUMNS
        );
    }
    let fig2 = std::fs::read_to_string(p.join("fig2.csv")).unwrap();
    assert!(fig2.contains("# eta=0.05"));
    assert_eq!(split(&fig2).1.len(), 61);
}

#[test]
fn figure_one_simulation_columns_are_filled() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "figure",
        "1",
        "--q-grid",
        "0.3,0.9",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ];
    args.extend(SMALL_SIM);
    stdout(&run(&args));
    let text = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    let rows = split(&text).1;
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        assert!(row.split(',').all(|f| !f.is_empty()), "{row}");
    }
}

#[test]
fn out_file_matches_standard_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fp.csv");
    let args = ["fixedpoint", "--q-grid", "0.4,0.5"];
    let printed = stdout(&run(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(stdout(&run(&with_out)).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn probe_reports_a_verdict() {
    let out = run(&[
        "probe",
        "--lambda",
        "0.05",
        "--q",
        "0.5",
        "--a-mult",
        "0.5",
        "--horizon",
        "2000",
        "--runs",
        "5",
        "--side",
        "30",
    ]);
    let text = stdout(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("verdict: stable"));
    let csv = split(&text).1;
    assert!(csv[0].contains("verdict") && csv[1].contains(",stable,"));
}
