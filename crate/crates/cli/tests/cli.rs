use std::path::Path;
use std::process::{Command, Output};

use fowler_cli::solution::SolutionFile;
use fowler_core::kernel::{kernel_mass, periodize, DEFAULT_TABLE_TOL};
use fowler_core::radial::{from_profile, radial_residual};
use fowler_core::solver::{constant_solution_value, PeriodicProfile};
use fowler_core::Params;

fn fowler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fowler"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn solve_to(
    dir: &Path,
    name: &str,
    n: &str,
    sigma: &str,
    period: &str,
    extra: &[&str],
) -> (Output, SolutionFile) {
    let path = dir.join(name);
    let mut args = vec![
        "solve",
        "--n",
        n,
        "--sigma",
        sigma,
        "--period",
        period,
        "--out",
        path.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = fowler(&args);
    let file = SolutionFile::read(&path).unwrap_or_else(|e| panic!("{e}: {}", stderr(&out)));
    (out, file)
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .take_while(|l| !l.starts_with("T*") && l.contains(','))
        .map(|l| l.split(',').filter_map(|c| c.parse().ok()).collect())
        .collect();
    (header, rows)
}

#[test]
fn solve_examples() {
    let dir = tempfile::tempdir().unwrap();
    let (out, file) = solve_to(dir.path(), "f.json", "1", "0.25", "60", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(file.variant, "nonconstant");
    assert_eq!(
        (file.grid, file.psi_values.len(), file.schema_version),
        (1024, 1024, 1)
    );
    assert!(file.provenance.converged && file.provenance.timestamp.is_none());
    let line = stdout(&out);
    assert!(
        line.starts_with("T=6.0000000000000000e1 J=")
            && line.contains(" variant=nonconstant residual="),
        "{line}"
    );

    let (out, file) = solve_to(
        dir.path(),
        "g.json",
        "3",
        "1",
        "0.5",
        &["--grid", "256", "--timestamp"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(file.variant, "constant");
    assert_eq!(file.grid, 256);
    assert!(file.provenance.timestamp.is_some());
}

#[test]
fn solve_usage_errors() {
    let missing = fowler(&["solve", "--n", "3", "--period", "1", "--out", "/dev/null"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("--sigma"));
    let invalid = fowler(&[
        "solve",
        "--n",
        "3",
        "--sigma",
        "1.5",
        "--period",
        "1",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(invalid.status.code(), Some(1), "{}", stderr(&invalid));
    let bad_tol = fowler(&[
        "solve",
        "--n",
        "3",
        "--sigma",
        "1",
        "--period",
        "1",
        "--tol",
        "0",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(bad_tol.status.code(), Some(1));
    let unwritable = fowler(&[
        "solve",
        "--n",
        "3",
        "--sigma",
        "1",
        "--period",
        "1",
        "--grid",
        "64",
        "--out",
        "/nonexistent/x.json",
    ]);
    assert_eq!(unwritable.status.code(), Some(1));
}

#[test]
fn solve_reports_non_convergence_and_keeps_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let (out, file) = solve_to(
        dir.path(),
        "f.json",
        "1",
        "0.25",
        "60",
        &["--max-iters", "2", "--grid", "256"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(!file.provenance.converged);
    assert_ne!(file.provenance.status, "converged");
    assert!(file.psi_values.iter().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn scan_finds_one_transition() {
    let out = fowler(&[
        "scan", "--n", "1", "--sigma", "0.25", "--t-min", "1", "--t-max", "100", "--steps", "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["T", "J_const", "J_max", "variant"]);
    assert_eq!(rows.len(), 20);
    let variants: Vec<&str> = text
        .lines()
        .skip(1)
        .take(20)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    let flips = variants.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{variants:?}");
    assert_eq!(variants[0], "constant");
    assert!(text.lines().last().unwrap().starts_with("T* in ["));

    // J_const ∝ T^{−2σ/n}
    let (first, last) = (&rows[0], &rows[19]);
    let slope = (last[1] / first[1]).ln() / (last[0] / first[0]).ln();
    assert!((slope / -0.5 - 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn scan_writes_csv_to_file_and_reports_absence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = fowler(&[
        "scan",
        "--n",
        "3",
        "--sigma",
        "1",
        "--t-min",
        "0.5",
        "--t-max",
        "2",
        "--steps",
        "3",
        "--grid",
        "128",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "no transition in range\n");
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
}

#[test]
fn scan_rejects_bad_ranges() {
    for range in [
        ["5", "5", "10"],
        ["5", "1", "10"],
        ["0", "1", "10"],
        ["1", "5", "1"],
    ] {
        let out = fowler(&[
            "scan", "--n", "1", "--sigma", "0.25", "--t-min", range[0], "--t-max", range[1],
            "--steps", range[2],
        ]);
        assert_eq!(out.status.code(), Some(1), "{range:?}");
    }
}

#[test]
fn verify_examples() {
    let ext = fowler(&[
        "verify",
        "--suite",
        "extension",
        "--n",
        "3",
        "--sigma",
        "0.5",
    ]);
    assert_eq!(ext.status.code(), Some(0));
    assert!(stdout(&ext).starts_with("PASS extension"));
    let bubble = fowler(&["verify", "--suite", "bubble", "--n", "1", "--sigma", "0.25"]);
    assert_eq!(bubble.status.code(), Some(0));
    assert_eq!(stdout(&bubble).lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let (_, _) = solve_to(dir.path(), "f.json", "3", "1", "20", &[]);
    let report = dir.path().join("r.json");
    let out = fowler(&[
        "verify",
        "--suite",
        "pohozaev",
        "--solution",
        dir.path().join("f.json").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        stdout(&out),
        stderr(&out)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert!(json["checks"][0]["measured"].as_f64().unwrap() < 1e-5);
}

#[test]
fn verify_usage_errors() {
    assert_eq!(
        fowler(&["verify", "--suite", "nonsense"]).status.code(),
        Some(1)
    );
    assert_eq!(
        fowler(&["verify", "--suite", "bubble", "--n", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        fowler(&["verify", "--suite", "hls", "--n", "3", "--sigma", "1"])
            .status
            .code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = solve_to(dir.path(), "f.json", "1", "0.25", "5", &["--grid", "128"]);
    let f = dir.path().join("f.json");
    let wrong = fowler(&[
        "verify",
        "--suite",
        "pohozaev",
        "--solution",
        f.to_str().unwrap(),
    ]);
    assert_eq!(wrong.status.code(), Some(1));
    let misplaced = fowler(&[
        "verify",
        "--suite",
        "kernel",
        "--solution",
        f.to_str().unwrap(),
    ]);
    assert_eq!(misplaced.status.code(), Some(1));
}

#[test]
fn verify_exits_three_on_failure() {
    // at T = 30 a 256-point grid leaves the Pohozaev spread well above 1e-5
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = solve_to(dir.path(), "f.json", "3", "1", "30", &["--grid", "256"]);
    let out = fowler(&[
        "verify",
        "--suite",
        "pohozaev",
        "--solution",
        dir.path().join("f.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("FAIL pohozaev"));
}

#[test]
fn reconstruct_constant_solution() {
    let dir = tempfile::tempdir().unwrap();
    let (_, file) = solve_to(dir.path(), "c.json", "3", "1", "0.5", &["--grid", "256"]);
    let out = fowler(&[
        "reconstruct",
        "--solution",
        dir.path().join("c.json").to_str().unwrap(),
        "--samples",
        "16",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header, ["r", "u", "psi_of_log_r"]);
    let params = Params::new(3, 1.0).unwrap();
    let psi0 = constant_solution_value(&params, kernel_mass(&params).unwrap());
    assert!((file.psi_values[0] / psi0 - 1.0).abs() < 1e-10);
    assert!(rows.last().unwrap()[0] <= 1e-3);
    for row in &rows {
        let want = psi0 * row[0].powf(-0.5);
        assert!((row[1] - want).abs() < 1e-10 * want, "{row:?}");
    }
}

#[test]
fn reconstruct_is_periodic_in_log_radius() {
    let dir = tempfile::tempdir().unwrap();
    let (_, file) = solve_to(dir.path(), "f.json", "1", "0.25", "30", &["--grid", "512"]);
    assert_eq!(file.variant, "nonconstant");
    let out = fowler(&[
        "reconstruct",
        "--solution",
        dir.path().join("f.json").to_str().unwrap(),
        "--r-min",
        "1e-30",
        "--samples",
        "32",
    ]);
    let (_, rows) = parse_csv(&stdout(&out));
    assert!(rows.len() > 64);
    let spread = rows.iter().map(|r| r[2]).fold(0.0f64, f64::max)
        / rows.iter().map(|r| r[2]).fold(1.0, f64::min);
    assert!(spread > 1.5, "the profile should oscillate");
    for j in 0..rows.len() - 32 {
        assert!(
            (rows[j][2] - rows[j + 32][2]).abs() < 1e-12 * rows[j][2],
            "{j}"
        );
    }
}

#[test]
fn reconstruct_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut file) = solve_to(dir.path(), "f.json", "3", "1", "1", &["--grid", "64"]);
    file.schema_version = 2;
    let v2 = dir.path().join("v2.json");
    file.write(&v2).unwrap();
    let out = fowler(&["reconstruct", "--solution", v2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("unsupported schema"),
        "{}",
        stderr(&out)
    );

    let garbage = dir.path().join("g.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(
        fowler(&["reconstruct", "--solution", garbage.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        fowler(&["reconstruct", "--solution", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let f = dir.path().join("f.json");
    assert_eq!(
        fowler(&[
            "reconstruct",
            "--solution",
            f.to_str().unwrap(),
            "--r-min",
            "2"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn solve_reconstruct_round_trip_reproduces_the_residual() {
    let dir = tempfile::tempdir().unwrap();
    for (n, sigma, period) in [("1", "0.25", "40"), ("3", "1", "20"), ("3", "1", "1")] {
        let (_, file) = solve_to(dir.path(), "f.json", n, sigma, period, &["--grid", "512"]);
        let t: f64 = period.parse().unwrap();
        let r_min = format!("{:e}", (-t).exp() * 1.0001);
        let out = fowler(&[
            "reconstruct",
            "--solution",
            dir.path().join("f.json").to_str().unwrap(),
            "--r-min",
            &r_min,
            "--samples",
            "512",
        ]);
        let (_, rows) = parse_csv(&stdout(&out));
        assert_eq!(rows.len(), 513);
        // rebuild the profile on ascending nodes 0, h, …, (N−1)h from ln r = 0, −h, …
        let mut values: Vec<f64> = rows[..512].iter().map(|r| r[2]).collect();
        values[1..].reverse();
        let params = file.params().unwrap();
        let profile = PeriodicProfile::new(t, values).unwrap();
        let field = from_profile(&params, &profile, (-t).exp() * 1.0001, 512).unwrap();
        let table = periodize(&params, t, 512, DEFAULT_TABLE_TOL).unwrap();
        let residual = radial_residual(&params, &field, &table).unwrap();
        assert!(
            (residual - file.el_residual).abs() < 1e-12,
            "{n},{sigma},{period}: {residual} vs {}",
            file.el_residual
        );
    }
}

#[test]
fn kernel_dump_tables() {
    let out = fowler(&[
        "kernel-dump",
        "--n",
        "3",
        "--sigma",
        "1",
        "--period",
        "4",
        "--grid",
        "64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&out));
    assert_eq!(header, ["t", "K", "K_T"]);
    assert_eq!(rows.len(), 63);
    for (j, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (j + 1) as f64 / 16.0);
        assert!(row[2] > row[1] && row[1] > 0.0);
        let mirror = &rows[62 - j];
        assert!((row[2] - mirror[2]).abs() <= 1e-14 * row[2]);
    }
    assert_eq!(
        fowler(&["kernel-dump", "--n", "3", "--sigma", "1", "--period", "-1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = solve_to(dir.path(), "a.json", "1", "0.25", "30", &["--grid", "256"]);
    let (_, _) = solve_to(dir.path(), "b.json", "1", "0.25", "30", &["--grid", "256"]);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let args = [
        "verify",
        "--suite",
        "greens",
        "--seed",
        "7",
        "--samples",
        "20000",
    ];
    let (x, y) = (fowler(&args), fowler(&args));
    assert_eq!(x.stdout, y.stdout);
    assert!(stdout(&x).contains("seed 7"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(fowler(&["--help"]).status.code(), Some(0));
    assert_eq!(fowler(&["--version"]).status.code(), Some(0));
    assert_eq!(fowler(&[]).status.code(), Some(1));
}
