//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Criteria 1, 2 and 7 contain clauses that cannot hold (see README, "Known
//! failing criteria"). They are evaluated as stated and reported as FAIL; the
//! process exits nonzero only if a different criterion fails or one of those
//! three starts passing.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fowler_core::greens::{free_space_coefficient, representation_formula, BallGreen};
use fowler_core::kernel::{eval_k, kernel_mass_closed_form, periodize, DEFAULT_TABLE_TOL};
use fowler_core::radial::{from_profile, DEFAULT_SAMPLES_PER_PERIOD};
use fowler_core::solver::{
    constant_solution_value, j_functional, log_grid, maximize, scan_threshold, solve,
    PeriodicProfile, SolverOptions, ThresholdScan, Variant,
};
use fowler_core::verify::{
    check_bubble, check_extension_identity, fit_laplacian_coefficient, hls_constant,
    hls_normalization_integral, hls_test_quotient, pohozaev_sigma1, StandardBubble,
};
use fowler_core::{Error, Params};

const EXPECTED_FAILURES: [usize; 3] = [1, 2, 7];

/// The five parameter pairs of criteria 1 and 2, including the invalid (3, 1.5).
const KERNEL_PAIRS: [(u32, f64); 5] = [(1, 0.25), (2, 0.3), (3, 0.5), (3, 1.5), (5, 2.3)];

struct Report {
    details: Vec<String>,
    passed: bool,
}

impl Report {
    fn new() -> Self {
        Self {
            details: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, ok: bool, text: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {text}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, e: &Error) {
        self.check(false, format!("{what}: {e}"));
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(
            took < limit,
            format!(
                "runtime {:.2} s < {} s",
                took.as_secs_f64(),
                limit.as_secs()
            ),
        );
    }
}

fn params_or_report(report: &mut Report, n: u32, sigma: f64) -> Option<Params> {
    match Params::new(n, sigma) {
        Ok(p) => Some(p),
        Err(e) => {
            report.error(&format!("(n={n}, sigma={sigma})"), &e);
            None
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn kernel_laws() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    for (n, sigma) in KERNEL_PAIRS {
        let Some(p) = params_or_report(&mut r, n, sigma) else {
            continue;
        };
        let tag = format!("(n={n}, sigma={sigma})");
        let outcome = (|| -> Result<(), Error> {
            let mut even = true;
            for t in [1e-5, 1e-3, 0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 5.0, 20.0, 30.0] {
                even &= eval_k(&p, t)?.to_bits() == eval_k(&p, -t)?.to_bits();
            }
            r.check(even, format!("{tag} evenness bit-exact"));

            // least-squares slope of ln K on 21 points of [20, 30]
            let ts: Vec<f64> = (0..=20).map(|i| 20.0 + 0.5 * i as f64).collect();
            let ys = ts
                .iter()
                .map(|&t| eval_k(&p, t).map(f64::ln))
                .collect::<Result<Vec<_>, _>>()?;
            let (tm, ym) = (ts.iter().sum::<f64>() / 21.0, ys.iter().sum::<f64>() / 21.0);
            let slope = ts
                .iter()
                .zip(&ys)
                .map(|(t, y)| (t - tm) * (y - ym))
                .sum::<f64>()
                / ts.iter().map(|t| (t - tm).powi(2)).sum::<f64>();
            let target = -p.decay_rate();
            r.check(
                rel(slope, target) < 5e-3,
                format!(
                    "{tag} far-field slope {slope:.8} vs {target}: rel {:.2e}",
                    rel(slope, target)
                ),
            );

            if sigma < 0.5 {
                let ratios = [1e-3, 1e-4, 1e-5]
                    .map(|t: f64| eval_k(&p, t).map(|k| k / t.powf(p.near_zero_power())));
                let ratios = ratios.into_iter().collect::<Result<Vec<_>, _>>()?;
                let (lo, hi) = ratios
                    .iter()
                    .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
                let spread = (hi - lo) / lo;
                r.check(
                    spread < 0.01,
                    format!(
                        "{tag} K(t)/t^(2sigma-1) at 1e-3, 1e-4, 1e-5 = {ratios:.6?}: spread {:.3}%",
                        100.0 * spread
                    ),
                );
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            r.error(&tag, &e);
        }
    }
    r.runtime(start, Duration::from_secs(10));
    r
}

fn constant_branch() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    let opts = SolverOptions::default();
    for (n, sigma) in KERNEL_PAIRS {
        let Some(p) = params_or_report(&mut r, n, sigma) else {
            continue;
        };
        let mass = kernel_mass_closed_form(&p);
        let psi0 = constant_solution_value(&p, mass);
        for period in [5.0, 50.0] {
            let tag = format!("(n={n}, sigma={sigma}) T={period}");
            let outcome = (|| -> Result<(), Error> {
                let table = periodize(&p, period, 1024, DEFAULT_TABLE_TOL)?;
                let one = PeriodicProfile::constant(period, 1024, 1.0)?;
                let sol = maximize(&table, &one, &opts)?;
                let dev = sol
                    .profile
                    .values()
                    .iter()
                    .map(|&v| rel(v, psi0))
                    .fold(0.0, f64::max);
                r.check(
                    dev < 1e-8,
                    format!("{tag} psi = psi0 = {psi0:.12}: max rel dev {dev:.2e}"),
                );
                r.check(
                    sol.el_residual < 1e-10,
                    format!("{tag} EL residual {:.2e}", sol.el_residual),
                );
                let j1 = j_functional(&table, &one)?;
                let want = mass * period.powf(-2.0 * sigma / n as f64);
                r.check(
                    rel(j1, want) < 1e-8,
                    format!("{tag} J_T[1] rel err {:.2e}", rel(j1, want)),
                );
                Ok(())
            })();
            if let Err(e) = outcome {
                r.error(&tag, &e);
            }
        }
    }
    r.runtime(start, Duration::from_secs(30));
    r
}

const SCAN_PAIRS: [(u32, f64); 2] = [(1, 0.25), (3, 1.0)];

fn scan_periods() -> Vec<f64> {
    log_grid(0.5, 100.0, 20).expect("valid range")
}

fn threshold_scans(grid: usize) -> Vec<Result<ThresholdScan, Error>> {
    SCAN_PAIRS
        .iter()
        .map(|&(n, s)| {
            let p = Params::new(n, s)?;
            scan_threshold(
                &p,
                &scan_periods(),
                grid,
                DEFAULT_TABLE_TOL,
                &SolverOptions::default(),
            )
        })
        .collect()
}

fn symmetry_breaking(scans: &[Result<ThresholdScan, Error>], elapsed: Duration) -> Report {
    let mut r = Report::new();
    for ((n, sigma), scan) in SCAN_PAIRS.iter().zip(scans) {
        let tag = format!("(n={n}, sigma={sigma})");
        let scan = match scan {
            Ok(s) => s,
            Err(e) => {
                r.error(&tag, e);
                continue;
            }
        };
        let flips = scan
            .rows
            .windows(2)
            .filter(|w| w[0].variant != w[1].variant)
            .count();
        let bracket = scan
            .threshold()
            .map(|(a, b, _)| format!("[{a:.4}, {b:.4}]"))
            .unwrap_or_default();
        r.check(
            flips == 1 && scan.transitions().len() == 1,
            format!(
                "{tag} variant flips {flips} time(s), constant to nonconstant {} {bracket}",
                scan.transitions().len()
            ),
        );
        let last = scan.rows.last().expect("20 rows");
        let gain = (last.j_max - last.j_const) / last.j_const;
        r.check(
            last.variant == Variant::Nonconstant,
            format!("{tag} T={} variant {}", last.period, last.variant),
        );
        r.check(
            gain >= 1e-4,
            format!(
                "{tag} T={} (J_max - J_const)/J_const = {gain:.4e}",
                last.period
            ),
        );
        r.check(
            last.el_residual < 1e-8,
            format!(
                "{tag} T={} EL residual {:.2e}",
                last.period, last.el_residual
            ),
        );
    }
    r.check(
        elapsed < Duration::from_secs(300),
        format!("runtime {:.2} s < 300 s", elapsed.as_secs_f64()),
    );
    r
}

fn pohozaev() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    let p = Params::new(3, 1.0).expect("valid");
    let opts = SolverOptions::default();
    for (period, want) in [(2.0, Variant::Constant), (20.0, Variant::Nonconstant)] {
        let tag = format!("T={period}");
        let outcome = (|| -> Result<(), Error> {
            let sol = solve(&periodize(&p, period, 1024, DEFAULT_TABLE_TOL)?, &opts)?;
            r.check(
                sol.variant == want,
                format!("{tag} solution is {}", sol.variant),
            );
            let field = from_profile(
                &p,
                &sol.profile,
                (-period - 1.0).exp(),
                DEFAULT_SAMPLES_PER_PERIOD,
            )?;
            let radii: Vec<f64> = (0..=200)
                .map(|k| (-period * (200 - k) as f64 / 200.0).exp())
                .collect();
            let fit = fit_laplacian_coefficient(&p, &field, &radii)?;
            let rep = pohozaev_sigma1(&p, &field, fit.coefficient, &radii)?;
            r.check(
                rep.spread < 1e-5,
                format!(
                    "{tag} P spread over one log-period {:.3e} (c = {:.9})",
                    rep.spread, fit.coefficient
                ),
            );
            Ok(())
        })();
        if let Err(e) = outcome {
            r.error(&tag, &e);
        }
    }
    let bubble = StandardBubble { n: 3, lambda: 1.0 };
    match pohozaev_sigma1(&p, &bubble, bubble.coefficient(), &[1.0]) {
        Ok(rep) => r.check(
            rep.values[0].abs() < 1e-6,
            format!("standard bubble |P(u, 1)| = {:.3e}", rep.values[0].abs()),
        ),
        Err(e) => r.error("standard bubble", &e),
    }
    r.runtime(start, Duration::from_secs(60));
    r
}

fn on_axis(n: u32, x: f64) -> Vec<f64> {
    let mut v = vec![0.0; n as usize];
    v[0] = x;
    v
}

fn bubble_identity() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    for (n, sigma) in SCAN_PAIRS {
        let p = Params::new(n, sigma).expect("valid");
        let points = [on_axis(n, 0.0), on_axis(n, 1.0), on_axis(n, 3.0)];
        match check_bubble(&p, 1.0, &on_axis(n, 0.0), &points, 1e-10) {
            Ok(dev) => r.check(
                dev < 1e-5,
                format!("(n={n}, sigma={sigma}) max rel deviation {dev:.3e}"),
            ),
            Err(e) => r.error(&format!("(n={n}, sigma={sigma})"), &e),
        }
    }
    r.runtime(start, Duration::from_secs(60));
    r
}

fn extension_identity() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    let p = Params::new(3, 0.5).expect("valid");
    let mut worst: f64 = 0.0;
    for radius in [0.0, 1.0, 2.5] {
        for t in [0.5, 1.0, 2.0] {
            match check_extension_identity(&p, &on_axis(3, radius), t, 1e-10) {
                Ok(err) => worst = worst.max(err),
                Err(e) => r.error(&format!("|x|={radius} t={t}"), &e),
            }
        }
    }
    r.check(
        worst < 1e-6,
        format!("max rel error on |x| in {{0, 1, 2.5}} x t in {{0.5, 1, 2}}: {worst:.3e}"),
    );
    r.runtime(start, Duration::from_secs(30));
    r
}

fn hls_inequality() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    let sigma = 0.25;
    let sharp = hls_constant(sigma);
    let mut excess = Vec::new();
    for lambda in [1e-2, 1e-3] {
        match hls_test_quotient(sigma, 10.0, lambda, 1e-7) {
            Ok(j) => {
                r.check(
                    j - sharp > 0.0,
                    format!("lambda={lambda}: J_T[f] - S = {:.6}", j - sharp),
                );
                excess.push(j - sharp);
            }
            Err(e) => r.error(&format!("lambda={lambda}"), &e),
        }
    }
    if let [coarse, fine] = excess[..] {
        r.check(
            fine > coarse,
            format!("excess increases as lambda decreases: {coarse:.6} -> {fine:.6}"),
        );
    }
    match hls_normalization_integral(sigma) {
        Ok(v) => r.check(
            (v - PI).abs() < 1e-9,
            format!("normalization integral - pi = {:.2e}", v - PI),
        ),
        Err(e) => r.error("normalization integral", &e),
    }
    r.runtime(start, Duration::from_secs(60));
    r
}

fn green_functions() -> Report {
    let start = Instant::now();
    let mut r = Report::new();
    let u = |y: &[f64]| {
        1.0 + y[0] - 2.0 * y[1] + 3.0 * y[0] * y[2] + 2.0 * y[0] * y[0] - y[1] * y[1] + y[2] * y[2]
    };
    let mut worst: f64 = 0.0;
    for x in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [-0.6, 0.1, 0.2]] {
        match representation_formula(3, &x, |_| -4.0, u, 24) {
            Ok(v) => worst = worst.max((v - u(&x)).abs()),
            Err(e) => r.error("representation formula", &e),
        }
    }
    r.check(
        worst < 1e-4,
        format!("representation formula on a quadratic: max error {worst:.3e}"),
    );

    let gap = 0.02;
    let mc = BallGreen::new(5, 2, 16_000_000).and_then(|g| {
        g.iterated_monte_carlo(&on_axis(5, -0.5 * gap), &on_axis(5, 0.5 * gap), 1, None)
            .map(|e| (g, e))
    });
    match mc {
        Ok((g, est)) => {
            let (ratio, se) = (est.value * gap, est.std_error * gap);
            let z = (ratio - g.free_space_coefficient()).abs() / se;
            r.check(
                z <= 3.0,
                format!(
                    "G_2 |x-y| at |x-y|={gap}: {ratio:.6} +- {se:.6} vs c(5,2) = {:.7} ({z:.2} SE)",
                    g.free_space_coefficient()
                ),
            );
        }
        Err(e) => r.error("Monte Carlo", &e),
    }

    match free_space_coefficient(3, 1) {
        Ok(c) => {
            let quarter = 1.0 / (4.0 * PI);
            r.check(
                (c - quarter).abs() <= f64::EPSILON * quarter,
                format!("c(3,1) - 1/(4 pi) = {:e}", c - quarter),
            );
        }
        Err(e) => r.error("c(3,1)", &e),
    }
    r.runtime(start, Duration::from_secs(120));
    r
}

fn grid_convergence(fine: &[Result<ThresholdScan, Error>]) -> Report {
    let mut r = Report::new();
    let coarse = threshold_scans(512);
    for (((n, sigma), a), b) in SCAN_PAIRS.iter().zip(&coarse).zip(fine) {
        let tag = format!("(n={n}, sigma={sigma})");
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let mut worst: f64 = 0.0;
                for (x, y) in a.rows.iter().zip(&b.rows) {
                    worst = worst
                        .max(rel(x.j_const, y.j_const))
                        .max(rel(x.j_max, y.j_max));
                }
                r.check(worst < 1e-7, format!("{tag} J_const and J_max over 20 periods, N 512 -> 1024: max rel change {worst:.2e}"));
            }
            (Err(e), _) | (_, Err(e)) => r.error(&tag, e),
        }
    }
    r
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_fowler"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code(), out.stdout)
}

fn determinism() -> Report {
    let mut r = Report::new();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| {
        dir.path()
            .join(name)
            .to_str()
            .expect("utf-8 path")
            .to_owned()
    };
    let solution = path("sol.json");
    let commands: Vec<(&str, Vec<String>, Option<&str>)> = vec![
        (
            "solve",
            vec![
                "solve",
                "--n",
                "1",
                "--sigma",
                "0.25",
                "--period",
                "40",
                "--out",
                "{out}.json",
            ],
            Some("json"),
        ),
        (
            "scan",
            vec![
                "scan",
                "--n",
                "3",
                "--sigma",
                "1",
                "--t-min",
                "1",
                "--t-max",
                "40",
                "--steps",
                "8",
                "--out",
                "{out}.csv",
            ],
            Some("csv"),
        ),
        (
            "verify",
            vec![
                "verify",
                "--suite",
                "all",
                "--seed",
                "7",
                "--samples",
                "400000",
                "--out",
                "{out}.json",
            ],
            Some("json"),
        ),
        (
            "reconstruct",
            vec![
                "reconstruct",
                "--solution",
                &solution,
                "--r-min",
                "1e-6",
                "--out",
                "{out}.csv",
            ],
            Some("csv"),
        ),
        (
            "kernel-dump",
            vec![
                "kernel-dump",
                "--n",
                "2",
                "--sigma",
                "0.3",
                "--period",
                "6",
                "--grid",
                "256",
            ],
            None,
        ),
    ]
    .into_iter()
    .map(|(name, args, ext)| (name, args.into_iter().map(str::to_owned).collect(), ext))
    .collect();
    let (code, _) = run_cli(&[
        "solve", "--n", "3", "--sigma", "1", "--period", "20", "--out", &solution,
    ]);
    if code != Some(0) {
        r.check(false, "preparing the reconstruct input failed".into());
        return r;
    }
    for (name, args, ext) in &commands {
        let mut runs = Vec::new();
        for run in 0..2 {
            let target = path(&format!("{name}-{run}"));
            let concrete: Vec<String> = args.iter().map(|a| a.replace("{out}", &target)).collect();
            let refs: Vec<&str> = concrete.iter().map(String::as_str).collect();
            let (code, stdout) = run_cli(&refs);
            let file =
                ext.map(|e| std::fs::read(Path::new(&format!("{target}.{e}"))).unwrap_or_default());
            runs.push((code, stdout, file));
        }
        let same = runs[0] == runs[1];
        let ok = same && runs[0].0 == Some(0) && runs[0].2.as_ref().map_or(true, |f| !f.is_empty());
        r.check(
            ok,
            format!(
                "{name}: exit {:?}, stdout and output file identical across two runs: {same}",
                runs[0].0
            ),
        );
    }
    r
}

type Criterion<'a> = (usize, &'static str, Box<dyn FnOnce() -> Report + 'a>);

fn main() -> ExitCode {
    // Criteria 3 and 9 share the N = 1024 scans.
    let scan_start = Instant::now();
    let fine_scans = threshold_scans(1024);
    let scan_time = scan_start.elapsed();

    let criteria: Vec<Criterion> = vec![
        (1, "kernel laws", Box::new(kernel_laws)),
        (2, "constant-branch exactness", Box::new(constant_branch)),
        (
            3,
            "symmetry breaking in the period scan",
            Box::new(|| symmetry_breaking(&fine_scans, scan_time)),
        ),
        (4, "Pohozaev invariance", Box::new(pohozaev)),
        (
            5,
            "bubble classification identity",
            Box::new(bubble_identity),
        ),
        (6, "extension identity", Box::new(extension_identity)),
        (7, "HLS strict inequality", Box::new(hls_inequality)),
        (8, "Green-function checks", Box::new(green_functions)),
        (
            9,
            "grid convergence",
            Box::new(|| grid_convergence(&fine_scans)),
        ),
        (10, "determinism", Box::new(determinism)),
    ];

    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let report = run();
        for line in &report.details {
            println!("    [{id}] {line}");
        }
        let expected_failure = EXPECTED_FAILURES.contains(&id);
        let verdict = if report.passed { "PASS" } else { "FAIL" };
        let tag = match (report.passed, expected_failure) {
            (false, true) => " (known unattainable clause, see README)",
            (true, true) => " (unexpected pass: update EXPECTED_FAILURES)",
            _ => "",
        };
        println!("{verdict} criterion {id}: {title}{tag}");
        if report.passed == expected_failure {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: outcomes match expectations (criteria {EXPECTED_FAILURES:?} fail as documented)");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
