//! Verification suites behind `fowler verify`.

use std::f64::consts::PI;

use fowler_core::greens::{free_space_coefficient, representation_formula, BallGreen};
use fowler_core::kernel::{
    eval_k, kernel_mass, kernel_mass_closed_form, periodize, singular_factor, DEFAULT_TABLE_TOL,
};
use fowler_core::radial::{from_profile, DEFAULT_SAMPLES_PER_PERIOD};
use fowler_core::solver::{solve, SolverOptions, Variant};
use fowler_core::verify::{
    check_bubble, check_extension_identity, estimate_hls_constant, estimate_hls_constant_at,
    fit_laplacian_coefficient, hls_constant, hls_normalization_integral, hls_test_quotient,
    pohozaev_sigma1, StandardBubble,
};
use fowler_core::{Error, Params};
use serde::Serialize;

use crate::solution::SolutionFile;
use crate::{fmt_float, CliError};

/// Tolerance of every quadrature-based identity check.
const IDENTITY_TOL: f64 = 1e-6;
const POHOZAEV_SPREAD: f64 = 1e-5;
const BUBBLE_DEVIATION: f64 = 1e-5;
const REPRESENTATION_TOL: f64 = 1e-4;
pub const DEFAULT_MC_SAMPLES: u64 = 16_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub comparison: Comparison,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            comparison: Comparison::AtMost,
            passed: measured <= bound,
            note: None,
        }
    }

    pub fn above(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            comparison: Comparison::Above,
            passed: measured > bound,
            note: None,
        }
    }

    fn failed(name: impl Into<String>, err: &dyn std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            bound: f64::NAN,
            comparison: Comparison::AtMost,
            passed: false,
            note: Some(err.to_string()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// `PASS <name>: measured <m> <= <bound>`
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let relation = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::Above => ">",
        };
        let mut line = if self.measured.is_nan() {
            format!("{verdict} {}", self.name)
        } else {
            format!(
                "{verdict} {}: measured {} {relation} {}",
                self.name,
                fmt_float(self.measured),
                fmt_float(self.bound)
            )
        };
        if let Some(note) = &self.note {
            line.push_str(&format!(" ({note})"));
        }
        line
    }
}

fn checked(name: &str, result: Result<Check, Error>) -> Check {
    result.unwrap_or_else(|e| Check::failed(name, &e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kernel,
    Pohozaev,
    Bubble,
    Extension,
    Hls,
    Greens,
    All,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteInputs {
    pub params: Option<Params>,
    pub period: Option<f64>,
    pub solution: Option<SolutionFile>,
    pub seed: u64,
    pub samples: Option<u64>,
}

pub fn run_suite(suite: Suite, inputs: &SuiteInputs) -> Result<Vec<Check>, CliError> {
    Ok(match suite {
        Suite::Kernel => kernel_suite(inputs),
        Suite::Pohozaev => pohozaev_suite(inputs)?,
        Suite::Bubble => bubble_suite(inputs),
        Suite::Extension => extension_suite(inputs),
        Suite::Hls => hls_suite(inputs)?,
        Suite::Greens => greens_suite(inputs),
        Suite::All => {
            let mut all = Vec::new();
            for s in [
                Suite::Kernel,
                Suite::Pohozaev,
                Suite::Bubble,
                Suite::Extension,
                Suite::Hls,
                Suite::Greens,
            ] {
                all.extend(run_suite(s, inputs)?);
            }
            all
        }
    })
}

fn pairs_or(inputs: &SuiteInputs, defaults: &[(u32, f64)]) -> Vec<Params> {
    match inputs.params {
        Some(p) => vec![p],
        None => defaults
            .iter()
            .map(|&(n, s)| Params::new(n, s).expect("default pairs are valid"))
            .collect(),
    }
}

fn label(p: &Params) -> String {
    format!("(n={}, sigma={})", p.n(), p.sigma())
}

fn kernel_suite(inputs: &SuiteInputs) -> Vec<Check> {
    let mut checks = Vec::new();
    for p in pairs_or(inputs, &[(1, 0.25), (2, 0.3), (3, 0.5), (5, 2.3)]) {
        let tag = label(&p);
        checks.push(checked(
            &format!("kernel {tag} evenness"),
            (|| {
                let mut worst: f64 = 0.0;
                for t in [1e-5, 1e-3, 0.5, 1.7, 2.5, 10.0, 25.0] {
                    worst = worst.max((eval_k(&p, t)? - eval_k(&p, -t)?).abs());
                }
                Ok(Check::at_most(format!("kernel {tag} evenness"), worst, 0.0))
            })(),
        ));
        checks.push(checked(
            &format!("kernel {tag} far-field slope"),
            (|| {
                let slope = (eval_k(&p, 30.0)?.ln() - eval_k(&p, 20.0)?.ln()) / 10.0;
                let rate = p.decay_rate();
                Ok(Check::at_most(
                    format!("kernel {tag} far-field slope rel. error"),
                    (slope + rate).abs() / rate,
                    5e-3,
                ))
            })(),
        ));
        checks.push(checked(
            &format!("kernel {tag} mass"),
            (|| {
                let exact = kernel_mass_closed_form(&p);
                let err = (kernel_mass(&p)? - exact).abs() / exact;
                Ok(Check::at_most(
                    format!("kernel {tag} mass vs closed form"),
                    err,
                    1e-10,
                ))
            })(),
        ));
        if let (Some(d), true) = (singular_factor(&p), p.sigma() < 0.5) {
            checks.push(checked(
                &format!("kernel {tag} near-zero law"),
                (|| {
                    let regular = |t: f64| -> Result<f64, Error> {
                        Ok(eval_k(&p, t)? - d[0] * t.powf(p.near_zero_power()))
                    };
                    let (a, b) = (regular(1e-6)?, regular(1e-7)?);
                    Ok(Check::at_most(
                        format!("kernel {tag} regular part drift 1e-6..1e-7"),
                        (a - b).abs() / b.abs().max(1.0),
                        1e-4,
                    ))
                })(),
            ));
        }
        checks.push(checked(
            &format!("kernel {tag} table mass"),
            (|| {
                let table = periodize(&p, 10.0, 512, DEFAULT_TABLE_TOL)?;
                let sum: f64 = table.lag_values().iter().sum::<f64>() * table.spacing();
                Ok(Check::at_most(
                    format!("kernel {tag} periodized table mass"),
                    (sum - table.mass()).abs() / table.mass(),
                    1e-12,
                ))
            })(),
        ));
    }
    checks
}

fn log_period_radii(period: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| (-period * (count - 1 - k) as f64 / (count - 1) as f64).exp())
        .collect()
}

fn pohozaev_field_check(
    name: &str,
    params: &Params,
    period: f64,
    psi: &fowler_core::solver::PeriodicProfile,
) -> Check {
    checked(
        name,
        (|| {
            let field = from_profile(
                params,
                psi,
                (-period - 1.0).exp(),
                DEFAULT_SAMPLES_PER_PERIOD,
            )?;
            let radii = log_period_radii(period, 201);
            let fit = fit_laplacian_coefficient(params, &field, &radii)?;
            let report = pohozaev_sigma1(params, &field, fit.coefficient, &radii)?;
            Ok(Check::at_most(
                format!("{name} spread over one log-period"),
                report.spread,
                POHOZAEV_SPREAD,
            )
            .with_note(format!("fitted c = {}", fmt_float(fit.coefficient))))
        })(),
    )
}

fn pohozaev_suite(inputs: &SuiteInputs) -> Result<Vec<Check>, CliError> {
    if let Some(file) = &inputs.solution {
        let params = file.params()?;
        if params.sigma() != 1.0 || params.n() < 3 {
            return Err(CliError::Usage(format!(
                "the pohozaev suite needs a sigma = 1, n >= 3 solution (got {})",
                label(&params)
            )));
        }
        let name = format!(
            "pohozaev {} T={} {}",
            label(&params),
            fmt_float(file.period),
            file.variant
        );
        return Ok(vec![pohozaev_field_check(
            &name,
            &params,
            file.period,
            &file.profile()?,
        )]);
    }
    let p = Params::new(3, 1.0).expect("valid");
    let mut checks = Vec::new();
    for period in [2.0, 20.0] {
        let name = format!("pohozaev {} T={}", label(&p), fmt_float(period));
        let check = match periodize(&p, period, 1024, DEFAULT_TABLE_TOL)
            .and_then(|t| solve(&t, &SolverOptions::default()))
        {
            Ok(sol) => {
                let mut c = pohozaev_field_check(
                    &format!("{name} {}", sol.variant),
                    &p,
                    period,
                    &sol.profile,
                );
                if period > 10.0 && sol.variant != Variant::Nonconstant {
                    c.passed = false;
                    c.note = Some("expected a nonconstant solution".into());
                }
                c
            }
            Err(e) => Check::failed(name, &e),
        };
        checks.push(check);
    }
    let bubble = StandardBubble { n: 3, lambda: 1.0 };
    checks.push(checked(
        "pohozaev standard bubble",
        (|| {
            let at_one = pohozaev_sigma1(&p, &bubble, bubble.coefficient(), &[1.0])?.values[0];
            Ok(Check::at_most(
                "pohozaev standard bubble |P(u, 1)|",
                at_one.abs(),
                1e-6,
            ))
        })(),
    ));
    Ok(checks)
}

fn bubble_suite(inputs: &SuiteInputs) -> Vec<Check> {
    pairs_or(inputs, &[(1, 0.25), (3, 1.0)])
        .into_iter()
        .map(|p| {
            let n = p.n() as usize;
            let sample = |x: f64| {
                let mut y = vec![0.0; n];
                y[0] = x;
                y
            };
            let name = format!("bubble {} deviation at |y| = 0, 1, 3", label(&p));
            checked(
                &name,
                (|| {
                    let dev = check_bubble(
                        &p,
                        1.0,
                        &vec![0.0; n],
                        &[sample(0.0), sample(1.0), sample(3.0)],
                        1e-10,
                    )?;
                    Ok(Check::at_most(name.clone(), dev, BUBBLE_DEVIATION))
                })(),
            )
        })
        .collect()
}

fn extension_suite(inputs: &SuiteInputs) -> Vec<Check> {
    pairs_or(inputs, &[(3, 0.5)])
        .into_iter()
        .map(|p| {
            let name = format!(
                "extension {} max rel. error on 3x3 (|x|, t) grid",
                label(&p)
            );
            checked(
                &name,
                (|| {
                    let mut worst: f64 = 0.0;
                    for r in [0.0, 1.0, 2.5] {
                        for t in [0.5, 1.0, 2.0] {
                            let mut x = vec![0.0; p.n() as usize];
                            x[0] = r;
                            worst = worst.max(check_extension_identity(&p, &x, t, 1e-10)?);
                        }
                    }
                    Ok(Check::at_most(name.clone(), worst, IDENTITY_TOL))
                })(),
            )
        })
        .collect()
}

/// Relative tolerance of the truncated-bubble double integrals.
pub const HLS_QUAD_TOL: f64 = 1e-7;

fn hls_suite(inputs: &SuiteInputs) -> Result<Vec<Check>, CliError> {
    let sigma = match inputs.params {
        Some(p) if p.n() != 1 || p.sigma() >= 0.5 => {
            return Err(CliError::Usage(format!(
                "the hls suite needs n = 1 and sigma < 1/2 (got {})",
                label(&p)
            )))
        }
        Some(p) => p.sigma(),
        None => 0.25,
    };
    let period = inputs.period.unwrap_or(10.0);
    let sharp = hls_constant(sigma);
    let mut checks = vec![
        checked(
            "hls constant",
            (|| {
                let (a, b) = (
                    estimate_hls_constant(sigma)?,
                    estimate_hls_constant_at(sigma, 1.0)?,
                );
                Ok(Check::at_most(
                    format!("hls sigma={sigma} estimates at t = 0 and t = 1 agree"),
                    (a - b).abs() / a,
                    1e-7,
                ))
            })(),
        ),
        checked(
            "hls closed form",
            (|| {
                let est = estimate_hls_constant(sigma)?;
                Ok(Check::at_most(
                    format!("hls sigma={sigma} estimate vs closed form"),
                    (est - sharp).abs() / sharp,
                    1e-9,
                ))
            })(),
        ),
        checked(
            "hls normalization",
            (|| {
                let err = (hls_normalization_integral(sigma)? - PI).abs();
                Ok(Check::at_most(
                    format!("hls sigma={sigma} normalization integral - pi"),
                    err,
                    1e-9,
                ))
            })(),
        ),
    ];
    for lambda in [1e-2, 1e-3] {
        let name = format!(
            "hls sigma={sigma} T={} lambda={lambda} J_T[f] - S",
            fmt_float(period)
        );
        checks.push(checked(
            &name,
            (|| {
                let excess = hls_test_quotient(sigma, period, lambda, HLS_QUAD_TOL)? - sharp;
                Ok(Check::above(name.clone(), excess, 0.0))
            })(),
        ));
    }
    Ok(checks)
}

/// Separation and midpoint of the near-diagonal Monte Carlo pair.
pub const NEAR_DIAGONAL_GAP: f64 = 0.02;

fn greens_suite(inputs: &SuiteInputs) -> Vec<Check> {
    let mut checks = Vec::new();
    let quarter = 1.0 / (4.0 * PI);
    checks.push(checked(
        "greens c(3,1)",
        (|| {
            let c = free_space_coefficient(3, 1)?;
            Ok(Check::at_most(
                "greens |c(3,1) - 1/(4 pi)|",
                (c - quarter).abs(),
                f64::EPSILON * quarter,
            ))
        })(),
    ));
    checks.push(checked(
        "greens representation",
        (|| {
            let u = |y: &[f64]| {
                1.0 + y[0] - 2.0 * y[1] + 3.0 * y[0] * y[2] + 2.0 * y[0] * y[0] - y[1] * y[1]
                    + y[2] * y[2]
            };
            let mut worst: f64 = 0.0;
            for x in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.5], [-0.6, 0.1, 0.2]] {
                worst = worst.max((representation_formula(3, &x, |_| -4.0, u, 24)? - u(&x)).abs());
            }
            Ok(Check::at_most(
                "greens representation formula, quadratic test function",
                worst,
                REPRESENTATION_TOL,
            ))
        })(),
    ));
    let samples = inputs.samples.unwrap_or(DEFAULT_MC_SAMPLES);
    checks.push(checked(
        "greens near-diagonal",
        (|| {
            let green = BallGreen::new(5, 2, samples)?;
            let half = 0.5 * NEAR_DIAGONAL_GAP;
            let est = green.iterated_monte_carlo(
                &[-half, 0.0, 0.0, 0.0, 0.0],
                &[half, 0.0, 0.0, 0.0, 0.0],
                inputs.seed,
                None,
            )?;
            let ratio = est.value * NEAR_DIAGONAL_GAP;
            let se = est.std_error * NEAR_DIAGONAL_GAP;
            let z = (ratio - green.free_space_coefficient()).abs() / se;
            Ok(
                Check::at_most("greens G_2 |x-y| vs c(5,2), in standard errors", z, 3.0).with_note(
                    format!(
                        "ratio {} +- {}, {} samples, seed {}",
                        fmt_float(ratio),
                        fmt_float(se),
                        samples,
                        inputs.seed
                    ),
                ),
            )
        })(),
    ));
    checks
}
