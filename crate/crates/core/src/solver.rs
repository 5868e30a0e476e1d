//! Maximization of the periodic quotient
//!
//! ```text
//! J_T[f] = ∫∫ K_T(t−s) f(t) f(s) ds dt / ‖f‖_q²,   q = 2n/(n+2σ),
//! ```
//!
//! whose positive critical points give solutions of `ψ = K_T ∗ ψ^p` through
//! `ψ ∝ f^{q−1}`.
//!
//! The iteration is the nonlinear power method `f ← (C f)^{1/(q−1)}`,
//! renormalized in `L^q`, with convex damping whenever a raw step would lower
//! `J`. The same machinery with `q` replaced by `p+1` handles the
//! subcritical quotients `J_{T,p}` used to approach the `n = 1` problem.

use rayon::prelude::*;

use crate::convolution::CirculantOperator;
use crate::error::{Error, Result};
use crate::kernel::{periodize, KernelTable};
use crate::params::Params;

/// A non-negative `T`-periodic function sampled at `t_j = jT/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicProfile {
    period: f64,
    values: Vec<f64>,
}

impl PeriodicProfile {
    pub fn new(period: f64, values: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "period must be positive (got {period})"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "a profile needs at least one sample".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "profile values must be finite and non-negative (found {bad})"
            )));
        }
        Ok(Self { period, values })
    }

    pub fn constant(period: f64, grid_size: usize, value: f64) -> Result<Self> {
        Self::new(period, vec![value; grid_size])
    }

    /// The smooth compactly supported bump `exp(1 − 1/(1 − x²))`,
    /// `x = (t − centre)/half_width`, wrapped periodically.
    pub fn bump(period: f64, grid_size: usize, centre: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && 2.0 * half_width <= period) {
            return Err(Error::InvalidArgument(format!(
                "bump half-width {half_width} must be positive and at most half the period {period}"
            )));
        }
        let h = period / grid_size as f64;
        let values = (0..grid_size)
            .map(|j| {
                let d = (j as f64 * h - centre + 0.5 * period).rem_euclid(period) - 0.5 * period;
                let x = d / half_width;
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(period, values)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Circular shift: sample `j` moves to `j + shift (mod N)`.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.len();
        let mut values = vec![0.0; n];
        for (j, v) in self.values.iter().enumerate() {
            values[(j + shift) % n] = *v;
        }
        Self {
            period: self.period,
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.period,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Constant,
    Nonconstant,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Constant => "constant",
            Variant::Nonconstant => "nonconstant",
        }
    }

    /// Classifies a profile by its relative oscillation `(max−min)/max`.
    pub fn classify(profile: &PeriodicProfile, threshold: f64) -> Self {
        let max = profile.max();
        if (max - profile.min()) / max > threshold {
            Variant::Nonconstant
        } else {
            Variant::Constant
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Stop when `max|f_{k+1} − f_k| / max f_k` falls below this.
    pub tol_fp: f64,
    pub max_iters: usize,
    /// `(max ψ − min ψ)/max ψ` above which a solution is non-constant.
    pub variant_threshold: f64,
    /// Number of subcritical stages `p_i = p_c (1 + 2^{-i})`, `i = 0..stages`,
    /// run before an `n = 1` critical solve. Zero disables the continuation.
    pub continuation_stages: usize,
    pub min_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_fp: 1e-10,
            max_iters: 100_000,
            variant_threshold: 1e-4,
            continuation_stages: 13,
            min_damping: 2f64.powi(-20),
        }
    }
}

/// A converged profile `ψ` solving `ψ = K_T ∗ ψ^power` on the grid.
#[derive(Debug, Clone)]
pub struct FowlerSolution {
    pub profile: PeriodicProfile,
    /// Value of the maximized quotient.
    pub j_value: f64,
    /// `max|ψ − C ψ^power| / max ψ`.
    pub el_residual: f64,
    pub iterations: usize,
    pub variant: Variant,
    /// Lagrange multiplier `c₀` in `c₀ f^{r−1} = C f` for the normalized
    /// maximizer `f`.
    pub multiplier: f64,
    /// Exponent of the nonlinearity in the equation `ψ` solves: `p_crit` for
    /// critical solves, `1/p` for the subcritical quotient `J_{T,p}`.
    pub power: f64,
    /// Accepted values of `J` along the iteration, in order.
    pub j_history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lp_norm(f: &[f64], r: f64, h: f64) -> f64 {
    (h * f.iter().map(|v| v.powf(r)).sum::<f64>()).powf(1.0 / r)
}

fn check_grid(table: &KernelTable, f: &PeriodicProfile) -> Result<()> {
    let same_period = ((table.period() - f.period()) / table.period()).abs() < 1e-14;
    if f.len() != table.grid_size() || !same_period {
        return Err(Error::InvalidArgument(format!(
            "profile grid (T = {}, N = {}) does not match the kernel table (T = {}, N = {})",
            f.period(),
            f.len(),
            table.period(),
            table.grid_size()
        )));
    }
    Ok(())
}

/// `∫∫ K_T f f / ‖f‖_r²` on the grid.
pub fn quotient(table: &KernelTable, f: &PeriodicProfile, norm_exponent: f64) -> Result<f64> {
    check_grid(table, f)?;
    if f.max() <= 0.0 {
        return Err(Error::ZeroProfile);
    }
    let op = CirculantOperator::new(table);
    let h = table.spacing();
    let cf = op.apply(f.values());
    let norm = lp_norm(f.values(), norm_exponent, h);
    Ok(h * dot(f.values(), &cf) / (norm * norm))
}

/// The critical quotient `J_T[f]` with `q = 2n/(n+2σ)`.
pub fn j_functional(table: &KernelTable, f: &PeriodicProfile) -> Result<f64> {
    quotient(table, f, table.params().q_norm())
}

/// `max|ψ − C ψ^power| / max ψ`, the discrete residual of `ψ = K_T ∗ ψ^power`.
pub fn el_residual(table: &KernelTable, psi: &PeriodicProfile, power: f64) -> Result<f64> {
    check_grid(table, psi)?;
    let op = CirculantOperator::new(table);
    Ok(residual_with(&op, psi.values(), power))
}

fn residual_with(op: &CirculantOperator, psi: &[f64], power: f64) -> f64 {
    let source: Vec<f64> = psi.iter().map(|v| v.powf(power)).collect();
    let image = op.apply(&source);
    let max = psi.iter().copied().fold(0.0, f64::max);
    psi.iter()
        .zip(&image)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / max
}

/// The exact constant solution `(∫K)^{-(n−2σ)/(4σ)}`.
pub fn constant_solution_value(params: &Params, mass: f64) -> f64 {
    mass.powf(-(params.nf() - 2.0 * params.sigma()) / (4.0 * params.sigma()))
}

struct Iterate {
    f: Vec<f64>,
    cf: Vec<f64>,
    j: f64,
    step: f64,
}

struct PowerMethod<'a> {
    op: &'a CirculantOperator,
    h: f64,
    opts: &'a SolverOptions,
    iterations: usize,
    history: Vec<f64>,
}

impl PowerMethod<'_> {
    fn normalized(&self, mut f: Vec<f64>, r: f64) -> Result<Vec<f64>> {
        let max = f.iter().copied().fold(0.0, f64::max);
        if !(max > 1e-300) {
            return Err(Error::Collapse);
        }
        // Pre-scale by the maximum so the power sum cannot overflow.
        for v in f.iter_mut() {
            *v /= max;
        }
        let norm = lp_norm(&f, r, self.h);
        for v in f.iter_mut() {
            *v /= norm;
        }
        Ok(f)
    }

    fn evaluate(&self, f: Vec<f64>) -> Iterate {
        let cf = self.op.apply(&f);
        let j = self.h * dot(&f, &cf);
        Iterate {
            f,
            cf,
            j,
            step: f64::INFINITY,
        }
    }

    /// Runs the normalized power iteration for the quotient with norm
    /// exponent `r` until the relative sup-norm step drops below `tol_fp`.
    fn run(&mut self, start: &[f64], r: f64) -> Result<Iterate> {
        let exponent = 1.0 / (r - 1.0);
        let mut cur = self.evaluate(self.normalized(start.to_vec(), r)?);
        self.history.push(cur.j);
        let slack = 1e-14;
        loop {
            if self.iterations >= self.opts.max_iters {
                return Err(Error::NonConvergence {
                    iterations: self.iterations,
                    step: cur.step,
                    best: Box::new(self.fallback(&cur, r)),
                });
            }
            self.iterations += 1;
            let raw: Vec<f64> = cur.cf.iter().map(|v| v.max(0.0).powf(exponent)).collect();
            let mut next = self.evaluate(self.normalized(raw, r)?);
            if next.j < cur.j * (1.0 - slack) {
                let mut theta = 0.5;
                loop {
                    let mixed: Vec<f64> = cur
                        .f
                        .iter()
                        .zip(&next.f)
                        .map(|(a, b)| (1.0 - theta) * a + theta * b)
                        .collect();
                    let trial = self.evaluate(self.normalized(mixed, r)?);
                    if trial.j >= cur.j * (1.0 - slack) {
                        next = trial;
                        break;
                    }
                    theta *= 0.5;
                    if theta < self.opts.min_damping {
                        return Err(self.stall(&cur, r));
                    }
                }
            }
            let max = cur.f.iter().copied().fold(0.0, f64::max);
            next.step = cur
                .f
                .iter()
                .zip(&next.f)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / max;
            self.history.push(next.j);
            cur = next;
            if cur.step < self.opts.tol_fp {
                return Ok(cur);
            }
        }
    }

    fn stall(&self, cur: &Iterate, r: f64) -> Error {
        Error::Stall {
            iterations: self.iterations,
            step: cur.step,
            best: Box::new(self.fallback(cur, r)),
        }
    }

    fn fallback(&self, cur: &Iterate, r: f64) -> FowlerSolution {
        let period = self.h * cur.f.len() as f64;
        self.finish(cur, r, 1.0 / (r - 1.0), period, self.opts.variant_threshold)
    }

    /// Turns the normalized maximizer into the solution `ψ = μ f^{r−1}` of
    /// `ψ = C ψ^power`, with `c₀` from the least-squares fit of
    /// `c₀ f^{r−1} ≈ C f` and `μ = c₀^{-1/(power−1)}`.
    fn finish(
        &self,
        it: &Iterate,
        r: f64,
        power: f64,
        period: f64,
        threshold: f64,
    ) -> FowlerSolution {
        let g: Vec<f64> = it.f.iter().map(|v| v.powf(r - 1.0)).collect();
        let multiplier = dot(&g, &it.cf) / dot(&g, &g);
        let scale = if (power - 1.0).abs() < 1e-12 {
            1.0 / g.iter().copied().fold(0.0, f64::max)
        } else {
            multiplier.powf(-1.0 / (power - 1.0))
        };
        let mut psi: Vec<f64> = g.iter().map(|v| scale * v).collect();
        // Gauge: put the first maximum at index N/2.
        let n = psi.len();
        let argmax = psi
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > psi[best] { i } else { best });
        psi.rotate_right((n / 2 + n - argmax) % n);
        let el_residual = residual_with(self.op, &psi, power);
        let profile = PeriodicProfile {
            period,
            values: psi,
        };
        let variant = Variant::classify(&profile, threshold);
        FowlerSolution {
            profile,
            j_value: it.j,
            el_residual,
            iterations: self.iterations,
            variant,
            multiplier,
            power,
            j_history: self.history.clone(),
        }
    }
}

fn validate_init(table: &KernelTable, init: &PeriodicProfile) -> Result<()> {
    check_grid(table, init)?;
    if init.max() <= 0.0 {
        return Err(Error::ZeroProfile);
    }
    Ok(())
}

/// Maximizes `J_T` from `init`. For `n = 1` the critical solve is preceded by
/// the warm-started subcritical continuation configured in `opts`.
pub fn maximize(
    table: &KernelTable,
    init: &PeriodicProfile,
    opts: &SolverOptions,
) -> Result<FowlerSolution> {
    validate_init(table, init)?;
    let params = *table.params();
    let op = CirculantOperator::new(table);
    let mut pm = PowerMethod {
        op: &op,
        h: table.spacing(),
        opts,
        iterations: 0,
        history: Vec::new(),
    };
    let mut start = init.values().to_vec();
    if params.n() == 1 {
        let critical = subcritical_threshold(&params);
        for i in 0..opts.continuation_stages {
            let p = critical * (1.0 + 2f64.powi(-(i as i32)));
            start = pm.run(&start, p + 1.0)?.f;
        }
        // The stages are warm starts only; the reported history is the
        // critical ascent.
        pm.history.clear();
    }
    let q = params.q_norm();
    let it = pm.run(&start, q)?;
    Ok(pm.finish(
        &it,
        q,
        params.p_crit(),
        table.period(),
        opts.variant_threshold,
    ))
}

/// `(1−2σ)/(1+2σ)`: the exponent at which `J_{T,p}` becomes the critical
/// quotient for `n = 1`.
pub fn subcritical_threshold(params: &Params) -> f64 {
    (1.0 - 2.0 * params.sigma()) / (1.0 + 2.0 * params.sigma())
}

/// Maximizes the `n = 1` subcritical quotient with norm exponent `p + 1`.
pub fn solve_subcritical(
    table: &KernelTable,
    p: f64,
    init: &PeriodicProfile,
    opts: &SolverOptions,
) -> Result<FowlerSolution> {
    let params = *table.params();
    if params.n() != 1 {
        return Err(Error::Precondition(format!(
            "the subcritical quotient is defined for n = 1 (got n = {})",
            params.n()
        )));
    }
    let critical = subcritical_threshold(&params);
    if !(p > critical) {
        return Err(Error::Precondition(format!(
            "p = {p} must exceed the critical value {critical}"
        )));
    }
    validate_init(table, init)?;
    let op = CirculantOperator::new(table);
    let mut pm = PowerMethod {
        op: &op,
        h: table.spacing(),
        opts,
        iterations: 0,
        history: Vec::new(),
    };
    let it = pm.run(init.values(), p + 1.0)?;
    Ok(pm.finish(
        &it,
        p + 1.0,
        1.0 / p,
        table.period(),
        opts.variant_threshold,
    ))
}

/// Runs [`maximize`] from the constant and from a bump of width `T/10`
/// centred at `T/2`, and keeps the larger `J`. Ties go to the constant.
pub fn solve(table: &KernelTable, opts: &SolverOptions) -> Result<FowlerSolution> {
    let period = table.period();
    let n = table.grid_size();
    let flat = maximize(table, &PeriodicProfile::constant(period, n, 1.0)?, opts)?;
    let bump = maximize(
        table,
        &PeriodicProfile::bump(period, n, 0.5 * period, 0.05 * period)?,
        opts,
    )?;
    if bump.j_value > flat.j_value * (1.0 + 1e-12) {
        Ok(bump)
    } else {
        Ok(flat)
    }
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub period: f64,
    /// `J_T[1]` on the grid.
    pub j_const: f64,
    pub j_max: f64,
    pub variant: Variant,
    pub el_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ThresholdScan {
    pub rows: Vec<ScanRow>,
}

impl ThresholdScan {
    /// Indices `i` where row `i` is constant and row `i+1` is not.
    pub fn transitions(&self) -> Vec<usize> {
        self.rows
            .windows(2)
            .enumerate()
            .filter(|(_, w)| {
                w[0].variant == Variant::Constant && w[1].variant == Variant::Nonconstant
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// First bracket `[a, b]` where the variant flips, and its midpoint.
    pub fn threshold(&self) -> Result<(f64, f64, f64)> {
        let i = *self.transitions().first().ok_or(Error::BracketNotFound)?;
        let (a, b) = (self.rows[i].period, self.rows[i + 1].period);
        Ok((a, b, 0.5 * (a + b)))
    }
}

/// Solves at every period in `periods` (in parallel) and records `J_T[1]`
/// alongside the maximum.
pub fn scan_threshold(
    params: &Params,
    periods: &[f64],
    grid_size: usize,
    table_tol: f64,
    opts: &SolverOptions,
) -> Result<ThresholdScan> {
    if periods.is_empty() {
        return Err(Error::InvalidArgument("the period range is empty".into()));
    }
    if periods.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "periods must be strictly increasing".into(),
        ));
    }
    let rows = periods
        .par_iter()
        .map(|&period| {
            let table = periodize(params, period, grid_size, table_tol)?;
            let j_const =
                j_functional(&table, &PeriodicProfile::constant(period, grid_size, 1.0)?)?;
            let sol = solve(&table, opts)?;
            Ok(ScanRow {
                period,
                j_const,
                j_max: sol.j_value,
                variant: sol.variant,
                el_residual: sol.el_residual,
                iterations: sol.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdScan { rows })
}

/// `count` points spaced evenly in `ln T` from `t_min` to `t_max` inclusive.
pub fn log_grid(t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && count >= 2) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < t_min < t_max and at least two steps (got {t_min}, {t_max}, {count})"
        )));
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    grid[0] = t_min;
    grid[count - 1] = t_max;
    Ok(grid)
}
