//! The one-dimensional kernel `K` obtained by integrating the Riesz potential
//! `|x−y|^{2σ−n}` over spheres in Emden–Fowler coordinates, its periodization
//! `K_T`, and the Riesz and Poisson kernels in `ℝⁿ`.
//!
//! For `n = 1`
//!
//! ```text
//! K(t) = |2 sinh(t/2)|^{2σ−1} + (2 cosh(t/2))^{2σ−1}
//! ```
//!
//! and for `n ≥ 2`, with `a = (n−2σ)/2`,
//!
//! ```text
//! K(t) = 2^{-a} ω_{n−2} ∫_0^π sin^{n−2}θ (cosh t − cos θ)^{-a} dθ.
//! ```
//!
//! Near the origin `K(t) = |t|^{2σ−1} S(t) + R(t)` with `S`, `R` smooth and
//! even (a logarithm replaces the power when `σ − 1/2` is an integer), and
//! `K(t) ~ ω_{n−1} e^{-a|t|}` at infinity.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::quadrature::{power_substitution, Adaptive};
use crate::special::{gamma, riemann_zeta, sphere_area};

/// Relative accuracy targeted by every kernel evaluation.
pub const EVAL_REL_TOL: f64 = 1e-13;
/// Default absolute truncation tolerance of the periodization image sums.
pub const DEFAULT_TABLE_TOL: f64 = 1e-9;
/// Hard cap on the images summed per lag.
pub const MAX_IMAGES: usize = 10_000;

/// Beyond this `|t|` the `n ≥ 2` kernel is summed from its `1/cosh t` series.
const SERIES_CUTOFF: f64 = 2.0;

/// Evaluates `K(t)` for `t ≠ 0`. The result depends on `|t|` only.
pub fn eval_k(params: &Params, t: f64) -> Result<f64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::Domain(format!(
            "K is evaluated only at finite t ≠ 0 (got {t})"
        )));
    }
    let t = t.abs();
    if params.n() == 1 {
        return Ok(eval_line(params, t));
    }
    if t >= SERIES_CUTOFF {
        Ok(eval_far_series(params, t))
    } else {
        eval_angular_quadrature(params, t)
    }
}

fn eval_line(params: &Params, t: f64) -> f64 {
    let alpha = params.near_zero_power();
    let (ln_sinh, ln_cosh) = if t > 1.0 {
        let e = (-t).exp();
        (0.5 * t + (-e).ln_1p(), 0.5 * t + e.ln_1p())
    } else {
        ((2.0 * (0.5 * t).sinh()).ln(), (2.0 * (0.5 * t).cosh()).ln())
    };
    (alpha * ln_sinh).exp() + (alpha * ln_cosh).exp()
}

/// Expands `(cosh t − cos θ)^{-a}` in powers of `cos θ / cosh t` and
/// integrates term by term; odd powers vanish and the even ones give Beta
/// functions.
fn eval_far_series(params: &Params, t: f64) -> f64 {
    let a = params.decay_rate();
    let half_dim = 0.5 * (params.nf() - 1.0);
    let ln_cosh = t + (-2.0 * t).exp().ln_1p() - std::f64::consts::LN_2;
    let inv_z2 = (-2.0 * ln_cosh).exp();
    let mut coeff = crate::special::beta(half_dim, 0.5);
    let mut power = 1.0;
    let mut sum = 0.0;
    for k in 0..200 {
        let term = coeff * power;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        let kf = k as f64;
        coeff *= (a + 2.0 * kf) * (a + 2.0 * kf + 1.0) / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0))
            * (kf + 0.5)
            / (half_dim + kf + 0.5);
        power *= inv_z2;
    }
    let prefactor = sphere_area(params.n() - 2) * (-a * (std::f64::consts::LN_2 + ln_cosh)).exp();
    prefactor * sum
}

/// `cosh t − cos θ` is written as `2 sinh²(t/2) + 2 sin²(θ/2)`, which has no
/// cancellation as both `t` and `θ` approach zero. The integrand peaks on
/// the scale `θ ~ t`, so the break points are geometric in `t`.
fn eval_angular_quadrature(params: &Params, t: f64) -> Result<f64> {
    let a = params.decay_rate();
    let dim_power = (params.n() - 2) as i32;
    let sh = (0.5 * t).sinh();
    let base = 2.0 * sh * sh;
    let integrand = |theta: f64| {
        let s = (0.5 * theta).sin();
        theta.sin().powi(dim_power) * (base + 2.0 * s * s).powf(-a)
    };
    let mut breaks = vec![0.0];
    let mut b = t;
    while b < 1.0 {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(1.0);
    breaks.push(PI);
    let res = Adaptive::new(0.0, EVAL_REL_TOL).integrate_breaks(integrand, &breaks)?;
    Ok((-a * std::f64::consts::LN_2).exp() * sphere_area(params.n() - 2) * res.value)
}

/// How `K` behaves at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NearZeroLaw {
    /// `K(t) ~ S₀ |t|^{exponent}` with a negative exponent `2σ−1`.
    Power(f64),
    /// `K(t) ~ −C ln|t|` (σ = 1/2).
    Log,
    /// `K` is bounded and Hölder continuous (σ > 1/2).
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelAsymptotics {
    pub near_zero: NearZeroLaw,
    pub decay_rate: f64,
}

pub fn k_asymptotics(params: &Params) -> KernelAsymptotics {
    let s = params.sigma();
    let near_zero = if s < 0.5 {
        NearZeroLaw::Power(params.near_zero_power())
    } else if s == 0.5 {
        NearZeroLaw::Log
    } else {
        NearZeroLaw::Bounded
    };
    KernelAsymptotics {
        near_zero,
        decay_rate: params.decay_rate(),
    }
}

/// Even-order derivatives `[S(0), S″(0), S⁗(0), S⁽⁶⁾(0)]` of the smooth
/// factor `S` in `K(t) = |t|^{2σ−1} S(t) + R(t)`. `None` when the singular
/// part carries a logarithm.
///
/// Expanding `(cosh t − cos θ)^{−a}` in `v = 1 − cos θ` gives
/// `S(t) = S(0) Σ_j r_j t^{2j} (sinh(t/2)/(t/2))^{2σ−1+2j}` with explicit
/// ratios `r_j`; only `j = 0` survives for `n = 1` and `n = 3`.
pub fn singular_factor(params: &Params) -> Option<[f64; 4]> {
    if params.has_log_singularity() {
        return None;
    }
    let n = params.nf();
    let s = params.sigma();
    let s0 = PI.powf(0.5 * (n - 1.0)) * gamma(0.5 - s) / gamma(params.decay_rate());
    // ln(sinh u / u) in powers of t², u = t/2.
    let log_sinhc = [0.0, 1.0 / 24.0, -1.0 / 2880.0, 1.0 / 181_440.0];
    let mut series = [0.0; 4];
    let mut ratio = 1.0;
    for j in 0..4 {
        let jf = j as f64;
        let exponent = 2.0 * s - 1.0 + 2.0 * jf;
        let factor = exp_series(log_sinhc.map(|c| c * exponent));
        for k in 0..4 - j {
            series[k + j] += ratio * factor[k];
        }
        ratio *=
            (0.5 * (n - 3.0) - jf) / (jf + 1.0) * (0.5 * (n - 1.0) + jf) / (0.5 + s + jf) * 0.25;
    }
    let factorial = [1.0, 2.0, 24.0, 720.0];
    Some([0, 1, 2, 3].map(|k| s0 * series[k] * factorial[k]))
}

/// `exp(B)` of a truncated power series with `B[0] = 0`.
fn exp_series(b: [f64; 4]) -> [f64; 4] {
    let mut a = [1.0, 0.0, 0.0, 0.0];
    for k in 1..4 {
        a[k] = (1..=k).map(|j| j as f64 * b[j] * a[k - j]).sum::<f64>() / k as f64;
    }
    a
}

/// `∫_ℝ K` in closed form (the Fourier symbol of `K` at zero frequency).
pub fn kernel_mass_closed_form(params: &Params) -> f64 {
    let n = params.nf();
    let s = params.sigma();
    let ln = 0.5 * n * PI.ln()
        + statrs::function::gamma::ln_gamma(s)
        + 2.0 * statrs::function::gamma::ln_gamma(0.25 * (n - 2.0 * s))
        - statrs::function::gamma::ln_gamma(0.5 * (n - 2.0 * s))
        - 2.0 * statrs::function::gamma::ln_gamma(0.25 * (n + 2.0 * s));
    ln.exp()
}

/// `∫_ℝ K` by quadrature of the kernel itself.
pub fn kernel_mass(params: &Params) -> Result<f64> {
    let q = Adaptive::new(0.0, 1e-13);
    let m = power_substitution(params.near_zero_power());
    let mut kernel_err = None;
    let mut k = |t: f64| match eval_k(params, t) {
        Ok(v) => v,
        Err(e) => {
            kernel_err.get_or_insert(e);
            0.0
        }
    };
    let near = q.integrate_endpoint(&mut k, 0.0, 1.0, m)?;
    let far = q.integrate_to_infinity(&mut k, 1.0)?;
    if let Some(e) = kernel_err {
        return Err(e);
    }
    Ok(2.0 * (near.value + far.value))
}

/// Images needed so that the neglected tail of `Σ_m K(τ + mT)` is below
/// `tol`. Uses `K(t) e^{a t} ≤ ω_{n−1} (1 − e^{-t})^{-2a}`, which bounds the
/// tail by a geometric series.
fn image_cutoff(params: &Params, period: f64, tol: f64) -> f64 {
    let a = params.decay_rate();
    let area = sphere_area(params.n() - 1);
    let ratio = 1.0 - (-a * period).exp();
    let mut cut: f64 = 1.0;
    for _ in 0..50 {
        let bound = area * (1.0 - (-cut).exp()).powf(-2.0 * a);
        // Two tails, one on each side of the lag.
        let next = ((2.0 * bound / (ratio * tol)).ln() / a).max(1.0);
        if (next - cut).abs() < 1e-12 * next {
            break;
        }
        cut = next;
    }
    cut
}

/// `K_T(τ) = Σ_m K(τ + mT)` for `τ ∈ (0, T)`, with the number of images used.
pub fn periodized_value(params: &Params, tau: f64, period: f64, tol: f64) -> Result<(f64, usize)> {
    if !(period > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "period {period} and tol {tol} must be positive"
        )));
    }
    // K_T is even, so fold onto [0, T/2]; this also keeps T − τ away from
    // zero when τ is a tiny negative number.
    let tau = tau.rem_euclid(period);
    let tau = tau.min(period - tau);
    if tau == 0.0 {
        return Err(Error::Domain(
            "K_T is singular at multiples of the period".into(),
        ));
    }
    let cut = image_cutoff(params, period, tol);
    let images = 2.0 * (cut / period + 1.0);
    if images > MAX_IMAGES as f64 {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol:e} needs about {images:.0} images at period {period}; the budget is {MAX_IMAGES}"
        )));
    }
    // Accumulate from the far images inward so the small terms are not lost.
    let mut distances = Vec::with_capacity(images as usize + 2);
    let mut d = tau;
    while d < cut || distances.is_empty() {
        distances.push(d);
        d += period;
    }
    let mut d = period - tau;
    while d < cut {
        distances.push(d);
        d += period;
    }
    distances.sort_by(|x, y| y.total_cmp(x));
    let mut sum = 0.0;
    for &d in &distances {
        sum += eval_k(params, d)?;
    }
    Ok((sum, distances.len()))
}

/// Periodized kernel sampled on the grid `t_j = jT/N`, together with the
/// convolution weights used by the solver.
///
/// `lag_values[j] = K_T(jh)` for `j ≠ 0` and `lag_values[0]` is chosen so
/// that `h Σ_j lag_values[j] = ∫_ℝ K`; the grid operator therefore maps
/// constants exactly. The convolution `weights` add a zero-sum stencil on
/// lags `|j| ≤ 3` that cancels the leading singular terms of the punctured
/// trapezoid error, leaving an error of order `h^{2σ+8}` on smooth data.
#[derive(Debug, Clone)]
pub struct KernelTable {
    params: Params,
    period: f64,
    lag_values: Vec<f64>,
    weights: Vec<f64>,
    tail_terms: usize,
    tolerance: f64,
    mass: f64,
}

impl KernelTable {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn grid_size(&self) -> usize {
        self.lag_values.len()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.grid_size() as f64
    }

    pub fn lag_values(&self) -> &[f64] {
        &self.lag_values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest number of periodization images summed for any lag.
    pub fn tail_terms(&self) -> usize {
        self.tail_terms
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `∫_ℝ K`, which the grid operator reproduces on constants.
    pub fn mass(&self) -> f64 {
        self.mass
    }
}

pub fn periodize(params: &Params, period: f64, grid_size: usize, tol: f64) -> Result<KernelTable> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "period must be positive (got {period})"
        )));
    }
    if grid_size < 8 || grid_size % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be even and at least 8 (got {grid_size})"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive (got {tol})"
        )));
    }
    let h = period / grid_size as f64;
    let half = grid_size / 2;
    let sampled: Vec<(f64, usize)> = (1..=half)
        .into_par_iter()
        .map(|j| periodized_value(params, j as f64 * h, period, tol))
        .collect::<Result<_>>()?;
    let tail_terms = sampled.iter().map(|s| s.1).max().unwrap_or(0);

    let mut lag_values = vec![0.0; grid_size];
    for (j, &(v, _)) in sampled.iter().enumerate() {
        lag_values[j + 1] = v;
        lag_values[grid_size - 1 - j] = v;
    }
    let mass = kernel_mass(params)?;
    // Sum the symmetric off-origin lags pairwise so the mirror images do not
    // depend on summation order.
    let off_origin: f64 =
        2.0 * sampled[..half - 1].iter().map(|s| s.0).sum::<f64>() + sampled[half - 1].0;
    let origin = mass / h - off_origin;
    if !(origin > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing {h} too coarse: the lag-0 weight {origin:e} is not positive"
        )));
    }
    lag_values[0] = origin;

    let mut weights = lag_values.clone();
    for (lag, c) in correction_stencil(params, h).into_iter().enumerate() {
        weights[lag] += c;
        if lag != 0 {
            weights[grid_size - lag] += c;
        }
    }
    Ok(KernelTable {
        params: *params,
        period,
        lag_values,
        weights,
        tail_terms,
        tolerance: tol,
        mass,
    })
}

/// Additions to the weights at lags `0, ±1, ±2, ±3` (the value for lag `j`
/// applies to both `±j`). They sum to zero, so masses are unchanged.
///
/// With the mass-consistent lag-0 weight, the trapezoid error on
/// `|t|^α S(t) φ(t)` is `Σ_i B_i φ^{(2i)}(0)` with (Navot)
/// `B_i = Σ_{k≥i} 2ζ(−α−2k) h^{α+2k+1} C(2k,2i) S^{(2k−2i)}(0) / (2k)!`.
/// A combination of central differences `δ², δ⁴, δ⁶` cancels `B_1..B_3`,
/// leaving `O(h^{α+9})`.
fn correction_stencil(params: &Params, h: f64) -> [f64; 4] {
    let Some(sd) = singular_factor(params) else {
        return [0.0; 4];
    };
    let alpha = params.near_zero_power();
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let binom = |a: usize, b: usize| fact(a) / (fact(b) * fact(a - b));
    let mut b = [0.0; 4];
    for i in 1..=3 {
        for k in i..=3 {
            let order = alpha + 2.0 * k as f64;
            b[i] +=
                2.0 * riemann_zeta(-order) * h.powf(order + 1.0) * binom(2 * k, 2 * i) * sd[k - i]
                    / fact(2 * k);
        }
    }
    // δ^{2m}φ(0) = Σ_{i≥m} moments[m][i] h^{2i} φ^{(2i)}(0), from powers of
    // (2 sinh(x/2))² = x² + x⁴/12 + x⁶/360 + ….
    let base = [0.0, 1.0, 1.0 / 12.0, 1.0 / 360.0];
    let mut moments = [[0.0; 4]; 4];
    moments[0][0] = 1.0;
    for m in 1..4 {
        for i in m..4 {
            moments[m][i] = (1..=i + 1 - m)
                .map(|d| base[d] * moments[m - 1][i - d])
                .sum();
        }
    }
    let mut e = [0.0; 4];
    for i in 1..=3 {
        let known: f64 = (1..i).map(|m| e[m] * moments[m][i]).sum();
        e[i] = -b[i] / h.powi(2 * i as i32 + 1) - known;
    }
    [
        -2.0 * e[1] + 6.0 * e[2] - 20.0 * e[3],
        e[1] - 4.0 * e[2] + 15.0 * e[3],
        e[2] - 6.0 * e[3],
        e[3],
    ]
}

/// `|x−y|^{2σ−n}`.
pub fn riesz_kernel(params: &Params, x: &[f64], y: &[f64]) -> Result<f64> {
    let dist = point_distance(params, x, y)?;
    if dist == 0.0 {
        return Err(Error::Domain(
            "the Riesz kernel is singular at x = y".into(),
        ));
    }
    Ok(dist.powf(2.0 * params.sigma() - params.nf()))
}

fn point_distance(params: &Params, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = params.n() as usize;
    if x.len() != n || y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "points must have {n} coordinates (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Normalizing constant of the Poisson kernel for the extension problem,
/// `β(n,σ) = Γ((n+2σ)/2) / (π^{n/2} Γ(σ))`.
pub fn poisson_beta(params: &Params) -> f64 {
    let n = params.nf();
    let s = params.sigma();
    gamma(0.5 * n + s) / (PI.powf(0.5 * n) * gamma(s))
}

/// `P(x, t) = β t^{2σ} / (|x|² + t²)^{(n+2σ)/2}` on the upper half-space.
#[derive(Debug, Clone, Copy)]
pub struct PoissonKernel {
    params: Params,
    beta: f64,
}

impl PoissonKernel {
    /// Takes `β` from its Gamma-function form after checking it against a
    /// quadrature of `∫_{ℝⁿ} (1+|x|²)^{-(n+2σ)/2} dx`.
    pub fn new(params: &Params) -> Result<Self> {
        let beta = poisson_beta(params);
        let by_quadrature = 1.0 / poisson_normalization_integral(params)?;
        if ((beta - by_quadrature) / beta).abs() > 1e-8 {
            return Err(Error::Accuracy {
                value: by_quadrature,
                error: (beta - by_quadrature).abs(),
            });
        }
        Ok(Self {
            params: *params,
            beta,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "the Poisson kernel needs t > 0 (got {t})"
            )));
        }
        let origin = vec![0.0; x.len()];
        let r = point_distance(&self.params, x, &origin)?;
        let s = self.params.sigma();
        let ln = 2.0 * s * t.ln() - (0.5 * self.params.nf() + s) * (r * r + t * t).ln();
        Ok(self.beta * ln.exp())
    }
}

/// `∫_{ℝⁿ} (1+|x|²)^{-(n+2σ)/2} dx` by radial quadrature, folding `[1, ∞)`
/// onto `(0, 1]` through `ρ = 1/v`.
pub fn poisson_normalization_integral(params: &Params) -> Result<f64> {
    let n = params.nf();
    let s = params.sigma();
    let expo = -(0.5 * n + s);
    let q = Adaptive::new(0.0, 1e-13);
    let inner = q.integrate(|r| r.powf(n - 1.0) * (1.0 + r * r).powf(expo), 0.0, 1.0)?;
    let outer = q.integrate_endpoint(
        |v| v.powf(2.0 * s - 1.0) * (1.0 + v * v).powf(expo),
        0.0,
        1.0,
        power_substitution(2.0 * s - 1.0),
    )?;
    Ok(sphere_area(params.n() - 1) * (inner.value + outer.value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_series_agrees_with_quadrature() {
        for (n, s) in [(2, 0.3), (3, 0.5), (4, 0.7), (5, 2.3), (7, 0.1)] {
            let p = Params::new(n, s).unwrap();
            for t in [2.0, 2.5, 4.0, 9.0] {
                let series = eval_far_series(&p, t);
                let quad = eval_angular_quadrature(&p, t).unwrap();
                assert!(
                    ((series - quad) / quad).abs() < 1e-12,
                    "({n},{s},{t}): {series} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn stencil_sums_to_zero() {
        let p = Params::new(1, 0.25).unwrap();
        let c = correction_stencil(&p, 0.1);
        assert!((c[0] + 2.0 * (c[1] + c[2] + c[3])).abs() < 1e-15 * c[0].abs());
    }

    #[test]
    fn image_cutoff_bounds_tail() {
        let p = Params::new(1, 0.25).unwrap();
        let cut = image_cutoff(&p, 10.0, 1e-9);
        let a = p.decay_rate();
        let tail = 2.0 * 2.0 * (1.0 - (-cut).exp()).powf(-2.0 * a) * (-a * cut).exp()
            / (1.0 - (-a * 10.0).exp());
        assert!(tail <= 1.0000001e-9);
    }
}
