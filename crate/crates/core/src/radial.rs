//! Radial singular solutions `u(r) = r^{−(n−2σ)/2} ψ(ln r)` built from
//! periodic profiles, their two-sided blow-up rate, and residual checks of
//! the integral equation in both the cylindrical and the radial picture.

use std::f64::consts::PI;

use crate::convolution::CirculantOperator;
use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::params::Params;
use crate::quadrature::{power_substitution, Adaptive};
use crate::solver::{FowlerSolution, PeriodicProfile};
use crate::special::sphere_area;
use crate::spline::PeriodicSpline;

pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 64;

/// A function of `|x|` on `ℝⁿ \ {0}` with its first two radial derivatives.
pub trait RadialFunction {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
    fn second_derivative(&self, r: f64) -> f64;
}

/// `u(r) = c · r^{−exponent}`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl RadialFunction for PowerLaw {
    fn value(&self, r: f64) -> f64 {
        self.coefficient * r.powf(-self.exponent)
    }

    fn derivative(&self, r: f64) -> f64 {
        -self.exponent * self.coefficient * r.powf(-self.exponent - 1.0)
    }

    fn second_derivative(&self, r: f64) -> f64 {
        self.exponent * (self.exponent + 1.0) * self.coefficient * r.powf(-self.exponent - 2.0)
    }
}

/// Samples of `u` on a log-uniform grid `ln r_j = −j·Δ`, `j = 0, 1, …`,
/// running from `r = 1` down past `r_min`. Between samples (and beyond the
/// sampled range) `u` is evaluated through the periodic spline of `ψ`.
#[derive(Debug, Clone)]
pub struct RadialField {
    params: Params,
    log_radii: Vec<f64>,
    u_values: Vec<f64>,
    source: PeriodicProfile,
    spline: PeriodicSpline,
}

impl RadialField {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn log_radii(&self) -> &[f64] {
        &self.log_radii
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u_values
    }

    pub fn source_profile(&self) -> &PeriodicProfile {
        &self.source
    }

    /// The interpolated profile `ψ(t)`.
    pub fn psi(&self, t: f64) -> f64 {
        self.spline.value(t)
    }

    pub fn spline(&self) -> &PeriodicSpline {
        &self.spline
    }

    /// `u(r_j)·r_j^{(n−2σ)/2}` at every sample.
    pub fn rescaled_values(&self) -> Vec<f64> {
        let a = self.params.decay_rate();
        self.log_radii
            .iter()
            .zip(&self.u_values)
            .map(|(t, u)| u * (a * t).exp())
            .collect()
    }
}

impl RadialFunction for RadialField {
    fn value(&self, r: f64) -> f64 {
        let t = r.ln();
        (-self.params.decay_rate() * t).exp() * self.spline.value(t)
    }

    // u = r^{−a} ψ(ln r), so u' = r^{−a−1}(ψ' − aψ) and
    // u'' = r^{−a−2}(ψ'' − (2a+1)ψ' + a(a+1)ψ).
    fn derivative(&self, r: f64) -> f64 {
        let t = r.ln();
        let a = self.params.decay_rate();
        (-(a + 1.0) * t).exp() * (self.spline.derivative(t) - a * self.spline.value(t))
    }

    fn second_derivative(&self, r: f64) -> f64 {
        let t = r.ln();
        let a = self.params.decay_rate();
        let (v, d1, d2) = (
            self.spline.value(t),
            self.spline.derivative(t),
            self.spline.second_derivative(t),
        );
        (-(a + 2.0) * t).exp() * (d2 - (2.0 * a + 1.0) * d1 + a * (a + 1.0) * v)
    }
}

pub fn reconstruct(
    params: &Params,
    sol: &FowlerSolution,
    r_min: f64,
    samples_per_period: usize,
) -> Result<RadialField> {
    from_profile(params, &sol.profile, r_min, samples_per_period)
}

pub fn from_profile(
    params: &Params,
    profile: &PeriodicProfile,
    r_min: f64,
    samples_per_period: usize,
) -> Result<RadialField> {
    if !(r_min > 0.0 && r_min < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "r_min must lie in (0, 1) (got {r_min})"
        )));
    }
    if samples_per_period == 0 {
        return Err(Error::InvalidArgument(
            "samples per period must be positive".into(),
        ));
    }
    if profile.min() <= 0.0 {
        return Err(Error::InvalidArgument(
            "the profile must be positive to define a radial solution".into(),
        ));
    }
    let spline = PeriodicSpline::new(profile.period(), profile.values())?;
    let step = profile.period() / samples_per_period as f64;
    let count = (-r_min.ln() / step).ceil() as usize + 1;
    let a = params.decay_rate();
    let log_radii: Vec<f64> = (0..count).map(|j| -(j as f64) * step).collect();
    let u_values = log_radii
        .iter()
        .map(|&t| (-a * t).exp() * spline.value(t))
        .collect();
    Ok(RadialField {
        params: *params,
        log_radii,
        u_values,
        source: profile.clone(),
        spline,
    })
}

/// Constants in `r^{−(n−2σ)/2}/C_lower ≤ u(r) ≤ C_upper r^{−(n−2σ)/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Sharp constants over all `r ∈ (0, 1]`: `C_upper = max ψ`,
/// `C_lower = 1/min ψ`, with the extrema taken over the interpolant rather
/// than only the samples, so the bound holds between samples too and does
/// not depend on `r_min`.
pub fn rate_bounds(field: &RadialField) -> Result<RateBounds> {
    if field.u_values.is_empty() {
        return Err(Error::InvalidArgument("empty radial field".into()));
    }
    let (lo, hi) = field.spline.extrema();
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "degenerate field: ψ ranges over [{lo}, {hi}]"
        )));
    }
    Ok(RateBounds {
        lower: 1.0 / lo,
        upper: hi,
    })
}

/// `max_j |ψ(t_j) − (K_T ∗ ψ^p)(t_j)| / max ψ` over the field's samples,
/// where `ψ(t_j) = u_j r_j^{(n−2σ)/2}` and the convolution is the discrete
/// one of `table` applied to the source profile. Every sample must sit on a
/// node of the table grid, which holds when `N` is a multiple of the samples
/// per period. With `N` samples per period covering a full period this is
/// exactly the solver's Euler–Lagrange residual.
pub fn radial_residual(params: &Params, field: &RadialField, table: &KernelTable) -> Result<f64> {
    let source = &field.source;
    let same_period = ((table.period() - source.period()) / table.period()).abs() < 1e-14;
    if *table.params() != *params
        || *field.params() != *params
        || source.len() != table.grid_size()
        || !same_period
    {
        return Err(Error::InvalidArgument(
            "field, table and parameters do not describe the same problem".into(),
        ));
    }
    let h = table.spacing();
    let n = table.grid_size();
    let mut nodes = Vec::with_capacity(field.log_radii.len());
    for &t in &field.log_radii {
        let x = t.rem_euclid(table.period()) / h;
        let node = x.round();
        if (x - node).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "sample ln r = {t} is not on the table grid (spacing {h})"
            )));
        }
        nodes.push(node as usize % n);
    }
    let power = params.p_crit();
    let op = CirculantOperator::new(table);
    let source_power: Vec<f64> = source.values().iter().map(|v| v.powf(power)).collect();
    let image = op.apply(&source_power);
    let psi = field.rescaled_values();
    let scale = psi.iter().copied().fold(0.0, f64::max);
    Ok(psi
        .iter()
        .zip(&nodes)
        .map(|(p, &i)| (p - image[i]).abs())
        .fold(0.0, f64::max)
        / scale)
}

/// Relative residual `|u(r) − ∫_{ℝⁿ} |x−y|^{2σ−n} u(|y|)^p dy| / u(r)` at
/// each radius, computed by direct quadrature in `|y|` and the polar angle.
/// Shares no code with the kernel `K`, so it checks the whole reduction.
pub fn riesz_residual(
    params: &Params,
    u: &impl RadialFunction,
    radii: &[f64],
    rel_tol: f64,
) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "radius must be positive (got {r})"
                )));
            }
            let potential = riesz_potential(params, u, r, rel_tol)?;
            let own = u.value(r);
            Ok(((own - potential) / own).abs())
        })
        .collect()
}

/// `∫_{ℝⁿ} |x−y|^{2σ−n} u(|y|)^{p} dy` at `|x| = r ≥ 0`, with `p` the
/// critical exponent. The integral is truncated where a tail decaying like
/// `|y|^{−(n−2σ)/2}` would fall below `rel_tol/1000`; faster-decaying `u` are
/// covered a fortiori. `r = 0` needs `u` bounded near the origin.
pub fn riesz_potential(
    params: &Params,
    u: &impl RadialFunction,
    r: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius must be non-negative (got {r})"
        )));
    }
    let a = params.decay_rate();
    let p = params.p_crit();
    let e = 2.0 * params.sigma() - params.nf();
    let n = params.n();
    let inner_tol = 0.1 * rel_tol;
    let reach = (1e3 / rel_tol).ln() / a;
    if r == 0.0 {
        // |y|^{2σ−n} is radial: ω_{n−1} ∫ ρ^{2σ} u(ρ)^p dρ/ρ
        let omega = sphere_area(n - 1);
        let left = (1e3 / rel_tol).ln() / (2.0 * params.sigma());
        return log_scale_integral(
            |rho| omega * rho.powf(2.0 * params.sigma()) * u.value(rho).powf(p),
            1.0,
            left,
            reach,
            None,
            rel_tol,
        );
    }
    let mut failure = None;
    let integrand = |rho: f64| {
        match shell_integral(n, r, rho, |d2| d2.powf(0.5 * e), inner_tol) {
            // ρⁿ u^p = (ρ^a u)^p ρ^a, which cannot overflow at the far end.
            Ok(shell) => (rho.powf(a) * u.value(rho)).powf(p) * rho.powf(a) * shell,
            Err(err) => {
                failure.get_or_insert(err);
                0.0
            }
        }
    };
    let total = log_scale_integral(
        integrand,
        r,
        reach,
        reach,
        Some(2.0 * params.sigma() - 1.0),
        rel_tol,
    )?;
    match failure {
        Some(err) => Err(err),
        None => Ok(total),
    }
}

/// `∫_0^∞ g(ρ) dρ/ρ` over `ln(ρ/centre) ∈ [−left, right]`, in unit pieces of
/// `ln ρ` so that no log-scale feature of `g` is stepped over. A power-type
/// singularity `|ρ − centre|^γ` is absorbed by an endpoint substitution.
pub(crate) fn log_scale_integral(
    mut g: impl FnMut(f64) -> f64,
    centre: f64,
    left: f64,
    right: f64,
    singular_power: Option<f64>,
    rel_tol: f64,
) -> Result<f64> {
    let quad = Adaptive::new(0.0, rel_tol).with_max_pieces(20_000);
    let mut integrand = |s: f64| {
        if s == 0.0 && singular_power.is_some() {
            0.0
        } else {
            g(centre * s.exp())
        }
    };
    let mut total = 0.0;
    let (mut lo, mut hi) = (0.0, 0.0);
    if let Some(gamma) = singular_power {
        let m = power_substitution(gamma);
        total += quad.integrate_endpoint(&mut integrand, 0.0, 1.0, m)?.value;
        total -= quad.integrate_endpoint(&mut integrand, 0.0, -1.0, m)?.value;
        lo = -1.0;
        hi = 1.0;
    }
    let right_points: Vec<f64> = (0..=(right - hi).max(0.0).ceil() as usize)
        .map(|k| hi + k as f64)
        .collect();
    let left_points: Vec<f64> = (0..=(left + lo).max(0.0).ceil() as usize)
        .rev()
        .map(|k| lo - k as f64)
        .collect();
    if right_points.len() > 1 {
        total += quad.integrate_breaks(&mut integrand, &right_points)?.value;
    }
    if left_points.len() > 1 {
        total += quad.integrate_breaks(&mut integrand, &left_points)?.value;
    }
    Ok(total)
}

/// `∫_{S^{n−1}} f(|r e₁ − ρ ω|²) dω`, with the polar angle resolved on the
/// scale `|r−ρ|/√(rρ)` where `f` may be singular or sharply peaked.
pub(crate) fn shell_integral(
    n: u32,
    r: f64,
    rho: f64,
    f: impl Fn(f64) -> f64,
    rel_tol: f64,
) -> Result<f64> {
    if n == 1 {
        return Ok(f((r - rho) * (r - rho)) + f((r + rho) * (r + rho)));
    }
    let gap = (r - rho) * (r - rho);
    let cross = 4.0 * r * rho;
    if cross == 0.0 {
        return Ok(sphere_area(n - 1) * f(gap));
    }
    let integrand = |theta: f64| {
        let half = (0.5 * theta).sin();
        theta.sin().powi(n as i32 - 2) * f(gap + cross * half * half)
    };
    let scale = ((r - rho).abs() / (r * rho).sqrt()).max(1e-300);
    let mut points = vec![0.0];
    let mut b = scale;
    while b < 1.0 {
        points.push(b);
        b *= 4.0;
    }
    points.push(PI);
    let quad = Adaptive::new(0.0, rel_tol).with_max_pieces(4000);
    Ok(sphere_area(n - 2) * quad.integrate_breaks(integrand, &points)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_average_of_newtonian_kernel() {
        // Mean-value property: over the sphere of radius ρ, 1/|x−y| averages
        // to 1/max(r, ρ).
        for (r, rho) in [(1.0, 0.3), (0.4, 2.0), (1.0, 0.999)] {
            let got = shell_integral(3, r, rho, |d2| d2.powf(-0.5), 1e-12).unwrap();
            let want = 4.0 * PI / f64::max(r, rho);
            assert!(
                ((got - want) / want).abs() < 1e-10,
                "({r},{rho}) {got} vs {want}"
            );
        }
    }

    #[test]
    fn log_scale_integral_of_rational_function() {
        // ∫_0^∞ ρ/(1+ρ²)² dρ = 1/2, written as ∫ g dρ/ρ with g = ρ²/(1+ρ²)².
        let v = log_scale_integral(
            |r| r * r / ((1.0 + r * r) * (1.0 + r * r)),
            1.0,
            40.0,
            40.0,
            None,
            1e-13,
        )
        .unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }
}
