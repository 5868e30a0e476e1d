//! Independent numerical checks: the σ = 1 Pohozaev invariant, the bubble
//! and Poisson-extension identities, the one-dimensional sharp HLS
//! comparison, and the positive-mass bound of the `n = 1` kernel.
//!
//! Everything here is plain adaptive quadrature in physical variables; the
//! kernel module's closed forms and grid tables are not used.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::poisson_beta;
use crate::params::Params;
use crate::quadrature::{power_substitution, Adaptive};
use crate::radial::{log_scale_integral, riesz_potential, shell_integral, RadialFunction};
use crate::special::{gamma, sphere_area};

fn require_sigma_one(params: &Params) -> Result<()> {
    if params.sigma() != 1.0 || params.n() < 3 {
        return Err(Error::Precondition(format!(
            "the Pohozaev functional is implemented for σ = 1, n ≥ 3 (got n = {}, σ = {})",
            params.n(),
            params.sigma()
        )));
    }
    Ok(())
}

fn require_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PohozaevReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `max|P − mean P| / (|mean P| + 1)`.
    pub spread: f64,
}

/// `P(u, r)` for `−Δu = c u^{(n+2)/(n−2)}`, radially reduced:
/// `ω_{n−1} r^{n−1} [ (n−2)/2 u u' + r/2 u'² + (n−2)/(2n) c r u^{2n/(n−2)} ]`
/// (the `−r/2 |∇u|² + r (∂_ν u)²` pair collapses to `r/2 u'²` for radial `u`).
pub fn pohozaev_sigma1(
    params: &Params,
    u: &impl RadialFunction,
    c_coef: f64,
    radii: &[f64],
) -> Result<PohozaevReport> {
    require_sigma_one(params)?;
    require_radii(radii)?;
    let n = params.nf();
    let omega = sphere_area(params.n() - 1);
    let critical = 2.0 * n / (n - 2.0);
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let (v, d) = (u.value(r), u.derivative(r));
            let bulk = 0.5 * (n - 2.0) * v * d - 0.5 * r * d * d + r * d * d;
            omega * r.powf(n - 1.0) * (bulk + (n - 2.0) / (2.0 * n) * c_coef * r * v.powf(critical))
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / (mean.abs() + 1.0);
    Ok(PohozaevReport {
        radii: radii.to_vec(),
        values,
        spread,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LaplacianFit {
    pub coefficient: f64,
    /// `Σ(−Δu − c u^p)² / Σ(c u^p)²` over the sample radii.
    pub mismatch: f64,
}

pub const MAX_FIT_MISMATCH: f64 = 1e-6;

/// Least-squares `c` in `−Δu = c u^{(n+2)/(n−2)}` from the field's own
/// derivatives. Both sides are scaled by `r^{(n+2)/2}`, which makes them
/// dilation invariant, so every radius of a log-periodic field counts alike.
pub fn fit_laplacian_coefficient(
    params: &Params,
    u: &impl RadialFunction,
    radii: &[f64],
) -> Result<LaplacianFit> {
    require_sigma_one(params)?;
    require_radii(radii)?;
    let n = params.nf();
    let p = params.p_crit();
    let pairs: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let scale = r.powf(0.5 * (n + 2.0));
            (
                -scale * (u.second_derivative(r) + (n - 1.0) / r * u.derivative(r)),
                scale * u.value(r).powf(p),
            )
        })
        .collect();
    let cross: f64 = pairs.iter().map(|(l, s)| l * s).sum();
    let norm: f64 = pairs.iter().map(|(_, s)| s * s).sum();
    let coefficient = cross / norm;
    let miss: f64 = pairs
        .iter()
        .map(|(l, s)| (l - coefficient * s).powi(2))
        .sum();
    let mismatch = miss / (coefficient * coefficient * norm);
    if !(mismatch <= MAX_FIT_MISMATCH) {
        return Err(Error::Accuracy {
            value: coefficient,
            error: mismatch,
        });
    }
    Ok(LaplacianFit {
        coefficient,
        mismatch,
    })
}

/// `ū_λ(r) = (λ/(λ² + r²))^{(n−2)/2}`, solving `−Δū = n(n−2) ū^{(n+2)/(n−2)}`.
#[derive(Debug, Clone, Copy)]
pub struct StandardBubble {
    pub n: u32,
    pub lambda: f64,
}

impl StandardBubble {
    pub fn coefficient(&self) -> f64 {
        let n = self.n as f64;
        n * (n - 2.0)
    }

    fn exponent(&self) -> f64 {
        0.5 * (self.n as f64 - 2.0)
    }
}

impl RadialFunction for StandardBubble {
    fn value(&self, r: f64) -> f64 {
        (self.lambda / (self.lambda * self.lambda + r * r)).powf(self.exponent())
    }

    fn derivative(&self, r: f64) -> f64 {
        let q = self.lambda * self.lambda + r * r;
        -2.0 * self.exponent() * r / q * self.value(r)
    }

    fn second_derivative(&self, r: f64) -> f64 {
        let k = self.exponent();
        let q = self.lambda * self.lambda + r * r;
        self.value(r) * (-2.0 * k / q + 4.0 * k * (k + 1.0) * r * r / (q * q))
    }
}

/// `w(|y − y₀|)` with `w(ρ) = ((1 + μ²|y₀|²)/(1 + μ²ρ²))^{(n−2σ)/2}`.
struct ShiftedBubble {
    scale: f64,
    mu: f64,
    exponent: f64,
}

impl RadialFunction for ShiftedBubble {
    fn value(&self, rho: f64) -> f64 {
        (self.scale / (1.0 + self.mu * self.mu * rho * rho)).powf(self.exponent)
    }

    fn derivative(&self, rho: f64) -> f64 {
        let m2 = self.mu * self.mu;
        -2.0 * self.exponent * m2 * rho / (1.0 + m2 * rho * rho) * self.value(rho)
    }

    fn second_derivative(&self, rho: f64) -> f64 {
        let m2 = self.mu * self.mu;
        let q = 1.0 + m2 * rho * rho;
        let k = self.exponent;
        self.value(rho) * (-2.0 * k * m2 / q + 4.0 * k * (k + 1.0) * m2 * m2 * rho * rho / (q * q))
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Checks `w(y) = β′ ∫ w(z)^p |y−z|^{2σ−n} dz` for the bubble family. The
/// constant `β′` is read off at the first sample; returns the largest
/// relative deviation of `w/∫` from it over the others.
pub fn check_bubble(
    params: &Params,
    mu: f64,
    y0: &[f64],
    samples: &[Vec<f64>],
    rel_tol: f64,
) -> Result<f64> {
    Ok(bubble_ratios(params, mu, y0, samples, rel_tol)?.1)
}

/// The per-sample constants `w(y_j)/∫ w^p |y_j − ·|^{2σ−n}` and their
/// largest relative deviation from the first.
pub fn bubble_ratios(
    params: &Params,
    mu: f64,
    y0: &[f64],
    samples: &[Vec<f64>],
    rel_tol: f64,
) -> Result<(Vec<f64>, f64)> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "μ must be positive (got {mu})"
        )));
    }
    let n = params.n() as usize;
    if y0.len() != n || samples.is_empty() || samples.iter().any(|y| y.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "points must have dimension {n} and samples be nonempty"
        )));
    }
    let y0_sq: f64 = y0.iter().map(|v| v * v).sum();
    let w = ShiftedBubble {
        scale: 1.0 + mu * mu * y0_sq,
        mu,
        exponent: params.decay_rate(),
    };
    let ratios = samples
        .iter()
        .map(|y| {
            let r = distance(y, y0);
            Ok(w.value(r) / riesz_potential(params, &w, r, rel_tol)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let deviation = ratios
        .iter()
        .map(|b| (b / ratios[0] - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((ratios, deviation))
}

/// `| ∫_{ℝⁿ} P_σ(x−y, t) |y|^{2σ−n} dy − |(x,t)|^{2σ−n} | / |(x,t)|^{2σ−n}`.
pub fn check_extension_identity(params: &Params, x: &[f64], t: f64, rel_tol: f64) -> Result<f64> {
    let value = extension_of_fundamental_solution(params, x, t, rel_tol)?;
    let r2 = x.iter().map(|v| v * v).sum::<f64>() + t * t;
    let want = r2.powf(params.sigma() - 0.5 * params.nf());
    Ok(((value - want) / want).abs())
}

/// `∫_{ℝⁿ} P_σ(x−y, t) |y|^{2σ−n} dy` with
/// `P_σ(x, t) = β t^{2σ}/(|x|² + t²)^{(n+2σ)/2}`, reduced to a radial
/// integral in `|y|` around the origin.
pub fn extension_of_fundamental_solution(
    params: &Params,
    x: &[f64],
    t: f64,
    rel_tol: f64,
) -> Result<f64> {
    if x.len() != params.n() as usize {
        return Err(Error::InvalidArgument(format!(
            "x must have dimension {}",
            params.n()
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t must be positive (got {t})"
        )));
    }
    let n = params.nf();
    let s = params.sigma();
    let beta = poisson_beta(params);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let t2 = t * t;
    let decay = 0.5 * (n + 2.0 * s);
    let mut failure = None;
    // dy = ρ^{n−1} dρ dω and |y|^{2σ−n} = ρ^{2σ−n}, so the ln ρ integrand
    // is ρ^{2σ} times the shell integral of the Poisson kernel.
    let integrand = |rho: f64| match shell_integral(
        params.n(),
        r,
        rho,
        |d2| (d2 + t2).powf(-decay),
        0.1 * rel_tol,
    ) {
        Ok(shell) => rho.powf(2.0 * s) * shell,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    // Tails: ρ^{2σ} at 0 and ρ^{−n} at ∞, around the scale |X|.
    let centre = (r * r + t2).sqrt();
    let depth = (1e3 / rel_tol).ln();
    let integral = log_scale_integral(
        integrand,
        centre,
        depth / (2.0 * s),
        depth / n,
        None,
        rel_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(beta * t.powf(2.0 * s) * integral)
}

fn require_hls_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::Precondition(format!(
            "the one-dimensional HLS comparison needs 0 < σ < 1/2 (got {sigma})"
        )));
    }
    Ok(())
}

/// `S(σ) = π^{1/2−2σ} Γ(σ)/Γ(σ+1/2)`, the sharp one-dimensional HLS
/// constant in the normalization where `u_λ` attains it.
pub fn hls_constant(sigma: f64) -> f64 {
    PI.powf(0.5 - 2.0 * sigma) * gamma(sigma) / gamma(sigma + 0.5)
}

/// `u_λ(t) = (λ/(λ² + (t−c)²))^{(1+2σ)/2}`.
fn hls_profile(sigma: f64, lambda: f64, centre: f64, t: f64) -> f64 {
    let x = t - centre;
    (lambda / (lambda * lambda + x * x)).powf(0.5 + sigma)
}

/// `S(σ)` from `S(σ) π^{2σ} u₁(t)^{(1−2σ)/(1+2σ)} = ∫ u₁(s) |t−s|^{2σ−1} ds`.
pub fn estimate_hls_constant_at(sigma: f64, t: f64) -> Result<f64> {
    require_hls_sigma(sigma)?;
    let quad = Adaptive::new(0.0, 1e-11);
    let gamma = 2.0 * sigma - 1.0;
    let f = |s: f64| hls_profile(sigma, 1.0, 0.0, s) * (t - s).abs().powf(gamma);
    // |t − s| < 1 in the offset itself, so the singular factor keeps full precision
    let folded = |d: f64| {
        if d == 0.0 {
            0.0
        } else {
            d.powf(gamma)
                * (hls_profile(sigma, 1.0, 0.0, t + d) + hls_profile(sigma, 1.0, 0.0, t - d))
        }
    };
    let near = quad
        .integrate_endpoint(folded, 0.0, 1.0, power_substitution(gamma))?
        .value;
    let right = quad.integrate_to_infinity(f, t + 1.0)?.value;
    let left = quad.integrate_to_infinity(|s| f(-s), 1.0 - t)?.value;
    let lhs_factor = PI.powf(2.0 * sigma) * (1.0 / (1.0 + t * t)).powf(0.5 - sigma);
    Ok((near + right + left) / lhs_factor)
}

pub fn estimate_hls_constant(sigma: f64) -> Result<f64> {
    estimate_hls_constant_at(sigma, 0.0)
}

/// `∫_ℝ u₁^{2/(1+2σ)} = ∫ dt/(1+t²)`, which should be `π`.
pub fn hls_normalization_integral(sigma: f64) -> Result<f64> {
    require_hls_sigma(sigma)?;
    let quad = Adaptive::new(0.0, 1e-12);
    let f = |t: f64| hls_profile(sigma, 1.0, 0.0, t).powf(2.0 / (1.0 + 2.0 * sigma));
    Ok(2.0 * (quad.integrate(f, 0.0, 1.0)?.value + quad.integrate_to_infinity(f, 1.0)?.value))
}

/// `K_T(τ)` for `n = 1` straight from its image sum, with overflow-safe
/// exponential forms of `|2 sinh(x/2)|^{α}` and `(2 cosh(x/2))^{α}`.
fn line_kernel_periodic(sigma: f64, tau: f64, period: f64) -> f64 {
    let alpha = 2.0 * sigma - 1.0;
    let single = |x: f64| {
        let x = x.abs();
        let e = (-x).exp();
        (alpha * (0.5 * x + (-e).ln_1p())).exp() + (alpha * (0.5 * x + e.ln_1p())).exp()
    };
    // Images decay like e^{α|x|/2}; stop once that is below 1e−17.
    let images = (2.0 * 17.0 * std::f64::consts::LN_10 / -alpha / period).ceil() as i64 + 1;
    let mut total = single(tau);
    for m in (1..=images).rev() {
        total += single(tau + m as f64 * period) + single(tau - m as f64 * period);
    }
    total
}

/// `J_T[f_λ]` for `n = 1`, where `f_λ` is `u_λ` centred at `T/2`,
/// restricted to `[0, T]` and extended periodically. The double integral is
/// taken in `t = T/2 + λ tan φ`, which spreads the mass of `u_λ` evenly.
pub fn hls_test_quotient(sigma: f64, period: f64, lambda: f64, rel_tol: f64) -> Result<f64> {
    require_hls_sigma(sigma)?;
    if !(period > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "T and λ must be positive (got {period}, {lambda})"
        )));
    }
    let half_angle = (0.5 * period / lambda).atan();
    let position = |phi: f64| 0.5 * period + lambda * phi.tan();
    // u_λ dt = λ^{(1−2σ)/2} cos^{2σ−1}φ dφ
    let weight = |phi: f64| lambda.powf(0.5 - sigma) * phi.cos().powf(2.0 * sigma - 1.0);
    let quad = Adaptive::new(0.0, rel_tol).with_max_pieces(10_000);
    let inner_quad = Adaptive::new(0.0, 0.1 * rel_tol).with_max_pieces(10_000);
    let m = power_substitution(2.0 * sigma - 1.0);
    let mut failure = None;
    let mut inner = |phi: f64| {
        let t = position(phi);
        let g = |psi: f64| {
            let tau = t - position(psi);
            if tau == 0.0 {
                0.0
            } else {
                line_kernel_periodic(sigma, tau, period) * weight(psi)
            }
        };
        let up = inner_quad.integrate_endpoint(g, phi, half_angle, m);
        let down = inner_quad.integrate_endpoint(g, phi, -half_angle, m);
        match (up, down) {
            (Ok(a), Ok(b)) => a.value - b.value,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let form = quad
        .integrate(|phi| weight(phi) * inner(phi), -half_angle, half_angle)?
        .value;
    if let Some(e) = failure {
        return Err(e);
    }
    // ∫_0^T f_λ^{2/(1+2σ)} = 2 arctan(T/(2λ))
    let norm = (2.0 * half_angle).powf(1.0 + 2.0 * sigma);
    Ok(form / norm)
}

/// Largest `δ` on the grid `0.5, 0.5 − step, …` for which
/// `K(t) ≥ |t|^{2σ−1} + 4^{2σ−1}` at `t = 4δ k/samples`, `k = 1..samples`
/// (`n = 1`, `σ < 1/2`; `K` is even so `t > 0` suffices).
pub fn positive_mass_delta(params: &Params, step: f64, samples: usize) -> Result<f64> {
    if params.n() != 1 {
        return Err(Error::Precondition(format!(
            "the positive-mass bound concerns n = 1 (got n = {})",
            params.n()
        )));
    }
    require_hls_sigma(params.sigma())?;
    if !(step > 0.0 && step <= 0.5) || samples == 0 {
        return Err(Error::InvalidArgument(
            "need 0 < step ≤ 0.5 and at least one sample".into(),
        ));
    }
    let alpha = params.near_zero_power();
    let floor = 4f64.powf(alpha);
    let kernel =
        |t: f64| (2.0 * (0.5 * t).sinh()).powf(alpha) + (2.0 * (0.5 * t).cosh()).powf(alpha);
    let holds = |delta: f64| {
        (1..=samples).all(|k| {
            let t = 4.0 * delta * k as f64 / samples as f64;
            kernel(t) >= t.powf(alpha) + floor
        })
    };
    let mut k = 0usize;
    loop {
        let delta = 0.5 - k as f64 * step;
        if delta <= 0.0 {
            return Err(Error::Domain(
                "no δ in (0, 0.5] satisfies the positive-mass bound on the grid".into(),
            ));
        }
        if holds(delta) {
            return Ok(delta);
        }
        k += 1;
    }
}
