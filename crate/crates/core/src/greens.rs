//! Green functions of `(−Δ)^m` on the unit ball of `ℝⁿ`.
//!
//! `G₁` and the Poisson kernel `H₁` are closed forms. The polyharmonic
//! `G_m` is the `(m−1)`-fold iterated integral of `G₁` and is estimated by
//! importance-sampled Monte Carlo. Its leading singularity
//! `c(n,m)|x−y|^{2m−n}` is available as [`free_space_coefficient`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussJacobi;
use crate::special::sphere_area;

/// `c(n,m) = Γ((n−2m)/2) / (2^{2m} π^{n/2} Γ(m))`.
pub fn free_space_coefficient(n: u32, m: u32) -> Result<f64> {
    if m == 0 || 2 * m >= n {
        return Err(Error::Precondition(format!(
            "need 1 ≤ m and 2m < n (got n = {n}, m = {m})"
        )));
    }
    // Γ((n−2m)/2) / π^{n/2}: for odd n both carry one √π, which cancels, so
    // the value reduces to a rational times an integer power of π.
    let k = n - 2 * m;
    let mut ratio = 1.0;
    let mut j = k;
    while j > 2 {
        j -= 2;
        ratio *= 0.5 * j as f64;
    }
    for i in 1..m {
        ratio /= i as f64;
    }
    Ok(ratio / (4f64.powi(m as i32) * PI.powi((n / 2) as i32)))
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn require_dimension(n: u32, points: &[&[f64]]) -> Result<()> {
    if n < 3 {
        return Err(Error::Precondition(format!(
            "ball Green functions need n ≥ 3 (got {n})"
        )));
    }
    if points.iter().any(|p| p.len() != n as usize) {
        return Err(Error::InvalidArgument(format!(
            "points must have dimension {n}"
        )));
    }
    Ok(())
}

fn require_interior(x: &[f64]) -> Result<()> {
    if !(norm_sq(x) < 1.0) {
        return Err(Error::Domain(format!(
            "point {x:?} is not inside the unit ball"
        )));
    }
    Ok(())
}

/// `G₁(x,y)` with no input checks; `x, y` inside the ball, `x ≠ y`.
fn green_unchecked(n: u32, x: &[f64], y: &[f64]) -> f64 {
    let e = 1.0 - 0.5 * n as f64;
    // |x/|x| − |x| y|² = 1 − 2 x·y + |x|²|y|², which is 1 at x = 0
    let image = 1.0 - 2.0 * dot(x, y) + norm_sq(x) * norm_sq(y);
    (dist_sq(x, y).powf(e) - image.powf(e)) / ((n as f64 - 2.0) * sphere_area(n - 1))
}

/// Dirichlet Green function of `−Δ` on the unit ball.
pub fn green_laplacian(n: u32, x: &[f64], y: &[f64]) -> Result<f64> {
    require_dimension(n, &[x, y])?;
    require_interior(x)?;
    require_interior(y)?;
    if dist_sq(x, y) == 0.0 {
        return Err(Error::Domain("G₁ is singular at x = y".into()));
    }
    Ok(green_unchecked(n, x, y))
}

/// `H₁(x,y) = (1−|x|²) / (ω_{n−1} |x−y|ⁿ)` for `|y| = 1`.
pub fn poisson_kernel(n: u32, x: &[f64], y: &[f64]) -> Result<f64> {
    require_dimension(n, &[x, y])?;
    require_interior(x)?;
    if (norm_sq(y).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "boundary point {y:?} is not on the unit sphere"
        )));
    }
    Ok((1.0 - norm_sq(x)) / (sphere_area(n - 1) * dist_sq(x, y).powf(0.5 * n as f64)))
}

/// Product rule on `S^{n−1}`: Gauss–Gegenbauer in each polar angle and
/// equispaced azimuths. Exact for polynomials of degree `< 2·order`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(n: u32, order: usize) -> Result<Self> {
        if n < 2 || order == 0 {
            return Err(Error::InvalidArgument(format!(
                "sphere rule needs n ≥ 2 and order ≥ 1 (got {n}, {order})"
            )));
        }
        // S¹ first, then lift: S^k = {(cos θ, sin θ ω′)}, dS = (1−c²)^{(k−2)/2} dc dS′
        let count = 2 * order;
        let step = 2.0 * PI / count as f64;
        let mut nodes: Vec<Vec<f64>> = (0..count)
            .map(|j| vec![(j as f64 * step).cos(), (j as f64 * step).sin()])
            .collect();
        let mut weights = vec![step; count];
        for k in 2..n {
            let exponent = 0.5 * (k as f64 - 2.0);
            let rule = GaussJacobi::new(order, exponent, exponent)?;
            let mut lifted = Vec::with_capacity(nodes.len() * order);
            let mut lifted_w = Vec::with_capacity(nodes.len() * order);
            for (c, wc) in rule.nodes.iter().zip(&rule.weights) {
                let s = (1.0 - c * c).sqrt();
                for (node, w) in nodes.iter().zip(&weights) {
                    let mut v = Vec::with_capacity(k as usize + 1);
                    v.push(*c);
                    v.extend(node.iter().map(|x| s * x));
                    lifted.push(v);
                    lifted_w.push(wc * w);
                }
            }
            nodes = lifted;
            weights = lifted_w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Right side of `u(x) = ∫_B G₁(x,·)(−Δu) + ∫_{∂B} H₁(x,·) u`.
///
/// The volume term is taken in polar coordinates about `x`, where the
/// `|x−y|^{2−n}` singularity is cancelled by the Jacobian; `order` sets both
/// the radial Gauss rule and the sphere rule.
pub fn representation_formula(
    n: u32,
    x: &[f64],
    minus_laplacian: impl Fn(&[f64]) -> f64,
    boundary: impl Fn(&[f64]) -> f64,
    order: usize,
) -> Result<f64> {
    require_dimension(n, &[x])?;
    require_interior(x)?;
    let sphere = SphereRule::new(n, order)?;
    let radial = GaussJacobi::legendre(order);
    let x_sq = norm_sq(x);
    let mut y = vec![0.0; n as usize];
    let volume = sphere.integrate(|dir| {
        // distance from x to the sphere along dir
        let along = dot(x, dir);
        let reach = -along + (along * along + 1.0 - x_sq).sqrt();
        radial.integrate(
            |rho| {
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(dir) {
                    *yi = xi + rho * di;
                }
                green_unchecked(n, x, &y) * minus_laplacian(&y) * rho.powi(n as i32 - 1)
            },
            0.0,
            reach,
        )
    });
    let surface = sphere.integrate(|dir| {
        let kernel = (1.0 - x_sq) / (sphere_area(n - 1) * dist_sq(x, dir).powf(0.5 * n as f64));
        kernel * boundary(dir)
    });
    Ok(volume + surface)
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Independent RNG streams per estimate; fixed so results do not depend on
/// the thread count.
pub const MC_STREAMS: u64 = 64;

/// `G_m` on the unit ball of `ℝⁿ`, `(−Δ)^m G_m = δ` with iterated Dirichlet
/// conditions.
#[derive(Debug, Clone, Copy)]
pub struct BallGreen {
    n: u32,
    m: u32,
    mc_samples: u64,
}

impl BallGreen {
    pub fn new(n: u32, m: u32, mc_samples: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Precondition(format!(
                "ball Green functions need n ≥ 3 (got {n})"
            )));
        }
        free_space_coefficient(n, m)?;
        if m >= 2 && mc_samples == 0 {
            return Err(Error::InvalidArgument(
                "Monte Carlo needs at least one sample".into(),
            ));
        }
        Ok(Self { n, m, mc_samples })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn mc_samples(&self) -> u64 {
        self.mc_samples
    }

    pub fn free_space_coefficient(&self) -> f64 {
        free_space_coefficient(self.n, self.m).expect("validated at construction")
    }

    /// Estimates `G_m(x,y) = ∫ G₁(x,z₁) G₁(z₁,z₂) ⋯ G₁(z_{m−1},y) dz`.
    ///
    /// Each `z_k` is drawn from an equal mixture of the uniform law on the
    /// ball and `|z − c|^{2−n}` laws centred at `z_{k−1}` and at `y`. With
    /// `max_rel_se` set, an estimate whose relative standard error exceeds it
    /// is reported as [`Error::SampleBudget`].
    pub fn iterated_monte_carlo(
        &self,
        x: &[f64],
        y: &[f64],
        seed: u64,
        max_rel_se: Option<f64>,
    ) -> Result<McEstimate> {
        if self.m < 2 {
            return Err(Error::Precondition(
                "Monte Carlo is for m ≥ 2; use green_laplacian for m = 1".into(),
            ));
        }
        require_dimension(self.n, &[x, y])?;
        require_interior(x)?;
        require_interior(y)?;
        if dist_sq(x, y) == 0.0 {
            return Err(Error::Domain("G_m is singular at x = y".into()));
        }
        let sampler = ChainSampler::new(self.n, self.m, x, y);
        let total = self.mc_samples;
        let moments: Vec<(f64, f64)> = (0..MC_STREAMS)
            .into_par_iter()
            .map(|stream| {
                let count = total / MC_STREAMS + u64::from(stream < total % MC_STREAMS);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                let mut buf = sampler.buffers();
                let (mut sum, mut sum_sq) = (0.0, 0.0);
                for _ in 0..count {
                    let w = sampler.draw(&mut rng, &mut buf);
                    sum += w;
                    sum_sq += w * w;
                }
                (sum, sum_sq)
            })
            .collect();
        let (sum, sum_sq) = moments
            .iter()
            .fold((0.0, 0.0), |acc, m| (acc.0 + m.0, acc.1 + m.1));
        let count = total as f64;
        let value = sum / count;
        let variance = if total > 1 {
            ((sum_sq - count * value * value) / (count - 1.0)).max(0.0)
        } else {
            f64::INFINITY
        };
        let std_error = (variance / count).sqrt();
        if let Some(requested) = max_rel_se {
            let achieved = std_error / value.abs();
            if !(achieved <= requested) {
                return Err(Error::SampleBudget {
                    achieved,
                    requested,
                });
            }
        }
        Ok(McEstimate {
            value,
            std_error,
            samples: total,
        })
    }
}

/// Reach of the centred proposal; covers the ball from any interior centre.
const PROPOSAL_RADIUS: f64 = 2.0;

struct ChainSampler<'a> {
    n: u32,
    links: u32,
    start: &'a [f64],
    end: &'a [f64],
    ball_density: f64,
    centred_scale: f64,
}

struct ChainBuffers {
    prev: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> ChainSampler<'a> {
    fn new(n: u32, m: u32, start: &'a [f64], end: &'a [f64]) -> Self {
        let area = sphere_area(n - 1);
        Self {
            n,
            links: m,
            start,
            end,
            ball_density: n as f64 / area,
            // ρ = R√U gives density 2ρ/R² in ρ, i.e. 2/(ω R²) |z−c|^{2−n}
            centred_scale: 2.0 / (area * PROPOSAL_RADIUS * PROPOSAL_RADIUS),
        }
    }

    fn buffers(&self) -> ChainBuffers {
        ChainBuffers {
            prev: vec![0.0; self.n as usize],
            next: vec![0.0; self.n as usize],
        }
    }

    fn centred_density(&self, z: &[f64], centre: &[f64]) -> f64 {
        let d2 = dist_sq(z, centre);
        if d2 >= PROPOSAL_RADIUS * PROPOSAL_RADIUS {
            0.0
        } else {
            self.centred_scale * d2.powf(1.0 - 0.5 * self.n as f64)
        }
    }

    /// One importance weight for the chain `start → z₁ → ⋯ → end`.
    fn draw(&self, rng: &mut ChaCha8Rng, buf: &mut ChainBuffers) -> f64 {
        buf.prev.copy_from_slice(self.start);
        let mut weight = 1.0;
        for _ in 1..self.links {
            match rng.gen_range(0..3u8) {
                0 => uniform_in_ball(rng, &mut buf.next),
                1 => centred_around(rng, &buf.prev, &mut buf.next),
                _ => centred_around(rng, self.end, &mut buf.next),
            }
            let density = (self.ball_density * f64::from(u8::from(norm_sq(&buf.next) < 1.0))
                + self.centred_density(&buf.next, &buf.prev)
                + self.centred_density(&buf.next, self.end))
                / 3.0;
            if !(norm_sq(&buf.next) < 1.0) || dist_sq(&buf.next, &buf.prev) == 0.0 {
                return 0.0;
            }
            weight *= green_unchecked(self.n, &buf.prev, &buf.next) / density;
            std::mem::swap(&mut buf.prev, &mut buf.next);
        }
        if dist_sq(&buf.prev, self.end) == 0.0 {
            return 0.0;
        }
        weight * green_unchecked(self.n, &buf.prev, self.end)
    }
}

fn uniform_in_ball(rng: &mut impl Rng, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        if norm_sq(out) < 1.0 {
            return;
        }
    }
}

fn centred_around(rng: &mut impl Rng, centre: &[f64], out: &mut [f64]) {
    // direction from a uniform point of the ball, away from its centre
    loop {
        uniform_in_ball(rng, out);
        let r2 = norm_sq(out);
        if r2 > 1e-4 {
            let scale = PROPOSAL_RADIUS * rng.gen::<f64>().sqrt() / r2.sqrt();
            for (o, c) in out.iter_mut().zip(centre) {
                *o = c + scale * *o;
            }
            return;
        }
    }
}
