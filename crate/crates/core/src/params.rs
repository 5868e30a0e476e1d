use crate::error::{Error, Result};

/// Dimension `n` and order `σ` of the problem. Every exponent is derived on
/// demand from these two numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    n: u32,
    sigma: f64,
}

impl Params {
    pub fn new(n: u32, sigma: f64) -> Result<Self> {
        let valid = n >= 1 && sigma.is_finite() && sigma > 0.0 && 2.0 * sigma < n as f64;
        if !valid {
            return Err(Error::InvalidParams { n, sigma });
        }
        Ok(Self { n, sigma })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Critical exponent `(n+2σ)/(n−2σ)`.
    pub fn p_crit(&self) -> f64 {
        (self.nf() + 2.0 * self.sigma) / (self.nf() - 2.0 * self.sigma)
    }

    /// Norm exponent `2n/(n+2σ)` of the periodic variational problem.
    pub fn q_norm(&self) -> f64 {
        2.0 * self.nf() / (self.nf() + 2.0 * self.sigma)
    }

    /// `(n−2σ)/2`: the exponential decay rate of `K` and the power of `r` in
    /// the Emden–Fowler substitution `u(r) = r^{-a} ψ(ln r)`.
    pub fn decay_rate(&self) -> f64 {
        0.5 * (self.nf() - 2.0 * self.sigma)
    }

    /// `2σ−1`: the power of `|t|` in the singular part of `K` near zero.
    pub fn near_zero_power(&self) -> f64 {
        2.0 * self.sigma - 1.0
    }

    /// Whether `σ − 1/2` is a non-negative integer, where the singular part
    /// of `K` at the origin carries a logarithm instead of a pure power.
    pub fn has_log_singularity(&self) -> bool {
        let k = self.sigma - 0.5;
        k >= 0.0 && k == k.round()
    }
}
