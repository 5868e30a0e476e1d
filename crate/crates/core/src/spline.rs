//! Periodic cubic spline on a uniform grid.
//!
//! The cyclic tridiagonal system for the nodal second derivatives is
//! circulant, so it is solved exactly by one FFT round trip.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    period: f64,
    spacing: f64,
    values: Vec<f64>,
    curvature: Vec<f64>,
}

impl PeriodicSpline {
    /// Interpolates `values[i]` at `t = i·period/len`.
    pub fn new(period: f64, values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "a periodic spline needs at least 3 nodes (got {n})"
            )));
        }
        if !(period > 0.0 && period.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "spline data must be finite with a positive period".into(),
            ));
        }
        let h = period / n as f64;
        // M_{i−1} + 4 M_i + M_{i+1} = 6 (y_{i+1} − 2 y_i + y_{i−1}) / h²
        let mut buf: Vec<Complex<f64>> = (0..n)
            .map(|i| {
                let second = values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n];
                Complex::new(6.0 * second / (h * h), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let symbol = 4.0 + 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos();
            *c /= symbol * n as f64;
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let curvature = buf.iter().map(|c| c.re).collect();
        Ok(Self {
            period,
            spacing: h,
            values: values.to_vec(),
            curvature,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Interval index and local coordinate in `[0, 1)` of `t`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let x = t.rem_euclid(self.period) / self.spacing;
        let i = (x.floor() as usize).min(self.values.len() - 1);
        (i, (x - i as f64).clamp(0.0, 1.0))
    }

    fn ends(&self, i: usize) -> (f64, f64, f64, f64) {
        let j = (i + 1) % self.values.len();
        (
            self.values[i],
            self.values[j],
            self.curvature[i],
            self.curvature[j],
        )
    }

    pub fn value(&self, t: f64) -> f64 {
        let (i, f) = self.locate(t);
        let (y0, y1, m0, m1) = self.ends(i);
        let g = 1.0 - f;
        let h2 = self.spacing * self.spacing / 6.0;
        g * y0 + f * y1 + h2 * ((g * g * g - g) * m0 + (f * f * f - f) * m1)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (i, f) = self.locate(t);
        let (y0, y1, m0, m1) = self.ends(i);
        let g = 1.0 - f;
        let h = self.spacing;
        (y1 - y0) / h + h / 6.0 * ((1.0 - 3.0 * g * g) * m0 + (3.0 * f * f - 1.0) * m1)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let (i, f) = self.locate(t);
        let (_, _, m0, m1) = self.ends(i);
        (1.0 - f) * m0 + f * m1
    }

    /// Exact `(min, max)` of the interpolant over one period, from the
    /// roots of the quadratic derivative on each interval.
    pub fn extrema(&self) -> (f64, f64) {
        let h = self.spacing;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.values.len() {
            let (y0, y1, m0, m1) = self.ends(i);
            lo = lo.min(y0);
            hi = hi.max(y0);
            // derivative = c0 + c1 f + c2 f²
            let c0 = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
            let c1 = h * m0;
            let c2 = 0.5 * h * (m1 - m0);
            for f in quadratic_roots(c2, c1, c0) {
                if f > 0.0 && f < 1.0 {
                    let g = 1.0 - f;
                    let v = g * y0
                        + f * y1
                        + h * h / 6.0 * ((g * g * g - g) * m0 + (f * f * f - f) * m1);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    }
}

/// Real roots of `a x² + b x + c`, using the cancellation-free form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}
