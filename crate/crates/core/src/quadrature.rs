//! Quadrature: globally adaptive 10/21-point Gauss–Kronrod,
//! endpoint power substitutions for integrable singularities, a semi-infinite
//! map, and Gauss–Jacobi rules built by Golub–Welsch.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes and
// the last entry is the centre.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut resabs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Piece { a, b, value, error }
}

/// Globally adaptive Gauss–Kronrod integrator: always bisects the piece with
/// the largest error estimate until `error ≤ max(abs_tol, rel_tol·|value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_pieces: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_pieces: 2000,
        }
    }
}

impl Adaptive {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_pieces(mut self, max_pieces: usize) -> Self {
        self.max_pieces = max_pieces;
        self
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate_breaks(f, &[a, b])
    }

    /// Integrates over `[points[0], points[last]]`, starting from the pieces
    /// delimited by `points`, which must be monotone. Repeated points are
    /// skipped.
    pub fn integrate_breaks<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        points: &[f64],
    ) -> Result<Integral> {
        assert!(points.len() >= 2, "need at least two break points");
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[0] != w[1] {
                heap.push(gk21(&mut f, w[0], w[1]));
                evaluations += 21;
            }
        }
        let mut finished_value = 0.0;
        let mut finished_error = 0.0;
        loop {
            let (value, error) = heap
                .iter()
                .fold((finished_value, finished_error), |(v, e), p| {
                    (v + p.value, e + p.error)
                });
            if error <= self.abs_tol.max(self.rel_tol * value.abs()) {
                return Ok(Integral {
                    value,
                    error,
                    evaluations,
                });
            }
            if heap.len() >= self.max_pieces {
                return Err(Error::Accuracy { value, error });
            }
            let Some(worst) = heap.pop() else {
                return Err(Error::Accuracy { value, error });
            };
            let mid = 0.5 * (worst.a + worst.b);
            // Pieces too narrow to split in floating point are frozen.
            if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
                finished_value += worst.value;
                finished_error += worst.error;
                continue;
            }
            let left = gk21(&mut f, worst.a, mid);
            let right = gk21(&mut f, mid, worst.b);
            evaluations += 42;
            heap.push(left);
            heap.push(right);
        }
    }

    /// `∫_a^∞ f` through `x = a + (1−s)/s`.
    pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
    ) -> Result<Integral> {
        self.integrate(
            |s| {
                let x = a + (1.0 - s) / s;
                let v = f(x) / (s * s);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
        )
    }

    /// `∫_a^b f` for `f` with an integrable singularity at `a` (`b < a` is
    /// allowed), through `x = a + (b−a)·s^m`. With `f ~ |x−a|^γ` the choice
    /// `m = 1/(1+γ)` makes the transformed integrand regular at `s = 0`; see
    /// [`power_substitution`].
    pub fn integrate_endpoint<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
        m: f64,
    ) -> Result<Integral> {
        let len = b - a;
        let mut res = self.integrate(
            |s| {
                if s <= 0.0 {
                    return 0.0;
                }
                let sm1 = s.powf(m - 1.0);
                f(a + len * s * sm1) * m * sm1
            },
            0.0,
            1.0,
        )?;
        res.value *= len;
        res.error *= len.abs();
        Ok(res)
    }
}

/// Substitution power for [`Adaptive::integrate_endpoint`] given the local
/// behaviour `|x−a|^γ`. Non-negative powers get a mild `m = 2` so that
/// derivative singularities and logarithms are also smoothed.
pub fn power_substitution(gamma: f64) -> f64 {
    if gamma < 0.0 {
        1.0 / (1.0 + gamma)
    } else {
        2.0
    }
}

/// Nodes and weights for `∫_{-1}^{1} (1−x)^α (1+x)^β f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn new(order: usize, alpha: f64, beta: f64) -> Result<Self> {
        if order == 0 || alpha <= -1.0 || beta <= -1.0 {
            return Err(Error::InvalidArgument(format!(
                "Gauss–Jacobi needs order ≥ 1 and α, β > −1 (got {order}, {alpha}, {beta})"
            )));
        }
        let ab = alpha + beta;
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 0..order {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            jacobi[(k, k)] = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
            if k + 1 < order {
                let j = kf + 1.0;
                let s = 2.0 * j + ab;
                let num = 4.0 * j * (j + alpha) * (j + beta) * (j + ab);
                let den = s * s * (s + 1.0) * (s - 1.0);
                let off = (num / den).sqrt();
                jacobi[(k, k + 1)] = off;
                jacobi[(k + 1, k)] = off;
            }
        }
        let mu0 =
            ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
                - ln_gamma(ab + 2.0))
            .exp();
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn legendre(order: usize) -> Self {
        Self::new(order, 0.0, 0.0).expect("Legendre parameters are valid")
    }

    /// Applies the rule to `[a, b]` for a plain integrand (Legendre case) or
    /// with the weight rescaled to `(b−x)^α (x−a)^β`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let centre = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(centre + half * x))
            .sum::<f64>()
            * half
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrals() {
        let q = Adaptive::new(0.0, 1e-13);
        let r = q.integrate(|x| x.exp(), 0.0, 1.0).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let r = q.integrate_to_infinity(|x| (-x).exp(), 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
        let r = q
            .integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0)
            .unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let q = Adaptive::new(0.0, 1e-13);
        // ∫_0^1 x^{-1/2} cos x dx = √(2π)·C(√(2/π)) ≈ 1.809048475800544
        let r = q
            .integrate_endpoint(
                |x| x.powf(-0.5) * x.cos(),
                0.0,
                1.0,
                power_substitution(-0.5),
            )
            .unwrap();
        assert!(
            (r.value - 1.809_048_475_800_544).abs() < 1e-13,
            "{}",
            r.value
        );
        // Same integral with reversed orientation.
        let r = q
            .integrate_endpoint(|x| (1.0 - x).powf(-0.5) * (1.0 - x).cos(), 1.0, 0.0, 2.0)
            .unwrap();
        assert!(
            (r.value + 1.809_048_475_800_544).abs() < 1e-13,
            "{}",
            r.value
        );
        // Logarithmic endpoint.
        let r = q.integrate_endpoint(|x| x.ln(), 0.0, 1.0, 3.0).unwrap();
        assert!((r.value + 1.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_jacobi_moments() {
        let gl = GaussJacobi::legendre(10);
        let v = gl.integrate(|x| x.powi(18), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        // ∫_{-1}^{1} (1−x)^{-1/2}(1+x)^{1/2} dx = π
        let gj = GaussJacobi::new(8, -0.5, 0.5).unwrap();
        let v: f64 = gj.weights.iter().sum();
        assert!((v - std::f64::consts::PI).abs() < 1e-13);
        // Exact for x^3 against the weight: ∫ (1−x)^{-1/2}(1+x)^{1/2} x^3 = 3π/8
        let v: f64 = gj
            .nodes
            .iter()
            .zip(&gj.weights)
            .map(|(x, w)| w * x.powi(3))
            .sum();
        assert!((v - 3.0 * std::f64::consts::PI / 8.0).abs() < 1e-13, "{v}");
    }
}
