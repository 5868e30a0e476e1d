//! The handful of special functions the kernels and constants need.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Surface area of the unit sphere `S^k ⊂ ℝ^{k+1}`; `ω_0 = 2` counts the two
/// points of `S^0`.
pub fn sphere_area(k: u32) -> f64 {
    // ω_k = 2π ω_{k−2} / (k − 1), from ω_0 = 2 and ω_1 = 2π
    let mut area = if k % 2 == 0 { 2.0 } else { 2.0 * PI };
    let mut j = 2 + k % 2;
    while j <= k {
        area *= 2.0 * PI / (j as f64 - 1.0);
        j += 2;
    }
    area
}

pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Riemann zeta for real `s ≠ 1`.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s != 1.0, "zeta has a pole at s = 1");
    if s < -0.5 {
        // Functional equation; 1 − s > 1.5 is safely summable.
        let t = 1.0 - s;
        2f64.powf(s) * PI.powf(s - 1.0) * (0.5 * PI * s).sin() * gamma(t) * zeta_euler_maclaurin(t)
    } else {
        zeta_euler_maclaurin(s)
    }
}

/// Euler–Maclaurin summation with a cut at `N = 16` and ten Bernoulli terms.
fn zeta_euler_maclaurin(s: f64) -> f64 {
    const N: usize = 16;
    // B_{2k}/(2k)! for k = 1..=10.
    const B_OVER_FACT: [f64; 10] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -5.284_190_138_687_493e-10,
        1.338_253_653_068_468e-11,
        -3.389_680_296_322_583e-13,
        8.586_062_056_277_845e-15,
        -2.174_868_698_558_062e-16,
    ];
    let mut sum = 0.0;
    for j in 1..N {
        sum += (j as f64).powf(-s);
    }
    let nf = N as f64;
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // Rising product s(s+1)…(s+2k−2) times N^{-s-2k+1}.
    let mut rising = s;
    let mut power = nf.powf(-s - 1.0);
    for (k, c) in B_OVER_FACT.iter().enumerate() {
        sum += c * rising * power;
        let m = 2.0 * k as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= nf * nf;
    }
    sum
}
