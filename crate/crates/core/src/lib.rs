//! Periodic Fowler solutions of `ψ = K ∗ ψ^p` on the line, where `K` is the
//! Emden–Fowler reduction of the Riesz potential `|x−y|^{2σ−n}` and
//! `p = (n+2σ)/(n−2σ)`.
//!
//! The pipeline is: [`kernel`] builds `K` and its periodization, [`solver`]
//! maximizes the periodic Rayleigh-type quotient whose critical points solve
//! the equation, [`radial`] maps the periodic profile back to a radial
//! singular solution on the punctured ball, and [`verify`] / [`greens`] hold
//! independent numerical checks of the surrounding identities.

pub mod convolution;
pub mod error;
pub mod greens;
pub mod kernel;
pub mod params;
pub mod quadrature;
pub mod radial;
pub mod solver;
pub mod special;
pub mod spline;
pub mod verify;

pub use error::{Error, Result};
pub use params::Params;
