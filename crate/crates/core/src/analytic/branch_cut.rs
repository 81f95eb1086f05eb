//! Continuum (branch-cut) part of the atomic amplitude.
//!
//! `∫_{-2ξ}^{2ξ} C(x) e^{i(x-ω₀)t} dx` is mapped onto `x = 2ξ cos θ`. The
//! square-root factors at the band edges cancel against `dx/dθ`, leaving a
//! smooth, even, periodic integrand in `θ` that vanishes at both ends, so
//! the trapezoid rule converges spectrally. Orders double from
//! [`INITIAL_ORDER`] until two successive estimates agree to
//! [`CONVERGENCE_TOLERANCE`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const INITIAL_ORDER: usize = 64;
pub const MAX_ORDER: usize = 1 << 22;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

/// Spectral density of the atom inside the band,
/// `C(x) = J²√(4ξ²-x²) / (π[(Ω-ω₀+x)²(4ξ²-x²) + J⁴])`, zero outside.
pub fn branch_cut_density(params: &ModelParams, x: f64) -> f64 {
    let j2 = params.coupling_j.powi(2);
    let width2 = 4.0 * params.xi * params.xi - x * x;
    if j2 == 0.0 || width2 <= 0.0 {
        return 0.0;
    }
    let shift = params.detuning() + x;
    j2 * width2.sqrt() / (PI * (shift * shift * width2 + j2 * j2))
}

/// Integrand in `θ` with the carrier `e^{-iω₀t}` factored out.
fn theta_integrand(params: &ModelParams, theta: f64, t: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let x = 2.0 * params.xi * c;
    branch_cut_density(params, x) * 2.0 * params.xi * s * Complex64::cis(x * t)
}

/// Nested trapezoid estimates of `∫_0^π g(θ) dθ`; `g(0) = g(π) = 0`.
fn integrate_theta(g: impl Fn(f64) -> Complex64) -> Result<Complex64> {
    let mut order = INITIAL_ORDER;
    let h = PI / order as f64;
    let mut estimate: Complex64 = (1..order).map(|k| g(k as f64 * h)).sum::<Complex64>() * h;
    let mut change = f64::INFINITY;
    while order < MAX_ORDER {
        let h_fine = PI / (2 * order) as f64;
        let midpoints: Complex64 = (0..order).map(|k| g((2 * k + 1) as f64 * h_fine)).sum();
        let refined = 0.5 * estimate + midpoints * h_fine;
        change = (refined - estimate).norm();
        estimate = refined;
        order *= 2;
        if change < CONVERGENCE_TOLERANCE {
            return Ok(estimate);
        }
    }
    Err(Error::QuadratureNotConverged { order, change })
}

/// Branch-cut contribution to `α(t)`.
pub fn branch_cut_integral(params: &ModelParams, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidGrid(format!("branch-cut time must be nonnegative, got {t}")));
    }
    let reduced = integrate_theta(|theta| theta_integrand(params, theta, t))?;
    Ok(reduced * Complex64::cis(-params.omega_cavity * t))
}

/// `∫ C(x) dx`, the continuum share of the initial atomic weight.
pub fn branch_cut_weight(params: &ModelParams) -> Result<f64> {
    Ok(integrate_theta(|theta| theta_integrand(params, theta, 0.0))?.re)
}
