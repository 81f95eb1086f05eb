//! Bound-state poles of the resolvent outside the photon band.
//!
//! With `x = ip`, the upper pole solves `x - Ω - J²/(ξ√(M²-4)) = 0` above the
//! band and the lower pole `x - Ω + J²/(ξ√(M²-4)) = 0` below it, where
//! `M = (x - ω₀)/ξ`. Both are solved in band-edge offset coordinates
//! (`u = x - ω₀ - 2ξ` above, `v = ω₀ - 2ξ - x` below) so that `M² - 4 =
//! (u/ξ)(u/ξ + 4)` keeps full relative precision for poles hugging an edge.

use serde::{Deserialize, Serialize};

use crate::error::{Branch, Error, Result};
use crate::model::ModelParams;

use super::perturbative;

/// Inner bracket offset from the band edge, in units of `xi`.
pub const INNER_OFFSET: f64 = 1e-8;
/// Bisection stops once the bracket is this narrow, in units of `xi`.
pub const BISECTION_TOLERANCE: f64 = 1e-12;

const MAX_BISECTIONS: usize = 400;
const MAX_NEWTON_STEPS: usize = 3;

/// Root locations (and their band-edge offsets) of both pole functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolePair {
    pub x1: f64,
    pub x2: f64,
    /// `x1 - (ω₀ + 2ξ)`, carried at full precision.
    pub upper_offset: f64,
    /// `(ω₀ - 2ξ) - x2`, carried at full precision.
    pub lower_offset: f64,
    pub residual_upper: f64,
    pub residual_lower: f64,
}

fn edge_root(params: &ModelParams, offset: f64) -> f64 {
    let s = offset / params.xi;
    (s * (s + 4.0)).sqrt()
}

fn self_energy(params: &ModelParams, offset: f64) -> f64 {
    params.coupling_j.powi(2) / (params.xi * edge_root(params, offset))
}

/// Upper pole function at offset `u > 0` above the band; increasing in `u`.
pub(crate) fn upper_at_offset(params: &ModelParams, u: f64) -> f64 {
    let (_, top) = params.band_edges();
    (top - params.omega_atom) + u - self_energy(params, u)
}

/// Lower pole function at offset `v > 0` below the band; decreasing in `v`.
pub(crate) fn lower_at_offset(params: &ModelParams, v: f64) -> f64 {
    let (bottom, _) = params.band_edges();
    (bottom - params.omega_atom) - v + self_energy(params, v)
}

fn upper_slope(params: &ModelParams, u: f64) -> f64 {
    let s = u / params.xi;
    let q = s * (s + 4.0);
    1.0 + params.coupling_j.powi(2) * (2.0 * s + 4.0) / (2.0 * params.xi.powi(2) * q * q.sqrt())
}

fn lower_slope(params: &ModelParams, v: f64) -> f64 {
    -upper_slope(params, v)
}

/// `f₁(x) = x - Ω - J²/(ξ√(M²-4))`, defined for `x > ω₀ + 2ξ`.
pub fn pole_function_upper(params: &ModelParams, x: f64) -> Result<f64> {
    let (_, top) = params.band_edges();
    if !(x > top) {
        return Err(Error::OutsideDomain { branch: Branch::Upper, x });
    }
    Ok(upper_at_offset(params, x - top))
}

/// `f₂(x) = x - Ω + J²/(ξ√(M²-4))`, defined for `x < ω₀ - 2ξ`.
pub fn pole_function_lower(params: &ModelParams, x: f64) -> Result<f64> {
    let (bottom, _) = params.band_edges();
    if !(x < bottom) {
        return Err(Error::OutsideDomain { branch: Branch::Lower, x });
    }
    Ok(lower_at_offset(params, bottom - x))
}

/// Outer bracket extent `Λ = max(10ξ, 2|Ω - ω₀| + 10ξ)`.
pub fn bracket_extent(params: &ModelParams) -> f64 {
    (10.0 * params.xi).max(2.0 * params.detuning().abs() + 10.0 * params.xi)
}

/// Root of `f` on `[lo, hi]` (offset coordinates), where `f` changes sign.
fn solve_offset(
    f: impl Fn(f64) -> f64,
    slope: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    seed: Option<f64>,
    tol: f64,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    if let Some(s) = seed.filter(|s| *s > lo && *s < hi) {
        let fs = f(s);
        if fs == 0.0 {
            return Some(s);
        }
        if fs.signum() == flo.signum() {
            lo = s;
            flo = fs;
        } else {
            hi = s;
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_STEPS {
        let step = f(x) / slope(x);
        let next = x - step;
        if !next.is_finite() || next < lo || next > hi || f(next).abs() > f(x).abs() {
            break;
        }
        x = next;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    Some(x)
}

/// Locate both bound-state poles by bracketed bisection plus Newton polish.
///
/// Fails with [`Error::PoleNotFound`] when a bracket shows no sign change,
/// which happens for weak coupling with `Ω` far outside the band.
pub fn find_poles(params: &ModelParams) -> Result<PolePair> {
    let params = params.validate()?;
    let xi = params.xi;
    let (bottom, top) = params.band_edges();
    let lo = INNER_OFFSET * xi;
    let hi = bracket_extent(&params);
    let tol = BISECTION_TOLERANCE * xi;

    let pert = perturbative::perturbative_solution(&params).ok();
    let j4 = params.coupling_j.powi(4);
    let seed_upper = pert.map(|p| p.c1 * j4).filter(|s| s.is_finite());
    let seed_lower = pert.map(|p| -p.c2 * j4).filter(|s| s.is_finite());

    let u = solve_offset(|u| upper_at_offset(&params, u), |u| upper_slope(&params, u), lo, hi, seed_upper, tol)
        .ok_or(Error::PoleNotFound { branch: Branch::Upper, lo: top + lo, hi: top + hi })?;
    let v = solve_offset(|v| lower_at_offset(&params, v), |v| lower_slope(&params, v), lo, hi, seed_lower, tol)
        .ok_or(Error::PoleNotFound { branch: Branch::Lower, lo: bottom - hi, hi: bottom - lo })?;

    Ok(PolePair {
        x1: top + u,
        x2: bottom - v,
        upper_offset: u,
        lower_offset: v,
        residual_upper: upper_at_offset(&params, u),
        residual_lower: lower_at_offset(&params, v),
    })
}

/// Residue weights `A_j = (d² - 4ξ²) / (d² - 4ξ² + (x_j - Ω) d)` with
/// `d = x_j - ω₀`, evaluated from the band-edge offsets.
pub fn residue_weights(params: &ModelParams, poles: &PolePair) -> (f64, f64) {
    let xi = params.xi;
    let weight = |offset: f64, d: f64, x_minus_omega: f64| {
        let s = offset * (offset + 4.0 * xi);
        s / (s + x_minus_omega * d)
    };
    let (bottom, top) = params.band_edges();
    let u = poles.upper_offset;
    let v = poles.lower_offset;
    let a1 = weight(u, 2.0 * xi + u, (top - params.omega_atom) + u);
    let a2 = weight(v, -(2.0 * xi + v), (bottom - params.omega_atom) - v);
    (a1, a2)
}
