//! Weak-coupling closed forms: first-order poles, weights, oscillation
//! frequency and the resulting frequency uncertainty.
//!
//! Everything here expands in `J⁴` around the band edges with
//! `Ω± = ±2ξ + ω₀ - Ω`. Formulas are evaluated as written; nothing checks
//! that `J` is actually small, so callers judge the regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeSolution {
    /// Zeroth-order poles `ω₀ ± 2ξ`.
    pub x01: f64,
    pub x02: f64,
    /// First-order coefficients: `x_j ≈ x0j + C_j J⁴`.
    pub c1: f64,
    pub c2: f64,
    pub a1: f64,
    pub a2: f64,
    pub phi: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

impl PerturbativeSolution {
    pub fn x1(&self, params: &ModelParams) -> f64 {
        self.x01 + self.c1 * params.coupling_j.powi(4)
    }

    pub fn x2(&self, params: &ModelParams) -> f64 {
        self.x02 + self.c2 * params.coupling_j.powi(4)
    }
}

fn detuning_factors(params: &ModelParams) -> Result<(f64, f64)> {
    let xi = params.xi;
    let base = params.omega_cavity - params.omega_atom;
    let plus = 2.0 * xi + base;
    let minus = -2.0 * xi + base;
    let tiny = f64::EPSILON * xi;
    if plus.abs() <= tiny || minus.abs() <= tiny {
        return Err(Error::BandEdgeDegeneracy);
    }
    Ok((plus, minus))
}

pub fn perturbative_solution(params: &ModelParams) -> Result<PerturbativeSolution> {
    let xi = params.xi;
    let (plus, minus) = detuning_factors(params)?;
    let j4 = params.coupling_j.powi(4);
    let c1 = 1.0 / (4.0 * xi * plus * plus);
    let c2 = -1.0 / (4.0 * xi * minus * minus);
    Ok(PerturbativeSolution {
        x01: params.omega_cavity + 2.0 * xi,
        x02: params.omega_cavity - 2.0 * xi,
        c1,
        c2,
        a1: j4 / (2.0 * plus.powi(3) * xi),
        a2: -j4 / (2.0 * minus.powi(3) * xi),
        phi: 4.0 * xi + (c1 - c2) * j4,
        omega_plus: plus,
        omega_minus: minus,
    })
}

/// `φ = 4ξ + [(ω₀-Ω)² + 4ξ²] J⁴ / (2ξ[(ω₀-Ω)² - 4ξ²]²)`, written out
/// independently of [`PerturbativeSolution::phi`].
pub fn oscillation_frequency_closed_form(params: &ModelParams) -> f64 {
    let xi = params.xi;
    let d2 = (params.omega_cavity - params.omega_atom).powi(2);
    4.0 * xi + (d2 + 4.0 * xi * xi) / (2.0 * xi * (d2 - 4.0 * xi * xi).powi(2)) * params.coupling_j.powi(4)
}

/// The three factors of the weak-coupling variance at encoding time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyTerms {
    pub b1: f64,
    pub b2: f64,
    /// `B3`, i.e. the square of the printed `B3^{1/2}` expression.
    pub b3: f64,
    pub sqrt_b3: f64,
}

pub fn uncertainty_terms(params: &ModelParams, t: f64) -> Result<UncertaintyTerms> {
    let sol = perturbative_solution(params)?;
    let xi = params.xi;
    let j4 = params.coupling_j.powi(4);
    let j8 = j4 * j4;
    let (op, om) = (sol.omega_plus, sol.omega_minus);
    let d = params.detuning();
    let (s, c) = (sol.phi * t).sin_cos();

    let b1 = -j8 / (4.0 * om.powi(6) * xi * xi) - j8 / (4.0 * op.powi(6) * xi * xi)
        + j8 * c / (2.0 * om.powi(3) * op.powi(3) * xi * xi)
        + 1.0;
    let b2 = 1.0 / om.powi(6) + 1.0 / op.powi(6) - 2.0 * c / (om.powi(3) * op.powi(3));
    let sqrt_b3 = j4 * t * d * (12.0 * xi * xi + d * d) * s / (xi * om.powi(6) * op.powi(6))
        - 3.0 / om.powi(7)
        - 3.0 / op.powi(7)
        + 3.0 * c / (om.powi(4) * op.powi(3))
        + 3.0 * c / (om.powi(3) * op.powi(4));
    Ok(UncertaintyTerms { b1, b2, b3: sqrt_b3 * sqrt_b3, sqrt_b3 })
}

/// Weak-coupling `δΩ = √(t ξ² B1 B2 / (J⁸ T B3))`.
///
/// Points where `B3 = 0` or where the variance is not a positive finite
/// number (outside the expansion's regime) are reported as
/// [`Error::SingularPoint`].
pub fn perturbative_uncertainty(params: &ModelParams, t: f64, t_total: f64) -> Result<f64> {
    if !(t > 0.0) || !(t_total > 0.0) {
        return Err(Error::InvalidGrid("encoding time and total duration must be positive".into()));
    }
    let terms = uncertainty_terms(params, t)?;
    if terms.b3 == 0.0 {
        return Err(Error::SingularPoint { t, reason: "B3 vanishes" });
    }
    let j8 = params.coupling_j.powi(8);
    let variance = t * params.xi.powi(2) * terms.b1 * terms.b2 / (j8 * t_total * terms.b3);
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::SingularPoint { t, reason: "weak-coupling variance is not positive" });
    }
    Ok(variance.sqrt())
}
