//! Infinite-array solution of the single-excitation problem.
//!
//! The atomic amplitude splits into two bound-state pole terms, pure phases
//! at frequencies `x1 > ω₀ + 2ξ` and `x2 < ω₀ - 2ξ`, plus a decaying
//! branch-cut integral over the band:
//!
//! `α(t) = A1 e^{-i x1 t} + A2 e^{-i x2 t} + ∫ C(x) e^{i(x-ω₀)t} dx`.
//!
//! Once the cut has decayed, `P_e = A1² + A2² + 2 A1 A2 cos(φt)` with
//! `φ = x1 - x2`.

pub mod branch_cut;
pub mod perturbative;
pub mod poles;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ModelParams;

pub use branch_cut::{branch_cut_density, branch_cut_integral, branch_cut_weight};
pub use perturbative::{
    perturbative_solution, perturbative_uncertainty, uncertainty_terms, PerturbativeSolution, UncertaintyTerms,
};
pub use poles::{find_poles, pole_function_lower, pole_function_upper, residue_weights, PolePair};

/// Both bound states: pole frequencies, residue weights and their beat
/// frequency `phi = x1 - x2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStateSolution {
    pub x1: f64,
    pub x2: f64,
    pub a1: f64,
    pub a2: f64,
    pub phi: f64,
    pub residual_upper: f64,
    pub residual_lower: f64,
    pub upper_offset: f64,
    pub lower_offset: f64,
}

impl BoundStateSolution {
    pub fn from_poles(params: &ModelParams, poles: &PolePair) -> Self {
        let (a1, a2) = residue_weights(params, poles);
        BoundStateSolution {
            x1: poles.x1,
            x2: poles.x2,
            a1,
            a2,
            phi: poles.upper_offset + poles.lower_offset + 4.0 * params.xi,
            residual_upper: poles.residual_upper,
            residual_lower: poles.residual_lower,
            upper_offset: poles.upper_offset,
            lower_offset: poles.lower_offset,
        }
    }

    /// Period `2π/φ` of the long-time oscillation.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.phi
    }

    /// Long-time oscillation amplitude `|2 A1 A2|`.
    pub fn amplitude(&self) -> f64 {
        (2.0 * self.a1 * self.a2).abs()
    }

    /// Long-time mean `A1² + A2²`.
    pub fn mean(&self) -> f64 {
        self.a1 * self.a1 + self.a2 * self.a2
    }
}

/// Poles and residue weights in one call.
pub fn solve_bound_states(params: &ModelParams) -> Result<BoundStateSolution> {
    let poles = find_poles(params)?;
    Ok(BoundStateSolution::from_poles(params, &poles))
}

/// `A1 e^{-i x1 t} + A2 e^{-i x2 t} + branch cut`.
pub fn alpha_analytic(params: &ModelParams, solution: &BoundStateSolution, t: f64) -> Result<Complex64> {
    let bound = solution.a1 * Complex64::cis(-solution.x1 * t) + solution.a2 * Complex64::cis(-solution.x2 * t);
    Ok(bound + branch_cut_integral(params, t)?)
}

/// `A1² + A2² + 2 A1 A2 cos(φt)`.
pub fn pe_longtime(solution: &BoundStateSolution, t: f64) -> f64 {
    solution.mean() + 2.0 * solution.a1 * solution.a2 * (solution.phi * t).cos()
}

/// Parameters bundled with their bound states, for repeated evaluation.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticSolution {
    pub params: ModelParams,
    pub bound: BoundStateSolution,
}

impl AnalyticSolution {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(AnalyticSolution { params: *params, bound: solve_bound_states(params)? })
    }

    pub fn alpha(&self, t: f64) -> Result<Complex64> {
        alpha_analytic(&self.params, &self.bound, t)
    }

    pub fn population(&self, t: f64) -> Result<f64> {
        Ok(self.alpha(t)?.norm_sqr())
    }

    pub fn longtime_population(&self, t: f64) -> f64 {
        pe_longtime(&self.bound, t)
    }

    /// `A1 + A2 + ∫C`, which must equal `α(0) = 1`.
    pub fn weight_sum(&self) -> Result<f64> {
        Ok(self.bound.a1 + self.bound.a2 + branch_cut_weight(&self.params)?)
    }
}
