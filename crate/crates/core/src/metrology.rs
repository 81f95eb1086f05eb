//! Fisher information of the excited-population measurement and the
//! resulting frequency uncertainty `δΩ = √(t / (T F))`.
//!
//! `F` is the classical Fisher information of a two-outcome measurement,
//! `(∂P_e/∂Ω)² / [P_e (1 - P_e)]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{pe_longtime, perturbative_uncertainty, solve_bound_states};
use crate::dynamics::{decompose, population_derivative_series, DEFAULT_DERIVATIVE_STEP};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{linear_fit, OscillationWindow};

/// Populations closer than this to 0 or 1 carry no usable information.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Where `P_e` and `∂P_e/∂Ω` come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Exact diagonalisation plus finite differences in `Ω`.
    Numeric,
    /// Long-time law with poles re-found at `Ω ± h`.
    LongtimeExact,
    /// Weak-coupling closed form.
    Perturbative,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Numeric => "numeric",
            Source::LongtimeExact => "longtime_exact",
            Source::Perturbative => "perturbative",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(Source::Numeric),
            "longtime_exact" | "longtime" => Ok(Source::LongtimeExact),
            "perturbative" => Ok(Source::Perturbative),
            other => Err(Error::Parse(format!("unknown source '{other}'"))),
        }
    }
}

pub fn fisher_information(pe: f64, dpe_domega: f64) -> Result<f64> {
    if !(pe > DEGENERACY_TOLERANCE && pe < 1.0 - DEGENERACY_TOLERANCE) {
        return Err(Error::DegeneratePopulation { pe });
    }
    Ok(dpe_domega * dpe_domega / (pe * (1.0 - pe)))
}

/// `√(t / (T F))`; `F = 0` is a singular point.
fn uncertainty_from(t: f64, t_total: f64, pe: f64, dpe: f64) -> Result<f64> {
    let f = fisher_information(pe, dpe)?;
    let d = (t / (t_total * f)).sqrt();
    if !(f > 0.0) || !d.is_finite() {
        return Err(Error::SingularPoint { t, reason: "Fisher information vanishes" });
    }
    Ok(d)
}

fn check_times(t: f64, t_total: f64) -> Result<()> {
    if !(t > 0.0) || !(t <= t_total) {
        return Err(Error::InvalidGrid(format!("encoding time {t} must lie in (0, T = {t_total}]")));
    }
    Ok(())
}

/// Long-time populations at `Ω` and the Richardson-improved derivative from
/// poles re-found at `Ω ± h` and `Ω ± h/2`.
struct LongtimeModel {
    centre: crate::analytic::BoundStateSolution,
    shifted: [crate::analytic::BoundStateSolution; 4],
    step: f64,
}

impl LongtimeModel {
    fn new(params: &ModelParams, step: f64) -> Result<Self> {
        let at = |s: f64| solve_bound_states(&params.with_omega_atom(params.omega_atom + s));
        Ok(LongtimeModel {
            centre: solve_bound_states(params)?,
            shifted: [at(step)?, at(-step)?, at(0.5 * step)?, at(-0.5 * step)?],
            step,
        })
    }

    fn population(&self, t: f64) -> f64 {
        pe_longtime(&self.centre, t)
    }

    fn derivative(&self, t: f64) -> f64 {
        let p: Vec<f64> = self.shifted.iter().map(|s| pe_longtime(s, t)).collect();
        let coarse = (p[0] - p[1]) / (2.0 * self.step);
        let fine = (p[2] - p[3]) / self.step;
        (4.0 * fine - coarse) / 3.0
    }
}

/// `δΩ` at one encoding time `t` within a total budget `t_total`.
pub fn uncertainty_at(params: &ModelParams, t: f64, t_total: f64, source: Source) -> Result<f64> {
    check_times(t, t_total)?;
    match source {
        Source::Numeric => {
            let pe = decompose(params)?.excited_population(t);
            let dpe = population_derivative_series(params, &[t], DEFAULT_DERIVATIVE_STEP)?[0];
            uncertainty_from(t, t_total, pe, dpe)
        }
        Source::LongtimeExact => {
            let model = LongtimeModel::new(params, DEFAULT_DERIVATIVE_STEP)?;
            uncertainty_from(t, t_total, model.population(t), model.derivative(t))
        }
        Source::Perturbative => perturbative_uncertainty(params, t, t_total),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyCurve {
    pub times: Vec<f64>,
    /// `None` where the point is singular or degenerate.
    pub delta_omega: Vec<Option<f64>>,
    pub t_total: f64,
    pub source: Source,
}

impl UncertaintyCurve {
    /// Defined `(t, δΩ)` pairs.
    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().zip(&self.delta_omega).filter_map(|(&t, d)| d.map(|d| (t, d)))
    }

    pub fn defined_count(&self) -> usize {
        self.delta_omega.iter().filter(|d| d.is_some()).count()
    }
}

fn keep_point(t: f64, res: Result<f64>) -> Result<Option<f64>> {
    match res {
        Ok(d) => Ok(Some(d)),
        Err(e @ (Error::DegeneratePopulation { .. } | Error::SingularPoint { .. })) => {
            log::debug!("δΩ undefined at t = {t}: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// `δΩ` over a grid in `(0, t_total]`; singular points become `None`.
pub fn uncertainty_curve(
    params: &ModelParams,
    times: &[f64],
    t_total: f64,
    source: Source,
) -> Result<UncertaintyCurve> {
    for &t in times {
        check_times(t, t_total)?;
    }
    let delta_omega: Vec<Option<f64>> = match source {
        Source::Numeric => {
            let dec = decompose(params)?;
            let dpe = population_derivative_series(params, times, DEFAULT_DERIVATIVE_STEP)?;
            times
                .par_iter()
                .zip(&dpe)
                .map(|(&t, &d)| keep_point(t, uncertainty_from(t, t_total, dec.excited_population(t), d)))
                .collect::<Result<_>>()?
        }
        Source::LongtimeExact => {
            let model = LongtimeModel::new(params, DEFAULT_DERIVATIVE_STEP)?;
            times
                .iter()
                .map(|&t| keep_point(t, uncertainty_from(t, t_total, model.population(t), model.derivative(t))))
                .collect::<Result<_>>()?
        }
        Source::Perturbative => {
            times.iter().map(|&t| keep_point(t, perturbative_uncertainty(params, t, t_total))).collect::<Result<_>>()?
        }
    };
    let skipped = delta_omega.iter().filter(|d| d.is_none()).count();
    if skipped > 0 {
        log::info!("{skipped} of {} points singular or degenerate ({})", times.len(), source.name());
    }
    Ok(UncertaintyCurve { times: times.to_vec(), delta_omega, t_total, source })
}

/// Power-law fit `ln δΩ = slope · ln(1/t) + intercept` at the optimal
/// measurement times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub window: OscillationWindow,
}

pub const MIN_FIT_POINTS: usize = 10;

/// Smallest defined `δΩ` in each consecutive period inside `window`.
pub fn optimal_points(curve: &UncertaintyCurve, window: OscillationWindow, period: f64) -> Vec<(f64, f64)> {
    let mut best: Vec<(i64, f64, f64)> = Vec::new();
    for (t, d) in curve.defined().filter(|&(t, _)| t >= window.t_start && t <= window.t_end) {
        let slot = ((t - window.t_start) / period).floor() as i64;
        match best.last_mut() {
            Some(last) if last.0 == slot => {
                if d < last.2 {
                    *last = (slot, t, d);
                }
            }
            _ => best.push((slot, t, d)),
        }
    }
    best.into_iter().map(|(_, t, d)| (t, d)).collect()
}

/// Fit the per-period minima of `δΩ` in `window`. `period` is the
/// oscillation period of `P_e`.
pub fn scaling_fit(curve: &UncertaintyCurve, window: OscillationWindow, period: f64) -> Result<ScalingFit> {
    if !(period > 0.0) || !(window.t_end > window.t_start) || !(window.t_start >= 0.0) {
        return Err(Error::InvalidGrid("fit needs a positive period and a nonempty window".into()));
    }
    let points = optimal_points(curve, window, period);
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} optimal points in [{}, {}], need {MIN_FIT_POINTS}",
            points.len(),
            window.t_start,
            window.t_end
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| -t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, d)| d.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(ScalingFit { slope: fit.slope, intercept: fit.intercept, r: fit.r, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::grid_between;
    use proptest::prelude::*;

    #[test]
    fn fisher_arithmetic() {
        assert_eq!(fisher_information(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(fisher_information(0.3, 0.0).unwrap(), 0.0);
        for pe in [0.0, 1.0, 1.0 - 1e-14, -0.1] {
            assert!(matches!(fisher_information(pe, 0.2), Err(Error::DegeneratePopulation { .. })));
        }
    }

    #[test]
    fn zero_fisher_is_singular() {
        assert!(matches!(uncertainty_from(1.0, 10.0, 0.3, 0.0), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn decoupled_curve_is_all_absent() {
        let p = ModelParams::new(20.0, 20.0, 0.0, 15);
        let times = grid_between(0.5, 20.0, 0.5).unwrap();
        let c = uncertainty_curve(&p, &times, 20.0, Source::Numeric).unwrap();
        assert_eq!(c.defined_count(), 0);
        assert_eq!(c.delta_omega.len(), times.len());
    }

    #[test]
    fn time_outside_budget_rejected() {
        let p = ModelParams::new(20.5, 20.0, 0.5, 15);
        assert!(uncertainty_at(&p, 0.0, 10.0, Source::Perturbative).is_err());
        assert!(uncertainty_at(&p, 11.0, 10.0, Source::Numeric).is_err());
    }

    #[test]
    fn doubling_budget_scales_by_root_two() {
        let p = ModelParams::new(20.5, 20.0, 0.5, 63);
        for source in [Source::Numeric, Source::LongtimeExact, Source::Perturbative] {
            let a = uncertainty_at(&p, 7.3, 100.0, source).unwrap();
            let b = uncertainty_at(&p, 7.3, 200.0, source).unwrap();
            assert!((a / b - 2f64.sqrt()).abs() < 1e-10, "{source:?}");
        }
    }

    #[test]
    fn rabi_oracle_uncertainty() {
        // single cavity: detuned two-level Rabi formula
        let p = ModelParams::new(10.6, 10.0, 0.8, 1);
        let rabi = |omega: f64, t: f64| {
            let d = omega - 10.0;
            let g2 = d * d + 4.0 * 0.64;
            1.0 - 4.0 * 0.64 / g2 * (0.5 * g2.sqrt() * t).sin().powi(2)
        };
        let t = 3.1;
        let h = 1e-4;
        let pe = rabi(10.6, t);
        let dpe = (rabi(10.6 + h, t) - rabi(10.6 - h, t)) / (2.0 * h);
        let oracle = (t / (50.0 * dpe * dpe / (pe * (1.0 - pe)))).sqrt();
        let got = uncertainty_at(&p, t, 50.0, Source::Numeric).unwrap();
        assert!((got / oracle - 1.0).abs() < 1e-5, "{got} vs {oracle}");
    }

    #[test]
    fn longtime_matches_numeric_after_cut_decays() {
        let p = ModelParams::new(20.5, 20.0, 1.3, 1023);
        let times = grid_between(150.0, 160.0, 0.37).unwrap();
        let num = uncertainty_curve(&p, &times, 200.0, Source::Numeric).unwrap();
        let lt = uncertainty_curve(&p, &times, 200.0, Source::LongtimeExact).unwrap();
        let rel: Vec<f64> =
            num.delta_omega.iter().zip(&lt.delta_omega).map(|(a, b)| (a.unwrap() / b.unwrap() - 1.0).abs()).collect();
        // pointwise agreement fails only next to the singular points F -> 0
        let close = rel.iter().filter(|&&r| r < 0.05).count();
        assert!(close as f64 >= 0.8 * rel.len() as f64, "{rel:?}");
    }

    fn synthetic_curve(f: impl Fn(f64) -> f64) -> UncertaintyCurve {
        let times = grid_between(1.0, 200.0, 0.05).unwrap();
        let delta_omega = times.iter().map(|&t| Some(f(t))).collect();
        UncertaintyCurve { times, delta_omega, t_total: 200.0, source: Source::Numeric }
    }

    #[test]
    fn exact_power_law_fit() {
        let c = synthetic_curve(|t| 3.0 / t * (1.0 + 0.3 * (2.0 * t).cos().powi(2)));
        let w = OscillationWindow { t_start: 1.0, t_end: 200.0 };
        let fit = scaling_fit(&c, w, std::f64::consts::PI / 2.0).unwrap();
        assert!((fit.slope - 1.0).abs() < 2e-3, "{}", fit.slope);
        assert!(fit.r > 0.9999);
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let c = synthetic_curve(|_| 0.7);
        let fit = scaling_fit(&c, OscillationWindow { t_start: 1.0, t_end: 200.0 }, 5.0).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!((fit.intercept - 0.7f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn too_few_periods_rejected() {
        let c = synthetic_curve(|t| 1.0 / t);
        let w = OscillationWindow { t_start: 1.0, t_end: 30.0 };
        assert!(matches!(scaling_fit(&c, w, 5.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn optimal_points_one_per_period() {
        let c = synthetic_curve(|t| 2.0 + (3.0 * t).sin());
        let w = OscillationWindow { t_start: 1.0, t_end: 50.0 };
        let pts = optimal_points(&c, w, 2.0 * std::f64::consts::PI / 3.0);
        assert!(pts.len() >= 23 && pts.len() <= 25);
        assert!(pts.iter().skip(1).take(pts.len() - 2).all(|&(_, d)| (d - 1.0).abs() < 1e-2));
    }

    proptest! {
        #[test]
        fn fisher_nonnegative(pe in 1e-6f64..(1.0 - 1e-6), d in -1e3f64..1e3) {
            prop_assert!(fisher_information(pe, d).unwrap() >= 0.0);
        }

        #[test]
        fn joint_rescaling_invariance(pe in 0.01f64..0.99, d in 0.01f64..10.0, t in 0.1f64..100.0, s in 0.1f64..10.0) {
            let a = uncertainty_from(t, 2.0 * t, pe, d).unwrap();
            let b = uncertainty_from(s * t, 2.0 * s * t, pe, d).unwrap();
            prop_assert!((a / b - 1.0).abs() < 1e-12);
        }
    }
}
