//! Post-processing of population series: regular-oscillation windows,
//! Fourier peaks, oscillation statistics and least-squares fits.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::analytic::{solve_bound_states, BoundStateSolution};
use crate::dynamics::{evolve, uniform_grid, TimeSeries, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Time span of the regular (single-frequency) oscillation regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationWindow {
    pub t_start: f64,
    pub t_end: f64,
}

impl OscillationWindow {
    /// Regular-oscillation duration, `t_regular`.
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Sliding-window test used to decide where oscillations are "regular".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowCriterion {
    /// Length of each test window in oscillation periods.
    pub periods: f64,
    /// Allowed RMS deviation as a fraction of `|2 A1 A2|`.
    pub threshold: f64,
    /// Windows advance by `periods / stride_divisor` periods.
    pub stride_divisor: usize,
    /// Minimum series length, in periods.
    pub min_span_periods: f64,
}

impl Default for WindowCriterion {
    fn default() -> Self {
        WindowCriterion { periods: 4.0, threshold: 0.20, stride_divisor: 16, min_span_periods: 20.0 }
    }
}

fn require_uniform(series: &TimeSeries) -> Result<f64> {
    series.uniform_step().ok_or(Error::NonUniformGrid)
}

/// RMS distance of `values` from `mean + amp cos(φt - θ)`, with the phase
/// `θ` fitted by projection onto `cos φt` and `sin φt`.
fn phase_fitted_rms(times: &[f64], values: &[f64], phi: f64, mean: f64, amp: f64) -> f64 {
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        let (s, c) = (phi * t).sin_cos();
        let y = v - mean;
        cc += c * c;
        ss += s * s;
        cs += c * s;
        yc += y * c;
        ys += y * s;
    }
    let det = cc * ss - cs * cs;
    let (a, b) = if det.abs() > 0.0 { ((yc * ss - ys * cs) / det, (ys * cc - yc * cs) / det) } else { (1.0, 0.0) };
    let theta = b.atan2(a);
    let sq: f64 = times.iter().zip(values).map(|(&t, &v)| (v - mean - amp * (phi * t - theta).cos()).powi(2)).sum();
    (sq / times.len() as f64).sqrt()
}

/// Longest run of test windows whose phase-fitted RMS deviation from the
/// long-time law stays below the threshold.
pub fn detect_regular_window_with(
    series: &TimeSeries,
    model: &BoundStateSolution,
    criterion: &WindowCriterion,
) -> Result<OscillationWindow> {
    let dt = require_uniform(series)?;
    let period = model.period();
    if series.span() < criterion.min_span_periods * period {
        return Err(Error::InsufficientData(format!(
            "series spans {:.3} but window detection needs {} periods ({:.3})",
            series.span(),
            criterion.min_span_periods,
            criterion.min_span_periods * period
        )));
    }
    let len = ((criterion.periods * period / dt).round() as usize).max(2);
    let stride = (len / criterion.stride_divisor.max(1)).max(1);
    if series.len() < len {
        return Err(Error::NoRegularWindow);
    }
    let amp = model.amplitude();
    let mean = model.mean();
    let limit = criterion.threshold * amp;

    let starts: Vec<usize> = (0..=series.len() - len).step_by(stride).collect();
    let compliant: Vec<bool> = starts
        .par_iter()
        .map(|&s| {
            let rms = phase_fitted_rms(&series.times[s..s + len], &series.values[s..s + len], model.phi, mean, amp);
            rms < limit
        })
        .collect();

    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for (i, &ok) in compliant.iter().enumerate() {
        if ok {
            let first = *run_start.get_or_insert(i);
            if best.is_none_or(|(a, b)| i - first > b - a) {
                best = Some((first, i));
            }
        } else {
            run_start = None;
        }
    }
    let (first, last) = best.ok_or(Error::NoRegularWindow)?;
    Ok(OscillationWindow { t_start: series.times[starts[first]], t_end: series.times[starts[last] + len - 1] })
}

pub fn detect_regular_window(series: &TimeSeries, model: &BoundStateSolution) -> Result<OscillationWindow> {
    detect_regular_window_with(series, model, &WindowCriterion::default())
}

/// Taper applied before the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    Rectangular,
    Hann,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions {
    pub taper: Taper,
    /// Transform length as a multiple of the sample count.
    pub padding: usize,
    pub min_samples: usize,
    /// The secondary peak must lie this many FWHMs away from the main one.
    pub secondary_guard_fwhm: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { taper: Taper::Rectangular, padding: 8, min_samples: 256, secondary_guard_fwhm: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub freq: f64,
    pub height: f64,
}

/// Magnitude spectrum on an angular-frequency axis (units of `xi`).
///
/// Magnitudes are normalised so a cosine of amplitude `a` peaks near `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub main_peak_freq: f64,
    pub main_peak_height: f64,
    pub fwhm: f64,
    pub secondary: Option<Peak>,
    /// Spacing of the (zero-padded) frequency grid.
    pub bin_width: f64,
}

pub fn fourier_spectrum(series: &TimeSeries) -> Result<Spectrum> {
    fourier_spectrum_with(series, &SpectrumOptions::default())
}

pub fn fourier_spectrum_with(series: &TimeSeries, options: &SpectrumOptions) -> Result<Spectrum> {
    if series.len() < options.min_samples {
        return Err(Error::InsufficientData(format!(
            "{} samples, spectrum needs at least {}",
            series.len(),
            options.min_samples
        )));
    }
    let dt = require_uniform(series)?;
    let n = series.len();
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let taper: Vec<f64> = match options.taper {
        Taper::Rectangular => vec![1.0; n],
        Taper::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect(),
    };
    let gain: f64 = taper.iter().sum();
    let size = n * options.padding.max(1);
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); size];
    for (slot, (&v, &w)) in buf.iter_mut().zip(series.values.iter().zip(&taper)) {
        *slot = Complex::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);

    let half = size / 2 + 1;
    let bin_width = 2.0 * PI / (size as f64 * dt);
    let frequencies: Vec<f64> = (0..half).map(|k| k as f64 * bin_width).collect();
    let magnitudes: Vec<f64> = buf[..half].iter().map(|z| 2.0 * z.norm() / gain).collect();

    let main = (1..half)
        .max_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]))
        .ok_or_else(|| Error::InsufficientData("empty spectrum".into()))?;
    let height = magnitudes[main];
    if !(height > 0.0) {
        return Err(Error::InsufficientData("flat series has no spectral peak".into()));
    }
    let fwhm = full_width_half_max(&frequencies, &magnitudes, main);

    let guard = options.secondary_guard_fwhm * fwhm;
    let secondary = (1..half - 1)
        .filter(|&k| magnitudes[k] > magnitudes[k - 1] && magnitudes[k] >= magnitudes[k + 1])
        .filter(|&k| (frequencies[k] - frequencies[main]).abs() > guard)
        .max_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]))
        .map(|k| Peak { freq: frequencies[k], height: magnitudes[k] });

    Ok(Spectrum {
        main_peak_freq: frequencies[main],
        main_peak_height: height,
        fwhm,
        secondary,
        bin_width,
        frequencies,
        magnitudes,
    })
}

/// Width at half height, linearly interpolated on both flanks.
fn full_width_half_max(freq: &[f64], mag: &[f64], peak: usize) -> f64 {
    let half = 0.5 * mag[peak];
    let crossing = |inside: usize, outside: usize| {
        let (m_in, m_out) = (mag[inside], mag[outside]);
        freq[inside] + (m_in - half) / (m_in - m_out) * (freq[outside] - freq[inside])
    };
    let mut l = peak;
    while l > 0 && mag[l - 1] > half {
        l -= 1;
    }
    let left = if l == 0 { freq[0] } else { crossing(l, l - 1) };
    let mut r = peak;
    while r + 1 < mag.len() && mag[r + 1] > half {
        r += 1;
    }
    let right = if r + 1 == mag.len() { freq[r] } else { crossing(r, r + 1) };
    right - left
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationStats {
    pub amplitude: f64,
    pub mean: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean over a whole number of periods and half the 1st-99th percentile
/// spread.
pub fn oscillation_stats(series: &TimeSeries, period: f64) -> Result<OscillationStats> {
    if series.len() < 2 || !(period > 0.0) {
        return Err(Error::InsufficientData("need a positive period and at least two samples".into()));
    }
    let periods = (series.span() / period).floor();
    if periods < 5.0 {
        return Err(Error::InsufficientData(format!("window covers {periods} periods, need 5")));
    }
    let t_end = series.times[0] + periods * period;
    let whole: Vec<f64> =
        series.times.iter().zip(&series.values).filter(|(&t, _)| t < t_end).map(|(_, &v)| v).collect();
    let mean = whole.iter().sum::<f64>() / whole.len() as f64;
    let mut sorted = series.values.clone();
    sorted.sort_by(f64::total_cmp);
    let amplitude = 0.5 * (percentile(&sorted, 0.99) - percentile(&sorted, 0.01));
    Ok(OscillationStats { amplitude, mean })
}

/// Ordinary least squares `y = slope x + intercept` with Pearson `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::InsufficientData("x and y lengths differ".into()));
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r = if syy > 0.0 { (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
    Ok(LinearFit { slope, intercept: my - slope * mx, r })
}

/// Regular-window duration for one register size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationPoint {
    pub qubits: u32,
    pub cavities: usize,
    pub window: OscillationWindow,
    pub duration: f64,
    /// Amplitude and mean inside the window, when it spans enough periods.
    pub stats: Option<OscillationStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationScaling {
    /// Fit of `ln(ξ t_regular)` against `N`.
    pub fit: LinearFit,
    /// `exp(slope)`: growth of the duration per added qubit.
    pub doubling_factor: f64,
    pub points: Vec<DurationPoint>,
    /// Register sizes without a detectable window, with the reason.
    pub excluded: Vec<(u32, String)>,
}

/// Time horizon simulated for an `n`-cavity ring: past the first revival at
/// `~n/(2ξ)` with room for at least the window detector's minimum span.
pub fn duration_horizon(params: &ModelParams, period: f64, criterion: &WindowCriterion) -> f64 {
    (0.75 * params.cavities as f64 / params.xi).max(1.5 * criterion.min_span_periods * period)
}

/// Simulate far enough to locate the regular window and detect it.
pub fn simulate_regular_window(
    params: &ModelParams,
    criterion: &WindowCriterion,
) -> Result<(TimeSeries, BoundStateSolution, OscillationWindow)> {
    let bound = solve_bound_states(params)?;
    let horizon = duration_horizon(params, bound.period(), criterion);
    let series = evolve(params, &uniform_grid(horizon, DEFAULT_DT / params.xi)?)?;
    let window = detect_regular_window_with(&series, &bound, criterion)?;
    Ok((series, bound, window))
}

/// Spectrum of the regular-window part of the exact dynamics.
pub fn regular_window_spectrum(
    params: &ModelParams,
    options: &SpectrumOptions,
) -> Result<(OscillationWindow, Spectrum)> {
    let (series, _, window) = simulate_regular_window(params, &WindowCriterion::default())?;
    let spectrum = fourier_spectrum_with(&series.restrict(window.t_start, window.t_end), options)?;
    Ok((window, spectrum))
}

/// Detect the regular window for one register size.
pub fn regular_window_for(template: &ModelParams, qubits: u32, criterion: &WindowCriterion) -> Result<DurationPoint> {
    let params = ModelParams::from_qubits(template.omega_atom, template.omega_cavity, template.coupling_j, qubits)?;
    let params = ModelParams { xi: template.xi, ..params };
    let (series, bound, window) = simulate_regular_window(&params, criterion)?;
    let stats = oscillation_stats(&series.restrict(window.t_start, window.t_end), bound.period()).ok();
    Ok(DurationPoint { qubits, cavities: params.cavities, window, duration: window.duration(), stats })
}

pub fn duration_scaling(template: &ModelParams, qubits: &[u32]) -> Result<DurationScaling> {
    duration_scaling_with(template, qubits, &WindowCriterion::default())
}

pub fn duration_scaling_with(
    template: &ModelParams,
    qubits: &[u32],
    criterion: &WindowCriterion,
) -> Result<DurationScaling> {
    let results: Vec<(u32, Result<DurationPoint>)> =
        qubits.par_iter().map(|&q| (q, regular_window_for(template, q, criterion))).collect();
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for (q, res) in results {
        match res {
            Ok(p) => points.push(p),
            Err(e) => {
                log::warn!("N = {q} excluded from duration scaling: {e}");
                excluded.push((q, e.to_string()));
            }
        }
    }
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "duration scaling needs at least 4 register sizes with a window, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.qubits as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.duration * template.xi).ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(DurationScaling { doubling_factor: fit.slope.exp(), fit, points, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::pe_longtime;

    fn synthetic_model() -> BoundStateSolution {
        BoundStateSolution {
            x1: 12.3,
            x2: 7.9,
            a1: 0.33,
            a2: 0.045,
            phi: 4.4,
            residual_upper: 0.0,
            residual_lower: 0.0,
            upper_offset: 0.3,
            lower_offset: 0.1,
        }
    }

    fn synthetic_series(model: &BoundStateSolution, t_max: f64) -> TimeSeries {
        let times = uniform_grid(t_max, 0.02).unwrap();
        let values = times.iter().map(|&t| pe_longtime(model, t)).collect();
        TimeSeries::new(times, values).unwrap()
    }

    #[test]
    fn pure_signal_window_is_full_span() {
        let m = synthetic_model();
        let s = synthetic_series(&m, 60.0);
        let w = detect_regular_window(&s, &m).unwrap();
        assert_eq!(w.t_start, 0.0);
        // last window ends within one stride of the series end
        assert!(s.times.last().unwrap() - w.t_end < 4.0 * m.period() / 16.0 + 0.02);
    }

    #[test]
    fn noise_only_has_no_window() {
        let m = synthetic_model();
        let times = uniform_grid(60.0, 0.02).unwrap();
        let values = times.iter().map(|&t| m.mean() + 0.3 * (1.7 * t).sin()).collect();
        let s = TimeSeries::new(times, values).unwrap();
        assert!(matches!(detect_regular_window(&s, &m), Err(Error::NoRegularWindow)));
    }

    #[test]
    fn short_series_rejected() {
        let m = synthetic_model();
        let s = synthetic_series(&m, 10.0);
        assert!(matches!(detect_regular_window(&s, &m), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn cosine_peak_within_a_bin() {
        let f = 2.7;
        let times = uniform_grid(100.0, 0.02).unwrap();
        let values = times.iter().map(|&t| 0.4 + 0.1 * (f * t).cos()).collect();
        let s = fourier_spectrum(&TimeSeries::new(times, values).unwrap()).unwrap();
        assert!((s.main_peak_freq - f).abs() <= s.bin_width);
        assert!((s.main_peak_height - 0.1).abs() < 0.01);
        // rectangular window: FWHM ≈ 2π · 1.2067 / L
        assert!((s.fwhm - 2.0 * PI * 1.2067 / 100.0).abs() < 0.003, "{}", s.fwhm);
        assert!(s.frequencies.windows(2).all(|w| w[1] > w[0]) && s.frequencies[0] == 0.0);
    }

    #[test]
    fn hann_widens_the_peak() {
        let times = uniform_grid(100.0, 0.02).unwrap();
        let values = times.iter().map(|&t| (3.0 * t).cos()).collect();
        let series = TimeSeries::new(times, values).unwrap();
        let rect = fourier_spectrum(&series).unwrap();
        let hann =
            fourier_spectrum_with(&series, &SpectrumOptions { taper: Taper::Hann, ..Default::default() }).unwrap();
        assert!(hann.fwhm > 1.5 * rect.fwhm);
    }

    #[test]
    fn spectrum_rejects_irregular_or_short_input() {
        let times: Vec<f64> = (0..300).map(|i| (i as f64).powf(1.1)).collect();
        let s = TimeSeries::new(times, vec![0.0; 300]).unwrap();
        assert!(matches!(fourier_spectrum(&s), Err(Error::NonUniformGrid)));
        let short = TimeSeries::new((0..100).map(|i| i as f64).collect(), vec![0.0; 100]).unwrap();
        assert!(fourier_spectrum(&short).is_err());
    }

    #[test]
    fn stats_of_synthetic_signal() {
        let m = synthetic_model();
        let s = synthetic_series(&m, 40.0);
        let st = oscillation_stats(&s, m.period()).unwrap();
        assert!((st.amplitude / m.amplitude() - 1.0).abs() < 0.01);
        assert!((st.mean / m.mean() - 1.0).abs() < 0.01);
    }

    #[test]
    fn stats_of_constant_series() {
        let times = uniform_grid(40.0, 0.02).unwrap();
        let s = TimeSeries::new(times.clone(), vec![0.25; times.len()]).unwrap();
        let st = oscillation_stats(&s, 1.0).unwrap();
        assert_eq!(st.amplitude, 0.0);
        assert!((st.mean - 0.25).abs() < 1e-15);
        assert!(oscillation_stats(&s, 10.0).is_err());
    }

    #[test]
    fn linear_fit_cases() {
        let xs = [0.0, 1.0, 2.0, 3.5];
        let line = linear_fit(&xs, &xs.map(|x| 2.0 * x + 1.0)).unwrap();
        assert!((line.slope - 2.0).abs() < 1e-14 && (line.intercept - 1.0).abs() < 1e-14);
        assert!((line.r - 1.0).abs() < 1e-14);
        let flat = linear_fit(&xs, &[3.0; 4]).unwrap();
        assert_eq!(flat.slope, 0.0);
        let two = linear_fit(&[1.0, 2.0], &[5.0, 3.0]).unwrap();
        assert!((two.r + 1.0).abs() < 1e-14 && (two.slope + 2.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn synthetic_doubling_gives_ln2() {
        let xs: Vec<f64> = (5..11).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|n| (3.0 * 2f64.powf(*n)).ln()).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2f64.ln()).abs() < 1e-12);
        assert!((fit.r - 1.0).abs() < 1e-12);
    }
}
