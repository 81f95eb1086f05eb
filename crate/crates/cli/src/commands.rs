use std::path::{Path, PathBuf};
use std::time::Instant;

use boundmetro::analytic::{solve_bound_states, AnalyticSolution};
use boundmetro::dynamics::{evolve, grid_between, uniform_grid, TimeSeries};
use boundmetro::error::{Error, Result};
use boundmetro::io::{
    params_header, read_time_series, read_uncertainty_curve, table_csv, time_series_csv, uncertainty_csv, write_atomic,
    write_json, BoundStateRecord, FitRecord, ParamOverrides, RunManifest, SpectrumSummary,
};
use boundmetro::metrology::{scaling_fit, uncertainty_curve, Source};
use boundmetro::spectral::{
    detect_regular_window, duration_horizon, duration_scaling_with, fourier_spectrum_with, OscillationWindow,
    SpectrumOptions, Taper, WindowCriterion,
};
use boundmetro::ModelParams;
use serde_json::json;

use crate::{Command, ParamArgs, TaperArg, WindowArgs};

/// `prefix` with `suffix` appended to its file name.
fn output_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn finish(
    command: &str,
    prefix: &Path,
    params: serde_json::Value,
    outputs: Vec<PathBuf>,
    start: Instant,
) -> Result<()> {
    let manifest_path = output_path(prefix, ".manifest.json");
    let manifest = RunManifest::new(command, params, outputs.clone(), start.elapsed().as_secs_f64());
    write_json(&manifest_path, &manifest)?;
    for p in outputs.iter().chain([&manifest_path]) {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn run(command: Command) -> Result<()> {
    let start = Instant::now();
    match command {
        Command::Dynamics { params, tmax, dt, analytic, out } => {
            dynamics(&params.resolve()?, tmax, dt, analytic, &out, start)
        }
        Command::Poles { params, out } => poles(&params.resolve()?, &out, start),
        Command::Spectrum { params, input, tmax, dt, window, full, taper, padding, out } => {
            let options = SpectrumOptions {
                taper: match taper {
                    TaperArg::Rectangular => Taper::Rectangular,
                    TaperArg::Hann => Taper::Hann,
                },
                padding,
                ..Default::default()
            };
            spectrum(&params, input.as_deref(), tmax, dt, &window, full, &options, &out, start)
        }
        Command::DurationScaling { params, n_list, threshold, window_periods, out } => {
            let criterion = WindowCriterion { threshold, periods: window_periods, ..Default::default() };
            duration(&params, &n_list, &criterion, &out, start)
        }
        Command::Metrology { params, t_total, tmin, tmax, dt, source, out } => {
            let p = params.resolve()?;
            let times = grid_between(tmin.unwrap_or(dt), tmax.unwrap_or(t_total), dt)?;
            metrology(&p, &times, t_total, source.into(), &out, start)
        }
        Command::Scaling { params, input, t_total, dt, source, window, out } => {
            scaling(&params, input.as_deref(), t_total, dt, source.into(), &window, &out, start)
        }
    }
}

fn dynamics(p: &ModelParams, tmax: f64, dt: f64, analytic: bool, out: &Path, start: Instant) -> Result<()> {
    let series = evolve(p, &uniform_grid(tmax, dt)?)?;
    let csv = output_path(out, ".csv");
    if analytic {
        let model = AnalyticSolution::new(p)?;
        let rows = series
            .times
            .iter()
            .zip(&series.values)
            .map(|(&t, &pe)| {
                Ok(vec![
                    t.to_string(),
                    pe.to_string(),
                    model.population(t)?.to_string(),
                    model.longtime_population(t).to_string(),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        write_atomic(&csv, &table_csv(&[params_header(p)], &["t", "pe", "pe_analytic", "pe_longtime"], &rows)?)?;
    } else {
        write_atomic(&csv, &time_series_csv(p, &series)?)?;
    }
    finish("dynamics", out, json!({ "model": p, "tmax": tmax, "dt": dt, "analytic": analytic }), vec![csv], start)
}

fn poles(p: &ModelParams, out: &Path, start: Instant) -> Result<()> {
    let solution = solve_bound_states(p)?;
    let path = output_path(out, ".json");
    write_json(&path, &BoundStateRecord { solution, params: *p })?;
    println!(
        "x1 = {:.10} x2 = {:.10} a1 = {:.6e} a2 = {:.6e} phi = {:.10}",
        solution.x1, solution.x2, solution.a1, solution.a2, solution.phi
    );
    finish("poles", out, json!({ "model": p }), vec![path], start)
}

/// Window from explicit flags, falling back to the series ends.
fn explicit_window(window: &WindowArgs, first: f64, last: f64) -> Option<OscillationWindow> {
    if window.window_start.is_none() && window.window_end.is_none() {
        return None;
    }
    Some(OscillationWindow { t_start: window.window_start.unwrap_or(first), t_end: window.window_end.unwrap_or(last) })
}

fn check_window(w: OscillationWindow) -> Result<OscillationWindow> {
    if w.t_end.is_nan() || w.t_end <= w.t_start {
        return Err(Error::InvalidGrid(format!("empty window [{}, {}]", w.t_start, w.t_end)));
    }
    Ok(w)
}

#[allow(clippy::too_many_arguments)]
fn spectrum(
    args: &ParamArgs,
    input: Option<&Path>,
    tmax: Option<f64>,
    dt: f64,
    window: &WindowArgs,
    full: bool,
    options: &SpectrumOptions,
    out: &Path,
    start: Instant,
) -> Result<()> {
    let (params, series): (Option<ModelParams>, TimeSeries) = match input {
        Some(path) => {
            let (header, series) = read_time_series(path)?;
            let flags = args.layered()?;
            let params = if flags.missing().is_empty() { Some(flags.resolve()?) } else { header };
            (params, series)
        }
        None => {
            let p = args.resolve()?;
            let horizon = match tmax {
                Some(t) => t,
                None => duration_horizon(&p, solve_bound_states(&p)?.period(), &WindowCriterion::default()),
            };
            (Some(p), evolve(&p, &uniform_grid(horizon, dt)?)?)
        }
    };
    let (first, last) = (series.times[0], *series.times.last().unwrap_or(&series.times[0]));
    let bound = params.as_ref().map(solve_bound_states).transpose()?;
    let used = if full {
        OscillationWindow { t_start: first, t_end: last }
    } else if let Some(w) = explicit_window(window, first, last) {
        check_window(w)?
    } else {
        let bound = bound.as_ref().ok_or_else(|| {
            Error::InvalidParams("window detection needs model parameters (header, flags or --config)".into())
        })?;
        detect_regular_window(&series, bound)?
    };
    let spec = fourier_spectrum_with(&series.restrict(used.t_start, used.t_end), options)?;

    let header: Vec<String> = params.iter().map(params_header).collect();
    let csv = output_path(out, ".csv");
    write_atomic(&csv, &boundmetro::io::spectrum_csv(&spec, &header)?)?;
    let summary_path = output_path(out, ".summary.json");
    let summary = SpectrumSummary::from(&spec);
    write_json(
        &summary_path,
        &json!({
            "peak": summary.peak,
            "height": summary.height,
            "fwhm": summary.fwhm,
            "bin_width": summary.bin_width,
            "secondary": summary.secondary,
            "window": [used.t_start, used.t_end],
            "pole_gap": bound.map(|b| b.phi),
        }),
    )?;
    println!("peak = {:.6} fwhm = {:.6} window = [{:.3}, {:.3}]", summary.peak, summary.fwhm, used.t_start, used.t_end);
    let record = json!({
        "model": params,
        "input": input,
        "taper": format!("{:?}", options.taper).to_lowercase(),
        "padding": options.padding,
        "window": [used.t_start, used.t_end],
    });
    finish("spectrum", out, record, vec![csv, summary_path], start)
}

fn duration(args: &ParamArgs, n_list: &[u32], criterion: &WindowCriterion, out: &Path, start: Instant) -> Result<()> {
    // register size comes from the list, so only the frequencies are required
    let layered = args.layered()?;
    let template = ParamOverrides { qubits: None, cavities: Some(1), ..layered };
    let template = ParamArgs::require(&template)?;
    let scaling = duration_scaling_with(&template, n_list, criterion)?;
    let longtime = solve_bound_states(&template).ok();

    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let rows: Vec<Vec<String>> = scaling
        .points
        .iter()
        .map(|p| {
            vec![
                p.qubits.to_string(),
                p.cavities.to_string(),
                p.window.t_start.to_string(),
                p.window.t_end.to_string(),
                p.duration.to_string(),
                cell(p.stats.map(|s| s.amplitude)),
                cell(p.stats.map(|s| s.mean)),
            ]
        })
        .collect();
    let header = vec![format!(
        "# omega_atom={} omega_cavity={} xi={} coupling_j={}",
        template.omega_atom, template.omega_cavity, template.xi, template.coupling_j
    )];
    let csv = output_path(out, ".csv");
    write_atomic(
        &csv,
        &table_csv(&header, &["qubits", "cavities", "t_start", "t_end", "duration", "amplitude", "mean"], &rows)?,
    )?;
    let fit_path = output_path(out, ".json");
    write_json(
        &fit_path,
        &json!({
            "slope": scaling.fit.slope,
            "intercept": scaling.fit.intercept,
            "r": scaling.fit.r,
            "doubling_factor": scaling.doubling_factor,
            "excluded": scaling.excluded,
            "longtime_amplitude": longtime.map(|b| b.amplitude()),
            "longtime_mean": longtime.map(|b| b.mean()),
        }),
    )?;
    println!("ln(xi t_regular) = {:.5} N + {:.5}, r = {:.5}", scaling.fit.slope, scaling.fit.intercept, scaling.fit.r);
    let record = json!({
        "model": { "omega_atom": template.omega_atom, "omega_cavity": template.omega_cavity, "xi": template.xi, "coupling_j": template.coupling_j },
        "qubits": n_list,
        "threshold": criterion.threshold,
        "window_periods": criterion.periods,
    });
    finish("duration-scaling", out, record, vec![csv, fit_path], start)
}

impl ParamArgs {
    /// Resolve already-layered overrides, reporting gaps as usage errors.
    fn require(layered: &ParamOverrides) -> Result<ModelParams> {
        let args = ParamArgs {
            omega_atom: layered.omega_atom,
            omega_cavity: layered.omega_cavity,
            coupling: layered.coupling_j,
            cavities: layered.cavities,
            qubits: layered.qubits,
            config: None,
        };
        let p = args.resolve()?;
        Ok(ModelParams { xi: layered.xi.unwrap_or(p.xi), ..p })
    }
}

fn metrology(p: &ModelParams, times: &[f64], t_total: f64, source: Source, out: &Path, start: Instant) -> Result<()> {
    let curve = uncertainty_curve(p, times, t_total, source)?;
    let csv = output_path(out, ".csv");
    write_atomic(&csv, &uncertainty_csv(p, &curve)?)?;
    println!("{} of {} points defined", curve.defined_count(), curve.times.len());
    let record = json!({
        "model": p,
        "t_total": t_total,
        "source": source.name(),
        "tmin": times.first(),
        "tmax": times.last(),
        "points": times.len(),
    });
    finish("metrology", out, record, vec![csv], start)
}

#[allow(clippy::too_many_arguments)]
fn scaling(
    args: &ParamArgs,
    input: Option<&Path>,
    t_total: f64,
    dt: f64,
    source: Source,
    window: &WindowArgs,
    out: &Path,
    start: Instant,
) -> Result<()> {
    let (p, curve) = match input {
        Some(path) => read_uncertainty_curve(path)?,
        None => {
            let p = args.resolve()?;
            let curve = uncertainty_curve(&p, &grid_between(dt, t_total, dt)?, t_total, source)?;
            (p, curve)
        }
    };
    let first = curve
        .defined()
        .next()
        .map(|(t, _)| t)
        .ok_or_else(|| Error::InsufficientData("uncertainty curve has no defined points".into()))?;
    let last = *curve.times.last().unwrap_or(&first);
    let w = check_window(
        explicit_window(window, first, last).unwrap_or(OscillationWindow { t_start: first, t_end: last }),
    )?;
    let period = solve_bound_states(&p)?.period();
    let fit = scaling_fit(&curve, w, period)?;
    let path = output_path(out, ".json");
    write_json(&path, &FitRecord::from(&fit))?;
    println!("ln(dOmega) = {:.5} ln(1/t) + {:.5}, r = {:.5}", fit.slope, fit.intercept, fit.r);
    let record = json!({
        "model": p,
        "input": input,
        "t_total": curve.t_total,
        "source": curve.source.name(),
        "window": [w.t_start, w.t_end],
        "period": period,
    });
    finish("scaling", out, record, vec![path], start)
}
