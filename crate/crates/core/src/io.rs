//! File formats: CSV data with a `#` parameter header, JSON summaries and
//! run manifests, and flat `key = value` parameter files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::BoundStateSolution;
use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::metrology::{ScalingFit, UncertaintyCurve};
use crate::model::ModelParams;
use crate::spectral::{Peak, Spectrum};

/// Write via a temporary sibling file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Parse(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `# omega_atom=… omega_cavity=… xi=… coupling_j=… cavities=…`
pub fn params_header(params: &ModelParams) -> String {
    format!(
        "# omega_atom={} omega_cavity={} xi={} coupling_j={} cavities={}",
        params.omega_atom, params.omega_cavity, params.xi, params.coupling_j, params.cavities
    )
}

/// Parse a header written by [`params_header`], extra keys allowed.
pub fn parse_params_header(line: &str) -> Result<ModelParams> {
    let body = line.trim().strip_prefix('#').ok_or_else(|| Error::Parse("header must start with '#'".into()))?;
    let mut map = BTreeMap::new();
    for token in body.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| Error::Parse(format!("bad header token '{token}'")))?;
        map.insert(k.to_string(), v.to_string());
    }
    let mut over = ParamOverrides::default();
    for (k, v) in &map {
        if PARAM_KEYS.contains(&k.as_str()) {
            over.set(k, v)?;
        }
    }
    over.resolve()
}

fn csv_body<R: AsRef<[String]>>(header: &[&str], rows: impl Iterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.as_ref())?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn with_header(lines: &[String], body: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::new();
    for l in lines {
        out.extend_from_slice(l.as_bytes());
        out.push(b'\n');
    }
    out.extend(body);
    out
}

/// Arbitrary table with `#` comment lines on top.
pub fn table_csv(header_lines: &[String], columns: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    Ok(with_header(header_lines, csv_body(columns, rows.iter())?))
}

pub fn time_series_csv(params: &ModelParams, series: &TimeSeries) -> Result<Vec<u8>> {
    let rows = series.times.iter().zip(&series.values).map(|(t, v)| [t.to_string(), v.to_string()]);
    Ok(with_header(&[params_header(params)], csv_body(&["t", "pe"], rows)?))
}

pub fn write_time_series(path: &Path, params: &ModelParams, series: &TimeSeries) -> Result<()> {
    write_atomic(path, &time_series_csv(params, series)?)
}

/// Read a `t,pe` file; the parameters come back when the header has them.
pub fn read_time_series(path: &Path) -> Result<(Option<ModelParams>, TimeSeries)> {
    let text = fs::read_to_string(path)?;
    let params = text.lines().find(|l| l.starts_with('#')).and_then(|l| parse_params_header(l).ok());
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "t" {
        return Err(Error::Parse(format!("expected columns t,pe in {}", path.display())));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad number in row {:?}", rec.position().map(|p| p.line()))))
        };
        times.push(num(0)?);
        values.push(num(1)?);
    }
    Ok((params, TimeSeries::new(times, values)?))
}

pub fn spectrum_csv(spectrum: &Spectrum, header: &[String]) -> Result<Vec<u8>> {
    let rows = spectrum.frequencies.iter().zip(&spectrum.magnitudes).map(|(f, m)| [f.to_string(), m.to_string()]);
    Ok(with_header(header, csv_body(&["freq", "magnitude"], rows)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub peak: f64,
    pub height: f64,
    pub fwhm: f64,
    pub bin_width: f64,
    pub secondary: Option<Peak>,
}

impl From<&Spectrum> for SpectrumSummary {
    fn from(s: &Spectrum) -> Self {
        SpectrumSummary {
            peak: s.main_peak_freq,
            height: s.main_peak_height,
            fwhm: s.fwhm,
            bin_width: s.bin_width,
            secondary: s.secondary,
        }
    }
}

/// Absent points are written as empty `delta_omega` fields.
pub fn uncertainty_csv(params: &ModelParams, curve: &UncertaintyCurve) -> Result<Vec<u8>> {
    let rows = curve
        .times
        .iter()
        .zip(&curve.delta_omega)
        .map(|(t, d)| [t.to_string(), d.map(|d| d.to_string()).unwrap_or_default()]);
    let header = format!("{} t_total={} source={}", params_header(params), curve.t_total, curve.source.name());
    Ok(with_header(&[header], csv_body(&["t", "delta_omega"], rows)?))
}

/// Read a `t,delta_omega` file written by [`uncertainty_csv`].
pub fn read_uncertainty_curve(path: &Path) -> Result<(ModelParams, UncertaintyCurve)> {
    let text = fs::read_to_string(path)?;
    let header = text.lines().find(|l| l.starts_with('#')).ok_or_else(|| Error::Parse("missing '#' header".into()))?;
    let params = parse_params_header(header)?;
    let field = |key: &str| {
        header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Parse(format!("header lacks {key}")))
    };
    let t_total: f64 = field("t_total")?.parse().map_err(|_| Error::Parse("bad t_total".into()))?;
    let source = field("source")?.parse()?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut times = Vec::new();
    let mut delta_omega = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        times.push(rec[0].parse().map_err(|_| Error::Parse(format!("bad time '{}'", &rec[0])))?);
        delta_omega.push(if rec[1].is_empty() {
            None
        } else {
            Some(rec[1].parse().map_err(|_| Error::Parse(format!("bad delta_omega '{}'", &rec[1])))?)
        });
    }
    Ok((params, UncertaintyCurve { times, delta_omega, t_total, source }))
}

/// Bound-state record with the parameters alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStateRecord {
    #[serde(flatten)]
    pub solution: BoundStateSolution,
    #[serde(flatten)]
    pub params: ModelParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub window: [f64; 2],
}

impl From<&ScalingFit> for FitRecord {
    fn from(f: &ScalingFit) -> Self {
        FitRecord { slope: f.slope, intercept: f.intercept, r: f.r, window: [f.window.t_start, f.window.t_end] }
    }
}

/// What a command ran with and what it wrote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub unix_time: u64,
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value, outputs: Vec<PathBuf>, wall_clock_seconds: f64) -> Self {
        let unix_time =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunManifest {
            command: command.to_string(),
            params,
            outputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            unix_time,
        }
    }
}

const PARAM_KEYS: [&str; 6] = ["omega_atom", "omega_cavity", "xi", "coupling_j", "qubits", "cavities"];

/// Partially specified parameters, merged layer by layer.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub omega_atom: Option<f64>,
    pub omega_cavity: Option<f64>,
    pub xi: Option<f64>,
    pub coupling_j: Option<f64>,
    pub qubits: Option<u32>,
    pub cavities: Option<usize>,
}

impl ParamOverrides {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || value.parse::<f64>().map_err(|_| Error::Parse(format!("{key}: '{value}' is not a number")));
        let int = || value.parse::<u64>().map_err(|_| Error::Parse(format!("{key}: '{value}' is not an integer")));
        match key {
            "omega_atom" => self.omega_atom = Some(float()?),
            "omega_cavity" => self.omega_cavity = Some(float()?),
            "xi" => self.xi = Some(float()?),
            "coupling_j" => self.coupling_j = Some(float()?),
            "qubits" => self.qubits = Some(u32::try_from(int()?).map_err(|_| Error::Parse("qubits too large".into()))?),
            "cavities" => self.cavities = Some(int()? as usize),
            other => return Err(Error::Parse(format!("unknown parameter '{other}'"))),
        }
        Ok(())
    }

    /// Fields set in `other` win.
    pub fn merged(self, other: ParamOverrides) -> ParamOverrides {
        let size_given = other.qubits.is_some() || other.cavities.is_some();
        ParamOverrides {
            omega_atom: other.omega_atom.or(self.omega_atom),
            omega_cavity: other.omega_cavity.or(self.omega_cavity),
            xi: other.xi.or(self.xi),
            coupling_j: other.coupling_j.or(self.coupling_j),
            qubits: if size_given { other.qubits } else { self.qubits },
            cavities: if size_given { other.cavities } else { self.cavities },
        }
    }

    /// Names of parameters still unset.
    pub fn missing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.omega_atom.is_none() {
            out.push("omega_atom");
        }
        if self.omega_cavity.is_none() {
            out.push("omega_cavity");
        }
        if self.coupling_j.is_none() {
            out.push("coupling_j");
        }
        if self.qubits.is_none() && self.cavities.is_none() {
            out.push("qubits");
        }
        out
    }

    pub fn resolve(&self) -> Result<ModelParams> {
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(Error::InvalidParams(format!("missing {}", missing.join(", "))));
        }
        let cavities = match (self.qubits, self.cavities) {
            (Some(q), None) => crate::model::basis_map(q)?.cavities(),
            (None, Some(n)) => n,
            (Some(q), Some(n)) => {
                let from_q = crate::model::basis_map(q)?.cavities();
                if from_q != n {
                    return Err(Error::InvalidParams(format!("qubits = {q} implies {from_q} cavities, not {n}")));
                }
                n
            }
            (None, None) => unreachable!(),
        };
        ModelParams {
            omega_atom: self.omega_atom.unwrap_or_default(),
            omega_cavity: self.omega_cavity.unwrap_or_default(),
            xi: self.xi.unwrap_or(1.0),
            coupling_j: self.coupling_j.unwrap_or_default(),
            cavities,
        }
        .validate()
    }
}

/// Flat `key = value` (or `key: value`) text; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ParamOverrides> {
    let mut over = ParamOverrides::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
        over.set(k.trim(), v.trim()).map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
    }
    Ok(over)
}

pub fn read_config(path: &Path) -> Result<ParamOverrides> {
    parse_config(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::Source;

    fn params() -> ModelParams {
        ModelParams::new(11.0, 10.0, 1.3, 255)
    }

    #[test]
    fn header_round_trip() {
        let p = ModelParams { xi: 0.7, ..params() };
        assert_eq!(parse_params_header(&params_header(&p)).unwrap(), p);
    }

    #[test]
    fn time_series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/pe.csv");
        let s = TimeSeries::new(vec![0.0, 0.1, 0.2], vec![1.0, 0.987654321, 1.0 / 3.0]).unwrap();
        write_time_series(&path, &params(), &s).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# omega_atom=11 "));
        assert_eq!(text.lines().nth(1), Some("t,pe"));
        let (p, back) = read_time_series(&path).unwrap();
        assert_eq!(p, Some(params()));
        assert_eq!(back, s);
    }

    #[test]
    fn uncertainty_round_trip_keeps_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let c = UncertaintyCurve {
            times: vec![1.0, 2.0, 3.0],
            delta_omega: vec![Some(0.5), None, Some(0.25)],
            t_total: 120.0,
            source: Source::LongtimeExact,
        };
        write_atomic(&path, &uncertainty_csv(&params(), &c).unwrap()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\n2,\n"));
        let (p, back) = read_uncertainty_curve(&path).unwrap();
        assert_eq!(p, params());
        assert_eq!(back, c);
    }

    #[test]
    fn bound_state_json_has_flat_keys() {
        let sol = crate::analytic::solve_bound_states(&params()).unwrap();
        let v = serde_json::to_value(BoundStateRecord { solution: sol, params: params() }).unwrap();
        for k in ["x1", "x2", "a1", "a2", "phi", "residual_upper", "residual_lower", "omega_atom", "cavities"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn config_parsing_and_merge() {
        let text = "# test\nomega_atom = 11\nomega_cavity: 10\ncoupling_j=1.3  # strong\nqubits = 8\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.resolve().unwrap(), params());
        let flags = ParamOverrides { coupling_j: Some(0.3), cavities: Some(15), ..Default::default() };
        let merged = cfg.merged(flags).resolve().unwrap();
        assert_eq!(merged.coupling_j, 0.3);
        assert_eq!(merged.cavities, 15);
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("omega_atom = eleven").is_err());
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn missing_parameters_named() {
        let o = ParamOverrides { omega_atom: Some(1.0), ..Default::default() };
        assert_eq!(o.missing(), vec!["omega_cavity", "coupling_j", "qubits"]);
        assert!(matches!(o.resolve(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn inconsistent_size_rejected() {
        let o = ParamOverrides {
            qubits: Some(3),
            cavities: Some(9),
            ..parse_config("omega_atom=1\nomega_cavity=1\ncoupling_j=1").unwrap()
        };
        assert!(o.resolve().is_err());
    }
}
