//! Exact single-excitation dynamics of the finite ring.
//!
//! The `(n+1)`-dimensional Hamiltonian is diagonalised once; every later time
//! point is a phase rotation in the eigenbasis, so long horizons carry no
//! integrator drift.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default time step of sampled series, in `1/xi`.
pub const DEFAULT_DT: f64 = 0.02;
/// Default frequency increment for `∂P_e/∂Ω`, in `xi`.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-5;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_SWEEPS: usize = 0; // unlimited

/// Real-symmetric (hence Hermitian) Hamiltonian in the single-excitation
/// basis ordered as [`crate::model::BasisMap`]: row 0 is the excited atom,
/// rows `1..=n` the cavities at positions `-j_M..=j_M`.
pub fn build_hamiltonian(params: &ModelParams) -> DMatrix<f64> {
    let n = params.cavities;
    let mut h = DMatrix::<f64>::zeros(n + 1, n + 1);
    h[(0, 0)] = params.omega_atom;
    for j in 1..=n {
        h[(j, j)] = params.omega_cavity;
    }
    // ring bonds j -> j+1, closing n -> 1; a single cavity has no neighbour
    if n >= 3 {
        for j in 1..=n {
            let k = if j == n { 1 } else { j + 1 };
            h[(j, k)] -= params.xi;
            h[(k, j)] -= params.xi;
        }
    }
    let centre = params.half_width() + 1;
    h[(0, centre)] = params.coupling_j;
    h[(centre, 0)] = params.coupling_j;
    h
}

/// Eigenvalues (ascending) with the atom's weight in each eigenvector.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub atom_overlaps: Vec<f64>,
    /// Columns are orthonormal eigenvectors, in the order of `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    /// Energy reference removed before phase rotation; only global phases
    /// depend on it.
    reference: f64,
}

pub fn diagonalize(h: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let dim = h.nrows();
    if dim == 0 || !h.is_square() {
        return Err(Error::Eigen { dim });
    }
    let eig = SymmetricEigen::try_new(h.clone(), EIGEN_EPS, EIGEN_MAX_SWEEPS).ok_or(Error::Eigen { dim })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::Eigen { dim });
    }
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    let atom_overlaps = (0..dim).map(|m| eigenvectors[(0, m)].powi(2)).collect();
    let reference = h[(0, 0)];

    Ok(SpectralDecomposition { eigenvalues, atom_overlaps, eigenvectors, reference })
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `α(t) = ⟨e|e^{-iHt}|e⟩`, up to the global phase `e^{-i E_ref t}`.
    pub fn atom_amplitude(&self, t: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.atom_overlaps)
            .map(|(&e, &w)| w * Complex64::cis(-(e - self.reference) * t))
            .sum()
    }

    pub fn excited_population(&self, t: f64) -> f64 {
        self.atom_amplitude(t).norm_sqr()
    }

    /// Full state at time `t` starting from the excited atom.
    pub fn state_at(&self, t: f64) -> SingleExcitationState {
        let dim = self.dim();
        let coeffs: Vec<Complex64> = (0..dim)
            .map(|m| self.eigenvectors[(0, m)] * Complex64::cis(-(self.eigenvalues[m] - self.reference) * t))
            .collect();
        let amplitudes = (0..dim).map(|r| (0..dim).map(|m| coeffs[m] * self.eigenvectors[(r, m)]).sum()).collect();
        SingleExcitationState { amplitudes }
    }

    pub fn populations(&self, times: &[f64]) -> Vec<f64> {
        times.par_iter().map(|&t| self.excited_population(t)).collect()
    }
}

/// Amplitudes in basis-map order: entry 0 is `α`, entries `1..=n` the cavity
/// amplitudes in position representation.
#[derive(Clone, Debug)]
pub struct SingleExcitationState {
    pub amplitudes: Vec<Complex64>,
}

impl SingleExcitationState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn alpha(&self) -> Complex64 {
        self.amplitudes[0]
    }
}

/// Excited-state population sampled on an ascending time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidGrid(format!("{} times but {} values", times.len(), values.len())));
        }
        check_ascending(&times)?;
        Ok(TimeSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Samples with `t_start <= t <= t_end` (half a sample of slack on each
    /// side so window edges taken from this grid are kept).
    pub fn restrict(&self, t_start: f64, t_end: f64) -> TimeSeries {
        let slack = self.uniform_step().map_or(0.0, |dt| 0.5 * dt);
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(&t, _)| t >= t_start - slack && t <= t_end + slack)
            .map(|(&t, &v)| (t, v))
            .unzip();
        TimeSeries { times, values }
    }

    /// Common spacing when the grid is uniform to a relative 1e-6.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = self.span() / (self.times.len() - 1) as f64;
        let uniform = self.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
        uniform.then_some(dt)
    }
}

fn check_ascending(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn uniform_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    grid_between(0.0, t_max, dt)
}

/// `t_min, t_min + dt, …` up to and including `t_max`.
pub fn grid_between(t_min: f64, t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !t_min.is_finite() || !t_max.is_finite() || t_max < t_min {
        return Err(Error::InvalidGrid(format!("bad grid [{t_min}, {t_max}] step {dt}")));
    }
    let steps = ((t_max - t_min) / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| t_min + i as f64 * dt).collect())
}

/// Diagonalise the model once.
pub fn decompose(params: &ModelParams) -> Result<SpectralDecomposition> {
    let params = params.validate()?;
    diagonalize(&build_hamiltonian(&params))
}

/// `P_e(t)` on `times`, starting from `α(0) = 1`.
pub fn evolve(params: &ModelParams, times: &[f64]) -> Result<TimeSeries> {
    check_ascending(times)?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidGrid("times must be nonnegative".into()));
    }
    let spectrum = decompose(params)?;
    Ok(TimeSeries { times: times.to_vec(), values: spectrum.populations(times) })
}

/// Central difference `[P_e(Ω+h) - P_e(Ω-h)] / 2h` at one time.
pub fn population_derivative(params: &ModelParams, t: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidParams("derivative step must be positive".into()));
    }
    let up = decompose(&params.with_omega_atom(params.omega_atom + step))?;
    let down = decompose(&params.with_omega_atom(params.omega_atom - step))?;
    Ok((up.excited_population(t) - down.excited_population(t)) / (2.0 * step))
}

/// `∂P_e/∂Ω` over a grid: central differences at `h` and `h/2` combined by
/// one Richardson step, which cancels the `O(h²)` term.
pub fn population_derivative_series(params: &ModelParams, times: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParams("derivative step must be positive".into()));
    }
    let shifts = [step, -step, 0.5 * step, -0.5 * step];
    let decs = shifts
        .par_iter()
        .map(|&s| decompose(&params.with_omega_atom(params.omega_atom + s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(times
        .par_iter()
        .map(|&t| {
            let p: Vec<f64> = decs.iter().map(|d| d.excited_population(t)).collect();
            let coarse = (p[0] - p[1]) / (2.0 * step);
            let fine = (p[2] - p[3]) / step;
            (4.0 * fine - coarse) / 3.0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rabi(params: &ModelParams, t: f64) -> f64 {
        let j = params.coupling_j;
        let d = params.detuning();
        let g = j * j + 0.25 * d * d;
        1.0 - j * j / g * (g.sqrt() * t).sin().powi(2)
    }

    fn rabi_derivative(params: &ModelParams, t: f64) -> f64 {
        let j = params.coupling_j;
        let d = params.detuning();
        let g = j * j + 0.25 * d * d;
        let (s, c) = (g.sqrt() * t).sin_cos();
        j * j * d / (2.0 * g * g) * s * s - j * j * d * t / (2.0 * g.powf(1.5)) * s * c
    }

    #[test]
    fn decoupled_atom_is_block_diagonal() {
        let h = build_hamiltonian(&ModelParams::new(11.0, 10.0, 0.0, 7));
        assert!(h.row(0).iter().skip(1).all(|&v| v == 0.0));
        assert_eq!(h[(0, 0)], 11.0);
    }

    #[test]
    fn three_cavity_ring_has_three_bonds() {
        let h = build_hamiltonian(&ModelParams::new(11.0, 10.0, 1.3, 3));
        assert_eq!(h.shape(), (4, 4));
        let bonds = (1..4).flat_map(|r| (r + 1..4).map(move |c| (r, c))).filter(|&(r, c)| h[(r, c)] == -1.0).count();
        assert_eq!(bonds, 3);
        // atom couples to position 0, index j_M + 1 = 2
        assert_eq!(h[(0, 2)], 1.3);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn hamiltonian_is_exactly_symmetric() {
        let h = build_hamiltonian(&ModelParams::new(11.0, 10.0, 1.3, 31));
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn decoupled_spectrum_isolates_atom() {
        let d = decompose(&ModelParams::new(11.0, 10.0, 0.0, 15)).unwrap();
        let atom = d.eigenvalues.iter().position(|&e| e == 11.0).expect("Ω eigenvalue");
        assert_eq!(d.atom_overlaps[atom], 1.0);
        let rest: f64 = d.atom_overlaps.iter().enumerate().filter(|&(i, _)| i != atom).map(|(_, w)| w).sum();
        assert_eq!(rest, 0.0);
    }

    #[test]
    fn two_level_eigenvalues_match_closed_form() {
        let p = ModelParams::new(11.0, 10.0, 1.3, 1);
        let d = decompose(&p).unwrap();
        let root = (1.3f64.powi(2) + 0.25).sqrt();
        assert!((d.eigenvalues[0] - (10.5 - root)).abs() < 1e-12);
        assert!((d.eigenvalues[1] - (10.5 + root)).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_ascend_and_overlaps_complete() {
        let d = decompose(&ModelParams::new(11.0, 10.0, 1.3, 63)).unwrap();
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let total: f64 = d.atom_overlaps.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decoupled_population_stays_one() {
        let series = evolve(&ModelParams::new(11.0, 10.0, 0.0, 31), &uniform_grid(50.0, 0.5).unwrap()).unwrap();
        assert!(series.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn resonant_rabi() {
        let p = ModelParams::new(10.0, 10.0, 1.3, 1);
        let times = uniform_grid(20.0, 0.1).unwrap();
        let s = evolve(&p, &times).unwrap();
        for (&t, &v) in s.times.iter().zip(&s.values) {
            assert!((v - (1.3 * t).cos().powi(2)).abs() < 1e-12);
        }
        assert!((s.values[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_vanishes_without_coupling() {
        let p = ModelParams::new(11.0, 10.0, 0.0, 7);
        for t in [0.5, 3.0, 40.0] {
            assert!(population_derivative(&p, t, 1e-4).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_is_second_order_in_step() {
        let p = ModelParams::new(10.7, 10.0, 1.3, 1);
        let t = 2.3;
        let exact = rabi_derivative(&p, t);
        let e1 = (population_derivative(&p, t, 2e-2).unwrap() - exact).abs();
        let e2 = (population_derivative(&p, t, 1e-2).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn derivative_matches_rabi_oracle() {
        let t = 1.7;
        let resonant = ModelParams::new(10.0, 10.0, 1.3, 1);
        // symmetric point: the exact derivative is zero
        assert!(population_derivative(&resonant, t, DEFAULT_DERIVATIVE_STEP).unwrap().abs() < 1e-9);
        let detuned = ModelParams::new(10.6, 10.0, 1.3, 1);
        let exact = rabi_derivative(&detuned, t);
        let fd = population_derivative(&detuned, t, DEFAULT_DERIVATIVE_STEP).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
        let rich = population_derivative_series(&detuned, &[t], 1e-3).unwrap()[0];
        assert!(((rich - exact) / exact).abs() < 1e-6, "{rich} vs {exact}");
    }

    #[test]
    fn time_series_rejects_bad_grids() {
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(evolve(&ModelParams::new(1.0, 1.0, 1.0, 3), &[-1.0, 0.0]).is_err());
        assert!(evolve(&ModelParams::new(1.0, 1.0, 1.0, 4), &[0.0]).is_err());
    }

    #[test]
    fn restrict_keeps_window_edges() {
        let s = TimeSeries::new(uniform_grid(10.0, 0.1).unwrap(), vec![0.0; 101]).unwrap();
        let r = s.restrict(s.times[20], s.times[60]);
        assert_eq!(r.len(), 41);
        assert_eq!(r.times[0], s.times[20]);
        assert_eq!(*r.times.last().unwrap(), s.times[60]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn norm_is_conserved(omega in 5.0f64..15.0, j in 0.0f64..3.0, q in 1u32..6, t in 0.0f64..500.0) {
            let p = ModelParams::from_qubits(omega, 10.0, j, q).unwrap();
            let d = decompose(&p).unwrap();
            let s = d.state_at(t);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            prop_assert!((s.alpha().norm_sqr() - d.excited_population(t)).abs() < 1e-12);
            let w: f64 = d.atom_overlaps.iter().sum();
            prop_assert!((w - 1.0).abs() < 1e-10);
        }

        #[test]
        fn time_reversal(omega in 5.0f64..15.0, j in 0.0f64..3.0, q in 1u32..6, t in 0.0f64..300.0) {
            let d = decompose(&ModelParams::from_qubits(omega, 10.0, j, q).unwrap()).unwrap();
            let forward = d.excited_population(t);
            let reversed = d.atom_amplitude(-t).conj().norm_sqr();
            prop_assert!((forward - reversed).abs() < 1e-10);
        }

        #[test]
        fn two_level_matches_detuned_rabi(omega in -5.0f64..5.0, w0 in -5.0f64..5.0, j in 0.0f64..4.0, t in 0.0f64..100.0) {
            let p = ModelParams::new(omega, w0, j, 1);
            let v = evolve(&p, &[t]).unwrap().values[0];
            prop_assert!((v - rabi(&p, t)).abs() < 1e-8);
            prop_assert!((-1e-12..=1.0 + 1e-9).contains(&v));
        }
    }
}
