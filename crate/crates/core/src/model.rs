//! Physical parameters, band structure and the register basis mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register handled by [`basis_map`]; keeps `2^N` inside `usize`
/// on every target and far beyond anything a dense solver can touch.
pub const MAX_QUBITS: u32 = 30;

/// One experiment: a two-level atom of frequency `omega_atom` coupled with
/// strength `coupling_j` to the central cavity of a ring of `cavities`
/// resonators (frequency `omega_cavity`, nearest-neighbour hopping `xi`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_atom: f64,
    pub omega_cavity: f64,
    pub xi: f64,
    pub coupling_j: f64,
    pub cavities: usize,
}

impl ModelParams {
    /// Parameters in the internal unit system (`xi = 1`).
    pub fn new(omega_atom: f64, omega_cavity: f64, coupling_j: f64, cavities: usize) -> Self {
        ModelParams { omega_atom, omega_cavity, xi: 1.0, coupling_j, cavities }
    }

    /// Array simulated by an `qubits`-qubit register: `2^N - 1` cavities.
    pub fn from_qubits(omega_atom: f64, omega_cavity: f64, coupling_j: f64, qubits: u32) -> Result<Self> {
        let map = basis_map(qubits)?;
        Ok(Self::new(omega_atom, omega_cavity, coupling_j, map.cavities()))
    }

    pub fn validate(self) -> Result<Self> {
        let finite = [self.omega_atom, self.omega_cavity, self.xi, self.coupling_j].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.xi <= 0.0 {
            return Err(Error::InvalidParams("hopping must be positive".into()));
        }
        if self.coupling_j < 0.0 {
            return Err(Error::InvalidParams("coupling must be nonnegative".into()));
        }
        if self.cavities == 0 {
            return Err(Error::InvalidParams("need at least one cavity".into()));
        }
        if self.cavities.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("n must be odd (got {})", self.cavities)));
        }
        Ok(self)
    }

    /// `j_M = (n - 1) / 2`; cavity positions run over `-j_M..=j_M`.
    pub fn half_width(&self) -> usize {
        (self.cavities.saturating_sub(1)) / 2
    }

    /// Atom-cavity detuning `Ω - ω₀`.
    pub fn detuning(&self) -> f64 {
        self.omega_atom - self.omega_cavity
    }

    /// Photon band `ω_k = ω₀ - 2ξ cos k`.
    pub fn dispersion(&self, k: f64) -> f64 {
        self.omega_cavity - 2.0 * self.xi * k.cos()
    }

    /// `(ω₀ - 2ξ, ω₀ + 2ξ)`.
    pub fn band_edges(&self) -> (f64, f64) {
        (self.omega_cavity - 2.0 * self.xi, self.omega_cavity + 2.0 * self.xi)
    }

    /// Atom coupling to each Bloch mode, `J / √n`.
    pub fn k_coupling(&self) -> f64 {
        self.coupling_j / (self.cavities as f64).sqrt()
    }

    pub fn in_band(&self) -> bool {
        let (lo, hi) = self.band_edges();
        (lo..=hi).contains(&self.omega_atom)
    }

    pub fn with_omega_atom(self, omega_atom: f64) -> Self {
        ModelParams { omega_atom, ..self }
    }

    pub fn with_cavities(self, cavities: usize) -> Self {
        ModelParams { cavities, ..self }
    }

    /// Register size when the cavity count is `2^N - 1`.
    pub fn qubits(&self) -> Option<u32> {
        let dim = self.cavities.checked_add(1)?;
        dim.is_power_of_two().then(|| dim.trailing_zeros())
    }
}

/// Free-function form of [`ModelParams::validate`].
pub fn validate(params: ModelParams) -> Result<ModelParams> {
    params.validate()
}

/// Physical meaning of one single-excitation basis vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    /// Atom excited, every cavity in vacuum.
    AtomExcited,
    /// Atom in its ground state, one photon in the cavity at `position`.
    Photon { position: i64 },
}

/// Bijection between register basis states `0..2^N` and the single-excitation
/// basis of one atom plus `2^N - 1` cavities. Index 0 is the atomic
/// excitation; indices `1..=n` list cavity positions `-j_M..=j_M` in
/// ascending order, so the atom's cavity (position 0) is index `j_M + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisMap {
    qubits: u32,
}

pub fn basis_map(qubits: u32) -> Result<BasisMap> {
    if qubits == 0 {
        return Err(Error::InvalidParams("qubit count must be at least 1".into()));
    }
    if qubits > MAX_QUBITS {
        return Err(Error::InvalidParams(format!("at most {MAX_QUBITS} qubits supported")));
    }
    Ok(BasisMap { qubits })
}

impl BasisMap {
    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    /// Hilbert-space dimension `2^N`.
    pub fn len(&self) -> usize {
        1usize << self.qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cavities(&self) -> usize {
        self.len() - 1
    }

    pub fn half_width(&self) -> i64 {
        (self.cavities() as i64 - 1) / 2
    }

    pub fn label(&self, index: usize) -> Option<BasisLabel> {
        match index {
            0 => Some(BasisLabel::AtomExcited),
            i if i < self.len() => Some(BasisLabel::Photon { position: i as i64 - 1 - self.half_width() }),
            _ => None,
        }
    }

    pub fn index(&self, label: BasisLabel) -> Option<usize> {
        match label {
            BasisLabel::AtomExcited => Some(0),
            BasisLabel::Photon { position } => {
                let jm = self.half_width();
                (-jm..=jm).contains(&position).then(|| (position + jm + 1) as usize)
            }
        }
    }

    /// Register bit string of a basis index, most significant qubit first.
    pub fn bits(&self, index: usize) -> Option<String> {
        (index < self.len()).then(|| format!("{:0width$b}", index, width = self.qubits as usize))
    }
}
