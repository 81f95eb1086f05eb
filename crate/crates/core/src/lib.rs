//! Bound-state dynamics and frequency metrology for a two-level atom coupled
//! to one cavity of a periodic coupled-cavity array.
//!
//! Frequencies are expressed in units of the inter-cavity hopping `xi` and
//! times in units of `1/xi`. The modules follow the data flow of a typical
//! study:
//!
//! * [`model`] – parameters, band structure, qubit-register basis mapping.
//! * [`dynamics`] – exact single-excitation evolution of the finite ring.
//! * [`analytic`] – infinite-array solution: bound-state poles, residues,
//!   branch-cut integral, long-time law, weak-coupling closed forms.
//! * [`metrology`] – Fisher information and frequency-uncertainty curves.
//! * [`spectral`] – regular-window detection, Fourier peaks, fits.
//! * [`io`] – CSV/JSON formats shared with the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod metrology;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
pub use model::ModelParams;
