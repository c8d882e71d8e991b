//! Simulation and analysis toolkit for a cavity-based quantum money scheme.
//!
//! The toolkit models a hardware stack in which single photons scatter off a
//! spin-cavity system to write, store, and read quantum-token qubits, and
//! analyzes the resulting token economics: gate fidelities, robust cavity
//! design, spin decoherence, phonon-induced relaxation, and the security /
//! acceptance-rate trade-off of the token protocol itself.
//!
//! # Modules
//!
//! - [`spectra`] — photon spectra, cavity reflection, controlled-phase gate
//!   fidelity.
//! - [`design_opt`] — standard and fabrication-robust cavity design
//!   optimization, fidelity landscapes.
//! - [`spin_channel`] — density-matrix pipeline for photonic-qubit write,
//!   storage decoherence, spectral diffusion, and read-out.
//! - [`phonon`] — elastic-tensor acoustics and phonon-induced spin relaxation
//!   rates.
//! - [`token`] — token security (forgery bounds, minimal token size) and
//!   honest acceptance rates, with Monte Carlo verification.
//! - [`scenario`] — TOML scenario configuration with override and hashing
//!   support.
//! - [`sweep`] — parameter sweeps combining the above into rate curves.
//! - [`report`] — deterministic CSV and SVG artifact writers.
//! - [`quad`], [`optim`] — numerical quadrature and optimization kernels.
//!
//! # Examples
//!
//! Each major capability has a runnable example; see the `examples/`
//! directory (`cargo run --release --example <name>`).

pub mod cli;
pub mod design_opt;
pub mod error;
pub mod optim;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod spectra;
pub mod sweep;
pub mod phonon;
pub mod spin_channel;
pub mod token;

pub use error::{Error, Result};
