//! Simulation of a two-photon-driven Kerr resonator under single-photon loss
//! and engineered two-photon loss, with the metrological figures of merit
//! computed along its master-equation trajectories.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: truncated Fock-space operators and canonical states.
//! - [`dynamics`]: the Hamiltonian, the Lindblad generator, time integration
//!   and steady states.
//! - [`metrology`]: quantum Fisher information over displacement generators
//!   and quadrature squeezing.
//! - [`phase_space`]: Wigner functions and photon-number statistics.
//! - [`analysis`]: model presets, full observable time series, window and
//!   oscillation detection, parameter sweeps.
//!
//! Units: `ħ = 1` and the drive strength `ε` sets the frequency scale, so
//! times are reported as `εt`.

pub mod analysis;
pub mod dynamics;
pub mod hilbert;
pub mod metrology;
pub mod phase_space;
pub mod spectral;

pub use dynamics::{DensityMatrix, IntegratorConfig, ModelParams};
pub use hilbert::{FockDim, Operator, StateVector};
pub use num_complex::Complex64;
