//! Master-equation dynamics: the Hamiltonian, the Lindblad generator, time
//! integration and steady states.

mod density;
mod evolve;
mod generator;
mod integrator;
mod params;
mod steady;

pub use density::{fidelity, DensityMatrix};
pub use evolve::{
    evolve, nearest_sample_times, Observer, SnapshotRecorder, Trajectory, DIVERGENCE_EIGENVALUE,
    MAX_TRACE_DRIFT,
};
pub use generator::{build_hamiltonian, lindblad_rhs, EvenLayout, LindbladGenerator};
pub use integrator::{IntegratorConfig, Method, StepStats};
pub use params::ModelParams;
pub use steady::{
    classical_mixture, numeric_steady_state, numeric_steady_state_in_sector,
    steady_amplitude_tpd_etpl, steady_amplitude_tpd_kerr_spl, SteadyAmplitude,
};

use thiserror::Error;

use crate::hilbert::HilbertError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("integration diverged at t = {t}: smallest eigenvalue {min_eigenvalue:e}")]
    Diverged { t: f64, min_eigenvalue: f64 },
    #[error("trace drifted by {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("step size underflow at t = {t} (h = {step:e}); the problem is too stiff for the explicit integrator")]
    Stiffness { t: f64, step: f64 },
    #[error("regime error: {0}")]
    Regime(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("steady amplitude undefined: K and kappa2 are both zero")]
    UndefinedAmplitude,
    #[error("steady state is not unique: with kappa = 0 parity is conserved; solve within a fixed parity sector instead")]
    AmbiguousSteadyState,
    #[error("steady-state solve failed: {0}")]
    SteadySolve(String),
    #[error("observer failed at t = {t}: {message}")]
    Observer { t: f64, message: String },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}
