use nalgebra::DMatrix;
use num_complex::Complex64;

use super::integrator::{integrate, OdeSystem, StepStats};
use super::{DensityMatrix, DynamicsError, EvenLayout, IntegratorConfig, LindbladGenerator, ModelParams};

/// Smallest eigenvalue tolerated at a sample before the run is declared diverged.
pub const DIVERGENCE_EIGENVALUE: f64 = -1e-6;
/// Largest tolerated `|tr(ρ) − 1|` at a sample, measured before renormalization.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;

/// Receives every sampled state of a trajectory.
pub trait Observer {
    fn observe(&mut self, t: f64, rho: &DensityMatrix) -> Result<(), DynamicsError>;
}

impl<F> Observer for F
where
    F: FnMut(f64, &DensityMatrix) -> Result<(), DynamicsError>,
{
    fn observe(&mut self, t: f64, rho: &DensityMatrix) -> Result<(), DynamicsError> {
        self(t, rho)
    }
}

/// Per-sample bookkeeping of one integration. The states themselves are only
/// seen by observers; the final state is kept.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `|tr(ρ) − 1|` before renormalization.
    pub trace_drift: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub final_state: DensityMatrix,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn max_trace_drift(&self) -> f64 {
        self.trace_drift.iter().copied().fold(0.0, f64::max)
    }
}

impl OdeSystem for LindbladGenerator {
    fn len(&self) -> usize {
        self.dim() * self.dim()
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        self.apply(y, dy);
    }
}

/// The generator on the packed even-coherence entries.
struct PackedSystem<'a> {
    generator: &'a LindbladGenerator,
    layout: &'a EvenLayout,
}

impl OdeSystem for PackedSystem<'_> {
    fn len(&self) -> usize {
        self.layout.len()
    }

    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]) {
        self.generator.apply_packed(self.layout, y, dy);
    }
}

/// Integrates the master equation from `rho0` and hands each sample, after
/// re-Hermitization and trace renormalization, to every observer in order.
///
/// The integrator state itself is never projected, so the recorded trace
/// drift measures the integration error. States without odd coherences are
/// integrated in the packed [`EvenLayout`].
pub fn evolve(
    rho0: &DensityMatrix,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory, DynamicsError> {
    params.validate_rates()?;
    cfg.validate()?;
    let dim = rho0.dim();
    let generator = LindbladGenerator::new(params, dim);
    let d = dim.get();
    let layout = EvenLayout::new(dim);
    let packed = layout.fits(rho0.matrix());
    let mut traj = Trajectory {
        times: Vec::with_capacity(cfg.n_outputs),
        trace_drift: Vec::with_capacity(cfg.n_outputs),
        min_eigenvalue: Vec::with_capacity(cfg.n_outputs),
        final_state: rho0.clone(),
        stats: StepStats::default(),
    };
    let mut on_sample = |t: f64, mat: DMatrix<Complex64>| -> Result<(), DynamicsError> {
        let (rho, drift) = DensityMatrix::hermitize_and_normalize(dim, mat);
        if drift > MAX_TRACE_DRIFT || !drift.is_finite() {
            return Err(DynamicsError::TraceDrift { t, drift });
        }
        let min = rho.min_eigenvalue();
        if min < DIVERGENCE_EIGENVALUE || !min.is_finite() {
            return Err(DynamicsError::Diverged { t, min_eigenvalue: min });
        }
        for obs in observers.iter_mut() {
            obs.observe(t, &rho)?;
        }
        traj.times.push(t);
        traj.trace_drift.push(drift);
        traj.min_eigenvalue.push(min);
        traj.final_state = rho;
        Ok(())
    };
    let stats = if packed {
        let system = PackedSystem {
            generator: &generator,
            layout: &layout,
        };
        integrate(&system, &layout.pack(rho0.matrix()), cfg, |_, t, y| {
            on_sample(t, layout.unpack(y))
        })?
    } else {
        integrate(&generator, rho0.matrix().as_slice(), cfg, |_, t, y| {
            on_sample(t, DMatrix::from_column_slice(d, d, y))
        })?
    };
    traj.stats = stats;
    Ok(traj)
}

/// Keeps copies of the states sampled at selected times.
#[derive(Debug, Default)]
pub struct SnapshotRecorder {
    wanted: Vec<f64>,
    pub states: Vec<(f64, DensityMatrix)>,
}

impl SnapshotRecorder {
    /// Records the samples whose times are in `times` (exact matches on the
    /// output grid; use [`nearest_sample_times`] to snap arbitrary times).
    pub fn new(times: Vec<f64>) -> Self {
        Self {
            wanted: times,
            states: Vec::new(),
        }
    }
}

impl Observer for SnapshotRecorder {
    fn observe(&mut self, t: f64, rho: &DensityMatrix) -> Result<(), DynamicsError> {
        if self.wanted.contains(&t) {
            self.states.push((t, rho.clone()));
        }
        Ok(())
    }
}

/// Snaps each requested time to the nearest sample of `cfg`'s output grid.
pub fn nearest_sample_times(cfg: &IntegratorConfig, requested: &[f64]) -> Vec<f64> {
    let step = cfg.t_max / (cfg.n_outputs - 1) as f64;
    requested
        .iter()
        .map(|&t| {
            let k = (t / step).round().clamp(0.0, (cfg.n_outputs - 1) as f64) as usize;
            cfg.sample_time(k)
        })
        .collect()
}
