//! The four subcommands. Each reads a validated [`RunConfig`] and writes its
//! files plus `manifest.txt` under the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use etpl_core::analysis::{
    run_scenario_with, sweep, threshold_window_with, AnalysisError, ObservableOptions, SweepOptions, TimeSeries,
};
use etpl_core::dynamics::{
    classical_mixture, fidelity, nearest_sample_times, numeric_steady_state, numeric_steady_state_in_sector,
    steady_amplitude_tpd_etpl, steady_amplitude_tpd_kerr_spl, DynamicsError, Observer, SnapshotRecorder,
};
use etpl_core::hilbert::{annihilation, cat_state};
use etpl_core::phase_space::{linspace, max_spacing, photon_distribution, wigner};
use etpl_core::{DensityMatrix, Operator};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{
    create_dir, num, pn_csv, steady_csv, time_label, timeseries_csv, wigner_csv, write_atomic, IoFailure,
    WINDOWS_HEADER,
};

pub const MANIFEST: &str = "manifest.txt";
pub const TIMESERIES: &str = "timeseries.csv";
pub const WINDOWS: &str = "windows.csv";
pub const STEADY: &str = "steady.csv";

/// Population allowed in the top levels of the basis before the
/// truncation flag is cleared.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error on {}: {}", .0.path.display(), .0.source)]
    Io(IoFailure),
}

impl From<IoFailure> for CliError {
    fn from(e: IoFailure) -> Self {
        Self::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

fn config_error(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config(ConfigError {
        line: None,
        field: field.into(),
        message: message.into(),
    })
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub fock_dim: Option<usize>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(out) = &overrides.out {
        cfg.output_dir = out.clone();
    }
    if let Some(d) = overrides.fock_dim {
        cfg.fock_dim = d;
        cfg.validate()?;
    }
    Ok(cfg)
}

/// Number of top basis levels watched by the truncation flag.
fn tail_levels(dim: usize) -> usize {
    (dim / 20).max(2)
}

fn tail_population(rho: &DensityMatrix) -> f64 {
    let d = rho.dim().get();
    (d - tail_levels(d)..d).map(|n| rho.get(n, n).re).sum()
}

#[derive(Default)]
struct TailObserver {
    max: f64,
}

impl Observer for TailObserver {
    fn observe(&mut self, _t: f64, rho: &DensityMatrix) -> Result<(), DynamicsError> {
        self.max = self.max.max(tail_population(rho));
        Ok(())
    }
}

struct Manifest {
    lines: String,
}

impl Manifest {
    fn new(cfg: &RunConfig, command: &str) -> Self {
        let mut m = Self {
            lines: format!("# etpl run manifest\n{}", cfg.to_text()),
        };
        m.put("command", command);
        m.put("tool_version", env!("CARGO_PKG_VERSION"));
        m
    }

    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.lines, "result.{key} = {value}");
    }

    fn tail(&mut self, max_tail: f64, dim: usize) {
        self.put("tail_levels", tail_levels(dim));
        self.put("max_tail_population", num(max_tail));
        self.put("truncation_converged", max_tail <= TAIL_TOLERANCE);
    }

    fn write(mut self, dir: &Path, started: Instant) -> Result<(), CliError> {
        self.put("wall_clock_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
        write_atomic(&dir.join(MANIFEST), &self.lines)?;
        Ok(())
    }
}

fn analysis_failure(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::InvalidScenario(m) => config_error("scenario.kind", m),
        other => numerical(other),
    }
}

fn run_series(cfg: &RunConfig, extra: &mut [&mut dyn Observer]) -> Result<(TimeSeries, f64), CliError> {
    let mut tail = TailObserver::default();
    let mut observers: Vec<&mut dyn Observer> = vec![&mut tail];
    for o in extra.iter_mut() {
        observers.push(&mut **o);
    }
    let series = run_scenario_with(
        &cfg.scenario,
        cfg.dim(),
        &cfg.integrator,
        &ObservableOptions::default(),
        &mut observers,
    )
    .map_err(analysis_failure)?;
    drop(observers);
    Ok((series, tail.max))
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    create_dir(&cfg.output_dir)?;
    let (series, tail) = run_series(cfg, &mut [])?;
    write_atomic(&cfg.output_dir.join(TIMESERIES), &timeseries_csv(&series))?;
    let mut m = Manifest::new(cfg, "evolve");
    m.put("max_trace_drift", num(series.max_trace_drift()));
    m.tail(tail, cfg.fock_dim);
    m.write(&cfg.output_dir, started)
}

pub fn cmd_wigner(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    if cfg.wigner_times.is_empty() {
        return Err(config_error("output.wigner_times", "no snapshot times given"));
    }
    let axis = linspace(cfg.grid.min, cfg.grid.max, cfg.grid.points);
    let spacing = (cfg.grid.max - cfg.grid.min) / (cfg.grid.points - 1) as f64;
    let limit = max_spacing(cfg.fock_dim);
    if spacing > limit {
        return Err(config_error(
            "output.grid_points",
            format!("grid spacing {spacing} exceeds {limit}, the finest structure of a {}-level state", cfg.fock_dim),
        ));
    }
    create_dir(&cfg.output_dir)?;
    let actual = nearest_sample_times(&cfg.integrator, &cfg.wigner_times);
    let mut rec = SnapshotRecorder::new(actual.clone());
    let (series, tail) = run_series(cfg, &mut [&mut rec])?;
    write_atomic(&cfg.output_dir.join(TIMESERIES), &timeseries_csv(&series))?;

    let mut m = Manifest::new(cfg, "wigner");
    for (&tau, &t) in cfg.wigner_times.iter().zip(&actual) {
        let (_, rho) = rec
            .states
            .iter()
            .find(|(ts, _)| *ts == t)
            .ok_or_else(|| CliError::Numerical(format!("no sample recorded at t = {t}")))?;
        let grid = wigner(rho, &axis, &axis).map_err(numerical)?;
        let label = time_label(tau);
        write_atomic(&cfg.output_dir.join(format!("wigner_t{label}.csv")), &wigner_csv(&grid))?;
        write_atomic(&cfg.output_dir.join(format!("pn_t{label}.csv")), &pn_csv(&photon_distribution(rho)))?;
        m.put(&format!("snapshot.{label}"), t);
    }
    m.put("max_trace_drift", num(series.max_trace_drift()));
    m.tail(tail, cfg.fock_dim);
    m.write(&cfg.output_dir, started)
}

fn status_text(e: &AnalysisError) -> String {
    format!("error: {e}").replace([',', '\n'], ";")
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config_error("sweep.axis", "required for the sweep command"))?;
    create_dir(&cfg.output_dir)?;
    let opts = SweepOptions {
        field: spec.field,
        threshold_db: spec.thresholds[0],
        prominence_db: spec.prominence_db,
        workers: spec.workers,
        observables: ObservableOptions::default(),
    };
    let entries = sweep(&cfg.scenario, spec.axis, &spec.values, cfg.dim(), &cfg.integrator, &opts)
        .map_err(numerical)?;

    let mut windows = format!("{WINDOWS_HEADER}\n");
    let mut succeeded = 0;
    for entry in &entries {
        let label = time_label(entry.value);
        let dir = cfg.output_dir.join(format!("{}_{label}", spec.axis));
        create_dir(&dir)?;
        let sub = RunConfig {
            scenario: cfg.scenario.with_axis(spec.axis, entry.value).map_err(analysis_failure)?,
            output_dir: dir.clone(),
            sweep: None,
            ..cfg.clone()
        };
        let mut m = Manifest::new(&sub, "sweep");
        match &entry.outcome {
            Ok((series, _)) => {
                succeeded += 1;
                write_atomic(&dir.join(TIMESERIES), &timeseries_csv(series))?;
                for &thr in &spec.thresholds {
                    let w = threshold_window_with(series, spec.field, thr, spec.prominence_db);
                    let status = if w.empty { "empty" } else { "ok" };
                    let _ = writeln!(
                        windows,
                        "{},{},{},{},{},{status}",
                        num(entry.value),
                        num(thr),
                        num(w.t_start),
                        num(w.t_end),
                        w.n_oscillations
                    );
                }
                m.put("status", "ok");
                m.put("max_trace_drift", num(series.max_trace_drift()));
                m.put("final_tail_population", num(tail_population(&series.final_state)));
                m.put(
                    "truncation_converged",
                    tail_population(&series.final_state) <= TAIL_TOLERANCE,
                );
            }
            Err(e) => {
                for &thr in &spec.thresholds {
                    let _ = writeln!(windows, "{},{},,,,{}", num(entry.value), num(thr), status_text(e));
                }
                m.put("status", status_text(e));
            }
        }
        m.write(&dir, started)?;
    }
    write_atomic(&cfg.output_dir.join(WINDOWS), &windows)?;
    let mut m = Manifest::new(cfg, "sweep");
    m.put("field", spec.field.name());
    m.put("succeeded", format!("{succeeded}/{}", entries.len()));
    m.write(&cfg.output_dir, started)?;
    if succeeded == 0 {
        return Err(CliError::Numerical("every sweep value failed".into()));
    }
    Ok(())
}

fn push_amplitude(rows: &mut Vec<(String, f64)>, name: &str, a: etpl_core::Complex64, ok: bool) {
    rows.push((format!("{name}_re"), a.re));
    rows.push((format!("{name}_im"), a.im));
    rows.push((format!("{name}_abs"), a.norm()));
    rows.push((format!("{name}_arg"), a.arg()));
    rows.push((format!("{name}_regime_ok"), f64::from(u8::from(ok))));
}

fn steady_failure(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::UndefinedAmplitude | DynamicsError::InvalidParams(_) => config_error("scenario.kind", e.to_string()),
        other => numerical(other),
    }
}

pub fn cmd_steady(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = *cfg.scenario.params();
    if params.kerr == 0.0 && params.kappa2 == 0.0 {
        return Err(config_error(
            "scenario.kerr",
            "steady amplitude undefined: kerr and kappa2 are both zero",
        ));
    }
    let dim = cfg.dim();
    create_dir(&cfg.output_dir)?;

    let mut rows: Vec<(String, f64)> = Vec::new();
    let kerr_amp = if params.kerr > 0.0 && params.kappa2 == 0.0 {
        let a = steady_amplitude_tpd_kerr_spl(&params).map_err(steady_failure)?;
        push_amplitude(&mut rows, "alpha_kerr", a.alpha, a.validity_ok);
        Some(a.alpha)
    } else {
        None
    };
    let cat_amp = steady_amplitude_tpd_etpl(&params).map_err(steady_failure)?;
    push_amplitude(&mut rows, "alpha_cat", cat_amp.alpha, cat_amp.validity_ok);

    // Without single-photon loss the parity of the initial state selects
    // the steady state.
    let (rho, sector) = if params.kappa > 0.0 {
        (numeric_steady_state(&params, dim).map_err(steady_failure)?, 0)
    } else {
        let rho0 = cfg.scenario.initial().build(dim).map_err(analysis_failure)?;
        let parity: f64 = (0..dim.get())
            .map(|n| if n % 2 == 0 { rho0.get(n, n).re } else { -rho0.get(n, n).re })
            .sum();
        let sign = if parity >= 0.0 { 1 } else { -1 };
        (
            numeric_steady_state_in_sector(&params, dim, sign).map_err(steady_failure)?,
            sign,
        )
    };
    let a = annihilation(dim);
    let a2 = Operator::from_matrix(dim, a.matrix() * a.matrix());
    let mean_a2 = rho.expectation(&a2);
    let dist = photon_distribution(&rho);
    rows.push(("sector".into(), f64::from(sector)));
    rows.push(("a2_re".into(), mean_a2.re));
    rows.push(("a2_im".into(), mean_a2.im));
    rows.push(("mean_n".into(), dist.mean()));
    rows.push(("parity".into(), 1.0 - 2.0 * dist.odd_population()));
    rows.push(("purity".into(), rho.purity()));
    if let Some(alpha) = kerr_amp {
        let mix = classical_mixture(alpha, dim).map_err(numerical)?;
        rows.push(("fidelity_mixture_kerr".into(), fidelity(&rho, &mix).map_err(numerical)?));
    }
    let mix = classical_mixture(cat_amp.alpha, dim).map_err(numerical)?;
    rows.push(("fidelity_mixture_cat".into(), fidelity(&rho, &mix).map_err(numerical)?));
    if sector != 0 {
        let cat = cat_state(cat_amp.alpha, sector, dim).map_err(numerical)?;
        rows.push(("fidelity_cat".into(), rho.fidelity_with_pure(&cat)));
    }
    write_atomic(&cfg.output_dir.join(STEADY), &steady_csv(&rows))?;

    let mut m = Manifest::new(cfg, "steady");
    m.tail(tail_population(&rho), cfg.fock_dim);
    m.write(&cfg.output_dir, started)
}
