//! Model presets, observable time series, threshold windows and parameter
//! sweeps.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{
    evolve, DensityMatrix, DynamicsError, IntegratorConfig, ModelParams, Observer, StepStats,
};
use crate::hilbert::{cat_state, coherent_state, FockDim, HilbertError};
use crate::metrology::{evaluate, MetrologyError, QfiOptions, QuadratureOps};

/// Drive strength of every preset; times are then in units of `1/ε`.
pub const PRESET_EPSILON: f64 = 1.0;
/// Single-photon loss of every preset, `κ/ε`.
pub const PRESET_KAPPA: f64 = 0.01;
/// Minimum prominence, in dB, for a local maximum to count as an oscillation.
pub const DEFAULT_PROMINENCE_DB: f64 = 0.25;
/// Factor encoding "much greater than" in the adiabatic-elimination check.
pub const DEFAULT_ADIABATIC_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("observable evaluation failed at t = {t}: {source}")]
    Observable { t: f64, source: MetrologyError },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("failed to start worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Two-photon drive with Kerr nonlinearity, no engineered loss.
    TpdKerr,
    /// Two-photon drive with engineered two-photon loss, no Kerr term.
    TpdEtpl,
    Hybrid,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::TpdKerr => "tpd_kerr",
            Self::TpdEtpl => "tpd_etpl",
            Self::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tpd_kerr" => Ok(Self::TpdKerr),
            "tpd_etpl" => Ok(Self::TpdEtpl),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(format!("unknown scenario kind '{other}' (expected tpd_kerr, tpd_etpl or hybrid)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Vacuum,
    Fock(usize),
    Coherent(Complex64),
    Cat { alpha: Complex64, parity: i32 },
}

impl InitialState {
    pub fn build(&self, dim: FockDim) -> Result<DensityMatrix, AnalysisError> {
        Ok(match *self {
            Self::Vacuum => DensityMatrix::vacuum(dim),
            Self::Fock(n) => {
                if n >= dim.get() {
                    return Err(AnalysisError::InvalidScenario(format!(
                        "Fock state |{n}> does not fit in {dim} levels"
                    )));
                }
                DensityMatrix::fock(dim, n)
            }
            Self::Coherent(alpha) => DensityMatrix::from_pure(&coherent_state(alpha, dim)?),
            Self::Cat { alpha, parity } => {
                if parity != 1 && parity != -1 {
                    return Err(AnalysisError::InvalidScenario(format!(
                        "cat parity must be +1 or -1, got {parity}"
                    )));
                }
                DensityMatrix::from_pure(&cat_state(alpha, parity, dim)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    kind: ScenarioKind,
    params: ModelParams,
    initial: InitialState,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, params: ModelParams, initial: InitialState) -> Result<Self, AnalysisError> {
        params.validate()?;
        match kind {
            ScenarioKind::TpdKerr if params.kappa2 != 0.0 => Err(AnalysisError::InvalidScenario(format!(
                "tpd_kerr requires kappa2 = 0, got {}",
                params.kappa2
            ))),
            ScenarioKind::TpdEtpl if params.kerr != 0.0 => Err(AnalysisError::InvalidScenario(format!(
                "tpd_etpl requires kerr = 0, got {}",
                params.kerr
            ))),
            _ => Ok(Self { kind, params, initial }),
        }
    }

    /// Vacuum start with `ε = 1`, `κ = 0.01`.
    pub fn preset(kind: ScenarioKind, kerr: f64, kappa2: f64) -> Result<Self, AnalysisError> {
        let params = ModelParams::new(PRESET_EPSILON, kerr, PRESET_KAPPA, kappa2)?;
        Self::new(kind, params, InitialState::Vacuum)
    }

    pub fn tpd_kerr(kerr: f64) -> Result<Self, AnalysisError> {
        Self::preset(ScenarioKind::TpdKerr, kerr, 0.0)
    }

    pub fn tpd_etpl(kappa2: f64) -> Result<Self, AnalysisError> {
        Self::preset(ScenarioKind::TpdEtpl, 0.0, kappa2)
    }

    pub fn hybrid(kerr: f64, kappa2: f64) -> Result<Self, AnalysisError> {
        Self::preset(ScenarioKind::Hybrid, kerr, kappa2)
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn with_params(&self, params: ModelParams) -> Result<Self, AnalysisError> {
        Self::new(self.kind, params, self.initial)
    }

    pub fn with_initial(&self, initial: InitialState) -> Self {
        Self { initial, ..*self }
    }

    /// Copy with one rate replaced.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self, AnalysisError> {
        let mut p = self.params;
        match axis {
            SweepAxis::Kerr => p.kerr = value,
            SweepAxis::Kappa => p.kappa = value,
            SweepAxis::Kappa2 => p.kappa2 = value,
        }
        self.with_params(p)
    }
}

/// Observables of one sampled state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub t: f64,
    pub gq_db: f64,
    pub s_db: f64,
    /// Generator convention, `X sinθ + P cosθ`.
    pub theta_opt_qfi: f64,
    /// Quadrature convention, `X cosθ + P sinθ`.
    pub theta_min_sq: f64,
    pub mean_n: f64,
    pub parity: f64,
    pub purity: f64,
    pub trace_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    GqDb,
    SDb,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Self::GqDb => "gq_db",
            Self::SDb => "s_db",
        }
    }

    pub fn of(self, s: &TimeSample) -> f64 {
        match self {
            Self::GqDb => s.gq_db,
            Self::SDb => s.s_db,
        }
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gq_db" => Ok(Self::GqDb),
            "s_db" => Ok(Self::SDb),
            other => Err(format!("unknown field '{other}' (expected gq_db or s_db)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub samples: Vec<TimeSample>,
    pub final_state: DensityMatrix,
    pub stats: StepStats,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn values(&self, field: Field) -> Vec<f64> {
        self.samples.iter().map(|s| field.of(s)).collect()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_drift).fold(0.0, f64::max)
    }

    /// Sample closest in time to `t`.
    pub fn at(&self, t: f64) -> &TimeSample {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("time series is nonempty")
    }

    /// `(t, value)` of the global maximum; the earliest on ties.
    pub fn peak(&self, field: Field) -> (f64, f64) {
        let i = argmax(&self.values(field));
        (self.samples[i].t, field.of(&self.samples[i]))
    }

    /// Global minimum over samples with `t > after`.
    pub fn min_after(&self, field: Field, after: f64) -> Option<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.t > after)
            .map(|s| (s.t, field.of(s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// First local minimum following the global maximum.
    pub fn first_minimum_after_peak(&self, field: Field) -> Option<(f64, f64)> {
        let v = self.values(field);
        let start = argmax(&v);
        (start + 1..v.len().saturating_sub(1))
            .find(|&i| v[i] <= v[i - 1] && v[i] < v[i + 1])
            .map(|i| (self.samples[i].t, v[i]))
    }

    /// First time after the global maximum at which `field` falls to `level`,
    /// linearly interpolated.
    pub fn first_fall_to(&self, field: Field, level: f64) -> Option<f64> {
        let v = self.values(field);
        let t = self.times();
        let start = argmax(&v);
        (start + 1..v.len())
            .find(|&i| v[i] <= level)
            .map(|i| crossing(t[i - 1], v[i - 1], t[i], v[i], level))
    }

    /// Pointwise `self − other` on a shared time grid.
    pub fn difference(&self, other: &TimeSeries, field: Field) -> Result<Vec<(f64, f64)>, AnalysisError> {
        if self.samples.len() != other.samples.len()
            || self.samples.iter().zip(&other.samples).any(|(a, b)| a.t != b.t)
        {
            return Err(AnalysisError::InvalidScenario(
                "time series are sampled on different grids".into(),
            ));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.t, field.of(a) - field.of(b)))
            .collect())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Time at which the segment `(t0, v0)–(t1, v1)` crosses `level`.
fn crossing(t0: f64, v0: f64, t1: f64, v1: f64, level: f64) -> f64 {
    if v1 == v0 {
        return t1;
    }
    t0 + (level - v0) / (v1 - v0) * (t1 - t0)
}

/// Options for evaluating observables along a trajectory. With
/// `grid_check`, every sample also cross-checks the QFI maximum and the
/// variance minimum against an angle scan, failing the run on disagreement.
pub type ObservableOptions = QfiOptions;

/// Grid checks on, default eigensum floor.
pub fn checked_observables() -> ObservableOptions {
    QfiOptions {
        grid_check: true,
        ..QfiOptions::default()
    }
}

/// Evaluates the observable stack of one state. `trace_drift` is left at 0.
pub fn observe_state(
    t: f64,
    rho: &DensityMatrix,
    ops: &QuadratureOps,
    opts: &ObservableOptions,
) -> Result<TimeSample, MetrologyError> {
    let (q, s) = evaluate(rho, ops, opts)?;
    let mut mean_n = 0.0;
    let mut parity = 0.0;
    for n in 0..rho.dim().get() {
        let p = rho.get(n, n).re;
        mean_n += n as f64 * p;
        parity += if n % 2 == 0 { p } else { -p };
    }
    Ok(TimeSample {
        t,
        gq_db: q.gq_db,
        s_db: s.s_db,
        theta_opt_qfi: q.theta_opt,
        theta_min_sq: s.theta_min,
        mean_n,
        parity,
        purity: rho.purity(),
        trace_drift: 0.0,
    })
}

struct StackObserver<'a> {
    ops: QuadratureOps,
    opts: &'a ObservableOptions,
    samples: Vec<TimeSample>,
    failure: Option<(f64, MetrologyError)>,
}

impl Observer for StackObserver<'_> {
    fn observe(&mut self, t: f64, rho: &DensityMatrix) -> Result<(), DynamicsError> {
        match observe_state(t, rho, &self.ops, self.opts) {
            Ok(s) => {
                self.samples.push(s);
                Ok(())
            }
            Err(e) => {
                let message = e.to_string();
                self.failure = Some((t, e));
                Err(DynamicsError::Observer { t, message })
            }
        }
    }
}

/// Evolves the scenario and evaluates the observables at every sample.
pub fn run_scenario(s: &Scenario, dim: FockDim, cfg: &IntegratorConfig) -> Result<TimeSeries, AnalysisError> {
    run_scenario_with(s, dim, cfg, &ObservableOptions::default(), &mut [])
}

/// [`run_scenario`] with explicit options and extra observers, which see each
/// sample after the observables have been computed.
pub fn run_scenario_with(
    s: &Scenario,
    dim: FockDim,
    cfg: &IntegratorConfig,
    opts: &ObservableOptions,
    extra: &mut [&mut dyn Observer],
) -> Result<TimeSeries, AnalysisError> {
    let rho0 = s.initial.build(dim)?;
    let mut stack = StackObserver {
        ops: QuadratureOps::new(dim),
        opts,
        samples: Vec::with_capacity(cfg.n_outputs),
        failure: None,
    };
    let result = {
        let mut observers: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
        observers.push(&mut stack);
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        evolve(&rho0, &s.params, cfg, &mut observers)
    };
    let traj = match result {
        Ok(traj) => traj,
        Err(e) => {
            return Err(match stack.failure {
                Some((t, source)) => AnalysisError::Observable { t, source },
                None => e.into(),
            })
        }
    };
    let mut samples = stack.samples;
    for (sample, drift) in samples.iter_mut().zip(&traj.trace_drift) {
        sample.trace_drift = *drift;
    }
    Ok(TimeSeries {
        samples,
        final_state: traj.final_state,
        stats: traj.stats,
    })
}

/// Interval over which an observable stays at or above a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub threshold_db: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// No sample after the window returns to the threshold.
    pub contiguous: bool,
    /// Local maxima after the global maximum with at least the configured
    /// prominence.
    pub n_oscillations: usize,
    /// No sample reached the threshold; `t_start = t_end` at the peak time.
    pub empty: bool,
}

impl WindowReport {
    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// [`threshold_window_with`] at the default prominence.
pub fn threshold_window(series: &TimeSeries, field: Field, threshold: f64) -> WindowReport {
    threshold_window_with(series, field, threshold, DEFAULT_PROMINENCE_DB)
}

/// First maximal run of samples with `field ≥ threshold`, endpoints linearly
/// interpolated between the bracketing samples.
pub fn threshold_window_with(series: &TimeSeries, field: Field, threshold: f64, prominence: f64) -> WindowReport {
    window_of(&series.times(), &series.values(field), threshold, prominence)
}

/// Window detection on raw arrays. Panics if they are empty or differ in length.
pub fn window_of(t: &[f64], v: &[f64], threshold: f64, prominence: f64) -> WindowReport {
    assert!(!t.is_empty() && t.len() == v.len(), "need equal, nonempty arrays");
    let n_oscillations = count_oscillations(v, prominence);
    let Some(first) = v.iter().position(|&x| x >= threshold) else {
        let tp = t[argmax(v)];
        return WindowReport {
            threshold_db: threshold,
            t_start: tp,
            t_end: tp,
            contiguous: true,
            n_oscillations,
            empty: true,
        };
    };
    let t_start = if first == 0 {
        t[0]
    } else {
        crossing(t[first - 1], v[first - 1], t[first], v[first], threshold)
    };
    let (t_end, contiguous) = match (first..v.len()).find(|&i| v[i] < threshold) {
        None => (t[t.len() - 1], true),
        Some(j) => (
            crossing(t[j - 1], v[j - 1], t[j], v[j], threshold),
            !v[j..].iter().any(|&x| x >= threshold),
        ),
    };
    WindowReport {
        threshold_db: threshold,
        t_start,
        t_end,
        contiguous,
        n_oscillations,
        empty: false,
    }
}

/// Counts interior local maxima after the global maximum whose topographic
/// prominence is at least `min_prominence`.
pub fn count_oscillations(v: &[f64], min_prominence: f64) -> usize {
    if v.len() < 3 {
        return 0;
    }
    let start = argmax(v);
    let mut count = 0;
    let mut i = start + 1;
    while i + 1 < v.len() {
        if v[i] > v[i - 1] {
            // Walk over a flat top.
            let mut j = i;
            while j + 1 < v.len() && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < v.len() && v[j + 1] < v[i] && prominence(v, i, j) >= min_prominence {
                count += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    count
}

/// Prominence of the peak occupying `v[lo..=hi]`.
fn prominence(v: &[f64], lo: usize, hi: usize) -> f64 {
    let peak = v[lo];
    let mut left_min = peak;
    for k in (0..lo).rev() {
        if v[k] > peak {
            break;
        }
        left_min = left_min.min(v[k]);
    }
    let mut right_min = peak;
    for &x in &v[hi + 1..] {
        if x > peak {
            break;
        }
        right_min = right_min.min(x);
    }
    peak - left_min.max(right_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Kerr,
    Kappa,
    Kappa2,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kerr => "kerr",
            Self::Kappa => "kappa",
            Self::Kappa2 => "kappa2",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kerr" => Ok(Self::Kerr),
            "kappa" => Ok(Self::Kappa),
            "kappa2" => Ok(Self::Kappa2),
            other => Err(format!("unknown sweep axis '{other}' (expected kerr, kappa or kappa2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub field: Field,
    pub threshold_db: f64,
    pub prominence_db: f64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub observables: ObservableOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            field: Field::GqDb,
            threshold_db: 5.0,
            prominence_db: DEFAULT_PROMINENCE_DB,
            workers: 0,
            observables: ObservableOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: f64,
    pub outcome: Result<(TimeSeries, WindowReport), AnalysisError>,
}

/// Runs `base` once per value of `axis`; entries come back in input order and
/// a failed run does not stop the others.
pub fn sweep(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    dim: FockDim,
    cfg: &IntegratorConfig,
    opts: &SweepOptions,
) -> Result<Vec<SweepEntry>, AnalysisError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| AnalysisError::Workers(e.to_string()))?;
    let run_one = |value: f64| -> Result<(TimeSeries, WindowReport), AnalysisError> {
        let s = base.with_axis(axis, value)?;
        let series = run_scenario_with(&s, dim, cfg, &opts.observables, &mut [])?;
        let window = threshold_window_with(&series, opts.field, opts.threshold_db, opts.prominence_db);
        Ok((series, window))
    };
    Ok(pool.install(|| {
        values
            .par_iter()
            .map(|&value| SweepEntry {
                value,
                outcome: run_one(value),
            })
            .collect()
    }))
}

/// Parameters of a buffer mode used to engineer two-photon loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtplHardware {
    /// Two-photon exchange coupling `g2`.
    pub g2: f64,
    /// Buffer loss rate.
    pub kappa_b: f64,
    /// Target cat amplitude `|α|`.
    pub alpha_mag: f64,
}

impl EtplHardware {
    pub fn new(g2: f64, kappa_b: f64, alpha_mag: f64) -> Result<Self, AnalysisError> {
        for (name, v) in [("g2", g2), ("kappa_b", kappa_b), ("alpha_mag", alpha_mag)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(AnalysisError::InvalidScenario(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { g2, kappa_b, alpha_mag })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRate {
    pub kappa2: f64,
    /// `κ_b > factor · 8 g2 |α|`.
    pub validity_ok: bool,
    pub factor: f64,
}

/// [`effective_kappa2_with_factor`] at the default factor of 10.
pub fn effective_kappa2(hw: &EtplHardware) -> EffectiveRate {
    effective_kappa2_with_factor(hw, DEFAULT_ADIABATIC_FACTOR)
}

/// Two-photon loss `κ₂ = 4 g2²/κ_b` left after eliminating the buffer mode.
pub fn effective_kappa2_with_factor(hw: &EtplHardware, factor: f64) -> EffectiveRate {
    EffectiveRate {
        kappa2: 4.0 * hw.g2 * hw.g2 / hw.kappa_b,
        validity_ok: hw.kappa_b > factor * 8.0 * hw.g2 * hw.alpha_mag,
        factor,
    }
}

/// Coupling that yields `kappa2` for the given buffer loss.
pub fn required_g2(kappa2: f64, kappa_b: f64) -> f64 {
    (kappa2 * kappa_b / 4.0).sqrt()
}
