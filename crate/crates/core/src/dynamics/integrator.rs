//! Explicit Runge-Kutta integration of a linear complex ODE, sampled on a
//! uniform output grid.

use num_complex::Complex64;

use super::DynamicsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Adaptive Dormand-Prince 5(4).
    DormandPrince,
    /// Classic fixed-step RK4 with step `max_step`, for cross-checks.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Final time, in units of `1/ε`.
    pub t_max: f64,
    /// Number of uniformly spaced samples on `[0, t_max]`, endpoints included.
    pub n_outputs: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub method: Method,
}

/// The default tolerances keep the round-off negativity of nearly pure states
/// well inside the positivity tolerance; the step size at the usual basis
/// sizes is limited by stability rather than accuracy, so they cost little.
impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            n_outputs: 5001,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            method: Method::DormandPrince,
        }
    }
}

impl IntegratorConfig {
    pub fn new(t_max: f64, n_outputs: usize) -> Self {
        Self {
            t_max,
            n_outputs,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidConfig(m));
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.n_outputs < 2 {
            return bad(format!("n_outputs must be at least 2, got {}", self.n_outputs));
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return bad(format!("{name} must lie in (0, 1e-2], got {v}"));
            }
        }
        if !(self.max_step.is_finite() && self.max_step > 0.0) {
            return bad(format!("max_step must be positive, got {}", self.max_step));
        }
        Ok(())
    }

    /// Sample time `k` of the output grid.
    pub fn sample_time(&self, k: usize) -> f64 {
        if k + 1 == self.n_outputs {
            self.t_max
        } else {
            self.t_max * k as f64 / (self.n_outputs - 1) as f64
        }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.n_outputs).map(|k| self.sample_time(k)).collect()
    }
}

/// Counters reported by a finished integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

// Dormand-Prince 5(4) tableau. The system is autonomous, so the nodes c_i are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const BETA: f64 = 0.04;
const MAX_STEPS: usize = 50_000_000;

/// `y' = f(y)`, autonomous, on a flat complex state.
pub(crate) trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&self, y: &[Complex64], dy: &mut [Complex64]);
}

/// `out = y + h Σ w_j k_j`, one pass per term so each loop vectorizes.
fn combine(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    out.copy_from_slice(y);
    for (w, k) in terms {
        let c = h * w;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += ki * c;
        }
    }
}

/// Integrates from `y0` at `t = 0`, calling `sample(k, t, y)` at each output
/// time of `cfg` (including `t = 0`). Stops early if `sample` returns an error.
pub(crate) fn integrate<S, F>(
    system: &S,
    y0: &[Complex64],
    cfg: &IntegratorConfig,
    mut sample: F,
) -> Result<StepStats, DynamicsError>
where
    S: OdeSystem,
    F: FnMut(usize, f64, &[Complex64]) -> Result<(), DynamicsError>,
{
    cfg.validate()?;
    let n = system.len();
    assert_eq!(y0.len(), n, "initial state length mismatch");
    sample(0, 0.0, y0)?;
    match cfg.method {
        Method::DormandPrince => dormand_prince(system, y0, cfg, sample),
        Method::Rk4 => rk4(system, y0, cfg, sample),
    }
}

fn dormand_prince<S, F>(
    system: &S,
    y0: &[Complex64],
    cfg: &IntegratorConfig,
    mut sample: F,
) -> Result<StepStats, DynamicsError>
where
    S: OdeSystem,
    F: FnMut(usize, f64, &[Complex64]) -> Result<(), DynamicsError>,
{
    let n = system.len();
    let mut y = y0.to_vec();
    let mut ynew = vec![Complex64::new(0.0, 0.0); n];
    let mut stage = ynew.clone();
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| ynew.clone()).collect();
    let mut stats = StepStats::default();

    system.rhs(&y, &mut k[0]);
    stats.rhs_evaluations += 1;

    let mut t = 0.0;
    let mut h = cfg.max_step.min(1e-3);
    let mut err_prev = 1e-4f64;
    for out_idx in 1..cfg.n_outputs {
        let t_out = cfg.sample_time(out_idx);
        let mut last_rejected = false;
        while t < t_out {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(DynamicsError::Stiffness { t, step: h });
            }
            let remaining = t_out - t;
            let hits_output = h >= remaining * (1.0 - 1e-12);
            let step = if hits_output { remaining } else { h };
            if step < 1e-14 * t_out.max(1.0) && !hits_output {
                return Err(DynamicsError::Stiffness { t, step });
            }

            let (k1, rest) = k.split_first_mut().unwrap();
            let (k2, rest) = rest.split_first_mut().unwrap();
            let (k3, rest) = rest.split_first_mut().unwrap();
            let (k4, rest) = rest.split_first_mut().unwrap();
            let (k5, rest) = rest.split_first_mut().unwrap();
            let (k6, rest) = rest.split_first_mut().unwrap();
            let k7 = &mut rest[0];

            combine(&mut stage, &y, step, &[(A21, k1)]);
            system.rhs(&stage, k2);
            combine(&mut stage, &y, step, &[(A31, k1), (A32, k2)]);
            system.rhs(&stage, k3);
            combine(&mut stage, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
            system.rhs(&stage, k4);
            combine(&mut stage, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            system.rhs(&stage, k5);
            combine(
                &mut stage,
                &y,
                step,
                &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
            );
            system.rhs(&stage, k6);
            combine(
                &mut ynew,
                &y,
                step,
                &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
            );
            system.rhs(&ynew, k7);
            stats.rhs_evaluations += 6;

            let mut acc = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
                let scale = cfg.abs_tol + cfg.rel_tol * y[i].norm_sqr().max(ynew[i].norm_sqr()).sqrt();
                acc += e.norm_sqr() / (scale * scale);
            }
            let err = (acc / n as f64).sqrt();
            if !err.is_finite() {
                return Err(DynamicsError::Diverged {
                    t,
                    min_eigenvalue: f64::NAN,
                });
            }

            if err <= 1.0 {
                stats.accepted += 1;
                t = if hits_output { t_out } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                // First-same-as-last: k7 is f(y_new).
                k.swap(0, 6);
                let mut fac = SAFETY * err.max(1e-10).powf(-(0.2 - 0.75 * BETA)) * err_prev.powf(BETA);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                err_prev = err.max(1e-4);
                // A step shortened to land on an output time does not shrink the proposal.
                let base = if hits_output { h.max(step) } else { step };
                h = (base * fac).min(cfg.max_step);
                last_rejected = false;
            } else {
                stats.rejected += 1;
                let fac = (SAFETY * err.powf(-0.2)).max(FAC_MIN);
                h = step * fac;
                last_rejected = true;
            }
        }
        sample(out_idx, t_out, &y)?;
    }
    Ok(stats)
}

fn rk4<S, F>(system: &S, y0: &[Complex64], cfg: &IntegratorConfig, mut sample: F) -> Result<StepStats, DynamicsError>
where
    S: OdeSystem,
    F: FnMut(usize, f64, &[Complex64]) -> Result<(), DynamicsError>,
{
    let n = system.len();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut stage) =
        (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    let mut stats = StepStats::default();
    for out_idx in 1..cfg.n_outputs {
        let span = cfg.sample_time(out_idx) - cfg.sample_time(out_idx - 1);
        let substeps = (span / cfg.max_step).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for _ in 0..substeps {
            system.rhs(&y, &mut k1);
            combine(&mut stage, &y, 0.5 * h, &[(1.0, &k1)]);
            system.rhs(&stage, &mut k2);
            combine(&mut stage, &y, 0.5 * h, &[(1.0, &k2)]);
            system.rhs(&stage, &mut k3);
            combine(&mut stage, &y, h, &[(1.0, &k3)]);
            system.rhs(&stage, &mut k4);
            let yc = y.clone();
            combine(
                &mut y,
                &yc,
                h,
                &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
            );
            stats.accepted += 1;
            stats.rhs_evaluations += 4;
        }
        if y.iter().any(|z| !z.is_finite()) {
            return Err(DynamicsError::Diverged {
                t: cfg.sample_time(out_idx),
                min_eigenvalue: f64::NAN,
            });
        }
        sample(out_idx, cfg.sample_time(out_idx), &y)?;
    }
    Ok(stats)
}
