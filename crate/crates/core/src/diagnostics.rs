//! Convergence studies, quotient-rule residuals, equilibrium distances,
//! structure audits and the reference solver they are measured against.
//!
//! The reference solver only uses the classical RK4 baseline, never the
//! rational or auxiliary schemes it is used to check.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simplex::{eval_fitness, rho, FitnessModel, SimplexState};
use crate::stepper::{baseline_increment, integrate_fixed, BaselineKind, Scheme, StepResult};
use crate::trajectory::Trajectory;

/// Smallest component admitted by the quotient residual.
pub const MIN_POSITIVE_COMPONENT: f64 = 1e-300;

/// Mass drift above which a state counts as violating the simplex.
pub const VIOLATION_MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Largest RK4 substep of the first pass.
    pub h_ref: f64,
    /// Max grid-point difference between successive refinements.
    pub tol: f64,
    pub max_refinements: u32,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            h_ref: 1.0 / 512.0,
            tol: 1e-12,
            max_refinements: 3,
        }
    }
}

// RK4 on the raw replicator field with compensated state updates, so that
// rounding does not accumulate over millions of substeps. Returns the states
// at the grid times, flattened row by row.
fn rk4_on_grid<M: FitnessModel + ?Sized>(model: &M, x0: &[f64], grid: &[f64], h_max: f64) -> Result<Vec<f64>> {
    let n = x0.len();
    let mut out = Vec::with_capacity(grid.len() * n);
    let mut x = x0.to_vec();
    let mut carry = vec![0.0; n];
    let mut t = 0.0;
    for &target in grid {
        let span = target - t;
        if span > 0.0 {
            let m = ((span / h_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let dt = span / m as f64;
            for _ in 0..m {
                let delta = baseline_increment(BaselineKind::Rk4, &x, dt, model)?;
                for i in 0..n {
                    let y = delta[i] - carry[i];
                    let sum = x[i] + y;
                    carry[i] = (sum - x[i]) - y;
                    x[i] = sum;
                }
            }
        }
        t = target;
        out.extend_from_slice(&x);
    }
    Ok(out)
}

fn refined_reference<M: FitnessModel + ?Sized>(
    model: &M,
    x0: &[f64],
    grid: &[f64],
    opts: &OracleOptions,
) -> Result<Vec<f64>> {
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x0.len(),
        });
    }
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("reference grid must be non-negative and sorted".into()));
    }
    let mut h = opts.h_ref;
    let mut coarse = rk4_on_grid(model, x0, grid, h)?;
    let mut difference = f64::INFINITY;
    for _ in 0..opts.max_refinements {
        h *= 0.5;
        let fine = rk4_on_grid(model, x0, grid, h)?;
        difference = coarse.iter().zip(&fine).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if difference < opts.tol {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::OracleNotConverged { difference })
}

/// High-accuracy solution of the raw replicator ODE at the `grid` times.
///
/// Each grid interval is split into equal RK4 substeps no longer than
/// `h_ref`; the substep is halved until two successive passes agree to
/// `tol` at every grid point. Returns the finer pass.
pub fn reference_solve<M: FitnessModel + ?Sized>(
    model: &M,
    x0: &[f64],
    grid: &[f64],
    opts: &OracleOptions,
) -> Result<Vec<Vec<f64>>> {
    let flat = refined_reference(model, x0, grid, opts)?;
    Ok(flat.chunks(x0.len()).map(<[f64]>::to_vec).collect())
}

/// Largest `‖x^n − y_ref(t_n)‖₂` over the stored states of `traj`.
pub fn max_l2_error<M: FitnessModel + ?Sized>(traj: &Trajectory, model: &M, opts: &OracleOptions) -> Result<f64> {
    let flat = refined_reference(model, &traj.states[0], &traj.times, opts)?;
    Ok(traj
        .states
        .iter()
        .zip(flat.chunks(traj.dim()))
        .map(|(x, y)| l2_distance(x, y))
        .fold(0.0, f64::max))
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// `(1/M) Σ_{n=0}^{M} ‖y_ref(t_n) − y_n‖₂`.
    pub e2: f64,
    /// `log2(E₂(2h) / E₂(h))`, when the row for `2h` is present.
    pub p_hat: Option<f64>,
}

fn observed_rates(hs: &[f64], values: &[f64]) -> Vec<Option<f64>> {
    (0..hs.len())
        .map(|k| {
            let coarser = (0..hs.len()).find(|&j| (hs[j] - 2.0 * hs[k]).abs() <= 1e-12 * hs[j])?;
            Some((values[coarser] / values[k]).log2())
        })
        .collect()
}

/// Mean ℓ² error of a trajectory against reference states on its own grid.
pub fn mean_l2_error(traj: &Trajectory, reference: &[Vec<f64>]) -> f64 {
    let total: f64 = traj
        .states
        .iter()
        .zip(reference)
        .map(|(x, y)| l2_distance(x, y))
        .sum();
    total / traj.steps() as f64
}

/// Runs `scheme` at each step size and measures it against the reference.
/// Step sizes are processed in parallel; rows keep the order of `h_list`.
pub fn convergence_study<M: FitnessModel + ?Sized>(
    scheme: Scheme,
    model: &M,
    x0: &SimplexState,
    t_end: f64,
    h_list: &[f64],
    opts: &OracleOptions,
) -> Result<Vec<ConvergenceRow>> {
    let errors = h_list
        .par_iter()
        .map(|&h| {
            let traj = integrate_fixed(scheme, x0, h, t_end, model)?;
            let reference = reference_solve(model, x0, &traj.times, opts)?;
            Ok(mean_l2_error(&traj, &reference))
        })
        .collect::<Result<Vec<f64>>>()?;
    let rates = observed_rates(h_list, &errors);
    Ok(h_list
        .iter()
        .zip(errors)
        .zip(rates)
        .map(|((&h, e2), p_hat)| ConvergenceRow { h, e2, p_hat })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Instantaneous averages `R^n = (1/N²) Σ_{i,j} |Q^n_{ij}|`.
    pub per_step: Vec<f64>,
    /// `Σ_n h_n R^n`.
    pub r_q: f64,
    /// Decay rate against the run with twice the step, filled in by
    /// [`residual_study`].
    pub rho_rate: Option<f64>,
}

/// Discrete quotient-rule residuals of a trajectory,
/// `Q^n_{ij} = x_i^{n+1}/x_j^{n+1} − (x_i^n/x_j^n) exp(h_n (f_i − f_j)(x^n))`,
/// averaged over all ordered pairs, the diagonal included.
pub fn quotient_residuals<M: FitnessModel + ?Sized>(traj: &Trajectory, model: &M) -> Result<ResidualReport> {
    for (step, x) in traj.states.iter().enumerate() {
        if let Some(index) = x.iter().position(|v| v.is_nan() || *v < MIN_POSITIVE_COMPONENT) {
            return Err(Error::ZeroComponent { index, step });
        }
    }
    let n = traj.dim();
    let norm = 1.0 / (n * n) as f64;
    let mut per_step = Vec::with_capacity(traj.steps());
    let mut r_q = 0.0;
    for (k, w) in traj.states.windows(2).enumerate() {
        let (x, y) = (&w[0], &w[1]);
        let h = traj.times[k + 1] - traj.times[k];
        let f = eval_fitness(model, x)?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let q = y[i] / y[j] - x[i] / x[j] * (h * (f[i] - f[j])).exp();
                acc += q.abs();
            }
        }
        let r = acc * norm;
        r_q += h * r;
        per_step.push(r);
    }
    Ok(ResidualReport {
        per_step,
        r_q,
        rho_rate: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub h: f64,
    pub r_q: f64,
    pub rho: Option<f64>,
}

/// Fixed-step rational runs at each `h`, with `R_Q(h)` and its decay rate.
pub fn residual_study<M: FitnessModel + ?Sized>(
    model: &M,
    x0: &SimplexState,
    t_end: f64,
    h_list: &[f64],
) -> Result<Vec<ResidualRow>> {
    let values = h_list
        .par_iter()
        .map(|&h| {
            let traj = integrate_fixed(Scheme::Rational, x0, h, t_end, model)?;
            Ok(quotient_residuals(&traj, model)?.r_q)
        })
        .collect::<Result<Vec<f64>>>()?;
    let rates = observed_rates(h_list, &values);
    Ok(h_list
        .iter()
        .zip(values)
        .zip(rates)
        .map(|((&h, r_q), rho)| ResidualRow { h, r_q, rho })
        .collect())
}

/// Largest relative defect of the exact two-stage ratio update
/// `x_i^{n+1}/x_j^{n+1} = (x_i^n/x_j^n) exp(φ_i − φ_j)` over pairs with
/// positive components, with `φ` the second-stage exponents of `step`.
///
/// The scheme realises the ratio `ρ(φ_i)/ρ(φ_j)`, so the defect is the Padé
/// error, `O(|φ|⁵)`.
pub fn quotient_identity_defect(x: &[f64], step: &StepResult) -> f64 {
    pair_defect(x, step, |a, b| (a - b).exp())
}

/// As [`quotient_identity_defect`] with the rational factor
/// `ρ(φ_i)/ρ(φ_j)`; zero up to rounding.
pub fn quotient_rational_defect(x: &[f64], step: &StepResult) -> f64 {
    pair_defect(x, step, |a, b| rho(a) / rho(b))
}

fn pair_defect(x: &[f64], step: &StepResult, factor: impl Fn(f64, f64) -> f64) -> f64 {
    let y = &step.next;
    let phi = &step.phi_half;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if x[i] > 0.0 && x[j] > 0.0 {
                let lhs = y[i] / y[j];
                let rhs = x[i] / x[j] * factor(phi[i], phi[j]);
                worst = worst.max(((lhs - rhs) / rhs).abs());
            }
        }
    }
    worst
}

/// ℓ¹ distance `Σ_i |x*_i − x_i^n|` at every stored state.
pub fn equilibrium_distance(traj: &Trajectory, x_star: &[f64]) -> Result<Vec<f64>> {
    if traj.dim() != x_star.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: x_star.len(),
        });
    }
    Ok(traj
        .states
        .iter()
        .map(|x| x.iter().zip(x_star).map(|(a, b)| (a - b).abs()).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationAudit {
    /// Most negative component seen, or 0.
    pub max_negative: f64,
    /// Largest `|Σ_i x_i − 1|`.
    pub max_mass_drift: f64,
    /// First time a component is negative or the mass drifts beyond
    /// [`VIOLATION_MASS_TOLERANCE`].
    pub first_violation_time: Option<f64>,
}

impl ViolationAudit {
    pub fn is_clean(&self) -> bool {
        self.first_violation_time.is_none()
    }
}

pub fn violation_audit(times: &[f64], states: &[Vec<f64>]) -> ViolationAudit {
    let mut audit = ViolationAudit {
        max_negative: 0.0,
        max_mass_drift: 0.0,
        first_violation_time: None,
    };
    for (t, x) in times.iter().zip(states) {
        let lowest = x.iter().copied().fold(f64::INFINITY, f64::min);
        let drift = (x.iter().sum::<f64>() - 1.0).abs();
        audit.max_negative = audit.max_negative.min(lowest);
        audit.max_mass_drift = audit.max_mass_drift.max(drift);
        let violated = lowest < 0.0 || drift.is_nan() || drift > VIOLATION_MASS_TOLERANCE;
        if violated && audit.first_violation_time.is_none() {
            audit.first_violation_time = Some(*t);
        }
    }
    audit
}

pub fn audit_trajectory(traj: &Trajectory) -> ViolationAudit {
    violation_audit(&traj.times, &traj.states)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStatistics {
    pub min_h: f64,
    pub max_h: f64,
    pub mean_h: f64,
    /// Accepted over attempted, final shortened step excluded.
    pub acceptance_ratio: f64,
    pub attempts: usize,
    /// Lag of the strongest local maximum of the step-size autocorrelation.
    pub autocorr_peak_lag: Option<usize>,
    pub autocorr_peak: Option<f64>,
}

/// Summary of the step-size sequence. The final shortened step is excluded.
pub fn step_statistics(traj: &Trajectory) -> StepStatistics {
    let attempts: Vec<_> = traj.attempts.iter().filter(|a| !a.clipped).collect();
    let accepted: Vec<f64> = attempts.iter().filter(|a| a.accepted).map(|a| a.h).collect();
    let acceptance_ratio = if attempts.is_empty() {
        0.0
    } else {
        accepted.len() as f64 / attempts.len() as f64
    };
    let (min_h, max_h, mean_h) = if accepted.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            accepted.iter().copied().fold(f64::INFINITY, f64::min),
            accepted.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            accepted.iter().sum::<f64>() / accepted.len() as f64,
        )
    };
    let peak = autocorrelation_peak(&accepted);
    StepStatistics {
        min_h,
        max_h,
        mean_h,
        acceptance_ratio,
        attempts: attempts.len(),
        autocorr_peak_lag: peak.map(|p| p.0),
        autocorr_peak: peak.map(|p| p.1),
    }
}

/// Normalised autocorrelation of `series` at lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|v| v * v).sum();
    (0..=max_lag.min(n - 1))
        .map(|k| {
            if var == 0.0 {
                0.0
            } else {
                centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / var
            }
        })
        .collect()
}

/// Largest lag searched for the step-size oscillation peak.
pub const MAX_AUTOCORR_LAG: usize = 2048;

// Strongest positive local maximum at a lag >= 1, by autocorrelation value.
// Series constant up to rounding have no meaningful peak.
fn autocorrelation_peak(series: &[f64]) -> Option<(usize, f64)> {
    let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if series.is_empty() || hi - lo <= 1e-9 * hi.abs() {
        return None;
    }
    let acf = autocorrelation(series, (series.len() / 2).min(MAX_AUTOCORR_LAG));
    let mut best: Option<(usize, f64)> = None;
    for k in 1..acf.len().saturating_sub(1) {
        let is_peak = acf[k] > acf[k - 1] && acf[k] >= acf[k + 1] && acf[k] > 0.0;
        if is_peak && best.is_none_or(|(_, v)| acf[k] > v) {
            best = Some((k, acf[k]));
        }
    }
    best
}
