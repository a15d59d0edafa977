//! One-step maps and the fixed-step driver.
//!
//! [`rational_step`] is the normalised two-stage rational integrator
//! (second order) and [`auxiliary_step`] its first-order companion. Both
//! multiply the current state by positive weights and renormalise, so they
//! stay on the simplex, keep zero components at zero and fix corners and
//! interior equilibria for every step size. The explicit Runge–Kutta
//! baselines integrate the raw replicator field without any projection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simplex::{advantage_raw, rho, sum, FitnessModel, SimplexState};
use crate::trajectory::{StepAttempt, Trajectory};

/// Output of one rational step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next: SimplexState,
    /// The internal stage `x^{n+1/2}`.
    pub half: SimplexState,
    /// Exponents `h·F(x^{n+1/2})` applied to the input in the second stage.
    pub phi_half: Vec<f64>,
}

/// `x_i ρ(φ_i) / Σ_j x_j ρ(φ_j)`.
fn reweight(x: &[f64], phi: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = x.iter().zip(phi).map(|(xi, p)| xi * rho(*p)).collect();
    let total = sum(&w);
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("step size must be positive and finite, got {h}")))
    }
}

pub fn rational_step<M: FitnessModel + ?Sized>(x: &SimplexState, h: f64, model: &M) -> Result<StepResult> {
    check_step(h)?;
    let phi: Vec<f64> = advantage_raw(x, model)?.into_iter().map(|a| 0.5 * h * a).collect();
    let half = reweight(x, &phi);
    let phi_half: Vec<f64> = advantage_raw(&half, model)?.into_iter().map(|a| h * a).collect();
    // The second stage reweights x^n, not the internal stage.
    let next = reweight(x, &phi_half);
    Ok(StepResult {
        next: SimplexState::from_normalized(next),
        half: SimplexState::from_normalized(half),
        phi_half,
    })
}

/// First-order companion: `x_i ρ(h F_i(x)) / Σ_j x_j ρ(h F_j(x))`.
pub fn auxiliary_step<M: FitnessModel + ?Sized>(x: &SimplexState, h: f64, model: &M) -> Result<SimplexState> {
    check_step(h)?;
    let phi: Vec<f64> = advantage_raw(x, model)?.into_iter().map(|a| h * a).collect();
    Ok(SimplexState::from_normalized(reweight(x, &phi)))
}

/// Explicit Runge–Kutta methods applied to the unprojected replicator field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Euler,
    Heun,
    Rk4,
}

/// `dx/dt = x ⊙ (f(x) − (f(x)ᵀx) e)`, evaluated as is.
pub fn replicator_rhs<M: FitnessModel + ?Sized>(x: &[f64], model: &M) -> Result<Vec<f64>> {
    let mut adv = advantage_raw(x, model)?;
    for (a, xi) in adv.iter_mut().zip(x) {
        *a *= xi;
    }
    Ok(adv)
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// Increment `Δ` of one explicit RK step, so that the step maps `x` to
/// `x + Δ`. Exposed for drivers that accumulate states with compensated sums.
pub fn baseline_increment<M: FitnessModel + ?Sized>(
    kind: BaselineKind,
    x: &[f64],
    h: f64,
    model: &M,
) -> Result<Vec<f64>> {
    check_step(h)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence);
    }
    let k1 = replicator_rhs(x, model)?;
    let delta: Vec<f64> = match kind {
        BaselineKind::Euler => k1.iter().map(|k| h * k).collect(),
        BaselineKind::Heun => {
            let k2 = replicator_rhs(&axpy(x, h, &k1), model)?;
            k1.iter().zip(&k2).map(|(a, b)| 0.5 * h * (a + b)).collect()
        }
        BaselineKind::Rk4 => {
            let k2 = replicator_rhs(&axpy(x, 0.5 * h, &k1), model)?;
            let k3 = replicator_rhs(&axpy(x, 0.5 * h, &k2), model)?;
            let k4 = replicator_rhs(&axpy(x, h, &k3), model)?;
            (0..x.len())
                .map(|i| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    };
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence);
    }
    Ok(delta)
}

/// One explicit RK step. The result is not projected back to the simplex.
pub fn baseline_step<M: FitnessModel + ?Sized>(
    kind: BaselineKind,
    x: &[f64],
    h: f64,
    model: &M,
) -> Result<Vec<f64>> {
    let delta = baseline_increment(kind, x, h, model)?;
    let next: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence);
    }
    Ok(next)
}

/// Integration schemes available to the fixed-step driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Rational,
    Auxiliary,
    Euler,
    Heun,
    Rk4,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Rational,
        Scheme::Auxiliary,
        Scheme::Euler,
        Scheme::Heun,
        Scheme::Rk4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Rational => "rational",
            Scheme::Auxiliary => "auxiliary",
            Scheme::Euler => "euler",
            Scheme::Heun => "heun",
            Scheme::Rk4 => "rk4",
        }
    }

    /// Whether the scheme keeps iterates on the simplex by construction.
    pub fn is_structure_preserving(&self) -> bool {
        matches!(self, Scheme::Rational | Scheme::Auxiliary)
    }

    fn baseline(&self) -> Option<BaselineKind> {
        match self {
            Scheme::Euler => Some(BaselineKind::Euler),
            Scheme::Heun => Some(BaselineKind::Heun),
            Scheme::Rk4 => Some(BaselineKind::Rk4),
            _ => None,
        }
    }

    /// Advances `x` by one step of size `h`.
    pub fn step<M: FitnessModel + ?Sized>(&self, x: &[f64], h: f64, model: &M) -> Result<Vec<f64>> {
        match self.baseline() {
            Some(kind) => baseline_step(kind, x, h, model),
            None => {
                // Iterates of the structured schemes are already normalised.
                let state = SimplexState::from_normalized(x.to_vec());
                match self {
                    Scheme::Rational => Ok(rational_step(&state, h, model)?.next.into_vec()),
                    _ => Ok(auxiliary_step(&state, h, model)?.into_vec()),
                }
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// The fixed-step grid on `[0, t_end]`: `t_n = n h`, with a shortened last
/// step when `t_end / h` is not an integer.
pub fn fixed_grid(h: f64, t_end: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("final time must be positive and finite, got {t_end}")));
    }
    if h > t_end * (1.0 + 1e-12) {
        return Err(Error::Config(format!("step size {h} exceeds the final time {t_end}")));
    }
    let ratio = t_end / h;
    let nearest = ratio.round();
    let full = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest as usize
    } else {
        ratio.floor() as usize
    };
    let mut grid: Vec<f64> = (0..=full).map(|n| n as f64 * h).collect();
    if t_end - full as f64 * h > 1e-12 * t_end {
        grid.push(t_end);
    } else {
        *grid.last_mut().expect("non-empty") = t_end;
    }
    Ok(grid)
}

/// Runs `scheme` with constant step `h` from `x0` to `t_end`.
pub fn integrate_fixed<M: FitnessModel + ?Sized>(
    scheme: Scheme,
    x0: &SimplexState,
    h: f64,
    t_end: f64,
    model: &M,
) -> Result<Trajectory> {
    match integrate_fixed_partial(scheme, x0, h, t_end, model)? {
        (traj, None) => Ok(traj),
        (_, Some(err)) => Err(err),
    }
}

/// Like [`integrate_fixed`], but a failing step ends the run instead of
/// discarding it: the trajectory up to the failure is returned together with
/// the error. Configuration errors are still reported as `Err`.
pub fn integrate_fixed_partial<M: FitnessModel + ?Sized>(
    scheme: Scheme,
    x0: &SimplexState,
    h: f64,
    t_end: f64,
    model: &M,
) -> Result<(Trajectory, Option<Error>)> {
    if x0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x0.dim(),
        });
    }
    let grid = fixed_grid(h, t_end)?;
    let mut traj = Trajectory::new(x0.to_vec());
    let mut x = x0.to_vec();
    for (n, w) in grid.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        match scheme.step(&x, dt, model) {
            Ok(next) => {
                x = next;
                traj.push(
                    StepAttempt {
                        t: t0,
                        h: dt,
                        eps: None,
                        accepted: true,
                        rejections: 0,
                        clipped: n + 2 == grid.len() && (dt - h).abs() > 1e-12 * h,
                    },
                    t1,
                    x.clone(),
                );
            }
            Err(e) => return Ok((traj, Some(e.at_step(n, t0)))),
        }
    }
    Ok((traj, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{nonlinear3, rps3, Nonlinear3, PayoffMatrixModel};
    use crate::simplex::project_check;

    #[test]
    fn corner_is_fixed_for_large_step() {
        let e = SimplexState::corner(3, 0).unwrap();
        let r = rational_step(&e, 7.3, &nonlinear3()).unwrap();
        assert_eq!(r.next, e);
        assert_eq!(r.half, e);
        let e2 = SimplexState::corner(3, 1).unwrap();
        assert_eq!(auxiliary_step(&e2, 10.0, &rps3()).unwrap(), e2);
    }

    #[test]
    fn internal_equilibrium_is_fixed() {
        let x = project_check(&Nonlinear3::X_STAR).unwrap();
        let r = rational_step(&x, 0.2, &nonlinear3()).unwrap();
        let a = auxiliary_step(&x, 0.2, &nonlinear3()).unwrap();
        for i in 0..3 {
            assert!((r.next[i] - x[i]).abs() <= 1e-13);
            assert!((a[i] - x[i]).abs() <= 1e-13);
        }
    }

    #[test]
    fn large_step_stays_on_simplex() {
        let d = 0.2;
        let x = project_check(&[1.0 / 3.0 + d, 1.0 / 3.0, 1.0 / 3.0 - d]).unwrap();
        let r = rational_step(&x, 0.5, &rps3()).unwrap();
        let total: f64 = r.next.iter().sum();
        assert!((total - 1.0).abs() <= 1e-15);
        assert!(r.next.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn second_stage_reweights_the_input_state() {
        // Hand-evaluated two-stage map on a 2x2 game, independent of reweight().
        let m = PayoffMatrixModel::from_rows("g", vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let x = [0.3, 0.7];
        let h = 0.4;
        let adv = |y: &[f64]| {
            let f = [y[0], 2.0 * y[1]];
            let mean = y[0] * f[0] + y[1] * f[1];
            [f[0] - mean, f[1] - mean]
        };
        let pade = |z: f64| (z * z + 6.0 * z + 12.0) / (z * z - 6.0 * z + 12.0);
        let a0 = adv(&x);
        let w: Vec<f64> = (0..2).map(|i| x[i] * pade(0.5 * h * a0[i])).collect();
        let half = [w[0] / (w[0] + w[1]), w[1] / (w[0] + w[1])];
        let a1 = adv(&half);
        let v: Vec<f64> = (0..2).map(|i| x[i] * pade(h * a1[i])).collect();
        let expected = [v[0] / (v[0] + v[1]), v[1] / (v[0] + v[1])];

        let r = rational_step(&project_check(&x).unwrap(), h, &m).unwrap();
        for i in 0..2 {
            assert!((r.half[i] - half[i]).abs() < 1e-15);
            assert!((r.next[i] - expected[i]).abs() < 1e-15);
            assert!((r.phi_half[i] - h * a1[i]).abs() < 1e-15);
        }
        // Reweighting the internal stage instead gives a different map.
        let u: Vec<f64> = (0..2).map(|i| half[i] * pade(h * a1[i])).collect();
        let wrong = u[0] / (u[0] + u[1]);
        assert!((wrong - expected[0]).abs() > 1e-3);
    }

    #[test]
    fn zero_components_stay_exactly_zero() {
        let x = project_check(&[0.0, 0.4, 0.6]).unwrap();
        let r = rational_step(&x, 3.0, &rps3()).unwrap();
        assert_eq!(r.next[0].to_bits(), 0);
        assert_eq!(auxiliary_step(&x, 3.0, &rps3()).unwrap()[0].to_bits(), 0);
    }

    #[test]
    fn invalid_step_sizes_are_rejected() {
        let x = SimplexState::barycenter(3).unwrap();
        for h in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(rational_step(&x, h, &rps3()), Err(Error::Config(_))));
        }
    }

    #[test]
    fn baselines_at_equilibria() {
        let e = [1.0, 0.0, 0.0];
        assert_eq!(baseline_step(BaselineKind::Euler, &e, 0.7, &nonlinear3()).unwrap(), e.to_vec());
        let b = [1.0 / 3.0; 3];
        assert_eq!(baseline_step(BaselineKind::Rk4, &b, 0.1, &rps3()).unwrap(), b.to_vec());
    }

    #[test]
    fn baseline_is_not_projected() {
        // A large Euler step overshoots the simplex.
        let x = [0.6, 0.3, 0.1];
        let y = baseline_step(BaselineKind::Euler, &x, 20.0, &rps3()).unwrap();
        assert!(y.iter().any(|v| *v < 0.0));
    }

    #[test]
    fn baseline_divergence() {
        let m = PayoffMatrixModel::from_rows("big", vec![vec![1e300, 0.0], vec![0.0, -1e300]]).unwrap();
        assert_eq!(baseline_step(BaselineKind::Euler, &[0.5, 0.5], 1e10, &m), Err(Error::Divergence));
        assert_eq!(baseline_step(BaselineKind::Euler, &[f64::NAN, 0.5], 1.0, &m), Err(Error::Divergence));
    }

    #[test]
    fn fixed_grid_shapes() {
        assert_eq!(fixed_grid(1.0, 1.0).unwrap(), vec![0.0, 1.0]);
        assert_eq!(fixed_grid(0.5, 100.0).unwrap().len(), 201);
        let g = fixed_grid(0.3, 1.0).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!((g[4] - g[3] - 0.1).abs() < 1e-12);
        assert!(fixed_grid(2.0, 1.0).is_err());
        assert!(fixed_grid(0.1, -1.0).is_err());
    }

    #[test]
    fn single_step_when_h_equals_t() {
        let x0 = project_check(&[0.6, 0.3, 0.1]).unwrap();
        let traj = integrate_fixed(Scheme::Rational, &x0, 2.5, 2.5, &rps3()).unwrap();
        assert_eq!(traj.times, vec![0.0, 2.5]);
        assert_eq!(traj.attempts.len(), 1);
        assert!(traj.attempts[0].eps.is_none());
    }

    #[test]
    fn fixed_run_reports_failure_with_time() {
        // Euler from a perturbed start eventually leaves the domain.
        let x0p = project_check(&[0.12, 0.78, 0.1]).unwrap();
        let (traj, err) = integrate_fixed_partial(Scheme::Euler, &x0p, 0.2, 35.0, &nonlinear3()).unwrap();
        let err = err.expect("euler leaves the domain");
        match &err {
            Error::AtStep { step, t, .. } => {
                assert_eq!(*step + 1, traj.states.len());
                assert_eq!(*t, *traj.times.last().unwrap());
            }
            other => panic!("{other:?}"),
        }
        assert!(err.is_numerical());
    }

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("rk45".parse::<Scheme>().is_err());
    }
}
