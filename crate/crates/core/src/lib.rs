//! Positivity- and mass-preserving time stepping for replicator dynamics
//! `ẋ_i = x_i (f_i(x) − Σ_j x_j f_j(x))` on the probability simplex.
//!
//! The main integrator reweights the current state by the rational factor
//! [`rho`], which keeps every component non-negative and the total mass at
//! one for any step size. An embedded first-order update drives a PI step
//! size controller, and the unprojected Euler, Heun and RK4 schemes are
//! provided for comparison.
//!
//! ```
//! use replikit::{integrate_fixed, models::rps3, Scheme, SimplexState};
//!
//! let x0 = SimplexState::new(vec![0.6, 0.3, 0.1]).unwrap();
//! let traj = integrate_fixed(Scheme::Rational, &x0, 0.5, 10.0, &rps3()).unwrap();
//! let x = traj.final_state();
//! assert!(x.iter().all(|v| *v > 0.0));
//! assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! ```

pub mod adaptive;
pub mod diagnostics;
pub mod error;
pub mod models;
pub mod simplex;
pub mod stepper;
pub mod trajectory;

pub use adaptive::{integrate_adaptive, ControllerConfig};
pub use error::{Error, Result};
pub use models::BuiltinModel;
pub use simplex::{advantage, project_check, rho, AdvantageVector, FitnessModel, SimplexState};
pub use stepper::{
    auxiliary_step, baseline_increment, baseline_step, fixed_grid, integrate_fixed, integrate_fixed_partial, rational_step,
    BaselineKind, Scheme, StepResult,
};
pub use trajectory::{StepAttempt, Trajectory};
