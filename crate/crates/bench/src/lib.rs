//! Shared inputs for the stepper benchmarks.

use replikit::models::{rps3, tanh5, PayoffMatrixModel, Tanh5};
use replikit::SimplexState;

pub fn rps_start() -> (PayoffMatrixModel, SimplexState) {
    let x0 = SimplexState::new(vec![0.6, 0.3, 0.1]).expect("valid start");
    (rps3(), x0)
}

pub fn tanh_start(theta: f64) -> (Tanh5, SimplexState) {
    let model = tanh5(theta).expect("valid theta");
    (model, SimplexState::new(Tanh5::X0.to_vec()).expect("valid start"))
}

/// A random-looking interior state of dimension `n`, deterministic in `n`.
pub fn spread_state(n: usize) -> SimplexState {
    let raw: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let total: f64 = raw.iter().sum();
    SimplexState::new(raw.into_iter().map(|v| v / total).collect()).expect("valid state")
}
