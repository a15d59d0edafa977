#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use replikit::models::PayoffMatrixModel;
use replikit::SimplexState;

/// Uniform point of the open simplex (normalised exponential samples).
pub fn interior_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Random state with each component independently zeroed with probability
/// `p_zero`, keeping at least one positive component.
pub fn face_state(rng: &mut ChaCha8Rng, n: usize, p_zero: f64) -> Vec<f64> {
    let mut x = interior_state(rng, n);
    let keep = rng.gen_range(0..n);
    for (i, v) in x.iter_mut().enumerate() {
        if i != keep && rng.gen_bool(p_zero) {
            *v = 0.0;
        }
    }
    let total: f64 = x.iter().sum();
    x.into_iter().map(|v| v / total).collect()
}

pub fn random_payoff(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PayoffMatrixModel {
    let rows = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-scale..=scale)).collect())
        .collect();
    PayoffMatrixModel::from_rows("random", rows).unwrap()
}

/// Step size log-uniform in `[lo, hi]`.
pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Payoff matrix with the interior equilibrium `x_star`, built from dyadic
/// data so that `A x*` vanishes exactly in binary64.
///
/// `x*` has components `k_i / 2^10`; the entries are multiples of `2^-6`
/// shifted row-wise by `(A₀ x*)_i`, which every product and partial sum
/// represents exactly.
pub fn dyadic_equilibrium_game(rng: &mut ChaCha8Rng, n: usize) -> (PayoffMatrixModel, SimplexState) {
    let total = 1024u32;
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(1..total)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    while cuts.len() < n - 1 {
        let c = rng.gen_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
            cuts.sort_unstable();
        }
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(total);
    let x_star: Vec<f64> = bounds.windows(2).map(|w| (w[1] - w[0]) as f64 / total as f64).collect();

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-256i32..=256) as f64 / 64.0).collect();
            let shift: f64 = row.iter().zip(&x_star).map(|(a, b)| a * b).sum();
            row.into_iter().map(|a| a - shift).collect()
        })
        .collect();
    let model = PayoffMatrixModel::from_rows("dyadic", rows).unwrap();
    (model, SimplexState::new(x_star).unwrap())
}
