//! Points of the probability simplex, the fitness-model abstraction and the
//! two scalar building blocks every stepper shares: the rational map [`rho`]
//! and the relative fitness [`advantage`].

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Allowed deviation of the component sum from 1 when validating a state.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Dimension from which normalisation sums switch to compensated summation.
pub(crate) const COMPENSATED_SUM_DIM: usize = 64;

/// A point of the probability simplex: `dim >= 2` non-negative components
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexState(Vec<f64>);

impl SimplexState {
    /// Validates `components` and rescales them to unit sum.
    ///
    /// Equivalent to [`project_check`], taking ownership of the buffer.
    pub fn new(mut components: Vec<f64>) -> Result<Self> {
        validate(&components)?;
        let sum = sum(&components);
        for c in components.iter_mut() {
            // -0.0 passes the sign check; store it as +0.0.
            *c = if *c == 0.0 { 0.0 } else { *c / sum };
        }
        Ok(SimplexState(components))
    }

    /// The vertex `e^(k)` (zero-based `k`).
    pub fn corner(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if k >= dim {
            return Err(Error::Config(format!("corner index {k} out of range for dim {dim}")));
        }
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        Ok(SimplexState(v))
    }

    /// The point with all components equal to `1/dim`.
    pub fn barycenter(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(SimplexState(vec![1.0 / dim as f64; dim]))
    }

    /// Wraps a vector produced by a normalising update. The caller guarantees
    /// non-negativity and unit sum up to rounding.
    pub(crate) fn from_normalized(components: Vec<f64>) -> Self {
        debug_assert!(components.len() >= 2);
        debug_assert!(components.iter().all(|c| *c >= 0.0));
        SimplexState(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SimplexState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for SimplexState {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for SimplexState {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexState::new(v)
    }
}

impl fmt::Display for SimplexState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

fn validate(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::DimensionTooSmall(x.len()));
    }
    for (index, &value) in x.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFiniteComponent { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeComponent { index, value });
        }
    }
    let observed_sum = sum(x);
    if (observed_sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::MassDeviation { observed_sum });
    }
    Ok(())
}

/// Validates a raw vector as a simplex point and renormalises it to unit sum.
pub fn project_check(x: &[f64]) -> Result<SimplexState> {
    SimplexState::new(x.to_vec())
}

/// The rational map `(z² + 6z + 12) / (z² − 6z + 12)`, the [2/2] Padé
/// approximant of `exp(z)`.
///
/// Evaluated as `((z+3)² + 3) / ((z−3)² + 3)`: both factors are at least 3,
/// so the result is strictly positive and finite for every finite `z`. The
/// map is bounded in `[1/ρ*, ρ*]` with `ρ* = ρ(√12) ≈ 13.93` and tends to 1
/// as `|z| → ∞`.
#[inline]
pub fn rho(z: f64) -> f64 {
    if z.abs() > 1e100 {
        // (z ± 3)² overflows long before the quotient differs from 1.
        return 1.0;
    }
    let p = z + 3.0;
    let m = z - 3.0;
    (p * p + 3.0) / (m * m + 3.0)
}

/// A fitness landscape `x ↦ f(x)` over `dim` types.
///
/// `fitness` must be deterministic. It receives raw slices because the
/// baseline Runge–Kutta steppers evaluate it off the simplex; models with a
/// restricted domain report [`Error::Domain`].
pub trait FitnessModel: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Equilibria known in closed form, used by diagnostics.
    fn known_equilibria(&self) -> Vec<SimplexState> {
        Vec::new()
    }
}

impl<M: FitnessModel + ?Sized> FitnessModel for &M {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).fitness(x)
    }
    fn known_equilibria(&self) -> Vec<SimplexState> {
        (**self).known_equilibria()
    }
}

impl<M: FitnessModel + ?Sized> FitnessModel for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).fitness(x)
    }
    fn known_equilibria(&self) -> Vec<SimplexState> {
        (**self).known_equilibria()
    }
}

/// Evaluates `model` at `x`, checking the output length and finiteness.
pub(crate) fn eval_fitness<M: FitnessModel + ?Sized>(model: &M, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    let f = model.fitness(x)?;
    if f.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: f.len(),
        });
    }
    if let Some(index) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::ModelEvaluation {
            model: model.name().to_string(),
            index,
        });
    }
    Ok(f)
}

/// Per-type growth advantage `F_i(x) = f_i(x) − Σ_j x_j f_j(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageVector(Vec<f64>);

impl AdvantageVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `max_i |F_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for AdvantageVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn advantage<M: FitnessModel + ?Sized>(x: &SimplexState, model: &M) -> Result<AdvantageVector> {
    advantage_raw(x, model).map(AdvantageVector)
}

/// [`advantage`] on an unvalidated slice; the mean is weighted by `x` as is.
pub(crate) fn advantage_raw<M: FitnessModel + ?Sized>(x: &[f64], model: &M) -> Result<Vec<f64>> {
    let mut f = eval_fitness(model, x)?;
    let mean = dot(x, &f);
    for v in f.iter_mut() {
        *v -= mean;
    }
    Ok(f)
}

/// `Σ a_i b_i`, compensated for large dimensions.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < COMPENSATED_SUM_DIM {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    } else {
        neumaier(a.iter().zip(b).map(|(x, y)| x * y))
    }
}

pub(crate) fn sum(a: &[f64]) -> f64 {
    if a.len() < COMPENSATED_SUM_DIM {
        a.iter().sum()
    } else {
        neumaier(a.iter().copied())
    }
}

// Kahan–Babuška–Neumaier summation.
fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{nonlinear3, rps3};

    #[test]
    fn rho_closed_form_values() {
        assert_eq!(rho(0.0), 1.0);
        assert!((rho(1.0) - 19.0 / 7.0).abs() < 1e-15);
        // |ρ(z) − e^z| ≈ z⁵/720 = 1.39e-8 at z = 0.1
        assert!((rho(0.1) - 0.1f64.exp()).abs() < 2e-8);
        for z in [0.5, 2.0, 10.0] {
            assert!((rho(z) * rho(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_matches_unfactored_quotient() {
        for z in [-7.5, -1.0, -0.01, 0.3, 3.0, 42.0] {
            let direct = (z * z + 6.0 * z + 12.0) / (z * z - 6.0 * z + 12.0);
            assert!((rho(z) - direct).abs() <= 1e-14 * direct.abs());
        }
    }

    #[test]
    fn rho_stays_positive_and_bounded_for_extreme_arguments() {
        for z in [-1e300, -1e6, 1e6, 1e300, f64::MAX, f64::MIN] {
            let r = rho(z);
            assert!(r > 0.0, "rho({z}) = {r}");
        }
        let peak = rho(12f64.sqrt());
        assert!((peak - (24.0 + 6.0 * 12f64.sqrt()) / (24.0 - 6.0 * 12f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn project_check_accepts_and_renormalises() {
        let s = project_check(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(s.dim(), 3);
        let total: f64 = s.iter().sum();
        assert!((total - 1.0).abs() < 1e-16);
    }

    #[test]
    fn project_check_rejects_negative_component() {
        match project_check(&[0.2, -1e-9, 0.8]) {
            Err(Error::NegativeComponent { index, value }) => {
                assert_eq!(index, 1);
                assert_eq!(value, -1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn project_check_rejects_mass_deviation() {
        match project_check(&[0.5, 0.6]) {
            Err(Error::MassDeviation { observed_sum }) => assert!((observed_sum - 1.1).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn project_check_rejects_bad_shapes() {
        assert_eq!(project_check(&[1.0]), Err(Error::DimensionTooSmall(1)));
        assert!(matches!(
            project_check(&[f64::NAN, 1.0]),
            Err(Error::NonFiniteComponent { index: 0 })
        ));
        // within tolerance is accepted
        assert!(project_check(&[0.5, 0.5 + 5e-13]).is_ok());
    }

    #[test]
    fn negative_zero_is_stored_as_positive_zero() {
        let s = project_check(&[-0.0, 1.0]).unwrap();
        assert!(s[0].is_sign_positive());
    }

    #[test]
    fn advantage_vanishes_on_own_corner() {
        let model = rps3();
        for k in 0..3 {
            let e = SimplexState::corner(3, k).unwrap();
            let adv = advantage(&e, &model).unwrap();
            assert_eq!(adv[k], 0.0);
        }
        let e1 = SimplexState::corner(3, 0).unwrap();
        assert_eq!(advantage(&e1, &model).unwrap().values(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn advantage_zero_at_known_equilibria() {
        let x = project_check(&[0.1, 0.8, 0.1]).unwrap();
        let adv = advantage(&x, &nonlinear3()).unwrap();
        assert!(adv.sup_norm() <= 1e-12, "{adv:?}");

        let bary = SimplexState::barycenter(3).unwrap();
        let adv = advantage(&bary, &rps3()).unwrap();
        assert!(adv.sup_norm() == 0.0, "{adv:?}");
    }

    #[test]
    fn advantage_dimension_mismatch() {
        let x = SimplexState::barycenter(4).unwrap();
        assert!(matches!(
            advantage(&x, &rps3()),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        ));
    }

    #[test]
    fn non_finite_fitness_reports_index() {
        struct Bad;
        impl FitnessModel for Bad {
            fn name(&self) -> &str {
                "bad"
            }
            fn dim(&self) -> usize {
                3
            }
            fn fitness(&self, _x: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![0.0, f64::INFINITY, 1.0])
            }
        }
        let x = SimplexState::barycenter(3).unwrap();
        assert_eq!(
            advantage(&x, &Bad),
            Err(Error::ModelEvaluation {
                model: "bad".into(),
                index: 1
            })
        );
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let mut v = vec![0.0; 100];
        v[..4].copy_from_slice(&[1.0, 1e100, 1.0, -1e100]);
        assert_eq!(sum(&v), 2.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }
}
