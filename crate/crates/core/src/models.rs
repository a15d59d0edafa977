//! Built-in fitness landscapes and payoff-matrix games.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simplex::{eval_fitness, project_check, FitnessModel, SimplexState};

/// Linear fitness `f(x) = A x` for a square payoff matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrixModel {
    name: String,
    n: usize,
    // row-major
    entries: Vec<f64>,
    equilibria: Vec<SimplexState>,
}

impl PayoffMatrixModel {
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!(
                    "payoff row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Config(format!("payoff entry ({}, {}) is not finite", i + 1, j + 1)));
            }
            entries.extend(row);
        }
        Ok(PayoffMatrixModel {
            name: name.into(),
            n,
            entries,
            equilibria: Vec::new(),
        })
    }

    /// Parses the plain-text matrix format: the dimension `N` on the first
    /// line, then `N` rows of `N` whitespace-separated numbers. Blank lines
    /// are ignored.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected the dimension, found `{header}`"),
        })?;
        let mut rows = Vec::with_capacity(n);
        for (line, text) in lines {
            if rows.len() == n {
                return Err(Error::Parse {
                    line,
                    message: format!("more than {n} rows"),
                });
            }
            let row = text
                .split_whitespace()
                .map(|tok| {
                    let v: f64 = tok.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("`{tok}` is not a number"),
                    })?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::Parse {
                            line,
                            message: format!("`{tok}` is not finite"),
                        })
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != n {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {n} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        Self::from_rows(name, rows)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(format!("payoff:{}", path.display()), &text)
    }

    pub fn with_equilibria(mut self, equilibria: Vec<SimplexState>) -> Self {
        self.equilibria = equilibria;
        self
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

impl FitnessModel for PayoffMatrixModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .entries
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn known_equilibria(&self) -> Vec<SimplexState> {
        self.equilibria.clone()
    }
}

/// Zero-sum rock–paper–scissors: `A = [[0,−1,1],[1,0,−1],[−1,1,0]]`.
pub fn rps3() -> PayoffMatrixModel {
    PayoffMatrixModel::from_rows(
        "rps3",
        vec![
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ],
    )
    .expect("static matrix")
    .with_equilibria(vec![SimplexState::barycenter(3).expect("dim 3")])
}

/// Three-type nonlinear landscape with internal equilibria at
/// `[0.1, 0.8, 0.1]` and `[0.5, 0.3, 0.2]`. Defined on the closed simplex
/// only (square root and logarithm).
#[derive(Debug, Clone)]
pub struct Nonlinear3 {
    csc_minus_half: f64,
    log_7_over_15: f64,
}

pub fn nonlinear3() -> Nonlinear3 {
    Nonlinear3 {
        csc_minus_half: 1.0 / (-0.5f64).sin(),
        log_7_over_15: 7f64.ln() - 15f64.ln(),
    }
}

impl Nonlinear3 {
    pub const X_STAR: [f64; 3] = [0.1, 0.8, 0.1];
    pub const X_STAR_STAR: [f64; 3] = [0.5, 0.3, 0.2];
}

impl FitnessModel for Nonlinear3 {
    fn name(&self) -> &str {
        "nonlinear3"
    }

    fn dim(&self) -> usize {
        3
    }

    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = x.iter().position(|v| *v < 0.0) {
            return Err(Error::Domain {
                model: self.name().into(),
                reason: format!("component {i} is negative ({:e})", x[i]),
            });
        }
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let q = 10.0 * x3 - 2.0;
        let f1 = q
            * q
            * ((10.0 * x1 - 1.0).exp().powf(0.1)
                + (5.0 * PI / 8.0 * x2).sin()
                + (x3 * x3 - 1.0 / 100.0).cosh());
        let f2 = ((4.0 * x1 + 1.0) / 3.0).ln() * ((2.0 + x1 + x2 + x3) / self.log_7_over_15);
        let f3 = 3.0 * (3.0 / 10.0 - x2).sin() * self.csc_minus_half * (125.0 * x1 * x2 * x3).sqrt();
        Ok(vec![f1, f2, f3])
    }

    fn known_equilibria(&self) -> Vec<SimplexState> {
        vec![
            project_check(&Self::X_STAR).expect("on simplex"),
            project_check(&Self::X_STAR_STAR).expect("on simplex"),
        ]
    }
}

/// Six-type trigonometric landscape,
/// `f_i = 4 sin(6π x_i) + cos(5π x_k)` with `k = i+1` for the middle types
/// and `k = 1` for types 1 and 6.
///
/// With `cyclic` set, type 1 uses `x_2` instead of `x_1` (type 6 keeps `x_1`,
/// its cyclic successor).
#[derive(Debug, Clone, Default)]
pub struct Trig6 {
    pub cyclic: bool,
}

pub fn trig6() -> Trig6 {
    Trig6 { cyclic: false }
}

impl Trig6 {
    /// Default initial state as exact fractions.
    pub const X0_FRACTIONS: [(u64, u64); 6] = [
        (2774471, 231910617),
        (98983369, 1352447194),
        (97928969, 287827985),
        (12404831, 894275012),
        (14625008, 87442077),
        (38055861, 96713983),
    ];

    pub fn default_x0() -> SimplexState {
        let raw: Vec<f64> = Self::X0_FRACTIONS
            .iter()
            .map(|&(p, q)| p as f64 / q as f64)
            .collect();
        project_check(&raw).expect("fractions sum to one")
    }

    fn partner(&self, i: usize) -> usize {
        match i {
            0 if self.cyclic => 1,
            0 | 5 => 0,
            _ => i + 1,
        }
    }
}

impl FitnessModel for Trig6 {
    fn name(&self) -> &str {
        if self.cyclic {
            "trig6-cyclic"
        } else {
            "trig6"
        }
    }

    fn dim(&self) -> usize {
        6
    }

    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((0..6)
            .map(|i| 4.0 * (6.0 * PI * x[i]).sin() + (5.0 * PI * x[self.partner(i)]).cos())
            .collect())
    }
}

/// Five-type cyclic landscape with `tanh` saturations, scaled by `θ ≥ 0`.
#[derive(Debug, Clone)]
pub struct Tanh5 {
    theta: f64,
}

pub fn tanh5(theta: f64) -> Result<Tanh5> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::Config(format!("tanh5 requires a finite theta >= 0, got {theta}")));
    }
    Ok(Tanh5 { theta })
}

impl Tanh5 {
    pub const X0: [f64; 5] = [0.22, 0.19, 0.21, 0.18, 0.20];

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl FitnessModel for Tanh5 {
    fn name(&self) -> &str {
        "tanh5"
    }

    fn dim(&self) -> usize {
        5
    }

    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
        let t = self.theta;
        Ok(vec![
            t * (4.0 * (x2 - x5) + 8.0 * (3.0 * x4 - 9.0 / 10.0).tanh()),
            t * (4.0 * (x3 - x1) + 6.0 * (2.0 * x5 - 2.0 / 5.0).tanh()),
            t * (4.0 * (x4 - x2) + 7.0 * (4.0 * x1 - 1.0).tanh()),
            t * (4.0 * (x5 - x3) + 6.0 * (3.0 * x2 - 6.0 / 5.0).tanh()),
            t * (4.0 * (x1 - x4) + 5.0 * (5.0 * x3 - 7.0 / 4.0).tanh()),
        ])
    }
}

/// A model backed by a closure, for landscapes defined in code.
pub struct FnModel<F> {
    name: String,
    dim: usize,
    f: F,
    equilibria: Vec<SimplexState>,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, f: F) -> Self {
        FnModel {
            name: name.into(),
            dim,
            f,
            equilibria: Vec::new(),
        }
    }

    pub fn with_equilibria(mut self, equilibria: Vec<SimplexState>) -> Self {
        self.equilibria = equilibria;
        self
    }
}

impl<F> FitnessModel for FnModel<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn fitness(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(x))
    }

    fn known_equilibria(&self) -> Vec<SimplexState> {
        self.equilibria.clone()
    }
}

/// The named test landscapes, with their default initial states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinModel {
    Rps3,
    Nonlinear3,
    Trig6 { cyclic: bool },
    Tanh5 { theta: f64 },
}

impl BuiltinModel {
    pub fn build(&self) -> Result<Box<dyn FitnessModel>> {
        Ok(match *self {
            BuiltinModel::Rps3 => Box::new(rps3()),
            BuiltinModel::Nonlinear3 => Box::new(nonlinear3()),
            BuiltinModel::Trig6 { cyclic } => Box::new(Trig6 { cyclic }),
            BuiltinModel::Tanh5 { theta } => Box::new(tanh5(theta)?),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            BuiltinModel::Rps3 | BuiltinModel::Nonlinear3 => 3,
            BuiltinModel::Trig6 { .. } => 6,
            BuiltinModel::Tanh5 { .. } => 5,
        }
    }

    /// Default initial state. `rps3` starts at `[0.6, 0.3, 0.1]`, `nonlinear3`
    /// at its equilibrium `[0.1, 0.8, 0.1]`.
    pub fn default_x0(&self) -> SimplexState {
        let raw: &[f64] = match self {
            BuiltinModel::Rps3 => &[0.6, 0.3, 0.1],
            BuiltinModel::Nonlinear3 => &Nonlinear3::X_STAR,
            BuiltinModel::Trig6 { .. } => return Trig6::default_x0(),
            BuiltinModel::Tanh5 { .. } => &Tanh5::X0,
        };
        project_check(raw).expect("defaults lie on the simplex")
    }
}

impl FromStr for BuiltinModel {
    type Err = Error;

    /// Accepts `rps3`, `nonlinear3`, `trig6`, `trig6-cyclic`, `tanh5`
    /// (θ = 1) and `tanh5:<θ>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rps3" => Ok(BuiltinModel::Rps3),
            "nonlinear3" => Ok(BuiltinModel::Nonlinear3),
            "trig6" => Ok(BuiltinModel::Trig6 { cyclic: false }),
            "trig6-cyclic" => Ok(BuiltinModel::Trig6 { cyclic: true }),
            "tanh5" => Ok(BuiltinModel::Tanh5 { theta: 1.0 }),
            other => match other.strip_prefix("tanh5:") {
                Some(theta) => {
                    let theta: f64 = theta
                        .parse()
                        .map_err(|_| Error::Config(format!("bad theta `{theta}`")))?;
                    tanh5(theta)?;
                    Ok(BuiltinModel::Tanh5 { theta })
                }
                None => Err(Error::Config(format!("unknown model `{other}`"))),
            },
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinModel::Rps3 => write!(f, "rps3"),
            BuiltinModel::Nonlinear3 => write!(f, "nonlinear3"),
            BuiltinModel::Trig6 { cyclic: false } => write!(f, "trig6"),
            BuiltinModel::Trig6 { cyclic: true } => write!(f, "trig6-cyclic"),
            BuiltinModel::Tanh5 { theta } => write!(f, "tanh5:{theta}"),
        }
    }
}

/// True when `x` is a valid simplex point at which all fitness values agree
/// to within `tol`.
pub fn is_internal_equilibrium<M: FitnessModel + ?Sized>(x: &[f64], model: &M, tol: f64) -> bool {
    if project_check(x).is_err() {
        return false;
    }
    let Ok(f) = eval_fitness(model, x) else {
        return false;
    };
    let (lo, hi) = f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    hi - lo <= tol
}
