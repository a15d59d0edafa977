/// One attempted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAttempt {
    /// Start time of the attempt.
    pub t: f64,
    pub h: f64,
    /// Normalised error estimate; `None` for fixed-step runs.
    pub eps: Option<f64>,
    pub accepted: bool,
    /// Consecutive rejections preceding this attempt.
    pub rejections: u32,
    /// The step was shortened to land on the final time.
    pub clipped: bool,
}

/// A discrete solution: accepted grid points plus every attempt made.
///
/// `states[n]` approximates the solution at `times[n]`. States are raw
/// vectors because the unprojected baselines may leave the simplex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub attempts: Vec<StepAttempt>,
}

impl Trajectory {
    pub fn new(x0: Vec<f64>) -> Self {
        Trajectory {
            times: vec![0.0],
            states: vec![x0],
            attempts: Vec::new(),
        }
    }

    /// Records an accepted attempt ending at `t` in state `x`.
    pub fn push(&mut self, attempt: StepAttempt, t: f64, x: Vec<f64>) {
        debug_assert!(attempt.accepted);
        self.attempts.push(attempt);
        self.times.push(t);
        self.states.push(x);
    }

    pub fn push_rejected(&mut self, attempt: StepAttempt) {
        debug_assert!(!attempt.accepted);
        self.attempts.push(attempt);
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has an initial point")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has an initial point")
    }

    pub fn accepted(&self) -> impl Iterator<Item = &StepAttempt> {
        self.attempts.iter().filter(|a| a.accepted)
    }

    pub fn rejections(&self) -> usize {
        self.attempts.iter().filter(|a| !a.accepted).count()
    }

    /// Step sizes `t_{n+1} − t_n` of the accepted steps.
    pub fn step_sizes(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
