use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "replikit", version, about = "Replicator dynamics experiments with CSV output")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write every step attempt.
    Simulate(SimulateArgs),
    /// Mean l2 error against a reference solution over dyadic step sizes.
    Converge(ConvergeArgs),
    /// Quotient-rule residuals of the rational scheme over dyadic step sizes.
    Residual(ResidualArgs),
    /// Distance to an equilibrium along fixed-step runs, one file per scheme.
    Equilibrium(EquilibriumArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Builtin model (rps3, nonlinear3, trig6, trig6-cyclic, tanh5) or
    /// `payoff:<file>` for a payoff matrix file. Each command has its own
    /// default.
    #[arg(long)]
    pub model: Option<String>,

    /// Scale of the tanh5 landscape.
    #[arg(long)]
    pub theta: Option<f64>,

    /// Initial state as comma-separated components, or `default`.
    #[arg(long, default_value = "default")]
    pub x0: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fixed,
    Adaptive,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value = "rational")]
    pub scheme: String,

    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    pub mode: Mode,

    /// Step size (fixed mode).
    #[arg(long)]
    pub h: Option<f64>,

    /// Uniform absolute and relative tolerance (adaptive mode).
    #[arg(long)]
    pub tol: Option<f64>,

    /// Absolute tolerance, overriding --tol.
    #[arg(long)]
    pub atol: Option<f64>,

    /// Relative tolerance, overriding --tol.
    #[arg(long)]
    pub rtol: Option<f64>,

    /// Initial step (adaptive mode); estimated from the data when absent.
    #[arg(long)]
    pub h0: Option<f64>,

    /// Use the classical (1/eps) proportional term in the step controller.
    #[arg(long)]
    pub classic_pi: bool,

    /// Final time.
    #[arg(long = "T", value_name = "T")]
    pub t_end: f64,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Largest step is 2^-h_max_exp.
    #[arg(long, default_value_t = 4)]
    pub h_max_exp: i32,

    /// Smallest step is 2^-h_min_exp (10 for converge, 12 for residual).
    #[arg(long)]
    pub h_min_exp: Option<i32>,

    /// Final time (10 for converge, 5 for residual).
    #[arg(long = "T", value_name = "T")]
    pub t_end: Option<f64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// A scheme name, or `both` for rational and auxiliary side by side.
    #[arg(long, default_value = "both")]
    pub scheme: String,

    #[command(flatten)]
    pub sweep: SweepArgs,

    /// Reference substeps start at 2^-oracle_exp.
    #[arg(long, default_value_t = 9)]
    pub oracle_exp: i32,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Equilibrium to measure against; the model's first known one when absent.
    #[arg(long)]
    pub x_star: Option<String>,

    #[arg(long, default_value_t = 0.2)]
    pub h: f64,

    #[arg(long = "T", value_name = "T", default_value_t = 35.0)]
    pub t_end: f64,

    #[arg(long, value_delimiter = ',', default_value = "rational,euler,heun,rk4")]
    pub schemes: Vec<String>,

    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
