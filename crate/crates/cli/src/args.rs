use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "meanforce",
    version,
    about = "Mean force Gibbs states of systems coupled to bosonic baths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Second-order weak-coupling state at one temperature (JSON)
    Weak(Common),
    /// Ultrastrong-coupling state for a single bath (JSON)
    Ultrastrong(Common),
    /// Ultrastrong-coupling state for two independent baths (JSON)
    Ultrastrong2(Common),
    /// List model specs, or emit a closed-form state when a model is given
    Models(Common),
    /// Exact diagonalization of a discretized bath (JSON, or CSV with --grid)
    Oracle(OracleArgs),
    /// Temperature sweep of weak and ultrastrong quantities (CSV)
    Sweep(SweepArgs),
    /// V-system coherence sweep at fixed defaults (CSV, JSON summary on stderr)
    Fig1(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    #[value(alias = "spin_boson")]
    SpinBoson,
    #[value(alias = "v_system")]
    VSystem,
    #[value(alias = "two_qubit")]
    TwoQubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    #[value(alias = "ultrastrong_derived")]
    UltrastrongDerived,
    #[value(alias = "ultrastrong_conjectured")]
    UltrastrongConjectured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Binomial,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpacingArg {
    Log,
    Linear,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// TOML run configuration; flags override its values
    #[arg(long, short)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub omega_q: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda_s: Option<f64>,

    #[arg(long, conflicts_with = "temperature")]
    pub beta: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,

    /// Reorganization energy of the Ohmic-exponential bath
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub tau_c: Option<f64>,

    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
    #[arg(long)]
    pub gap_tol: Option<f64>,

    /// Output file; stdout when absent
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n_modes: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub dimension_cap: Option<usize>,
    /// Convergence grid as `MODESxCUTOFF` pairs, e.g. `2x4,3x5`
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<SpacingArg>,
}
