use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "srswitch",
    version,
    about = "Electron transfer through site networks with two competing sinks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the six-site multimer as a model file.
    Multimer(MultimerArgs),
    /// Complex spectrum of the effective Hamiltonian.
    Spectrum(SpectrumArgs),
    /// Subradiant average width along kappa_L and its transition peaks.
    Transitions(TransitionsArgs),
    /// Time evolution of one network under one dynamical law.
    Evolve(EvolveArgs),
    /// Efficiencies along kappa_L at fixed q.
    Sweep1d(Sweep1dArgs),
    /// Efficiencies on a (kappa_L, kappa_R) grid.
    Sweep2d(Sweep2dArgs),
    /// Widths, participation ratios and sink overlaps along kappa_L.
    ScanSpectral(ScanArgs),
    /// Check a model file.
    Validate {
        /// Model file (JSON).
        model: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct MultimerArgs {
    /// Coupling along the chain arms (cm^-1).
    #[arg(long, default_value_t = 100.0)]
    pub omega: f64,
    /// Coupling inside the special pair (cm^-1).
    #[arg(long, default_value_t = 200.0)]
    pub omega_sp: f64,
    /// Left sink strength (cm^-1); overrides --kappa-l.
    #[arg(long)]
    pub gamma_l: Option<f64>,
    /// Right sink strength (cm^-1); overrides --q.
    #[arg(long)]
    pub gamma_r: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub kappa_l: f64,
    #[arg(long, default_value_t = 100.0)]
    pub q: f64,
    /// Bath to embed, "T_K,ER_cm1,wc_cm1".
    #[arg(long)]
    pub bath: Option<String>,
    /// Output model file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the network comes from and how its sinks are set.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model file; the multimer built from --omega/--omega-sp when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 100.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 200.0)]
    pub omega_sp: f64,
}

/// Sink strengths as kappa_L and q, converted with the model's coupling scale.
#[derive(Args, Debug, Clone)]
pub struct SinkArgs {
    /// kappa_L = gamma_L/(2 Omega); the model's value (or 1) when absent.
    #[arg(long)]
    pub kappa_l: Option<f64>,
    /// q = kappa_L/kappa_R; the model's value (or 100) when absent.
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct AxisArgs {
    #[arg(long)]
    pub kappa_min: Option<f64>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct LawArgs {
    #[arg(long, default_value = "vonneumann")]
    pub law: String,
    /// Bath "T_K,ER_cm1,wc_cm1"; falls back to the model's bath, then 300,35,150.
    #[arg(long)]
    pub bath: Option<String>,
    /// Dephasing energy for classical-semiclassical (cm^-1); defaults to the bath broadening.
    #[arg(long)]
    pub gamma_d: Option<f64>,
    /// pure, mixed or site:k.
    #[arg(long, default_value = "pure")]
    pub initial: String,
    #[arg(long, default_value_t = 20.0)]
    pub horizon_ps: f64,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sinks: SinkArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TransitionsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub q: f64,
    #[command(flatten)]
    pub axis: AxisArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegratorArg {
    Exponential,
    Rk4,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sinks: SinkArgs,
    #[command(flatten)]
    pub law: LawArgs,
    /// Integrator step (rk4) or sampling interval (exponential), ps.
    #[arg(long)]
    pub dt_ps: Option<f64>,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Exponential)]
    pub integrator: IntegratorArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Sweep1dArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long, default_value_t = 100.0)]
    pub q: f64,
    #[command(flatten)]
    pub axis: AxisArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Sweep2dArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub law: LawArgs,
    #[command(flatten)]
    pub axis: AxisArgs,
    /// Also write iso-ratio curves eta_L/eta_R = r and 1/r as JSON.
    #[arg(long)]
    pub contours: Option<PathBuf>,
    #[arg(long, default_value_t = 9.0)]
    pub contour_ratio: f64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub q: f64,
    #[command(flatten)]
    pub axis: AxisArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
