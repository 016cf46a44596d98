use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coupled_crn::{CouplingMethod, Engine};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "coupled-crn", version, about = "Coupled simulation and finite-difference sensitivities for reaction networks")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism. Never changes any output byte.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Master seed; path i always uses the streams derived from (seed, i).
    #[arg(long, global = true, env = "COUPLED_CRN_SEED")]
    pub seed: Option<u64>,

    /// Output CSV; stdout when omitted. The run manifest goes next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate independent trajectories.
    Simulate(SimulateArgs),
    /// Simulate coupled pairs at theta + eps and theta.
    Couple(CoupleArgs),
    /// Finite-difference sensitivity estimates.
    Estimate(EstimateArgs),
    /// Variance and gap moments over a decreasing perturbation grid.
    Scan(ScanArgs),
    /// Empirical exit probabilities next to the analytic bound.
    ExitTime(ExitTimeArgs),
    /// Print the growth and coupling-ratio report of a model.
    Check(CheckArgs),
    /// Closed-form exit-time distributions.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Couple(_) => "couple",
            Command::Estimate(_) => "estimate",
            Command::Scan(_) => "scan",
            Command::ExitTime(_) => "exit-time",
            Command::Check(_) => "check",
            Command::Oracle(OracleCommand::PureBirth(_)) => "oracle pure-birth",
            Command::Oracle(OracleCommand::Hypoexp(_)) => "oracle hypoexp",
            Command::Replay(_) => "replay",
        }
    }
}

/// Model source plus overrides of its nominal values.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Model JSON file or bundled model name (example1, viral, circadian, explosive, birth_death, pure_birth).
    #[arg(long)]
    pub model: String,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Overrides {
    /// Nominal parameters, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "theta_file")]
    pub theta: Option<Vec<f64>>,

    /// File holding the nominal parameters as a JSON array or separated numbers.
    #[arg(long)]
    pub theta_file: Option<PathBuf>,

    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long)]
    pub t_end: f64,

    #[arg(long, default_value_t = 1)]
    pub paths: u64,

    /// Defaults to rtc for time-independent networks and ppp otherwise.
    #[arg(long, value_parser = parse_engine)]
    pub engine: Option<Engine>,

    /// Stop a path once its total count reaches this value.
    #[arg(long)]
    pub exit_radius: Option<u64>,

    #[arg(long)]
    pub max_events: Option<u64>,

    /// Write terminal states only.
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Perturbation as "index:delta" pairs with zero-based parameter indices, e.g. "1:0.1".
    #[arg(long)]
    pub eps: String,

    #[arg(long, value_parser = parse_method, default_value = "stacked")]
    pub method: CouplingMethod,

    #[arg(long)]
    pub t_end: f64,

    #[arg(long, default_value_t = 1)]
    pub paths: u64,

    /// Exit radius recorded on both legs; coupled paths always run to the horizon.
    #[arg(long)]
    pub exit_radius: Option<u64>,

    #[arg(long)]
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Finite-difference step as "index:delta"; exactly one parameter.
    #[arg(long)]
    pub eps: String,

    #[arg(long = "method", value_parser = parse_method, value_delimiter = ',', default_value = "stacked")]
    pub methods: Vec<CouplingMethod>,

    /// Observable: "total", a species name, or weights such as "M:1,P:0.5".
    #[arg(long, default_value = "total")]
    pub f: String,

    /// Gap moments E||X^(theta+eps)(t) - X^theta(t)||_1^r under the stacked coupling.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,

    #[arg(long)]
    pub t_end: f64,

    #[arg(long, default_value_t = 1000)]
    pub paths: u64,

    #[arg(long)]
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Direction as "index:weight" pairs; grid point h uses eps = h * direction.
    #[arg(long)]
    pub direction: String,

    /// Positive, strictly decreasing step sizes.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    pub grid: Vec<f64>,

    #[arg(long = "method", value_parser = parse_method, value_delimiter = ',', default_value = "stacked")]
    pub methods: Vec<CouplingMethod>,

    #[arg(long, default_value = "total")]
    pub f: String,

    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,

    #[arg(long)]
    pub t_end: f64,

    /// Paths per grid point.
    #[arg(long, default_value_t = 1000)]
    pub paths: u64,

    #[arg(long)]
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExitTimeArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, value_delimiter = ',', required = true)]
    pub m_grid: Vec<u64>,

    /// Horizon.
    #[arg(long)]
    pub t: f64,

    #[arg(long, default_value_t = 10_000)]
    pub paths: u64,

    #[arg(long)]
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    /// Model JSON file or bundled model name.
    pub model: String,

    #[command(flatten)]
    pub overrides: Overrides,

    /// Perturbation for the coupling-ratio bound; defaults to 1% of every parameter.
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleCommand {
    /// P(tau_M <= t) for X -> 2X at rate kappa from X(0) = 1.
    PureBirth(PureBirthArgs),
    /// CDF of a sum of independent exponentials with distinct rates.
    Hypoexp(HypoexpArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PureBirthArgs {
    #[arg(long)]
    pub kappa: f64,

    #[arg(long = "M")]
    pub m: u64,

    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HypoexpArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub rates: Vec<f64>,

    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    match s {
        "rtc" => Ok(Engine::Rtc),
        "ppp" => Ok(Engine::Ppp),
        _ => Err(format!("unknown engine '{s}' (expected rtc or ppp)")),
    }
}

fn parse_method(s: &str) -> Result<CouplingMethod, String> {
    CouplingMethod::ALL
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| format!("unknown coupling '{s}' (expected stacked, split, crp or independent)"))
}
