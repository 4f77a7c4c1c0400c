//! `ghcert`: certified Gromov-Hausdorff bounds, packing/covering numbers,
//! Bishop dimension fits and foliation separation from the command line.
//!
//! Every command is a pure function of its input files, flags and
//! `--seed`; reports are canonical JSON (sorted keys, shortest round-trip
//! floats). Exit codes: 0 success, 1 domain or input error (JSON on
//! stderr), 2 usage error.

mod commands;
mod io;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ghcert", version, about = "Certified metric geometry of finite samples")]
struct Cli {
    /// Worker threads (reports do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a metric space or foliated sample.
    Validate(ValidateArgs),
    /// Generate a foliated sample.
    #[command(subcommand)]
    Sample(SampleCommand),
    /// Greedy ε-net.
    Net(EpsArgs),
    /// Packing number (pairwise ≥ 2ε).
    Pack(SolveArgs),
    /// Covering number by open ε-balls.
    Cover(SolveArgs),
    /// Certified lower and upper bounds on the GH distance.
    Gh(GhArgs),
    /// Bishop-measure dimension fit and packing-number checks.
    Bishop(BishopArgs),
    /// Metric leaf space of a foliated sample.
    Leafspace(LeafspaceArgs),
    /// Whether B is broader than A (Cap(δ,B) ≥ Cap(δ,A) on a grid).
    Broader(BroaderArgs),
    /// Class-membership conditions of a foliated sample.
    Classcheck(ClasscheckArgs),
    /// Comparability of a second metric with the sample's metric.
    CompareMetrics(CompareArgs),
    /// Packing/covering separation of two foliated samples.
    Separate(SeparateArgs),
    /// Run the embedded invariant corpus.
    Selftest(SelftestArgs),
}

#[derive(Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum SampleCommand {
    /// Flat torus T^n foliated by coordinate subtori T^p.
    Torus(TorusArgs),
    /// Hopf fibration of S^3 by great circles.
    Hopf(HopfArgs),
}

#[derive(Args, Serialize)]
pub struct TorusArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub leaves: usize,
    #[arg(long)]
    pub per_leaf: usize,
    /// Comma-separated circle lengths, one per coordinate.
    #[arg(long)]
    pub scale: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct HopfArgs {
    #[arg(long)]
    pub fibers: usize,
    #[arg(long)]
    pub per_fiber: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct EpsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveChoice {
    /// Exact when small enough, greedy otherwise.
    Auto,
    Exact,
    Greedy,
}

#[derive(Args, Serialize)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = SolveChoice::Auto)]
    pub mode: SolveChoice,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct GhArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// `start:step:stop` or comma list; default 24 geometric values up to
    /// the larger diameter.
    #[arg(long)]
    pub eps_grid: Option<String>,
    #[arg(long, default_value = "4,8,16")]
    pub net_sizes: String,
    #[arg(long, default_value_t = 20_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// CSV of (epsilon, cov, cap).
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct BishopArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub eta_min: Option<f64>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    #[arg(long, default_value_t = 12)]
    pub steps: usize,
    #[arg(long, default_value_t = 200)]
    pub centers: usize,
    /// Radii for the packing-number checks.
    #[arg(long)]
    pub r_grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// CSV of (center, eta, mu).
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Chain,
    Hausdorff,
}

#[derive(Args, Serialize)]
pub struct LeafspaceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeChoice::Chain)]
    pub mode: ModeChoice,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Also write the leaf space as a plain metric-space JSON file.
    #[arg(long)]
    #[serde(skip)]
    pub space_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct BroaderArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub delta_grid: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ClasscheckArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub d: f64,
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct CompareArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Second metric on the same points (metric space or sample).
    #[arg(long)]
    pub alt: PathBuf,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SeparateArgs {
    #[arg(long)]
    pub m: PathBuf,
    #[arg(long)]
    pub mprime: PathBuf,
    #[arg(long)]
    pub r_grid: String,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub no_normalize: bool,
    /// Proceed when the broader relation is not established.
    #[arg(long)]
    pub allow_unbroader: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// CSV of (r, A, B, A/B).
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Validate(a) => commands::validate(a),
        Command::Sample(SampleCommand::Torus(a)) => commands::sample_torus(a),
        Command::Sample(SampleCommand::Hopf(a)) => commands::sample_hopf(a),
        Command::Net(a) => commands::net(a),
        Command::Pack(a) => commands::pack(a),
        Command::Cover(a) => commands::cover(a),
        Command::Gh(a) => commands::gh(a),
        Command::Bishop(a) => commands::bishop(a),
        Command::Leafspace(a) => commands::leafspace(a),
        Command::Broader(a) => commands::broader(a),
        Command::Classcheck(a) => commands::classcheck(a),
        Command::CompareMetrics(a) => commands::compare_metrics(a),
        Command::Separate(a) => commands::separate(a),
        Command::Selftest(a) => selftest::run(a),
    }
}

fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let kind = match err.downcast_ref::<ghcert_core::Error>() {
        Some(e) => e.kind(),
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None if err.downcast_ref::<commands::Failed>().is_some() => "check-failed",
        None => "input",
    };
    serde_json::json!({ "error": { "kind": kind, "message": format!("{err:#}") } })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(1)
        }
    }
}
