//! `bosewalk`: simulate disordered few-boson walks, generate PNG training
//! corpora, verify samples against exact re-simulation and export
//! disorder-averaged grids.
//!
//! Every subcommand accepts `--config <file.toml>`; flags override file
//! values. Each run writes the fully merged configuration to
//! `run_config.toml` in its output directory, and `bosewalk run --config
//! run_config.toml` repeats it.
//!
//! Exit codes: 0 success, 1 threshold failure, 2 configuration error,
//! 3 runtime (I/O or numerical) failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bosewalk::codec::Layout;
use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "bosewalk", version, about = "Disordered Bose-Hubbard quantum walks")]
struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one disorder realization and dump its observables.
    Simulate(SimulateArgs),
    /// Generate a PNG corpus with a manifest.
    GenDataset(GenArgs),
    /// Verify a corpus or sample directory against exact re-simulation.
    Verify(VerifyArgs),
    /// Disorder-average correlations, densities and |U| over an ensemble.
    Average(AverageArgs),
    /// Repeat the command recorded in the --config file.
    Run,
}

#[derive(Args, Debug, Default)]
struct Physics {
    /// Number of lattice sites.
    #[arg(long)]
    sites: Option<usize>,
    /// Number of bosons.
    #[arg(long)]
    particles: Option<usize>,
    /// Hopping amplitude (must be non-positive).
    #[arg(long, allow_negative_numbers = true)]
    hopping: Option<f64>,
    /// On-site interaction strength.
    #[arg(long)]
    gamma: Option<f64>,
    /// Disorder bound: energies are uniform in [0, eta).
    #[arg(long)]
    eta: Option<f64>,
    /// Propagation time.
    #[arg(long)]
    time: Option<f64>,
    /// Starting site of each boson, zero-based and comma-separated.
    #[arg(long, value_delimiter = ',')]
    starts: Option<Vec<usize>>,
    /// Master seed for disorder sampling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct Runtime {
    /// Worker threads (0 = all cores).
    #[arg(long, env = "BOSEWALK_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    physics: Physics,
    #[command(flatten)]
    runtime: Runtime,
    /// Realization index within the seeded stream.
    #[arg(long)]
    index: Option<u64>,
    /// Read the on-site energies from this file instead of sampling.
    #[arg(long)]
    energies: Option<PathBuf>,
    /// Also dump the propagator.
    #[arg(long)]
    unitary: bool,
    /// Compare against the closed-form interaction-free result.
    #[arg(long)]
    check_oracle: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    physics: Physics,
    #[command(flatten)]
    runtime: Runtime,
    /// Number of images.
    #[arg(long)]
    count: Option<u64>,
    /// Image layout: correlation-v1 or unitary-v1.
    #[arg(long)]
    layout: Option<Layout>,
    /// File name prefix.
    #[arg(long)]
    corpus: Option<String>,
    /// Integer pixel replication factor.
    #[arg(long)]
    upscale: Option<usize>,
    /// Square output size (power of two); overrides upscale.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Corpus or sample directory.
    input: Option<PathBuf>,
    #[command(flatten)]
    runtime: Runtime,
    /// Correlation samples pass when KL is below this.
    #[arg(long)]
    max_kl: Option<f64>,
    /// Unitary samples pass when fidelity is above this.
    #[arg(long)]
    min_fidelity: Option<f64>,
    /// Fraction of samples that must pass for the batch to pass.
    #[arg(long)]
    min_pass_fraction: Option<f64>,
    /// Bins of the disorder histogram.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args, Debug)]
struct AverageArgs {
    #[command(flatten)]
    physics: Physics,
    #[command(flatten)]
    runtime: Runtime,
    /// Number of disorder realizations.
    #[arg(long, alias = "count")]
    realizations: Option<u64>,
    /// Sweep over these interaction strengths.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Sweep over these disorder bounds.
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    /// Also average |U|.
    #[arg(long)]
    unitary: bool,
}

fn flag(set: bool) -> Option<bool> {
    set.then_some(true)
}

impl Physics {
    fn apply(self, c: &mut RunConfig) {
        c.sites = self.sites;
        c.particles = self.particles;
        c.hopping = self.hopping;
        c.gamma = self.gamma;
        c.eta = self.eta;
        c.time = self.time;
        c.starts = self.starts;
        c.seed = self.seed;
    }
}

impl Runtime {
    fn apply(self, c: &mut RunConfig) {
        c.workers = self.workers;
        c.out = self.out;
    }
}

/// The flags of one invocation as a sparse config.
fn flags_of(command: Command) -> RunConfig {
    let mut c = RunConfig::default();
    match command {
        Command::Simulate(a) => {
            c.command = Some("simulate".into());
            a.physics.apply(&mut c);
            a.runtime.apply(&mut c);
            c.index = a.index;
            c.energies = a.energies;
            c.unitary = flag(a.unitary);
            c.check_oracle = flag(a.check_oracle);
        }
        Command::GenDataset(a) => {
            c.command = Some("gen-dataset".into());
            a.physics.apply(&mut c);
            a.runtime.apply(&mut c);
            c.count = a.count;
            c.layout = a.layout;
            c.corpus = a.corpus;
            c.upscale = a.upscale;
            c.resolution = a.resolution;
        }
        Command::Verify(a) => {
            c.command = Some("verify".into());
            a.runtime.apply(&mut c);
            c.input = a.input;
            c.max_kl = a.max_kl;
            c.min_fidelity = a.min_fidelity;
            c.min_pass_fraction = a.min_pass_fraction;
            c.bins = a.bins;
        }
        Command::Average(a) => {
            c.command = Some("average".into());
            a.physics.apply(&mut c);
            a.runtime.apply(&mut c);
            c.realizations = a.realizations;
            c.gammas = a.gammas;
            c.etas = a.etas;
            c.unitary = flag(a.unitary);
        }
        Command::Run => {}
    }
    c
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let replay = matches!(cli.command, Command::Run);
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if replay => return Err(Failure::Config("run needs --config".into())),
        None => RunConfig::default(),
    };
    let flags = flags_of(cli.command);
    if !replay {
        if let (Some(recorded), Some(invoked)) = (&file.command, &flags.command) {
            if recorded != invoked {
                return Err(Failure::Config(format!(
                    "config file is for {recorded:?}, not {invoked:?}"
                )));
            }
        }
    }
    let config = file.overlay(flags);
    commands::replay(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("bosewalk: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
