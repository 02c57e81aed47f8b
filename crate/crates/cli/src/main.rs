mod commands;
mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compcap::distill::SyndromeBits;

/// Exit codes.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "compcap", version, about = "Distillation and capacity toolkit for generalized dephasing channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity report for a channel spec file.
    Capacity(CapacityArgs),
    /// Monte Carlo run of the scrambling distillation protocol.
    Distill(DistillArgs),
    /// PRG-induced channel: capacity, entropy accounting and distinguisher battery.
    Separation(SeparationArgs),
    /// Cross-checks closed forms and the protocol against the dense oracle.
    OracleVerify(OracleArgs),
    /// One two-party protocol run over TCP.
    Locc {
        #[command(subcommand)]
        role: LoccCommand,
    },
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the JSON report here and print a summary; without it the report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Channel spec file (JSON).
    pub spec: PathBuf,
    /// Failure budget used to pick the syndrome length for support channels.
    #[arg(long, default_value_t = compcap::distill::DEFAULT_DELTA)]
    pub delta: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub n: usize,
    /// File with one hex-packed support element per line; `#` starts a comment.
    #[arg(long)]
    pub support_file: PathBuf,
    /// Syndrome bits: `auto` or an integer.
    #[arg(long, default_value = "auto")]
    pub m: SyndromeBits,
    #[arg(long, default_value_t = compcap::distill::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SeparationArgs {
    #[arg(long)]
    pub seed_len: usize,
    #[arg(long)]
    pub out_len: usize,
    /// One of toyexp, keyedperm, identity.
    #[arg(long, default_value = "toyexp")]
    pub owf: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = compcap::distill::DEFAULT_DELTA)]
    pub delta: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub cases: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
enum LoccCommand {
    /// Listen on `--addr` and play Bob for one run.
    Serve(LoccArgs),
    /// Connect to `--addr` and play Alice for one run.
    Connect(LoccArgs),
}

#[derive(Debug, Args)]
pub struct LoccArgs {
    /// host:port
    #[arg(long)]
    pub addr: String,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Invariant(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Data(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Capacity(a) => commands::capacity(&a),
        Command::Distill(a) => commands::distill(&a),
        Command::Separation(a) => commands::separation(&a),
        Command::OracleVerify(a) => oracle::verify(&a),
        Command::Locc { role } => match role {
            LoccCommand::Serve(a) => commands::locc(&a, compcap::locc::Role::Bob),
            LoccCommand::Connect(a) => commands::locc(&a, compcap::locc::Role::Alice),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(EXIT_INVARIANT)
        }
    }
}
