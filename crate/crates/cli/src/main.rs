use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixvol::estimator::VolumeMode;
use mixvol_cli::commands::{self, EstimateArgs, SubdivideArgs};
use mixvol_cli::{CliError, CliResult, InstanceFile};
use num_bigint::BigInt;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "mixvol", version, about = "Mixed volumes of lattice polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized estimate of one mixed-volume coefficient.
    Estimate(EstimateCmd),
    /// Exact coefficients by interpolating the volume polynomial.
    Exact(ExactCmd),
    /// Capacity of the volume polynomial at alpha.
    Capacity(CapacityCmd),
    /// Capacity plus every coefficient bound and its pass flag.
    Bounds(CapacityCmd),
    /// Enumerate and verify the mixed subdivision for random shifts.
    Subdivide(SubdivideCmd),
    /// Write a random full-dimensional instance.
    Gen(GenCmd),
}

#[derive(Args)]
struct Io {
    /// Instance JSON file.
    instance: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Args)]
struct EstimateCmd {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 32)]
    d2: u32,
    #[arg(long, default_value_t = 20)]
    scale_bits: u32,
    /// Override the sample count N.
    #[arg(long)]
    samples: Option<u64>,
    /// Override the scaling vector with positive integers.
    #[arg(long, value_delimiter = ',', value_parser = parse_bigint)]
    lambda: Option<Vec<BigInt>>,
    #[arg(long, env = "MIXVOL_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct ExactCmd {
    #[command(flatten)]
    io: Io,
    /// Omit to report every coefficient.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<u32>>,
}

#[derive(Args)]
struct CapacityCmd {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<u32>>,
    /// Target bound on the log-gap to the capacity.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct SubdivideCmd {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_delimiter = ',', value_parser = parse_bigint)]
    lambda: Option<Vec<BigInt>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid resolution bits of the shift vectors.
    #[arg(long, default_value_t = 32)]
    d2: u32,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = mixvol::subdivision::DEFAULT_TUPLE_CAP)]
    tuple_cap: u128,
    #[arg(long, default_value_t = mixvol::subdivision::AUDIT_POINTS)]
    audit_points: usize,
}

#[derive(Args)]
struct GenCmd {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m0: usize,
    #[arg(long = "L")]
    l: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_bigint(s: &str) -> Result<BigInt, String> {
    s.trim().parse::<BigInt>().map_err(|e| format!("{s:?}: {e}"))
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() }),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Usage(e.to_string()))
                }
                _ => Ok(()),
            }
        }
    }
}

fn report(value: Value, out: Option<&PathBuf>) -> CliResult<()> {
    emit(&serde_json::to_string_pretty(&value).expect("report serializes"), out)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Estimate(c) => {
            let file = InstanceFile::load(&c.io.instance)?;
            let args = EstimateArgs {
                alpha: c.alpha,
                eps: c.eps,
                delta: c.delta,
                seed: c.seed,
                mode: match c.mode {
                    Mode::Exact => VolumeMode::Exact,
                    Mode::Sampled => VolumeMode::Sampled,
                },
                d2: c.d2,
                scale_bits: c.scale_bits,
                samples: c.samples,
                threads: c.threads,
                lambda: c.lambda,
            };
            report(commands::estimate(&file, &args)?, c.io.out.as_ref())
        }
        Command::Exact(c) => {
            let file = InstanceFile::load(&c.io.instance)?;
            report(commands::exact(&file, c.alpha.as_deref())?, c.io.out.as_ref())
        }
        Command::Capacity(c) => {
            let file = InstanceFile::load(&c.io.instance)?;
            report(commands::capacity(&file, c.alpha.as_deref(), c.tol)?, c.io.out.as_ref())
        }
        Command::Bounds(c) => {
            let file = InstanceFile::load(&c.io.instance)?;
            report(commands::bounds(&file, c.alpha.as_deref(), c.tol)?, c.io.out.as_ref())
        }
        Command::Subdivide(c) => {
            let file = InstanceFile::load(&c.io.instance)?;
            let args = SubdivideArgs {
                lambda: c.lambda,
                seed: c.seed,
                d2: c.d2,
                svg: c.svg,
                tuple_cap: c.tuple_cap,
                audit_points: c.audit_points,
            };
            report(commands::subdivide(&file, &args)?, c.io.out.as_ref())
        }
        Command::Gen(c) => {
            let file = commands::gen(c.n, c.k, c.m0, c.l, c.seed)?;
            emit(&file.to_json(), c.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let err = CliError::Usage(msg.lines().next().unwrap_or("bad arguments").trim().to_string());
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
