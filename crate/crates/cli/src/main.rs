//! Command-line front end: tabulation, verification suites and Monte-Carlo
//! sampling, each writing a self-describing artifact.

mod output;
mod tables;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{read_manifest, write_out, Report, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "gue-painleve", version, about = "GUE gap probabilities and Painleve transcendents")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Working precision for the determinant route (53 = double).
    #[arg(long, global = true, default_value_t = 53)]
    pub precision_bits: u32,
    /// Target tolerance of the ODE routes.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed for sampling commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Det,
    Ode,
    Toda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Etilde,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftQuantity {
    E,
    PmaxRatio,
    U,
    V,
    FAiry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Weyl,
    Backlund,
    Toda,
    Dpi,
    Identities,
    Duality,
    Coalescence,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleQuantity {
    Gap,
    Etilde,
    F,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub s_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub s_max: f64,
    #[arg(long)]
    pub step: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Tabulate E_N(0; (s, inf)).
    Gap {
        #[arg(long = "n")]
        n: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Method::Det)]
        method: Method,
    },
    /// Tabulate Etilde_N(s; a) or F_N(lambda; a).
    Moment {
        #[arg(long, value_enum)]
        kind: MomentKind,
        #[arg(long = "n")]
        n: usize,
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Method::Det)]
        method: Method,
    },
    /// Tabulate soft-edge quantities.
    Softedge {
        #[arg(long, value_enum)]
        quantity: SoftQuantity,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Reference point of ratio quantities (defaults to the grid end).
        #[arg(long, allow_hyphen_values = true)]
        s0: Option<f64>,
    },
    /// Run a verification suite; the exit code is the number of failures.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Monte-Carlo estimate of a GUE average.
    Sample {
        #[arg(long = "n")]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_enum)]
        quantity: SampleQuantity,
        #[arg(long, allow_hyphen_values = true)]
        point: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
    },
    /// Replay the manifest embedded in an artifact.
    Rerun { artifact: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gap { .. } => "gap",
            Command::Moment { .. } => "moment",
            Command::Softedge { .. } => "softedge",
            Command::Verify { .. } => "verify",
            Command::Sample { .. } => "sample",
            Command::Rerun { .. } => "rerun",
        }
    }
}

fn manifest(cli: &Cli, argv: &[String], start: Instant) -> Result<RunManifest> {
    let parameters = serde_json::to_value(&cli.command)?;
    let seed = matches!(cli.command, Command::Sample { .. } | Command::Verify { suite: Suite::Oracle });
    Ok(RunManifest {
        command: cli.command.name().to_string(),
        argv: argv.to_vec(),
        parameters,
        precision_bits: cli.global.precision_bits,
        tol: cli.global.tol,
        seed: seed.then_some(cli.global.seed),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn run(argv: Vec<String>) -> Result<u8> {
    let start = Instant::now();
    let cli = Cli::parse_from(&argv);
    let g = &cli.global;
    let out = g.out.as_deref();
    match &cli.command {
        Command::Rerun { artifact } => {
            let m = read_manifest(artifact)?;
            let mut replay = m.argv.clone();
            // Keep the replay's output where this invocation asked for it.
            if let Some(i) = replay.iter().position(|a| a == "--out") {
                replay.drain(i..(i + 2).min(replay.len()));
            }
            if let Some(p) = out {
                replay.push("--out".into());
                replay.push(p.display().to_string());
            }
            return run(replay);
        }
        Command::Gap { n, grid, method } => {
            let t = tables::gap(*n, grid, *method, g)?;
            write_out(out, &t.to_csv(&manifest(&cli, &argv, start)?)?)?;
        }
        Command::Moment { kind, n, a, grid, method } => {
            let t = tables::moment(*kind, *n, *a, grid, *method, g)?;
            write_out(out, &t.to_csv(&manifest(&cli, &argv, start)?)?)?;
        }
        Command::Softedge { quantity, a, grid, s0 } => {
            let t = tables::softedge(*quantity, *a, grid, *s0, g)?;
            write_out(out, &t.to_csv(&manifest(&cli, &argv, start)?)?)?;
        }
        Command::Sample { n, samples, quantity, point, a } => {
            let body = tables::sample(*n, *samples, g.seed, *quantity, *point, *a)?;
            let report = Report { manifest: manifest(&cli, &argv, start)?, body };
            write_out(out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        Command::Verify { suite } => {
            let body = verify::run_suite(*suite, g);
            let failures = body.failures;
            let report = Report { manifest: manifest(&cli, &argv, start)?, body };
            write_out(out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            return Ok(failures.min(255) as u8);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
