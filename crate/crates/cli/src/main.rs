//! `bdi`: winding statistics of chiral random matrix fields from the command line.

mod commands;
mod config;

use bdi_core::kernels::Kernel3Route;
use bdi_core::oracle::Scheme;
use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::{Done, Failure, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "bdi", version, about = "Winding-number statistics of chiral BDI random matrix fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral flow of one realization along the loop (flow.csv).
    Flow(Common),
    /// Winding-number histogram over independent realizations (winding.json).
    Winding(Common),
    /// Generating function Z_{k|k}(q, p) by Pfaffian assembly, optionally against MC (z.json).
    Z(ZArgs),
    /// Spherical-ensemble checks: real-eigenvalue count and characteristic polynomial (spherical.json).
    Spherical(Common),
    /// Full validation suite; exit status 0 iff every check passes (validate.json).
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

#[derive(Args, Debug)]
struct ZArgs {
    #[command(flatten)]
    common: Common,
    /// Denominator momenta, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    q: Option<Vec<f64>>,
    /// Numerator momenta, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p: Option<Vec<f64>>,
    /// Skip the Monte Carlo comparison.
    #[arg(long)]
    no_mc: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Truncated budget (about 10² samples per check).
    #[arg(long)]
    smoke: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RouteArg {
    Reduced,
    Alternative,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Mom,
    Mean,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(s) = self.samples {
            c.samples = s;
        }
        if let Some(g) = self.grid {
            c.grid = g;
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(r) = self.route {
            c.route = match r {
                RouteArg::Reduced => Kernel3Route::Reduced,
                RouteArg::Alternative => Kernel3Route::Alternative,
            };
        }
        if let Some(s) = self.scheme {
            c.scheme = match s {
                SchemeArg::Mom => Scheme::MedianOfMeans,
                SchemeArg::Mean => Scheme::Mean,
            };
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<Done, Failure> {
    match cli.command {
        Command::Flow(a) => commands::flow(&a.resolve()?),
        Command::Winding(a) => commands::winding(&a.resolve()?),
        Command::Spherical(a) => commands::spherical(&a.resolve()?),
        Command::Z(a) => {
            let mut c = a.common.resolve()?;
            if let Some(q) = a.q {
                c.q = q;
            }
            if let Some(p) = a.p {
                c.p = p;
            }
            c.mc &= !a.no_mc;
            commands::z(&c)
        }
        Command::Validate(a) => {
            let mut c = a.common.resolve()?;
            c.smoke |= a.smoke;
            commands::validate(&c)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(done) => {
            for line in &done.summary {
                println!("{line}");
            }
            for f in &done.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(if done.all_pass { EXIT_OK } else { EXIT_NUMERICAL } as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
