use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pellclass::asymptotics::MomentMode;

use pellclass_cli::commands::{parse_complex, run, Command};
use pellclass_cli::config::PartialConfig;
use pellclass_cli::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "pellclass", version, about = "Class numbers of real quadratic fields with small fundamental unit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Sub,
}

/// Settings shared by every subcommand; flags override `--config`, which overrides defaults.
#[derive(Args)]
struct GlobalArgs {
    /// Upper bound on the discriminant.
    #[arg(long, global = true)]
    x: Option<f64>,
    /// Unit exponent: eps_d <= d^(1/2 + alpha).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Prime cutoff for Euler products.
    #[arg(long, global = true)]
    primes: Option<u64>,
    /// Relative tolerance of L(1, chi_d).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Cache directory (default: $PELLCLASS_CACHE_DIR or ./cache).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// TOML file with any of the settings above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    L,
    H,
}

#[derive(Subcommand)]
enum Sub {
    /// Enumerate the family, compute class numbers and write the cache.
    Enumerate {
        /// Also count cycles of reduced forms and require agreement.
        #[arg(long)]
        cycles: bool,
    },
    /// Frequencies of chi_d(p) against the model probabilities.
    Charfreq {
        #[arg(long, default_value_t = 100)]
        pmax: u64,
    },
    /// Empirical and theoretical complex moments.
    Moments {
        /// Comma-separated exponents, e.g. 1,2,-1,1+1i.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,2,-1,1+1i", value_parser = parse_complex)]
        z: Vec<Complex64>,
        #[arg(long, value_enum, default_value = "l")]
        mode: ModeArg,
    },
    /// Tail of the class number distribution, optionally with Monte Carlo.
    Tails {
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1,1.25,1.5,1.75,2,2.25")]
        tau: Vec<f64>,
        /// Monte Carlo sample count (0 to skip).
        #[arg(long, default_value_t = 0)]
        mc_samples: u64,
    },
    /// Cumulative counts of discriminants with h(d) <= H.
    Counts {
        #[arg(long, value_delimiter = ',', default_value = "10,30,100")]
        h: Vec<u64>,
    },
    /// Check the cache and the oracle criteria; `--full` runs every criterion.
    Verify {
        #[arg(long)]
        full: bool,
    },
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::Enumerate { cycles } => Command::Enumerate { cycles },
            Sub::Charfreq { pmax } => Command::Charfreq { p_max: pmax },
            Sub::Moments { z, mode } => Command::Moments {
                zs: z,
                mode: match mode {
                    ModeArg::L => MomentMode::LMoment,
                    ModeArg::H => MomentMode::HMoment,
                },
            },
            Sub::Tails { tau, mc_samples } => Command::Tails { taus: tau, mc_samples },
            Sub::Counts { h } => Command::Counts { h_grid: h },
            Sub::Verify { full } => Command::Verify { full },
        }
    }
}

fn main_inner(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => PartialConfig::from_file(p)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        x: g.x,
        alpha: g.alpha,
        seed: g.seed,
        primes: g.primes,
        tol: g.tol,
        out: g.out,
        workers: g.workers,
        cache: g.cache,
    };
    let cfg = flags.over(file).resolve()?;
    println!("{}", cfg.header());
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(cfg.out.join("run_config.json"), cfg.header() + "\n")?;
    let report = run(&cli.command.into(), &cfg)?;
    for l in &report.lines {
        eprintln!("{l}");
    }
    for o in &report.outcomes {
        println!("{}", o.line());
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            report_code(&e)
        }
    }
}

fn report_code(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
