//! `strahler`: branch statistics, cumulant limits and rate functions of
//! uniformly random binary trees, as deterministic CSV or JSON.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "strahler", version, about, propagate_version = true)]
pub struct Cli {
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format (csv by default; json for `verify`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads; never changes any number in the output.
    #[arg(long, global = true, env = "STRAHLER_THREADS")]
    threads: Option<usize>,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rational,
    LogSpace,
}

impl From<Mode> for strahler::Arithmetic {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Rational => strahler::Arithmetic::Rational,
            Mode::LogSpace => strahler::Arithmetic::LogSpace,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Tree,
    Exact,
    Phi,
    Rate,
    Mc,
    All,
}

/// Either an explicit list of ξ values or an evenly spaced range.
#[derive(Clone, Debug, Args)]
pub struct XiGrid {
    /// Comma-separated ξ values; overrides the range flags.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Vec<f64>,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    xi_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    xi_max: f64,
    #[arg(long, default_value_t = 41)]
    xi_points: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every n-leaf tree with its branch counts.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Print the exact law of every S_r instead of the tree list.
        #[arg(long)]
        stats: bool,
    },
    /// Exact law of S_{r,n}.
    Pmf {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::LogSpace)]
        mode: Mode,
    },
    /// Exact log-MGF of S_{r,n} against its limit φ^{r−1}.
    Mgf {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        grid: XiGrid,
    },
    /// φ^r and its first two derivatives.
    Phi {
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        grid: XiGrid,
    },
    /// Rate function I_r and its approximations over [0, 2^{−r}].
    Rate {
        #[arg(long)]
        r: usize,
        /// Comma-separated y values; overrides --points.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// Evenly spaced points, endpoints included.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Endpoint and central expansions against the rate function.
    Asym {
        #[arg(long)]
        r: usize,
        /// Comma-separated distances η; default 2^{−r−j} for j = 2..=24.
        #[arg(long, value_delimiter = ',')]
        eta: Vec<f64>,
    },
    /// Draw uniform random trees.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Include the parenthesis encoding of each tree.
        #[arg(long)]
        trees: bool,
    },
    /// Central-limit experiment for S_{r+1,n}.
    Clt {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
    },
    /// Large-deviation tail experiment for S_{r+1,n}.
    Ld {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
        /// Comma-separated thresholds y.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<f64>,
    },
    /// Horton ratios S_{k+1,n}/S_{k,n} for k = 1..=r.
    Horton {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
    },
    /// Run the self-check suites; exits 1 when any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Reduce Monte Carlo trial counts.
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("strahler: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = commands::run(&cli.command, cli.seed);
    let (table, passed) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("strahler: {e:#}");
            return ExitCode::from(2);
        }
    };
    let default = match cli.command {
        Command::Verify { .. } => Format::Json,
        _ => Format::Csv,
    };
    let format = cli.format.unwrap_or(default);
    let written = (|| -> anyhow::Result<()> {
        let mut out: Box<dyn Write> = match &cli.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        table.write(format, &mut out)?;
        out.flush()?;
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("strahler: {e:#}");
        return ExitCode::from(2);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
