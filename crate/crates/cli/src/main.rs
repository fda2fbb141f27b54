use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hardydiv_core::reports::{self, Command, RunConfig, TestFunction};

#[derive(Parser)]
#[command(name = "hardydiv", version, about = "Weighted Hardy inequalities and the divergence equation on a planar cusp")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Characterization constant, bounds and empirical constant of a Hardy pair.
    Hardy(Flags),
    /// Admissibility and closed-form bounds for weight families.
    Weights(Flags),
    /// Subdomain measures and star-shape certificates.
    Geometry(Flags),
    /// Decompose a zero-mean test function into subdomain pieces.
    Decompose(Flags),
    /// Solve div u = f and compare against the weighted bounds.
    Divsolve(Flags),
    /// Run the power and log-power weight sweeps.
    Reproduce(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON document with any of the options below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cusp exponent (default 2).
    #[arg(long)]
    gamma: Option<f64>,
    /// Integrability exponent (default 2).
    #[arg(long)]
    p: Option<f64>,
    /// Power-weight exponents, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "alpha")]
    beta: Option<Vec<f64>>,
    /// Log-power weight exponents, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    /// Truncation of the Hardy sequences (default 100000).
    #[arg(long)]
    n: Option<usize>,
    /// Number of subdomains covered by the decomposition (default 6).
    #[arg(long)]
    subdomains: Option<usize>,
    /// Cells across each dyadic block (default 64).
    #[arg(long)]
    res: Option<usize>,
    /// Relative tolerance of the iterative solves (default 1e-10).
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for every stochastic step (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Star-shape samples per subdomain (default 10000).
    #[arg(long)]
    samples: Option<usize>,
    /// Right-hand side: bump-dipole, poly or oscillatory (default poly).
    #[arg(long)]
    test_function: Option<String>,
    /// Restrict reproduce to corollary 1 or 2.
    #[arg(long)]
    corollary: Option<u8>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the sweep table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Command) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.command = command;
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $(if let Some(v) = self.$f { cfg.$g = v; })* };
        }
        set!(gamma => gamma, p => p, n => n, subdomains => subdomains, res => resolution, tol => tol,
             seed => seed, samples => samples);
        if let Some(b) = self.beta {
            cfg.beta = b;
            cfg.alpha.clear();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
            cfg.beta.clear();
        }
        if let Some(t) = self.test_function {
            cfg.test_function = t.parse::<TestFunction>()?;
        }
        if self.corollary.is_some() {
            cfg.corollary = self.corollary;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if self.table.is_some() {
            cfg.table = self.table;
        }
        Ok(cfg)
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Hardy(f) => (Command::Hardy, f),
        Cmd::Weights(f) => (Command::Weights, f),
        Cmd::Geometry(f) => (Command::Geometry, f),
        Cmd::Decompose(f) => (Command::Decompose, f),
        Cmd::Divsolve(f) => (Command::Divsolve, f),
        Cmd::Reproduce(f) => (Command::Reproduce, f),
    };
    let cfg = flags.into_config(command)?;
    let report = reports::run(&cfg)?;
    let mut json = report.to_json()?;
    json.push('\n');
    match &cfg.out {
        Some(path) => fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    if let (Some(path), Some(table)) = (&cfg.table, &report.table) {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        table.write_csv(file)?;
    }
    for c in report.checks.iter().filter(|c| c.status == reports::Status::Fail) {
        eprintln!("FAIL {}: measured {} > bound {}", c.name, c.measured, c.bound);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
