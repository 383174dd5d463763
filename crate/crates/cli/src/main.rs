use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twolevel_cli::config::{read_pairs, RunConfig};
use twolevel_cli::{cmd_run, cmd_scan_floquet, cmd_spectrum, cmd_validate, cmd_wkb_compare, CliError};

#[derive(Parser)]
#[command(name = "twolevel", version, about = "Driven two-level atom beyond the rotating-wave approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate, compute the spectrum and write solution.csv, spectrum.json, report.json.
    Run(Options),
    /// Exact, WKB and sawtooth Floquet exponents over --eps-range at fixed --alpha.
    ScanFloquet(Options),
    /// Write spectrum.json only.
    Spectrum(Options),
    /// Pointwise WKB errors against the exact solution.
    WkbCompare(Options),
    /// Check invariants and route agreement; exits with 3 on failure.
    Validate(Options),
}

/// Values given here override the config file.
#[derive(Args)]
struct Options {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    omega0: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    rabi: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// start:stop:step
    #[arg(long)]
    eps_range: Option<String>,
    /// Comma list of cf, quadrature, projection, wkb.
    #[arg(long)]
    routes: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    jmax: Option<String>,
    #[arg(long)]
    nodes_per_period: Option<String>,
}

impl Options {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut map = match &self.config {
            Some(path) => read_pairs(path)?,
            None => BTreeMap::new(),
        };
        let overrides = [
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("omega0", self.omega0),
            ("omega", self.omega),
            ("rabi", self.rabi),
            ("alpha", self.alpha),
            ("eps_range", self.eps_range),
            ("routes", self.routes),
            ("out", self.out),
            ("tol", self.tol),
            ("periods", self.periods),
            ("jmax", self.jmax),
            ("nodes_per_period", self.nodes_per_period),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        }
        RunConfig::from_pairs(&map)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (opts, run): (Options, fn(&RunConfig) -> twolevel_cli::Result<twolevel_cli::Artifacts>) = match cli.command {
        Command::Run(o) => (o, cmd_run),
        Command::ScanFloquet(o) => (o, cmd_scan_floquet),
        Command::Spectrum(o) => (o, cmd_spectrum),
        Command::WkbCompare(o) => (o, cmd_wkb_compare),
        Command::Validate(o) => (o, cmd_validate),
    };
    let result = opts.resolve().and_then(|cfg| run(&cfg));
    match result {
        Ok(a) => {
            for f in &a.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
