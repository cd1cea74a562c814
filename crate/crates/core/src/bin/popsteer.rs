use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use popsteer::config::load_config;
use popsteer::runner::{run, Command};

#[derive(Parser)]
#[command(name = "popsteer", version, about = "Steer learning populations coupled to exogenous dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the closed loop for every configured rule.
    Simulate(Common),
    /// Evaluate the peak-infection bound on a grid of gains.
    Sweep(Common),
    /// Solve for the target state and report the design bounds.
    Design(Common),
    /// Certify rule properties and exogenous-system invariants.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` in the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace a config entry, e.g. `mechanism.k1=2` or `rules.0.rate=5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Design(a) => (Command::Design, a),
        Cmd::Verify(a) => (Command::Verify, a),
    };
    let result = load_config(&args.config, &args.overrides, args.seed).and_then(|cfg| {
        let out = args
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let built = cfg.build()?;
        run(cmd, &built, &out)
    });
    match result {
        Ok(report) => {
            for (k, v) in &report.entries {
                println!("{k}={v}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
