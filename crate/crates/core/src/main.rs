use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levygame::harness::{self, Command, Overrides, SEED_ENV};

#[derive(Parser)]
#[command(name = "levygame", version, about = "Game-theoretic Brownian motion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (falls back to LEVYGAME_SEED, then a built-in default).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of Brownian paths per check.
    #[arg(long, global = true)]
    n_paths: Option<usize>,
    /// Also write tidy CSV for external plotting.
    #[arg(long, global = true)]
    emit_plot_data: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Soundness and frequency checks of the proof-strategy certificates.
    LemmaCertificates,
    /// Replication price against Monte Carlo and hedge shortfall per L.
    VerifySuperhedge,
    /// Mean and maximal-inequality checks of normalized library strategies.
    CoherenceMc,
    /// Write seeded Brownian paths as CSV.
    SamplePaths,
    /// Print the default config.
    PrintConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Cmd::LemmaCertificates => Command::LemmaCertificates,
        Cmd::VerifySuperhedge => Command::VerifySuperhedge,
        Cmd::CoherenceMc => Command::CoherenceMc,
        Cmd::SamplePaths => Command::SamplePaths,
        Cmd::PrintConfig => {
            println!("{}", harness::default_config_json());
            return ExitCode::SUCCESS;
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
        emit_plot_data: cli.emit_plot_data,
        n_paths: cli.n_paths,
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = match harness::load_config(cli.config.as_deref(), &overrides, env_seed.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("levygame: {e}");
            return ExitCode::from(2);
        }
    };
    match harness::run(cmd, &cfg) {
        Ok(o) => {
            println!("{} {}", if o.pass { "PASS" } else { "FAIL" }, o.report_path.display());
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("levygame: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
