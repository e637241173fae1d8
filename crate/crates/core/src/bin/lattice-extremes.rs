use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_extremes::runner::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "lattice-extremes", version, about = "Extremal statistics of random lattices")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw lattices from mu or nu and write them as JSON lines.
    Sample(Flags),
    /// Family minima or hit counts against the Weibull/Poisson limits.
    Experiment(Flags),
    /// Siegel, second-moment and hitting-probability checks.
    Verify(Flags),
    /// Logarithm-law trend over a schedule of families.
    Loglaw(Flags),
    /// Closed-form and Monte Carlo volumes with an (a, b, c) fit.
    Volume(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (does not affect results).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, flags) = match cli.command {
        Cmd::Sample(f) => (Command::Sample, f),
        Cmd::Experiment(f) => (Command::Experiment, f),
        Cmd::Verify(f) => (Command::Verify, f),
        Cmd::Loglaw(f) => (Command::Loglaw, f),
        Cmd::Volume(f) => (Command::Volume, f),
    };
    let opts = RunOptions {
        config: flags.config,
        out: flags.out,
        seed: flags.seed,
        threads: flags.threads,
    };
    match run(command, &opts) {
        Ok(report) => {
            println!("{}", report.summary.trim_end());
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
