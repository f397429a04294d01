use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use trilayer::cli::{cmd_field, cmd_propagator, cmd_scan, cmd_verify, CliError, Mode, RunConfig};
use trilayer::exec::with_threads;
use trilayer::verify::Hooks;

/// Wave propagation through a three-layer medium.
#[derive(Parser)]
#[command(name = "trilayer", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Configuration file, or any output CSV to rerun it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the randomized verification suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Transmission and reflection probabilities over a frequency sweep.
    Scan,
    /// Space-time field of the incident packet on an (x, t) grid.
    Field,
    /// Propagator trace over a sweep of time differences.
    Propagator,
    /// Run the invariant suites and print a JSON report.
    Verify,
}

fn run(args: &Args) -> Result<(), CliError> {
    let (mut config, warnings) = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => (RunConfig::default(), Vec::new()),
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let mode = match args.command {
        Command::Scan => Mode::Scan,
        Command::Field => Mode::Field,
        Command::Propagator => Mode::Propagator,
        Command::Verify => Mode::Verify,
    };
    if args.config.is_some() && config.mode != mode {
        eprintln!(
            "warning: config mode '{}' overridden by subcommand '{}'",
            config.mode.name(),
            mode.name()
        );
    }
    config.mode = mode;
    if let Some(seed) = args.seed {
        config.verify.seed = seed;
    }
    with_threads(args.threads, || {
        let written = match mode {
            Mode::Scan => cmd_scan(&config, &args.out)?,
            Mode::Field => cmd_field(&config, &args.out)?,
            Mode::Propagator => cmd_propagator(&config, &args.out)?,
            Mode::Verify => {
                let report = cmd_verify(&config, Some(&args.out), &Hooks::default())?;
                let json = serde_json::to_string_pretty(&report.to_json()).expect("serializable");
                println!("{json}");
                if !report.passed() {
                    let failed: Vec<_> = report
                        .suites
                        .iter()
                        .filter(|s| !s.passed())
                        .map(|s| format!("{} (worst {} at {})", s.name, s.worst, s.worst_input))
                        .collect();
                    return Err(CliError::Verification(failed.join("; ")));
                }
                return Ok(());
            }
        };
        eprintln!("wrote {}", written.data.display());
        if let Some(s) = written.script {
            eprintln!("wrote {}", s.display());
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
