use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mwrelay::harness::{fmt_rate, parse_config, run_experiment, HarnessError, Mode, Results};

#[derive(Parser)]
#[command(name = "mwrelay", version, about = "MimbleWimble Dandelion++ relay simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stem-path infection Monte Carlo
    Paths(RunArgs),
    /// Full discrete-event network simulation
    Sim(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file of key=value lines
    #[arg(long)]
    config: PathBuf,
    /// Overrides master_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn run(mode: Mode, args: RunArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let mut spec = parse_config(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    // the subcommand decides, whatever the file says
    spec.mode = mode;
    if let Some(s) = args.seed {
        spec.base.master_seed = s;
    }
    if let Some(o) = args.out {
        spec.output = o;
    }

    let out = run_experiment(&spec).map_err(|e| match e {
        HarnessError::Config(c) => Failure::Config(c.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    match &out.results {
        Results::Paths(rows) => {
            for (job, r) in rows {
                let point = job.point.as_ref().map(|(k, v)| format!("{k}={v} ")).unwrap_or_default();
                println!("{point}replicate {}: infected {}", job.replicate, fmt_rate(r.fraction()));
            }
        }
        Results::Sim(rows) => {
            for (job, _, s) in rows {
                let point = job.point.as_ref().map(|(k, v)| format!("{k}={v} ")).unwrap_or_default();
                match &s.tx {
                    Some(t) => println!(
                        "{point}replicate {}: honest {} excluded {} attacked {}",
                        job.replicate,
                        t.honest,
                        fmt_rate(t.excluded_fraction),
                        fmt_rate(t.attacked_fraction)
                    ),
                    None => println!("{point}replicate {}: no transactions", job.replicate),
                }
            }
        }
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Paths(a) => (Mode::Paths, a),
        Command::Sim(a) => (Mode::Sim, a),
    };
    match run(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
