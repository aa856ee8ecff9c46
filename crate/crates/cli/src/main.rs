use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ngoa_cli::{execute, report, Mode, Scenario};

/// Optical access network test bed.
#[derive(Parser)]
#[command(name = "ngoa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in the mode it declares.
    Run(RunArgs),
    /// Compute the equivalent circuit rate of a scenario's architecture.
    Ecr(RunArgs),
    /// Verify a result bundle and write its summary and plot data.
    Report { bundle: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per arm.
    #[arg(long)]
    replications: Option<u32>,
    /// Bundle directory. Defaults to `$NGOA_OUT/<scenario name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a scenario value, e.g. `--set architecture.onu_count=16`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads; one per core by default.
    #[arg(long)]
    jobs: Option<usize>,
}

fn default_out(scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    let root = std::env::var_os("NGOA_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"));
    root.join(stem)
}

fn run(args: RunArgs, force_ecr: bool) -> anyhow::Result<()> {
    if let Some(j) = args.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring worker threads")?;
    }
    let mut overrides = args.set.clone();
    if force_ecr {
        overrides.push("run.mode=\"ecr\"".into());
    }
    if let Some(s) = args.seed {
        overrides.push(format!("run.root_seed={s}"));
    }
    // The replication count applies to the arm count of the chosen mode.
    let mode = Scenario::read(&args.scenario, &overrides)?.run.mode;
    if let Some(n) = args.replications {
        let key = match mode {
            Mode::Simulate => "run.replications",
            Mode::Ecr => "ecr.replications",
        };
        overrides.push(format!("{key}={n}"));
    }
    let sc = Scenario::load(&args.scenario, &overrides)?;
    let out = args.out.or_else(|| sc.run.output_dir.clone()).unwrap_or_else(|| default_out(&args.scenario));
    let dir = execute(&sc, mode, &out)?;
    println!("bundle written to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a, false),
        Command::Ecr(a) => run(a, true),
        Command::Report { bundle } => report(&bundle).map(|s| print!("{s}")).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
