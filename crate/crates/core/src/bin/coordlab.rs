use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coordlab::cli::{
    cmd_check, cmd_oracle, cmd_region, cmd_simulate, CommandReport, ExitStatus, ProblemSpec, RunOptions,
};
use coordlab::Result;

/// Rate-distortion-coordination regions, code simulation and oracles.
#[derive(Parser)]
#[command(name = "coordlab", version)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "COORDLAB_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `monte_carlo.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the rate region over the delta grid.
    Region(Common),
    /// Simulate random codes over the blocklength and rate grid.
    Simulate(Common),
    /// Search codes exhaustively and compare them with the frontier.
    Oracle(Common),
    /// Run the randomized property battery.
    Check {
        /// Also check this instance.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<CommandReport> {
    let with = |c: &Common, f: fn(&ProblemSpec, &RunOptions) -> Result<CommandReport>| {
        let spec = ProblemSpec::load(&c.spec)?;
        f(&spec, &RunOptions { out: c.out.clone(), seed: c.seed })
    };
    match &cli.command {
        Command::Region(c) => with(c, cmd_region),
        Command::Simulate(c) => with(c, cmd_simulate),
        Command::Oracle(c) => with(c, cmd_oracle),
        Command::Check { spec, seed } => {
            let spec = spec.as_deref().map(ProblemSpec::load).transpose()?;
            cmd_check(spec.as_ref(), *seed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("coordlab: {e}");
            return ExitCode::from(ExitStatus::Internal.code() as u8);
        }
    }
    let status = match run(cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            report.status
        }
        Err(e) => {
            eprintln!("coordlab: {e}");
            ExitStatus::for_error(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}
