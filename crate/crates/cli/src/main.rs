use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rsma_core::runner::{list_scenarios, run, selftest, RunOptions};

/// Rate-splitting multiple access scenario runner
#[derive(Parser, Debug)]
#[command(name = "rsma", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario config (TOML or JSON) and write CSVs plus manifest.json
    Run {
        config: PathBuf,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: available parallelism)
        #[arg(long, env = "RSMA_JOBS")]
        jobs: Option<usize>,
        /// Base seed, overrides the config
        #[arg(long, env = "RSMA_SEED")]
        seed: Option<u64>,
    },
    /// Print the scenario catalog
    List,
    /// Run the quick invariant suite
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command.unwrap_or(Command::List) {
        Command::List => {
            print!("{}", list_scenarios());
            ExitCode::SUCCESS
        }
        Command::Selftest => {
            let checks = selftest();
            let mut ok = true;
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE }
        }
        Command::Run { config, out, jobs, seed } => match run(&config, &RunOptions { out_dir: out, jobs, seed }) {
            Ok(s) => {
                for f in &s.files {
                    println!("wrote {}", f.display());
                }
                eprintln!("config_hash={} wall_time_s={:.3}", s.config_hash, s.wall_time_s);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("rsma: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
