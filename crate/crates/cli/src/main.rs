use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use intervalkit_cli::config::Format;
use intervalkit_cli::suite::{render_table, run_suite, write_suite};
use intervalkit_cli::{run_config, summary, RunOptions};

#[derive(Parser)]
#[command(name = "intervalkit", version, about = "Numerical experiments on piecewise C1 interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis described by one config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every *.toml config in a directory and aggregate the verdicts.
    Suite {
        dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Configs run concurrently (defaults to the available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(clap::Args)]
struct Flags {
    /// Output directory, overriding [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled analyses, overriding analysis.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report formats, overriding [output] format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl Flags {
    fn options(&self) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            seed: self.seed,
            format: self.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
                FormatArg::Both => Format::Both,
            }),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, flags } => match run_config(&config, &flags.options()) {
            Ok(run) => {
                print!("{}", summary(&run));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Suite { dir, flags, workers } => {
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let opts = flags.options();
            let report = match run_suite(&dir, &opts, workers) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            print!("{}", render_table(&report));
            let out = flags.out.unwrap_or_else(|| PathBuf::from("intervalkit-out"));
            match write_suite(&report, &out) {
                Ok(paths) => {
                    for p in paths {
                        println!("wrote {}", p.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            if report.errors > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
