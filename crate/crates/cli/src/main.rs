use clap::{Parser, Subcommand};
use geogame_cli::{load_config, run_scenario, CliError, EXIT_CHECK_FAILED};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "geogame", version, about = "Environmental-asset game experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and emit its report files.
    Run {
        /// Path to the TOML scenario config.
        config: PathBuf,
        /// Exit with code 3 if any acceptance tolerance is breached.
        #[arg(long)]
        check: bool,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate {
        /// Path to the TOML scenario config.
        config: PathBuf,
    },
}

/// GEOGAME_THREADS caps the worker count; results never depend on it.
fn init_threads() {
    if let Ok(value) = std::env::var("GEOGAME_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid GEOGAME_THREADS={value}"),
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(loaded) => {
                println!(
                    "config ok: scenario={} n_agents={} rho={} seed={}",
                    loaded.config.scenario.name(),
                    loaded.params.n_agents(),
                    loaded.params.rho(),
                    loaded.config.seed
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run { config, check, out } => {
            let loaded = match load_config(&config) {
                Ok(loaded) => loaded,
                Err(e) => return fail(&e),
            };
            let out_dir = out
                .or_else(|| loaded.config.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            if let Err(e) = std::fs::create_dir_all(&out_dir) {
                return fail(&CliError::Io(format!(
                    "cannot create {}: {e}",
                    out_dir.display()
                )));
            }
            match run_scenario(&loaded, &out_dir) {
                Ok(outcome) => {
                    for file in &outcome.files {
                        println!("wrote {}", file.display());
                    }
                    if outcome.breaches.is_empty() {
                        println!("scenario {}: ok", loaded.config.scenario.name());
                        ExitCode::SUCCESS
                    } else {
                        for breach in &outcome.breaches {
                            eprintln!("tolerance breach: {breach}");
                        }
                        if check {
                            ExitCode::from(EXIT_CHECK_FAILED as u8)
                        } else {
                            println!(
                                "scenario {}: completed with {} breach(es)",
                                loaded.config.scenario.name(),
                                outcome.breaches.len()
                            );
                            ExitCode::SUCCESS
                        }
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
