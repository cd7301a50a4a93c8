use std::process::ExitCode;

use cherry_cli::{run, Cli};
use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", report.human());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if cli.json {
                let failure = serde_json::json!({
                    "stage": cli.command.stage().name(),
                    "ok": false,
                    "exit_code": e.exit_code(),
                    "error": e.to_string(),
                });
                println!("{failure:#}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
