use clap::Parser;
use lll_cli::{execute, Cli, CliError};
use std::io::Write;
use std::process::ExitCode;

fn write_report(cli: &Cli, report: &lll_cli::Report) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Failed(e.to_string()))?;
    match &cli.output {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(std::io::stdout(), "{text}")?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (report, verdict) = execute(cli, std::env::var("LLL_SEED").ok())?;
    write_report(cli, &report)?;
    verdict.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lll: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
