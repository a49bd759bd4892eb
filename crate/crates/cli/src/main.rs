use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use rdd_kit::error::{EXIT_OK, EXIT_USAGE};
use rdd_kit::{run, Cli};

/// Worker cap from `RDD_KIT_THREADS`; 0 or unset leaves the pool automatic.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RDD_KIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("RDD_KIT_THREADS must be a non-negative integer, got '{raw}'"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: UsageError: {message}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let mut err = std::io::stderr();
    let result = run(&cli, &mut out, &mut err);
    let flushed = out.flush();
    match result {
        Ok(()) => match flushed {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: IoError: {e}");
                ExitCode::from(EXIT_USAGE as u8)
            }
        },
        Err(e) => {
            if !matches!(e, rdd_kit::CliError::NotDerivable) {
                eprintln!("error: {}: {e}", e.name());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
