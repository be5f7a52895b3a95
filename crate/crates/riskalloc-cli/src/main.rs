//! `riskalloc`: scenario-space risk measures, capital allocations, and
//! suitability verdicts from the command line.
//!
//! - exit codes: 0 ok/satisfied, 1 usage, 2 data/validation,
//!   3 suitability violated, 4 vacuous
//! - human tables go to stdout; `--json PATH` writes the machine-readable
//!   report, which doubles as a rerunnable `--config` file

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod commands;
mod config;
mod report;
mod specs;

/// Restores default SIGPIPE handling so piping into `head` ends the process
/// quietly instead of panicking on a closed stdout.
fn reset_sigpipe() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() {
    reset_sigpipe();
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    }
}
