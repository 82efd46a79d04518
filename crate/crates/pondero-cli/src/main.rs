//! `pondero` — cavity-optomechanics noise workbench.
//!
//! Thin binary shell: clap parses, `commands::run` does the work, and
//! errors map to stable exit codes (2 validation, 3 non-convergence,
//! 4 I/O; clap's own usage errors also exit 2).

mod cli;
mod commands;
mod config;
mod csvio;
mod error;
mod paths;
mod summary;

use clap::Parser;

fn main() {
    // Die quietly when a downstream reader closes early (`pondero ... | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let parsed = cli::Cli::parse();
    if let Err(err) = commands::run(parsed) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
