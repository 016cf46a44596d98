mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use run::{Globals, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let globals = Globals {
        workers: cli.workers,
        seed: cli.seed,
        out: cli.out,
    };
    match run::run(cli.command, globals) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
