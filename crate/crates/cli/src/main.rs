use std::process::ExitCode;

use clap::Parser;
use wsnsim_cli::{dispatch, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match dispatch(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("wsnsim: error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
