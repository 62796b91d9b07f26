use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match qusc::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(qusc::cli::EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    qusc::cli::run(cli)
}
