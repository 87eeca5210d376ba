use clap::Parser;

use driftbench_cli::{dispatch, exit_code_for, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version requests print and exit cleanly; real argument
            // trouble is a validation failure.
            let _ = err.print();
            std::process::exit(if err.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(error) = dispatch(&cli) {
        eprintln!("error: {error}");
        std::process::exit(exit_code_for(&error));
    }
}
