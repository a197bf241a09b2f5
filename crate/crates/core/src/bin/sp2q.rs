use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sp2q::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rendered = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut writes = rendered.extra;
    let result = match rendered.out {
        Some(path) => {
            writes.push((path, rendered.body));
            Ok(())
        }
        None => std::io::stdout().write_all(rendered.body.as_bytes()),
    };
    let result = result.and_then(|()| writes.into_iter().try_for_each(|(path, body)| std::fs::write(path, body)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
