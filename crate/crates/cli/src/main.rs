use std::process::ExitCode;

use clap::Parser;
use lmg_cli::{run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if let Some(e) = &outcome.failure {
                eprintln!("lmg: {e}");
            }
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("lmg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
