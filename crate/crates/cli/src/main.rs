use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use flock_reid_cli::commands::{run, Cli};
use flock_reid_cli::{init_threads, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| run(cli));
    match result {
        Ok(stdout) => {
            print!("{stdout}");
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Verification(report) => {
                    println!("{report}");
                    eprintln!("error: verification failed");
                }
                CliError::Usage(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
