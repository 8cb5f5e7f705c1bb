use std::process::ExitCode;

use kswave::{parse_config, run, CliError};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(CliError::Args(e)) => {
            // --help and --version come through here as well.
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report.metrics).expect("metrics serialize")
            );
            for f in &report.files {
                eprintln!("wrote {}", cfg.out.join(f).display());
            }
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
