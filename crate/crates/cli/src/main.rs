use std::process::ExitCode;

use platoon_cli::{parse_config, run, ConfigError};

fn main() -> ExitCode {
    let spec = match parse_config(std::env::args_os(), None) {
        Ok(spec) => spec,
        Err(ConfigError::Info(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprintln!("error: {err}");
            eprintln!("run `platoon --help` for usage");
            return ExitCode::from(2);
        }
    };
    match run(&spec) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
