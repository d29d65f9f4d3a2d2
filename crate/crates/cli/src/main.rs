mod args;
mod output;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{config_to_argv, Args};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, values or configuration.
    Input(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

const EXIT_INPUT: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn parse() -> Result<Args, ExitCode> {
    let mut args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Err(ExitCode::SUCCESS);
        }
        Err(e) => {
            let _ = e.print();
            return Err(ExitCode::from(EXIT_INPUT));
        }
    };
    if let Some(path) = args.config.clone() {
        let fail = |msg: String| {
            eprintln!("error: --config: {msg}");
            ExitCode::from(EXIT_INPUT)
        };
        let text = std::fs::read_to_string(&path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
        let argv = config_to_argv(&text).map_err(fail)?;
        let from_file = Args::try_parse_from(argv).map_err(|e| fail(e.to_string()))?;
        args.merge_from(from_file);
    }
    run::apply_defaults(&mut args);
    Ok(args)
}

fn main() -> ExitCode {
    let args = match parse() {
        Ok(a) => a,
        Err(code) => return code,
    };
    if args.dump_config {
        print!("{}", args.dump());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run::run(&args) {
        Ok(run::Outcome::Done) => ExitCode::SUCCESS,
        Ok(run::Outcome::ValidationFailed) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
