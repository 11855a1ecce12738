mod args;
mod commands;

use std::process::ExitCode;

use args::{Command, Parsed};
use commands::Outcome;

const EXIT_ERROR: u8 = 1;
const EXIT_DEGENERATE: u8 = 2;

fn fail(kind: &str, message: &str) -> ExitCode {
    let body = serde_json::json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{body}");
    ExitCode::from(EXIT_ERROR)
}

fn main() -> ExitCode {
    let cli = match args::parse(std::env::args().collect()) {
        Ok(Parsed::Cli(c)) => c,
        Ok(Parsed::Display(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(msg) => return fail("UsageError", &msg),
    };
    let result = match &cli.command {
        Command::Run(a) => commands::cmd_run(a),
        Command::Decompose(a) => commands::cmd_decompose(a),
        Command::Bench(a) => commands::cmd_bench(a),
        Command::Generate(a) => commands::cmd_generate(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Degenerate) => ExitCode::from(EXIT_DEGENERATE),
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
