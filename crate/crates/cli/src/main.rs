//! `lof`: level-of-fouling assessment from the command line.

mod args;
mod commands;
mod llm_cmd;
mod run_config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, LlmCommand};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            emit_error("usage", &first);
            return ExitCode::from(2);
        }
    };

    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Split(a) => commands::split(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Coverage(a) => commands::coverage(a),
        Command::Rate(a) => commands::rate(a),
        Command::Smooth(a) => commands::smooth(a),
        Command::Llm { command } => match command {
            LlmCommand::Run(a) => llm_cmd::run(a),
            LlmCommand::MockServe(a) => llm_cmd::mock_serve(a),
        },
        Command::Synth(a) => commands::synth(a),
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<lof_core::LofError>())
                .map(|l| l.kind())
                .unwrap_or("error");
            let msg = e
                .chain()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(": ");
            emit_error(kind, &msg);
            ExitCode::FAILURE
        }
    }
}

/// One JSON object on one stderr line.
fn emit_error(kind: &str, message: &str) {
    let line = json!({ "error": kind, "message": message });
    let _ = writeln!(std::io::stderr(), "{line}");
}
