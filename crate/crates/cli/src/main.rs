mod args;
mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use config::UsageError;

fn error_kind(err: &anyhow::Error) -> &'static str {
    if err.downcast_ref::<UsageError>().is_some() {
        return "usage";
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<evifuse_core::Error>() {
            return e.kind();
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() {
            return "json";
        }
    }
    "runtime"
}

fn report(json_errors: bool, kind: &str, detail: &str) {
    if json_errors {
        println!("{}", json!({ "error": kind, "detail": detail }));
    } else {
        eprintln!("error: {detail}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let json_errors = std::env::args().any(|a| a == "--json-errors");
            if json_errors {
                report(true, "usage", e.to_string().trim());
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };

    let result = match &cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Divergence(a) => commands::divergence_cmd(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::SweepNoise(a) => commands::sweep_noise(a),
        Command::SweepGamma(a) => commands::sweep_gamma(a),
    };
    match result.and_then(|v| Ok(serde_json::to_string_pretty(&v)?)) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if writeln!(out, "{text}").is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let kind = error_kind(&err);
            report(cli.json_errors, kind, &format!("{err:#}"));
            ExitCode::from(if kind == "usage" { 2 } else { 1 })
        }
    }
}
