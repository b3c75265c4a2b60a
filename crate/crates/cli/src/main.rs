mod args;
mod commands;
mod config;
mod list;
mod output;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use serde_json::{Map, Value};

use args::{Cli, Command};
use output::Report;

/// Exit status when the output was written but a check failed.
const EXIT_CHECK_FAILED: u8 = 3;

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Moments(a) => commands::moments(a),
        Command::Fixation(a) => commands::series(a, commands::Absorbed::Fixation),
        Command::Extinction(a) => commands::series(a, commands::Absorbed::Extinction),
        Command::Het(a) => commands::het(a),
        Command::Absorption(a) => commands::absorption(a),
        Command::Master(a) => commands::master(a),
        Command::Compare(a) => commands::compare(a),
        Command::Mc(a) => commands::mc(a),
    }
}

fn resolved_config(command: &Command) -> Result<Value> {
    Ok(match command {
        Command::Moments(a) => serde_json::to_value(a)?,
        Command::Fixation(a) | Command::Extinction(a) => serde_json::to_value(a)?,
        Command::Het(a) => serde_json::to_value(a)?,
        Command::Absorption(a) => serde_json::to_value(a)?,
        Command::Master(a) => serde_json::to_value(a)?,
        Command::Compare(a) => serde_json::to_value(a)?,
        Command::Mc(a) => serde_json::to_value(a)?,
    })
}

fn main_inner() -> Result<bool> {
    let argv = config::expand(std::env::args_os().collect())?;
    let cli = Cli::parse_from(argv);
    let report = run(&cli)?;
    let common = cli.command.common();

    let mut meta = Map::new();
    meta.insert("command".into(), cli.command.name().into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("config".into(), resolved_config(&cli.command)?);
    meta.insert("columns".into(), report.table.columns.clone().into());
    if !common.no_timestamp {
        meta.insert("timestamp".into(), chrono::Utc::now().to_rfc3339().into());
    }
    meta.insert("passed".into(), report.passed.into());
    meta.extend(report.meta);
    output::emit(common.out.as_deref(), common.format, &Value::Object(meta), &report.table)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed (see the status column)");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
