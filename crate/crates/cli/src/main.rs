//! `claimx` command-line entry point.
//!
//! Exit status: 0 on success, 2 on usage errors (with help on stderr), 1 on
//! runtime failures.

mod args;
mod commands;
mod manifest;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn init_logging(filter: &str) {
    env_logger::Builder::new()
        .parse_filters(filter)
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} target={} msg={:?}",
                record.level(),
                record.target(),
                record.args().to_string()
            )
        })
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli.log);
    let result = match cli.command {
        Command::Pretrain(a) => commands::pretrain(a),
        Command::Transfer(a) => commands::transfer(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Predict(a) => commands::predict(a),
        Command::Serve(a) => commands::serve(a),
        Command::Stats(a) => commands::stats(a),
        Command::Vote(a) => commands::vote(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
