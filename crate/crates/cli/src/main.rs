mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, RelabelCommand};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::LangFilter(a) => commands::lang_filter(a),
        Command::Dedup(a) => commands::dedup_cmd(a),
        Command::TrainEmbeddings(a) => commands::train_embeddings(a),
        Command::Similar(a) => commands::similar(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Lda(a) => commands::lda(a),
        Command::Lexicon(a) => commands::lexicon(a),
        Command::Cv(a) => commands::cv(a),
        Command::Bench(a) => commands::bench(a),
        Command::RelabelServe(a) | Command::Relabel { command: RelabelCommand::Serve(a) } => commands::serve(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
