mod cli_args;
mod commands;

use clap::Parser;
use cli_args::{Cli, Command};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Trakofy(args) => commands::trakofy(args),
        Command::Untrakofy(args) => commands::untrakofy(args),
        Command::Tkompare(args) => commands::tkompare(args),
        Command::Gen(args) => commands::gen(args),
    };
    if let Err(failure) = result {
        eprintln!("error: {failure}");
        std::process::exit(failure.code);
    }
}
