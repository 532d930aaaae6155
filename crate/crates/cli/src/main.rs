mod args;
mod commands;
mod error;
mod output;
mod parse;
mod recipe;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        // Fails only if a pool already exists, e.g. when a recipe sets it again.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Takeover(a) => commands::takeover(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::SigmaTable(a) => commands::sigma_table(a),
        Command::Pem(a) => commands::pem(a),
        Command::Plotdata(a) => commands::plotdata(a),
        Command::Run(a) => {
            let (inner, text) = recipe::load(&a.recipe)?;
            let _ = output::RECIPE.set(text);
            let inner = Cli {
                workers: cli.workers.or(inner.workers),
                ..inner
            };
            execute(&inner)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = execute(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
