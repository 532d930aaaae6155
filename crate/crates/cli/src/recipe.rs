//! Recipe files: flat TOML whose keys are the long flags of one subcommand.
//!
//! ```toml
//! command = "takeover"
//! grid = "64x64"
//! beta-grid = "0:0.9:0.1"
//! replicates = 100
//! seed = 7
//! out = "results/takeover"
//! ```
//!
//! Booleans switch flags on or off and arrays repeat a flag. Keys may use
//! `_` in place of `-`. Unknown keys are rejected before anything runs.

use std::path::Path;

use clap::Parser;
use toml::Value;

use crate::args::{Cli, Command};
use crate::error::CliResult;
use cea_core::Error;

const COMMANDS: &[&str] = &["takeover", "sweep", "sigma-table", "pem", "plotdata"];

fn scalar(key: &str, v: &Value) -> Result<String, Error> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        _ => Err(Error::Config(format!("recipe key {key:?}: unsupported value {v}"))),
    }
}

/// Translates recipe text into a parsed command line.
pub fn parse(text: &str) -> CliResult<Cli> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("recipe: {}", e.message())))?;
    let command = match table.get("command") {
        Some(Value::String(c)) if COMMANDS.contains(&c.as_str()) => c.clone(),
        Some(v) => {
            return Err(Error::Config(format!(
                "recipe command {v} is not one of {}",
                COMMANDS.join(", ")
            ))
            .into())
        }
        None => return Err(Error::Config("recipe lacks a `command` key".into()).into()),
    };
    let mut argv = vec!["cea".to_string(), command];
    for (key, value) in table.iter().filter(|(k, _)| *k != "command") {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Boolean(true) => argv.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                for item in items {
                    argv.push(flag.clone());
                    argv.push(scalar(key, item)?);
                }
            }
            other => {
                argv.push(flag);
                argv.push(scalar(key, other)?);
            }
        }
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| {
        let msg = e.to_string();
        let first = msg.lines().next().unwrap_or("invalid recipe").trim_start_matches("error: ");
        Error::Config(format!("recipe: {first}"))
    })?;
    Ok(cli)
}

pub fn load(path: &Path) -> CliResult<(Cli, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let cli = parse(&text)?;
    if matches!(cli.command, Command::Run(_)) {
        return Err(Error::Config("recipes cannot run other recipes".into()).into());
    }
    Ok((cli, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CliError;

    #[test]
    fn takeover_recipe() {
        let cli = parse(
            "command = \"takeover\"\ngrid = \"8x8\"\nbeta_grid = \"0:0.5:0.25\"\nreplicates = 3\nworkers = 1\n",
        )
        .unwrap();
        assert_eq!(cli.workers, Some(1));
        let Command::Takeover(t) = cli.command else { panic!() };
        assert_eq!(t.grid, "8x8");
        assert_eq!(t.replicates, 3);
    }

    #[test]
    fn arrays_and_flags() {
        let cli = parse("command = \"sweep\"\nqap = \"x.dat\"\nbeta = [0.2, 0.85]\nresume = true\n").unwrap();
        let Command::Sweep(s) = cli.command else { panic!() };
        assert_eq!(s.betas.beta, vec![0.2, 0.85]);
        assert!(s.resume);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse("command = \"takeover\"\ngrid = \"8x8\"\nbeta = 0.5\ncolour = \"red\"\n").unwrap_err();
        assert!(matches!(err, CliError::Core(Error::Config(_))), "{err}");
        assert!(parse("grid = \"8x8\"\n").is_err());
        assert!(parse("command = \"run\"\n").is_err());
    }
}
