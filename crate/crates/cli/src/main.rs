use std::io::Write;

use anyhow::{Context, Result};
use brunoform_cli::{render, run, Cli};
use clap::Parser;

fn main() -> Result<()> {
    let cli = Cli::parse();
    let outcome = run(&cli.command, &cli.global);
    let text = render(&outcome.report);
    match &cli.global.out {
        Some(path) if outcome.exit_code != 2 => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        _ => std::io::stdout().write_all(text.as_bytes())?,
    }
    std::process::exit(outcome.exit_code);
}
