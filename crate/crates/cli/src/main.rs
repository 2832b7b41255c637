//! `leviform`: batch front end writing JSON reports and CSV dumps.
//!
//! Exit codes: 0 pass, 2 uncertified, 1 usage or domain error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::Table;

const SCHEMA_VERSION: &str = "1.0";

fn load_config(path: &Path) -> Result<Command> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let raw: Value = serde_json::from_str(&text).context("config is not valid JSON")?;
    let cmd: Command = serde_json::from_value(raw.clone()).map_err(|e| anyhow!("config: {e}"))?;
    // Anything the parsed command does not carry back was not understood.
    let back = serde_json::to_value(&cmd)?;
    if let (Some(given), Some(known)) = (raw.as_object(), back.as_object()) {
        if let Some(k) = given.keys().find(|k| !known.contains_key(*k)) {
            bail!("config: unknown field `{k}`");
        }
    }
    Ok(cmd)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LEVIFORM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| anyhow!("LEVIFORM_THREADS = {v:?} is not a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool already initialized")?;
    }
    Ok(())
}

fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn real_main(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let mut cmd = match (&cli.config, cli.command) {
        (Some(_), Some(_)) => bail!("give either --config or a subcommand, not both"),
        (Some(p), None) => load_config(p)?,
        (None, Some(c)) => c,
        (None, None) => bail!("no subcommand given (see --help)"),
    };
    cmd.resolve();
    let start = Instant::now();
    let outcome = commands::run(&cmd)?;
    let seconds = start.elapsed().as_secs_f64();
    let report = json!({
        "version": SCHEMA_VERSION,
        "command": cmd.name(),
        "config": cmd,
        "status": if outcome.pass { "pass" } else { "uncertified" },
        "results": outcome.results,
        "timing": { "seconds": seconds },
    });
    let text = serde_json::to_string_pretty(&report)?;
    match &cli.out {
        Some(p) => {
            fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))?
        }
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    if let (Some(p), Some(t)) = (&cli.csv, &outcome.table) {
        write_csv(p, t)?;
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match real_main(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
