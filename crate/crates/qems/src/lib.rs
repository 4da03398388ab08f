//! Command-line front end for the `qems-core` simulations.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod units;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::cli::{Cli, OUTPUT_DIR_ENV};
use crate::commands::{execute, Context};
use crate::config::{resolve, FileConfig};
use crate::error::CliError;
use crate::output::write_csv;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to `stderr`; CSV goes to `stdout` unless an
/// output file is configured.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(stderr, "{}", e.render());
            if code == 0 {
                let _ = write!(stdout, "{}", e.render());
            }
            return code;
        }
    };
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    match run(&cli, &args, env_dir.as_deref(), stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "qems: {e}");
            e.exit_code()
        }
    }
}

/// Resolves configuration, runs the command and writes the CSV.
pub fn run(cli: &Cli, args: &[OsString], env_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let params = cli.common.params.over(&file.params);
    let resolved = resolve(&params)?;
    let seed = cli.common.seed.or(file.seed).unwrap_or(0);
    let ctx = Context { params, file, resolved, seed };

    let table = execute(&cli.command, &ctx, stderr)?;

    let mut preamble = vec![
        format!("qems {}", env!("CARGO_PKG_VERSION")),
        format!("invocation: {}", args.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ")),
        format!("command: {}", cli.command.name()),
        format!("seed: {seed}"),
    ];
    if !cli.common.no_timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        preamble.push(format!("generated: unix {secs}"));
    }
    for e in ctx.resolved.table() {
        preamble.push(format!("param {} = {:e} {}", e.name, e.value, e.unit).trim_end().to_string());
    }

    let mut buf = Vec::new();
    write_csv(&mut buf, &preamble, &table)?;

    let target = cli
        .common
        .output
        .clone()
        .or_else(|| ctx.file.output.clone())
        .or_else(|| env_dir.map(|d| d.join(format!("{}.csv", cli.command.name()))));
    match target {
        Some(path) if path.as_os_str() != "-" => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&path, &buf).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        _ => stdout.write_all(&buf)?,
    }
    Ok(())
}
