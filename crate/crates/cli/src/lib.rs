//! Command-line front end for `nhse-core`.
//!
//! Every invocation becomes a [`RunConfig`] (the same JSON schema a recipe
//! uses) and [`execute`] writes its artifacts into the run's output
//! directory.

pub mod args;
mod commands;

use std::io::Write;
use std::path::{Path, PathBuf};

use nhse_core::error::Error;
use nhse_core::io::{parse_recipe, run_config_from_json, RunConfig};
use nhse_core::numeric::DEFAULT_BITS;
use serde_json::Value;

pub use args::{Cli, Cmd};
pub use commands::execute;

pub const PRECISION_ENV: &str = "NHSE_PRECISION_BITS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                Error::Convergence { .. } | Error::Overflow { .. } | Error::Pole(_) | Error::DegenerateState(_) => 3,
                _ => 2,
            },
        }
    }
}

/// Bits used when neither a flag nor the config sets them.
pub fn default_bits() -> Result<u32, CliError> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<u32>()
            .ok()
            .filter(|b| (2..=1 << 16).contains(b))
            .ok_or_else(|| CliError::Usage(format!("{PRECISION_ENV}={v:?} is not a bit count in 2..=65536"))),
        _ => Ok(DEFAULT_BITS),
    }
}

/// What one run produced.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Run configurations of a parsed command line.
pub fn configs(cli: &Cli) -> Result<Vec<RunConfig>, CliError> {
    let bits = default_bits()?;
    match &cli.command {
        Cmd::Run(r) => {
            let text = std::fs::read_to_string(&r.recipe).map_err(|e| CliError::Io { path: r.recipe.clone(), source: e })?;
            let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", r.recipe.display())))?;
            let mut runs: Vec<Value> = match value.get("runs") {
                Some(Value::Array(runs)) => runs.clone(),
                Some(_) => return Err(CliError::Usage("\"runs\" must be an array".into())),
                None => vec![value],
            };
            let mut common = r.common.clone();
            let out_root = common.out.take();
            for (i, run) in runs.iter_mut().enumerate() {
                let Value::Object(m) = run else {
                    return Err(CliError::Usage(format!("run {i} is not an object")));
                };
                args::apply_common(m, &common);
                if let Some(root) = &out_root {
                    let leaf = m.get("name").and_then(Value::as_str).map(str::to_string).unwrap_or_else(|| format!("run_{i}"));
                    m.insert("output_dir".into(), Value::String(root.join(leaf).to_string_lossy().into_owned()));
                }
            }
            let joined = serde_json::to_string(&serde_json::json!({ "runs": runs })).expect("JSON values serialize");
            Ok(parse_recipe(&joined, bits)?)
        }
        cmd => Ok(vec![run_config_from_json(&args::run_json(cmd)?, bits)?]),
    }
}

/// Parse, run and report; returns the process exit code.
pub fn main_with(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = configs(&cli).and_then(|runs| {
        let mut all = Vec::new();
        for run in &runs {
            let report = execute(run)?;
            for w in &report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            all.extend(report.files);
        }
        Ok(all)
    });
    match result {
        Ok(files) => {
            for f in files {
                let _ = writeln!(stdout, "{}", f.display());
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str, report: &mut Report) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    report.files.push(path.to_path_buf());
    Ok(())
}
