//! Flag definitions. Every subcommand is turned into a JSON run
//! configuration, so flags and config files share one parser.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "nhse", version, about = "Hatano-Nelson impurity chains, NR-SSH chains and non-unitary quantum walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Full spectrum with eigenvectors, residual checks and a complex-plane plot.
    Spectrum(ChainCmd),
    /// Mode profiles: impurity mode, aggregates, linear modes, critical values.
    Modes(ModesCmd),
    /// Polished wavevectors and quantization residuals per eigenvalue.
    Quantize(ChainCmd),
    /// Gradient phase diagram over hopping ratio and impurity strength.
    PhaseScan(ScanCmd),
    /// Non-unitary quantum walk.
    Walk(WalkCmd),
    /// Non-reciprocal SSH spectrum, Bloch bands and impurity mode.
    Ssh(SshCmd),
    /// Strong-impurity fragmentation check against the two pristine sub-chains.
    Fragcheck(ChainCmd),
    /// Winding number of the ring spectrum about base points.
    Winding(WindingCmd),
    /// Execute every run of a recipe file.
    Run(RunCmd),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Working precision in bits (default: NHSE_PRECISION_BITS or 256).
    #[arg(long, global = true)]
    pub bits: Option<u32>,
    /// Convergence tolerance, as decimal text.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    /// Output directory.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, global = true)]
    pub formats: Option<String>,
    /// File-name prefix for the artifacts.
    #[arg(long, global = true)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ChainArgs {
    /// Chain spec JSON file; flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Left hopping, `re` or `re,im`.
    #[arg(long = "tL", allow_hyphen_values = true)]
    pub t_left: Option<String>,
    #[arg(long = "tR", allow_hyphen_values = true)]
    pub t_right: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Impurity site, 1-based.
    #[arg(long)]
    pub l: Option<usize>,
    /// obc or pbc.
    #[arg(long)]
    pub bc: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ChainCmd {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ModesCmd {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// impurity, aggregate, aggregate_abs, linear+, linear-, icse_estimate,
    /// fragments, critical, all or index:K. Repeatable.
    #[arg(long = "select", value_delimiter = ',')]
    pub select: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanCmd {
    /// Scan config JSON file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    /// `lo,hi` range of tR/tL.
    #[arg(long, allow_hyphen_values = true)]
    pub ratio: Option<String>,
    /// `lo,hi` range of delta/tL.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// `n` or `n_ratio,n_delta`.
    #[arg(long)]
    pub resolution: Option<String>,
    /// Gradient offset, e.g. +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<i64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct WalkCmd {
    /// Walk config JSON file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "L")]
    pub len: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Start site, 0-based (default L/2).
    #[arg(long)]
    pub x0: Option<usize>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub ell: Option<String>,
    /// symmetric, right, left or plus.
    #[arg(long = "coin-state")]
    pub coin_state: Option<String>,
    /// none, M1, M2 or M3.
    #[arg(long)]
    pub impurity: Option<String>,
    #[arg(long)]
    pub site: Option<usize>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long = "gamma-r")]
    pub gamma_r: Option<String>,
    #[arg(long = "gamma-l")]
    pub gamma_l: Option<String>,
    /// absorbing or periodic.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Run the extended-precision kernel at this many bits.
    #[arg(long = "extended-bits")]
    pub extended_bits: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SshCmd {
    /// SSH spec JSON file; flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Impurity cell, 1-based.
    #[arg(long)]
    pub cell: Option<usize>,
    /// A or B.
    #[arg(long)]
    pub sublattice: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct WindingCmd {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Base point `re,im`. Repeatable; default the origin.
    #[arg(long = "base", allow_hyphen_values = true)]
    pub base: Vec<String>,
    /// Initial curve samples (doubled until the count is stable).
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct RunCmd {
    /// Recipe: one run config or {"runs": [...]}.
    pub recipe: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// `re` or `re,im` (brackets allowed) as a JSON pair of decimal strings.
pub fn complex_value(text: &str) -> Value {
    let t = text.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = t.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => Value::Array(vec![Value::String(re.to_string()), Value::String("0".into())]),
        _ => Value::Array(parts.iter().map(|p| Value::String(p.to_string())).collect()),
    }
}

fn pair_value(text: &str) -> Value {
    let t = text.trim().trim_start_matches('[').trim_end_matches(']');
    Value::Array(t.split(',').map(|p| Value::String(p.trim().to_string())).collect())
}

fn resolution_value(text: &str) -> Result<Value, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parse = |p: &str| p.parse::<usize>().map_err(|_| CliError::Usage(format!("invalid resolution {text:?}")));
    match parts.as_slice() {
        [n] => {
            let n = parse(n)?;
            Ok(Value::Array(vec![n.into(), n.into()]))
        }
        [a, b] => Ok(Value::Array(vec![parse(a)?.into(), parse(b)?.into()])),
        _ => Err(CliError::Usage(format!("invalid resolution {text:?}"))),
    }
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn base_object(file: &Option<PathBuf>) -> Result<Map<String, Value>, CliError> {
    match file {
        None => Ok(Map::new()),
        Some(p) => match read_json(p)? {
            Value::Object(m) => Ok(m),
            _ => Err(CliError::Usage(format!("{}: expected a JSON object", p.display()))),
        },
    }
}

fn set<T: Into<Value>>(m: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), v.into());
    }
}

fn set_text(m: &mut Map<String, Value>, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        m.insert(key.into(), Value::String(v.clone()));
    }
}

pub fn chain_json(a: &ChainArgs) -> Result<Value, CliError> {
    let mut m = base_object(&a.spec)?;
    set(&mut m, "N", a.n);
    for (k, v) in [("tL", &a.t_left), ("tR", &a.t_right), ("delta", &a.delta)] {
        if let Some(v) = v {
            m.insert(k.into(), complex_value(v));
        }
    }
    set(&mut m, "l", a.l);
    set_text(&mut m, "bc", &a.bc);
    Ok(Value::Object(m))
}

pub fn ssh_json(a: &SshCmd) -> Result<Value, CliError> {
    let mut m = base_object(&a.spec)?;
    set(&mut m, "cells", a.cells);
    for (k, v) in [("t1", &a.t1), ("t2", &a.t2), ("gamma", &a.gamma), ("delta", &a.delta)] {
        if let Some(v) = v {
            m.insert(k.into(), complex_value(v));
        }
    }
    set(&mut m, "cell", a.cell);
    set_text(&mut m, "sublattice", &a.sublattice);
    Ok(Value::Object(m))
}

pub fn scan_json(a: &ScanCmd) -> Result<Value, CliError> {
    let mut m = base_object(&a.config)?;
    set(&mut m, "N", a.n);
    set(&mut m, "l", a.l);
    if let Some(r) = &a.ratio {
        m.insert("ratio".into(), pair_value(r));
    }
    if let Some(d) = &a.delta {
        m.insert("delta".into(), pair_value(d));
    }
    if let Some(r) = &a.resolution {
        m.insert("resolution".into(), resolution_value(r)?);
    }
    set(&mut m, "x", a.x);
    set(&mut m, "threads", a.threads);
    Ok(Value::Object(m))
}

pub fn walk_json(a: &WalkCmd) -> Result<Value, CliError> {
    let mut m = base_object(&a.config)?;
    set(&mut m, "L", a.len);
    set(&mut m, "steps", a.steps);
    set(&mut m, "x0", a.x0);
    set_text(&mut m, "r", &a.r);
    set_text(&mut m, "ell", &a.ell);
    set_text(&mut m, "coin_state", &a.coin_state);
    set_text(&mut m, "boundary", &a.boundary);
    set(&mut m, "extended_bits", a.extended_bits);
    let touches_impurity =
        a.impurity.is_some() || a.site.is_some() || a.gamma.is_some() || a.phi.is_some() || a.gamma_r.is_some() || a.gamma_l.is_some();
    if touches_impurity {
        let mut imp = match m.remove("impurity") {
            Some(Value::Object(i)) => i,
            _ => Map::new(),
        };
        set_text(&mut imp, "model", &a.impurity);
        set(&mut imp, "site", a.site);
        set_text(&mut imp, "gamma", &a.gamma);
        set_text(&mut imp, "phi", &a.phi);
        set_text(&mut imp, "gamma_r", &a.gamma_r);
        set_text(&mut imp, "gamma_l", &a.gamma_l);
        m.insert("impurity".into(), Value::Object(imp));
    }
    Ok(Value::Object(m))
}

/// Overlay precision, formats, name and output directory flags on a run
/// config object.
pub fn apply_common(run: &mut Map<String, Value>, c: &Common) {
    if c.bits.is_some() || c.tol.is_some() || c.max_iter.is_some() {
        let mut p = match run.remove("precision") {
            Some(Value::Object(p)) => p,
            _ => Map::new(),
        };
        set(&mut p, "bits", c.bits);
        set_text(&mut p, "tol", &c.tol);
        set(&mut p, "max_iter", c.max_iter);
        run.insert("precision".into(), Value::Object(p));
    }
    if let Some(f) = &c.formats {
        let list = f.split(',').map(|s| Value::String(s.trim().to_string())).filter(|v| v != "").collect();
        run.insert("formats".into(), Value::Array(list));
    }
    if let Some(n) = &c.name {
        run.insert("name".into(), Value::String(n.clone()));
    }
    if let Some(o) = &c.out {
        run.insert("output_dir".into(), Value::String(o.to_string_lossy().into_owned()));
    }
}

/// The run configuration of a single-command invocation.
pub fn run_json(cmd: &Cmd) -> Result<Value, CliError> {
    let mut m = Map::new();
    let (name, common) = match cmd {
        Cmd::Spectrum(c) => {
            m.insert("chain".into(), chain_json(&c.chain)?);
            ("spectrum", &c.common)
        }
        Cmd::Quantize(c) => {
            m.insert("chain".into(), chain_json(&c.chain)?);
            ("quantize", &c.common)
        }
        Cmd::Fragcheck(c) => {
            m.insert("chain".into(), chain_json(&c.chain)?);
            ("fragcheck", &c.common)
        }
        Cmd::Modes(c) => {
            m.insert("chain".into(), chain_json(&c.chain)?);
            if !c.select.is_empty() {
                m.insert("modes".into(), Value::Array(c.select.iter().map(|s| Value::String(s.clone())).collect()));
            }
            ("modes", &c.common)
        }
        Cmd::Winding(c) => {
            m.insert("chain".into(), chain_json(&c.chain)?);
            if !c.base.is_empty() {
                m.insert("base_points".into(), Value::Array(c.base.iter().map(|b| complex_value(b)).collect()));
            }
            set(&mut m, "samples", c.samples);
            ("winding", &c.common)
        }
        Cmd::PhaseScan(c) => {
            m.insert("scan".into(), scan_json(c)?);
            ("phase-scan", &c.common)
        }
        Cmd::Walk(c) => {
            m.insert("walk".into(), walk_json(c)?);
            ("walk", &c.common)
        }
        Cmd::Ssh(c) => {
            m.insert("ssh".into(), ssh_json(c)?);
            ("ssh", &c.common)
        }
        Cmd::Run(_) => return Err(CliError::Usage("run takes a recipe file".into())),
    };
    m.insert("command".into(), Value::String(name.into()));
    apply_common(&mut m, common);
    Ok(Value::Object(m))
}
