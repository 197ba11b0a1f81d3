//! JSON and CSV formats: chain and SSH specs, spectra, walk and scan
//! configurations, run configurations and the CSV tables written by the
//! command-line tool.
//!
//! Numbers are kept as decimal text end to end (`serde_json` with
//! `arbitrary_precision`), so a value parsed at some precision and written
//! back reproduces the same binary value.

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use rug::Float;
use serde_json::{Map, Number, Value};

use crate::diagnostics::{FragmentationReport, PhaseScan};
use crate::error::{Error, Result};
use crate::fibonacci::QuantizationResidual;
use crate::lattice::{Boundary, ChainSpec, SSHSpec, Sublattice};
use crate::numeric::{parse_real, real_to_string, HPComplex, PrecisionConfig, DEFAULT_MAX_ITER};
use crate::profile::{ModeProfile, ProfileLabel};
use crate::spectral::Spectrum;
use crate::walk::{CoinSpec, ImpuritySpec, WalkBoundary};

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| fmt_err(format!("{what} must be a JSON object")))
}

fn field<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| fmt_err(format!("missing field {key:?}")))
}

/// Decimal text of a JSON number or string.
fn number_text(v: &Value) -> Result<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => Err(fmt_err(format!("expected a number, got {v}"))),
    }
}

pub fn json_real(v: &Value, bits: u32) -> Result<Float> {
    let x = parse_real(&number_text(v)?, bits)?;
    if !x.is_finite() {
        return Err(fmt_err("numbers must be finite"));
    }
    Ok(x)
}

/// `[re, im]`, or a bare real.
pub fn json_complex(v: &Value, bits: u32) -> Result<HPComplex> {
    match v {
        Value::Array(a) if a.len() == 2 => Ok(HPComplex::from_parts(json_real(&a[0], bits)?, json_real(&a[1], bits)?)),
        Value::Array(_) => Err(fmt_err("complex values are [re, im] pairs")),
        _ => Ok(HPComplex::from_real(json_real(v, bits)?)),
    }
}

fn json_f64(v: &Value) -> Result<f64> {
    let t = number_text(v)?;
    let x: f64 = t.trim().parse().map_err(|_| fmt_err(format!("invalid number {t:?}")))?;
    if !x.is_finite() {
        return Err(fmt_err("numbers must be finite"));
    }
    Ok(x)
}

fn json_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64().and_then(|n| usize::try_from(n).ok()).ok_or_else(|| fmt_err(format!("{what} must be a non-negative integer")))
}

fn json_i64(v: &Value, what: &str) -> Result<i64> {
    if let Some(s) = v.as_str() {
        return s.trim().parse().map_err(|_| fmt_err(format!("{what} must be an integer")));
    }
    v.as_i64().ok_or_else(|| fmt_err(format!("{what} must be an integer")))
}

fn json_str<'a>(v: &'a Value, what: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| fmt_err(format!("{what} must be a string")))
}

/// A real as a JSON number with round-trip digits.
pub fn real_json(x: &Float) -> Value {
    if !x.is_finite() {
        return Value::String(x.to_string());
    }
    match Number::from_str(&real_to_string(x)) {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(real_to_string(x)),
    }
}

pub fn complex_json(z: &HPComplex) -> Value {
    Value::Array(vec![real_json(z.re()), real_json(z.im())])
}

fn f64_json(x: f64) -> Value {
    Number::from_str(&format!("{x:?}")).map(Value::Number).unwrap_or(Value::Null)
}

pub fn chain_spec_to_json(spec: &ChainSpec) -> Value {
    let mut m = Map::new();
    m.insert("N".into(), spec.n_sites().into());
    m.insert("tL".into(), complex_json(spec.t_left()));
    m.insert("tR".into(), complex_json(spec.t_right()));
    m.insert("delta".into(), complex_json(spec.delta()));
    m.insert("l".into(), spec.impurity_site().into());
    m.insert("bc".into(), spec.boundary().as_str().into());
    Value::Object(m)
}

pub fn chain_spec_from_json(v: &Value, bits: u32) -> Result<ChainSpec> {
    let m = obj(v, "chain spec")?;
    let bc = match m.get("bc") {
        Some(b) => Boundary::from_str(json_str(b, "bc")?)?,
        None => Boundary::Obc,
    };
    let delta = json_complex(field(m, "delta")?, bits)?;
    // the site is irrelevant without an impurity
    let l = match m.get("l") {
        None if delta.is_zero() => 1,
        _ => json_usize(field(m, "l")?, "l")?,
    };
    ChainSpec::new(
        json_usize(field(m, "N")?, "N")?,
        json_complex(field(m, "tL")?, bits)?,
        json_complex(field(m, "tR")?, bits)?,
        delta,
        l,
        bc,
    )
}

pub fn parse_chain_spec(text: &str, bits: u32) -> Result<ChainSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    chain_spec_from_json(&v, bits)
}

pub fn ssh_spec_to_json(spec: &SSHSpec) -> Value {
    let mut m = Map::new();
    m.insert("cells".into(), spec.n_cells().into());
    m.insert("t1".into(), complex_json(spec.t1()));
    m.insert("t2".into(), complex_json(spec.t2()));
    m.insert("gamma".into(), complex_json(spec.gamma()));
    m.insert("delta".into(), complex_json(spec.delta()));
    m.insert("cell".into(), spec.impurity_cell().into());
    m.insert("sublattice".into(), spec.impurity_sublattice().as_str().into());
    Value::Object(m)
}

pub fn ssh_spec_from_json(v: &Value, bits: u32) -> Result<SSHSpec> {
    let m = obj(v, "SSH spec")?;
    SSHSpec::new(
        json_usize(field(m, "cells")?, "cells")?,
        json_complex(field(m, "t1")?, bits)?,
        json_complex(field(m, "t2")?, bits)?,
        json_complex(field(m, "gamma")?, bits)?,
        json_complex(field(m, "delta")?, bits)?,
        json_usize(field(m, "cell")?, "cell")?,
        Sublattice::from_str(json_str(field(m, "sublattice")?, "sublattice")?)?,
    )
}

pub fn parse_ssh_spec(text: &str, bits: u32) -> Result<SSHSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    ssh_spec_from_json(&v, bits)
}

fn vectors_json(vs: &[ModeProfile]) -> Value {
    Value::Array(vs.iter().map(|v| Value::Array(v.amplitudes.iter().map(complex_json).collect())).collect())
}

pub fn spectrum_to_json(s: &Spectrum) -> Value {
    let mut m = Map::new();
    m.insert("eigenvalues".into(), Value::Array(s.eigenvalues.iter().map(complex_json).collect()));
    m.insert("residuals".into(), Value::Array(s.residuals.iter().map(real_json).collect()));
    m.insert("left_residuals".into(), Value::Array(s.left_residuals.iter().map(real_json).collect()));
    m.insert("clustered".into(), Value::Array(s.clustered.iter().map(|&c| c.into()).collect()));
    m.insert("right".into(), vectors_json(&s.right_vectors));
    m.insert("left".into(), vectors_json(&s.left_vectors));
    Value::Object(m)
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| fmt_err(format!("{what} must be an array")))
}

fn vectors_from(v: &Value, energies: &[HPComplex], n: usize, bits: u32, what: &str) -> Result<Vec<ModeProfile>> {
    let rows = array(v, what)?;
    if rows.len() != n {
        return Err(fmt_err(format!("{what} has {} vectors for {n} eigenvalues", rows.len())));
    }
    rows.iter()
        .zip(energies)
        .map(|(row, e)| {
            let amps = array(row, what)?.iter().map(|z| json_complex(z, bits)).collect::<Result<Vec<_>>>()?;
            if amps.len() != n {
                return Err(fmt_err(format!("{what} vectors must have {n} entries")));
            }
            Ok(ModeProfile { amplitudes: amps, label: ProfileLabel::SingleMode, energy: Some(e.clone()) })
        })
        .collect()
}

/// Read back a spectrum written by [`spectrum_to_json`]. Vectors are taken
/// as stored, without renormalization.
pub fn spectrum_from_json(text: &str, bits: u32) -> Result<Spectrum> {
    let v: Value = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    let m = obj(&v, "spectrum")?;
    let eigenvalues = array(field(m, "eigenvalues")?, "eigenvalues")?.iter().map(|z| json_complex(z, bits)).collect::<Result<Vec<_>>>()?;
    let n = eigenvalues.len();
    let reals = |key: &str| -> Result<Vec<Float>> {
        let r = array(field(m, key)?, key)?.iter().map(|x| json_real(x, bits)).collect::<Result<Vec<_>>>()?;
        if r.len() != n {
            return Err(fmt_err(format!("{key} has {} entries for {n} eigenvalues", r.len())));
        }
        Ok(r)
    };
    let residuals = reals("residuals")?;
    let left_residuals = if m.contains_key("left_residuals") { reals("left_residuals")? } else { residuals.clone() };
    let clustered = match m.get("clustered") {
        Some(c) => {
            let c = array(c, "clustered")?
                .iter()
                .map(|b| b.as_bool().ok_or_else(|| fmt_err("clustered entries are booleans")))
                .collect::<Result<Vec<_>>>()?;
            if c.len() != n {
                return Err(fmt_err("clustered length mismatch"));
            }
            c
        }
        None => vec![false; n],
    };
    let right_vectors = vectors_from(field(m, "right")?, &eigenvalues, n, bits, "right")?;
    let left_vectors = vectors_from(field(m, "left")?, &eigenvalues, n, bits, "left")?;
    Ok(Spectrum { eigenvalues, right_vectors, left_vectors, residuals, left_residuals, clustered })
}

/// Parameters of one quantum-walk run.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    pub len: usize,
    pub steps: usize,
    pub start: usize,
    pub coin: CoinSpec,
    pub coin_state: [Complex64; 2],
    pub impurity: ImpuritySpec,
    pub boundary: WalkBoundary,
    /// Run the extended-precision kernel at this many bits.
    pub extended_bits: Option<u32>,
}

fn coin_state_from(v: Option<&Value>) -> Result<[Complex64; 2]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match v {
        None => Ok(crate::walk::symmetric_coin_state()),
        Some(Value::String(s)) => match s.as_str() {
            "symmetric" => Ok(crate::walk::symmetric_coin_state()),
            "right" | "R" => Ok([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]),
            "left" | "L" => Ok([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
            "plus" => Ok([Complex64::new(h, 0.0), Complex64::new(h, 0.0)]),
            _ => Err(fmt_err(format!("unknown coin state {s:?}"))),
        },
        Some(Value::Array(a)) if a.len() == 2 => {
            let c = |v: &Value| -> Result<Complex64> {
                match v {
                    Value::Array(p) if p.len() == 2 => Ok(Complex64::new(json_f64(&p[0])?, json_f64(&p[1])?)),
                    _ => Ok(Complex64::new(json_f64(v)?, 0.0)),
                }
            };
            Ok([c(&a[0])?, c(&a[1])?])
        }
        Some(_) => Err(fmt_err("coin_state is a name or a pair of amplitudes")),
    }
}

fn coin_state_json(s: &[Complex64; 2]) -> Value {
    Value::Array(s.iter().map(|z| Value::Array(vec![f64_json(z.re), f64_json(z.im)])).collect())
}

pub fn impurity_from_json(v: &Value) -> Result<ImpuritySpec> {
    let m = obj(v, "impurity")?;
    let model = json_str(field(m, "model")?, "model")?;
    let site = || json_usize(field(m, "site")?, "site");
    let imp = match model.to_ascii_lowercase().as_str() {
        "none" => ImpuritySpec::None,
        "m1" => ImpuritySpec::M1 { site: site()?, gamma: json_f64(field(m, "gamma")?)? },
        "m2" => ImpuritySpec::M2 { site: site()?, phi: json_f64(field(m, "phi")?)? },
        "m3" => ImpuritySpec::M3 { site: site()?, gamma_r: json_f64(field(m, "gamma_r")?)?, gamma_l: json_f64(field(m, "gamma_l")?)? },
        other => return Err(fmt_err(format!("unknown impurity model {other:?}"))),
    };
    imp.validate()?;
    Ok(imp)
}

pub fn impurity_to_json(imp: &ImpuritySpec) -> Value {
    let mut m = Map::new();
    m.insert("model".into(), imp.model_name().into());
    if let Some(s) = imp.site() {
        m.insert("site".into(), s.into());
    }
    match *imp {
        ImpuritySpec::M1 { gamma, .. } => {
            m.insert("gamma".into(), f64_json(gamma));
        }
        ImpuritySpec::M2 { phi, .. } => {
            m.insert("phi".into(), f64_json(phi));
        }
        ImpuritySpec::M3 { gamma_r, gamma_l, .. } => {
            m.insert("gamma_r".into(), f64_json(gamma_r));
            m.insert("gamma_l".into(), f64_json(gamma_l));
        }
        ImpuritySpec::None => {}
    }
    Value::Object(m)
}

pub fn walk_config_from_json(v: &Value) -> Result<WalkConfig> {
    let m = obj(v, "walk config")?;
    let len = json_usize(field(m, "L")?, "L")?;
    let start = match m.get("x0") {
        Some(x) => json_usize(x, "x0")?,
        None => len / 2,
    };
    if len == 0 || start >= len {
        return Err(Error::arg(format!("start {start} outside a lattice of {len} sites")));
    }
    let impurity = match m.get("impurity") {
        Some(i) => impurity_from_json(i)?,
        None => ImpuritySpec::None,
    };
    if impurity.site().is_some_and(|s| s >= len) {
        return Err(Error::arg("impurity site outside the lattice"));
    }
    let boundary = match m.get("boundary") {
        Some(b) => WalkBoundary::from_str(json_str(b, "boundary")?)?,
        None => WalkBoundary::Absorbing,
    };
    let extended_bits = match m.get("extended_bits") {
        Some(Value::Null) | None => None,
        Some(b) => {
            let b = json_usize(b, "extended_bits")?;
            if !(53..=1 << 16).contains(&b) {
                return Err(Error::arg("extended_bits must lie in 53..=65536"));
            }
            Some(b as u32)
        }
    };
    Ok(WalkConfig {
        len,
        steps: json_usize(field(m, "steps")?, "steps")?,
        start,
        coin: CoinSpec::new(json_f64(field(m, "r")?)?, json_f64(field(m, "ell")?)?)?,
        coin_state: coin_state_from(m.get("coin_state"))?,
        impurity,
        boundary,
        extended_bits,
    })
}

pub fn walk_config_to_json(c: &WalkConfig) -> Value {
    let mut m = Map::new();
    m.insert("L".into(), c.len.into());
    m.insert("steps".into(), c.steps.into());
    m.insert("x0".into(), c.start.into());
    m.insert("r".into(), f64_json(c.coin.r()));
    m.insert("ell".into(), f64_json(c.coin.ell()));
    m.insert("coin_state".into(), coin_state_json(&c.coin_state));
    m.insert("impurity".into(), impurity_to_json(&c.impurity));
    m.insert("boundary".into(), c.boundary.as_str().into());
    if let Some(b) = c.extended_bits {
        m.insert("extended_bits".into(), b.into());
    }
    Value::Object(m)
}

/// Grid of a phase scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub n_sites: usize,
    pub l: usize,
    pub ratio_range: (f64, f64),
    pub delta_range: (f64, f64),
    pub resolution: (usize, usize),
    pub x: i64,
    pub threads: Option<usize>,
}

fn pair_f64(v: &Value, what: &str) -> Result<(f64, f64)> {
    match v.as_array() {
        Some(a) if a.len() == 2 => Ok((json_f64(&a[0])?, json_f64(&a[1])?)),
        _ => Err(fmt_err(format!("{what} must be a [lo, hi] pair"))),
    }
}

pub fn scan_config_from_json(v: &Value) -> Result<ScanConfig> {
    let m = obj(v, "scan config")?;
    let res = match field(m, "resolution")?.as_array() {
        Some(a) if a.len() == 2 => (json_usize(&a[0], "resolution")?, json_usize(&a[1], "resolution")?),
        _ => return Err(fmt_err("resolution must be a [ratio, delta] pair")),
    };
    if res.0 < 2 || res.1 < 2 || res.0.saturating_mul(res.1) > 1 << 20 {
        return Err(Error::arg("scan resolution must be at least 2 and at most 2^20 cells"));
    }
    let x = json_i64(field(m, "x")?, "x")?;
    if x == 0 {
        return Err(Error::arg("x must be nonzero"));
    }
    Ok(ScanConfig {
        n_sites: json_usize(field(m, "N")?, "N")?,
        l: json_usize(field(m, "l")?, "l")?,
        ratio_range: pair_f64(field(m, "ratio")?, "ratio")?,
        delta_range: pair_f64(field(m, "delta")?, "delta")?,
        resolution: res,
        x,
        threads: m.get("threads").map(|t| json_usize(t, "threads")).transpose()?,
    })
}

pub fn scan_config_to_json(c: &ScanConfig) -> Value {
    let mut m = Map::new();
    m.insert("N".into(), c.n_sites.into());
    m.insert("l".into(), c.l.into());
    m.insert("ratio".into(), Value::Array(vec![f64_json(c.ratio_range.0), f64_json(c.ratio_range.1)]));
    m.insert("delta".into(), Value::Array(vec![f64_json(c.delta_range.0), f64_json(c.delta_range.1)]));
    m.insert("resolution".into(), Value::Array(vec![c.resolution.0.into(), c.resolution.1.into()]));
    m.insert("x".into(), c.x.into());
    if let Some(t) = c.threads {
        m.insert("threads".into(), t.into());
    }
    Value::Object(m)
}

/// Subcommands of the command-line tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Modes,
    Quantize,
    PhaseScan,
    Walk,
    Ssh,
    Fragcheck,
    Winding,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Spectrum,
        Command::Modes,
        Command::Quantize,
        Command::PhaseScan,
        Command::Walk,
        Command::Ssh,
        Command::Fragcheck,
        Command::Winding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Modes => "modes",
            Command::Quantize => "quantize",
            Command::PhaseScan => "phase-scan",
            Command::Walk => "walk",
            Command::Ssh => "ssh",
            Command::Fragcheck => "fragcheck",
            Command::Winding => "winding",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| Error::arg(format!("unknown command {s:?}")))
    }
}

/// Which mode profiles `modes` writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSelect {
    Impurity,
    Aggregate,
    AggregateModulus,
    Linear(i32),
    IcseEstimate,
    Fragments,
    /// Critical strengths and ratios only, no spectrum.
    Critical,
    All,
    Index(usize),
}

impl FromStr for ModeSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "impurity" => ModeSelect::Impurity,
            "aggregate" => ModeSelect::Aggregate,
            "aggregate_abs" => ModeSelect::AggregateModulus,
            "linear+" => ModeSelect::Linear(1),
            "linear-" => ModeSelect::Linear(-1),
            "icse_estimate" => ModeSelect::IcseEstimate,
            "fragments" => ModeSelect::Fragments,
            "critical" => ModeSelect::Critical,
            "all" => ModeSelect::All,
            _ => match s.strip_prefix("index:").map(str::parse::<usize>) {
                Some(Ok(i)) => ModeSelect::Index(i),
                _ => return Err(Error::arg(format!("unknown mode selection {s:?}"))),
            },
        })
    }
}

impl ModeSelect {
    pub fn as_string(self) -> String {
        match self {
            ModeSelect::Impurity => "impurity".into(),
            ModeSelect::Aggregate => "aggregate".into(),
            ModeSelect::AggregateModulus => "aggregate_abs".into(),
            ModeSelect::Linear(s) if s > 0 => "linear+".into(),
            ModeSelect::Linear(_) => "linear-".into(),
            ModeSelect::IcseEstimate => "icse_estimate".into(),
            ModeSelect::Fragments => "fragments".into(),
            ModeSelect::Critical => "critical".into(),
            ModeSelect::All => "all".into(),
            ModeSelect::Index(i) => format!("index:{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats { csv: true, json: true, svg: true }
    }
}

impl FromStr for Formats {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut f = Formats { csv: false, json: false, svg: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                _ => return Err(Error::arg(format!("unknown format {part:?}"))),
            }
        }
        Ok(f)
    }
}

impl Formats {
    fn names(self) -> Vec<&'static str> {
        [("csv", self.csv), ("json", self.json), ("svg", self.svg)].into_iter().filter_map(|(n, on)| on.then_some(n)).collect()
    }
}

/// Input of one run.
#[derive(Clone, Debug, PartialEq)]
pub enum RunInput {
    Chain(ChainSpec),
    Ssh(SSHSpec),
    Walk(WalkConfig),
    Scan(ScanConfig),
}

/// One invocation of the tool.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub input: RunInput,
    pub output_dir: PathBuf,
    pub precision: PrecisionConfig,
    pub formats: Formats,
    pub modes: Vec<ModeSelect>,
    /// Base points for `winding`.
    pub base_points: Vec<HPComplex>,
    pub samples: usize,
    /// Optional file-name prefix for the artifacts.
    pub name: Option<String>,
}

fn precision_from_json(v: Option<&Value>, default_bits: u32) -> Result<PrecisionConfig> {
    let Some(v) = v else {
        return PrecisionConfig::default().with_bits(default_bits);
    };
    let m = obj(v, "precision")?;
    let bits = match m.get("bits") {
        Some(b) => {
            let b = json_usize(b, "bits")?;
            u32::try_from(b).map_err(|_| Error::arg("bits out of range"))?
        }
        None => default_bits,
    };
    if bits > 1 << 16 {
        return Err(Error::arg("bits must not exceed 65536"));
    }
    let tol = match m.get("tol") {
        Some(t) => number_text(t)?,
        None => crate::numeric::DEFAULT_TOL.to_string(),
    };
    let max_iter = match m.get("max_iter") {
        Some(i) => json_usize(i, "max_iter")?,
        None => DEFAULT_MAX_ITER,
    };
    PrecisionConfig::new(bits, &tol, max_iter)
}

pub fn precision_to_json(p: &PrecisionConfig) -> Value {
    let mut m = Map::new();
    m.insert("bits".into(), p.bits().into());
    m.insert("tol".into(), real_json(p.tol()));
    m.insert("max_iter".into(), p.max_iter().into());
    Value::Object(m)
}

/// Parse a run configuration. `default_bits` applies when the config has
/// no `precision.bits`.
pub fn run_config_from_json(v: &Value, default_bits: u32) -> Result<RunConfig> {
    let m = obj(v, "run config")?;
    let command = Command::from_str(json_str(field(m, "command")?, "command")?)?;
    let precision = precision_from_json(m.get("precision"), default_bits)?;
    let bits = precision.bits();
    let input = match command {
        Command::Walk => RunInput::Walk(walk_config_from_json(field(m, "walk")?)?),
        Command::PhaseScan => RunInput::Scan(scan_config_from_json(field(m, "scan")?)?),
        Command::Ssh => RunInput::Ssh(ssh_spec_from_json(field(m, "ssh")?, bits)?),
        _ => RunInput::Chain(chain_spec_from_json(field(m, "chain")?, bits)?),
    };
    let formats = match m.get("formats") {
        None => Formats::default(),
        Some(f) => {
            let names = array(f, "formats")?.iter().map(|x| json_str(x, "format").map(str::to_string)).collect::<Result<Vec<_>>>()?;
            Formats::from_str(&names.join(","))?
        }
    };
    let modes = match m.get("modes") {
        None => vec![ModeSelect::Impurity, ModeSelect::Aggregate],
        Some(v) => array(v, "modes")?.iter().map(|x| ModeSelect::from_str(json_str(x, "mode")?)).collect::<Result<Vec<_>>>()?,
    };
    let base_points = match m.get("base_points") {
        None => vec![HPComplex::zero(bits)],
        Some(v) => array(v, "base_points")?.iter().map(|z| json_complex(z, bits)).collect::<Result<Vec<_>>>()?,
    };
    let samples = match m.get("samples") {
        Some(s) => json_usize(s, "samples")?.clamp(8, 1 << 20),
        None => 256,
    };
    let name = m.get("name").map(|n| json_str(n, "name").map(str::to_string)).transpose()?;
    if let Some(n) = &name {
        if n.is_empty() || n.contains(['/', '\\']) || n.starts_with('.') {
            return Err(Error::arg("name must be a plain file-name prefix"));
        }
    }
    let output_dir = match m.get("output_dir") {
        Some(d) => PathBuf::from(json_str(d, "output_dir")?),
        None => PathBuf::from("out"),
    };
    Ok(RunConfig { command, input, output_dir, precision, formats, modes, base_points, samples, name })
}

pub fn run_config_to_json(c: &RunConfig) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), c.command.as_str().into());
    if let Some(n) = &c.name {
        m.insert("name".into(), n.clone().into());
    }
    m.insert("output_dir".into(), c.output_dir.to_string_lossy().into_owned().into());
    m.insert("precision".into(), precision_to_json(&c.precision));
    m.insert("formats".into(), Value::Array(c.formats.names().into_iter().map(Value::from).collect()));
    match &c.input {
        RunInput::Chain(s) => m.insert("chain".into(), chain_spec_to_json(s)),
        RunInput::Ssh(s) => m.insert("ssh".into(), ssh_spec_to_json(s)),
        RunInput::Walk(w) => m.insert("walk".into(), walk_config_to_json(w)),
        RunInput::Scan(s) => m.insert("scan".into(), scan_config_to_json(s)),
    };
    m.insert("modes".into(), Value::Array(c.modes.iter().map(|s| s.as_string().into()).collect()));
    m.insert("base_points".into(), Value::Array(c.base_points.iter().map(complex_json).collect()));
    m.insert("samples".into(), c.samples.into());
    Value::Object(m)
}

/// A recipe file: one run or `{"runs": [...]}`.
pub fn parse_recipe(text: &str, default_bits: u32) -> Result<Vec<RunConfig>> {
    let v: Value = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    match v.get("runs") {
        Some(runs) => array(runs, "runs")?.iter().map(|r| run_config_from_json(r, default_bits)).collect(),
        None => Ok(vec![run_config_from_json(&v, default_bits)?]),
    }
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8")
}

fn write_row<I, S>(w: &mut csv::Writer<Vec<u8>>, row: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).expect("in-memory writer");
}

fn txt(x: &Float) -> String {
    real_to_string(x)
}

/// `j,abs,re,im` per site (1-based).
pub fn profile_csv(p: &ModeProfile) -> String {
    let mut w = csv_writer();
    write_row(&mut w, ["j", "abs", "re", "im"]);
    for (j, z) in p.amplitudes.iter().enumerate() {
        write_row(&mut w, [(j + 1).to_string(), txt(&z.abs()), txt(z.re()), txt(z.im())]);
    }
    finish(w)
}

/// `index,re,im,residual,left_residual,clustered`.
pub fn eigenvalues_csv(s: &Spectrum) -> String {
    let mut w = csv_writer();
    write_row(&mut w, ["index", "re", "im", "residual", "left_residual", "clustered"]);
    for i in 0..s.len() {
        let e = &s.eigenvalues[i];
        write_row(
            &mut w,
            [i.to_string(), txt(e.re()), txt(e.im()), txt(&s.residuals[i]), txt(&s.left_residuals[i]), s.clustered[i].to_string()],
        );
    }
    finish(w)
}

/// `index,E_re,E_im,kd_re,kd_im,residual_abs,residual_re,residual_im`.
pub fn quantization_csv(rows: &[QuantizationResidual]) -> String {
    let mut w = csv_writer();
    write_row(&mut w, ["index", "E_re", "E_im", "kd_re", "kd_im", "residual_abs", "residual_re", "residual_im"]);
    for (i, r) in rows.iter().enumerate() {
        write_row(
            &mut w,
            [
                i.to_string(),
                txt(r.energy.re()),
                txt(r.energy.im()),
                txt(r.kd.re()),
                txt(r.kd.im()),
                txt(&r.value.abs()),
                txt(r.value.re()),
                txt(r.value.im()),
            ],
        );
    }
    finish(w)
}

/// `ratio,delta,value,flag`, ratio-major.
pub fn scan_csv(s: &PhaseScan) -> String {
    let mut w = csv_writer();
    write_row(&mut w, ["ratio", "delta", "value", "flag"]);
    for (i, r) in s.ratio_axis.iter().enumerate() {
        for (k, d) in s.delta_axis.iter().enumerate() {
            write_row(&mut w, [format!("{r:?}"), format!("{d:?}"), format!("{:?}", s.values[i][k]), u8::from(s.flags[i][k]).to_string()]);
        }
    }
    finish(w)
}

/// Read a table written by [`scan_csv`].
pub fn parse_scan_csv(text: &str) -> Result<PhaseScan> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| fmt_err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["ratio", "delta", "value", "flag"] {
        return Err(fmt_err("scan CSV header must be ratio,delta,value,flag"));
    }
    let mut cells: Vec<(f64, f64, f64, bool)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| fmt_err(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            let t = rec.get(i).ok_or_else(|| fmt_err("short scan row"))?;
            let v: f64 = t.trim().parse().map_err(|_| fmt_err(format!("invalid number {t:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(fmt_err("scan values must be finite"))
            }
        };
        let flag = match rec.get(3) {
            Some("0") => false,
            Some("1") => true,
            _ => return Err(fmt_err("flag must be 0 or 1")),
        };
        cells.push((num(0)?, num(1)?, num(2)?, flag));
    }
    let mut ratio_axis: Vec<f64> = Vec::new();
    for c in &cells {
        if ratio_axis.last() != Some(&c.0) {
            ratio_axis.push(c.0);
        }
    }
    if ratio_axis.is_empty() || !cells.len().is_multiple_of(ratio_axis.len()) {
        return Err(fmt_err("scan CSV is not a full grid"));
    }
    let cols = cells.len() / ratio_axis.len();
    let delta_axis: Vec<f64> = cells[..cols].iter().map(|c| c.1).collect();
    let mut values = Vec::with_capacity(ratio_axis.len());
    let mut flags = Vec::with_capacity(ratio_axis.len());
    for (i, row) in cells.chunks(cols).enumerate() {
        for (k, c) in row.iter().enumerate() {
            if c.0 != ratio_axis[i] || c.1 != delta_axis[k] {
                return Err(fmt_err("scan CSV rows are not in ratio-major grid order"));
            }
        }
        values.push(row.iter().map(|c| c.2).collect());
        flags.push(row.iter().map(|c| c.3).collect());
    }
    Ok(PhaseScan { ratio_axis, delta_axis, values, flags, x: 0 })
}

/// `x,p_raw,p_normalized`.
pub fn walk_csv(raw: &[f64], normalized: &[f64]) -> String {
    let mut w = csv_writer();
    write_row(&mut w, ["x", "p_raw", "p_normalized"]);
    for (x, (a, b)) in raw.iter().zip(normalized).enumerate() {
        write_row(&mut w, [x.to_string(), format!("{a:?}"), format!("{b:?}")]);
    }
    finish(w)
}

/// Run header of a walk: coin, impurity, steps, lattice and norm trace.
pub fn walk_header_json(c: &WalkConfig, norm_trace: &[f64]) -> Value {
    let mut coin = Map::new();
    coin.insert("r".into(), f64_json(c.coin.r()));
    coin.insert("ell".into(), f64_json(c.coin.ell()));
    coin.insert("unitary".into(), c.coin.is_unitary().into());
    let mut lattice = Map::new();
    lattice.insert("L".into(), c.len.into());
    lattice.insert("x0".into(), c.start.into());
    lattice.insert("boundary".into(), c.boundary.as_str().into());
    lattice.insert("coin_state".into(), coin_state_json(&c.coin_state));
    let mut m = Map::new();
    m.insert("coin".into(), Value::Object(coin));
    m.insert("impurity".into(), impurity_to_json(&c.impurity));
    m.insert("steps".into(), c.steps.into());
    m.insert("lattice".into(), Value::Object(lattice));
    m.insert("norm_trace".into(), Value::Array(norm_trace.iter().map(|&n| f64_json(n)).collect()));
    Value::Object(m)
}

pub fn fragmentation_json(r: &FragmentationReport) -> Value {
    let list = |v: &[f64]| Value::Array(v.iter().map(|&x| f64_json(x)).collect());
    let profile = |p: &Option<ModeProfile>| match p {
        Some(p) => Value::Array(p.amplitudes.iter().map(|z| real_json(z.re())).collect()),
        None => Value::Null,
    };
    let mut m = Map::new();
    m.insert("full".into(), Value::Array(r.full.amplitudes.iter().map(|z| real_json(z.re())).collect()));
    m.insert("left".into(), profile(&r.left));
    m.insert("right".into(), profile(&r.right));
    m.insert("left_deviation".into(), list(&r.left_deviation));
    m.insert("right_deviation".into(), list(&r.right_deviation));
    m.insert("max_deviation".into(), f64_json(r.max_deviation()));
    m.insert("impurity_weight".into(), f64_json(r.impurity_weight));
    Value::Object(m)
}

#[cfg(test)]
mod tests;
