//! Command-line front end: `bound`, `sweep`, `minlen`, `region`, `selftest`.
//!
//! Rates are given in bits at the command line and converted to nats once.
//! Exit codes: 0 ok, 1 self-test failure, 2 usage, 3 numerical failure, 4 trivial
//! or infeasible result.

mod selftest;

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::channels::ChannelFamily;
use crate::compare::{
    capacity_limit, dominance_boundary, dominance_region, evaluate_bound, min_blocklength, BoundDetail, BoundKind,
    BoundValue, Contender, EvalOptions, MinLenQuery,
};
use crate::error::Error;
use crate::numerics::QuadratureSpec;
use crate::sp59::ConeMode;
use crate::sp67::VfConstant;

pub use selftest::{run_suites, CheckResult, Fault, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TRIVIAL: i32 = 4;

const LN_10: f64 = std::f64::consts::LN_10;
const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Parser, Debug)]
#[command(name = "spherebound", version, about = "Sphere-packing and random-coding bounds on block error probability")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Machine-readable JSON output
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for sweeps and region maps (default: available parallelism)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Relative tolerance of numerical integration
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub quad_tol: f64,
    /// Use the original ln 4 constant in the VF bound instead of ln 8
    #[arg(long, global = true)]
    pub vf_original: bool,
    /// Cone half-angle used by sp59
    #[arg(long, global = true, value_enum, default_value_t = Cone::Theta1)]
    pub sp59_cone: Cone,
    #[arg(long, global = true, hide = true, value_enum)]
    pub inject_fault: Option<Fault>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Cone {
    #[value(name = "theta1")]
    Theta1,
    #[value(name = "theta-star")]
    ThetaStar,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate one bound at one operating point
    Bound(BoundArgs),
    /// Sweep Eb/N0, erasure probability or block length and write CSV or JSON
    Sweep(SweepArgs),
    /// Minimal block length for a target error probability at given gaps to capacity
    Minlen(MinlenArgs),
    /// Map which converse bound is tightest over rates and block lengths
    Region(RegionArgs),
    /// Run the invariant suites
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub channel: String,
    #[arg(long, allow_hyphen_values = true)]
    pub ebn0_db: Option<f64>,
    /// Erasure probability (bec)
    #[arg(long)]
    pub p: Option<f64>,
    /// Block length in channel uses
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub rate_bits: f64,
    #[arg(long, default_value_t = 1)]
    pub list_size: u64,
    /// One of isp, vf, sp67, sp59, rcb, clb
    #[arg(long)]
    pub bound: String,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// Flat `key = value` file mirroring the flag names; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub channel: Option<String>,
    /// Sweep variable: ebn0_db, p or n
    #[arg(long)]
    pub var: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub step: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ebn0_db: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub rate_bits: Option<f64>,
    #[arg(long)]
    pub list_size: Option<u64>,
    /// Comma-separated subset of isp, vf, sp67, sp59, rcb, clb
    #[arg(long)]
    pub bounds: Option<String>,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json (default: json with --json or a .json path, else csv)
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args, Debug)]
pub struct MinlenArgs {
    #[arg(long)]
    pub channel: String,
    #[arg(long)]
    pub rate_bits: f64,
    #[arg(long)]
    pub target_pe: f64,
    /// Comma-separated subset of isp, vf, sp67, sp59, rcb
    #[arg(long)]
    pub bound: String,
    /// Comma-separated gaps to capacity: dB above the limit (AWGN) or erasure
    /// probability below it (bec)
    #[arg(long, allow_hyphen_values = true)]
    pub gaps: String,
    #[arg(long, default_value_t = 1)]
    pub list_size: u64,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[arg(long)]
    pub channel: String,
    /// Comma-separated rates in bits per channel use
    #[arg(long)]
    pub rates_bits: String,
    /// Comma-separated block lengths
    #[arg(long)]
    pub ns: String,
    #[arg(long)]
    pub target_pe: f64,
    #[arg(long, value_enum, default_value_t = ContenderArg::Isp)]
    pub contender: ContenderArg,
    /// Report, per rate, the smallest N in [min ns, max ns] where the contender beats sp59
    #[arg(long)]
    pub boundary: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ContenderArg {
    Isp,
    Vf,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Restrict to these suites (repeatable)
    #[arg(long, value_enum)]
    pub suite: Vec<Suite>,
    /// Write a per-invariant JSON report to PATH, or stdout without a value
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    pub report: Option<String>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(m: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: m.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Domain(_) | Error::UnsupportedChannel(_) => EXIT_USAGE,
        Error::Numerical { .. } => EXIT_NUMERICAL,
        Error::RateTooLow(_) | Error::Infeasible(_) => EXIT_TRIVIAL,
    }
}

/// 12 significant digits, shortest round-trip form.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else if (1e-5..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn fmt_db(x: f64) -> String {
    format!("{x:.4}")
}

fn round_sig(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_db(x: f64) -> f64 {
    fmt_db(x).parse().unwrap_or(x)
}

fn num_json(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    let g = &cli.global;
    if !(g.quad_tol > 0.0 && g.quad_tol < 1e-2) {
        return Err(CliError::usage(format!("--quad-tol must lie in (0, 0.01), got {}", g.quad_tol)));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = g.jobs {
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
    match &cli.command {
        Command::Bound(a) => cmd_bound(g, a, out),
        Command::Sweep(a) => cmd_sweep(g, a, out, &pool),
        Command::Minlen(a) => cmd_minlen(g, a, out, &pool),
        Command::Region(a) => cmd_region(g, a, out, &pool),
        Command::Selftest(a) => cmd_selftest(g, a, out),
    }
}

pub fn eval_options(g: &GlobalOpts, list_size: u64) -> EvalOptions {
    EvalOptions {
        quad: QuadratureSpec::default().with_rel_tol(g.quad_tol),
        vf_constant: if g.vf_original { VfConstant::Original } else { VfConstant::Corrected },
        cone: match g.sp59_cone {
            Cone::Theta1 => ConeMode::ExactTheta1,
            Cone::ThetaStar => ConeMode::ShannonThetaStar,
        },
        list_size,
    }
}

fn rate_nats(bits: f64) -> CliResult<f64> {
    if !(bits > 0.0 && bits.is_finite()) {
        return Err(CliError::usage(format!("--rate-bits must be positive, got {bits}")));
    }
    Ok(bits * LN_2)
}

fn target_ln(pe: f64) -> CliResult<f64> {
    if !(pe > 0.0 && pe < 1.0) {
        return Err(CliError::usage(format!("--target-pe must lie in (0, 1), got {pe}")));
    }
    Ok(pe.ln())
}

fn operating_point(family: ChannelFamily, ebn0_db: Option<f64>, p: Option<f64>) -> CliResult<f64> {
    match (family, ebn0_db, p) {
        (ChannelFamily::Bec, None, Some(p)) => Ok(p),
        (ChannelFamily::MPsk { .. }, Some(e), None) => Ok(e),
        (ChannelFamily::Bec, _, _) => Err(CliError::usage("bec needs --p (and no --ebn0-db)")),
        (_, _, _) => Err(CliError::usage(format!("{} needs --ebn0-db (and no --p)", family.name()))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    let v: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::usage(format!("bad {what} '{t}'"))))
        .collect::<CliResult<_>>()?;
    if v.is_empty() {
        return Err(CliError::usage(format!("{what} list is empty")));
    }
    Ok(v)
}

fn parse_bounds(s: &str, family: ChannelFamily) -> CliResult<Vec<BoundKind>> {
    let kinds = parse_list::<String>(s, "bound")?.iter().map(|b| BoundKind::parse(b)).collect::<Result<Vec<_>, _>>()?;
    for k in &kinds {
        k.check_family(family)?;
    }
    Ok(kinds)
}

fn diagnostics(detail: &BoundDetail) -> Map<String, Value> {
    let mut m = Map::new();
    match detail {
        BoundDetail::Isp(r) => {
            m.insert("x_opt".into(), num_json(r.x_opt));
            m.insert("s_opt".into(), num_json(r.s_opt));
            m.insert("rho_opt".into(), num_json(r.rho_opt));
            m.insert("exponent".into(), num_json(r.exponent));
            m.insert("o1".into(), num_json(r.o1));
            m.insert("o2".into(), num_json(r.o2));
            m.insert("x_capped".into(), json!(r.x_capped));
        }
        BoundDetail::Vf(r) => {
            m.insert("x_opt".into(), num_json(r.x_opt));
            m.insert("rho_opt".into(), num_json(r.rho_opt));
            m.insert("exponent".into(), num_json(r.exponent));
            m.insert("composition_penalty".into(), num_json(r.composition_penalty));
            m.insert("x_capped".into(), json!(r.x_capped));
        }
        BoundDetail::Sp67(r) => {
            m.insert("p_min".into(), num_json(r.p_min));
            m.insert("rho_opt".into(), num_json(r.rho_opt));
        }
        BoundDetail::Sp59(r) => {
            m.insert("theta".into(), num_json(r.cone.theta));
            let mode = match r.cone.mode {
                ConeMode::ExactTheta1 => "theta1",
                ConeMode::ShannonThetaStar => "theta-star",
            };
            m.insert("cone".into(), json!(mode));
            m.insert("ln_solid_angle_ratio".into(), num_json(r.cone.ln_solid_angle_ratio));
        }
        BoundDetail::Rcb { exponent, rho } => {
            m.insert("exponent".into(), num_json(*exponent));
            m.insert("rho_opt".into(), num_json(*rho));
        }
        BoundDetail::Clb { threshold } => {
            m.insert("threshold".into(), num_json(*threshold));
        }
    }
    m
}

fn cmd_bound(g: &GlobalOpts, a: &BoundArgs, out: &mut dyn Write) -> CliResult<i32> {
    let family = ChannelFamily::parse(&a.channel)?;
    let kind = BoundKind::parse(&a.bound)?;
    kind.check_family(family)?;
    let point = operating_point(family, a.ebn0_db, a.p)?;
    let rate = rate_nats(a.rate_bits)?;
    let opts = eval_options(g, a.list_size);
    let v = evaluate_bound(kind, family, point, a.n, rate, &opts)?;
    let point_key = if family.is_awgn() { "ebn0_db" } else { "p" };
    let mut report = Map::new();
    report.insert("bound".into(), json!(kind.name()));
    report.insert("channel".into(), json!(family.name()));
    report.insert(point_key.into(), if family.is_awgn() { json!(round_db(point)) } else { num_json(point) });
    report.insert("n".into(), json!(a.n));
    report.insert("rate_bits".into(), num_json(a.rate_bits));
    report.insert("list_size".into(), json!(a.list_size));
    let code = match &v {
        BoundValue::Value { ln_pe, detail } => {
            report.insert("status".into(), json!("ok"));
            report.insert("ln_pe".into(), num_json(*ln_pe));
            report.insert("log10_pe".into(), num_json(ln_pe / LN_10));
            report.insert("diagnostics".into(), Value::Object(diagnostics(detail)));
            EXIT_OK
        }
        BoundValue::Trivial => {
            report.insert("status".into(), json!("trivial"));
            EXIT_TRIVIAL
        }
    };
    if g.json {
        serde_json::to_writer_pretty(&mut *out, &Value::Object(report))
            .map_err(|e| CliError::usage(format!("cannot write output: {e}")))?;
        writeln!(out)?;
    } else {
        write_human(out, &report, "")?;
    }
    Ok(code)
}

fn write_human(out: &mut dyn Write, m: &Map<String, Value>, indent: &str) -> std::io::Result<()> {
    for (k, v) in m {
        match v {
            Value::Object(inner) => {
                writeln!(out, "{indent}{k}:")?;
                write_human(out, inner, &format!("{indent}  "))?;
            }
            Value::String(s) => writeln!(out, "{indent}{k:<22}{s}")?,
            Value::Number(x) if k == "ebn0_db" => {
                writeln!(out, "{indent}{k:<22}{}", fmt_db(x.as_f64().unwrap_or(f64::NAN)))?
            }
            Value::Number(x) if x.is_f64() => writeln!(out, "{indent}{k:<22}{}", fmt_num(x.as_f64().unwrap()))?,
            other => writeln!(out, "{indent}{k:<22}{other}")?,
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub family: ChannelFamily,
    pub var: SweepVar,
    pub values: Vec<f64>,
    pub n: Option<u64>,
    pub point: Option<f64>,
    pub rate_bits: f64,
    pub list_size: u64,
    pub bounds: Vec<BoundKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    Ebn0Db,
    P,
    N,
}

impl SweepVar {
    fn parse(s: &str) -> CliResult<Self> {
        match s {
            "ebn0_db" | "ebn0-db" => Ok(SweepVar::Ebn0Db),
            "p" => Ok(SweepVar::P),
            "n" => Ok(SweepVar::N),
            o => Err(CliError::usage(format!("unknown sweep variable '{o}' (expected ebn0_db, p, n)"))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            SweepVar::Ebn0Db => "ebn0_db",
            SweepVar::P => "p",
            SweepVar::N => "n",
        }
    }

    fn format(&self, x: f64) -> String {
        match self {
            SweepVar::Ebn0Db => fmt_db(x),
            SweepVar::P => fmt_num(x),
            SweepVar::N => format!("{}", x as u64),
        }
    }

    fn json(&self, x: f64) -> Value {
        match self {
            SweepVar::Ebn0Db => json!(round_db(x)),
            SweepVar::P => num_json(x),
            SweepVar::N => json!(x as u64),
        }
    }
}

/// Read a `key = value` file. Blank lines and lines starting with `#` are skipped;
/// keys are normalized to the dashed flag spelling.
pub fn read_config(path: &Path) -> CliResult<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut m = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{}:{}: expected 'key = value'", path.display(), i + 1)))?;
        m.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(m)
}

fn merged<T: std::str::FromStr>(flag: Option<T>, file: &HashMap<String, String>, key: &str) -> CliResult<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| CliError::usage(format!("config key '{key}': cannot parse '{s}'"))),
    }
}

const SWEEP_KEYS: [&str; 14] = [
    "channel",
    "var",
    "start",
    "stop",
    "step",
    "count",
    "n",
    "ebn0-db",
    "p",
    "rate-bits",
    "list-size",
    "bounds",
    "out",
    "format",
];

/// Merge flags over the optional config file and validate.
pub fn resolve_sweep(a: &SweepArgs) -> CliResult<(SweepSpec, Option<PathBuf>, Option<String>)> {
    let file = match &a.config {
        Some(p) => read_config(p)?,
        None => HashMap::new(),
    };
    if let Some(k) = file.keys().find(|k| !SWEEP_KEYS.contains(&k.as_str())) {
        return Err(CliError::usage(format!("unknown config key '{k}'")));
    }
    let need = |v: Option<String>, k: &str| v.ok_or_else(|| CliError::usage(format!("sweep needs --{k}")));
    let family = ChannelFamily::parse(&need(merged(a.channel.clone(), &file, "channel")?, "channel")?)?;
    let var = SweepVar::parse(&need(merged(a.var.clone(), &file, "var")?, "var")?)?;
    let start: Option<f64> = merged(a.start, &file, "start")?;
    let stop: Option<f64> = merged(a.stop, &file, "stop")?;
    let step: Option<f64> = merged(a.step, &file, "step")?;
    let count: Option<usize> = merged(a.count, &file, "count")?;
    let n: Option<u64> = merged(a.n, &file, "n")?;
    let ebn0: Option<f64> = merged(a.ebn0_db, &file, "ebn0-db")?;
    let p: Option<f64> = merged(a.p, &file, "p")?;
    let rate_bits: f64 =
        merged(a.rate_bits, &file, "rate-bits")?.ok_or_else(|| CliError::usage("sweep needs --rate-bits"))?;
    rate_nats(rate_bits)?;
    let list_size: u64 = merged(a.list_size, &file, "list-size")?.unwrap_or(1);
    let bounds = parse_bounds(&need(merged(a.bounds.clone(), &file, "bounds")?, "bounds")?, family)?;
    let out: Option<PathBuf> = merged(a.out.clone(), &file, "out")?;
    let format: Option<String> = merged(a.format.clone(), &file, "format")?;

    let (start, stop) = match (start, stop) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::usage("sweep needs --start and --stop")),
    };
    let values = match (step, count) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either --step or --count, not both")),
        (None, None) => return Err(CliError::usage("sweep needs --step or --count")),
        (None, Some(c)) => match c {
            0 => vec![],
            1 => vec![start],
            c => (0..c).map(|i| round_sig(start + (stop - start) * i as f64 / (c - 1) as f64)).collect(),
        },
        (Some(h), None) => {
            if !(h != 0.0 && h.is_finite()) {
                return Err(CliError::usage("--step must be nonzero"));
            }
            let k = ((stop - start) / h + 1e-9).floor();
            if k < 0.0 {
                vec![]
            } else {
                (0..=k as usize).map(|i| round_sig(start + h * i as f64)).collect()
            }
        }
    };
    if values.is_empty() {
        return Err(CliError::usage("sweep range is empty"));
    }
    match (var, family) {
        (SweepVar::Ebn0Db, ChannelFamily::Bec) => return Err(CliError::usage("bec sweeps use --var p")),
        (SweepVar::P, ChannelFamily::MPsk { .. }) => return Err(CliError::usage("AWGN sweeps use --var ebn0_db")),
        _ => {}
    }
    let point = if var == SweepVar::N {
        if values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
            return Err(CliError::usage("block-length sweeps need positive integer values"));
        }
        Some(operating_point(family, ebn0, p)?)
    } else {
        if n.is_none() {
            return Err(CliError::usage("sweep needs --n"));
        }
        None
    };
    let spec = SweepSpec { family, var, values, n, point, rate_bits, list_size, bounds };
    Ok((spec, out, format))
}

pub fn sweep_columns(spec: &SweepSpec) -> Vec<String> {
    let mut cols = vec!["var".to_string()];
    for b in &spec.bounds {
        for suffix in ["ln_pe", "log10_pe", "status"] {
            cols.push(format!("{}_{suffix}", b.name()));
        }
    }
    cols
}

/// One evaluated cell of a sweep row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub ln_pe: Option<f64>,
    pub status: String,
}

pub fn sweep_rows(spec: &SweepSpec, opts: &EvalOptions) -> Vec<Vec<SweepCell>> {
    spec.values
        .par_iter()
        .map(|&x| {
            let (point, n) = match spec.var {
                SweepVar::N => (spec.point.unwrap(), x as u64),
                _ => (x, spec.n.unwrap()),
            };
            spec.bounds
                .iter()
                .map(|&k| match evaluate_bound(k, spec.family, point, n, spec.rate_bits * LN_2, opts) {
                    Ok(BoundValue::Value { ln_pe, .. }) if ln_pe.is_finite() => {
                        SweepCell { ln_pe: Some(round_sig(ln_pe)), status: "ok".into() }
                    }
                    Ok(_) => SweepCell { ln_pe: None, status: "trivial".into() },
                    Err(e) => SweepCell { ln_pe: None, status: e.code().into() },
                })
                .collect()
        })
        .collect()
}

fn sweep_meta(spec: &SweepSpec, g: &GlobalOpts) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!("sweep"));
    m.insert("channel".into(), json!(spec.family.name()));
    m.insert("var".into(), json!(spec.var.name()));
    if let Some(n) = spec.n {
        m.insert("n".into(), json!(n));
    }
    if let Some(p) = spec.point {
        let key = if spec.family.is_awgn() { "ebn0_db" } else { "p" };
        m.insert(key.into(), num_json(p));
    }
    m.insert("rate_bits".into(), num_json(spec.rate_bits));
    m.insert("list_size".into(), json!(spec.list_size));
    m.insert("bounds".into(), json!(spec.bounds.iter().map(|b| b.name()).collect::<Vec<_>>()));
    m.insert("columns".into(), json!(sweep_columns(spec)));
    m.insert("quad_tol".into(), num_json(g.quad_tol));
    m.insert("vf_original".into(), json!(g.vf_original));
    m.insert("sp59_cone".into(), json!(if g.sp59_cone == Cone::Theta1 { "theta1" } else { "theta-star" }));
    Value::Object(m)
}

fn cmd_sweep(g: &GlobalOpts, a: &SweepArgs, out: &mut dyn Write, pool: &rayon::ThreadPool) -> CliResult<i32> {
    let (spec, path, format) = resolve_sweep(a)?;
    let json_out = match format.as_deref() {
        Some("json") => true,
        Some("csv") => false,
        Some(o) => return Err(CliError::usage(format!("unknown format '{o}' (expected csv, json)"))),
        None => g.json || path.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json")),
    };
    // open the destination before doing any work so a bad path fails fast
    let mut file_sink = match &path {
        Some(p) => Some(BufWriter::new(
            File::create(p).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => None,
    };
    let opts = eval_options(g, spec.list_size);
    let rows = pool.install(|| sweep_rows(&spec, &opts));
    let sink: &mut dyn Write = match file_sink.as_mut() {
        Some(f) => f,
        None => out,
    };
    if json_out {
        let cols = sweep_columns(&spec);
        let json_rows: Vec<Value> = spec
            .values
            .iter()
            .zip(&rows)
            .map(|(&x, cells)| {
                let mut m = Map::new();
                m.insert(cols[0].clone(), spec.var.json(x));
                for (i, c) in cells.iter().enumerate() {
                    m.insert(cols[1 + 3 * i].clone(), c.ln_pe.map_or(Value::Null, num_json));
                    m.insert(cols[2 + 3 * i].clone(), c.ln_pe.map_or(Value::Null, |l| num_json(l / LN_10)));
                    m.insert(cols[3 + 3 * i].clone(), json!(c.status));
                }
                Value::Object(m)
            })
            .collect();
        let doc = json!({ "meta": sweep_meta(&spec, g), "rows": json_rows });
        serde_json::to_writer_pretty(&mut *sink, &doc).map_err(|e| CliError::usage(format!("write failed: {e}")))?;
        writeln!(sink)?;
    } else {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut *sink);
        let io = |e: csv::Error| CliError::usage(format!("write failed: {e}"));
        w.write_record(sweep_columns(&spec)).map_err(io)?;
        for (&x, cells) in spec.values.iter().zip(&rows) {
            let mut rec = vec![spec.var.format(x)];
            for c in cells {
                rec.push(c.ln_pe.map_or(String::new(), fmt_num));
                rec.push(c.ln_pe.map_or(String::new(), |l| fmt_num(l / LN_10)));
                rec.push(c.status.clone());
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()?;
    }
    sink.flush()?;
    let any_ok = rows.iter().any(|r| r.iter().any(|c| c.status == "ok" || c.status == "trivial"));
    if any_ok {
        Ok(EXIT_OK)
    } else {
        let first = rows.iter().flatten().next().map(|c| c.status.as_str()).unwrap_or("numerical");
        Ok(match first {
            "usage" | "domain" | "unsupported" => EXIT_USAGE,
            "rate-too-low" | "infeasible" => EXIT_TRIVIAL,
            _ => EXIT_NUMERICAL,
        })
    }
}

// ---------------------------------------------------------------------------
// minlen

fn cmd_minlen(g: &GlobalOpts, a: &MinlenArgs, out: &mut dyn Write, pool: &rayon::ThreadPool) -> CliResult<i32> {
    let family = ChannelFamily::parse(&a.channel)?;
    let rate = rate_nats(a.rate_bits)?;
    let target = target_ln(a.target_pe)?;
    let bounds = parse_bounds(&a.bound, family)?;
    if bounds.contains(&BoundKind::Clb) {
        return Err(CliError::usage("clb has no block length; choose from isp, vf, sp67, sp59, rcb"));
    }
    let gaps: Vec<f64> = parse_list(&a.gaps, "gap")?;
    let opts = eval_options(g, a.list_size);
    let clb = capacity_limit(family, rate, &opts.quad)?;
    let point_of = |gap: f64| if family.is_awgn() { clb + gap } else { clb - gap };
    let jobs: Vec<(f64, BoundKind)> = gaps.iter().flat_map(|&gp| bounds.iter().map(move |&b| (gp, b))).collect();
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(gap, b)| {
                let q = MinLenQuery { bound: b, family, rate_nats: rate, target_ln_pe: target, point: point_of(gap) };
                min_blocklength(&q, &opts)
            })
            .collect()
    });
    let any_ok = results.iter().any(|r| r.is_ok());
    let point_key = if family.is_awgn() { "ebn0_db" } else { "p" };
    if g.json {
        let rows: Vec<Value> = gaps
            .iter()
            .enumerate()
            .map(|(i, &gap)| {
                let mut m = Map::new();
                m.insert("gap".into(), num_json(gap));
                let pt = point_of(gap);
                m.insert(point_key.into(), if family.is_awgn() { json!(round_db(pt)) } else { num_json(pt) });
                for (j, b) in bounds.iter().enumerate() {
                    let v = match &results[i * bounds.len() + j] {
                        Ok(r) => json!({"status": "ok", "n": r.n, "largest_excluded": r.largest_excluded}),
                        Err(e) => json!({"status": e.code(), "message": e.to_string()}),
                    };
                    m.insert(b.name().into(), v);
                }
                Value::Object(m)
            })
            .collect();
        let meta = json!({
            "command": "minlen",
            "channel": family.name(),
            "rate_bits": num_json(a.rate_bits),
            "target_pe": num_json(a.target_pe),
            "capacity_limit": if family.is_awgn() { json!(round_db(clb)) } else { num_json(clb) },
            "bounds": bounds.iter().map(|b| b.name()).collect::<Vec<_>>(),
        });
        serde_json::to_writer_pretty(&mut *out, &json!({"meta": meta, "rows": rows}))
            .map_err(|e| CliError::usage(format!("write failed: {e}")))?;
        writeln!(out)?;
    } else {
        let clb_s = if family.is_awgn() { format!("{} dB", fmt_db(clb)) } else { format!("p = {}", fmt_num(clb)) };
        writeln!(out, "# capacity limit at rate {} bits: {clb_s}", fmt_num(a.rate_bits))?;
        let mut header = format!("{:>10} {:>12}", "gap", point_key);
        for b in &bounds {
            header.push_str(&format!(" {:>12}", b.name()));
        }
        writeln!(out, "{header}")?;
        for (i, &gap) in gaps.iter().enumerate() {
            let pt = point_of(gap);
            let pt_s = if family.is_awgn() { fmt_db(pt) } else { fmt_num(pt) };
            let mut line = format!("{:>10} {:>12}", fmt_num(gap), pt_s);
            for j in 0..bounds.len() {
                let cell = match &results[i * bounds.len() + j] {
                    Ok(r) => r.n.to_string(),
                    Err(e) => e.code().to_string(),
                };
                line.push_str(&format!(" {cell:>12}"));
            }
            writeln!(out, "{line}")?;
        }
    }
    if any_ok {
        Ok(EXIT_OK)
    } else {
        Ok(results.iter().find_map(|r| r.as_ref().err()).map_or(EXIT_NUMERICAL, exit_code))
    }
}

// ---------------------------------------------------------------------------
// region

fn cmd_region(g: &GlobalOpts, a: &RegionArgs, out: &mut dyn Write, pool: &rayon::ThreadPool) -> CliResult<i32> {
    let family = ChannelFamily::parse(&a.channel)?;
    if !family.is_awgn() {
        return Err(CliError::usage("region maps compare against sp59 and need an AWGN channel"));
    }
    let rates_bits: Vec<f64> = parse_list(&a.rates_bits, "rate")?;
    for &r in &rates_bits {
        rate_nats(r)?;
    }
    let ns: Vec<u64> = parse_list(&a.ns, "block length")?;
    if ns.contains(&0) {
        return Err(CliError::usage("block lengths must be positive"));
    }
    let target = target_ln(a.target_pe)?;
    let contender = match a.contender {
        ContenderArg::Isp => Contender::Isp,
        ContenderArg::Vf => Contender::Vf,
    };
    let opts = eval_options(g, 1);
    let mut sink_file = match &a.out {
        Some(p) => Some(BufWriter::new(
            File::create(p).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => None,
    };
    let sink: &mut dyn Write = match sink_file.as_mut() {
        Some(f) => f,
        None => out,
    };
    let db = |x: Option<f64>| x.map_or(String::new(), fmt_db);
    let dbj = |x: Option<f64>| x.map_or(Value::Null, |v| json!(round_db(v)));
    let code;
    if a.boundary {
        let (lo, hi) = (*ns.iter().min().unwrap(), *ns.iter().max().unwrap());
        let res: Vec<_> = pool.install(|| {
            rates_bits
                .par_iter()
                .map(|&r| dominance_boundary(r * LN_2, target, family, contender, lo, hi, &opts))
                .collect()
        });
        code = if res.iter().any(|r| r.is_ok()) { EXIT_OK } else { EXIT_NUMERICAL };
        if g.json {
            let rows: Vec<Value> = rates_bits
                .iter()
                .zip(&res)
                .map(|(&r, v)| match v {
                    Ok(n) => json!({"rate_bits": num_json(r), "boundary_n": n, "status": "ok"}),
                    Err(e) => json!({"rate_bits": num_json(r), "boundary_n": null, "status": e.code()}),
                })
                .collect();
            let meta = json!({"command": "region", "mode": "boundary", "channel": family.name(),
                "target_pe": num_json(a.target_pe), "n_range": [lo, hi]});
            serde_json::to_writer_pretty(&mut *sink, &json!({"meta": meta, "rows": rows}))
                .map_err(|e| CliError::usage(format!("write failed: {e}")))?;
            writeln!(sink)?;
        } else {
            writeln!(sink, "rate_bits,boundary_n,status")?;
            for (&r, v) in rates_bits.iter().zip(&res) {
                match v {
                    Ok(n) => writeln!(sink, "{},{},ok", fmt_num(r), n.map_or(String::new(), |n| n.to_string()))?,
                    Err(e) => writeln!(sink, "{},,{}", fmt_num(r), e.code())?,
                }
            }
        }
    } else {
        let rates: Vec<f64> = rates_bits.iter().map(|r| r * LN_2).collect();
        let cells = pool.install(|| dominance_region(&rates, &ns, target, family, contender, &opts))?;
        code = if cells.iter().any(|c| c.winner.is_some()) { EXIT_OK } else { EXIT_NUMERICAL };
        if g.json {
            let rows: Vec<Value> = cells
                .iter()
                .map(|c| {
                    json!({
                        "rate_bits": num_json(c.rate / LN_2),
                        "n": c.n,
                        "winner": c.winner.map(|w| w.name()),
                        "sp59_db": dbj(c.sp59_db),
                        "isp_or_vf_db": dbj(c.isp_or_vf_db),
                        "clb_db": dbj(c.clb_db),
                        "diagnostics": c.diagnostics,
                    })
                })
                .collect();
            let meta = json!({"command": "region", "mode": "map", "channel": family.name(),
                "target_pe": num_json(a.target_pe),
                "contender": if contender == Contender::Isp { "isp" } else { "vf" }});
            serde_json::to_writer_pretty(&mut *sink, &json!({"meta": meta, "rows": rows}))
                .map_err(|e| CliError::usage(format!("write failed: {e}")))?;
            writeln!(sink)?;
        } else {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut *sink);
            let io = |e: csv::Error| CliError::usage(format!("write failed: {e}"));
            w.write_record(["rate_bits", "n", "winner", "sp59_db", "isp_or_vf_db", "clb_db", "diagnostics"])
                .map_err(io)?;
            for c in &cells {
                w.write_record([
                    fmt_num(c.rate / LN_2),
                    c.n.to_string(),
                    c.winner.map_or(String::new(), |w| w.name().to_string()),
                    db(c.sp59_db),
                    db(c.isp_or_vf_db),
                    db(c.clb_db),
                    c.diagnostics.join("; "),
                ])
                .map_err(io)?;
            }
            w.flush()?;
        }
    }
    sink.flush()?;
    Ok(code)
}

// ---------------------------------------------------------------------------
// selftest

fn cmd_selftest(g: &GlobalOpts, a: &SelftestArgs, out: &mut dyn Write) -> CliResult<i32> {
    let suites = if a.suite.is_empty() { Suite::ALL.to_vec() } else { a.suite.clone() };
    let results = run_suites(&suites, g.inject_fault);
    let all_pass = results.iter().all(|r| r.pass);
    let report_to_stdout = a.report.as_deref() == Some("-");
    if !report_to_stdout {
        for r in &results {
            let tag = if r.pass { "PASS" } else { "FAIL" };
            writeln!(out, "{tag} {}/{}: {}", r.suite.name(), r.name, r.detail)?;
        }
        let failed = results.iter().filter(|r| !r.pass).count();
        writeln!(out, "{} checks, {failed} failed", results.len())?;
    }
    if let Some(dest) = &a.report {
        let doc = json!({
            "pass": all_pass,
            "checks": results.iter().map(|r| json!({
                "suite": r.suite.name(), "name": r.name, "pass": r.pass, "detail": r.detail,
            })).collect::<Vec<_>>(),
        });
        if report_to_stdout {
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::usage(format!("write failed: {e}")))?;
            writeln!(out)?;
        } else {
            let f = File::create(dest).map_err(|e| CliError::usage(format!("cannot write {dest}: {e}")))?;
            serde_json::to_writer_pretty(BufWriter::new(f), &doc)
                .map_err(|e| CliError::usage(format!("write failed: {e}")))?;
        }
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_SELFTEST })
}
