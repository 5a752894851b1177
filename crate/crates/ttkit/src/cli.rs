//! Batch command-line front end.
//!
//! Twelve verbs wire the library together: `decompose`, `eval`,
//! `fidelity`, `obfuscate`, `canonicalize`, `sample`, `aklt-build`,
//! `aklt-order-param`, `aklt-probe`, `rel-error`, `cost`, and `bench`.
//! Oracles are named with a mini-language (`builtin:<name>,k=v,...` or
//! `pipe:<command>`), pivot sources with another
//! (`sample:uniform,N=..,seed=..`, `sample:tt,N=..,seed=..`, or
//! `file:<path>`). Every run starts by printing its full effective
//! configuration so the result is reproducible from the log alone;
//! `--json` switches stdout to a single machine-readable object.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric failure,
//! 4 oracle or subprocess failure. The environment variable
//! `TTRSS_THREADS` caps internal parallelism.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::aklt;
use crate::error::{domain_err, TtError, TtResult};
use crate::io;
use crate::metrics;
use crate::oracle::{self, Oracle};
use crate::site::{Configuration, SiteSpec, SiteValue};
use crate::sketch::{self, PivotSet, SketchConfig};
use crate::tt::AnyTt;

#[derive(Parser)]
#[command(
    name = "ttkit",
    version,
    about = "Tensor-train reconstruction and analysis toolkit"
)]
struct Cli {
    /// Emit one machine-readable JSON object on stdout instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reconstruct a tensor train from oracle samples at pivots
    Decompose(DecomposeArgs),
    /// Evaluate a stored tensor train at configurations
    Eval(EvalArgs),
    /// Normalized overlap of two stored tensor trains
    Fidelity(FidelityArgs),
    /// Re-gauge a stored tensor train with random bond rotations
    Obfuscate(ObfuscateArgs),
    /// Left-orthogonalize a stored tensor train
    Canonicalize(CanonicalizeArgs),
    /// Draw configurations from a stored tensor train's Born distribution
    Sample(SampleArgs),
    /// Write the exact AKLT state as a tensor train
    AkltBuild(AkltBuildArgs),
    /// String-order parameter of a spin-1 tensor train
    AkltOrderParam(AkltOrderParamArgs),
    /// End-to-end AKLT reconstruction and phase probe
    AkltProbe(AkltProbeArgs),
    /// Relative error of a tensor train against its oracle
    RelError(RelErrorArgs),
    /// Dense versus tensorized parameter and operation counts
    Cost(CostArgs),
    /// Repeat a decomposition and report wall times
    Bench(BenchArgs),
}

#[derive(Args)]
struct OracleFlags {
    /// Oracle: `builtin:<name>,k=v,...` or `pipe:<command>`
    #[arg(long)]
    oracle: String,
    /// Site list for pipe oracles: dims like `2,2,3` or `poly:2@0:1`
    #[arg(long)]
    sites: Option<String>,
    /// Response timeout in seconds for pipe oracles
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    oracle: OracleFlags,
    /// Pivot source: `sample:uniform,N=..,seed=..`, `sample:tt,N=..,seed=..`, or `file:<path>`
    #[arg(long)]
    pivots: String,
    /// First line of a pivot file is a header
    #[arg(long)]
    header: bool,
    /// Bond-rank cap
    #[arg(long)]
    rank: usize,
    /// Cumulative singular-value weight kept by the rank rule
    #[arg(long, default_value_t = 1.0 - 1e-5)]
    cum: f64,
    /// Seed for the sketch matrices
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative cutoff for least-squares pseudoinverses
    #[arg(long, default_value_t = 1e-12)]
    lstsq_cutoff: f64,
    /// Output tensor-train file (ttjson)
    #[arg(long)]
    out: std::path::PathBuf,
    /// Also write the full decomposition report as JSON
    #[arg(long)]
    report: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Tensor-train file (ttjson)
    #[arg(long)]
    tt: std::path::PathBuf,
    /// One configuration, comma-separated (repeatable)
    #[arg(long = "at")]
    at: Vec<String>,
    /// CSV file of configurations
    #[arg(long)]
    points: Option<std::path::PathBuf>,
    /// First line of the points file is a header
    #[arg(long)]
    header: bool,
    /// Write values as CSV instead of printing
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct FidelityArgs {
    #[arg(long)]
    a: std::path::PathBuf,
    #[arg(long)]
    b: std::path::PathBuf,
}

#[derive(Args)]
struct ObfuscateArgs {
    #[arg(long)]
    tt: std::path::PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct CanonicalizeArgs {
    #[arg(long)]
    tt: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    tt: std::path::PathBuf,
    /// Number of configurations to draw
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write samples as pivot CSV instead of printing
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct AkltBuildArgs {
    /// Chain length
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct AkltOrderParamArgs {
    /// Tensor-train file; mutually exclusive with --n
    #[arg(long, conflicts_with = "n")]
    tt: Option<std::path::PathBuf>,
    /// Build the exact AKLT chain of this length instead
    #[arg(long)]
    n: Option<usize>,
    /// Sites per window block
    #[arg(long, default_value_t = 10)]
    block_len: usize,
    /// Window start (default: centered)
    #[arg(long)]
    start: Option<usize>,
}

#[derive(Args)]
struct AkltProbeArgs {
    /// Chain length
    #[arg(long)]
    n: usize,
    /// Number of Born-sampled pivots
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sites per window block
    #[arg(long, default_value_t = 10)]
    block_len: usize,
    /// Window start (default: centered)
    #[arg(long)]
    start: Option<usize>,
    /// Write the probe report as JSON
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct RelErrorArgs {
    #[arg(long)]
    tt: std::path::PathBuf,
    #[command(flatten)]
    oracle: OracleFlags,
    /// Test-point source (pivot mini-language)
    #[arg(long)]
    test: String,
    /// Pivot source scored separately (defaults to the test set)
    #[arg(long)]
    pivots: Option<String>,
    /// First line of pivot files is a header
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
    /// Keep per-point residuals in the report
    #[arg(long)]
    residuals: bool,
}

#[derive(Args)]
struct CostArgs {
    /// Input-dimension factors, comma-separated
    #[arg(long)]
    in_dims: String,
    /// Output-dimension factors, comma-separated
    #[arg(long)]
    out_dims: String,
    /// Tensor-train-matrix bond rank
    #[arg(long)]
    rank: usize,
    /// Attach the storage cost of this stored tensor train
    #[arg(long)]
    tt: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    oracle: OracleFlags,
    #[arg(long)]
    pivots: String,
    #[arg(long)]
    header: bool,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 1.0 - 1e-5)]
    cum: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of repetitions
    #[arg(long, default_value_t = 3)]
    repeat: usize,
}

/// Entry point for the binary: parse `std::env::args`, run, return the
/// exit code.
pub fn run_from_env() -> i32 {
    run(std::env::args().collect())
}

/// Parse and execute an argument vector (first element is the program
/// name); returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap reserves 0 for --help/--version
            let benign = e.exit_code() == 0;
            let _ = e.print();
            return if benign { 0 } else { 2 };
        }
    };
    let threads = apply_thread_cap();
    let out = Output {
        json: cli.json,
        body: Value::Null,
        lines: Vec::new(),
    };
    match dispatch(cli.cmd, threads, out) {
        Ok(out) => {
            out.flush();
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &TtError) -> i32 {
    match e {
        TtError::Numeric(_) => 3,
        TtError::Oracle(_) => 4,
        _ => 2,
    }
}

fn apply_thread_cap() -> usize {
    if let Ok(raw) = std::env::var("TTRSS_THREADS") {
        if let Ok(t) = raw.trim().parse::<usize>() {
            if t >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
        }
    }
    rayon::current_num_threads()
}

/// Collects either human-readable lines or one JSON object.
struct Output {
    json: bool,
    body: Value,
    lines: Vec<String>,
}

impl Output {
    fn config(&mut self, config: Value) {
        if self.json {
            self.body["config"] = config;
        } else {
            self.lines.push(format!("config: {config}"));
        }
    }

    fn field(&mut self, key: &str, value: Value, human: String) {
        if self.json {
            self.body[key] = value;
        } else {
            self.lines.push(human);
        }
    }

    fn flush(&self) {
        if self.json {
            println!("{}", self.body);
        } else {
            for line in &self.lines {
                println!("{line}");
            }
        }
    }
}

fn dispatch(cmd: Cmd, threads: usize, mut out: Output) -> TtResult<Output> {
    if out.json {
        out.body = json!({});
    }
    match cmd {
        Cmd::Decompose(a) => cmd_decompose(a, threads, &mut out)?,
        Cmd::Eval(a) => cmd_eval(a, threads, &mut out)?,
        Cmd::Fidelity(a) => cmd_fidelity(a, threads, &mut out)?,
        Cmd::Obfuscate(a) => cmd_obfuscate(a, threads, &mut out)?,
        Cmd::Canonicalize(a) => cmd_canonicalize(a, threads, &mut out)?,
        Cmd::Sample(a) => cmd_sample(a, threads, &mut out)?,
        Cmd::AkltBuild(a) => cmd_aklt_build(a, threads, &mut out)?,
        Cmd::AkltOrderParam(a) => cmd_aklt_order_param(a, threads, &mut out)?,
        Cmd::AkltProbe(a) => cmd_aklt_probe(a, threads, &mut out)?,
        Cmd::RelError(a) => cmd_rel_error(a, threads, &mut out)?,
        Cmd::Cost(a) => cmd_cost(a, threads, &mut out)?,
        Cmd::Bench(a) => cmd_bench(a, threads, &mut out)?,
    }
    Ok(out)
}

/// An oracle over either field, with the exact tensor train attached
/// when the builtin provides one (for Born-sampled pivots).
enum AnyOracle {
    Real(Box<dyn Oracle<f64>>),
    Complex(Box<dyn Oracle<Complex64>>),
}

struct OracleHandle {
    oracle: AnyOracle,
    exact: Option<AnyTt>,
    descriptor: String,
}

impl OracleHandle {
    fn sites(&self) -> &[SiteSpec] {
        match &self.oracle {
            AnyOracle::Real(o) => o.sites(),
            AnyOracle::Complex(o) => o.sites(),
        }
    }
}

fn parse_kv(parts: &str) -> TtResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for part in parts.split(',') {
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| TtError::Domain(format!("expected key=value, got {part:?}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
) -> TtResult<T> {
    let raw = map
        .remove(key)
        .ok_or_else(|| TtError::Domain(format!("missing parameter {key}")))?;
    raw.parse()
        .map_err(|_| TtError::Domain(format!("cannot parse {key}={raw}")))
}

fn take_or<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    default: T,
) -> TtResult<T> {
    match map.remove(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| TtError::Domain(format!("cannot parse {key}={raw}"))),
    }
}

fn no_leftovers(map: &BTreeMap<String, String>, what: &str) -> TtResult<()> {
    if let Some(key) = map.keys().next() {
        return domain_err(format!("unknown {what} parameter {key}"));
    }
    Ok(())
}

fn parse_site_entry(entry: &str) -> TtResult<SiteSpec> {
    if let Ok(d) = entry.parse::<usize>() {
        return SiteSpec::discrete(d);
    }
    let (desc, range) = entry
        .split_once('@')
        .ok_or_else(|| TtError::Domain(format!(
            "site {entry:?} is neither a dimension nor <embedding>@<lo>:<hi>"
        )))?;
    let (lo, hi) = range
        .split_once(':')
        .ok_or_else(|| TtError::Domain(format!("range {range:?} is not <lo>:<hi>")))?;
    let lo: f64 = lo
        .parse()
        .map_err(|_| TtError::Domain(format!("cannot parse interval bound {lo:?}")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| TtError::Domain(format!("cannot parse interval bound {hi:?}")))?;
    SiteSpec::interval(crate::embed::Embedding::parse_descriptor(desc)?, lo, hi)
}

fn parse_sites_flag(raw: &str) -> TtResult<Vec<SiteSpec>> {
    raw.split(',').map(|e| parse_site_entry(e.trim())).collect()
}

fn parse_oracle(flags: &OracleFlags) -> TtResult<OracleHandle> {
    let spec = flags.oracle.as_str();
    if let Some(command) = spec.strip_prefix("pipe:") {
        let sites = match &flags.sites {
            Some(raw) => parse_sites_flag(raw)?,
            None => {
                return domain_err("pipe oracles need --sites");
            }
        };
        let timeout = flags.timeout.map(Duration::from_secs_f64);
        let o = oracle::pipe_oracle::<f64>(command, sites, timeout)?;
        return Ok(OracleHandle {
            oracle: AnyOracle::Real(Box::new(o)),
            exact: None,
            descriptor: spec.to_string(),
        });
    }
    let Some(rest) = spec.strip_prefix("builtin:") else {
        return domain_err(format!(
            "oracle {spec:?} must start with builtin: or pipe:"
        ));
    };
    let (name, params) = match rest.split_once(',') {
        Some((n, p)) => (n, p),
        None => (rest, ""),
    };
    let mut map = parse_kv(params)?;
    let handle = match name {
        "random-tt" => {
            let n = take(&mut map, "n")?;
            let d = take(&mut map, "d")?;
            let rank = take(&mut map, "rank")?;
            let seed = take(&mut map, "seed")?;
            let o = oracle::random_tt_oracle(n, d, rank, seed)?;
            let exact = AnyTt::Real(o.tt().clone());
            OracleHandle {
                oracle: AnyOracle::Real(Box::new(o)),
                exact: Some(exact),
                descriptor: spec.to_string(),
            }
        }
        "slater" => {
            let m = take(&mut map, "m")?;
            let l = take(&mut map, "l")?;
            let scale = take_or(&mut map, "L", 10.0)?;
            let o = oracle::slater_oracle(m, l, scale)?;
            OracleHandle {
                oracle: AnyOracle::Real(Box::new(o)),
                exact: None,
                descriptor: spec.to_string(),
            }
        }
        "aklt" => {
            let n = take(&mut map, "n")?;
            let o = oracle::aklt_oracle(n)?;
            let exact = AnyTt::Complex(o.tt().clone());
            OracleHandle {
                oracle: AnyOracle::Complex(Box::new(o)),
                exact: Some(exact),
                descriptor: spec.to_string(),
            }
        }
        "random-prob" => {
            let n = take(&mut map, "n")?;
            let d = take(&mut map, "d")?;
            let classes = take(&mut map, "classes")?;
            let class_site = take(&mut map, "class_site")?;
            let seed = take(&mut map, "seed")?;
            let o = oracle::random_prob_oracle(n, d, classes, class_site, seed)?;
            OracleHandle {
                oracle: AnyOracle::Real(Box::new(o)),
                exact: None,
                descriptor: spec.to_string(),
            }
        }
        "sqrt-random-prob" => {
            let n = take(&mut map, "n")?;
            let d = take(&mut map, "d")?;
            let classes = take(&mut map, "classes")?;
            let class_site = take(&mut map, "class_site")?;
            let seed = take(&mut map, "seed")?;
            let inner = oracle::random_prob_oracle(n, d, classes, class_site, seed)?;
            let o = oracle::sqrt_oracle(Box::new(inner));
            OracleHandle {
                oracle: AnyOracle::Real(Box::new(o)),
                exact: None,
                descriptor: spec.to_string(),
            }
        }
        other => {
            return domain_err(format!(
                "unknown builtin oracle {other:?} (random-tt, slater, aklt, random-prob, sqrt-random-prob)"
            ));
        }
    };
    no_leftovers(&map, "oracle")?;
    Ok(handle)
}

fn resolve_pivots(spec: &str, handle: &OracleHandle, header: bool) -> TtResult<PivotSet> {
    if let Some(path) = spec.strip_prefix("file:") {
        return io::load_pivots(path, handle.sites(), header);
    }
    if let Some(rest) = spec.strip_prefix("sample:uniform") {
        let mut map = parse_kv(rest.strip_prefix(',').unwrap_or(rest))?;
        let count = take(&mut map, "N")?;
        let seed = take_or(&mut map, "seed", 0)?;
        no_leftovers(&map, "pivot")?;
        return sketch::sample_pivots_uniform(handle.sites(), count, seed);
    }
    if let Some(rest) = spec.strip_prefix("sample:tt") {
        let mut map = parse_kv(rest.strip_prefix(',').unwrap_or(rest))?;
        let count: usize = take(&mut map, "N")?;
        let seed = take_or(&mut map, "seed", 0)?;
        no_leftovers(&map, "pivot")?;
        let Some(exact) = &handle.exact else {
            return domain_err(
                "sample:tt pivots need an oracle with an explicit tensor train \
                 (builtin random-tt or aklt)",
            );
        };
        let samples = match exact {
            AnyTt::Real(t) => t.sample(count, seed)?,
            AnyTt::Complex(t) => t.sample(count, seed)?,
        };
        return PivotSet::new(samples, handle.sites());
    }
    domain_err(format!(
        "pivot source {spec:?} must be sample:uniform,..., sample:tt,..., or file:<path>"
    ))
}

fn resolve_configs(
    spec: &str,
    sites: &[SiteSpec],
    header: bool,
) -> TtResult<Vec<Configuration>> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TtError::Io(format!("{path}: {e}")))?;
        return io::configs_from_string(&text, sites, header);
    }
    if let Some(rest) = spec.strip_prefix("sample:uniform") {
        let mut map = parse_kv(rest.strip_prefix(',').unwrap_or(rest))?;
        let count = take(&mut map, "N")?;
        let seed = take_or(&mut map, "seed", 0)?;
        no_leftovers(&map, "point")?;
        return Ok(sketch::sample_pivots_uniform(sites, count, seed)?
            .points()
            .to_vec());
    }
    domain_err(format!(
        "point source {spec:?} must be sample:uniform,... or file:<path>"
    ))
}

fn fmt_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn value_json(v: &SiteValue) -> Value {
    match v {
        SiteValue::Index(i) => Value::from(*i),
        SiteValue::Real(x) => Value::from(*x),
    }
}

fn parse_single_config(raw: &str, sites: &[SiteSpec]) -> TtResult<Configuration> {
    let rows = io::configs_from_string(raw, sites, false)?;
    match rows.len() {
        1 => Ok(rows.into_iter().next().unwrap()),
        n => domain_err(format!("expected one configuration, got {n}")),
    }
}

fn ranks_json(tt: &AnyTt) -> Value {
    Value::from(tt.ranks())
}

fn cmd_decompose(a: DecomposeArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let handle = parse_oracle(&a.oracle)?;
    let pivots = resolve_pivots(&a.pivots, &handle, a.header)?;
    let mut cfg = SketchConfig::new(a.rank, a.seed);
    cfg.cum = a.cum;
    cfg.lstsq_cutoff = a.lstsq_cutoff;
    out.config(json!({
        "verb": "decompose",
        "oracle": handle.descriptor,
        "pivots": a.pivots,
        "pivot_count": pivots.len(),
        "rank": a.rank,
        "cum": cfg.cum,
        "seed": a.seed,
        "lstsq_cutoff": cfg.lstsq_cutoff,
        "threads": threads,
        "out": a.out.display().to_string(),
    }));
    let started = Instant::now();
    let (tt, report) = match &handle.oracle {
        AnyOracle::Real(o) => {
            let (tt, report) = sketch::decompose(o.as_ref(), &pivots, &cfg)?;
            (AnyTt::Real(tt), report)
        }
        AnyOracle::Complex(o) => {
            let (tt, report) = sketch::decompose(o.as_ref(), &pivots, &cfg)?;
            (AnyTt::Complex(tt), report)
        }
    };
    let elapsed = started.elapsed().as_secs_f64();
    io::save_any_tt(&tt, &a.out)?;
    if let Some(path) = &a.report {
        io::save_json(&io::report_json(&report), path)?;
    }
    out.field(
        "ranks",
        ranks_json(&tt),
        format!("ranks: {:?}", tt.ranks()),
    );
    out.field(
        "oracle_calls",
        Value::from(report.oracle_calls),
        format!("oracle calls: {}", report.oracle_calls),
    );
    out.field(
        "rank_deficient_cuts",
        Value::from(report.rank_deficient_cuts.clone()),
        format!("rank-deficient cuts: {:?}", report.rank_deficient_cuts),
    );
    out.field(
        "seconds",
        Value::from(elapsed),
        format!("wall time: {elapsed:.3} s"),
    );
    out.field(
        "wrote",
        Value::from(a.out.display().to_string()),
        format!("wrote {}", a.out.display()),
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let tt = io::load_tt(&a.tt)?;
    let mut points: Vec<Configuration> = Vec::new();
    for raw in &a.at {
        points.push(parse_single_config(raw, tt.sites())?);
    }
    if let Some(path) = &a.points {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TtError::Io(format!("{}: {e}", path.display())))?;
        points.extend(io::configs_from_string(&text, tt.sites(), a.header)?);
    }
    if points.is_empty() {
        return domain_err("no configurations given (use --at or --points)");
    }
    out.config(json!({
        "verb": "eval",
        "tt": a.tt.display().to_string(),
        "points": points.len(),
        "threads": threads,
    }));
    let (values_json, human, csv): (Value, Vec<String>, Vec<String>) = match &tt {
        AnyTt::Real(t) => {
            let vals = t.evaluate_batch(&points)?;
            (
                Value::from(vals.clone()),
                vals.iter().map(|v| v.to_string()).collect(),
                vals.iter().map(|v| v.to_string()).collect(),
            )
        }
        AnyTt::Complex(t) => {
            let vals = t.evaluate_batch(&points)?;
            (
                Value::Array(vals.iter().map(|z| json!([z.re, z.im])).collect()),
                vals.iter().map(|z| fmt_complex(*z)).collect(),
                vals.iter().map(|z| format!("{},{}", z.re, z.im)).collect(),
            )
        }
    };
    if let Some(path) = &a.out {
        let mut text = csv.join("\n");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    out.field("values", values_json, human.join("\n"));
    Ok(())
}

fn cmd_fidelity(a: FidelityArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let ta = io::load_tt(&a.a)?;
    let tb = io::load_tt(&a.b)?;
    out.config(json!({
        "verb": "fidelity",
        "a": a.a.display().to_string(),
        "b": a.b.display().to_string(),
        "threads": threads,
    }));
    let f = ta.fidelity_with(&tb)?;
    out.field("fidelity", Value::from(f), format!("{f}"));
    Ok(())
}

fn cmd_obfuscate(a: ObfuscateArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let tt = io::load_tt(&a.tt)?;
    out.config(json!({
        "verb": "obfuscate",
        "tt": a.tt.display().to_string(),
        "seed": a.seed,
        "out": a.out.display().to_string(),
        "threads": threads,
    }));
    let shuffled = match &tt {
        AnyTt::Real(t) => AnyTt::Real(t.obfuscate(a.seed)?),
        AnyTt::Complex(t) => AnyTt::Complex(t.obfuscate(a.seed)?),
    };
    io::save_any_tt(&shuffled, &a.out)?;
    out.field(
        "wrote",
        Value::from(a.out.display().to_string()),
        format!("wrote {}", a.out.display()),
    );
    Ok(())
}

fn cmd_canonicalize(a: CanonicalizeArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let tt = io::load_tt(&a.tt)?;
    out.config(json!({
        "verb": "canonicalize",
        "tt": a.tt.display().to_string(),
        "out": a.out.display().to_string(),
        "threads": threads,
    }));
    let (canon, residual) = match &tt {
        AnyTt::Real(t) => {
            let c = t.left_canonicalize()?;
            let r = c.left_gauge_residual();
            (AnyTt::Real(c), r)
        }
        AnyTt::Complex(t) => {
            let c = t.left_canonicalize()?;
            let r = c.left_gauge_residual();
            (AnyTt::Complex(c), r)
        }
    };
    io::save_any_tt(&canon, &a.out)?;
    out.field(
        "gauge_residual",
        Value::from(residual),
        format!("max gauge residual: {residual:.3e}"),
    );
    out.field(
        "wrote",
        Value::from(a.out.display().to_string()),
        format!("wrote {}", a.out.display()),
    );
    Ok(())
}

fn cmd_sample(a: SampleArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let tt = io::load_tt(&a.tt)?;
    out.config(json!({
        "verb": "sample",
        "tt": a.tt.display().to_string(),
        "count": a.count,
        "seed": a.seed,
        "threads": threads,
    }));
    let samples = match &tt {
        AnyTt::Real(t) => t.sample(a.count, a.seed)?,
        AnyTt::Complex(t) => t.sample(a.count, a.seed)?,
    };
    let mut csv = String::new();
    for row in &samples {
        let cells: Vec<String> = row
            .iter()
            .map(|v| match v {
                SiteValue::Index(i) => i.to_string(),
                SiteValue::Real(x) => x.to_string(),
            })
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    if let Some(path) = &a.out {
        std::fs::write(path, &csv)?;
        out.field(
            "wrote",
            Value::from(path.display().to_string()),
            format!("wrote {}", path.display()),
        );
    } else {
        out.field(
            "samples",
            Value::Array(
                samples
                    .iter()
                    .map(|row| Value::Array(row.iter().map(value_json).collect()))
                    .collect(),
            ),
            csv.trim_end().to_string(),
        );
    }
    Ok(())
}

fn cmd_aklt_build(a: AkltBuildArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    out.config(json!({
        "verb": "aklt-build",
        "n": a.n,
        "out": a.out.display().to_string(),
        "threads": threads,
    }));
    let tt = aklt::build_aklt_tt(a.n)?;
    io::save_tt(&tt, &a.out)?;
    out.field(
        "wrote",
        Value::from(a.out.display().to_string()),
        format!("wrote {}", a.out.display()),
    );
    Ok(())
}

fn order_param_fields(res: &aklt::OrderParamResult, out: &mut Output) {
    out.field(
        "order_parameter",
        res.to_json(),
        format!(
            "E_L = {} (16 E_L = {}), block {}, window start {}, phase {}",
            fmt_complex(res.e_l),
            fmt_complex(res.scaled),
            res.block_len,
            res.window_start,
            res.phase
        ),
    );
}

fn cmd_aklt_order_param(
    a: AkltOrderParamArgs,
    threads: usize,
    out: &mut Output,
) -> TtResult<()> {
    let tt = match (&a.tt, a.n) {
        (Some(path), None) => match io::load_tt(path)? {
            AnyTt::Complex(t) => t,
            AnyTt::Real(t) => t.to_complex(),
        },
        (None, Some(n)) => aklt::build_aklt_tt(n)?,
        _ => {
            return domain_err("give exactly one of --tt and --n");
        }
    };
    out.config(json!({
        "verb": "aklt-order-param",
        "tt": a.tt.as_ref().map(|p| p.display().to_string()),
        "n": tt.n(),
        "block_len": a.block_len,
        "start": a.start,
        "threads": threads,
    }));
    let res = aklt::order_parameter(&tt, a.block_len, a.start)?;
    order_param_fields(&res, out);
    Ok(())
}

fn cmd_aklt_probe(a: AkltProbeArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    out.config(json!({
        "verb": "aklt-probe",
        "n": a.n,
        "count": a.count,
        "seed": a.seed,
        "block_len": a.block_len,
        "start": a.start,
        "threads": threads,
    }));
    let cfg = aklt::ProbeConfig {
        seed: a.seed,
        block_len: a.block_len,
        window_start: a.start,
    };
    let report = aklt::reconstruct_and_probe(a.n, a.count, &cfg)?;
    out.field(
        "fidelity",
        Value::from(report.fidelity),
        format!("fidelity: {}", report.fidelity),
    );
    out.field(
        "pivots_used",
        Value::from(report.pivots_used),
        format!("pivots used: {}", report.pivots_used),
    );
    order_param_fields(&report.order, out);
    if let Some(path) = &a.out {
        let doc = json!({
            "fidelity": report.fidelity,
            "pivots_used": report.pivots_used,
            "order_parameter": report.order.to_json(),
            "decomposition": io::report_json(&report.decomposition),
        });
        io::save_json(&doc, path)?;
        out.field(
            "wrote",
            Value::from(path.display().to_string()),
            format!("wrote {}", path.display()),
        );
    }
    Ok(())
}

fn cmd_rel_error(a: RelErrorArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let tt = io::load_tt(&a.tt)?;
    let handle = parse_oracle(&a.oracle)?;
    let test = resolve_configs(&a.test, handle.sites(), a.header)?;
    let pivots = match &a.pivots {
        Some(spec) => resolve_configs(spec, handle.sites(), a.header)?,
        None => test.clone(),
    };
    out.config(json!({
        "verb": "rel-error",
        "tt": a.tt.display().to_string(),
        "oracle": handle.descriptor,
        "test": a.test,
        "test_points": test.len(),
        "pivots": a.pivots,
        "pivot_points": pivots.len(),
        "epsilon": a.epsilon,
        "threads": threads,
    }));
    let report = match (&tt, &handle.oracle) {
        (AnyTt::Real(t), AnyOracle::Real(o)) => {
            metrics::error_report(t, o.as_ref(), &pivots, &test, a.epsilon, a.residuals)?
        }
        (AnyTt::Complex(t), AnyOracle::Complex(o)) => {
            metrics::error_report(t, o.as_ref(), &pivots, &test, a.epsilon, a.residuals)?
        }
        _ => {
            return domain_err("tensor train and oracle live over different fields");
        }
    };
    out.field(
        "r_test",
        Value::from(report.r_test),
        format!("R(test) = {}", report.r_test),
    );
    out.field(
        "r_pivots",
        Value::from(report.r_pivots),
        format!("R(pivots) = {}", report.r_pivots),
    );
    if let Some(res) = &report.residuals {
        out.field(
            "residuals",
            Value::from(res.clone()),
            format!("residuals: {res:?}"),
        );
    }
    Ok(())
}

fn parse_dims(raw: &str) -> TtResult<Vec<usize>> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| TtError::Domain(format!("cannot parse dimension {p:?}")))
        })
        .collect()
}

fn cmd_cost(a: CostArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    let in_dims = parse_dims(&a.in_dims)?;
    let out_dims = parse_dims(&a.out_dims)?;
    out.config(json!({
        "verb": "cost",
        "in_dims": in_dims,
        "out_dims": out_dims,
        "rank": a.rank,
        "tt": a.tt.as_ref().map(|p| p.display().to_string()),
        "threads": threads,
    }));
    let mut report = metrics::cost_report(&in_dims, &out_dims, a.rank)?;
    if let Some(path) = &a.tt {
        let tt = io::load_tt(path)?;
        report = report.with_single_tt(&tt.dims(), &tt.ranks())?;
    }
    out.field(
        "cost",
        io::report_json(&report),
        format!(
            "dense params = ops = {}\nTTM params {} (ratio {:.5}), TTM ops {} (ratio {:.5}){}",
            report.dense_params,
            report.ttm_params,
            report.param_ratio,
            report.ttm_ops,
            report.ops_ratio,
            match report.single_tt_params {
                Some(p) => format!("\nsingle-TT params = eval ops = {p}"),
                None => String::new(),
            }
        ),
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs, threads: usize, out: &mut Output) -> TtResult<()> {
    if a.repeat < 1 {
        return domain_err("--repeat must be at least 1");
    }
    let handle = parse_oracle(&a.oracle)?;
    let pivots = resolve_pivots(&a.pivots, &handle, a.header)?;
    let mut cfg = SketchConfig::new(a.rank, a.seed);
    cfg.cum = a.cum;
    out.config(json!({
        "verb": "bench",
        "oracle": handle.descriptor,
        "pivots": a.pivots,
        "pivot_count": pivots.len(),
        "rank": a.rank,
        "cum": cfg.cum,
        "seed": a.seed,
        "repeat": a.repeat,
        "threads": threads,
    }));
    let mut times = Vec::with_capacity(a.repeat);
    let mut calls = 0usize;
    for _ in 0..a.repeat {
        let started = Instant::now();
        match &handle.oracle {
            AnyOracle::Real(o) => {
                let (_, report) = sketch::decompose(o.as_ref(), &pivots, &cfg)?;
                calls = report.oracle_calls;
            }
            AnyOracle::Complex(o) => {
                let (_, report) = sketch::decompose(o.as_ref(), &pivots, &cfg)?;
                calls = report.oracle_calls;
            }
        }
        times.push(started.elapsed().as_secs_f64());
    }
    let min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    out.field(
        "bench",
        json!({ "times": times, "min": min, "mean": mean, "oracle_calls": calls }),
        format!(
            "runs: {:?}\nmin {min:.3} s, mean {mean:.3} s, {calls} oracle calls per run",
            times
        ),
    );
    Ok(())
}
