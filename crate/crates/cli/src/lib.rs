//! Command line front end: argument parsing, command dispatch and report
//! rendering. `main` is a thin wrapper around [`run`].

pub mod commands;
pub mod input;
pub mod verify;

use std::collections::HashMap;
use std::ffi::OsString;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sumfree::constructions::parse_rational;
use sumfree::{Error, Rational};

use verify::{Check, Lemma};

pub const SCHEMA: u64 = 1;

pub mod exit {
    pub const OK: i32 = 0;
    pub const COUNTEREXAMPLE: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const BUDGET: i32 = 3;
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sumfree", version, about = "Sum-free subsets, restricted sumsets and additive energy")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true)]
    pub budget_nodes: Option<u64>,
    #[arg(long, global = true)]
    pub budget_ms: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Largest subset with no pairwise sum of distinct elements in X (default X = A).
    Mset {
        input: String,
        #[arg(long)]
        x: Option<String>,
        /// Greedy lower bound instead of the exact search.
        #[arg(long)]
        heuristic: bool,
    },
    /// Check a lemma over a corpus of instances.
    Verify {
        #[arg(value_enum)]
        lemma: Lemma,
        /// Exhaustive corpora cover every subset of [lo, this].
        #[arg(long)]
        exhaustive_max: Option<i64>,
        /// Extra random instances.
        #[arg(long)]
        random: Option<usize>,
        /// Sample this many subsets instead of enumerating them.
        #[arg(long)]
        sampled: Option<usize>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_parser = rational)]
        eps: Option<Rational>,
        #[arg(long, value_parser = rational)]
        kappa: Option<Rational>,
    },
    /// Run the density-increment driver on F_p^n.
    Model {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: usize,
        /// Set file for A; otherwise A is random with --density.
        #[arg(long)]
        a: Option<String>,
        /// Set file for X; otherwise X is random with --x-density.
        #[arg(long)]
        x: Option<String>,
        #[arg(long, value_parser = rational, default_value = "1/2")]
        density: Rational,
        #[arg(long, value_parser = rational, default_value = "1/50")]
        x_density: Rational,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        r: u32,
        #[arg(long, value_parser = rational, default_value = "3/10")]
        delta: Rational,
        #[arg(long, default_value_t = 2)]
        codim: usize,
        #[arg(long, value_parser = rational)]
        eps0: Option<Rational>,
        /// Keep going after a summing witness is found.
        #[arg(long)]
        full: bool,
    },
    /// Emit a structured set: powers-of-two N, interval N, ap L S, behrend D N, random-dense N ALPHA.
    Construct {
        family: String,
        args: Vec<String>,
    },
    /// Additive energy and, with --nu, the hereditary energy coefficient.
    Energy {
        input: String,
        #[arg(long)]
        nu: bool,
        #[arg(long)]
        sampled: Option<usize>,
    },
    /// Split a set of integers by 2-adic valuation.
    Decompose {
        input: String,
        #[arg(long, value_parser = rational)]
        eps: Option<Rational>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mset { .. } => "mset",
            Command::Verify { .. } => "verify",
            Command::Model { .. } => "model",
            Command::Construct { .. } => "construct",
            Command::Energy { .. } => "energy",
            Command::Decompose { .. } => "decompose",
        }
    }
}

/// What a command hands back before the common envelope is added.
pub struct Outcome {
    pub status: i32,
    pub input_digest: String,
    pub params: Value,
    pub result: Value,
    pub verdicts: Value,
    pub nodes_explored: Option<u64>,
}

pub struct Execution {
    pub status: i32,
    pub report: Value,
    /// Text for stdout in the requested format.
    pub rendered: String,
    pub stderr: String,
}

pub type Overrides = HashMap<Lemma, Check>;

pub fn run<I, T>(argv: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &Overrides::new())
}

/// Like [`run`], with replacement checks for chosen lemmas.
pub fn run_with<I, T>(argv: I, overrides: &Overrides) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { exit::INVALID } else { exit::OK };
            let text = e.render().to_string();
            let (rendered, stderr) = if e.use_stderr() { (String::new(), text) } else { (text, String::new()) };
            return Execution { status, report: Value::Null, rendered, stderr };
        }
    };
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let start = Instant::now();
    let outcome = pool(cli.global.jobs).and_then(|p| p.install(|| commands::dispatch(&cli, overrides)));
    let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
    let report = match outcome {
        Ok(o) => json!({
            "schema": SCHEMA,
            "command": cli.command.name(),
            "argv": echo,
            "seed": cli.global.seed,
            "input_digest": o.input_digest,
            "params": o.params,
            "result": o.result,
            "verdicts": o.verdicts,
            "status": o.status,
            "timings": { "wall_ms": wall_ms, "nodes_explored": o.nodes_explored },
        }),
        Err(e) => {
            return Execution {
                status: exit::INVALID,
                report: json!({ "schema": SCHEMA, "command": cli.command.name(), "argv": echo, "seed": cli.global.seed, "error": e.to_string() }),
                rendered: String::new(),
                stderr: format!("error: {e}\n"),
            };
        }
    };
    let status = report["status"].as_i64().unwrap_or(0) as i32;
    let mut stderr = String::new();
    if let Some(path) = &cli.global.out {
        if let Err(e) = std::fs::write(path, pretty(&report)) {
            stderr = format!("error: {}: {e}\n", path.display());
            return Execution { status: exit::INVALID, report, rendered: String::new(), stderr };
        }
    }
    let rendered = match cli.global.format {
        Format::Json => pretty(&report),
        Format::Csv => csv_rows(&report),
    };
    Execution { status, report, rendered, stderr }
}

fn pool(jobs: usize) -> sumfree::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// The part of a report expected to be byte-identical across reruns.
pub fn payload(report: &Value) -> Value {
    let mut v = report.clone();
    if let Some(map) = v.as_object_mut() {
        map.remove("timings");
        map.remove("argv");
    }
    v
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&join(prefix, k), x, rows);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&join(prefix, &i.to_string()), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_owned(), s.clone())),
        other => rows.push((prefix.to_owned(), other.to_string())),
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_owned()
    } else {
        format!("{prefix}.{key}")
    }
}

/// One `key,value` row per leaf, keys as dotted paths.
pub fn csv_rows(report: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", report, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"]).expect("in-memory write");
    for (k, v) in rows {
        w.write_record([k, v]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
