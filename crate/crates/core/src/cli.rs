//! `pca-index` command line: argument parsing, file IO, and CSV rendering.
//!
//! Exit codes: 0 on success, 1 for data or domain errors, 2 for usage errors.
//! Every float is printed with six decimals; warnings go to stderr so that
//! the primary output stays byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    parse_dataset, parse_schema, synthesize_dataset, synthesize_isotropic, validate, Dataset,
    IndicatorSchema, ValidationReport,
};
use crate::index::{compute_competitiveness, IndexReport};
use crate::linalg::Divisor;
use crate::options::{ConstantPolicy, NormalizationBounds, PillarMode, RunOptions};
use crate::ranking::{pillar_leaders, RankingError, TiePolicy};

#[derive(Debug, Parser)]
#[command(
    name = "pca-index",
    version,
    about = "Composite index and rankings from variance-weighted modified principal components"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overall ranking by aggregate index
    Rank(RankArgs),
    /// Leader tables for each pillar sub-index
    Pillars(PillarsArgs),
    /// Effective weight of every indicator
    Weights(EngineArgs),
    /// Per-indicator breakdown of one entity's index
    Explain(ExplainArgs),
    /// Report excluded entities and constant indicators
    Validate(EngineArgs),
    /// Write a seeded synthetic dataset
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DivisorArg {
    #[value(name = "m")]
    Population,
    #[value(name = "m-1")]
    Sample,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConstantArg {
    Error,
    Drop,
    Midpoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TiesArg {
    Competition,
    Ordinal,
}

/// Inputs and pipeline options shared by every analysis command.
#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Dataset CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Schema file; defaults to the built-in 34-indicator schema
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Output file; defaults to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "global")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "m")]
    pub divisor: DivisorArg,
    #[arg(long, value_enum, default_value = "error")]
    pub constant: ConstantArg,
    #[arg(long, value_enum, default_value = "competition")]
    pub ties: TiesArg,
    /// `sample`, or a file of `indicator_code,min,max` lines
    #[arg(long, default_value = "sample")]
    pub bounds: String,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Keep only the K best rows
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub top: Option<u64>,
    /// Keep only the K worst rows
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub bottom: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PillarsArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Rows per pillar
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub entity: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Indicators x entities, e.g. 34x641
    #[arg(long, default_value = "34x641", value_parser = parse_shape)]
    pub shape: (usize, usize),
    /// Orthogonal 0/1 indicator rows (entity count must be a power of two)
    #[arg(long)]
    pub isotropic: bool,
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n = n
        .parse()
        .map_err(|_| format!("bad indicator count in {s:?}"))?;
    let m = m
        .parse()
        .map_err(|_| format!("bad entity count in {s:?}"))?;
    Ok((n, m))
}

/// Six decimals, ties to even on the exact binary value, never `-0.000000`.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// A failure that maps to exit code 1.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn load_schema(path: Option<&Path>) -> Result<IndicatorSchema, Failure> {
    match path {
        None => Ok(IndicatorSchema::table1()),
        Some(p) => parse_schema(&read(p)?).map_err(|e| Failure(format!("{}: {e}", p.display()))),
    }
}

fn load_bounds(spec: &str) -> Result<NormalizationBounds, Failure> {
    if spec == "sample" {
        return Ok(NormalizationBounds::Sample);
    }
    let path = Path::new(spec);
    let text = read(path)?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || {
            Failure(format!(
                "{}: line {}: expected code,min,max",
                path.display(),
                idx + 1
            ))
        };
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let [code, lo, hi] = parts[..] else {
            return Err(bad());
        };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Failure(format!(
                "{}: line {}: bounds for {code} need min < max",
                path.display(),
                idx + 1
            )));
        }
        map.insert(code.to_string(), (lo, hi));
    }
    Ok(NormalizationBounds::Explicit(map))
}

impl EngineArgs {
    fn options(&self) -> Result<RunOptions, Failure> {
        Ok(RunOptions {
            divisor: match self.divisor {
                DivisorArg::Population => Divisor::Population,
                DivisorArg::Sample => Divisor::Sample,
            },
            constant_policy: match self.constant {
                ConstantArg::Error => ConstantPolicy::Error,
                ConstantArg::Drop => ConstantPolicy::Drop,
                ConstantArg::Midpoint => ConstantPolicy::Midpoint,
            },
            pillar_mode: match self.mode {
                ModeArg::Global => PillarMode::Global,
                ModeArg::Local => PillarMode::Local,
            },
            bounds: load_bounds(&self.bounds)?,
            tie_policy: match self.ties {
                TiesArg::Competition => TiePolicy::Competition,
                TiesArg::Ordinal => TiePolicy::Ordinal,
            },
            jacobi: Default::default(),
        })
    }
}

/// Schema, validated dataset, and options for one analysis run.
struct Loaded {
    schema: IndicatorSchema,
    validation: ValidationReport,
    options: RunOptions,
}

fn load(args: &EngineArgs, warn: &mut Vec<String>) -> Result<Loaded, Failure> {
    let options = args.options()?;
    let schema = load_schema(args.schema.as_deref())?;
    let text = read(&args.data)?;
    let parsed = parse_dataset(&text, &schema)
        .map_err(|e| Failure(format!("{}: {e}", args.data.display())))?;
    for col in &parsed.ignored_columns {
        warn.push(format!("ignoring column {col} not in schema"));
    }
    let validation = validate(&parsed.dataset, &schema, &options)
        .map_err(|e| Failure(format!("{}: {e}", args.data.display())))?;
    for id in &validation.excluded {
        warn.push(format!("excluded entity {id} with missing values"));
    }
    Ok(Loaded {
        schema,
        validation,
        options,
    })
}

fn analyse(args: &EngineArgs, warn: &mut Vec<String>) -> Result<(Loaded, IndexReport), Failure> {
    let loaded = load(args, warn)?;
    let report =
        compute_competitiveness(&loaded.validation.dataset, &loaded.schema, &loaded.options)?;
    for code in &report.normalized.dropped {
        warn.push(format!("dropped constant indicator {code}"));
    }
    for pillar in &report.pillars.empty {
        warn.push(format!("pillar {pillar} has no indicators left"));
    }
    Ok((loaded, report))
}

fn cmd_rank(args: &RankArgs, warn: &mut Vec<String>) -> CmdResult {
    let (_, report) = analyse(&args.engine, warn)?;
    let table = report.ranking()?;
    let m = table.len();
    let check = |k: u64| -> Result<usize, Failure> {
        let k = k as usize;
        if k > m {
            return Err(RankingError::KTooLarge { k, m }.into());
        }
        Ok(k)
    };
    let rows: Vec<_> = match (args.top, args.bottom) {
        (None, None) => table.rows.iter().collect(),
        (top, bottom) => {
            let top = top.map(check).transpose()?.unwrap_or(0);
            let bottom = bottom.map(check).transpose()?.unwrap_or(0);
            table.rows[..top]
                .iter()
                .chain(&table.rows[m - bottom..])
                .collect()
        }
    };
    let mut out = String::from("rank,entity_id,index\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.rank, r.entity_id, fmt6(r.score)).unwrap();
    }
    Ok(out)
}

fn cmd_pillars(args: &PillarsArgs, warn: &mut Vec<String>) -> CmdResult {
    let (loaded, report) = analyse(&args.engine, warn)?;
    let mut out = String::from("pillar,rank,entity_id,score\n");
    for (pillar, values) in &report.pillars.scores.pillars {
        if values.is_none() {
            continue;
        }
        let table = pillar_leaders(
            &report.pillars.scores,
            pillar,
            args.k as usize,
            loaded.options.tie_policy,
        )?;
        for r in &table.rows {
            writeln!(out, "{pillar},{},{},{}", r.rank, r.entity_id, fmt6(r.score)).unwrap();
        }
    }
    Ok(out)
}

fn cmd_weights(args: &EngineArgs, warn: &mut Vec<String>) -> CmdResult {
    let (loaded, report) = analyse(args, warn)?;
    let mut out = String::from("indicator_code,pillar_code,effective_weight\n");
    let mut total = 0.0;
    for (code, w) in report
        .normalized
        .indicator_codes
        .iter()
        .zip(&report.effective_weights)
    {
        let pillar = loaded.schema.pillar_of(code).unwrap_or_default();
        writeln!(out, "{code},{pillar},{}", fmt6(*w)).unwrap();
        total += w;
    }
    writeln!(out, "TOTAL,,{}", fmt6(total)).unwrap();
    Ok(out)
}

fn cmd_explain(args: &ExplainArgs, warn: &mut Vec<String>) -> CmdResult {
    let (loaded, report) = analyse(&args.engine, warn)?;
    let j = report
        .entity_ids()
        .iter()
        .position(|e| *e == args.entity)
        .ok_or_else(|| Failure(format!("unknown entity {}", args.entity)))?;
    let rows = report.contributions(&args.entity, &loaded.schema)?;
    let mut out =
        String::from("indicator_code,pillar_code,normalized_value,effective_weight,contribution\n");
    for c in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            c.indicator_code,
            c.pillar_code,
            fmt6(c.normalized_value),
            fmt6(c.effective_weight),
            fmt6(c.contribution)
        )
        .unwrap();
    }
    for (pillar, values) in &report.pillars.scores.pillars {
        if let Some(v) = values {
            writeln!(out, "PILLAR,{pillar},,,{}", fmt6(v[j])).unwrap();
        }
    }
    writeln!(out, "TOTAL,,,,{}", fmt6(report.index[j])).unwrap();
    Ok(out)
}

fn cmd_validate(args: &EngineArgs, warn: &mut Vec<String>) -> CmdResult {
    let loaded = load(args, warn)?;
    // Warnings are echoed in the report itself.
    warn.retain(|w| w.starts_with("ignoring"));
    let v = &loaded.validation;
    let read = v.dataset.n_entities() + v.excluded.len();
    let mut out = String::new();
    writeln!(out, "{read} entities read").unwrap();
    writeln!(out, "{} entities excluded", v.excluded.len()).unwrap();
    for id in &v.excluded {
        writeln!(out, "excluded {id}").unwrap();
    }
    writeln!(out, "{} constant indicators", v.constant_indicators.len()).unwrap();
    for code in &v.constant_indicators {
        writeln!(out, "constant {code}").unwrap();
    }
    writeln!(out, "{} entities retained", v.dataset.n_entities()).unwrap();
    Ok(out)
}

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let schema = load_schema(args.schema.as_deref())?;
    let (n, m) = args.shape;
    let data: Dataset = if args.isotropic {
        if n != schema.len() {
            return Err(Failure(format!(
                "indicator count {n} does not match schema size {}",
                schema.len()
            )));
        }
        synthesize_isotropic(m, &schema)?
    } else {
        synthesize_dataset(n, m, args.seed, &schema)?
    };
    Ok(data.to_csv())
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return e.exit_code();
        }
    };

    let mut warnings = Vec::new();
    let (result, out_path) = match &cli.command {
        Command::Rank(a) => (cmd_rank(a, &mut warnings), a.engine.out.as_deref()),
        Command::Pillars(a) => (cmd_pillars(a, &mut warnings), a.engine.out.as_deref()),
        Command::Weights(a) => (cmd_weights(a, &mut warnings), a.out.as_deref()),
        Command::Explain(a) => (cmd_explain(a, &mut warnings), a.engine.out.as_deref()),
        Command::Validate(a) => (cmd_validate(a, &mut warnings), a.out.as_deref()),
        Command::Synth(a) => (cmd_synth(a), a.out.as_deref()),
    };
    for w in &warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let text = match result {
        Ok(text) => text,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 1;
        }
    };
    let written = match out_path {
        Some(p) => {
            fs::write(p, text.as_bytes()).map_err(|e| format!("cannot write {}: {e}", p.display()))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    match written {
        Ok(()) => 0,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}
