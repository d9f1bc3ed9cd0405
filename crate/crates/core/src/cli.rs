//! File formats and the `seqmatch` command-line front end.
//!
//! Input files are plain text:
//!
//! - distributions: one distribution per line, whitespace-separated
//!   probabilities;
//! - sequences: one sequence per line, whitespace-separated symbol indices;
//! - simulation plans: `key = value` lines.
//!
//! `#` starts a comment and blank lines are ignored in all three. Every
//! output begins with `#` lines describing the run (subcommand, resolved
//! inputs, a SHA-256 of the configuration and input bytes, seed, version),
//! so rerunning with the same manifest reproduces the file byte for byte.
//!
//! `match-known` and `match-unknown` exit with 0 on accept, 2 on reject,
//! 3 when no hypothesis has finite weight, 4 when an unconstrained test
//! assigns two sequences to the same source, and 1 on any usage, input or
//! I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::decision::{
    known_source_test, unconstrained_known_test, unconstrained_unknown_test,
    unknown_source_test_with, Mode,
};
use crate::exponents::{bernoulli_pair, rejection_exponents, ExponentReport};
use crate::model::{Alphabet, DecisionOutcome, Distribution, KnownInstance, Matching, Sequence, UnknownInstance, Verdict};
use crate::simulate::{compare_tests, run_plan, ExponentFit, RateReport, SimPlan, TestKind};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_COLLISION: i32 = 4;

/// Environment variable consulted for the seed when none is given.
pub const SEED_ENV: &str = "SEQMATCH_SEED";

/// Largest number of points a parameter grid may have.
pub const GRID_LIMIT: usize = 1_000_000;

/// Failures of the front end. All of them exit with [`EXIT_ERROR`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Lib(#[from] crate::Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "seqmatch", version, about = "Match sequences to sources with a no-match option")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match observed sequences to known source distributions.
    MatchKnown(MatchKnownArgs),
    /// Match observed sequences to training sequences.
    MatchUnknown(MatchUnknownArgs),
    /// Tabulate Chernoff exponents and rejection exponents.
    Exponents(ExponentsArgs),
    /// Estimate error and rejection rates by simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct MatchKnownArgs {
    /// Distributions file, one source per line.
    #[arg(long)]
    pub sources: PathBuf,
    /// Sequences file, one observed sequence per line.
    #[arg(long)]
    pub sequences: PathBuf,
    /// Number of pairs to match.
    #[arg(long)]
    pub k: usize,
    /// Target error exponent in bits.
    #[arg(long)]
    pub lambda: f64,
    /// Use the per-sequence test instead of the joint one.
    #[arg(long)]
    pub unconstrained: bool,
    /// Must equal the number of columns of the sources file when given.
    #[arg(long)]
    pub alphabet_size: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchUnknownArgs {
    /// Sequences file, one training sequence per line.
    #[arg(long)]
    pub train: PathBuf,
    /// Sequences file, one observed sequence per line.
    #[arg(long)]
    pub sequences: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub unconstrained: bool,
    /// Allow sequences of different lengths.
    #[arg(long)]
    pub unequal_lengths: bool,
    /// Treat pairs of sequences with disjoint symbol sets as unmatchable.
    #[arg(long)]
    pub prune_disjoint: bool,
    /// Alphabet size; inferred from the largest symbol when omitted.
    #[arg(long)]
    pub alphabet_size: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExponentsArgs {
    /// Distributions file; requires --lambda-grid.
    #[arg(long, conflicts_with = "bernoulli_rho_grid", requires = "lambda_grid")]
    pub sources: Option<PathBuf>,
    /// `a:b:step` grid of target exponents.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// `a:b:step` grid of ρ for the sources Ber(½), Ber(ρ).
    #[arg(long)]
    pub bernoulli_rho_grid: Option<String>,
    /// Target exponent used with --bernoulli-rho-grid.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Plan file; flags given alongside override its entries.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated, strictly increasing sequence lengths.
    #[arg(long)]
    pub n_grid: Option<String>,
    /// `known` or `unknown`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `constrained`, `unconstrained` or `both`.
    #[arg(long)]
    pub test: Option<String>,
    /// Use the sources Ber(½), Ber(ρ).
    #[arg(long, conflicts_with = "sources")]
    pub rho: Option<f64>,
    /// Distributions file with the sources.
    #[arg(long)]
    pub sources: Option<PathBuf>,
    /// Distributions file for observed sequences outside the truth matching.
    #[arg(long)]
    pub outsiders: Option<PathBuf>,
    /// Number of observed sequences; defaults to the number of sources.
    #[arg(long)]
    pub observations: Option<usize>,
    /// Size of the truth matching, which pairs `i` with `i`; defaults to
    /// the smaller side.
    #[arg(long)]
    pub k: Option<usize>,
    /// Worker threads; does not affect the output.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code 2 would read as a rejection
            let is_info = !e.use_stderr();
            let text = e.render().to_string();
            if is_info {
                let _ = stdout.write_all(text.as_bytes());
                return EXIT_ACCEPT;
            }
            let _ = stderr.write_all(text.as_bytes());
            return EXIT_ERROR;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::MatchKnown(a) => cmd_match_known(a, stdout),
        Command::MatchUnknown(a) => cmd_match_unknown(a, stdout),
        Command::Exponents(a) => cmd_exponents(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
    }
}

/// Header echoed at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub subcommand: String,
    /// `(role, canonical path)` for every input file.
    pub inputs: Vec<(String, PathBuf)>,
    /// Hex SHA-256 over the normalised configuration and the input bytes.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
}

impl RunManifest {
    fn new(subcommand: &str, config: &BTreeMap<String, String>, inputs: &[Input]) -> Self {
        let mut h = Sha256::new();
        for (k, v) in config {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        for input in inputs {
            h.update(format!("input {} {}\n", input.role, input.bytes.len()).as_bytes());
            h.update(&input.bytes);
        }
        let config_hash = h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self {
            subcommand: subcommand.to_string(),
            inputs: inputs.iter().map(|i| (i.role.clone(), i.path.clone())).collect(),
            config_hash,
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("# subcommand = {}\n", self.subcommand);
        for (role, path) in &self.inputs {
            let _ = writeln!(s, "# input {role} = {}", path.display());
        }
        let _ = writeln!(s, "# config_hash = {}", self.config_hash);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "# seed = {seed}");
            }
            None => s.push_str("# seed = none\n"),
        }
        let _ = writeln!(s, "# version = {}", self.version);
        s
    }
}

struct Input {
    role: String,
    path: PathBuf,
    bytes: Vec<u8>,
}

impl Input {
    fn read(role: &str, path: &Path) -> CliResult<Self> {
        let io = |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        };
        let path = path.canonicalize().map_err(io)?;
        let bytes = std::fs::read(&path).map_err(io)?;
        Ok(Self {
            role: role.to_string(),
            path,
            bytes,
        })
    }

    fn text(&self) -> CliResult<&str> {
        std::str::from_utf8(&self.bytes).map_err(|_| CliError::Parse {
            origin: self.path.display().to_string(),
            line: 0,
            message: "file is not valid UTF-8".into(),
        })
    }

    fn origin(&self) -> String {
        self.path.display().to_string()
    }
}

/// Formats a number with at most 9 significant digits, no trailing zeros,
/// and `inf`, `-inf` or `nan` for non-finite values.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parses a distributions file. `origin` names the file in diagnostics.
pub fn parse_distributions(text: &str, origin: &str) -> CliResult<Vec<Distribution>> {
    let err = |line, message: String| CliError::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut out: Vec<Distribution> = Vec::new();
    for (line, content) in content_lines(text) {
        let mass = content
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(line, format!("not a number: {t:?}"))))
            .collect::<CliResult<Vec<f64>>>()?;
        if let Some(first) = out.first() {
            if first.alphabet_size() != mass.len() {
                return Err(err(
                    line,
                    format!(
                        "expected {} probabilities, found {}",
                        first.alphabet_size(),
                        mass.len()
                    ),
                ));
            }
        }
        out.push(Distribution::new(mass).map_err(|e| err(line, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(err(0, "no distributions found".into()));
    }
    Ok(out)
}

/// Writes distributions in the format read by [`parse_distributions`].
/// Values use the shortest representation that parses back to the same
/// bits.
pub fn write_distributions(dists: &[Distribution]) -> String {
    let mut s = String::new();
    for d in dists {
        let row: Vec<String> = d.mass().iter().map(|p| format!("{p:?}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Parses a sequences file into raw symbol vectors.
pub fn parse_symbol_rows(text: &str, origin: &str) -> CliResult<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (line, content) in content_lines(text) {
        let row = content
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| CliError::Parse {
                    origin: origin.to_string(),
                    line,
                    message: format!("not a non-negative integer symbol: {t:?}"),
                })
            })
            .collect::<CliResult<Vec<usize>>>()?;
        out.push((line, row));
    }
    if out.is_empty() {
        return Err(CliError::Parse {
            origin: origin.to_string(),
            line: 0,
            message: "no sequences found".into(),
        });
    }
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

/// Parses a sequences file over a fixed alphabet.
pub fn parse_sequences(text: &str, origin: &str, alphabet: Alphabet) -> CliResult<Vec<Sequence>> {
    let mut out = Vec::new();
    for (line, content) in content_lines(text) {
        let err = |message: String| CliError::Parse {
            origin: origin.to_string(),
            line,
            message,
        };
        let symbols = content
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| err(format!("not a non-negative integer symbol: {t:?}")))
            })
            .collect::<CliResult<Vec<usize>>>()?;
        out.push(Sequence::new(symbols, alphabet).map_err(|e| err(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(CliError::Parse {
            origin: origin.to_string(),
            line: 0,
            message: "no sequences found".into(),
        });
    }
    Ok(out)
}

fn max_symbol(text: &str, origin: &str) -> CliResult<usize> {
    Ok(parse_symbol_rows(text, origin)?
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0))
}

fn write_output(path: Option<&Path>, body: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => stdout.write_all(body.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn decision_report(
    manifest: &RunManifest,
    result: crate::Result<DecisionOutcome>,
    k: usize,
) -> CliResult<(String, i32)> {
    let mut s = manifest.render();
    let code = match result {
        Ok(out) => {
            let code = match &out.verdict {
                Verdict::Accept(m) => {
                    s.push_str("verdict = accept\n");
                    let _ = writeln!(s, "matching = {m}");
                    EXIT_ACCEPT
                }
                Verdict::Reject => {
                    s.push_str("verdict = reject\nmatching =\n");
                    EXIT_REJECT
                }
                Verdict::Collision { assignment } => {
                    s.push_str("verdict = collision\n");
                    let a: Vec<String> = assignment.iter().map(usize::to_string).collect();
                    let _ = writeln!(s, "assignment = {}", a.join(" "));
                    EXIT_COLLISION
                }
            };
            let _ = writeln!(s, "best_weight = {}", format_number(out.best_weight));
            let _ = writeln!(s, "second_weight = {}", format_number(out.second_weight));
            let _ = writeln!(s, "threshold = {}", format_number(out.threshold));
            code
        }
        Err(crate::Error::Infeasible { .. }) => {
            let _ = writeln!(s, "verdict = infeasible\nk = {k}");
            EXIT_INFEASIBLE
        }
        Err(e) => return Err(e.into()),
    };
    Ok((s, code))
}

fn fmt_config(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn cmd_match_known(args: &MatchKnownArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let src = Input::read("sources", &args.sources)?;
    let seq = Input::read("sequences", &args.sequences)?;
    let sources = parse_distributions(src.text()?, &src.origin())?;
    let zsize = sources[0].alphabet_size();
    if let Some(a) = args.alphabet_size {
        if a != zsize {
            return usage(format!(
                "--alphabet-size {a} disagrees with the {zsize} columns of the sources file"
            ));
        }
    }
    let alphabet = Alphabet::new(zsize)?;
    let observations = parse_sequences(seq.text()?, &seq.origin(), alphabet)?;
    let instance = KnownInstance::new(sources, observations, args.k)?;
    let config = fmt_config(&[
        ("alphabet_size", zsize.to_string()),
        ("k", args.k.to_string()),
        ("lambda", format!("{:?}", args.lambda)),
        ("unconstrained", args.unconstrained.to_string()),
    ]);
    let manifest = RunManifest::new("match-known", &config, &[src, seq]);
    let result = if args.unconstrained {
        unconstrained_known_test(&instance, args.lambda)
    } else {
        known_source_test(&instance, args.lambda)
    };
    let (body, code) = decision_report(&manifest, result, args.k)?;
    write_output(args.output.as_deref(), &body, stdout)?;
    Ok(code)
}

pub fn cmd_match_unknown(args: &MatchUnknownArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let train = Input::read("train", &args.train)?;
    let seq = Input::read("sequences", &args.sequences)?;
    let inferred = max_symbol(train.text()?, &train.origin())?
        .max(max_symbol(seq.text()?, &seq.origin())?)
        + 1;
    let zsize = args.alphabet_size.unwrap_or(inferred);
    let alphabet = Alphabet::new(zsize)?;
    let x = parse_sequences(train.text()?, &train.origin(), alphabet)?;
    let y = parse_sequences(seq.text()?, &seq.origin(), alphabet)?;
    let instance = if args.unequal_lengths {
        UnknownInstance::with_unequal_lengths(x, y, args.k)?
    } else {
        UnknownInstance::new(x, y, args.k)?
    };
    let config = fmt_config(&[
        ("alphabet_size", zsize.to_string()),
        ("k", args.k.to_string()),
        ("lambda", format!("{:?}", args.lambda)),
        ("prune_disjoint", args.prune_disjoint.to_string()),
        ("unconstrained", args.unconstrained.to_string()),
        ("unequal_lengths", args.unequal_lengths.to_string()),
    ]);
    let manifest = RunManifest::new("match-unknown", &config, &[train, seq]);
    let result = if args.unconstrained {
        if args.prune_disjoint {
            return usage("--prune-disjoint applies to the constrained test only");
        }
        unconstrained_unknown_test(&instance, args.lambda)
    } else {
        unknown_source_test_with(&instance, args.lambda, args.prune_disjoint)
    };
    let (body, code) = decision_report(&manifest, result, args.k)?;
    write_output(args.output.as_deref(), &body, stdout)?;
    Ok(code)
}

/// Expands `a:b:step` into `a, a+step, …` up to `b` inclusive. Points are
/// computed as `a + i·step` and snapped to multiples of 1e-12 so that
/// decimal grids land on their nominal values.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("grid {text:?} must look like a:b:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<Vec<f64>>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 || a > b {
        return usage(format!("grid {text:?} needs finite a <= b and step > 0"));
    }
    let count = ((b - a) / step + 1e-9).floor() + 1.0;
    if count > GRID_LIMIT as f64 {
        return usage(format!("grid {text:?} has more than {GRID_LIMIT} points"));
    }
    Ok((0..count as usize)
        .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

const EXPONENT_HEADER: &str = "parameter,c_star,c_uc_star,rej_exp_constrained,rej_exp_unconstrained\n";

fn exponent_row(s: &mut String, parameter: f64, r: &ExponentReport) {
    let _ = writeln!(
        s,
        "{},{},{},{},{}",
        format_number(parameter),
        format_number(r.c_star),
        format_number(r.c_uc_star),
        format_number(r.rejection_constrained),
        format_number(r.rejection_unconstrained)
    );
}

pub fn cmd_exponents(args: &ExponentsArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let body = match (&args.sources, &args.bernoulli_rho_grid) {
        (Some(path), None) => {
            let grid_spec = args.lambda_grid.as_deref().expect("required by clap");
            let grid = parse_grid(grid_spec)?;
            let src = Input::read("sources", path)?;
            let mus = parse_distributions(src.text()?, &src.origin())?;
            let config = fmt_config(&[("lambda_grid", grid_spec.to_string())]);
            let mut s = RunManifest::new("exponents", &config, &[src]).render();
            s.push_str(EXPONENT_HEADER);
            for lambda in grid {
                exponent_row(&mut s, lambda, &rejection_exponents(&mus, lambda)?);
            }
            s
        }
        (None, Some(grid_spec)) => {
            if args.lambda_grid.is_some() {
                return usage("--lambda-grid needs --sources");
            }
            let grid = parse_grid(grid_spec)?;
            let config = fmt_config(&[
                ("bernoulli_rho_grid", grid_spec.clone()),
                ("lambda", format!("{:?}", args.lambda)),
            ]);
            let mut s = RunManifest::new("exponents", &config, &[]).render();
            s.push_str(EXPONENT_HEADER);
            for rho in grid {
                let mus = bernoulli_pair(rho)?;
                exponent_row(&mut s, rho, &rejection_exponents(&mus, args.lambda)?);
            }
            s
        }
        _ => return usage("give either --sources with --lambda-grid, or --bernoulli-rho-grid"),
    };
    write_output(args.output.as_deref(), &body, stdout)?;
    Ok(EXIT_ACCEPT)
}

const PLAN_KEYS: &[&str] = &[
    "constrained",
    "k",
    "lambda",
    "mode",
    "n_grid",
    "observations",
    "outsiders",
    "rho",
    "seed",
    "sources",
    "test",
    "trials",
];

/// Reads `key = value` lines. Relative `sources` and `outsiders` paths are
/// resolved against `base`.
pub fn parse_plan(text: &str, origin: &str, base: &Path) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (line, content) in content_lines(text) {
        let err = |message: String| CliError::Parse {
            origin: origin.to_string(),
            line,
            message,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !PLAN_KEYS.contains(&key) {
            return Err(err(format!("unknown key {key:?}")));
        }
        let value = if key == "sources" || key == "outsiders" {
            base.join(value).display().to_string()
        } else {
            value.to_string()
        };
        if map.insert(key.to_string(), value).is_some() {
            return Err(err(format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

fn get_parsed<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| CliError::Usage(format!("plan value {key} = {v:?} is invalid")))
        })
        .transpose()
}

enum TestSelection {
    One(TestKind),
    Both,
}

fn simulation_settings(args: &SimulateArgs) -> CliResult<(BTreeMap<String, String>, Vec<Input>)> {
    let mut inputs = Vec::new();
    let mut map = match &args.plan {
        Some(path) => {
            let plan = Input::read("plan", path)?;
            let base = plan.path.parent().unwrap_or(Path::new("/")).to_path_buf();
            let map = parse_plan(plan.text()?, &plan.origin(), &base)?;
            inputs.push(plan);
            map
        }
        None => BTreeMap::new(),
    };
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    set("seed", args.seed.map(|v| v.to_string()));
    set("lambda", args.lambda.map(|v| format!("{v:?}")));
    set("trials", args.trials.map(|v| v.to_string()));
    set("n_grid", args.n_grid.clone());
    set("mode", args.mode.clone());
    set("test", args.test.clone());
    set("k", args.k.map(|v| v.to_string()));
    set("observations", args.observations.map(|v| v.to_string()));
    set("outsiders", args.outsiders.as_ref().map(|p| p.display().to_string()));
    if let Some(rho) = args.rho {
        map.remove("sources");
        map.insert("rho".into(), format!("{rho:?}"));
    }
    if let Some(p) = &args.sources {
        map.remove("rho");
        map.insert("sources".into(), p.display().to_string());
    }
    if map.contains_key("test") && map.contains_key("constrained") {
        return usage("give either `test` or `constrained`, not both");
    }
    if let Some(c) = map.remove("constrained") {
        let test = match c.as_str() {
            "true" => "constrained",
            "false" => "unconstrained",
            _ => return usage(format!("constrained = {c:?} must be true or false")),
        };
        map.insert("test".into(), test.into());
    }
    if !map.contains_key("seed") {
        if let Ok(v) = std::env::var(SEED_ENV) {
            map.insert("seed".into(), v.trim().to_string());
        }
    }
    for key in ["sources", "outsiders"] {
        if let Some(path) = map.get(key).cloned() {
            let input = Input::read(key, Path::new(&path))?;
            map.insert(key.into(), input.path.display().to_string());
            inputs.push(input);
        }
    }
    Ok((map, inputs))
}

fn build_plan(map: &BTreeMap<String, String>, inputs: &[Input]) -> CliResult<(SimPlan, TestSelection)> {
    let require = |key: &str| {
        map.get(key)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("simulation needs `{key}`")))
    };
    let mode = match require("mode")?.as_str() {
        "known" => Mode::Known,
        "unknown" => Mode::Unknown,
        other => return usage(format!("mode {other:?} must be known or unknown")),
    };
    let selection = match map.get("test").map(String::as_str).unwrap_or("constrained") {
        "constrained" => TestSelection::One(TestKind::Constrained),
        "unconstrained" => TestSelection::One(TestKind::Unconstrained),
        "both" => TestSelection::Both,
        other => return usage(format!("test {other:?} must be constrained, unconstrained or both")),
    };
    let find = |role: &str| inputs.iter().find(|i| i.role == role);
    let sources = match (get_parsed::<f64>(map, "rho")?, find("sources")) {
        (Some(rho), None) => bernoulli_pair(rho)?,
        (None, Some(src)) => parse_distributions(src.text()?, &src.origin())?,
        _ => return usage("simulation needs exactly one of `rho` or `sources`"),
    };
    let outsiders = match find("outsiders") {
        Some(o) => parse_distributions(o.text()?, &o.origin())?,
        None => Vec::new(),
    };
    let m = sources.len();
    let observations = get_parsed::<usize>(map, "observations")?.unwrap_or(m);
    let k = get_parsed::<usize>(map, "k")?.unwrap_or(m.min(observations));
    let n_grid = require("n_grid")?
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("n_grid entry {t:?} is not a length")))
        })
        .collect::<CliResult<Vec<usize>>>()?;
    let plan = SimPlan {
        mode,
        truth: Matching::identity(k, m, observations)?,
        sources,
        observations,
        outsiders,
        n_grid,
        trials: get_parsed(map, "trials")?.ok_or_else(|| CliError::Usage("simulation needs `trials`".into()))?,
        lambda: get_parsed(map, "lambda")?.ok_or_else(|| CliError::Usage("simulation needs `lambda`".into()))?,
        seed: get_parsed(map, "seed")?.unwrap_or(0),
        test: match selection {
            TestSelection::One(t) => t,
            TestSelection::Both => TestKind::Constrained,
        },
    };
    plan.validate()?;
    Ok((plan, selection))
}

const SIMULATION_HEADER: &str = "n,test,error_rate,rejection_rate,correct_rate,fitted_exponent\n";

fn fit_comment(s: &mut String, r: &RateReport) {
    let how = match r.fit {
        ExponentFit::Slope { points, .. } => format!("least-squares slope over {points} lengths"),
        ExponentFit::SinglePoint { .. } => "single length with errors".to_string(),
        ExponentFit::NoErrors => "no errors observed, exponent reported as inf".to_string(),
    };
    let _ = writeln!(s, "# fit {} = {how}", r.test.name());
}

fn rate_rows(s: &mut String, r: &RateReport) {
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row.n,
            r.test.name(),
            format_number(row.error_rate()),
            format_number(row.rejection_rate()),
            format_number(row.correct_rate()),
            format_number(r.fit.value())
        );
    }
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let (map, inputs) = simulation_settings(args)?;
    let (plan, selection) = build_plan(&map, &inputs)?;
    let mut manifest = RunManifest::new("simulate", &map, &inputs);
    manifest.seed = Some(plan.seed);

    let threads = args.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let reports = pool.install(|| -> crate::Result<Vec<RateReport>> {
        Ok(match selection {
            TestSelection::One(_) => vec![run_plan(&plan)?],
            TestSelection::Both => {
                let p = compare_tests(&plan)?;
                vec![p.constrained, p.unconstrained]
            }
        })
    })?;

    let mut s = manifest.render();
    if reports.iter().any(|r| r.test == TestKind::Unconstrained) {
        s.push_str("# unconstrained rates have no finite-length guarantee to compare against\n");
    }
    for r in &reports {
        fit_comment(&mut s, r);
    }
    s.push_str(SIMULATION_HEADER);
    for r in &reports {
        rate_rows(&mut s, r);
    }
    write_output(args.output.as_deref(), &s, stdout)?;
    Ok(EXIT_ACCEPT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(2.0 / 3.0 * 1000.0), "666.666667");
        assert_eq!(format_number(123456789.4), "123456789");
        assert_eq!(format_number(1.23456789e12), "1.23456789e12");
        assert_eq!(format_number(-2.5e-7), "-2.5e-7");
        assert_eq!(format_number(0.00012), "0.00012");
        assert_eq!(format_number(9.9999999999), "10");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn distributions_parse_with_comments() {
        let text = "# sources\n0.5 0.5\n\n0.9 0.1  # skewed\n";
        let d = parse_distributions(text, "f").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[1].mass(), &[0.9, 0.1]);
    }

    #[test]
    fn distribution_errors_carry_line_numbers() {
        let e = parse_distributions("0.5 0.5\n0.2 0.3 0.5\n", "f").unwrap_err();
        assert!(e.to_string().starts_with("f:2:"), "{e}");
        let e = parse_distributions("0.5 0.5\n# c\n0.5 x\n", "f").unwrap_err();
        assert!(e.to_string().starts_with("f:3:"), "{e}");
        let e = parse_distributions("0.5 0.6\n", "f").unwrap_err();
        assert!(e.to_string().starts_with("f:1:"), "{e}");
        assert!(parse_distributions("# empty\n", "f").is_err());
    }

    #[test]
    fn sequence_errors_carry_line_numbers() {
        let a = Alphabet::new(2).unwrap();
        assert_eq!(parse_sequences("0 1 1\n1 0 0\n", "s", a).unwrap().len(), 2);
        let e = parse_sequences("0 1\n0 2\n", "s", a).unwrap_err();
        assert!(e.to_string().starts_with("s:2:"), "{e}");
        let e = parse_sequences("0 -1\n", "s", a).unwrap_err();
        assert!(e.to_string().starts_with("s:1:"), "{e}");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        let g = parse_grid("0.05:0.95:0.05").unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[2], 0.15);
        assert_eq!(g[18], 0.95);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1e9:1e-3").is_err());
    }

    #[test]
    fn plan_parsing() {
        let text = "seed = 3\nlambda = 0.05 # target\nn_grid = 10, 20\nsources = s.txt\n";
        let m = parse_plan(text, "p", Path::new("/base")).unwrap();
        assert_eq!(m["seed"], "3");
        assert_eq!(m["lambda"], "0.05");
        assert_eq!(m["sources"], "/base/s.txt");
        let e = parse_plan("seed = 1\nbogus = 2\n", "p", Path::new("/")).unwrap_err();
        assert!(e.to_string().starts_with("p:2:"), "{e}");
        let e = parse_plan("seed = 1\nseed = 2\n", "p", Path::new("/")).unwrap_err();
        assert!(e.to_string().starts_with("p:2:"), "{e}");
        assert!(parse_plan("seed 1\n", "p", Path::new("/")).is_err());
    }

    #[test]
    fn manifest_hash_depends_on_config_and_inputs() {
        let cfg = |v: &str| fmt_config(&[("lambda", v.to_string())]);
        let a = RunManifest::new("x", &cfg("0.1"), &[]);
        let b = RunManifest::new("x", &cfg("0.2"), &[]);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
        let input = |bytes: &[u8]| Input {
            role: "r".into(),
            path: "/p".into(),
            bytes: bytes.to_vec(),
        };
        let c = RunManifest::new("x", &cfg("0.1"), &[input(b"1")]);
        let d = RunManifest::new("x", &cfg("0.1"), &[input(b"2")]);
        assert_ne!(c.config_hash, d.config_hash);
        assert!(a.render().contains("# seed = none\n"));
    }

    proptest! {
        #[test]
        fn distributions_round_trip(raw in prop::collection::vec(
            prop::collection::vec(0.0f64..1.0, 3), 1..5)) {
            let dists: Vec<Distribution> = raw
                .iter()
                .map(|r| {
                    let t: f64 = r.iter().sum::<f64>() + 1e-3;
                    let mut m: Vec<f64> = r.iter().map(|x| (x + 1e-3 / 3.0) / t).collect();
                    let s: f64 = m[..2].iter().sum();
                    m[2] = (1.0 - s).max(0.0);
                    Distribution::new(m).unwrap()
                })
                .collect();
            let back = parse_distributions(&write_distributions(&dists), "rt").unwrap();
            prop_assert_eq!(back.len(), dists.len());
            for (a, b) in back.iter().zip(&dists) {
                for (x, y) in a.mass().iter().zip(b.mass()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
