//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 1 for usage or
//! validation errors, 2 when verification finds a failing verdict.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::cases::{self, OracleCheck};
use crate::classes::{ClassId, FrontierKind, WindowMode};
use crate::cz;
use crate::dyadic::{GMode, IntegerInterval, PrefixSums, Transform};
use crate::error::{Error, Result};
use crate::harness::{self, EdgeId, EdgeVerdict, HarnessConfig, VerdictStatus};
use crate::oracle::{self, OracleResult, OracleTarget, MAX_ORACLE_LEN};
use crate::orbit::{self, OrbitSample, SampleFormat, TransformationSpec, WeightSpec};
use crate::report::{self, AnalysisParams, AnalysisReport, GModeChoice, SampleDigest, Timing};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

/// The inverse golden ratio, used when `--alpha` is omitted.
pub const DEFAULT_ALPHA: f64 = 0.618_033_988_749_894_8;

#[derive(Parser, Debug)]
#[command(name = "ainfty", version, about = "Discrete A-infinity weight constants on orbit samples")]
struct Cli {
    /// Worker threads for window scans and case batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a weight along a rotation orbit and write the sample.
    Gen(GenArgs),
    /// Best constants and curves of the weight classes.
    Analyze(AnalyzeArgs),
    /// Dyadic Calderon-Zygmund selection at one threshold.
    Czd(CzdArgs),
    /// Check the implication graph and the estimators against exhaustive oracles.
    Verify(VerifyArgs),
    /// Exhaustive enumeration on one short window.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct InputArgs {
    /// Read the sample from a JSON or CSV file instead of generating it.
    #[arg(long = "in", value_name = "PATH", conflicts_with_all = ["alpha", "omega_spec", "g_spec", "x0", "n"])]
    input: Option<PathBuf>,
    /// Rotation angle.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Weight omega: const:C, power:C0,A, piecewise:a-b=v;... or explicit:v0,v1,...
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_spec: Option<String>,
    /// Reference weight g, same syntax (default const:1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    g_spec: Option<String>,
    /// Orbit start point (default 0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<f64>,
    /// Orbit length.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl InputArgs {
    fn given(&self) -> bool {
        self.input.is_some() || self.omega_spec.is_some() || self.n.is_some()
    }

    fn load(&self) -> Result<OrbitSample> {
        if let Some(path) = &self.input {
            return OrbitSample::load(path, SampleFormat::from_path(path));
        }
        let omega: WeightSpec = self
            .omega_spec
            .as_deref()
            .ok_or_else(|| Error::validation("input", "give either --in or --omega-spec with --n"))?
            .parse()?;
        let g: WeightSpec = match &self.g_spec {
            Some(s) => s.parse()?,
            None => WeightSpec::constant(1.0),
        };
        let n = self.n.ok_or_else(|| Error::validation("n", "--n is required with --omega-spec"))?;
        let transform = TransformationSpec::rotation(self.alpha.unwrap_or(DEFAULT_ALPHA));
        orbit::sample_orbit(&transform, &omega, &g, self.x0.unwrap_or(0.0), n)
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Write here (atomically) instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

impl OutputArgs {
    fn json_only(&self) -> Result<()> {
        if self.format != Format::Json {
            return Err(Error::validation("format", "reports are written as JSON only"));
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Comma separated class names, or `all`.
    #[arg(long, default_value = "all")]
    classes: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Exponent of the reported CF constant.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    /// Mass fractions at which the A^M curves are tabulated.
    #[arg(long, value_delimiter = ',')]
    mass_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "all")]
    #[serde(serialize_with = "ser_mode")]
    windows: WindowsArg,
    #[arg(long, default_value_t = 1)]
    kmin: usize,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    #[serde(serialize_with = "ser_gmode")]
    g_mode: GModeArg,
    /// Also write one CSV per curve-valued class into this directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    curves_dir: Option<PathBuf>,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    #[serde(skip)]
    timing: bool,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WindowsArg {
    All,
    Anchored,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GModeArg {
    Auto,
    Weighted,
    Unweighted,
}

fn ser_mode<S: serde::Serializer>(m: &WindowsArg, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match m {
        WindowsArg::All => "all",
        WindowsArg::Anchored => "anchored",
    })
}

fn ser_gmode<S: serde::Serializer>(m: &GModeArg, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match m {
        GModeArg::Auto => "auto",
        GModeArg::Weighted => "weighted",
        GModeArg::Unweighted => "unweighted",
    })
}

impl AnalyzeArgs {
    fn params(&self) -> AnalysisParams {
        let d = AnalysisParams::default();
        AnalysisParams {
            p: self.p,
            q: self.q,
            beta: self.beta,
            eps: self.eps,
            s_grid: self.s_grid.clone().unwrap_or(d.s_grid),
            gamma_grid: self.gamma_grid.clone().unwrap_or(d.gamma_grid),
            mass_grid: self.mass_grid.clone().unwrap_or(d.mass_grid),
            windows: match self.windows {
                WindowsArg::All => WindowMode::All,
                WindowsArg::Anchored => WindowMode::Anchored,
            },
            k_min: self.kmin,
            k_max: self.kmax,
            g_mode: match self.g_mode {
                GModeArg::Auto => GModeChoice::Auto,
                GModeArg::Weighted => GModeChoice::Weighted,
                GModeArg::Unweighted => GModeChoice::Unweighted,
            },
        }
    }
}

#[derive(Args, Debug)]
struct CzdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Window length (default: to the end of the sample).
    #[arg(long)]
    len: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyArgs {
    /// Verify on this sample; without one, `--cases` random samples are drawn.
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "all")]
    edges: String,
    /// Longest window handed to the exhaustive oracles.
    #[arg(long, default_value_t = MAX_ORACLE_LEN)]
    oracle_kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random cases: samples when no input is given, oracle windows otherwise.
    #[arg(long, default_value_t = 20)]
    cases: usize,
    /// Largest random sample length.
    #[arg(long, default_value_t = 32)]
    max_len: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[command(flatten)]
    #[serde(skip)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    input: InputArgs,
    /// cf, am, amhat or lambda.
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn window_arg(sample: &OrbitSample, start: usize, len: Option<usize>) -> Result<IntegerInterval> {
    let n = sample.len();
    let len = match len {
        Some(l) => l,
        None => n.checked_sub(start).ok_or(Error::OutOfBounds { start, len: 0, n })?,
    };
    let w = IntegerInterval::new(start, len)?;
    w.check_bounds(n)?;
    Ok(w)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => canonical::write_atomic(path, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn config_echo<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("CLI arguments serialize")
}

fn gen(args: &GenArgs, stdout: &mut dyn Write) -> Result<i32> {
    let sample = args.input.load()?;
    let bytes = match args.output.format {
        Format::Json => sample.to_json_bytes(),
        Format::Csv => sample.to_csv_bytes()?,
    };
    emit(&args.output.out, &bytes, stdout)?;
    Ok(EXIT_OK)
}

fn analyze(args: &AnalyzeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    args.output.json_only()?;
    let started = Instant::now();
    let sample = args.input.load()?;
    let classes = ClassId::parse_list(&args.classes)?;
    let mut rep = AnalysisReport::new("analyze", config_echo(args), &sample);
    rep.classes = report::analyze(&sample, &args.params(), &classes)?;
    if args.timing {
        rep.timing = Some(Timing {
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    emit(&args.output.out, &rep.to_json_bytes(), stdout)?;
    if let Some(dir) = &args.curves_dir {
        if report::emit_curves(&rep, dir)?.is_empty() {
            writeln!(stderr, "note: no curve-valued classes in the report; nothing written to {}", dir.display())?;
        }
    }
    Ok(EXIT_OK)
}

fn czd(args: &CzdArgs, stdout: &mut dyn Write) -> Result<i32> {
    args.output.json_only()?;
    let sample = args.input.load()?;
    let window = window_arg(&sample, args.start, args.len)?;
    let ps = PrefixSums::build(&sample, &[Transform::Identity], GMode::Weighted)?;
    let sel = cz::decompose(&ps, window, args.lambda)?;
    emit(&args.output.out, &sel.to_json_bytes(), stdout)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct OracleReport {
    target: OracleTarget,
    window: IntegerInterval,
    oracle: OracleResult,
    /// Relative disagreement of the estimator with the oracle.
    discrepancy: f64,
}

fn oracle_cmd(args: &OracleArgs, stdout: &mut dyn Write) -> Result<i32> {
    args.output.json_only()?;
    let target: OracleTarget = args.target.parse()?;
    let sample = args.input.load()?;
    let window = window_arg(&sample, args.start, args.len)?;
    let ps = PrefixSums::build(&sample, &[Transform::Identity], GMode::Weighted)?;
    let result = oracle::brute_force_oracle(&ps, window, target, args.beta)?;
    let discrepancy = match target {
        OracleTarget::Cf => oracle::frontier_discrepancy(&ps, window, FrontierKind::Cf)?,
        OracleTarget::Am => oracle::frontier_discrepancy(&ps, window, FrontierKind::Am)?,
        OracleTarget::Amhat => oracle::frontier_discrepancy(&ps, window, FrontierKind::Amhat)?,
        OracleTarget::Lambda => oracle::lambda_discrepancy(&ps, window, args.beta)?,
    };
    let rep = OracleReport {
        target,
        window,
        oracle: result,
        discrepancy,
    };
    emit(&args.output.out, &canonical::to_json_bytes(&rep), stdout)?;
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyCase {
    pub case: usize,
    pub sample: SampleDigest,
    pub verdicts: Vec<EdgeVerdict>,
    pub oracle: Vec<OracleCheck>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerifySummary {
    pub pass: usize,
    pub fail: usize,
    pub infeasible: usize,
    pub oracle_checks: usize,
    pub oracle_failures: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub cases: Vec<VerifyCase>,
    pub summary: VerifySummary,
    pub passed: bool,
}

fn verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    args.output.json_only()?;
    let edges = EdgeId::parse_list(&args.edges)?;
    if args.oracle_kmax == 0 || args.oracle_kmax > MAX_ORACLE_LEN {
        return Err(Error::validation(
            "oracle-kmax",
            format!("{} must lie in 1..={MAX_ORACLE_LEN}", args.oracle_kmax),
        ));
    }
    let config = HarnessConfig {
        p: args.p,
        q: args.q,
        beta: args.beta,
        ..HarnessConfig::default()
    };
    let cases: Vec<VerifyCase> = if args.input.given() {
        let sample = args.input.load()?;
        let verdicts = harness::verify_sample(&sample, &config, &edges)?;
        let checks: Vec<Vec<OracleCheck>> = (0..args.cases)
            .into_par_iter()
            .map(|c| {
                let w = cases::random_window(&mut cases::case_rng(args.seed, c as u64), sample.len(), args.oracle_kmax);
                cases::oracle_checks(&sample, w, args.beta)
            })
            .collect::<Result<_>>()?;
        vec![VerifyCase {
            case: 0,
            sample: SampleDigest::of(&sample),
            verdicts,
            oracle: checks.into_iter().flatten().collect(),
        }]
    } else {
        if args.max_len < 2 {
            return Err(Error::validation("max-len", "random samples need length at least 2"));
        }
        (0..args.cases)
            .into_par_iter()
            .map(|c| {
                let mut rng = cases::case_rng(args.seed, c as u64);
                let n = rand::Rng::random_range(&mut rng, 2..=args.max_len);
                let sample = cases::random_sample(&mut rng, n, c % 2 == 1)?;
                let w = cases::random_window(&mut rng, n, args.oracle_kmax);
                Ok(VerifyCase {
                    case: c,
                    sample: SampleDigest::of(&sample),
                    verdicts: harness::verify_sample(&sample, &config, &edges)?,
                    oracle: cases::oracle_checks(&sample, w, args.beta)?,
                })
            })
            .collect::<Result<_>>()?
    };
    let mut summary = VerifySummary::default();
    for c in &cases {
        for v in &c.verdicts {
            match v.status {
                VerdictStatus::Pass => summary.pass += 1,
                VerdictStatus::Fail => summary.fail += 1,
                VerdictStatus::Infeasible => summary.infeasible += 1,
            }
        }
        summary.oracle_checks += c.oracle.len();
        summary.oracle_failures += c.oracle.iter().filter(|o| !o.passed).count();
    }
    let passed = summary.fail == 0 && summary.oracle_failures == 0;
    let rep = VerifyReport {
        tool: report::TOOL.to_string(),
        version: report::VERSION.to_string(),
        config: config_echo(args),
        cases,
        summary,
        passed,
    };
    emit(&args.output.out, &canonical::to_json_bytes(&rep), stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Gen(a) => gen(a, stdout),
        Command::Analyze(a) => analyze(a, stdout, stderr),
        Command::Czd(a) => czd(a, stdout),
        Command::Verify(a) => verify(a, stdout),
        Command::Oracle(a) => oracle_cmd(a, stdout),
    }
}

/// Runs the CLI with explicit streams. `args` includes the program name.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    // Output is buffered so the pool's closure only captures `Send` data.
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let result = match cli.threads {
        Some(0) => Err(Error::validation("threads", "must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::validation("threads", e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(&cli, &mut out, &mut err))),
        None => dispatch(&cli, &mut out, &mut err),
    };
    let _ = stdout.write_all(&out);
    let _ = stderr.write_all(&err);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}

