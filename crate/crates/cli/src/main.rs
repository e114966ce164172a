use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cghz_ecp::analysis::uniform_alpha_grid;
use cghz_ecp::fock::format_amplitude;
use cghz_ecp::output::{format_g17, to_csv, to_json};
use cghz_ecp::{
    run_checks, run_ecp_with, run_sweep_with, trace_stage, CghzParams, Column, EcpOptions, EcpReport, Error, Execution,
    ReflectionPhase, Stage, SweepSpec, VerifyOptions,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

mod config;

use config::{parse_list, pick, ConfigFile};

const MAX_MN_ENV: &str = "CGHZ_MAX_MN";

#[derive(Debug)]
pub enum CliError {
    /// Some check or invariant did not hold.
    Failed(String),
    Invalid(String),
    Cap(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } => CliError::Cap(e.to_string()),
            Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Failed(m) | CliError::Invalid(m) | CliError::Cap(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cghz",
    version,
    about = "Exact simulator for linear-optics concentration of C-GHZ states"
)]
struct Cli {
    /// Print extra diagnostics to stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one protocol run and print the report.
    Run(RunArgs),
    /// Sweep (m, N, alpha) and emit one row per point.
    Sweep(SweepArgs),
    /// Run the self-check suite.
    Verify(VerifyArgs),
    /// Dump the state after a named stage.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Real alpha in (0, 1); beta = sqrt(1 - alpha^2).
    #[arg(long, conflicts_with_all = ["alpha_re", "alpha_im"])]
    alpha: Option<f64>,
    /// Real part of a complex alpha.
    #[arg(long)]
    alpha_re: Option<f64>,
    /// Imaginary part of a complex alpha.
    #[arg(long)]
    alpha_im: Option<f64>,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

const PARAM_KEYS: [&str; 7] = ["m", "n", "alpha", "alpha-re", "alpha-im", "out", "format"];

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// prepared | hwp | pbs | postselect | measured
    #[arg(long)]
    stage: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated m values.
    #[arg(long, value_delimiter = ',')]
    m_values: Option<Vec<usize>>,
    /// Comma-separated N values.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Comma-separated alpha values, each in (0, 1).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "alpha_count"
    )]
    alphas: Option<Vec<f64>>,
    /// Use k/(count+1) for k = 1..count.
    #[arg(long)]
    alpha_count: Option<usize>,
    /// Comma-separated subset of the output columns.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Record wall-clock time per row (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Only sizes small enough for the reference enumerator.
    #[arg(long)]
    quick: bool,
    /// Swap in a deliberately wrong PBS phase convention.
    #[arg(long, hide = true)]
    perturb_pbs: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<ConfigFile, CliError> {
    let cfg = match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    cfg.restrict(allowed)?;
    Ok(cfg)
}

fn max_mn() -> Result<usize, CliError> {
    match std::env::var(MAX_MN_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{MAX_MN_ENV}=`{v}` is not a non-negative integer"))),
        Err(_) => Ok(EcpOptions::default().max_mn),
    }
}

fn execution(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// `closed` admits the degenerate endpoints `|alpha| ∈ {0, 1}`.
fn resolve_params(a: &ParamArgs, cfg: &ConfigFile, closed: bool) -> Result<CghzParams, CliError> {
    let inside = |x: f64| {
        if closed {
            (0.0..=1.0).contains(&x)
        } else {
            x > 0.0 && x < 1.0
        }
    };
    let range = if closed { "[0, 1]" } else { "(0, 1)" };
    let m = pick(a.m, cfg, "m")?.ok_or_else(|| CliError::Invalid("--m is required".into()))?;
    let n = pick(a.n, cfg, "n")?.ok_or_else(|| CliError::Invalid("--n is required".into()))?;
    let re = pick(a.alpha_re, cfg, "alpha-re")?;
    let im = pick(a.alpha_im, cfg, "alpha-im")?;
    let alpha = if a.alpha.is_some() || (re.is_none() && im.is_none()) {
        let x = pick(a.alpha, cfg, "alpha")?.ok_or_else(|| CliError::Invalid("--alpha is required".into()))?;
        if !inside(x) {
            return Err(CliError::Invalid(format!("alpha must lie in {range}, got {x}")));
        }
        Complex64::new(x, 0.0)
    } else {
        let z = Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0));
        if !inside(z.norm_sqr()) {
            return Err(CliError::Invalid(format!(
                "|alpha| must lie in {range}, got {}",
                z.norm()
            )));
        }
        z
    };
    Ok(CghzParams::with_alpha(m, n, alpha)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
            _ => Ok(()),
        },
    }
}

fn report_text(r: &EcpReport) -> String {
    let mut s = String::new();
    let p = &r.params;
    s += &format!(
        "m={} N={} alpha={} beta={}\n",
        p.m(),
        p.n(),
        format_amplitude(p.alpha()),
        format_amplitude(p.beta())
    );
    s += &format!("success_probability    {}\n", format_g17(r.success_probability));
    s += &format!("analytic_probability   {}\n", format_g17(r.analytic_probability));
    s += &format!("abs_error              {}\n", format_g17(r.formula_error()));
    s += &format!("post_selection         {}\n", format_g17(r.post_selection_probability));
    s += &format!("min_fidelity           {}\n", format_g17(r.min_fidelity));
    s += &format!("outcomes               {}\n", r.outcomes.len());
    for o in &r.outcomes {
        let fix: Vec<String> = o.correction.iter().map(ToString::to_string).collect();
        let fix = if fix.is_empty() { "-".to_string() } else { fix.join(" ") };
        s += &format!(
            "  {}  p={}  F={}  {}\n",
            o.pattern,
            format_g17(o.probability),
            format_g17(o.fidelity),
            fix
        );
    }
    s
}

fn report_json(r: &EcpReport) -> String {
    let c = |z: Complex64| serde_json::json!({ "re": z.re, "im": z.im });
    let outcomes: Vec<_> = r
        .outcomes
        .iter()
        .map(|o| {
            serde_json::json!({
                "pattern": o.pattern.sign_string(),
                "modes": o.pattern.outcomes().iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                "probability": o.probability,
                "fidelity": o.fidelity,
                "correction": o.correction.iter().map(ToString::to_string).collect::<Vec<_>>(),
            })
        })
        .collect();
    let v = serde_json::json!({
        "m": r.params.m(),
        "N": r.params.n(),
        "alpha": c(r.params.alpha()),
        "beta": c(r.params.beta()),
        "success_probability": r.success_probability,
        "analytic_probability": r.analytic_probability,
        "abs_error": r.formula_error(),
        "post_selection_probability": r.post_selection_probability,
        "min_fidelity": r.min_fidelity,
        "invariants_hold": r.invariants_hold(),
        "outcomes": outcomes,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

fn report_csv(r: &EcpReport) -> String {
    let mut s = String::from("pattern,probability,fidelity,correction\n");
    for o in &r.outcomes {
        let fix: Vec<String> = o.correction.iter().map(ToString::to_string).collect();
        s += &format!(
            "{},{},{},{}\n",
            o.pattern.sign_string(),
            format_g17(o.probability),
            format_g17(o.fidelity),
            fix.join(" ")
        );
    }
    s
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.params.config, &PARAM_KEYS)?;
    let p = resolve_params(&a.params, &cfg, false)?;
    let format = pick(a.format, &cfg, "format")?.unwrap_or(Format::Text);
    let out: Option<PathBuf> = pick(a.params.out.clone(), &cfg, "out")?;
    let opts = EcpOptions {
        max_mn: max_mn()?,
        execution: execution(cli),
        ..EcpOptions::default()
    };
    if cli.verbose > 0 {
        eprintln!("running {p} ({:?})", opts.execution);
    }
    let report = run_ecp_with(&p, &opts)?;
    let text = match format {
        Format::Text => report_text(&report),
        Format::Json => report_json(&report),
        Format::Csv => report_csv(&report),
    };
    emit(out.as_deref(), &text)?;
    if report.invariants_hold() {
        Ok(())
    } else {
        Err(CliError::Failed("report invariants do not hold".into()))
    }
}

fn cmd_trace(cli: &Cli, a: &TraceArgs) -> Result<(), CliError> {
    let mut keys = PARAM_KEYS.to_vec();
    keys.push("stage");
    let cfg = load_config(&a.params.config, &keys)?;
    let p = resolve_params(&a.params, &cfg, true)?;
    let stage: Stage = pick(a.stage.clone(), &cfg, "stage")?
        .ok_or_else(|| CliError::Invalid("--stage is required".into()))?
        .parse()?;
    let out: Option<PathBuf> = pick(a.params.out.clone(), &cfg, "out")?;
    let opts = EcpOptions {
        max_mn: max_mn()?,
        execution: execution(cli),
        ..EcpOptions::default()
    };
    let mut text = String::new();
    for snap in trace_stage(&p, stage, &opts)? {
        text += &format!("# {} ({} terms)\n", snap.title, snap.state.len());
        text += &snap.state.to_string();
    }
    emit(out.as_deref(), &text)
}

const SWEEP_KEYS: [&str; 8] = [
    "m-values",
    "n-values",
    "alphas",
    "alpha-count",
    "columns",
    "timing",
    "format",
    "out",
];

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config, &SWEEP_KEYS)?;
    let mut spec = SweepSpec::default();
    if let Some(v) = a
        .m_values
        .clone()
        .map(Ok)
        .or_else(|| cfg.get_list("m-values").transpose())
    {
        spec.m_values = v?;
    }
    if let Some(v) = a
        .n_values
        .clone()
        .map(Ok)
        .or_else(|| cfg.get_list("n-values").transpose())
    {
        spec.n_values = v?;
    }
    let count = pick(a.alpha_count, &cfg, "alpha-count")?;
    match (a.alphas.clone(), a.alpha_count) {
        (Some(v), _) => spec.alpha_grid = v,
        (None, Some(c)) => spec.alpha_grid = uniform_alpha_grid(c),
        (None, None) => {
            if let Some(v) = cfg.get_list("alphas")? {
                spec.alpha_grid = v;
            } else if let Some(c) = count {
                spec.alpha_grid = uniform_alpha_grid(c);
            }
        }
    }
    let columns: Option<Vec<String>> = match a.columns.clone() {
        Some(c) => Some(c),
        None => cfg
            .get::<String>("columns")?
            .map(|s| parse_list(&s))
            .transpose()
            .map_err(CliError::Invalid)?,
    };
    if let Some(cols) = columns {
        spec.columns = cols.iter().map(|c| c.parse::<Column>()).collect::<Result<_, _>>()?;
    }
    spec.record_timing = a.timing || cfg.get::<bool>("timing")?.unwrap_or(false);
    let format = pick(a.format, &cfg, "format")?.unwrap_or(Format::Csv);
    let out: Option<PathBuf> = pick(a.out.clone(), &cfg, "out")?;
    spec.validate()?;

    let opts = EcpOptions {
        max_mn: max_mn()?,
        execution: execution(cli),
        ..EcpOptions::default()
    };
    let rows = run_sweep_with(&spec, &opts)?;
    for r in rows.iter().filter_map(|r| r.skipped.as_ref().map(|s| (r, s))) {
        eprintln!(
            "skipped m={} N={} alpha={}: {}",
            r.0.m,
            r.0.n,
            format_g17(r.0.alpha),
            r.1
        );
    }
    if cli.verbose > 0 {
        eprintln!("{} rows", rows.len());
    }
    let text = match format {
        Format::Csv => to_csv(&rows, &spec.columns),
        Format::Json => to_json(&rows),
        Format::Text => return Err(CliError::Invalid("sweep output format must be csv or json".into())),
    };
    emit(out.as_deref(), &text)?;
    let bad = rows.iter().filter(|r| r.abs_error.is_some_and(|e| e > 1e-9)).count();
    if bad > 0 {
        return Err(CliError::Failed(format!(
            "{bad} rows exceed the 1e-9 formula tolerance"
        )));
    }
    Ok(())
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config, &["quick"])?;
    let v = VerifyOptions {
        quick: a.quick || cfg.get::<bool>("quick")?.unwrap_or(false),
        reflection: if a.perturb_pbs {
            ReflectionPhase::Skewed
        } else {
            ReflectionPhase::None
        },
        execution: execution(cli),
    };
    let start = std::time::Instant::now();
    let checks = run_checks(&v)?;
    let mut text = String::new();
    for c in &checks {
        text += &format!("{c}\n");
    }
    emit(None, &text)?;
    if cli.verbose > 0 {
        eprintln!("verify finished in {:.2} s", start.elapsed().as_secs_f64());
    }
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(CliError::Failed(format!("{n} of {} checks failed", checks.len()))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&cli, a),
        Command::Sweep(a) => cmd_sweep(&cli, a),
        Command::Verify(a) => cmd_verify(&cli, a),
        Command::Trace(a) => cmd_trace(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
