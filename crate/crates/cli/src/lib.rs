// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `purcell-core`.
//!
//! Every command writes plain JSON or CSV. Outputs are byte-identical for
//! identical inputs once `--no-timestamp` drops the one time-dependent field.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numerical
//! non-convergence (a partial result is still written).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use purcell_core::coupling::{self, CouplingResult, LineContribution};
use purcell_core::fitting::{count_emitters, EmitterCount, ReferenceArea, DEFAULT_REFERENCE_REL_SIGMA};
use purcell_core::implant::{self, DosePoint, ImplantConfig, DEFAULT_SPOT_AREA_CM2, DEFAULT_YIELD};
use purcell_core::spectrum::uniform_grid;
use purcell_core::{BackgroundKind, CavityMode, EmitterModel, FitConfig, FitResult, LineShape, Spectrum};

/// Accepted range for any wavelength given on the command line.
pub const SANITY_RANGE_NM: (f64, f64) = (200.0, 2000.0);

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] purcell_core::Error),

    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("fit did not converge after {0} iterations; partial result written")]
    NotConverged(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "purcell-lab",
    version,
    about = "Cavity-enhanced NV emission: fitting, Purcell sweeps, counting, dose planning"
)]
pub struct Cli {
    /// Omit the `generated_at_unix` field so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// JSON object of flag values, applied before the command-line flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a spectrum into line shapes plus background.
    Fit(FitArgs),
    /// Generalized Purcell factor as a function of cavity wavelength.
    Sweep(SweepArgs),
    /// Number of emitters from a window integral.
    Count(CountArgs),
    /// Implantation dose planning and yield estimation.
    #[command(subcommand)]
    Dose(DoseCommand),
    /// Reference model, sweep, operating point and dose plan in one report.
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Spectrum CSV (`wavelength_nm,intensity`).
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,
    /// Initial guess JSON: an array of lines, or `{lines, background, config}`.
    #[arg(long, value_name = "JSON")]
    pub initial: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
    /// Overrides the background kind of the initial-guess file.
    #[arg(long, value_name = "none|constant|linear")]
    pub background: Option<BackgroundKind>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub convergence_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EmitterArgs {
    /// Emitter model JSON; the bundled reference NV model if omitted.
    #[arg(long, value_name = "JSON")]
    pub model: Option<PathBuf>,
    /// Total radiative rate γ in THz (FWHM convention).
    #[arg(long)]
    pub gamma_total_thz: Option<f64>,
    #[arg(long)]
    pub dipole_overlap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CavityArgs {
    #[arg(long, default_value_t = 160.0)]
    pub q_factor: f64,
    /// In units of (λ/n)³.
    #[arg(long, default_value_t = 1.1)]
    pub mode_volume: f64,
    #[arg(long, default_value_t = purcell_core::cavity::DIAMOND_INDEX)]
    pub refractive_index: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 620.0)]
    pub start_nm: f64,
    #[arg(long, default_value_t = 700.0)]
    pub stop_nm: f64,
    #[arg(long, default_value_t = 0.2)]
    pub step_nm: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub emitter: EmitterArgs,
    #[command(flatten)]
    pub cavity: CavityArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Operating wavelength for the summary.
    #[arg(long, default_value_t = 653.0)]
    pub lambda_nm: f64,
    /// Transitions overlapping the mode, for I_on/I_off.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    pub overlap_lines: Vec<usize>,
    /// Sweep CSV destination.
    #[arg(long, value_name = "CSV")]
    pub output: PathBuf,
    /// Summary JSON destination; stdout if omitted.
    #[arg(long, value_name = "JSON")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [629.0, 645.0])]
    pub window_nm: Vec<f64>,
    /// Integrated ZPL intensity of a single emitter.
    #[arg(long)]
    pub reference_area: f64,
    #[arg(long, default_value_t = DEFAULT_REFERENCE_REL_SIGMA)]
    pub reference_rel_sigma: f64,
    #[arg(long, default_value = "none", value_name = "none|constant|linear")]
    pub background: BackgroundKind,
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DoseCommand {
    /// Dose for a target emitter count, or the count distribution at a dose.
    Plan(PlanArgs),
    /// Creation yield from a dose series.
    Yield(YieldArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Target mean emitter count per spot (default 1).
    #[arg(long, conflicts_with = "dose_per_cm2")]
    pub target: Option<f64>,
    /// Evaluate a given dose instead of solving for one.
    #[arg(long)]
    pub dose_per_cm2: Option<f64>,
    #[arg(long)]
    pub spot_area_cm2: Option<f64>,
    #[arg(long = "yield", default_value_t = DEFAULT_YIELD)]
    pub yield_: f64,
    #[arg(long, default_value_t = 10)]
    pub k_max: u64,
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct YieldArgs {
    /// Dose series CSV (`dose_ions_per_cm2,count,count_sigma`).
    #[arg(long, value_name = "CSV")]
    pub input: PathBuf,
    #[arg(long)]
    pub spot_area_cm2: Option<f64>,
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub emitter: EmitterArgs,
    #[command(flatten)]
    pub cavity: CavityArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 653.0)]
    pub lambda_nm: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2])]
    pub overlap_lines: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub target: f64,
    #[arg(long, value_name = "JSON")]
    pub output: Option<PathBuf>,
    /// Also write the sweep as CSV.
    #[arg(long, value_name = "CSV")]
    pub sweep_csv: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(Parse::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
        Err(Parse::Cli(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

enum Parse {
    Clap(clap::Error),
    Cli(CliError),
}

fn parse(args: Vec<OsString>) -> Result<Cli, Parse> {
    let args = inject_config(args).map_err(Parse::Cli)?;
    let mut cmd = Cli::command();
    override_self(&mut cmd);
    let matches = cmd.try_get_matches_from(args).map_err(Parse::Clap)?;
    Cli::from_arg_matches(&matches).map_err(Parse::Clap)
}

fn override_self(cmd: &mut clap::Command) {
    *cmd = std::mem::take(cmd).args_override_self(true);
    for sub in cmd.get_subcommands_mut() {
        override_self(sub);
    }
}

/// Splices the `--config` file's entries into `args` right after the
/// subcommand path, so flags given on the command line take precedence.
///
/// Keys are flag names (`q-factor` or `q_factor`). Values may be numbers,
/// strings, booleans (switches) or arrays (multi-value flags). A key naming a
/// subcommand (`sweep`, `plan`, ...) holds entries applied only to it.
pub fn inject_config(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::File {
        path: path.clone(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let serde_json::Value::Object(map) = value else {
        return Err(CliError::Config {
            path,
            message: "top level must be a JSON object".into(),
        });
    };

    let (insert_at, command_path) = subcommand_path(&args);
    let mut injected = Vec::new();
    for (key, value) in &map {
        if let serde_json::Value::Object(section) = value {
            if command_path.iter().any(|c| c == key) {
                for (k, v) in section {
                    push_flag(&mut injected, k, v, &path)?;
                }
            }
            continue;
        }
        push_flag(&mut injected, key, value, &path)?;
    }
    let mut out = args;
    out.splice(insert_at..insert_at, injected);
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Index just past the (possibly nested) subcommand names, and those names.
fn subcommand_path(args: &[OsString]) -> (usize, Vec<String>) {
    let mut cmd = Cli::command();
    let mut names = Vec::new();
    let mut i = 1;
    let mut end = args.len().min(1);
    while i < args.len() {
        let s = args[i].to_string_lossy().into_owned();
        if s == "--config" {
            i += 2;
            continue;
        }
        if s.starts_with('-') {
            i += 1;
            continue;
        }
        match cmd.find_subcommand(&s) {
            Some(sub) => {
                let sub = sub.clone();
                names.push(s);
                i += 1;
                end = i;
                cmd = sub;
            }
            None => break,
        }
    }
    (end, names)
}

fn push_flag(out: &mut Vec<OsString>, key: &str, value: &serde_json::Value, path: &Path) -> CliResult<()> {
    use serde_json::Value;
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &Value| -> CliResult<String> {
        match v {
            Value::Number(n) => Ok(n.to_string()),
            Value::String(s) => Ok(s.clone()),
            other => Err(CliError::Config {
                path: path.to_path_buf(),
                message: format!("unsupported value for `{key}`: {other}"),
            }),
        }
    };
    match value {
        Value::Null | Value::Bool(false) => {}
        Value::Bool(true) => out.push(flag.into()),
        Value::Array(items) => {
            out.push(flag.into());
            for v in items {
                out.push(scalar(v)?.into());
            }
        }
        v => {
            out.push(flag.into());
            out.push(scalar(v)?.into());
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let meta = Meta::new(!cli.no_timestamp);
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, &meta),
        Command::Sweep(a) => cmd_sweep(a, &meta),
        Command::Count(a) => cmd_count(a, &meta),
        Command::Dose(DoseCommand::Plan(a)) => cmd_dose_plan(a, &meta),
        Command::Dose(DoseCommand::Yield(a)) => cmd_dose_yield(a, &meta),
        Command::ReproducePaper(a) => cmd_reproduce(a, &meta),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
}

impl Meta {
    fn new(timestamp: bool) -> Self {
        Meta {
            tool: "purcell-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generated_at_unix: timestamp
                .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::File {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::File {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(purcell_core::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn read_spectrum(path: &Path) -> CliResult<Spectrum> {
    let file = std::fs::File::open(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })?;
    Spectrum::read_csv(file, path.display().to_string()).map_err(|e| match e {
        purcell_core::Error::Parse { line, message } => {
            CliError::Invalid(format!("{}:{line}: {message}", path.display()))
        }
        other => other.into(),
    })
}

fn check_wavelength(name: &str, nm: f64) -> CliResult<()> {
    let (lo, hi) = SANITY_RANGE_NM;
    if !(nm >= lo && nm <= hi) {
        return Err(CliError::Invalid(format!("--{name} {nm} outside {lo}-{hi} nm")));
    }
    Ok(())
}

// ---- fit ----

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InitialGuess {
    Lines(Vec<LineShape>),
    Spec(FitSpec),
}

#[derive(Debug, Deserialize)]
struct FitSpec {
    lines: Vec<LineShape>,
    #[serde(default)]
    background: BackgroundKind,
    #[serde(default)]
    config: FitConfig,
}

#[derive(Serialize)]
struct FitReport<'a> {
    meta: &'a Meta,
    input: String,
    #[serde(flatten)]
    result: &'a FitResult,
}

fn cmd_fit(a: &FitArgs, meta: &Meta) -> CliResult<()> {
    let spectrum = read_spectrum(&a.input)?;
    let text = std::fs::read_to_string(&a.initial).map_err(|source| CliError::File {
        path: a.initial.clone(),
        source,
    })?;
    let spec = match serde_json::from_str::<InitialGuess>(&text) {
        Ok(InitialGuess::Lines(lines)) => FitSpec {
            lines,
            background: BackgroundKind::None,
            config: FitConfig::default(),
        },
        Ok(InitialGuess::Spec(s)) => s,
        Err(e) => {
            return Err(CliError::Config {
                path: a.initial.clone(),
                message: format!("not a list of lines or {{lines, background, config}}: {e}"),
            })
        }
    };
    let mut config = spec.config;
    if let Some(n) = a.max_iterations {
        config.max_iterations = n;
    }
    if let Some(t) = a.convergence_tol {
        config.convergence_tol = t;
    }
    let background = a.background.unwrap_or(spec.background);
    let (result, failure) = match purcell_core::fit_multipeak(&spectrum, &spec.lines, background, &config) {
        Ok(r) => (r, None),
        Err(purcell_core::Error::FitFailure {
            message,
            iterations,
            last,
        }) => (*last, Some((message, iterations))),
        Err(e) => return Err(e.into()),
    };
    let report = FitReport {
        meta,
        input: a.input.display().to_string(),
        result: &result,
    };
    write_output(a.output.as_deref(), &to_json(&report)?)?;
    if let Some((message, iterations)) = failure {
        eprintln!("warning: {message}");
        return Err(CliError::NotConverged(iterations));
    }
    if !result.converged {
        return Err(CliError::NotConverged(result.iterations));
    }
    Ok(())
}

// ---- sweep / reproduce-paper ----

fn load_emitter(a: &EmitterArgs) -> CliResult<(EmitterModel, String)> {
    let (mut model, source) = match &a.model {
        Some(p) => (EmitterModel::from_json_path(p)?, p.display().to_string()),
        None => (EmitterModel::reference(), "reference".to_string()),
    };
    if let Some(g) = a.gamma_total_thz {
        model = model.with_gamma_total(g)?;
    }
    if let Some(x) = a.dipole_overlap {
        model = model.with_dipole_overlap(x)?;
    }
    Ok((model, source))
}

fn build_cavity(a: &CavityArgs, lambda_nm: f64) -> CliResult<CavityMode> {
    check_wavelength("lambda-nm", lambda_nm)?;
    Ok(CavityMode::new(
        lambda_nm,
        a.q_factor,
        a.mode_volume,
        a.refractive_index,
        "c1",
    )?)
}

fn build_grid(g: &GridArgs) -> CliResult<Vec<f64>> {
    check_wavelength("start-nm", g.start_nm)?;
    check_wavelength("stop-nm", g.stop_nm)?;
    if !(g.step_nm > 0.0 && g.step_nm.is_finite()) {
        return Err(CliError::Invalid(format!("--step-nm must be > 0, got {}", g.step_nm)));
    }
    if g.stop_nm < g.start_nm {
        return Err(CliError::Invalid("--stop-nm must not be below --start-nm".into()));
    }
    let grid = uniform_grid(g.start_nm, g.stop_nm, g.step_nm);
    if grid.len() > 1_000_000 {
        return Err(CliError::Invalid(format!("grid of {} points is too large", grid.len())));
    }
    Ok(grid)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub lambda_nm: f64,
    pub f_star: f64,
    pub purcell_enhancement: f64,
    pub beta: f64,
    pub overlap_lines: Vec<usize>,
    pub overlap: f64,
    pub intensity_enhancement: f64,
    pub per_line: Vec<LineContribution>,
}

fn operating_point(model: &EmitterModel, cavity: &CavityMode, overlap_lines: &[usize]) -> CliResult<OperatingPoint> {
    let r = coupling::generalized_purcell(model, cavity);
    let overlap = coupling::overlap_fraction(model, overlap_lines.iter().copied())?;
    Ok(OperatingPoint {
        lambda_nm: r.lambda_c,
        f_star: r.f_star,
        purcell_enhancement: r.purcell_enhancement(),
        beta: r.beta,
        overlap_lines: overlap_lines.to_vec(),
        overlap,
        intensity_enhancement: coupling::intensity_enhancement(r.f_star, overlap)?,
        per_line: r.per_line,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CavitySummary {
    pub q_factor: f64,
    pub mode_volume: f64,
    pub refractive_index: f64,
    pub ideal_purcell: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
    pub points: usize,
    pub constant_q_and_volume: bool,
    pub peak_lambda_nm: f64,
    pub peak_f_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmitterSummary {
    pub source: String,
    pub gamma_total_thz: f64,
    pub dipole_overlap: f64,
    pub transitions: usize,
}

/// Summary document written by `sweep`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub meta: Meta,
    pub emitter: EmitterSummary,
    pub cavity: CavitySummary,
    pub sweep: SweepSummary,
    pub operating_point: OperatingPoint,
}

fn sweep_csv(points: &[CouplingResult]) -> String {
    let n_lines = points.first().map_or(0, |p| p.per_line.len());
    let mut out = String::from("lambda_nm,f_star,beta");
    for k in 0..n_lines {
        out.push_str(&format!(",line{k}"));
    }
    out.push('\n');
    for p in points {
        out.push_str(&format!("{},{},{}", p.lambda_c, p.f_star, p.beta));
        for c in &p.per_line {
            out.push_str(&format!(",{}", c.f_star));
        }
        out.push('\n');
    }
    out
}

fn run_sweep(
    emitter: &EmitterArgs,
    cavity: &CavityArgs,
    grid: &GridArgs,
    lambda_nm: f64,
    overlap_lines: &[usize],
    meta: &Meta,
) -> CliResult<(SweepReport, Vec<CouplingResult>)> {
    let (model, source) = load_emitter(emitter)?;
    let c1 = build_cavity(cavity, lambda_nm)?;
    let lambdas = build_grid(grid)?;
    let sweep = coupling::sweep_purcell(&model, &c1, &lambdas)?;
    let peak = sweep.peak().expect("grid is non-empty");
    let report = SweepReport {
        meta: meta.clone(),
        emitter: EmitterSummary {
            source,
            gamma_total_thz: model.gamma_total(),
            dipole_overlap: model.dipole_overlap(),
            transitions: model.transitions().len(),
        },
        cavity: CavitySummary {
            q_factor: c1.q_factor(),
            mode_volume: c1.mode_volume(),
            refractive_index: c1.refractive_index(),
            ideal_purcell: coupling::ideal_purcell(&c1),
        },
        sweep: SweepSummary {
            start_nm: grid.start_nm,
            stop_nm: grid.stop_nm,
            step_nm: grid.step_nm,
            points: sweep.points.len(),
            constant_q_and_volume: sweep.constant_q_and_volume,
            peak_lambda_nm: peak.lambda_c,
            peak_f_star: peak.f_star,
        },
        operating_point: operating_point(&model, &c1, overlap_lines)?,
    };
    Ok((report, sweep.points))
}

fn cmd_sweep(a: &SweepArgs, meta: &Meta) -> CliResult<()> {
    let (report, points) = run_sweep(&a.emitter, &a.cavity, &a.grid, a.lambda_nm, &a.overlap_lines, meta)?;
    write_output(Some(&a.output), &sweep_csv(&points))?;
    write_output(a.summary.as_deref(), &to_json(&report)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DosePlan {
    pub target_count: f64,
    pub dose_per_cm2: f64,
    pub expected_count: f64,
    pub spot_area_cm2: f64,
    pub spot_area_is_default: bool,
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub single_emitter_probability: f64,
    /// P(k) for k = 0..=k_max.
    pub distribution: Vec<f64>,
}

fn plan(
    target: Option<f64>,
    dose: Option<f64>,
    spot_area: Option<f64>,
    yield_: f64,
    k_max: u64,
) -> CliResult<DosePlan> {
    let area = spot_area.unwrap_or(DEFAULT_SPOT_AREA_CM2);
    let dose = match (target, dose) {
        (_, Some(d)) => d,
        (t, None) => implant::optimal_dose(t.unwrap_or(1.0), area, yield_)?,
    };
    let config = ImplantConfig::new(dose, area, yield_)?;
    let mu = implant::expected_count(&config);
    Ok(DosePlan {
        target_count: target.unwrap_or(mu),
        dose_per_cm2: dose,
        expected_count: mu,
        spot_area_cm2: area,
        spot_area_is_default: spot_area.is_none(),
        yield_,
        single_emitter_probability: implant::single_emitter_probability(&config),
        distribution: implant::count_distribution(&config, k_max),
    })
}

#[derive(Serialize)]
struct PlanReport<'a> {
    meta: &'a Meta,
    #[serde(flatten)]
    plan: &'a DosePlan,
}

fn cmd_dose_plan(a: &PlanArgs, meta: &Meta) -> CliResult<()> {
    let p = plan(a.target, a.dose_per_cm2, a.spot_area_cm2, a.yield_, a.k_max)?;
    write_output(a.output.as_deref(), &to_json(&PlanReport { meta, plan: &p })?)
}

#[derive(Serialize)]
struct YieldReport<'a> {
    meta: &'a Meta,
    spot_area_cm2: f64,
    spot_area_is_default: bool,
    #[serde(rename = "yield")]
    yield_: f64,
    sigma: f64,
    points: &'a [DosePoint],
}

fn cmd_dose_yield(a: &YieldArgs, meta: &Meta) -> CliResult<()> {
    let file = std::fs::File::open(&a.input).map_err(|source| CliError::File {
        path: a.input.clone(),
        source,
    })?;
    let points = implant::read_dose_csv(file).map_err(|e| match e {
        purcell_core::Error::Parse { line, message } => {
            CliError::Invalid(format!("{}:{line}: {message}", a.input.display()))
        }
        other => other.into(),
    })?;
    let area = a.spot_area_cm2.unwrap_or(DEFAULT_SPOT_AREA_CM2);
    let est = implant::estimate_yield(&points, area)?;
    let report = YieldReport {
        meta,
        spot_area_cm2: area,
        spot_area_is_default: a.spot_area_cm2.is_none(),
        yield_: est.yield_,
        sigma: est.sigma,
        points: &est.points,
    };
    write_output(a.output.as_deref(), &to_json(&report)?)
}

// ---- count ----

#[derive(Serialize)]
struct CountReport<'a> {
    meta: &'a Meta,
    input: String,
    reference_area: f64,
    reference_rel_sigma: f64,
    #[serde(flatten)]
    count: &'a EmitterCount,
    interval: (f64, f64),
    integer_interval: (i64, i64),
}

fn cmd_count(a: &CountArgs, meta: &Meta) -> CliResult<()> {
    let (lo, hi) = (a.window_nm[0], a.window_nm[1]);
    if !(lo < hi) {
        return Err(CliError::Invalid(format!(
            "--window-nm {lo} {hi}: low edge must be below high edge"
        )));
    }
    let spectrum = read_spectrum(&a.input)?;
    let reference = ReferenceArea::new(a.reference_area).with_rel_sigma(a.reference_rel_sigma);
    let count = count_emitters(&spectrum, (lo, hi), reference, a.background)?;
    let ints = count.integer_interval();
    let report = CountReport {
        meta,
        input: a.input.display().to_string(),
        reference_area: a.reference_area,
        reference_rel_sigma: a.reference_rel_sigma,
        interval: count.interval(),
        integer_interval: (*ints.start(), *ints.end()),
        count: &count,
    };
    write_output(a.output.as_deref(), &to_json(&report)?)
}

// ---- reproduce-paper ----

/// Report written by `reproduce-paper`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub meta: Meta,
    pub emitter: EmitterSummary,
    pub cavity: CavitySummary,
    pub operating_point: OperatingPoint,
    pub sweep: SweepSummary,
    pub sweep_lambda_nm: Vec<f64>,
    pub sweep_f_star: Vec<f64>,
    pub sweep_beta: Vec<f64>,
    pub dose_plan: DosePlan,
}

fn cmd_reproduce(a: &ReproduceArgs, meta: &Meta) -> CliResult<()> {
    let (s, points) = run_sweep(&a.emitter, &a.cavity, &a.grid, a.lambda_nm, &a.overlap_lines, meta)?;
    let report = ReproduceReport {
        meta: s.meta,
        emitter: s.emitter,
        cavity: s.cavity,
        operating_point: s.operating_point,
        sweep: s.sweep,
        sweep_lambda_nm: points.iter().map(|p| p.lambda_c).collect(),
        sweep_f_star: points.iter().map(|p| p.f_star).collect(),
        sweep_beta: points.iter().map(|p| p.beta).collect(),
        dose_plan: plan(Some(a.target), None, None, DEFAULT_YIELD, 10)?,
    };
    if let Some(p) = &a.sweep_csv {
        write_output(Some(p), &sweep_csv(&points))?;
    }
    write_output(a.output.as_deref(), &to_json(&report)?)
}
