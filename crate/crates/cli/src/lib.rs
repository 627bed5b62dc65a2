//! `haar-law` command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use haar_law::analysis::{
    clt_diagnostics, default_z_grid, levy_compare, number_operator_tail, CltReport,
};
use haar_law::io::{self, grid_csv};
use haar_law::law::identity_check;
use haar_law::moments::{
    moments_compact, moments_fidelity, moments_permutation, moments_power_sum, moments_quadrature,
    MomentReport,
};
use haar_law::montecarlo::{ks_test, sample, SampleSet};
use haar_law::{compile_law, Error, Law, PrecisionPolicy, Spectrum, SpectrumKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;

/// Points in the default evaluation grid.
pub const DEFAULT_POINTS: usize = 1001;
/// Default grid endpoints sit this fraction of the range inside the support.
pub const GRID_NUDGE: f64 = 1e-12;
/// Bits used when an automatic policy runs out of range.
const FALLBACK_BITS: usize = 512;

#[derive(Parser, Debug)]
#[command(
    name = "haar-law",
    version,
    about = "Exact law of <psi|A|psi> over Haar-random pure states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Density on a grid.
    Density(GridCmd),
    /// Cumulative distribution on a grid.
    Cdf(GridCmd),
    /// Characteristic function on a grid of frequencies (columns x,re,im).
    Charfn(GridCmd),
    /// Moments and cumulants by every applicable route.
    Moments(MomentsCmd),
    /// Monte Carlo draws, written as CSV plus a JSON sidecar.
    Sample(SampleCmd),
    /// Kolmogorov-Smirnov test of samples against the exact CDF.
    Kstest(KsCmd),
    /// Exact upper tail against the Levy bound.
    Levy(LevyCmd),
    /// Cumulants and rescaled densities across dimensions.
    Clt(CltCmd),
    /// Partial-fraction identity sums for a non-degenerate spectrum.
    Identities(IdentitiesCmd),
    /// Density curves for a_k = k/d.
    Fig1(Fig1Cmd),
    /// Rescaled densities against the standard normal for k^2 and ln k.
    Fig2(Fig2Cmd),
    /// Writes the resolved spectrum.
    Spectrum(SpectrumCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    Projector,
    NumberOperator,
    Power,
    Log,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct GeneratorArgs {
    /// Named spectrum family.
    #[arg(long, value_enum)]
    generate: Option<Generator>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    value: Option<f64>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Spectrum file (JSON or value,multiplicity CSV).
    #[arg(long, conflicts_with = "generate")]
    spectrum: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct PrecisionArgs {
    /// fast | compensated | high[:<bits>]; chosen from the spectrum when absent.
    #[arg(long)]
    precision: Option<String>,
}

#[derive(Args, Debug)]
struct GridCmd {
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// min:max:points.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    precision: PrecisionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct MomentsCmd {
    #[command(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long, default_value_t = 4)]
    nmax: usize,
    #[command(flatten)]
    precision: PrecisionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SampleCmd {
    #[command(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Sample CSV; the sidecar goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KsCmd {
    /// Sample CSV written by `sample`; drawn afresh when absent.
    #[arg(long, conflicts_with_all = ["spectrum", "generate"])]
    input: Option<PathBuf>,
    #[command(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[command(flatten)]
    precision: PrecisionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LevyCmd {
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Deviation grid min:max:points (all positive).
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CltCmd {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Ascending comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128, 256])]
    dims: Vec<usize>,
    /// Standardized grid min:max:points.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct IdentitiesCmd {
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Comma-separated shifts.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 10.0, -10.0])]
    omega: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Fig1Cmd {
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 9, 17])]
    dims: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    #[command(flatten)]
    precision: PrecisionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Fig2Cmd {
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128, 256])]
    dims: Vec<usize>,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SpectrumCmd {
    #[command(flatten)]
    spectrum: SpectrumArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            error,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Outcome<()> {
    match command {
        Command::Density(c) => grid_command(c, GridKind::Density),
        Command::Cdf(c) => grid_command(c, GridKind::Cdf),
        Command::Charfn(c) => grid_command(c, GridKind::Charfn),
        Command::Moments(c) => moments_command(c),
        Command::Sample(c) => sample_command(c),
        Command::Kstest(c) => ks_command(c),
        Command::Levy(c) => levy_command(c),
        Command::Clt(c) => clt_command(c),
        Command::Identities(c) => identities_command(c),
        Command::Fig1(c) => fig1_command(c),
        Command::Fig2(c) => fig2_command(c),
        Command::Spectrum(c) => spectrum_command(c),
    }
}

fn generator_kind(g: &GeneratorArgs) -> anyhow::Result<Option<SpectrumKind>> {
    let Some(which) = g.generate else {
        if g.rank.is_some() || g.alpha.is_some() || g.value.is_some() {
            bail!("--rank, --alpha and --value need --generate");
        }
        return Ok(None);
    };
    let stray = |flag: &str, set: bool| -> anyhow::Result<()> {
        if set {
            bail!("{flag} does not apply to this generator");
        }
        Ok(())
    };
    let kind = match which {
        Generator::Projector => {
            stray("--alpha", g.alpha.is_some())?;
            stray("--value", g.value.is_some())?;
            SpectrumKind::Projector {
                rank: g.rank.context("projector needs --rank")?,
            }
        }
        Generator::NumberOperator | Generator::Log => {
            stray("--rank", g.rank.is_some())?;
            stray("--alpha", g.alpha.is_some())?;
            stray("--value", g.value.is_some())?;
            if which == Generator::Log {
                SpectrumKind::Log
            } else {
                SpectrumKind::NumberOperator
            }
        }
        Generator::Power => {
            stray("--rank", g.rank.is_some())?;
            stray("--value", g.value.is_some())?;
            SpectrumKind::Power {
                alpha: g.alpha.context("power needs --alpha")?,
            }
        }
        Generator::Constant => {
            stray("--rank", g.rank.is_some())?;
            stray("--alpha", g.alpha.is_some())?;
            SpectrumKind::Constant {
                value: g.value.context("constant needs --value")?,
            }
        }
    };
    Ok(Some(kind))
}

fn resolve_spectrum(args: &SpectrumArgs) -> anyhow::Result<(Spectrum, Option<SpectrumKind>)> {
    let kind = generator_kind(&args.generator)?;
    match (&args.spectrum, kind) {
        (Some(path), None) => {
            if args.dim.is_some() {
                bail!("--dim applies only with --generate");
            }
            Ok((io::read_spectrum(path)?, None))
        }
        (None, Some(kind)) => {
            let d = args.dim.context("--generate needs --dim")?;
            Ok((haar_law::generate(&kind, d)?, Some(kind)))
        }
        (None, None) => bail!("give --spectrum <path> or --generate <kind> --dim <d>"),
        (Some(_), Some(_)) => bail!("--spectrum and --generate are exclusive"),
    }
}

/// `None` lets the spectrum pick the policy, with a high-precision retry.
fn parse_precision(text: Option<&str>) -> anyhow::Result<Option<PrecisionPolicy>> {
    let Some(text) = text else { return Ok(None) };
    let policy = match text {
        "fast" => PrecisionPolicy::fast(),
        "compensated" => PrecisionPolicy::compensated(),
        "high" => PrecisionPolicy::high(haar_law::law::DEFAULT_HIGH_BITS)?,
        other => {
            let bits = other
                .strip_prefix("high:")
                .and_then(|b| b.parse::<usize>().ok())
                .ok_or_else(|| {
                    anyhow!("unknown precision {other:?}; use fast, compensated or high:<bits>")
                })?;
            PrecisionPolicy::high(bits)?
        }
    };
    Ok(Some(policy))
}

fn precision_failure(e: Error) -> Failure {
    let code = if matches!(e, Error::PrecisionExceeded(_)) {
        EXIT_PRECISION
    } else {
        EXIT_INPUT
    };
    Failure {
        code,
        error: e.into(),
    }
}

/// Compiles the law. An explicit policy is never overridden; an automatic
/// one that runs out of range retries in wide software floats.
fn compile(s: &Spectrum, explicit: Option<PrecisionPolicy>) -> Outcome<Law> {
    match explicit {
        Some(policy) => compile_law(s, policy).map_err(precision_failure),
        None => match compile_law(s, PrecisionPolicy::suggest(s)) {
            Err(Error::PrecisionExceeded(_)) => {
                compile_law(s, PrecisionPolicy::high(FALLBACK_BITS)?).map_err(precision_failure)
            }
            other => Ok(other?),
        },
    }
}

/// Parses `min:max:points`.
fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        bail!("grid {text:?} is not min:max:points");
    };
    let lo: f64 = lo
        .trim()
        .parse()
        .with_context(|| format!("grid minimum {lo:?}"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .with_context(|| format!("grid maximum {hi:?}"))?;
    let n: usize = n
        .trim()
        .parse()
        .with_context(|| format!("grid points {n:?}"))?;
    if n < 2 {
        bail!("grid needs at least 2 points");
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        bail!("grid bounds must be finite with min < max");
    }
    Ok(linspace(lo, hi, n))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// The support with both ends nudged inward.
pub fn default_support_grid(s: &Spectrum, points: usize) -> Vec<f64> {
    let nudge = GRID_NUDGE * s.range();
    linspace(s.min() + nudge, s.max() - nudge, points)
}

fn emit(output: &OutputArgs, contents: &str) -> anyhow::Result<()> {
    match &output.out {
        Some(path) => io::write(path, contents)?,
        None => std::io::stdout().lock().write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Clone, Copy)]
enum GridKind {
    Density,
    Cdf,
    Charfn,
}

#[derive(Serialize)]
struct GridJson<'a> {
    x: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    re: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

fn grid_command(cmd: GridCmd, kind: GridKind) -> Outcome<()> {
    let (s, _) = resolve_spectrum(&cmd.spectrum)?;
    let explicit = parse_precision(cmd.precision.precision.as_deref())?;
    let xs = match (&cmd.grid, kind) {
        (Some(text), _) => parse_grid(text)?,
        (None, GridKind::Charfn) => {
            // ten oscillations across the support
            let top = 20.0 * std::f64::consts::PI / if s.range() > 0.0 { s.range() } else { 1.0 };
            linspace(0.0, top, DEFAULT_POINTS)
        }
        (None, _) if s.is_point_mass() => {
            return Err(anyhow!("the support is a single point; pass --grid").into());
        }
        (None, _) => default_support_grid(&s, DEFAULT_POINTS),
    };
    let law = compile(&s, explicit)?;
    let format = cmd.output.format.unwrap_or(Format::Csv);
    let text = match kind {
        GridKind::Density | GridKind::Cdf => {
            let values = xs
                .iter()
                .map(|&x| match kind {
                    GridKind::Density => law.density(x),
                    _ => Ok(law.cdf(x)),
                })
                .collect::<haar_law::Result<Vec<f64>>>()?;
            match format {
                Format::Csv => {
                    let rows: Vec<Vec<f64>> =
                        xs.iter().zip(&values).map(|(&x, &v)| vec![x, v]).collect();
                    grid_csv(&["x", "value"], &rows)
                }
                Format::Json => to_json(&GridJson {
                    x: &xs,
                    value: Some(values),
                    re: None,
                    im: None,
                })?,
            }
        }
        GridKind::Charfn => {
            let values = xs
                .iter()
                .map(|&l| law.char_fn(l))
                .collect::<haar_law::Result<Vec<_>>>()
                .map_err(precision_failure)?;
            match format {
                Format::Csv => {
                    let rows: Vec<Vec<f64>> = xs
                        .iter()
                        .zip(&values)
                        .map(|(&x, v)| vec![x, v.re, v.im])
                        .collect();
                    grid_csv(&["x", "re", "im"], &rows)
                }
                Format::Json => to_json(&GridJson {
                    x: &xs,
                    value: None,
                    re: Some(values.iter().map(|v| v.re).collect()),
                    im: Some(values.iter().map(|v| v.im).collect()),
                })?,
            }
        }
    };
    Ok(emit(&cmd.output, &text)?)
}

#[derive(Serialize)]
#[serde(untagged)]
enum Route {
    Done(MomentReport),
    Skipped { skipped: String },
}

impl From<haar_law::Result<MomentReport>> for Route {
    fn from(r: haar_law::Result<MomentReport>) -> Self {
        match r {
            Ok(report) => Route::Done(report),
            Err(e) => Route::Skipped {
                skipped: e.to_string(),
            },
        }
    }
}

#[derive(Serialize)]
struct Routes {
    power_sum: Route,
    compact: Route,
    permutation: Route,
    quadrature: Route,
    fidelity: Route,
}

#[derive(Serialize)]
struct MomentsJson {
    spectrum: Spectrum,
    n_max: usize,
    routes: Routes,
}

fn is_rank_one_projector(s: &Spectrum) -> bool {
    s.values() == [0.0, 1.0] && s.multiplicities()[1] == 1
}

fn moments_command(cmd: MomentsCmd) -> Outcome<()> {
    let (s, _) = resolve_spectrum(&cmd.spectrum)?;
    let explicit = parse_precision(cmd.precision.precision.as_deref())?;
    if cmd.nmax == 0 {
        return Err(anyhow!("--nmax must be at least 1").into());
    }
    let n = cmd.nmax;
    let quadrature = match compile(&s, explicit) {
        Ok(law) => moments_quadrature(&law, n).into(),
        Err(f) if f.code == EXIT_PRECISION => return Err(f),
        Err(f) => Route::Skipped {
            skipped: format!("{:#}", f.error),
        },
    };
    let fidelity = if is_rank_one_projector(&s) {
        moments_fidelity(s.dim(), n).into()
    } else {
        Route::Skipped {
            skipped: "applies to a rank-one projector only".into(),
        }
    };
    let report = MomentsJson {
        routes: Routes {
            power_sum: Route::Done(moments_power_sum(&s, n)),
            compact: moments_compact(&s, n).into(),
            permutation: moments_permutation(&s, n).into(),
            quadrature,
            fidelity,
        },
        spectrum: s,
        n_max: n,
    };
    let text = match cmd.output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut out = String::from("route,n,moment\n");
            let r = &report.routes;
            for (name, route) in [
                ("power_sum", &r.power_sum),
                ("compact", &r.compact),
                ("permutation", &r.permutation),
                ("quadrature", &r.quadrature),
                ("fidelity", &r.fidelity),
            ] {
                if let Route::Done(m) = route {
                    for (i, v) in m.moments.iter().enumerate() {
                        let _ = writeln!(out, "{name},{},{}", i + 1, io::fmt_float(*v));
                    }
                }
            }
            out
        }
    };
    Ok(emit(&cmd.output, &text)?)
}

fn sample_command(cmd: SampleCmd) -> Outcome<()> {
    let (s, _) = resolve_spectrum(&cmd.spectrum)?;
    if cmd.samples == 0 {
        return Err(anyhow!("--samples must be positive").into());
    }
    let set = sample(&s, cmd.samples, cmd.seed)?;
    io::write_samples(&cmd.out, &set)?;
    Ok(())
}

#[derive(Serialize)]
struct KsJson {
    seed: u64,
    #[serde(flatten)]
    report: haar_law::GofReport,
    accepted: bool,
}

fn ks_command(cmd: KsCmd) -> Outcome<()> {
    let explicit = parse_precision(cmd.precision.precision.as_deref())?;
    let set: SampleSet = match &cmd.input {
        Some(path) => io::read_samples(path)?,
        None => {
            let (s, _) = resolve_spectrum(&cmd.spectrum)?;
            sample(&s, cmd.samples, cmd.seed)?
        }
    };
    let law = compile(&set.spectrum, explicit)?;
    let report = ks_test(&set, &law)?;
    if cmd.output.format == Some(Format::Csv) {
        return Err(anyhow!("kstest writes JSON only").into());
    }
    let accepted = report.accepted();
    Ok(emit(
        &cmd.output,
        &to_json(&KsJson {
            seed: set.seed,
            report,
            accepted,
        })?,
    )?)
}

fn levy_command(cmd: LevyCmd) -> Outcome<()> {
    let (s, kind) = resolve_spectrum(&cmd.spectrum)?;
    let eps = match &cmd.grid {
        Some(text) => parse_grid(text)?,
        None => {
            let top = s.max() - s.mean();
            (1..=200).map(|i| top * i as f64 / 200.0).collect()
        }
    };
    let format = cmd.output.format.unwrap_or(Format::Json);
    let text = if kind == Some(SpectrumKind::NumberOperator) {
        let report = number_operator_tail(s.dim(), &eps)?;
        match format {
            Format::Json => to_json(&report)?,
            Format::Csv => {
                let c = &report.concentration;
                let rows: Vec<Vec<f64>> = (0..eps.len())
                    .map(|i| {
                        vec![
                            eps[i],
                            c.exact_tail[i],
                            c.levy_bound[i],
                            report.reference_bound[i],
                        ]
                    })
                    .collect();
                grid_csv(
                    &["eps", "exact_tail", "levy_bound", "reference_bound"],
                    &rows,
                )
            }
        }
    } else {
        let report = levy_compare(&s, &eps)?;
        match format {
            Format::Json => to_json(&report)?,
            Format::Csv => {
                let rows: Vec<Vec<f64>> = (0..eps.len())
                    .map(|i| vec![eps[i], report.exact_tail[i], report.levy_bound[i]])
                    .collect();
                grid_csv(&["eps", "exact_tail", "levy_bound"], &rows)
            }
        }
    };
    Ok(emit(&cmd.output, &text)?)
}

fn clt_csv(reports: &[(&str, &CltReport)]) -> String {
    let mut out = String::from("family,dim,z,rescaled_density,normal_density\n");
    for (family, report) in reports {
        for row in &report.rows {
            for i in 0..row.z.len() {
                let _ = writeln!(
                    out,
                    "{family},{},{},{},{}",
                    row.dim,
                    io::fmt_float(row.z[i]),
                    io::fmt_float(row.rescaled_density[i]),
                    io::fmt_float(row.normal_density[i])
                );
            }
        }
    }
    out
}

fn z_grid(grid: Option<&str>) -> anyhow::Result<Vec<f64>> {
    grid.map_or_else(|| Ok(default_z_grid()), parse_grid)
}

fn clt_command(cmd: CltCmd) -> Outcome<()> {
    let kind = generator_kind(&cmd.generator)?.context("clt needs --generate")?;
    let report = clt_diagnostics(&kind, &cmd.dims, &z_grid(cmd.grid.as_deref())?)?;
    let text = match cmd.output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Csv => clt_csv(&[("generated", &report)]),
    };
    Ok(emit(&cmd.output, &text)?)
}

fn fig2_command(cmd: Fig2Cmd) -> Outcome<()> {
    let z = z_grid(cmd.grid.as_deref())?;
    let square = clt_diagnostics(&SpectrumKind::Power { alpha: 2.0 }, &cmd.dims, &z)?;
    let log = clt_diagnostics(&SpectrumKind::Log, &cmd.dims, &z)?;
    let text = match cmd.output.format.unwrap_or(Format::Csv) {
        Format::Csv => clt_csv(&[("square", &square), ("log", &log)]),
        Format::Json => to_json(&[square, log])?,
    };
    Ok(emit(&cmd.output, &text)?)
}

#[derive(Serialize)]
struct IdentityRow {
    omega: f64,
    n: usize,
    value: f64,
    expected: f64,
}

fn identities_command(cmd: IdentitiesCmd) -> Outcome<()> {
    let (s, _) = resolve_spectrum(&cmd.spectrum)?;
    let mut rows = Vec::new();
    for &omega in &cmd.omega {
        for n in 0..s.dim() {
            rows.push(IdentityRow {
                omega,
                n,
                value: identity_check(&s, omega, n)?,
                expected: if n + 1 == s.dim() { 1.0 } else { 0.0 },
            });
        }
    }
    let text = match cmd.output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut out = String::from("omega,n,value,expected\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    io::fmt_float(r.omega),
                    r.n,
                    io::fmt_float(r.value),
                    r.expected
                );
            }
            out
        }
    };
    Ok(emit(&cmd.output, &text)?)
}

/// Spectrum `a_k = k/d`, `k = 1..d`.
pub fn scaled_number_operator(d: usize) -> haar_law::Result<Spectrum> {
    Spectrum::from_distinct(&(1..=d).map(|k| k as f64 / d as f64).collect::<Vec<_>>())
}

fn fig1_command(cmd: Fig1Cmd) -> Outcome<()> {
    let explicit = parse_precision(cmd.precision.precision.as_deref())?;
    if cmd.points < 2 {
        return Err(anyhow!("--points must be at least 2").into());
    }
    let mut curves = Vec::new();
    for &d in &cmd.dims {
        if d < 2 {
            return Err(anyhow!("fig1 dimensions must be at least 2").into());
        }
        let s = scaled_number_operator(d)?;
        let law = compile(&s, explicit)?;
        let xs = default_support_grid(&s, cmd.points);
        let values = xs
            .iter()
            .map(|&x| law.density(x))
            .collect::<haar_law::Result<Vec<_>>>()?;
        curves.push((d, xs, values));
    }
    let text = match cmd.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("dim,x,value\n");
            for (d, xs, values) in &curves {
                for (x, v) in xs.iter().zip(values) {
                    let _ = writeln!(out, "{d},{},{}", io::fmt_float(*x), io::fmt_float(*v));
                }
            }
            out
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Curve<'a> {
                dim: usize,
                x: &'a [f64],
                value: &'a [f64],
            }
            let list: Vec<Curve> = curves
                .iter()
                .map(|(d, x, v)| Curve {
                    dim: *d,
                    x,
                    value: v,
                })
                .collect();
            to_json(&list)?
        }
    };
    Ok(emit(&cmd.output, &text)?)
}

fn spectrum_command(cmd: SpectrumCmd) -> Outcome<()> {
    let (s, _) = resolve_spectrum(&cmd.spectrum)?;
    let text = match cmd.output.format.unwrap_or(Format::Json) {
        Format::Json => io::spectrum_json(&s),
        Format::Csv => io::spectrum_csv(&s),
    };
    Ok(emit(&cmd.output, &text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use haar_law::PrecisionMode;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(parse_grid("0:1:1").is_err());
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:nan:4").is_err());
    }

    #[test]
    fn precision_parsing() {
        assert_eq!(parse_precision(None).unwrap(), None);
        assert_eq!(
            parse_precision(Some("fast")).unwrap().unwrap().mode,
            PrecisionMode::FastFloat
        );
        assert_eq!(
            parse_precision(Some("high:320")).unwrap().unwrap().mode,
            PrecisionMode::HighPrecision { bits: 320 }
        );
        assert!(parse_precision(Some("high:x")).is_err());
        assert!(parse_precision(Some("double")).is_err());
    }

    #[test]
    fn default_grid_stays_inside_support() {
        let s = Spectrum::from_distinct(&[-2.0, 3.0]).unwrap();
        let g = default_support_grid(&s, DEFAULT_POINTS);
        assert_eq!(g.len(), DEFAULT_POINTS);
        assert!(g[0] > -2.0 && g[DEFAULT_POINTS - 1] < 3.0);
        assert!((g[0] + 2.0 - 5e-12).abs() < 1e-15);
    }
}
