//! The `equicorr` command line.
//!
//! Exit codes: 0 on success, 2 on usage errors (including invalid parameter
//! values), 1 on computation or data errors. A sweep with any failed cell
//! still writes its tables but exits 1.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data_io::{self, ReadOptions, ReportFormat, DEFAULT_T};
use crate::enp_sim::{run_cpv_sweep, run_gk_sweep, SweepSpec};
use crate::error::Error;
use crate::mp_dist::{gk_saturation_index, LimitParams, MpLaw};

pub const SEED_ENV: &str = "EQUICORR_SEED";

/// Desk-scale figure defaults.
pub const FIGURE_N: usize = 500;
pub const FIGURE_P_MAX: usize = 2000;
pub const FIGURE_RHOS: [f64; 4] = [0.0, 0.3, 0.5, 0.8];
pub const FIGURE_T: f64 = 0.7;

#[derive(Debug, Parser)]
#[command(
    name = "equicorr",
    version,
    about = "Marchenko-Pastur limits of PCA retention rules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a Marchenko-Pastur law.
    Mp(MpArgs),
    /// Tabulate the GK (and optionally CPV) limits over a grid.
    Limits(LimitsArgs),
    /// Run Monte Carlo sweeps on equi-correlated normal samples.
    Simulate(SimulateArgs),
    /// Retention analysis of CSV datasets.
    Analyze(AnalyzeArgs),
    /// Emit the data behind one of the standard figures.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("query").required(true).args(["eval", "quantile", "grid"]))]
pub struct MpArgs {
    /// Ratio p/n.
    #[arg(long)]
    pub c: f64,
    /// Scale parameter.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Print pdf, cdf and G at x.
    #[arg(long, allow_negative_numbers = true)]
    pub eval: Option<f64>,
    /// Print the u-quantile.
    #[arg(long)]
    pub quantile: Option<f64>,
    /// CSV rows of (x, pdf, cdf, G) on lo:hi:steps.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    /// Comma-separated rho values.
    #[arg(long, default_value = "0,0.3,0.5,0.8")]
    pub rho_list: String,
    /// Comma-separated c values, or lo:hi:steps.
    #[arg(long)]
    pub c_grid: String,
    /// Also tabulate CP_{c,rho}(t).
    #[arg(long)]
    pub t: Option<f64>,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    /// Comma-separated dimensions.
    #[arg(long)]
    pub p_list: String,
    /// Comma-separated rho values.
    #[arg(long)]
    pub rho_list: String,
    /// Also run the CPV sweep at this threshold.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// One or more CSV files, one observation per row.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_T)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field delimiter (a single ASCII character).
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The first line holds data, not column labels.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
    pub which: u8,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Replications per Monte Carlo cell.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Sample size of the Monte Carlo figures.
    #[arg(long, default_value_t = FIGURE_N)]
    pub n: usize,
    /// Largest dimension of the Monte Carlo figures.
    #[arg(long, default_value_t = FIGURE_P_MAX)]
    pub p_max: usize,
}

/// Failure of a CLI invocation, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Run(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses the arguments, runs the command, and returns the exit code.
/// Help and version output go to `out`; diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Mp(a) => cmd_mp(a, out),
        Command::Limits(a) => cmd_limits(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Figure(a) => cmd_figure(a, out),
    }
}

fn parse_f64_list(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("--{flag}: {v:?}: {e}")))
        })
        .collect()
}

fn parse_usize_list(flag: &str, s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| usage(format!("--{flag}: {v:?}: {e}")))
        })
        .collect()
}

/// `lo:hi:steps`, `steps` points with both ends included.
pub fn parse_range(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--{flag}: expected lo:hi:steps, got {s:?}")));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| usage(format!("--{flag}: lo: {e}")))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| usage(format!("--{flag}: hi: {e}")))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e| usage(format!("--{flag}: steps: {e}")))?;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo || steps == 0 {
        return Err(usage(format!(
            "--{flag}: need finite lo <= hi and steps >= 1, got {s:?}"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect())
}

fn parse_grid(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    if s.contains(':') {
        parse_range(flag, s)
    } else {
        parse_f64_list(flag, s)
    }
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

fn cmd_mp(a: &MpArgs, out: &mut dyn Write) -> CliResult<()> {
    let law = MpLaw::new(a.c, a.sigma2)?;
    let mut w = csv_writer(out);
    if let Some(x) = a.eval {
        if !x.is_finite() {
            return Err(usage("--eval must be finite"));
        }
        w.write_record(["x", "pdf", "cdf", "G"])
            .map_err(Error::from)?;
        w.write_record([x, law.pdf(x), law.cdf(x), law.tail_mass(x)].map(|v| v.to_string()))
            .map_err(Error::from)?;
    } else if let Some(u) = a.quantile {
        let q = law.quantile(u)?;
        w.write_record(["u", "quantile"]).map_err(Error::from)?;
        w.write_record([u.to_string(), q.to_string()])
            .map_err(Error::from)?;
    } else if let Some(g) = &a.grid {
        let xs = parse_range("grid", g)?;
        w.write_record(["x", "pdf", "cdf", "G"])
            .map_err(Error::from)?;
        for x in xs {
            w.write_record([x, law.pdf(x), law.cdf(x), law.tail_mass(x)].map(|v| v.to_string()))
                .map_err(Error::from)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct LimitRow {
    c: f64,
    rho: f64,
    gk_limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cpv_limit: Option<f64>,
}

fn limit_rows(cs: &[f64], rhos: &[f64], t: Option<f64>) -> CliResult<Vec<LimitRow>> {
    let mut rows = Vec::with_capacity(cs.len() * rhos.len());
    for &rho in rhos {
        for &c in cs {
            let params = LimitParams::new(c, rho)?;
            let cpv_limit = match t {
                Some(t) => Some(params.with_t(t)?.cpv()?),
                None => None,
            };
            rows.push(LimitRow {
                c,
                rho,
                gk_limit: params.gk(),
                t,
                cpv_limit,
            });
        }
    }
    Ok(rows)
}

fn write_rows<S: Serialize>(rows: &[S], header: &[&str], out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header).map_err(Error::from)?;
    for r in rows {
        w.serialize(r).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn write_rows_to_file<S: Serialize>(rows: &[S], header: &[&str], path: &Path) -> CliResult<()> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::Run(Error::from(e).context(path.display().to_string())))?;
    write_rows(rows, header, &mut f)
}

fn cmd_limits(a: &LimitsArgs, out: &mut dyn Write) -> CliResult<()> {
    let rhos = parse_f64_list("rho-list", &a.rho_list)?;
    let cs = parse_grid("c-grid", &a.c_grid)?;
    let rows = limit_rows(&cs, &rhos, a.t)?;
    let header: &[&str] = if a.t.is_some() {
        &["c", "rho", "gk_limit", "t", "cpv_limit"]
    } else {
        &["c", "rho", "gk_limit"]
    };
    match &a.out {
        Some(path) => write_rows_to_file(&rows, header, path),
        None => write_rows(&rows, header, out),
    }
}

pub const GK_SWEEP_COLUMNS: [&str; 9] = [
    "c",
    "p",
    "n",
    "rho",
    "gk_mean",
    "gk_stderr",
    "gk_limit",
    "normalized_retention",
    "error",
];

pub const CPV_SWEEP_COLUMNS: [&str; 9] = [
    "c",
    "p",
    "n",
    "rho",
    "t",
    "cpv_mean",
    "cpv_stderr",
    "cpv_limit",
    "error",
];

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = SweepSpec {
        n: a.n,
        p_values: parse_usize_list("p-list", &a.p_list)?,
        rhos: parse_f64_list("rho-list", &a.rho_list)?,
        t: a.t,
        replications: a.reps,
        seed: a.seed,
    };
    spec.validate()?;
    fs::create_dir_all(&a.out)?;
    let gk = run_gk_sweep(&spec)?;
    let gk_path = a.out.join("gk_sweep.csv");
    write_rows_to_file(&gk, &GK_SWEEP_COLUMNS, &gk_path)?;
    writeln!(out, "{}", gk_path.display())?;
    let mut failed: Vec<String> = gk.iter().filter_map(|r| r.error.clone()).collect();
    if spec.t.is_some() {
        let cpv = run_cpv_sweep(&spec)?;
        let cpv_path = a.out.join("cpv_sweep.csv");
        write_rows_to_file(&cpv, &CPV_SWEEP_COLUMNS, &cpv_path)?;
        writeln!(out, "{}", cpv_path.display())?;
        failed.extend(cpv.iter().filter_map(|r| r.error.clone()));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Run(
            Error::InvalidParameter(failed.join("; "))
                .context(format!("{} sweep cell(s) failed", failed.len())),
        ))
    }
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(a.t > 0.0 && a.t < 1.0) {
        return Err(usage(format!("--t must lie in (0, 1), got {}", a.t)));
    }
    if !a.delimiter.is_ascii() {
        return Err(usage("--delimiter must be a single ASCII character"));
    }
    let options = ReadOptions {
        delimiter: a.delimiter as u8,
        has_header: !a.no_header,
    };
    let mut reports = Vec::with_capacity(a.input.len());
    for path in &a.input {
        let ds = data_io::read_csv(path, options).map_err(CliError::Run)?;
        reports.push(data_io::analyze(&ds, a.t).map_err(CliError::Run)?);
    }
    match &a.out {
        Some(path) => data_io::write_report(&reports, a.format.into(), path),
        None => data_io::write_report_to(&reports, a.format.into(), out),
    }
    .map_err(CliError::Run)
}

#[derive(Debug, Serialize)]
pub struct CurveEntry {
    pub file: String,
    pub kind: String,
    pub rho: f64,
    pub label: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub figure: u8,
    pub title: String,
    pub curves: Vec<CurveEntry>,
    pub rhos: Vec<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub p_grid: Option<Vec<usize>>,
    pub t: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub scale_note: String,
}

/// `c = 0.05, 0.10, ..., 20`.
pub fn figure_c_grid() -> Vec<f64> {
    (1..=400).map(|k| k as f64 / 20.0).collect()
}

fn figure_p_grid(step: usize, p_max: usize) -> Vec<usize> {
    (1..=p_max / step).map(|k| k * step).collect()
}

fn rho_tag(rho: f64) -> String {
    format!("rho{}", rho.to_string().replace('.', "p"))
}

fn cmd_figure(a: &FigureArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.reps == 0 || a.n < 2 || a.p_max < 1 {
        return Err(usage("--reps, --n and --p-max must be positive (n >= 2)"));
    }
    fs::create_dir_all(&a.out)?;
    let rhos = FIGURE_RHOS.to_vec();
    let mut curves = Vec::new();
    let mut manifest = Manifest {
        figure: a.which,
        title: String::new(),
        curves: Vec::new(),
        rhos: rhos.clone(),
        c_grid: None,
        n: None,
        p_grid: None,
        t: None,
        seed: None,
        replications: None,
        scale_note: String::new(),
    };
    match a.which {
        2 | 5 => {
            let cs = figure_c_grid();
            let t = (a.which == 5).then_some(FIGURE_T);
            for &rho in &rhos {
                let rows = limit_rows(&cs, &[rho], t)?;
                let file = format!("gk_limit_{}.csv", rho_tag(rho));
                write_gk_only(&rows, &a.out.join(&file))?;
                curves.push(CurveEntry {
                    file,
                    kind: "gk_limit".into(),
                    rho,
                    label: format!("GK_{{c,{rho}}}"),
                });
                if let Some(t) = t {
                    let file = format!("cpv_limit_{}.csv", rho_tag(rho));
                    write_cpv_only(&rows, &a.out.join(&file))?;
                    curves.push(CurveEntry {
                        file,
                        kind: "cpv_limit".into(),
                        rho,
                        label: format!("CP_{{c,{rho}}}({t})"),
                    });
                }
            }
            manifest.title = if a.which == 2 {
                "GK_{c,rho} limit curves".into()
            } else {
                "GK_{c,rho} (thick) against CP_{c,rho}(0.7)".into()
            };
            manifest.c_grid = Some(cs);
            manifest.t = t;
            manifest.scale_note = "exact limit curves on c in (0, 20]; no sampling".into();
        }
        3 | 4 => {
            let step = if a.which == 3 { 50 } else { 40 };
            let ps = figure_p_grid(step.min(a.p_max), a.p_max);
            let t = (a.which == 4).then_some(FIGURE_T);
            for &rho in &rhos {
                let spec = SweepSpec {
                    n: a.n,
                    p_values: ps.clone(),
                    rhos: vec![rho],
                    t,
                    replications: a.reps,
                    seed: a.seed,
                };
                let failed;
                let file;
                if a.which == 3 {
                    let rows = run_gk_sweep(&spec)?;
                    file = format!("gk_retention_{}.csv", rho_tag(rho));
                    write_rows_to_file(&rows, &GK_SWEEP_COLUMNS, &a.out.join(&file))?;
                    failed = rows.iter().any(|r| r.error.is_some());
                    curves.push(CurveEntry {
                        file: file.clone(),
                        kind: "normalized_gk_retention".into(),
                        rho,
                        label: format!("p GK^R / min(n, p), rho = {rho}"),
                    });
                } else {
                    let rows = run_cpv_sweep(&spec)?;
                    file = format!("cpv_retention_{}.csv", rho_tag(rho));
                    write_rows_to_file(&rows, &CPV_SWEEP_COLUMNS, &a.out.join(&file))?;
                    failed = rows.iter().any(|r| r.error.is_some());
                    curves.push(CurveEntry {
                        file: file.clone(),
                        kind: "cpv_retention".into(),
                        rho,
                        label: format!("CP^S~(0.7), rho = {rho}"),
                    });
                }
                if failed {
                    return Err(CliError::Run(Error::InvalidParameter(format!(
                        "figure {}: a cell in {file} failed",
                        a.which
                    ))));
                }
            }
            manifest.title = if a.which == 3 {
                format!("p GK^R / min(n, p) at n = {}", a.n)
            } else {
                format!("CP^S~(0.7) at n = {}", a.n)
            };
            manifest.n = Some(a.n);
            manifest.p_grid = Some(ps);
            manifest.t = t;
            manifest.seed = Some(a.seed);
            manifest.replications = Some(a.reps);
            manifest.scale_note = format!(
                "desk scale: n = {}, p up to {} in steps of {step}; the saturation threshold for rho is (1/sqrt(1-rho)+1)^2, e.g. {:.4} at rho = 0",
                a.n,
                a.p_max,
                gk_saturation_index(0.0)
            );
        }
        other => return Err(usage(format!("--which must be 2, 3, 4 or 5, got {other}"))),
    }
    manifest.curves = curves;
    let manifest_path = a.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
    fs::write(&manifest_path, text + "\n")?;
    writeln!(out, "{}", manifest_path.display())?;
    Ok(())
}

fn write_gk_only(rows: &[LimitRow], path: &Path) -> CliResult<()> {
    let plain: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.c, r.rho, r.gk_limit)).collect();
    write_rows_to_file(&plain, &["c", "rho", "gk_limit"], path)
}

fn write_cpv_only(rows: &[LimitRow], path: &Path) -> CliResult<()> {
    let plain: Vec<(f64, f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            (
                r.c,
                r.rho,
                r.t.unwrap_or(f64::NAN),
                r.cpv_limit.unwrap_or(f64::NAN),
            )
        })
        .collect();
    write_rows_to_file(&plain, &["c", "rho", "t", "cpv_limit"], path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("equicorr").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("g", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("g", "2:2:1").unwrap(), vec![2.0]);
        assert!(parse_range("g", "1:0:3").is_err());
        assert!(parse_range("g", "0:1").is_err());
    }

    #[test]
    fn mp_eval_prints_density() {
        let (code, out, _) = run_capture(&["mp", "--c", "1", "--sigma2", "1", "--eval", "2"]);
        assert_eq!(code, 0);
        let row: Vec<f64> = out
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert!((row[1] - 0.159155).abs() < 1e-6);
    }

    #[test]
    fn bad_flags_exit_2() {
        assert_eq!(run_capture(&["mp", "--c", "abc", "--eval", "1"]).0, 2);
        assert_eq!(run_capture(&["mp", "--c", "-1", "--eval", "1"]).0, 2);
        assert_eq!(run_capture(&["mp", "--c", "1"]).0, 2);
        assert_eq!(run_capture(&["figure", "--which", "7", "--out", "x"]).0, 2);
        assert_eq!(run_capture(&[]).0, 2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }
}
