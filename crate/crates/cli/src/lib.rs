//! `ewd` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or validation error,
//! 3 verification failure. Angles are degrees on the command line. Every
//! command is deterministic; `--seed` defaults to 0.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ewd_core::grad::{edwd_grad, gradcheck_suite, GradCheckOptions, GradResult};
use ewd_core::harness::{
    self, compare_losses, detect_turning_point, fit, parse_manifest, standard_scenarios, sweep_curve,
    CurvePoint, CurveRow, CurveSpec, FitTrace,
};
use ewd_core::oracle::{run_suite, SuiteReport};
use ewd_core::{EwdError, LossConfig, LossVariant, NormScheme, OBox5, PostFn, VarianceMode};

pub mod num;
pub mod svg;

use num::{g12, r12};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const CURVE_HEADER: [&str; 4] = ["ratio", "dtheta_deg", "loss", "value"];
pub const TRACE_HEADER: [&str; 6] = ["scenario", "step", "loss", "grad_norm", "iou", "match_k"];
pub const COMPARE_HEADER: [&str; 8] = [
    "scenario",
    "loss",
    "steps_to_iou_0.9",
    "initial_dtheta_deg",
    "final_dtheta_deg",
    "final_iou",
    "status",
    "steps",
];

#[derive(Parser, Debug)]
#[command(name = "ewd", version, about = "Edge Wasserstein distance losses: curves, checks and toy fits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Loss versus rotation offset for boxes of several aspect ratios.
    Curve(CurveArgs),
    /// Compare analytic gradients with central differences on random boxes.
    Gradcheck(GradcheckArgs),
    /// Fit the scenarios of a manifest by gradient descent.
    Fit(FitArgs),
    /// Run an oracle-equivalence suite.
    Verify(VerifyArgs),
    /// Steps-to-IoU-0.9, final angle gap and final IoU for every loss and scenario.
    Compare(CompareArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug)]
pub struct LossOverrides {
    /// Normalization for every loss: none, image:S, anchor:S, target_wh, target_min, target_max.
    #[arg(long)]
    pub norm: Option<NormScheme>,
    /// Post function: identity, sqrt, log1p, inv_tau:T[:inner].
    #[arg(long)]
    pub post: Option<PostFn>,
    /// Edge variances: aspect_ratio, constant:C, target_length.
    #[arg(long)]
    pub variance: Option<VarianceMode>,
}

impl LossOverrides {
    fn apply(&self, mut cfg: LossConfig) -> LossConfig {
        if let Some(n) = self.norm {
            cfg.norm = n;
        }
        if let Some(p) = &self.post {
            cfg.post = p.clone();
        }
        if let Some(v) = self.variance {
            cfg.variance = v;
        }
        cfg
    }
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// Aspect ratios w/h, each >= 1.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub ratios: Vec<f64>,
    /// Angle grid in degrees as lo:hi:step.
    #[arg(long, default_value = "-90:90:1", allow_hyphen_values = true)]
    pub dtheta: String,
    /// Comma-separated loss names.
    #[arg(long, value_delimiter = ',', default_value = "edwd,kld,smoothl1_min")]
    pub losses: Vec<String>,
    /// Area shared by every box.
    #[arg(long, default_value_t = 1.0)]
    pub area: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: LossOverrides,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance (absolute floor 1e-6).
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, value_delimiter = ',', default_value = "egwd,edwd")]
    pub losses: Vec<String>,
    /// Perturb the analytic angle derivative by 1% (negative control).
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Scenario manifest (TOML).
    pub manifest: PathBuf,
    /// Replace every scenario's loss by the default configuration of this one.
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    EgwdOracle,
    EdwdIntegral,
    OtBound,
    IouMc,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::EgwdOracle => "egwd-oracle",
            Suite::EdwdIntegral => "edwd-integral",
            Suite::OtBound => "ot-bound",
            Suite::IouMc => "iou-mc",
        }
    }

    fn default_trials(self) -> usize {
        match self {
            Suite::EgwdOracle => 10_000,
            Suite::EdwdIntegral => 1_000,
            Suite::OtBound => 500,
            Suite::IouMc => 100,
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Defaults: egwd-oracle 10000, edwd-integral 1000, ot-bound 500, iou-mc 100.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Scenario manifest; the bundled standard suite when omitted.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "egwd,edwd,gwd,kld,smoothl1_min,smoothl1_le")]
    pub losses: Vec<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Usage(String),
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Usage(m) | CliError::Verify(m) => f.write_str(m),
        }
    }
}

impl From<EwdError> for CliError {
    fn from(e: EwdError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Curve(a) => cmd_curve(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn parse_losses(names: &[String]) -> CliResult<Vec<LossConfig>> {
    if names.is_empty() {
        return Err(CliError::Usage("no losses given".into()));
    }
    names.iter().map(|n| LossConfig::by_name(n).map_err(CliError::from)).collect()
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--dtheta expects lo:hi:step in degrees, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    Ok(CurveSpec::grid(v[0], v[1], v[2])?)
}

fn write_output(out: Option<&Path>, body: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(body)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

fn csv_bytes<R: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<R>>) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

// ---------------------------------------------------------------------------

/// Render a curve table in the requested format.
pub fn render_curve(rows: &[CurveRow], spec: &CurveSpec, format: OutputFormat) -> CliResult<Vec<u8>> {
    match format {
        OutputFormat::Csv => csv_bytes(
            &CURVE_HEADER,
            rows.iter()
                .map(|r| vec![g12(r.ratio), g12(r.dtheta_deg), r.loss.clone(), g12(r.value)]),
        ),
        OutputFormat::Json => {
            let rows_json: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "ratio": r12(r.ratio),
                        "dtheta_deg": r12(r.dtheta_deg),
                        "loss": r.loss,
                        "value": r12(r.value),
                        "match_k": r.k,
                    })
                })
                .collect();
            let turning: Vec<Value> = series_keys(spec)
                .into_iter()
                .filter_map(|(ratio, loss)| {
                    let pts = series_points(rows, ratio, &loss)?;
                    let at: Vec<Value> = detect_turning_point(&pts).into_iter().map(r12).collect();
                    Some(json!({ "ratio": r12(ratio), "loss": loss, "dtheta_deg": at }))
                })
                .collect();
            Ok(json_bytes(&json!({ "rows": rows_json, "turning_points": turning })))
        }
        OutputFormat::Svg => {
            let series: Vec<svg::Series> = series_keys(spec)
                .into_iter()
                .map(|(ratio, loss)| svg::Series {
                    label: format!("{loss} r={}", g12(ratio)),
                    points: harness::curve_series(rows, ratio, &loss)
                        .iter()
                        .map(|r| (r.dtheta_deg, r.value))
                        .collect(),
                })
                .collect();
            Ok(svg::line_plot("loss versus rotation offset", "dtheta (deg)", "loss", &series).into_bytes())
        }
    }
}

fn series_keys(spec: &CurveSpec) -> Vec<(f64, String)> {
    spec.ratios
        .iter()
        .flat_map(|&r| spec.losses.iter().map(move |c| (r, c.variant.name())))
        .collect()
}

fn series_points(rows: &[CurveRow], ratio: f64, loss: &str) -> Option<Vec<CurvePoint>> {
    harness::curve_series(rows, ratio, loss)
        .into_iter()
        .map(CurvePoint::from_row)
        .collect()
}

pub fn cmd_curve(a: &CurveArgs) -> CliResult<()> {
    let losses: Vec<LossConfig> = parse_losses(&a.losses)?.into_iter().map(|c| a.overrides.apply(c)).collect();
    let spec = CurveSpec { ratios: a.ratios.clone(), dtheta_deg: parse_grid(&a.dtheta)?, losses, area: a.area };
    let rows = sweep_curve(&spec)?;
    for (ratio, loss) in series_keys(&spec) {
        if let Some(pts) = series_points(&rows, ratio, &loss) {
            let at: Vec<String> = detect_turning_point(&pts).into_iter().map(g12).collect();
            eprintln!("{loss} ratio {}: pairing switches at [{}]", g12(ratio), at.join(", "));
        }
    }
    write_output(a.out.as_deref(), &render_curve(&rows, &spec, a.format)?)
}

// ---------------------------------------------------------------------------

fn corrupted_grad(p: &OBox5, t: &OBox5, c: &LossConfig) -> ewd_core::Result<GradResult> {
    let mut g = edwd_grad(p, t, c)?;
    g.grad.d_theta *= 1.01;
    Ok(g)
}

pub fn cmd_gradcheck(a: &GradcheckArgs) -> CliResult<()> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let variants: Vec<LossVariant> = parse_losses(&a.losses)?.into_iter().map(|c| c.variant).collect();
    let opts = GradCheckOptions { trials: a.trials, seed: a.seed, tol: a.tol, variants, ..Default::default() };
    let analytic = if a.corrupt { corrupted_grad } else { edwd_grad };
    let report = gradcheck_suite(&opts, analytic)?;
    for l in &report.per_loss {
        println!(
            "{}: checked {}, skipped {} near pairing ties, max relative error {}",
            l.loss,
            l.checked,
            l.skipped,
            g12(l.max_rel_err)
        );
    }
    if report.passed() {
        return Ok(());
    }
    for l in report.per_loss.iter().filter(|l| l.failures > 0) {
        let c = l.first_failure.as_ref().expect("recorded with the failure");
        eprintln!("{}: {} of {} triples exceed tolerance {}", l.loss, l.failures, l.checked, g12(a.tol));
        eprintln!("  pred   = {}", fmt_box(&c.pred));
        eprintln!("  target = {}", fmt_box(&c.target));
        eprintln!(
            "  cfg    = variant {} norm {} post {} variance {}",
            c.cfg.variant.name(),
            c.cfg.norm,
            c.cfg.post,
            c.cfg.variance
        );
        eprintln!("  analytic {:?}", c.analytic.to_array());
        eprintln!("  numeric  {:?}", c.numeric.to_array());
    }
    Err(CliError::Verify("gradient check failed".into()))
}

fn fmt_box(b: &OBox5) -> String {
    format!(
        "[{}, {}, {}, {}, {} deg]",
        g12(b.cx),
        g12(b.cy),
        g12(b.w),
        g12(b.h),
        g12(b.theta.to_degrees())
    )
}

// ---------------------------------------------------------------------------

fn read_manifest(path: &Path) -> CliResult<Vec<harness::FitScenario>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_manifest(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Render fit traces in the requested format.
pub fn render_traces(traces: &[FitTrace], format: OutputFormat) -> CliResult<Vec<u8>> {
    match format {
        OutputFormat::Csv => csv_bytes(
            &TRACE_HEADER,
            traces.iter().flat_map(|t| {
                t.records.iter().map(move |r| {
                    vec![
                        t.scenario.clone(),
                        r.step.to_string(),
                        g12(r.loss),
                        g12(r.grad_norm),
                        g12(r.iou),
                        r.k.map(|k| k.to_string()).unwrap_or_default(),
                    ]
                })
            }),
        ),
        OutputFormat::Json => {
            let v: Vec<Value> = traces
                .iter()
                .map(|t| {
                    json!({
                        "scenario": t.scenario,
                        "loss": t.loss_name,
                        "status": t.status.to_string(),
                        "note": t.note,
                        "records": t.records.iter().map(|r| json!({
                            "step": r.step,
                            "params": r.params.iter().map(|&p| r12(p)).collect::<Vec<_>>(),
                            "loss": r12(r.loss),
                            "grad_norm": r12(r.grad_norm),
                            "iou": r12(r.iou),
                            "match_k": r.k,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Ok(json_bytes(&Value::Array(v)))
        }
        OutputFormat::Svg => {
            let series: Vec<svg::Series> = traces
                .iter()
                .map(|t| svg::Series {
                    label: format!("{} ({})", t.scenario, t.loss_name),
                    points: t.records.iter().map(|r| (r.step as f64, r.iou)).collect(),
                })
                .collect();
            Ok(svg::line_plot("rotated IoU during fitting", "step", "IoU", &series).into_bytes())
        }
    }
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let mut scenarios = read_manifest(&a.manifest)?;
    if let Some(name) = &a.loss {
        let cfg = LossConfig::by_name(name)?;
        scenarios = scenarios.into_iter().map(|s| s.with_loss(cfg.clone())).collect();
    }
    let traces: Vec<FitTrace> = scenarios.iter().map(fit).collect::<Result<_, _>>()?;
    for t in &traces {
        if let Some(last) = t.last() {
            eprintln!(
                "{} [{}]: {} after {} steps, loss {}, IoU {}{}",
                t.scenario,
                t.loss_name,
                t.status,
                last.step,
                g12(last.loss),
                g12(last.iou),
                t.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
    }
    write_output(a.out.as_deref(), &render_traces(&traces, a.format)?)
}

// ---------------------------------------------------------------------------

pub fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let trials = a.trials.unwrap_or_else(|| a.suite.default_trials());
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let r: SuiteReport = run_suite(a.suite.name(), trials, a.seed)?;
    println!(
        "{}: {} trials, max deviation {} (tolerance {}), {} violations",
        r.suite,
        r.trials,
        g12(r.max_deviation),
        g12(r.tolerance),
        r.violations
    );
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Verify(format!("{} failed", r.suite)))
    }
}

// ---------------------------------------------------------------------------

pub fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    if a.format == OutputFormat::Svg {
        return Err(CliError::Usage("compare writes csv or json".into()));
    }
    let scenarios = match &a.manifest {
        Some(p) => read_manifest(p)?,
        None => standard_scenarios(),
    };
    let losses = parse_losses(&a.losses)?;
    let cells = compare_losses(&scenarios, &losses)?;
    let opt = |v: Option<f64>| v.map(g12).unwrap_or_default();
    let body = match a.format {
        OutputFormat::Csv => csv_bytes(
            &COMPARE_HEADER,
            cells.iter().map(|c| {
                vec![
                    c.scenario.clone(),
                    c.loss.clone(),
                    c.steps_to_iou_90.map(|s| s.to_string()).unwrap_or_default(),
                    opt(c.initial_dtheta_deg),
                    opt(c.final_dtheta_deg),
                    g12(c.final_iou),
                    c.status.to_string(),
                    c.steps.to_string(),
                ]
            }),
        )?,
        _ => json_bytes(&Value::Array(
            cells
                .iter()
                .map(|c| {
                    json!({
                        "scenario": c.scenario,
                        "loss": c.loss,
                        "steps_to_iou_0.9": c.steps_to_iou_90,
                        "initial_dtheta_deg": c.initial_dtheta_deg.map(r12),
                        "final_dtheta_deg": c.final_dtheta_deg.map(r12),
                        "final_iou": r12(c.final_iou),
                        "status": c.status.to_string(),
                        "steps": c.steps,
                        "note": c.note,
                    })
                })
                .collect(),
        )),
    };
    write_output(a.out.as_deref(), &body)
}
