//! The `curveflat` command line.
//!
//! Every subcommand resolves its parameters as flags > config file >
//! defaults, writes its outputs atomically into `--out-dir`, and echoes the
//! effective configuration as `<subcommand>.config.json` next to them.
//! `CURVEFLAT_SEED` overrides `--seed`.
//!
//! Exit codes: 0 success, 1 computation or I/O error (a JSON error object is
//! printed on stderr), 2 usage error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::forecast::{
    calibrate_to_table, forecast_eq13, forecast_geometric, upper_bound, Anchor, ForecastRow, GeometricParams,
};
use crate::format::{round_half_up, sig6};
use crate::logistic::fit_logistic_growth;
use crate::network::{
    detect_communities, knots_from_partition, modularity, visibility_graph, CommunityPartition, KnotPartition,
    KnotSource,
};
use crate::plot::{emit_plot, PlotSeries, PlotStyle};
use crate::rates::{change_rates, mean_change_rate, RateBasis};
use crate::series::{parse_csv, validate, ObservationSeries};
use crate::spline::{build_basis, fit_ols};

/// Mean change rate used when no series is supplied to `forecast`.
pub const PUBLISHED_MEAN_RATE: f64 = 1.049521;
/// Default logistic ceiling: the mean of the two published bound estimates.
pub const DEFAULT_UPPER_BOUND: f64 = 3683.0;
pub const SEED_ENV: &str = "CURVEFLAT_SEED";

/// Bad or missing configuration that clap cannot catch on its own.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// The input series broke at least one invariant.
#[derive(Debug)]
pub struct ValidationFailed(pub usize);

impl fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validation failed with {} issue(s)", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

fn config_error(message: impl Into<String>) -> anyhow::Error {
    ConfigError(message.into()).into()
}

/// Machine-readable class of a failure, taken from the innermost known cause.
pub fn error_kind(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.is::<Error>() {
            return "computation";
        }
        if cause.is::<ValidationFailed>() {
            return "validation";
        }
        if cause.is::<ConfigError>() {
            return "config";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() {
            return "json";
        }
    }
    "error"
}

#[derive(Debug, Parser)]
#[command(name = "curveflat", version, about = "Epidemic curve change rates, splines, forecasts and logistic fits")]
pub struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON config file; keys mirror the flags (snake_case), with
    /// subcommand parameters nested under the subcommand name.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the series invariants.
    Validate(ValidateArgs),
    /// Per-day change rates and their windowed mean.
    Rates(RatesArgs),
    /// Knot vector from visibility-graph communities.
    Knots(KnotsArgs),
    /// Regression spline fit of the cumulative curve.
    FitSpline(FitSplineArgs),
    /// Horizon forecast and upper-bound estimate.
    Forecast(ForecastArgs),
    /// Logistic flattening fit with a fixed ceiling.
    FitLogistic(FitLogisticArgs),
    /// SVG plots of the cumulative curve and its change rates.
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Rates(_) => "rates",
            Command::Knots(_) => "knots",
            Command::FitSpline(_) => "fit-spline",
            Command::Forecast(_) => "forecast",
            Command::FitLogistic(_) => "fit-logistic",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BasisArg {
    CumulativeRatio,
    IncrementRatio,
    IncrementRatioInverted,
}

impl From<BasisArg> for RateBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::CumulativeRatio => RateBasis::CumulativeRatio,
            BasisArg::IncrementRatio => RateBasis::IncrementRatio,
            BasisArg::IncrementRatioInverted => RateBasis::IncrementRatioInverted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SeriesArg {
    NewCases,
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KnotSourceArg {
    Detected,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    Eq13,
    Geometric,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RatesArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisArg>,
    /// First day of the averaging window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start: Option<i64>,
    /// Number of rates averaged.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_n: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesConfig {
    pub input: Option<PathBuf>,
    pub basis: BasisArg,
    pub window_start: i64,
    pub window_n: usize,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            input: None,
            basis: BasisArg::CumulativeRatio,
            window_start: 19,
            window_n: 46,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct KnotsArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Which column becomes the network.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_day: Option<i64>,
    /// Number of days transformed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub days: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<KnotSourceArg>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnotsConfig {
    pub input: Option<PathBuf>,
    pub series: SeriesArg,
    pub first_day: i64,
    pub days: usize,
    pub source: KnotSourceArg,
}

impl Default for KnotsConfig {
    fn default() -> Self {
        Self {
            input: None,
            series: SeriesArg::NewCases,
            first_day: 1,
            days: 43,
            source: KnotSourceArg::Detected,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FitSplineArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Knot JSON with an `interior_knots` array; the built-in knots otherwise.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knots: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_n: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSplineConfig {
    pub input: Option<PathBuf>,
    pub knots: Option<PathBuf>,
    pub degree: usize,
    pub window_start: Option<i64>,
    pub window_n: Option<usize>,
}

impl Default for FitSplineConfig {
    fn default() -> Self {
        Self {
            input: None,
            knots: None,
            degree: 3,
            window_start: None,
            window_n: None,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastArgs {
    /// Observed series; anchors the forecast on its last day.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_bar: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Daily increment growth factor (geometric mode).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    /// Increment on the anchor day (geometric mode).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub increment: Option<f64>,
    /// Cumulative count on the anchor day.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_day: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_date: Option<NaiveDate>,
    /// Golden `day_id,date,forecast` CSV to calibrate the geometric mode on.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<PathBuf>,
    /// Replace the rate-scaled bound `u_pb2`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_bound_override: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub input: Option<PathBuf>,
    pub mode: ModeArg,
    pub horizon: usize,
    pub m_bar: Option<f64>,
    pub u0: Option<f64>,
    pub m: Option<f64>,
    pub factor: Option<f64>,
    pub increment: Option<f64>,
    pub start: Option<f64>,
    pub start_day: Option<i64>,
    pub start_date: Option<NaiveDate>,
    pub calibrate: Option<PathBuf>,
    pub upper_bound_override: Option<f64>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            input: None,
            mode: ModeArg::Geometric,
            horizon: 62,
            m_bar: None,
            u0: None,
            m: None,
            factor: None,
            increment: None,
            start: None,
            start_day: None,
            start_date: None,
            calibrate: None,
            upper_bound_override: None,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FitLogisticArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<f64>,
    /// First day of the fit window (default: the trailing `window_n` days).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_n: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitLogisticConfig {
    pub input: Option<PathBuf>,
    pub upper_bound: f64,
    pub window_start: Option<i64>,
    pub window_n: usize,
}

impl Default for FitLogisticConfig {
    fn default() -> Self {
        Self {
            input: None,
            upper_bound: DEFAULT_UPPER_BOUND,
            window_start: None,
            window_n: 54,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub input: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            0
        }
        Err(e) => {
            let body = json!({ "error": { "kind": error_kind(&e), "message": format!("{e:#}") } });
            eprintln!("{body}");
            1
        }
    }
}

/// Seed precedence: `CURVEFLAT_SEED` > `--seed` > config file > 0.
fn resolve_seed(flag: Option<u64>, file: Option<&Value>) -> Result<u64> {
    if let Ok(raw) = std::env::var(SEED_ENV) {
        return raw
            .trim()
            .parse()
            .map_err(|_| config_error(format!("{SEED_ENV}={raw:?} is not an unsigned integer")));
    }
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match file.and_then(|f| f.get("seed")) {
        None | Some(Value::Null) => Ok(0),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| config_error(format!("config seed {v} is not an unsigned integer"))),
    }
}

/// defaults, overlaid by the config file section, overlaid by explicit flags.
fn resolve<A: Serialize, C: Serialize + DeserializeOwned + Default>(
    flags: &A,
    section: Option<&Value>,
) -> Result<C> {
    let mut merged = serde_json::to_value(C::default())?;
    for layer in [section.cloned(), Some(serde_json::to_value(flags)?)].into_iter().flatten() {
        match layer {
            Value::Object(map) => {
                let target = merged.as_object_mut().expect("config structs serialize to objects");
                for (k, v) in map {
                    target.insert(k, v);
                }
            }
            Value::Null => {}
            other => return Err(config_error(format!("expected an object, got {other}"))),
        }
    }
    serde_json::from_value(merged).map_err(|e| config_error(e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| path.display().to_string())
}

fn load_series(input: &Option<PathBuf>) -> Result<(ObservationSeries, crate::series::ParseReport)> {
    let path = input
        .as_ref()
        .ok_or_else(|| config_error("an input series CSV is required"))?;
    let (series, report) = parse_csv(&read_text(path)?, None)?;
    let label = path.display().to_string();
    Ok((ObservationSeries::new(series.records().to_vec(), label), report))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let ctx = || path.display().to_string();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(ctx)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut file = fs::File::create(&tmp).with_context(ctx)?;
    file.write_all(contents.as_bytes()).with_context(ctx)?;
    file.sync_all().with_context(ctx)?;
    drop(file);
    fs::rename(&tmp, path).with_context(ctx)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn execute(cli: &Cli) -> Result<Value> {
    let file_config: Option<Value> = match &cli.config {
        Some(path) => Some(serde_json::from_str(&read_text(path)?)?),
        None => None,
    };
    let seed = resolve_seed(cli.seed, file_config.as_ref())?;
    let out_dir = match (&cli.out_dir, file_config.as_ref().and_then(|f| f.get("out_dir"))) {
        (Some(dir), _) => dir.clone(),
        (None, Some(Value::String(dir))) => PathBuf::from(dir),
        _ => PathBuf::from("out"),
    };
    let name = cli.command.name();
    let section = file_config.as_ref().and_then(|f| f.get(name));
    let mut out = Outputs {
        dir: out_dir.clone(),
        written: Vec::new(),
    };

    let (params, result) = match &cli.command {
        Command::Validate(a) => {
            let c: ValidateConfig = resolve(a, section)?;
            let r = cmd_validate(&c, &mut out);
            (serde_json::to_value(&c)?, r)
        }
        Command::Rates(a) => {
            let c: RatesConfig = resolve(a, section)?;
            let r = cmd_rates(&c, &mut out);
            (serde_json::to_value(&c)?, r)
        }
        Command::Knots(a) => {
            let c: KnotsConfig = resolve(a, section)?;
            let r = cmd_knots(&c, seed, &mut out);
            (serde_json::to_value(&c)?, r)
        }
        Command::FitSpline(a) => {
            let c: FitSplineConfig = resolve(a, section)?;
            let r = cmd_fit_spline(&c, &mut out);
            (serde_json::to_value(&c)?, r)
        }
        Command::Forecast(a) => {
            let c: ForecastConfig = resolve(a, section)?;
            let r = cmd_forecast(&c, &mut out);
            (serde_json::to_value(&c)?, r)
        }
        Command::FitLogistic(a) => {
            let c: FitLogisticConfig = resolve(a, section)?;
            let r = cmd_fit_logistic(&c, &mut out);
            (serde_json::to_value(&c)?, r)
        }
        Command::Report(a) => {
            let c: ReportConfig = resolve(a, section)?;
            let r = cmd_report(&c, &mut out);
            (serde_json::to_value(&c)?, r)
        }
    };
    let effective = json!({
        "subcommand": name,
        "out_dir": out_dir,
        "seed": seed,
        "params": params,
    });
    out.write_json(&format!("{name}.config.json"), &effective)?;
    let summary = result?;
    Ok(json!({ "subcommand": name, "files": out.written, "result": summary }))
}

fn cmd_validate(c: &ValidateConfig, out: &mut Outputs) -> Result<Value> {
    let (series, parse_report) = load_series(&c.input)?;
    let report = validate(&series);
    let body = json!({
        "ok": report.ok,
        "issues": report.issues,
        "records": series.len(),
        "parse": parse_report,
    });
    out.write_json("validate.json", &body)?;
    if !report.ok {
        return Err(ValidationFailed(report.issues.len()).into());
    }
    Ok(body)
}

fn cmd_rates(c: &RatesConfig, out: &mut Outputs) -> Result<Value> {
    let (series, _) = load_series(&c.input)?;
    let rates = change_rates(&series, c.basis.into())?;
    let mut csv = String::from("day_id,rate,defined_flag\n");
    for (d, r) in rates.day_ids.iter().zip(&rates.rates) {
        match r {
            Some(v) => csv.push_str(&format!("{d},{},1\n", sig6(*v))),
            None => csv.push_str(&format!("{d},,0\n")),
        }
    }
    out.write("rates.csv", &csv)?;
    let mean = mean_change_rate(&rates, c.window_start, c.window_n)?;
    let body = json!({
        "value": mean.value,
        "window_start": mean.window_start,
        "n": mean.n,
        "excluded": mean.excluded,
        "basis": rates.basis,
    });
    out.write_json("mean_rate.json", &body)?;
    Ok(body)
}

fn cmd_knots(c: &KnotsConfig, seed: u64, out: &mut Outputs) -> Result<Value> {
    let (partition, knots, graph) = match c.source {
        KnotSourceArg::Paper => {
            let p = CommunityPartition::paper_default();
            let graph = match &c.input {
                Some(_) => Some(network_graph(c)?),
                None => None,
            };
            let p = match &graph {
                Some(g) if g.node_count == p.len() => CommunityPartition {
                    modularity: Some(modularity(g, &p.assignment)),
                    ..p
                },
                _ => p,
            };
            (p, KnotPartition::paper_default(), graph)
        }
        KnotSourceArg::Detected => {
            let graph = network_graph(c)?;
            let p = detect_communities(&graph, seed);
            let k = knots_from_partition(&p, c.first_day, KnotSource::Detected);
            (p, k, Some(graph))
        }
    };
    let first_day = match c.source {
        KnotSourceArg::Paper => 1,
        KnotSourceArg::Detected => c.first_day,
    };
    if let Some(g) = &graph {
        out.write("edges.csv", &g.edges_csv(c.first_day))?;
    }
    let communities: Vec<Value> = partition
        .members()
        .iter()
        .enumerate()
        .map(|(id, m)| json!({ "id": id, "members": m.iter().map(|&i| first_day + i as i64).collect::<Vec<_>>() }))
        .collect();
    let body = json!({
        "interior_knots": knots.interior_knots,
        "communities": communities,
        "modularity": partition.modularity,
        "source": knots.source,
    });
    out.write_json("knots.json", &body)?;
    Ok(body)
}

fn network_graph(c: &KnotsConfig) -> Result<crate::network::VisibilityGraph> {
    let (series, _) = load_series(&c.input)?;
    let window = series.window(c.first_day, c.days);
    if window.len() != c.days {
        return Err(Error::InvalidArgument(format!(
            "series covers {} of the {} requested days from day {}",
            window.len(),
            c.days,
            c.first_day
        ))
        .into());
    }
    let values: Vec<f64> = match c.series {
        SeriesArg::NewCases => window.new_cases().into_iter().map(|v| v as f64).collect(),
        SeriesArg::Cumulative => window.cumulative().into_iter().map(|v| v as f64).collect(),
    };
    Ok(visibility_graph(&values)?)
}

#[derive(Deserialize)]
struct KnotFile {
    interior_knots: Vec<f64>,
}

fn cmd_fit_spline(c: &FitSplineConfig, out: &mut Outputs) -> Result<Value> {
    let (series, _) = load_series(&c.input)?;
    let series = match (c.window_start, c.window_n) {
        (None, None) => series,
        (start, n) => {
            let start = start.unwrap_or(series.records()[0].day_id);
            series.window(start, n.unwrap_or(series.len()))
        }
    };
    let knots = match &c.knots {
        Some(path) => {
            let file: KnotFile = serde_json::from_str(&read_text(path)?)?;
            KnotPartition::user(file.interior_knots)?
        }
        None => KnotPartition::paper_default(),
    };
    let x: Vec<f64> = series.day_ids().into_iter().map(|d| d as f64).collect();
    let y: Vec<f64> = series.cumulative().into_iter().map(|v| v as f64).collect();
    let design = build_basis(&x, &knots, c.degree)?;
    let model = fit_ols(&design, &y)?;

    let mut csv = String::from("day_id,observed,fitted,pointwise_sd\n");
    let sd = model.pointwise_sd();
    for (i, r) in series.records().iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.day_id,
            r.all_cases,
            sig6(model.fitted[i]),
            sig6(sd[i])
        ));
    }
    out.write("spline_fit.csv", &csv)?;
    let body = json!({
        "degree": c.degree,
        "knots": knots.interior_knots,
        "knot_source": knots.source,
        "coefficients": model.coefficients,
        "r_squared": model.r_squared,
        "loocv": model.loocv,
        "sigma2": model.residual_variance,
        "hat_trace": model.hat_trace(),
        "n": model.n(),
        "basis_size": model.basis.basis_size(),
    });
    out.write_json("spline_model.json", &body)?;
    Ok(body)
}

/// Reads a `day_id,date,forecast` golden table.
pub fn read_golden_table(text: &str) -> std::result::Result<Vec<ForecastRow>, Error> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let malformed = |message: String| Error::MalformedRow { row: line, message };
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let day_id = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad day_id".into()))?;
        let date = match rec.get(1) {
            None | Some("") => None,
            Some(s) => Some(NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| malformed(format!("bad date {s:?}")))?),
        };
        let value = rec
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad forecast value".into()))?;
        rows.push(ForecastRow { day_id, date, value });
    }
    Ok(rows)
}

fn cmd_forecast(c: &ForecastConfig, out: &mut Outputs) -> Result<Value> {
    let observed = match &c.input {
        Some(_) => Some(load_series(&c.input)?.0),
        None => None,
    };
    let last = observed.as_ref().and_then(|s| s.records().last().cloned());
    let m_bar = match (c.m_bar, &observed) {
        (Some(v), _) => v,
        (None, Some(s)) => {
            let defaults = RatesConfig::default();
            mean_change_rate(
                &change_rates(s, RateBasis::CumulativeRatio)?,
                defaults.window_start,
                defaults.window_n,
            )?
            .value
        }
        (None, None) => PUBLISHED_MEAN_RATE,
    };

    let mut extra = serde_json::Map::new();
    let (table, golden) = match c.mode {
        ModeArg::Geometric => {
            if let Some(path) = &c.calibrate {
                let golden = read_golden_table(&read_text(path)?)?;
                let cal = calibrate_to_table(&golden)?;
                extra.insert("calibration".into(), serde_json::to_value(cal)?);
                (forecast_geometric(cal.params, c.horizon, cal.anchor)?, Some(golden))
            } else {
                let anchor = anchor_for(c, last.as_ref());
                let params = GeometricParams {
                    start: c.start.or(last.as_ref().map(|r| r.all_cases as f64)).ok_or_else(|| {
                        config_error("geometric mode needs --calibrate, --input or --start")
                    })?,
                    last_increment: c.increment.or(last.as_ref().map(|r| r.new_cases as f64)).ok_or_else(|| {
                        config_error("geometric mode needs --increment or --input")
                    })?,
                    daily_factor: c.factor.unwrap_or(1.0),
                };
                (forecast_geometric(params, c.horizon, anchor)?, None)
            }
        }
        ModeArg::Eq13 => {
            let anchor = anchor_for(c, last.as_ref());
            let f0 = c
                .start
                .or(last.as_ref().map(|r| r.all_cases as f64))
                .ok_or_else(|| config_error("eq13 mode needs --input or --start"))?;
            let m = c.m.unwrap_or(m_bar);
            let u0 = c.u0.unwrap_or(m_bar / 2.0);
            let table = forecast_eq13(f0, m_bar, m, u0, c.horizon, anchor)?;
            extra.insert("params".into(), serde_json::to_value(&table.params)?);
            (table, None)
        }
    };
    out.write("forecast.csv", &table.to_csv())?;

    if let Some(golden) = &golden {
        let deviation = golden
            .iter()
            .filter_map(|g| {
                table
                    .rows
                    .iter()
                    .find(|r| r.day_id == g.day_id)
                    .map(|r| (round_half_up(r.value) as f64 - g.value).abs())
            })
            .fold(0.0, f64::max);
        extra.insert("golden_max_abs_deviation".into(), json!(deviation));
    }

    let peak = table
        .peak()
        .ok_or_else(|| config_error("empty forecast"))?;
    let bound = upper_bound(peak, m_bar, c.upper_bound_override)?;
    let mut bound_json = bound.to_json();
    bound_json["m_bar"] = json!(m_bar);
    out.write_json("upper_bound.json", &bound_json)?;

    extra.insert("rows".into(), json!(table.rows.len()));
    extra.insert("upper_bound".into(), bound_json);
    Ok(Value::Object(extra))
}

fn anchor_for(c: &ForecastConfig, last: Option<&crate::series::DailyRecord>) -> Anchor {
    Anchor::new(
        c.start_day.or(last.map(|r| r.day_id)).unwrap_or(0),
        c.start_date.or(last.and_then(|r| r.date)),
    )
}

fn cmd_fit_logistic(c: &FitLogisticConfig, out: &mut Outputs) -> Result<Value> {
    let (series, _) = load_series(&c.input)?;
    let last_day = series
        .records()
        .last()
        .map(|r| r.day_id)
        .ok_or(Error::TooShort { needed: 3, got: 0 })?;
    let start = c.window_start.unwrap_or(last_day - c.window_n as i64 + 1);
    let window = series.window(start, c.window_n);
    if window.len() != c.window_n {
        return Err(Error::InvalidArgument(format!(
            "window of {} days from day {start} covers only {} observations",
            c.window_n,
            window.len()
        ))
        .into());
    }
    let points: Vec<(f64, f64)> = window
        .records()
        .iter()
        .map(|r| ((r.day_id - start + 1) as f64, r.all_cases as f64))
        .collect();
    let model = fit_logistic_growth(&points, c.upper_bound, start)?;

    let mut csv = String::from("day_id,observed,fitted\n");
    for r in window.records() {
        csv.push_str(&format!("{},{},{}\n", r.day_id, r.all_cases, sig6(model.predict_day(r.day_id))));
    }
    out.write("logistic_fit.csv", &csv)?;
    let body = json!({
        "r_squared": model.r_squared,
        "f": model.f_stat,
        "df1": model.df1,
        "df2": model.df2,
        "constant": model.b0,
        "b1": model.b1,
        "upper_bound": model.upper_bound,
        "window_start": start,
        "window_n": model.n,
        "time_index": "t = day_id - window_start + 1",
        "statistics_scale": "linearized: ln(1/y - 1/u) on t",
    });
    out.write_json("logistic_model.json", &body)?;
    Ok(body)
}

fn cmd_report(c: &ReportConfig, out: &mut Outputs) -> Result<Value> {
    let (series, _) = load_series(&c.input)?;
    let cumulative: Vec<(f64, f64)> = series
        .records()
        .iter()
        .map(|r| (r.day_id as f64, r.all_cases as f64))
        .collect();
    let style = PlotStyle {
        title: "Cumulative confirmed cases".into(),
        x_label: "day".into(),
        y_label: "cases".into(),
        ..PlotStyle::default()
    };
    out.write(
        "cumulative.svg",
        &emit_plot(&[PlotSeries::new("All_Cases", cumulative)], &style)?,
    )?;

    let rates = change_rates(&series, RateBasis::CumulativeRatio)?;
    let points: Vec<(f64, f64)> = rates
        .day_ids
        .iter()
        .zip(&rates.rates)
        .filter_map(|(&d, r)| r.map(|v| (d as f64, v)))
        .collect();
    let style = PlotStyle {
        title: "Change rate of cumulative cases".into(),
        x_label: "day".into(),
        y_label: "y[t+1] / y[t]".into(),
        ..PlotStyle::default()
    };
    out.write(
        "change_rates.svg",
        &emit_plot(&[PlotSeries::new("rate", points)], &style)?,
    )?;
    Ok(json!({ "records": series.len(), "rates": rates.len() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let flags = RatesArgs {
            input: None,
            basis: None,
            window_start: Some(5),
            window_n: None,
        };
        let file = json!({ "window_start": 3, "window_n": 7 });
        let c: RatesConfig = resolve(&flags, Some(&file)).unwrap();
        assert_eq!((c.window_start, c.window_n), (5, 7));
        assert_eq!(c.basis, BasisArg::CumulativeRatio);
        let c: RatesConfig = resolve(&flags, None).unwrap();
        assert_eq!((c.window_start, c.window_n), (5, 46));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let flags = ValidateArgs { input: None };
        let file = json!({ "inptu": "x.csv" });
        assert!(resolve::<_, ValidateConfig>(&flags, Some(&file)).is_err());
    }

    #[test]
    fn golden_table_parse() {
        let rows = read_golden_table("day_id,date,forecast\n66,2020-05-01,2602\n67,,2614\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].date, None);
        assert!(read_golden_table("day_id,date,forecast\nx,,1\n").is_err());
    }
}
