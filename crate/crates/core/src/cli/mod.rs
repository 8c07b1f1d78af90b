//! Command-line front end: flag and config-file parsing, run dispatch and
//! report files.
//!
//! Exit codes: 0 success, 1 solver or audit failure, 2 usage, 3 I/O.

mod format;
mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

pub use format::{full, sig12};

use crate::calibration::CalibrationTargets;
use crate::equivalence::{
    audit, balance_sheet_snapshot, ces_audit, equivalent_loan_rate, loan_rate_curve, BalanceSheet,
    BaseKind, BasePosition,
};
use crate::error::Error;
use crate::model::ModelParams;
use crate::perfect_foresight::{
    run_scenario, scenario_params, sweep, Scenario, ShockSpec, SweepBase,
};
use crate::steady_state::solve_steady_state;

#[derive(Debug, Parser)]
#[command(
    name = "cbdc-lab",
    version,
    arg_required_else_help = true,
    about = "Calibrate, solve and audit a CBDC economy with collateral-constrained banks"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Invert targets into a parameter file.
    Calibrate(CommonArgs),
    /// Solve the steady state without CBDC.
    Steady(CommonArgs),
    /// Solve the transition after a CBDC impulse.
    Irf {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        shock: ShockArgs,
        /// Also write one SVG line chart per series.
        #[arg(long)]
        svg: bool,
    },
    /// Audit a deposit-to-CBDC shift with offsetting central-bank loans.
    Audit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        audit: AuditArgs,
    },
    /// Solve the transition under several parameter scenarios.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        shock: ShockArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Parameter file written by a previous run; skips calibration.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Parameter or target override. For `sweep`, each one is a scenario.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShockArgs {
    /// CBDC share of steady-state output at impact.
    #[arg(long)]
    impulse: Option<f64>,
    /// Decay rate of the CBDC share; defaults to `rho_theta`.
    #[arg(long)]
    persistence: Option<f64>,
    /// Number of quarters solved.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Deposits moved into CBDC.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    base: Option<BaseArg>,
    /// Central-bank loan rate; defaults to the equivalent rate.
    #[arg(long)]
    loan_rate: Option<f64>,
    /// CBDC held at the base position.
    #[arg(long)]
    base_cbdc: Option<f64>,
    /// Government capital at the base position.
    #[arg(long)]
    base_kg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BaseArg {
    Normalized,
    Dynamic,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    params: Option<PathBuf>,
    targets: Option<CalibrationTargets>,
    overrides: Option<Vec<String>>,
    out: Option<PathBuf>,
    impulse: Option<f64>,
    persistence: Option<f64>,
    horizon: Option<usize>,
    delta: Option<f64>,
    base: Option<BaseArg>,
    loan_rate: Option<f64>,
    base_cbdc: Option<f64>,
    base_kg: Option<f64>,
    svg: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Calibrate,
    Steady,
    Irf,
    Audit,
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSettings {
    pub delta: f64,
    pub base: BaseKind,
    pub loan_rate: Option<f64>,
    pub base_cbdc: f64,
    pub base_kg: f64,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub params_path: Option<PathBuf>,
    pub targets: CalibrationTargets,
    pub overrides: Vec<(String, f64)>,
    pub impulse: f64,
    /// `None` uses the parameter set's `rho_theta`.
    pub persistence: Option<f64>,
    pub horizon: usize,
    pub out: PathBuf,
    pub audit: AuditSettings,
    pub svg: bool,
}

impl RunConfig {
    pub fn shock(&self, p: &ModelParams) -> ShockSpec {
        ShockSpec {
            impulse: self.impulse,
            persistence: self.persistence.unwrap_or(p.rho_theta),
            horizon: self.horizon,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help or version text requested explicitly.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Solver(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Input-side library errors are usage errors; everything else is a solver
/// failure.
fn classify(e: Error) -> CliError {
    match e {
        Error::UnknownParameter(_) | Error::InvalidParams(_) => usage(e.to_string()),
        other => CliError::Solver(other),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_override(s: &str, with_params_file: bool) -> Result<(String, f64), CliError> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("override `{s}` is not of the form KEY=VALUE")))?;
    let key = key.trim();
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| usage(format!("override `{s}`: `{value}` is not a number")))?;
    let known = ModelParams::FIELD_NAMES.contains(&key)
        || (!with_params_file && CalibrationTargets::accepts(key));
    if !known {
        return Err(usage(format!("unknown parameter `{key}`")));
    }
    Ok((key.to_string(), value))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Parses `argv` (program name first) and an optional `--config` file.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let text = e.render().to_string();
        if e.exit_code() == 0 {
            CliError::Info(text)
        } else {
            CliError::Usage(text)
        }
    })?;

    let (task, common, shock, audit_args, svg_flag) = match cli.command {
        CommandArgs::Calibrate(c) => (Task::Calibrate, c, None, None, false),
        CommandArgs::Steady(c) => (Task::Steady, c, None, None, false),
        CommandArgs::Irf { common, shock, svg } => (Task::Irf, common, Some(shock), None, svg),
        CommandArgs::Audit { common, audit } => (Task::Audit, common, None, Some(audit), false),
        CommandArgs::Sweep { common, shock } => (Task::Sweep, common, Some(shock), None, false),
    };

    let file = match &common.config {
        Some(path) => {
            let text = read_file(path)?;
            let mut fc: FileConfig = serde_json::from_str(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            // relative paths inside the file are relative to the file
            let dir = path.parent().unwrap_or(Path::new(""));
            fc.params = fc.params.map(|p| dir.join(p));
            fc.out = fc.out.map(|p| dir.join(p));
            fc
        }
        None => FileConfig::default(),
    };

    let params_path = common.params.or(file.params);
    let targets = file.targets;
    if params_path.is_some() && targets.is_some() {
        return Err(usage(
            "give either a parameter file or calibration targets, not both",
        ));
    }
    if let Some(path) = &params_path {
        if !path.is_file() {
            return Err(usage(format!(
                "parameter file {} does not exist",
                path.display()
            )));
        }
    }
    let targets = targets.unwrap_or_default();
    targets.validate().map_err(classify)?;

    let raw_overrides = if common.overrides.is_empty() {
        file.overrides.unwrap_or_default()
    } else {
        common.overrides
    };
    let overrides = raw_overrides
        .iter()
        .map(|s| parse_override(s, params_path.is_some()))
        .collect::<Result<Vec<_>, _>>()?;

    let shock_defaults = ShockSpec::default();
    let (impulse, persistence, horizon) = match shock {
        Some(s) => (
            s.impulse.or(file.impulse).unwrap_or(shock_defaults.impulse),
            s.persistence.or(file.persistence),
            s.horizon.or(file.horizon).unwrap_or(shock_defaults.horizon),
        ),
        None => (
            file.impulse.unwrap_or(shock_defaults.impulse),
            file.persistence,
            file.horizon.unwrap_or(shock_defaults.horizon),
        ),
    };
    ShockSpec {
        impulse,
        persistence: persistence.unwrap_or(shock_defaults.persistence),
        horizon,
    }
    .validate()
    .map_err(classify)?;

    let a = audit_args.unwrap_or(AuditArgs {
        delta: None,
        base: None,
        loan_rate: None,
        base_cbdc: None,
        base_kg: None,
    });
    let base = match a.base.or(file.base).unwrap_or(BaseArg::Normalized) {
        BaseArg::Normalized => BaseKind::Normalized,
        BaseArg::Dynamic => BaseKind::Dynamic,
    };
    let audit = AuditSettings {
        delta: a.delta.or(file.delta).unwrap_or(0.01),
        base,
        loan_rate: a.loan_rate.or(file.loan_rate),
        base_cbdc: a.base_cbdc.or(file.base_cbdc).unwrap_or(0.0),
        base_kg: a.base_kg.or(file.base_kg).unwrap_or(0.0),
    };
    if !(audit.delta >= 0.0 && audit.base_cbdc >= 0.0 && audit.delta.is_finite()) {
        return Err(usage("delta and base CBDC must be nonnegative"));
    }

    Ok(RunConfig {
        task,
        params_path,
        targets,
        overrides,
        impulse,
        persistence,
        horizon,
        out: common
            .out
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("out")),
        audit,
        svg: svg_flag || file.svg.unwrap_or(false),
    })
}

fn sweep_base(cfg: &RunConfig) -> Result<SweepBase, CliError> {
    match &cfg.params_path {
        Some(path) => {
            let text = read_file(path)?;
            let p: ModelParams = serde_json::from_str(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            p.validate().map_err(classify)?;
            Ok(SweepBase::Params(p))
        }
        None => Ok(SweepBase::Targets(cfg.targets)),
    }
}

/// Parameters for a single run. A parameter file without overrides is used
/// verbatim.
pub fn resolve_params(cfg: &RunConfig) -> Result<ModelParams, CliError> {
    let base = sweep_base(cfg)?;
    if let (SweepBase::Params(p), true) = (&base, cfg.overrides.is_empty()) {
        return Ok(*p);
    }
    let scenario = Scenario {
        label: "run".into(),
        overrides: cfg.overrides.clone(),
    };
    scenario_params(&base, &scenario).map_err(classify)
}

struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Runs the configured task and writes its reports. Returns the written
/// paths in write order.
pub fn emit_reports(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if cfg.task == Task::Sweep {
        return run_sweep(cfg);
    }
    let p = resolve_params(cfg)?;
    let mut w = Writer::new(&cfg.out)?;
    w.put("params.json", &format::json(&p))?;

    match cfg.task {
        Task::Calibrate | Task::Sweep => {}
        Task::Steady => {
            let ss = solve_steady_state(&p)?;
            w.put("steady.csv", &format::name_value_csv(&ss.report_rows()))?;
        }
        Task::Irf => {
            let shock = cfg.shock(&p);
            let out = run_scenario(&p, &shock)?;
            w.put(
                "steady.csv",
                &format::name_value_csv(&out.steady.report_rows()),
            )?;
            w.put("irf.csv", &format::irf_csv(&out.report))?;
            w.put("signs.json", &format::json(&out.report.signs))?;
            let diag = serde_json::json!({
                "shock": shock,
                "diagnostics": out.trajectory.diagnostics,
                "terminal_gap": out.trajectory.terminal_gap(),
                "branch_flips": out.trajectory.branch_flips,
                "peaks": out.report.peaks,
                "units": out.report.series.iter()
                    .map(|s| (s.name, s.unit))
                    .collect::<std::collections::BTreeMap<_, _>>(),
            });
            w.put("diagnostics.json", &format::json(&diag))?;
            if cfg.svg {
                for series in &out.report.series {
                    w.put(
                        &format!("svg/{}.svg", series.name),
                        &svg::line_chart(series),
                    )?;
                }
            }
        }
        Task::Audit => run_audit(cfg, &p, &mut w)?,
    }
    Ok(w.written)
}

fn run_audit(cfg: &RunConfig, p: &ModelParams, w: &mut Writer) -> Result<(), CliError> {
    let a = &cfg.audit;
    let ss = solve_steady_state(&ModelParams { epsilon: 0.0, ..*p })?;
    let mut base = BasePosition::from_steady(&ss, p, a.base);
    base.m = a.base_cbdc;
    base.k_h -= a.base_kg - base.k_g;
    base.k_g = a.base_kg;

    let report = if p.epsilon == 0.0 {
        let rate = match a.loan_rate {
            Some(r) => r,
            None => equivalent_loan_rate(&base, p)?,
        };
        audit(&base, a.delta, rate, p)?
    } else {
        if a.loan_rate.is_some() {
            return Err(usage("the loan rate is set by the audit when epsilon > 0"));
        }
        ces_audit(&base, a.delta, p)?
    };
    w.put("audit.json", &format::json(&report))?;

    let sheets = balance_sheet_snapshot(
        &BalanceSheet::of_base(&base),
        &BalanceSheet::after_shift(&base, &report.ledger),
    )?;
    w.put("balance_sheet.json", &format::json(&sheets))?;

    let thetas: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
    let curve = loan_rate_curve(&base, p, &thetas)?;
    let mut csv = String::from("theta_b,R_l,R_l_no_collateral\n");
    for pt in curve {
        csv.push_str(&format!(
            "{},{},{}\n",
            full(pt.theta_b),
            full(pt.r_l),
            full(pt.r_l_free)
        ));
    }
    w.put("loan_rate_curve.csv", &csv)
}

fn run_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let base = sweep_base(cfg)?;
    let mut scenarios = vec![Scenario {
        label: "baseline".into(),
        overrides: Vec::new(),
    }];
    if cfg.overrides.is_empty() {
        scenarios.extend(crate::perfect_foresight::robustness_scenarios());
    } else {
        scenarios.extend(cfg.overrides.iter().map(|(k, v)| Scenario::single(k, *v)));
    }
    // persistence follows each scenario's parameters unless fixed explicitly
    let rho = match &base {
        SweepBase::Params(p) => p.rho_theta,
        SweepBase::Targets(t) => t.presets.rho_theta,
    };
    let shock = ShockSpec {
        impulse: cfg.impulse,
        persistence: cfg.persistence.unwrap_or(rho),
        horizon: cfg.horizon,
    };
    let results = sweep(&base, &scenarios, &shock);

    let mut w = Writer::new(&cfg.out)?;
    let names = crate::perfect_foresight::series_names();
    let mut summary = format!("label,status,{}\n", names.join(","));
    let mut signs = std::collections::BTreeMap::new();
    let mut failures = Vec::new();
    for r in &results {
        match &r.outcome {
            Ok(out) => {
                summary.push_str(&format!("{},ok", r.label));
                for name in &names {
                    let v = out.report.get(name).map_or(f64::NAN, |s| s.values[0]);
                    summary.push(',');
                    summary.push_str(&sig12(v));
                }
                summary.push('\n');
                signs.insert(r.label.clone(), out.report.signs.clone());
                w.put(
                    &format!("sweep/{}.csv", file_label(&r.label)),
                    &format::irf_csv(&out.report),
                )?;
            }
            Err(e) => {
                summary.push_str(&format!("{},failed{}\n", r.label, ",".repeat(names.len())));
                failures.push(format!("{}: {e}", r.label));
            }
        }
    }
    w.put("sweep_summary.csv", &summary)?;
    w.put("signs.json", &format::json(&signs))?;
    if !failures.is_empty() {
        return Err(CliError::Solver(Error::Integrity(format!(
            "{} scenario(s) failed: {}",
            failures.len(),
            failures.join("; ")
        ))));
    }
    Ok(w.written)
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(argv).and_then(|cfg| emit_reports(&cfg));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(CliError::Info(text)) => {
            print!("{text}");
            0
        }
        Err(e @ CliError::Usage(_)) => {
            eprint!("{e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
