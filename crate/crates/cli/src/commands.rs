//! Subcommand definitions and their implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use momvar_core::estimation::{gmm_estimate, simple_estimate, EstimationReport, GmmOptions};
use momvar_core::inference::{
    t_test_mean_less, wilcoxon_signed_rank, Alternative, InferenceError, TestMethod, TestResult,
};
use momvar_core::model::expected_third_moment;
use momvar_core::simulator::{
    simulate_terminals, synth_panel, Functional, Scheme, SimConfig, DAY_LENGTH,
};
use momvar_core::{DailyMomentPanel64, HestonParams64};
use serde::Serialize;

use crate::config::{MethodChoice, ModelConfig, Preset, RunConfig};
use crate::error::CliError;
use crate::ingest::ingest_and_resample;
use crate::json::to_json;
use crate::panel_csv::{fmt_f64, read_panel_file, write_panel};

const DEFAULT_STEPS_PER_DAY: usize = 390;
const DEFAULT_BARS: usize = 78;
const DEFAULT_SIM_DAYS: usize = 2000;
const DEFAULT_CONVERGE_PATHS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "momvar", version, about = "Realized third and fourth moment variations under square-root stochastic volatility")]
pub struct Cli {
    /// TOML run configuration; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resample a tick file onto the session bar grid and write the daily moment panel CSV
    Panel(PanelArgs),
    /// Simulate a synthetic daily panel from the stochastic volatility model
    Simulate(SimulateArgs),
    /// Estimate (kappa, theta, gamma, rho) from a daily panel
    Estimate(EstimateArgs),
    /// Test the tv15 and r3 columns for zero mean (t-test) and zero median (signed-rank)
    Test(TestArgs),
    /// Running means of tv15 and R^3 across simulated paths, against the closed-form third moment
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Tick CSV with header `timestamp,price`
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output panel CSV (stdout if omitted)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Session open, HH:MM (default 09:30)
    #[arg(long)]
    pub open: Option<String>,
    /// Session close, HH:MM (default 16:00)
    #[arg(long)]
    pub close: Option<String>,
    /// Bar width in minutes (default 5)
    #[arg(long)]
    pub bar_minutes: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelConfig,
    /// Number of trading days (default 2000)
    #[arg(long)]
    pub days: Option<usize>,
    /// Intraday bars per day (default 78)
    #[arg(long)]
    pub bars: Option<usize>,
    /// Euler steps per day, a multiple of --bars (default 390)
    #[arg(long)]
    pub steps_per_day: Option<usize>,
    /// Random seed (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Variance discretization: full_truncation_euler or reflection_euler
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    /// Output panel CSV (stdout if omitted)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write a JSON summary of the run (parameters, truncation, pathwise and realized means)
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write the per-day continuous-time integrals as CSV
    #[arg(long)]
    pub pathwise: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Panel CSV as written by `panel` or `simulate`
    #[arg(long, short)]
    pub panel: PathBuf,
    /// Estimator (default simple)
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Observation interval in trading days (default 1)
    #[arg(long)]
    pub delta_days: Option<f64>,
    /// Iteration cap for each simplex run of the GMM search
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Also write the report as JSON to this file
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Print JSON instead of text on stdout
    #[arg(long)]
    pub print_json: bool,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Panel CSV as written by `panel` or `simulate`
    #[arg(long, short)]
    pub panel: PathBuf,
    /// Output JSON (stdout if omitted)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Parameters; defaults to the volvol preset
    #[command(flatten)]
    pub model: ModelConfig,
    /// Number of simulated paths (default 10000)
    #[arg(long)]
    pub paths: Option<usize>,
    /// Horizon in years (default 1)
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Euler steps per trading day (default 390)
    #[arg(long)]
    pub steps_per_day: Option<usize>,
    /// Random seed (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Variance discretization: full_truncation_euler or reflection_euler
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    /// Output CSV (stdout if omitted)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "full_truncation_euler" | "full-truncation-euler" => Ok(Scheme::FullTruncationEuler),
        "reflection_euler" | "reflection-euler" => Ok(Scheme::ReflectionEuler),
        _ => Err(format!("unknown scheme `{s}` (full_truncation_euler, reflection_euler)")),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Panel(a) => cmd_panel(&cfg, a),
        Command::Simulate(a) => cmd_simulate(&cfg, a),
        Command::Estimate(a) => cmd_estimate(&cfg, a),
        Command::Test(a) => cmd_test(a),
        Command::Converge(a) => cmd_converge(&cfg, a),
    }
}

fn emit(path: Option<&Path>, contents: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents).map_err(CliError::io(p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents)
                .and_then(|_| out.flush())
                .map_err(CliError::io("<stdout>"))
        }
    }
}

fn panel_bytes(panel: &DailyMomentPanel64) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_panel(panel, &mut buf)?;
    Ok(buf)
}

pub fn cmd_panel(cfg: &RunConfig, a: &PanelArgs) -> Result<(), CliError> {
    let session = cfg.session(a.open.as_deref(), a.close.as_deref(), a.bar_minutes)?;
    let resampled = ingest_and_resample(&a.input, &session)?;
    for w in &resampled.warnings {
        log::warn!("{w}");
    }
    let panel = momvar_core::realized::build_panel(&resampled.grids)?;
    emit(a.output.as_deref(), &panel_bytes(&panel)?)
}

/// Resolved settings of a `simulate` run.
#[derive(Clone, Debug, Serialize)]
pub struct SimulateSettings {
    pub params: HestonParams64,
    pub days: usize,
    pub bars: usize,
    pub steps_per_day: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimulateSettings {
    pub fn resolve(cfg: &RunConfig, a: &SimulateArgs) -> Result<Self, CliError> {
        let s = &cfg.simulation;
        let out = Self {
            params: a.model.or(&cfg.model).resolve(Preset::Model1)?,
            days: a.days.or(s.days).unwrap_or(DEFAULT_SIM_DAYS),
            bars: a.bars.or(s.bars).unwrap_or(DEFAULT_BARS),
            steps_per_day: a.steps_per_day.or(s.steps_per_day).unwrap_or(DEFAULT_STEPS_PER_DAY),
            seed: a.seed.or(s.seed).unwrap_or(0),
            scheme: a.scheme.or(s.scheme).unwrap_or_default(),
        };
        if out.days == 0 || out.bars == 0 || out.steps_per_day == 0 {
            return Err(CliError::Input("days, bars and steps_per_day must be positive".into()));
        }
        Ok(out)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig::new(self.params, self.days as f64 * DAY_LENGTH, 1, self.seed)
            .with_steps_per_day(self.steps_per_day)
            .with_scheme(self.scheme)
    }
}

#[derive(Serialize)]
struct Means {
    qv: f64,
    tv: f64,
    fv: f64,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    settings: &'a SimulateSettings,
    feller: bool,
    truncated_fraction: f64,
    pathwise_mean: Means,
    realized_mean: Means,
    mean_v_close: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    s / n as f64
}

pub fn cmd_simulate(cfg: &RunConfig, a: &SimulateArgs) -> Result<(), CliError> {
    let settings = SimulateSettings::resolve(cfg, a)?;
    let sp = synth_panel(&settings.sim_config(), settings.days, settings.bars)?;
    if sp.truncated_fraction > 0.0 {
        log::info!("variance truncated on {:.3}% of steps", 100.0 * sp.truncated_fraction);
    }
    emit(a.output.as_deref(), &panel_bytes(&sp.panel)?)?;
    if let Some(path) = &a.summary {
        let rows = sp.panel.rows();
        let summary = SimulateSummary {
            settings: &settings,
            feller: settings.params.feller(),
            truncated_fraction: sp.truncated_fraction,
            pathwise_mean: Means {
                qv: mean(sp.pathwise.iter().map(|d| d.qv)),
                tv: mean(sp.pathwise.iter().map(|d| d.tv)),
                fv: mean(sp.pathwise.iter().map(|d| d.fv)),
            },
            realized_mean: Means {
                qv: mean(rows.iter().map(|r| r.rv)),
                tv: mean(rows.iter().map(|r| r.tv)),
                fv: mean(rows.iter().map(|r| r.fv)),
            },
            mean_v_close: mean(sp.pathwise.iter().map(|d| d.v_close)),
        };
        emit(Some(path), to_json(&summary)?.as_bytes())?;
    }
    if let Some(path) = &a.pathwise {
        let mut s = String::from("day_id,qv,tv,fv,v_close\n");
        for (g, d) in sp.grids.iter().zip(&sp.pathwise) {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                g.day_id(),
                fmt_f64(d.qv),
                fmt_f64(d.tv),
                fmt_f64(d.fv),
                fmt_f64(d.v_close)
            ));
        }
        emit(Some(path), s.as_bytes())?;
    }
    Ok(())
}

/// Runs the requested estimator. GMM starts from the simple estimates.
pub fn estimate_panel(
    panel: &DailyMomentPanel64,
    delta: f64,
    method: MethodChoice,
    max_iters: Option<u64>,
) -> Result<EstimationReport, CliError> {
    let simple = simple_estimate(panel, delta)?;
    if method == MethodChoice::Simple {
        return Ok(simple);
    }
    if simple.diagnostics.degenerate {
        return Err(CliError::Numerical(
            "simple estimates are undefined on this panel, so GMM has no starting point".into(),
        ));
    }
    let mut opts = GmmOptions::default();
    if let Some(n) = max_iters {
        opts.simplex.max_iters = n;
    }
    let mut start = simple.estimates;
    if simple.diagnostics.rho_clamped {
        start.rho = start.rho.clamp(-0.99, 0.99);
    }
    Ok(gmm_estimate(panel, delta, &start, opts)?)
}

pub fn cmd_estimate(cfg: &RunConfig, a: &EstimateArgs) -> Result<(), CliError> {
    let delta = cfg.delta(a.delta_days)?;
    let method = a.method.or(cfg.estimation.method).unwrap_or(MethodChoice::Simple);
    let panel = read_panel_file(&a.panel)?;
    let report = estimate_panel(&panel, delta, method, a.max_iters.or(cfg.estimation.max_iters))?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let json = to_json(&report)?;
    if let Some(path) = &a.json {
        emit(Some(path), json.as_bytes())?;
    }
    if a.print_json {
        emit(None, json.as_bytes())
    } else {
        emit(None, report.to_text().as_bytes())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnTests {
    /// One-sided t-test of `mean < 0`.
    pub t_test: TestResult,
    /// Two-sided signed-rank test of a zero median.
    pub wilcoxon: TestResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub n_days: usize,
    pub tv15: ColumnTests,
    pub r3: ColumnTests,
}

/// A column identically equal to zero has `t = 0` and a signed-rank sum of
/// zero over no usable observations; both are reported rather than rejected.
fn column_tests(xs: &[f64]) -> Result<ColumnTests, CliError> {
    let all_zero = xs.iter().all(|&x| x == 0.0);
    let t_test = match t_test_mean_less(xs, 0.0) {
        Err(InferenceError::ZeroVariance) if all_zero => TestResult {
            statistic: 0.0,
            p_value: 0.5,
            n: xs.len(),
            method: TestMethod::TOneSidedLess,
            alternative: Alternative::Less,
            exact: false,
            notes: vec!["every observation is zero; t is set to 0".into()],
        },
        r => r?,
    };
    let wilcoxon = match wilcoxon_signed_rank(xs, Alternative::TwoSided) {
        Err(InferenceError::AllZero) => TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            method: TestMethod::WilcoxonTwoSided,
            alternative: Alternative::TwoSided,
            exact: true,
            notes: vec!["every observation is zero".into()],
        },
        r => r?,
    };
    Ok(ColumnTests { t_test, wilcoxon })
}

pub fn test_panel(panel: &DailyMomentPanel64) -> Result<TestReport, CliError> {
    Ok(TestReport {
        n_days: panel.len(),
        tv15: column_tests(&panel.tv15())?,
        r3: column_tests(&panel.r3())?,
    })
}

pub fn cmd_test(a: &TestArgs) -> Result<(), CliError> {
    let panel = read_panel_file(&a.panel)?;
    let report = test_panel(&panel)?;
    emit(a.output.as_deref(), to_json(&report)?.as_bytes())
}

/// 10, 20, 50, 100, ... below `n`, then `n`.
pub fn log_checkpoints(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 10usize;
    'outer: loop {
        for m in [1, 2, 5] {
            let c = decade * m;
            if c >= n {
                break 'outer;
            }
            out.push(c);
        }
        decade *= 10;
    }
    out.push(n);
    out
}

pub const CONVERGE_HEADER: &str = "sample_size,mean_tv15,mean_r3,theoretical_third_moment,se_tv15,se_r3";

pub fn converge_csv(cfg: &SimConfig) -> Result<String, CliError> {
    let theory = expected_third_moment(&cfg.params, cfg.horizon)?;
    let terminals = simulate_terminals(cfg)?;
    let checkpoints = log_checkpoints(cfg.n_paths);
    let tv = terminals.running(Functional::Tv15, &checkpoints);
    let r3 = terminals.running(Functional::R3, &checkpoints);
    let mut s = String::from(CONVERGE_HEADER);
    s.push('\n');
    for ((n, a), b) in checkpoints.iter().zip(&tv).zip(&r3) {
        s.push_str(&format!(
            "{n},{},{},{},{},{}\n",
            fmt_f64(a.estimate),
            fmt_f64(b.estimate),
            fmt_f64(theory),
            fmt_f64(a.std_error),
            fmt_f64(b.std_error)
        ));
    }
    Ok(s)
}

pub fn cmd_converge(cfg: &RunConfig, a: &ConvergeArgs) -> Result<(), CliError> {
    let s = &cfg.simulation;
    let params = a.model.or(&cfg.model).resolve(Preset::Volvol)?;
    let paths = a.paths.or(s.paths).unwrap_or(DEFAULT_CONVERGE_PATHS);
    if paths < 2 {
        return Err(CliError::Input("converge needs at least 2 paths".into()));
    }
    let sim = SimConfig::new(params, a.horizon.or(s.horizon).unwrap_or(1.0), paths, a.seed.or(s.seed).unwrap_or(0))
        .with_steps_per_day(a.steps_per_day.or(s.steps_per_day).unwrap_or(DEFAULT_STEPS_PER_DAY))
        .with_scheme(a.scheme.or(s.scheme).unwrap_or_default());
    emit(a.output.as_deref(), converge_csv(&sim)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use momvar_core::realized::DailyMoments;

    #[test]
    fn checkpoints_are_log_spaced_and_end_at_n() {
        assert_eq!(log_checkpoints(250), vec![10, 20, 50, 100, 200, 250]);
        assert_eq!(log_checkpoints(100), vec![10, 20, 50, 100]);
        assert_eq!(log_checkpoints(5), vec![5]);
    }

    #[test]
    fn zero_tv_column_gives_boundary_p_values() {
        let rows = (0..30)
            .map(|i| DailyMoments {
                day_id: i.to_string(),
                rv: 1e-4,
                tv: 0.0,
                fv: 1e-8,
                r_close: if i % 2 == 0 { 0.01 } else { -0.012 },
            })
            .collect();
        let panel = DailyMomentPanel64::from_rows(rows).unwrap();
        let r = test_panel(&panel).unwrap();
        assert_eq!(r.tv15.t_test.p_value, 0.5);
        assert_eq!(r.tv15.wilcoxon.p_value, 1.0);
        assert!(r.r3.t_test.p_value > 0.0 && r.r3.t_test.p_value < 1.0);
    }
}
