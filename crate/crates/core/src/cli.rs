//! Command-line front end.
//!
//! ```text
//! drem simulate  --config <file.json> [--out <dir>]
//! drem reproduce <fig1|fig2|ftc-pe-early|ftc-pe-late|ftc-nonpe> [--out <dir>]
//! drem check-pe  --config <file.json> [--out <dir>]
//! ```
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::estimators::{ct_gradient, drem_ct, GradientConfig};
use crate::excitation::{counterexample_suite, cumulative_energy, pe_check_ct, PeReport, DEFAULT_THRESHOLD};
use crate::ftc::{AlertGate, FtcConfig, Snapshot};
use crate::mixing::{extend_with_feedforward, mix, FeedforwardGain};
use crate::operators::{Coefficient, Delay, LtvChannelSpec, OperatorBank};
use crate::scenarios::{
    convergence_time, identification_data, run_identification, run_tracking, DeltaKind, IdentificationSetup, InputKind,
    NamedRun, PlantSpec, RegressorSpec, ScenarioResult, TrackingSetup, CONVERGENCE_TOLERANCE, SCENARIO_STEP,
};
use crate::signals::{SignalKind, TimeGrid, Trajectory};

pub const OUT_DIR_ENV: &str = "DREM_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "drem-out";

#[derive(Debug, Parser)]
#[command(
    name = "drem",
    version,
    about = "Gradient and DREM parameter estimators: simulation and reproduction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to the config, then $DREM_OUT_DIR, then ./drem-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in figure preset.
    Reproduce {
        figure: Figure,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Excitation report for the signal described by a JSON config.
    CheckPe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    /// Identification, u = 15 sin(2.5 t + 1).
    Fig1,
    /// Identification, u = 15.
    Fig2,
    /// Tracking with Delta = sin(2 pi t), t in [0, 3].
    FtcPeEarly,
    /// Tracking with Delta = sin(2 pi t), t in [9, 40].
    FtcPeLate,
    /// Tracking with Delta = 1/(t+1).
    FtcNonpe,
}

/// Failure classes mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Identify,
    Ftc,
    PeCheck,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t0: f64,
    pub step: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub gamma: f64,
    #[serde(default)]
    pub theta_hat0: Option<Vec<f64>>,
    #[serde(default)]
    pub feedforward: FeedforwardGain,
}

/// A coefficient entry: a number, or the name of a signal (`u`, `y`, `phi1`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefEntry {
    Value(f64),
    Signal(String),
}

impl Default for CoefEntry {
    fn default() -> Self {
        CoefEntry::Value(0.0)
    }
}

/// One channel `x' = A x + b u`, `z = c^T x + d u + delay_gain u(t - delay)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Rows of `A`; empty for a memoryless channel.
    #[serde(default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<CoefEntry>,
    #[serde(default)]
    pub c: Vec<CoefEntry>,
    #[serde(default)]
    pub d: CoefEntry,
    #[serde(default)]
    pub delay_gain: CoefEntry,
    /// Seconds.
    #[serde(default)]
    pub delay: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtcSection {
    pub delta: DeltaKind,
    #[serde(default)]
    pub theta_hat0: f64,
    /// Unset fields take the preset tracking values.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub clip_threshold: Option<f64>,
    #[serde(default)]
    pub delay_window: Option<f64>,
    #[serde(default)]
    pub snapshot: Option<Snapshot>,
    #[serde(default)]
    pub gate: Option<AlertGate>,
    /// Emit only `[from, to]`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PeSignal {
    /// `phi(k) = (k+1)^(-1/4)` with a unit sliding window.
    Counterexample {
        #[serde(default = "default_ce_horizon")]
        horizon: usize,
        #[serde(default = "default_ce_windows")]
        max_window: usize,
    },
    /// `(sin t, cos t)` over whole periods, window `2 pi`.
    Sincos {
        #[serde(default = "default_periods")]
        periods: usize,
        #[serde(default = "default_samples_per_period")]
        samples_per_period: usize,
    },
    /// Zero regressor of dimension `dim` on the config grid.
    Zero { dim: usize },
    /// The identification regressor built from the `plant` and `regressor` sections.
    Identify,
}

fn default_ce_horizon() -> usize {
    100_000
}
fn default_ce_windows() -> usize {
    100
}
fn default_periods() -> usize {
    4
}
fn default_samples_per_period() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeCheckSection {
    pub signal: PeSignal,
    /// Window length in seconds (continuous-time signals).
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// JSON scenario description. Sections irrelevant to `mode` must be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub plant: Option<PlantSpec>,
    #[serde(default)]
    pub regressor: Option<RegressorSpec>,
    #[serde(default)]
    pub bank: Option<Vec<ChannelSection>>,
    #[serde(default)]
    pub estimator: Option<EstimatorSection>,
    #[serde(default)]
    pub ftc: Option<FtcSection>,
    #[serde(default)]
    pub pe_check: Option<PeCheckSection>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing section `{name}`")))
    }

    fn grid_or(&self, step: f64, horizon: f64) -> Result<(f64, f64), CliError> {
        match self.grid {
            None => Ok((step, horizon)),
            Some(g) if g.t0 != 0.0 => Err(CliError::Config(format!(
                "grid.t0 must be 0 for simulations, got {}",
                g.t0
            ))),
            Some(g) => Ok((g.step, g.horizon)),
        }
    }
}

/// Everything a command produced, ready to be written.
pub struct Outputs {
    pub result: Option<ScenarioResult>,
    pub summary: String,
    pub extra_files: Vec<(String, String)>,
}

fn identification_setup(cfg: &ScenarioConfig) -> Result<IdentificationSetup, CliError> {
    let plant = *ScenarioConfig::require(&cfg.plant, "plant")?;
    let regressor = *ScenarioConfig::require(&cfg.regressor, "regressor")?;
    let est = ScenarioConfig::require(&cfg.estimator, "estimator")?;
    let (step, horizon) = cfg.grid_or(SCENARIO_STEP, 20.0)?;
    Ok(IdentificationSetup {
        plant,
        regressor,
        gamma: est.gamma,
        horizon,
        step,
        theta_hat0: est.theta_hat0.clone(),
        bank_poles: vec![1.0, 2.0],
        feedforward: est.feedforward,
    })
}

fn resolve_signal<'a>(
    name: &str,
    signals: &'a BTreeMap<String, Trajectory<f64>>,
) -> Result<&'a Trajectory<f64>, CliError> {
    signals.get(name).ok_or_else(|| {
        let known: Vec<&str> = signals.keys().map(String::as_str).collect();
        CliError::Config(format!("unknown signal `{name}` (known: {})", known.join(", ")))
    })
}

fn scalar_coef(entry: &CoefEntry, signals: &BTreeMap<String, Trajectory<f64>>) -> Result<Coefficient<f64>, CliError> {
    Ok(match entry {
        CoefEntry::Value(v) => Coefficient::Constant(*v),
        CoefEntry::Signal(name) => Coefficient::Sampled(resolve_signal(name, signals)?.values().to_vec()),
    })
}

fn vector_coef(
    entries: &[CoefEntry],
    signals: &BTreeMap<String, Trajectory<f64>>,
    count: usize,
) -> Result<Coefficient<DVector<f64>>, CliError> {
    if entries.iter().all(|e| matches!(e, CoefEntry::Value(_))) {
        let v = entries
            .iter()
            .map(|e| if let CoefEntry::Value(v) = e { *v } else { 0.0 });
        return Ok(Coefficient::Constant(DVector::from_iterator(entries.len(), v)));
    }
    let columns = entries
        .iter()
        .map(|e| match e {
            CoefEntry::Value(v) => Ok(vec![*v; count]),
            CoefEntry::Signal(name) => Ok(resolve_signal(name, signals)?.values().to_vec()),
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Coefficient::Sampled(
        (0..count)
            .map(|k| DVector::from_iterator(columns.len(), columns.iter().map(|c| c[k])))
            .collect(),
    ))
}

/// Build a continuous-time bank, resolving signal names against `signals`.
pub fn build_bank(
    sections: &[ChannelSection],
    signals: &BTreeMap<String, Trajectory<f64>>,
    count: usize,
) -> Result<OperatorBank, CliError> {
    let channels = sections
        .iter()
        .enumerate()
        .map(|(i, s)| -> Result<LtvChannelSpec, CliError> {
            let n = s.a.len();
            if s.a.iter().any(|row| row.len() != n) {
                return Err(CliError::Config(format!("bank[{i}].a must be square")));
            }
            let ctx = |e: Error| CliError::Config(format!("bank[{i}]: {e}"));
            let base = if n == 0 {
                if !s.b.is_empty() || !s.c.is_empty() {
                    return Err(CliError::Config(format!("bank[{i}]: b and c need a state matrix a")));
                }
                LtvChannelSpec::static_gain(SignalKind::Continuous, 0.0)
            } else {
                let a = DMatrix::from_fn(n, n, |r, c| s.a[r][c]);
                LtvChannelSpec::new(
                    SignalKind::Continuous,
                    Coefficient::Constant(a),
                    vector_coef(&s.b, signals, count)?,
                    vector_coef(&s.c, signals, count)?,
                )
                .map_err(ctx)?
            };
            let mut ch = base
                .with_feedthrough(scalar_coef(&s.d, signals)?)
                .with_delay(scalar_coef(&s.delay_gain, signals)?, Delay::Time(s.delay))
                .map_err(ctx)?;
            if let Some(x0) = &s.x0 {
                ch = ch.with_initial_state(DVector::from_column_slice(x0)).map_err(ctx)?;
            }
            Ok(ch)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OperatorBank::new(channels)?)
}

/// `gradient`, `drem` with the configured bank and, for banks without
/// feedthrough, `drem_ff` with the feedforward gain.
fn run_custom(cfg: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    let setup = identification_setup(cfg)?;
    let sections = ScenarioConfig::require(&cfg.bank, "bank")?;
    let data = identification_data(&setup)?;
    let grid = *data.phi.grid();
    let mut signals = BTreeMap::new();
    signals.insert("u".to_owned(), data.u.clone());
    signals.insert("y".to_owned(), data.y.clone());
    for i in 0..data.phi.dim() {
        signals.insert(format!("phi{}", i + 1), data.phi.component(i));
    }
    let bank = build_bank(sections, &signals, grid.count())?;
    let truth = Trajectory::from_fn(grid, SignalKind::Continuous, |_| data.theta.clone())?;
    let theta0 = match &setup.theta_hat0 {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(data.theta.len()),
    };
    let gcfg = GradientConfig::new(setup.gamma, theta0)?;
    let gradient = ct_gradient(&data.y, &data.phi, &gcfg)?;
    let mixed = mix(&bank.extend(&data.y, &data.phi)?);
    let drem = drem_ct(&mixed, &gcfg)?;
    let mut runs = vec![
        NamedRun::new("gradient", gradient.theta_hat, &truth)?.with_aux("phi_norm_sq", gradient.diagnostics),
        NamedRun::new("drem", drem.theta_hat, &truth)?.with_aux("delta", mixed.delta),
    ];
    if let Ok(ff) = extend_with_feedforward(&bank, setup.feedforward, &data.y, &data.phi) {
        let mixed = mix(&ff.regression);
        let run = drem_ct(&mixed, &gcfg)?;
        runs.push(NamedRun::new("drem_ff", run.theta_hat, &truth)?.with_aux("delta", mixed.delta));
    }
    Ok(ScenarioResult {
        title: "identification, custom bank".into(),
        truth,
        runs,
    })
}

fn tracking_setup(cfg: &ScenarioConfig) -> Result<(TrackingSetup, Option<[f64; 2]>), CliError> {
    let section = ScenarioConfig::require(&cfg.ftc, "ftc")?;
    let (step, horizon) = cfg.grid_or(SCENARIO_STEP, 40.0)?;
    let preset = TrackingSetup::preset(section.delta).ftc;
    let ftc = FtcConfig {
        gamma: section.gamma.unwrap_or(preset.gamma),
        clip_threshold: section.clip_threshold.unwrap_or(preset.clip_threshold),
        delay_window: section.delay_window.unwrap_or(preset.delay_window),
        snapshot: section.snapshot.unwrap_or(preset.snapshot),
        gate: section.gate.unwrap_or(preset.gate),
    };
    Ok((
        TrackingSetup {
            delta: section.delta,
            horizon,
            step,
            theta_hat0: section.theta_hat0,
            ftc,
        },
        section.window,
    ))
}

/// Run a `simulate` config.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Outputs, CliError> {
    let result = match cfg.mode {
        Mode::Identify => run_identification(&identification_setup(cfg)?)?,
        Mode::Custom => run_custom(cfg)?,
        Mode::Ftc => {
            let (setup, window) = tracking_setup(cfg)?;
            let full = run_tracking(&setup)?;
            match window {
                Some([from, to]) => full.slice(from, to)?,
                None => full,
            }
        }
        Mode::PeCheck => return Err(CliError::Config("pe-check configs run with `check-pe`".into())),
    };
    Ok(Outputs {
        summary: scenario_summary(&result),
        result: Some(result),
        extra_files: Vec::new(),
    })
}

pub fn figure_result(figure: Figure) -> Result<ScenarioResult, CliError> {
    Ok(match figure {
        Figure::Fig1 => run_identification(&IdentificationSetup::preset(InputKind::Rich))?,
        Figure::Fig2 => run_identification(&IdentificationSetup::preset(InputKind::Constant))?,
        Figure::FtcPeEarly => run_tracking(&TrackingSetup::preset(DeltaKind::Pe))?.slice(0.0, 3.0)?,
        Figure::FtcPeLate => run_tracking(&TrackingSetup::preset(DeltaKind::Pe))?.slice(9.0, 40.0)?,
        Figure::FtcNonpe => run_tracking(&TrackingSetup::preset(DeltaKind::Nonpe))?,
    })
}

/// Convergence times (error within tolerance to the end of the emitted
/// horizon) and final errors of every run.
pub fn scenario_summary(result: &ScenarioResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", result.title);
    let _ = writeln!(
        s,
        "horizon [{}, {}] s, step {} s, settling tolerance {CONVERGENCE_TOLERANCE}",
        result.truth.grid().t0(),
        result.truth.grid().end(),
        result.truth.grid().step()
    );
    for run in &result.runs {
        let t0 = run.theta_tilde.grid().t0();
        let times = convergence_time(&run.theta_tilde, CONVERGENCE_TOLERANCE, t0);
        let times: Vec<String> = times
            .iter()
            .map(|t| t.map_or_else(|| "never".to_owned(), |t| format!("{t:.3} s")))
            .collect();
        let finals: Vec<String> = run.final_error().iter().map(|e| format!("{e:.6e}")).collect();
        let _ = writeln!(
            s,
            "{:<10} settles at [{}], final error [{}]",
            run.name,
            times.join(", "),
            finals.join(", ")
        );
        if let Some((_, delta)) = run.aux.iter().find(|(n, _)| n == "delta") {
            let _ = writeln!(
                s,
                "{:<10} int Delta^2 over the horizon = {:.6e}",
                "",
                cumulative_energy(delta).last()
            );
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct PeSummary<'a> {
    signal: &'a PeSignal,
    window: Option<f64>,
    threshold: f64,
    alpha_hat: f64,
    is_pe: bool,
    worst_start: f64,
}

impl<'a> PeSummary<'a> {
    fn new(signal: &'a PeSignal, r: &PeReport) -> Self {
        let window = match r.window {
            crate::excitation::PeWindow::Seconds(s) => Some(s),
            crate::excitation::PeWindow::Steps(k) => Some(k as f64),
        };
        Self {
            signal,
            window,
            threshold: r.threshold,
            alpha_hat: r.alpha_hat,
            is_pe: r.is_pe,
            worst_start: r.worst_start,
        }
    }
}

/// Run a `check-pe` config. The verdict is data; only bad configs fail.
pub fn check_pe(cfg: &ScenarioConfig) -> Result<Outputs, CliError> {
    let section = ScenarioConfig::require(&cfg.pe_check, "pe_check")?;
    let (summary, json) = match &section.signal {
        PeSignal::Counterexample { horizon, max_window } => {
            let r = counterexample_suite(*horizon, *max_window, section.threshold)?;
            let mut s = String::new();
            let worst = r.alpha_hat.iter().map(|(_, a)| *a).fold(f64::INFINITY, f64::min);
            let best = r.alpha_hat.iter().map(|(_, a)| *a).fold(0.0, f64::max);
            let _ = writeln!(s, "signal: phi(k) = (k+1)^(-1/4), unit sliding window, {horizon} steps");
            let _ = writeln!(
                s,
                "alpha_hat over K = 1..{max_window}: min {worst:.6e}, max {best:.6e}, threshold {}",
                section.threshold
            );
            let _ = writeln!(s, "verdict: {}", if r.not_pe { "not PE" } else { "PE on this horizon" });
            let _ = writeln!(s, "energy growth (sum Delta^2 vs ln k):");
            for (k, e) in &r.energy_growth {
                let _ = writeln!(s, "  k = {k:>8}  energy = {e:.6}  ln k = {:.6}", (*k as f64).ln());
            }
            let _ = writeln!(
                s,
                "final energy {:.6} vs 0.9 ln(horizon) = {:.6}",
                r.energy.final_energy, r.energy.envelope
            );
            (s, to_pretty_json(&r))
        }
        signal => {
            let (phi, window) = match signal {
                PeSignal::Sincos {
                    periods,
                    samples_per_period,
                } => {
                    let h = 2.0 * std::f64::consts::PI / *samples_per_period as f64;
                    let grid = TimeGrid::new(0.0, h, periods * samples_per_period + 1)?;
                    let phi = Trajectory::from_fn(grid, SignalKind::Continuous, |t| {
                        DVector::from_column_slice(&[t.sin(), t.cos()])
                    })?;
                    (phi, section.window.unwrap_or(2.0 * std::f64::consts::PI))
                }
                PeSignal::Zero { dim } => {
                    let g = ScenarioConfig::require(&cfg.grid, "grid")?;
                    let grid = TimeGrid::with_horizon(g.t0, g.step, g.horizon)?;
                    let phi = Trajectory::from_fn(grid, SignalKind::Continuous, |_| DVector::zeros(*dim))?;
                    (phi, window_required(section)?)
                }
                PeSignal::Identify => {
                    let setup = identification_setup_for_pe(cfg)?;
                    (identification_data(&setup)?.phi, window_required(section)?)
                }
                PeSignal::Counterexample { .. } => unreachable!(),
            };
            let r = pe_check_ct(&phi, window, section.threshold)?;
            let mut s = String::new();
            let _ = writeln!(
                s,
                "signal: {signal:?}, window {window} s, threshold {}",
                section.threshold
            );
            let _ = writeln!(
                s,
                "alpha_hat = {:.9e} (worst window starts at t = {:.4} s)",
                r.alpha_hat, r.worst_start
            );
            let _ = writeln!(s, "verdict: {}", if r.is_pe { "PE on this horizon" } else { "not PE" });
            (s, to_pretty_json(&PeSummary::new(signal, &r)))
        }
    };
    Ok(Outputs {
        result: None,
        summary,
        extra_files: vec![("pe_report.json".to_owned(), json)],
    })
}

fn to_pretty_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn window_required(section: &PeCheckSection) -> Result<f64, CliError> {
    section
        .window
        .ok_or_else(|| CliError::Config("pe_check.window is required for this signal".into()))
}

fn identification_setup_for_pe(cfg: &ScenarioConfig) -> Result<IdentificationSetup, CliError> {
    let plant = *ScenarioConfig::require(&cfg.plant, "plant")?;
    let regressor = *ScenarioConfig::require(&cfg.regressor, "regressor")?;
    let (step, horizon) = cfg.grid_or(SCENARIO_STEP, 20.0)?;
    Ok(IdentificationSetup {
        plant,
        regressor,
        horizon,
        step,
        ..IdentificationSetup::preset(InputKind::Constant)
    })
}

/// Column names of a run CSV.
pub fn csv_header(run: &NamedRun) -> Vec<String> {
    let m = run.theta_hat.dim();
    let mut cols = vec!["t".to_owned()];
    cols.extend((1..=m).map(|i| format!("theta_hat_{i}")));
    cols.extend((1..=m).map(|i| format!("theta_tilde_{i}")));
    cols.extend(run.aux.iter().map(|(n, _)| n.clone()));
    cols
}

/// Format with 17 significant digits, enough to round-trip every `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_run_csv(path: &Path, run: &NamedRun) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(csv_header(run)).map_err(|e| io_err(path, e))?;
    let grid = run.theta_hat.grid();
    for k in 0..run.theta_hat.len() {
        let mut row = vec![fmt_f64(grid.time(k))];
        row.extend(run.theta_hat.get(k).iter().map(|v| fmt_f64(*v)));
        row.extend(run.theta_tilde.get(k).iter().map(|v| fmt_f64(*v)));
        row.extend(run.aux.iter().map(|(_, s)| fmt_f64(*s.get(k))));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// A parsed CSV: header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| io_err(path, e))?;
            rec.iter()
                .map(|f| f.parse::<f64>().map_err(|e| io_err(path, format!("`{f}`: {e}"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(CsvTable { header, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

/// Write CSVs, the summary, extra files and `manifest.json` into `dir`.
pub fn write_outputs(dir: &Path, command: &str, config_hash: &str, outputs: &Outputs) -> Result<RunManifest, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    if let Some(result) = &outputs.result {
        for run in &result.runs {
            let name = format!("{}.csv", run.name);
            write_run_csv(&dir.join(&name), run)?;
            files.push(ManifestEntry {
                file: name,
                columns: csv_header(run),
                rows: run.theta_hat.len(),
            });
        }
    }
    let mut text_files = vec![("summary.txt".to_owned(), outputs.summary.clone())];
    text_files.extend(outputs.extra_files.iter().cloned());
    for (name, body) in &text_files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        files.push(ManifestEntry {
            file: name.clone(),
            columns: Vec::new(),
            rows: body.lines().count(),
        });
    }
    files.push(ManifestEntry {
        file: "manifest.json".to_owned(),
        columns: Vec::new(),
        rows: 0,
    });
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        command: command.to_owned(),
        config_sha256: config_hash.to_owned(),
        files,
    };
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ScenarioConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn hash_of(value: &impl Serialize) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("serializes")))
}

/// Execute a parsed command line.
pub fn execute(cli: Cli) -> Result<PathBuf, CliError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = out_dir(out, Some(&cfg));
            let outputs = simulate(&cfg)?;
            write_outputs(&dir, "simulate", &cfg.hash(), &outputs)?;
            print!("{}", outputs.summary);
            Ok(dir)
        }
        Command::Reproduce { figure, out } => {
            let dir = out_dir(out, None);
            let result = figure_result(figure)?;
            let outputs = Outputs {
                summary: scenario_summary(&result),
                result: Some(result),
                extra_files: Vec::new(),
            };
            write_outputs(
                &dir,
                &format!("reproduce {}", figure_name(figure)),
                &hash_of(&figure),
                &outputs,
            )?;
            print!("{}", outputs.summary);
            Ok(dir)
        }
        Command::CheckPe { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = out_dir(out, Some(&cfg));
            let outputs = check_pe(&cfg)?;
            write_outputs(&dir, "check-pe", &cfg.hash(), &outputs)?;
            print!("{}", outputs.summary);
            Ok(dir)
        }
    }
}

fn figure_name(f: Figure) -> String {
    f.to_possible_value()
        .map(|v| v.get_name().to_owned())
        .unwrap_or_default()
}

/// Parse `args`, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(dir) => {
            info!("outputs written to {}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
