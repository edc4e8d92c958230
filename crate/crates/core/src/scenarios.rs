//! End-to-end simulation studies.
//!
//! Identification: a first-order plant `y' = a y + b u` is turned into the
//! regression `y = phi^T theta` with `phi = (F[y], F[u])`, `F = 1/(p + lambda)`,
//! `theta = (a + lambda, b)`, and estimated by the vector gradient and by DREM
//! with and without the feedforward gain.
//!
//! Tracking: a scalar regression `y = Delta theta(t)` with a piecewise
//! parameter schedule, estimated by DREM and both finite-time corrections.

use nalgebra::{dvector, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{ct_gradient, drem_ct, GradientConfig};
use crate::ftc::{run_ftc, FtcConfig};
use crate::mixing::{extend_with_feedforward, mix, FeedforwardGain};
use crate::numerics::{rk4_step, Stage};
use crate::operators::{LtvChannelSpec, OperatorBank};
use crate::signals::{sample_schedule, SignalKind, ThetaSchedule, TimeGrid, Trajectory};

pub const SCENARIO_STEP: f64 = 1e-3;
pub const CONVERGENCE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSignal {
    Constant {
        level: f64,
    },
    /// `amplitude * sin(frequency * t + phase)`, frequency in rad/s.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl InputSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            InputSignal::Constant { level } => level,
            InputSignal::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub y0: f64,
    pub input: InputSignal,
}

/// RK4 simulation of `y' = a y + b u` with `u` evaluated exactly at half steps.
pub fn simulate_plant(spec: &PlantSpec, grid: TimeGrid) -> Result<(Trajectory<f64>, Trajectory<f64>)> {
    let h = grid.step();
    let mut y = spec.y0;
    let mut ys = Vec::with_capacity(grid.count());
    for k in 0..grid.count() {
        ys.push(y);
        let t = grid.time(k);
        y = rk4_step(&y, h, |stage, y| {
            let s = match stage {
                Stage::Start => t,
                Stage::Mid => t + 0.5 * h,
                Stage::End => t + h,
            };
            spec.a * y + spec.b * spec.input.eval(s)
        });
    }
    let u = Trajectory::from_fn(grid, SignalKind::Continuous, |t| spec.input.eval(t))?;
    Ok((u, Trajectory::new(grid, SignalKind::Continuous, ys)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorSpec {
    pub lambda: f64,
    #[serde(default)]
    pub filter_y0: f64,
    #[serde(default)]
    pub filter_u0: f64,
}

impl RegressorSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        let spec = Self {
            lambda,
            filter_y0: 0.0,
            filter_u0: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be positive, got {}", self.lambda),
            ));
        }
        Ok(())
    }

    pub fn theta_true(&self, plant: &PlantSpec) -> DVector<f64> {
        dvector![plant.a + self.lambda, plant.b]
    }
}

/// `phi = (F[y], F[u])` with `F = 1/(p + lambda)`.
pub fn build_regressor(
    spec: &RegressorSpec,
    u: &Trajectory<f64>,
    y: &Trajectory<f64>,
) -> Result<Trajectory<DVector<f64>>> {
    spec.validate()?;
    u.same_support(y)?;
    let filter = |x0: f64| -> Result<LtvChannelSpec> {
        LtvChannelSpec::first_order(SignalKind::Continuous, -spec.lambda, 1.0, 1.0)?
            .with_initial_state(DVector::from_element(1, x0))
    };
    let fy = filter(spec.filter_y0)?.apply(y)?;
    let fu = filter(spec.filter_u0)?.apply(u)?;
    Trajectory::from_components(&[fy, fu])
}

/// One named estimator output.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedRun {
    pub name: String,
    pub theta_hat: Trajectory<DVector<f64>>,
    pub theta_tilde: Trajectory<DVector<f64>>,
    /// Auxiliary scalar signals, e.g. `Delta` or the FTC weights.
    pub aux: Vec<(String, Trajectory<f64>)>,
}

impl NamedRun {
    pub fn new(name: &str, theta_hat: Trajectory<DVector<f64>>, truth: &Trajectory<DVector<f64>>) -> Result<Self> {
        let theta_tilde = theta_hat.zip_map(truth, |a, b| a - b)?;
        Ok(Self {
            name: name.to_owned(),
            theta_hat,
            theta_tilde,
            aux: Vec::new(),
        })
    }

    pub fn with_aux(mut self, name: &str, signal: Trajectory<f64>) -> Self {
        self.aux.push((name.to_owned(), signal));
        self
    }

    /// Per-element convergence times, see [`convergence_time`].
    pub fn convergence_times(&self, tol: f64, from: f64) -> Vec<Option<f64>> {
        convergence_time(&self.theta_tilde, tol, from)
    }

    pub fn final_error(&self) -> DVector<f64> {
        self.theta_tilde.last().clone()
    }
}

/// Per element, the first grid time `t >= from` after which `|e_i| <= tol`
/// holds up to the end of the horizon; `None` if it never settles.
pub fn convergence_time(errors: &Trajectory<DVector<f64>>, tol: f64, from: f64) -> Vec<Option<f64>> {
    let start = errors.grid().index_at_or_after(from);
    (0..errors.dim())
        .map(|i| {
            let start = start?;
            let vals = errors.values();
            let last_bad = (start..vals.len()).rev().find(|&k| vals[k][i].abs() > tol);
            match last_bad {
                None => Some(errors.grid().time(start)),
                Some(k) if k + 1 < vals.len() => Some(errors.grid().time(k + 1)),
                Some(_) => None,
            }
        })
        .collect()
}

/// Latest per-element convergence time, `None` if any element never settles.
pub fn overall_convergence(times: &[Option<f64>]) -> Option<f64> {
    times.iter().try_fold(f64::NEG_INFINITY, |acc, t| t.map(|t| acc.max(t)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub title: String,
    pub truth: Trajectory<DVector<f64>>,
    pub runs: Vec<NamedRun>,
}

impl ScenarioResult {
    pub fn run(&self, name: &str) -> Option<&NamedRun> {
        self.runs.iter().find(|r| r.name == name)
    }

    /// Restrict every trajectory to `[from, to]`.
    pub fn slice(&self, from: f64, to: f64) -> Result<Self> {
        let runs = self
            .runs
            .iter()
            .map(|r| {
                Ok(NamedRun {
                    name: r.name.clone(),
                    theta_hat: r.theta_hat.window(from, to)?,
                    theta_tilde: r.theta_tilde.window(from, to)?,
                    aux: r
                        .aux
                        .iter()
                        .map(|(n, s)| Ok((n.clone(), s.window(from, to)?)))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            title: self.title.clone(),
            truth: self.truth.window(from, to)?,
            runs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Rich,
    Constant,
}

/// Every knob of the identification study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSetup {
    pub plant: PlantSpec,
    pub regressor: RegressorSpec,
    pub gamma: f64,
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Initial estimate, zero when absent.
    #[serde(default)]
    pub theta_hat0: Option<Vec<f64>>,
    /// Poles of the two first-order channels `p / (s + p)`.
    #[serde(default = "default_bank_poles")]
    pub bank_poles: Vec<f64>,
    #[serde(default)]
    pub feedforward: FeedforwardGain,
}

fn default_step() -> f64 {
    SCENARIO_STEP
}

fn default_bank_poles() -> Vec<f64> {
    vec![1.0, 2.0]
}

impl IdentificationSetup {
    /// `a = -0.4`, `b = 0.4`, `lambda = 5`, `gamma = 1`, 20 s, bank
    /// `1/(s+1)`, `2/(s+2)`.
    pub fn preset(kind: InputKind) -> Self {
        let input = match kind {
            InputKind::Rich => InputSignal::Sinusoid {
                amplitude: 15.0,
                frequency: 2.5,
                phase: 1.0,
            },
            InputKind::Constant => InputSignal::Constant { level: 15.0 },
        };
        Self {
            plant: PlantSpec {
                a: -0.4,
                b: 0.4,
                y0: 0.0,
                input,
            },
            regressor: RegressorSpec {
                lambda: 5.0,
                filter_y0: 0.0,
                filter_u0: 0.0,
            },
            gamma: 1.0,
            horizon: 20.0,
            step: SCENARIO_STEP,
            theta_hat0: None,
            bank_poles: default_bank_poles(),
            feedforward: FeedforwardGain::Adjugate,
        }
    }

    pub fn bank(&self) -> Result<OperatorBank> {
        OperatorBank::new(
            self.bank_poles
                .iter()
                .map(|&p| LtvChannelSpec::first_order(SignalKind::Continuous, -p, p, 1.0))
                .collect::<Result<_>>()?,
        )
    }

    fn theta_hat0(&self) -> Result<DVector<f64>> {
        match &self.theta_hat0 {
            None => Ok(DVector::zeros(2)),
            Some(v) if v.len() == 2 => Ok(DVector::from_column_slice(v)),
            Some(v) => Err(Error::Dimension(format!(
                "theta_hat0 has {} entries, expected 2",
                v.len()
            ))),
        }
    }
}

/// Plant data and regressor for an identification setup.
pub struct IdentificationData {
    pub u: Trajectory<f64>,
    pub y: Trajectory<f64>,
    pub phi: Trajectory<DVector<f64>>,
    pub theta: DVector<f64>,
}

pub fn identification_data(setup: &IdentificationSetup) -> Result<IdentificationData> {
    let grid = TimeGrid::with_horizon(0.0, setup.step, setup.horizon)?;
    let (u, y) = simulate_plant(&setup.plant, grid)?;
    let phi = build_regressor(&setup.regressor, &u, &y)?;
    Ok(IdentificationData {
        theta: setup.regressor.theta_true(&setup.plant),
        u,
        y,
        phi,
    })
}

/// Runs `gradient`, `drem_d0` and `drem_dN` on the same data.
pub fn run_identification(setup: &IdentificationSetup) -> Result<ScenarioResult> {
    let data = identification_data(setup)?;
    let grid = *data.phi.grid();
    let truth = Trajectory::from_fn(grid, SignalKind::Continuous, |_| data.theta.clone())?;
    let cfg = GradientConfig::new(setup.gamma, setup.theta_hat0()?)?;

    let gradient = ct_gradient(&data.y, &data.phi, &cfg)?;
    let bank = setup.bank()?;
    let d0 = mix(&bank.extend(&data.y, &data.phi)?);
    let ff = extend_with_feedforward(&bank, setup.feedforward, &data.y, &data.phi)?;
    let dn = mix(&ff.regression);
    let drem_d0 = drem_ct(&d0, &cfg)?;
    let drem_dn = drem_ct(&dn, &cfg)?;

    let title = match setup.plant.input {
        InputSignal::Constant { .. } => "identification, constant input",
        InputSignal::Sinusoid { .. } => "identification, sinusoidal input",
    };
    Ok(ScenarioResult {
        title: title.into(),
        runs: vec![
            NamedRun::new("gradient", gradient.theta_hat, &truth)?.with_aux("phi_norm_sq", gradient.diagnostics),
            NamedRun::new("drem_d0", drem_d0.theta_hat, &truth)?.with_aux("delta", d0.delta),
            NamedRun::new("drem_dN", drem_dn.theta_hat, &truth)?.with_aux("delta", dn.delta),
        ],
        truth,
    })
}

pub fn run_identification_scenario(kind: InputKind) -> Result<ScenarioResult> {
    run_identification(&IdentificationSetup::preset(kind))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    /// `sin(2 pi t)`
    Pe,
    /// `1 / (t + 1)`
    Nonpe,
}

impl DeltaKind {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DeltaKind::Pe => (2.0 * std::f64::consts::PI * t).sin(),
            DeltaKind::Nonpe => 1.0 / (t + 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingSetup {
    pub delta: DeltaKind,
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub theta_hat0: f64,
    #[serde(default)]
    pub ftc: FtcConfig,
}

impl TrackingSetup {
    /// `gamma = 2`, `mu = 0.98`, `T_D = 0.2`, 40 s.
    pub fn preset(delta: DeltaKind) -> Self {
        Self {
            delta,
            horizon: 40.0,
            step: SCENARIO_STEP,
            theta_hat0: 0.0,
            ftc: FtcConfig {
                gamma: 2.0,
                ..FtcConfig::default()
            },
        }
    }
}

/// DREM estimate (`gradient`), clipped FTC (`ftc`) and alert FTC (`ftc_d`)
/// for `y = Delta theta(t)` under the jump-and-ramp schedule.
pub fn run_tracking(setup: &TrackingSetup) -> Result<ScenarioResult> {
    setup.ftc.validate()?;
    let grid = TimeGrid::with_horizon(0.0, setup.step, setup.horizon)?;
    let truth = sample_schedule(&ThetaSchedule::jump_and_ramp(), grid);
    let delta = Trajectory::from_fn(grid, SignalKind::Continuous, |t| setup.delta.eval(t))?;
    let mixed = crate::mixing::MixedRegression {
        cal_y: truth.zip_map(&delta, |th, d| th * *d)?,
        delta: delta.clone(),
    };
    let cfg = GradientConfig::new(setup.ftc.gamma, dvector![setup.theta_hat0])?;
    let drem = drem_ct(&mixed, &cfg)?;
    let ftc = run_ftc(&drem.theta_hat, &delta, &setup.ftc)?;
    let active = Trajectory::new(
        grid,
        SignalKind::Continuous,
        ftc.alert_active.iter().map(|a| if *a { 1.0 } else { 0.0 }).collect(),
    )?;
    let title = match setup.delta {
        DeltaKind::Pe => "tracking, Delta = sin(2 pi t)",
        DeltaKind::Nonpe => "tracking, Delta = 1/(t+1)",
    };
    Ok(ScenarioResult {
        title: title.into(),
        runs: vec![
            NamedRun::new("gradient", drem.theta_hat, &truth)?.with_aux("delta", delta),
            NamedRun::new("ftc", ftc.theta_ftc, &truth)?
                .with_aux("w", ftc.w)
                .with_aux("w_c", ftc.w_clipped),
            NamedRun::new("ftc_d", ftc.theta_ftc_alert, &truth)?
                .with_aux("w_d", ftc.w_delayed)
                .with_aux("active", active),
        ],
        truth,
    })
}

pub fn run_ftc_scenario(kind: DeltaKind) -> Result<ScenarioResult> {
    run_tracking(&TrackingSetup::preset(kind))
}
