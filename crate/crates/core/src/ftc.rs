//! Finite-time-convergent estimates built on top of a scalar DREM run.
//!
//! With `w(t) = exp(-gamma int_0^t Delta^2)` the DREM error obeys
//! `theta_tilde(t) = w(t) theta_tilde(0)`, so `(theta_hat - w theta_hat(0)) / (1 - w)`
//! equals `theta` as soon as `w` is bounded away from one. The alert variant
//! uses the moving-window weight `w^D(t) = exp(-gamma int_{t-T_D}^t Delta^2)`
//! and the snapshot `theta_hat(t - T_D)`, which lets it re-acquire a
//! parameter that has changed.

use log::debug;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::cumulative_integral;
use crate::signals::{TimeGrid, Trajectory};

/// Which earlier estimate the alert formula subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Snapshot {
    /// `theta_hat(t - T_D)`, `theta_hat(0)` while `t < T_D`.
    #[default]
    Delayed,
    /// `theta_hat(0)` throughout.
    Initial,
}

/// When the alert estimate is reported instead of the raw DREM estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertGate {
    /// Active from the first `t >= T_D` with `w^D(t) < mu` onwards, using the
    /// unclipped `w^D`. Samples where `1 - w^D` is numerically zero fall back
    /// to the raw estimate.
    #[default]
    LatchAtActivation,
    /// Active exactly at the samples where `w^D(t) < mu`.
    PerSampleClip,
}

/// `1 - w` below this is treated as no excitation in the window.
const DEGENERATE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtcConfig {
    pub clip_threshold: f64,
    /// Must equal the gain of the DREM run being corrected.
    pub gamma: f64,
    /// `T_D` in seconds; a positive multiple of the grid step.
    pub delay_window: f64,
    pub snapshot: Snapshot,
    pub gate: AlertGate,
}

impl Default for FtcConfig {
    fn default() -> Self {
        Self {
            clip_threshold: 0.98,
            gamma: 1.0,
            delay_window: 0.2,
            snapshot: Snapshot::Delayed,
            gate: AlertGate::LatchAtActivation,
        }
    }
}

impl FtcConfig {
    pub fn validate(&self) -> Result<()> {
        check_mu(self.clip_threshold)?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if !(self.delay_window > 0.0 && self.delay_window.is_finite()) {
            return Err(Error::invalid(
                "delay_window",
                format!("must be positive, got {}", self.delay_window),
            ));
        }
        Ok(())
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::invalid(
            "clip_threshold",
            format!("must lie in (0, 1), got {mu}"),
        ));
    }
    Ok(())
}

/// `T_D` in grid steps; rejects windows that are not a positive step multiple.
pub fn delay_steps(grid: &TimeGrid, delay_window: f64) -> Result<usize> {
    let (steps, residual) = grid.steps_for(delay_window);
    if steps == 0 || residual.abs() > 1e-9 * grid.step() {
        return Err(Error::invalid(
            "delay_window",
            format!(
                "{delay_window} s is not a positive multiple of the step {}",
                grid.step()
            ),
        ));
    }
    Ok(steps)
}

fn energy(delta: &Trajectory<f64>) -> Vec<f64> {
    let sq: Vec<f64> = delta.values().iter().map(|d| d * d).collect();
    cumulative_integral(&sq, delta.grid().step())
}

fn windowed_energy(delta: &Trajectory<f64>, lag: usize) -> Vec<f64> {
    let cum = energy(delta);
    (0..cum.len())
        .map(|k| if k >= lag { cum[k] - cum[k - lag] } else { cum[k] })
        .collect()
}

fn same_grid(delta: &Trajectory<f64>, values: Vec<f64>) -> Trajectory<f64> {
    Trajectory::new(*delta.grid(), delta.kind(), values).expect("same grid")
}

/// `w(t) = exp(-gamma int_0^t Delta^2)`.
pub fn update_w(delta: &Trajectory<f64>, gamma: f64) -> Trajectory<f64> {
    same_grid(delta, energy(delta).iter().map(|e| (-gamma * e).exp()).collect())
}

/// `w^c = mu` where `w >= mu`, `w` elsewhere.
pub fn clip_w(w: &Trajectory<f64>, mu: f64) -> Result<Trajectory<f64>> {
    check_mu(mu)?;
    Ok(w.map(|w| if *w >= mu { mu } else { *w }))
}

/// `(theta_hat(t) - w^c(t) theta_hat(0)) / (1 - w^c(t))`.
pub fn ftc_estimate(
    theta_hat: &Trajectory<DVector<f64>>,
    w_clipped: &Trajectory<f64>,
    theta_hat0: &DVector<f64>,
) -> Result<Trajectory<DVector<f64>>> {
    if let Some((k, w)) = w_clipped.values().iter().enumerate().find(|(_, w)| **w >= 1.0) {
        return Err(Error::Numerical(format!("clipped weight {w} >= 1 at sample {k}")));
    }
    theta_hat.zip_map(w_clipped, |th, w| (th - theta_hat0 * *w) / (1.0 - w))
}

/// `w^D(t) = exp(-gamma int_{t-T_D}^t Delta^2)`, with `Delta := 0` before the grid start.
pub fn update_w_delayed(delta: &Trajectory<f64>, gamma: f64, delay_window: f64) -> Result<Trajectory<f64>> {
    let lag = delay_steps(delta.grid(), delay_window)?;
    Ok(same_grid(
        delta,
        windowed_energy(delta, lag).iter().map(|e| (-gamma * e).exp()).collect(),
    ))
}

/// Alert estimate with its activity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertEstimate {
    pub theta: Trajectory<DVector<f64>>,
    /// Whether the sample carries the alert formula (otherwise the raw estimate).
    pub active: Vec<bool>,
}

/// `(theta_hat(t) - w^D(t) theta_hat(t - T_D)) / (1 - w^D(t))`, gated as
/// configured in `cfg`.
pub fn ftc_alert_estimate(
    theta_hat: &Trajectory<DVector<f64>>,
    w_delayed: &Trajectory<f64>,
    cfg: &FtcConfig,
) -> Result<AlertEstimate> {
    cfg.validate()?;
    theta_hat.same_support(w_delayed)?;
    let lag = delay_steps(theta_hat.grid(), cfg.delay_window)?;
    let mu = cfg.clip_threshold;
    let (th, wd) = (theta_hat.values(), w_delayed.values());
    let mut latched = false;
    let mut out = Vec::with_capacity(th.len());
    let mut active = Vec::with_capacity(th.len());
    for k in 0..th.len() {
        let w = wd[k];
        let on = match cfg.gate {
            AlertGate::PerSampleClip => w < mu,
            AlertGate::LatchAtActivation => {
                latched |= k >= lag && w < mu;
                latched && 1.0 - w > DEGENERATE_GAP
            }
        };
        if on {
            let snap = match cfg.snapshot {
                Snapshot::Delayed if k >= lag => &th[k - lag],
                _ => &th[0],
            };
            out.push((&th[k] - snap * w) / (1.0 - w));
        } else {
            out.push(th[k].clone());
        }
        active.push(on);
    }
    Ok(AlertEstimate {
        theta: Trajectory::new(*theta_hat.grid(), theta_hat.kind(), out)?,
        active,
    })
}

/// `gamma E >= -ln mu` up to a relative slack of `1e-12` absorbing quadrature rounding.
fn reaches(gamma: f64, e: f64, mu: f64) -> bool {
    gamma * e >= -mu.ln() * (1.0 - 1e-12)
}

/// First grid time with `gamma int_0^t Delta^2 >= -ln mu`.
pub fn interval_excitation_time(delta: &Trajectory<f64>, gamma: f64, mu: f64) -> Result<Option<f64>> {
    check_mu(mu)?;
    Ok(energy(delta)
        .iter()
        .position(|e| reaches(gamma, *e, mu))
        .map(|k| delta.grid().time(k)))
}

/// First grid time `t >= T_D` with `gamma int_{t-T_D}^t Delta^2 >= -ln mu`.
pub fn interval_excitation_time_delayed(
    delta: &Trajectory<f64>,
    gamma: f64,
    mu: f64,
    delay_window: f64,
) -> Result<Option<f64>> {
    check_mu(mu)?;
    let lag = delay_steps(delta.grid(), delay_window)?;
    Ok(windowed_energy(delta, lag)
        .iter()
        .enumerate()
        .skip(lag)
        .find(|(_, e)| reaches(gamma, **e, mu))
        .map(|(k, _)| delta.grid().time(k)))
}

/// Both finite-time estimates and their auxiliary signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FtcRun {
    pub w: Trajectory<f64>,
    pub w_clipped: Trajectory<f64>,
    pub w_delayed: Trajectory<f64>,
    pub theta_ftc: Trajectory<DVector<f64>>,
    pub theta_ftc_alert: Trajectory<DVector<f64>>,
    pub alert_active: Vec<bool>,
    pub t_c: Option<f64>,
    pub t_c_delayed: Option<f64>,
}

/// Apply both finite-time corrections to a DREM run driven by `delta`.
pub fn run_ftc(theta_hat: &Trajectory<DVector<f64>>, delta: &Trajectory<f64>, cfg: &FtcConfig) -> Result<FtcRun> {
    cfg.validate()?;
    theta_hat.same_support(delta)?;
    let w = update_w(delta, cfg.gamma);
    let w_clipped = clip_w(&w, cfg.clip_threshold)?;
    let theta_ftc = ftc_estimate(theta_hat, &w_clipped, theta_hat.first())?;
    let w_delayed = update_w_delayed(delta, cfg.gamma, cfg.delay_window)?;
    let alert = ftc_alert_estimate(theta_hat, &w_delayed, cfg)?;
    let t_c = interval_excitation_time(delta, cfg.gamma, cfg.clip_threshold)?;
    let t_c_delayed = interval_excitation_time_delayed(delta, cfg.gamma, cfg.clip_threshold, cfg.delay_window)?;
    debug!("ftc activation t_c = {t_c:?}, delayed t_c = {t_c_delayed:?}");
    Ok(FtcRun {
        w,
        w_clipped,
        w_delayed,
        theta_ftc,
        theta_ftc_alert: alert.theta,
        alert_active: alert.active,
        t_c,
        t_c_delayed,
    })
}
