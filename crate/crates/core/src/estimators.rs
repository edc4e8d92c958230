//! Gradient and DREM estimators, continuous and discrete time, plus the
//! closed-form parameter-error solutions of the scalar DREM estimators.
//!
//! Index convention: continuous-time runs start at `theta_hat0`. Discrete-time
//! runs treat `theta_hat0` as the estimate before the first sample, so the
//! value stored at index `k` already includes the update with sample `k`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::mixing::MixedRegression;
use crate::numerics::{cumulative_integral, rk4_step, Stage};
use crate::signals::{SignalKind, Trajectory};

/// Adaptation gains and initial estimate.
///
/// Vector estimators use a single gain. DREM estimators use one gain per
/// parameter, or broadcast a single gain to all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientConfig {
    gains: Vec<f64>,
    theta_hat0: DVector<f64>,
}

impl GradientConfig {
    pub fn new(gamma: f64, theta_hat0: DVector<f64>) -> Result<Self> {
        Self::with_gains(vec![gamma], theta_hat0)
    }

    pub fn with_gains(gains: Vec<f64>, theta_hat0: DVector<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::invalid("gamma", "at least one gain is required"));
        }
        if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::invalid(
                "gamma",
                format!("gains must be positive and finite, got {g}"),
            ));
        }
        if gains.len() > 1 && gains.len() != theta_hat0.len() {
            return Err(Error::Dimension(format!(
                "{} gains for {} parameters",
                gains.len(),
                theta_hat0.len()
            )));
        }
        Ok(Self { gains, theta_hat0 })
    }

    pub fn gain(&self, i: usize) -> f64 {
        if self.gains.len() == 1 {
            self.gains[0]
        } else {
            self.gains[i]
        }
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn theta_hat0(&self) -> &DVector<f64> {
        &self.theta_hat0
    }

    fn scalar_gain(&self) -> Result<f64> {
        if self.gains.len() != 1 {
            return Err(Error::invalid("gamma", "vector gradient estimators take a single gain"));
        }
        Ok(self.gains[0])
    }

    fn check_dim(&self, m: usize) -> Result<()> {
        if self.theta_hat0.len() != m {
            return Err(Error::Dimension(format!(
                "initial estimate has {} entries, regression has {m}",
                self.theta_hat0.len()
            )));
        }
        Ok(())
    }
}

/// Output of one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRun {
    pub theta_hat: Trajectory<DVector<f64>>,
    /// `theta_hat - theta`, once the truth is attached.
    pub theta_tilde: Option<Trajectory<DVector<f64>>>,
    /// `Delta` for DREM runs, `|phi|^2` for vector gradient runs.
    pub diagnostics: Trajectory<f64>,
}

impl EstimatorRun {
    pub fn with_truth(mut self, theta: &Trajectory<DVector<f64>>) -> Result<Self> {
        self.theta_tilde = Some(self.theta_hat.zip_map(theta, |a, b| a - b)?);
        Ok(self)
    }

    pub fn with_constant_truth(mut self, theta: &DVector<f64>) -> Result<Self> {
        if theta.len() != self.theta_hat.dim() {
            return Err(Error::Dimension(format!(
                "truth has {} entries, estimate has {}",
                theta.len(),
                self.theta_hat.dim()
            )));
        }
        self.theta_tilde = Some(self.theta_hat.map(|v| v - theta));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.theta_hat.dim()
    }
}

fn expect_kind<T: crate::signals::Sample>(tr: &Trajectory<T>, kind: SignalKind) -> Result<()> {
    if tr.kind() != kind {
        return Err(Error::SignalKind(format!("expected {kind} data, got {}", tr.kind())));
    }
    Ok(())
}

/// Upper end of the real-axis stability interval of classical RK4.
pub const RK4_STABILITY_LIMIT: f64 = 2.785_293_563;

/// Reject a continuous-time run whose decay rate `gamma * energy` times the
/// step leaves the RK4 stability interval somewhere on the grid.
fn check_stiffness(gamma: f64, energy: impl Iterator<Item = f64>, step: f64) -> Result<()> {
    let (k, worst) = energy.enumerate().fold(
        (0, 0.0_f64),
        |acc, (k, e)| if e > acc.1 || e.is_nan() { (k, e) } else { acc },
    );
    let rate = gamma * worst * step;
    if !(rate <= RK4_STABILITY_LIMIT) {
        return Err(Error::Numerical(format!(
            "step {step} too large: gamma * energy * step = {rate:.3e} at sample {k} exceeds the RK4 stability limit {RK4_STABILITY_LIMIT:.3}"
        )));
    }
    Ok(())
}

/// `theta_hat' = gamma phi (y - phi^T theta_hat)`, integrated by RK4.
pub fn ct_gradient(y: &Trajectory<f64>, phi: &Trajectory<DVector<f64>>, cfg: &GradientConfig) -> Result<EstimatorRun> {
    expect_kind(phi, SignalKind::Continuous)?;
    y.same_support(phi)?;
    cfg.check_dim(phi.dim())?;
    let gamma = cfg.scalar_gain()?;
    let grid = *phi.grid();
    check_stiffness(gamma, phi.values().iter().map(|p| p.norm_squared()), grid.step())?;
    let (pv, yv) = (phi.values(), y.values());
    let mut theta = cfg.theta_hat0.clone();
    let mut out = Vec::with_capacity(grid.count());
    for k in 0..grid.count() {
        out.push(theta.clone());
        if k + 1 == grid.count() {
            break;
        }
        let (pm, ym) = (phi.midpoint(k), y.midpoint(k));
        theta = rk4_step(&theta, grid.step(), |stage, th| {
            let (p, yy) = match stage {
                Stage::Start => (&pv[k], yv[k]),
                Stage::Mid => (&pm, ym),
                Stage::End => (&pv[k + 1], yv[k + 1]),
            };
            p * (gamma * (yy - p.dot(th)))
        });
    }
    Ok(EstimatorRun {
        theta_hat: Trajectory::new(grid, SignalKind::Continuous, out)?,
        theta_tilde: None,
        diagnostics: phi.map(|p| p.norm_squared()),
    })
}

/// `theta_hat(k) = theta_hat(k-1) + phi(k) / (gamma + |phi(k)|^2) (y(k) - phi(k)^T theta_hat(k-1))`.
pub fn dt_gradient(y: &Trajectory<f64>, phi: &Trajectory<DVector<f64>>, cfg: &GradientConfig) -> Result<EstimatorRun> {
    expect_kind(phi, SignalKind::Discrete)?;
    y.same_support(phi)?;
    cfg.check_dim(phi.dim())?;
    let gamma = cfg.scalar_gain()?;
    let mut theta = cfg.theta_hat0.clone();
    let mut out = Vec::with_capacity(phi.len());
    for (p, yy) in phi.values().iter().zip(y.values()) {
        let err = yy - p.dot(&theta);
        theta.axpy(err / (gamma + p.norm_squared()), p, 1.0);
        out.push(theta.clone());
    }
    Ok(EstimatorRun {
        theta_hat: Trajectory::new(*phi.grid(), SignalKind::Discrete, out)?,
        theta_tilde: None,
        diagnostics: phi.map(|p| p.norm_squared()),
    })
}

/// `theta_hat_i' = gamma_i Delta (cal_y_i - Delta theta_hat_i)`, one scalar
/// RK4 integration per parameter.
pub fn drem_ct(mixed: &MixedRegression, cfg: &GradientConfig) -> Result<EstimatorRun> {
    expect_kind(&mixed.delta, SignalKind::Continuous)?;
    let m = mixed.dim();
    cfg.check_dim(m)?;
    let grid = *mixed.delta.grid();
    let n = grid.count();
    let dv = mixed.delta.values();
    let delta_mid: Vec<f64> = (0..n.saturating_sub(1)).map(|k| mixed.delta.midpoint(k)).collect();
    let mut columns = Vec::with_capacity(m);
    for i in 0..m {
        let gamma = cfg.gain(i);
        check_stiffness(gamma, dv.iter().map(|d| d * d), grid.step())?;
        let cal = mixed.cal_y.component(i);
        let cv = cal.values();
        let mut th = cfg.theta_hat0[i];
        let mut col = Vec::with_capacity(n);
        for k in 0..n {
            col.push(th);
            if k + 1 == n {
                break;
            }
            let cm = cal.midpoint(k);
            th = rk4_step(&th, grid.step(), |stage, x| {
                let (d, c) = match stage {
                    Stage::Start => (dv[k], cv[k]),
                    Stage::Mid => (delta_mid[k], cm),
                    Stage::End => (dv[k + 1], cv[k + 1]),
                };
                gamma * d * (c - d * x)
            });
        }
        columns.push(col);
    }
    let theta_hat = (0..n).map(|k| DVector::from_fn(m, |i, _| columns[i][k])).collect();
    Ok(EstimatorRun {
        theta_hat: Trajectory::new(grid, SignalKind::Continuous, theta_hat)?,
        theta_tilde: None,
        diagnostics: mixed.delta.clone(),
    })
}

/// `theta_hat_i(k) = theta_hat_i(k-1) + Delta(k) / (gamma_i + Delta(k)^2) (cal_y_i(k) - Delta(k) theta_hat_i(k-1))`.
pub fn drem_dt(mixed: &MixedRegression, cfg: &GradientConfig) -> Result<EstimatorRun> {
    expect_kind(&mixed.delta, SignalKind::Discrete)?;
    let m = mixed.dim();
    cfg.check_dim(m)?;
    let mut theta = cfg.theta_hat0.clone();
    let mut out = Vec::with_capacity(mixed.delta.len());
    for (d, cal) in mixed.delta.values().iter().zip(mixed.cal_y.values()) {
        for i in 0..m {
            theta[i] += d / (cfg.gain(i) + d * d) * (cal[i] - d * theta[i]);
        }
        out.push(theta.clone());
    }
    Ok(EstimatorRun {
        theta_hat: Trajectory::new(*mixed.delta.grid(), SignalKind::Discrete, out)?,
        theta_tilde: None,
        diagnostics: mixed.delta.clone(),
    })
}

/// `theta_tilde(t) = exp(-gamma int_0^t Delta^2) theta_tilde(0)`, with the
/// integral from the cumulative Simpson rule.
pub fn closed_form_error_ct(delta: &Trajectory<f64>, gamma: f64, theta_tilde0: f64) -> Trajectory<f64> {
    let sq: Vec<f64> = delta.values().iter().map(|d| d * d).collect();
    let energy = cumulative_integral(&sq, delta.grid().step());
    let values = energy.iter().map(|e| (-gamma * e).exp() * theta_tilde0).collect();
    Trajectory::new(*delta.grid(), delta.kind(), values).expect("same grid")
}

/// `theta_tilde(k) = prod_{j=0..k} 1 / (1 + Delta(j)^2 / gamma) theta_tilde(0)`,
/// where `theta_tilde(0)` is the error before the first sample.
pub fn closed_form_error_dt(delta: &Trajectory<f64>, gamma: f64, theta_tilde0: f64) -> Trajectory<f64> {
    let mut acc = theta_tilde0;
    let values = delta
        .values()
        .iter()
        .map(|d| {
            acc /= 1.0 + d * d / gamma;
            acc
        })
        .collect();
    Trajectory::new(*delta.grid(), delta.kind(), values).expect("same grid")
}

/// Largest `x_b - min_{a <= b} x_a`; zero for a non-increasing sequence.
pub fn monotonicity_violation(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut running_min = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for v in values {
        worst = worst.max(v - running_min);
        running_min = running_min.min(v);
    }
    worst
}
