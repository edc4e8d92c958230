//! Finite-horizon excitation analysis.
//!
//! Persistency of excitation is an asymptotic property, so everything here is
//! a certificate over the tested samples: `alpha_hat` is the smallest
//! window-Gramian eigenvalue seen, and the verdict compares it with a
//! caller-supplied threshold.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixing::mix;
use crate::numerics::cumulative_integral;
use crate::operators::{sliding_window_phi, SlidingWindowSpec};
use crate::signals::{SignalKind, TimeGrid, Trajectory};

pub const DEFAULT_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeWindow {
    Seconds(f64),
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeReport {
    pub window: PeWindow,
    pub threshold: f64,
    /// Minimum over window starts of the Gramian's smallest eigenvalue, floored at 0.
    pub alpha_hat: f64,
    pub is_pe: bool,
    /// Start time of the window attaining `alpha_hat`.
    pub worst_start: f64,
    /// Smallest eigenvalue per window start, unfloored.
    pub trace: Vec<f64>,
}

impl PeReport {
    fn from_trace(window: PeWindow, threshold: f64, trace: Vec<f64>, grid: &TimeGrid) -> Self {
        let (worst, min) = trace
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, v)| if *v < acc.1 { (k, *v) } else { acc });
        let alpha_hat = min.max(0.0);
        Self {
            window,
            threshold,
            alpha_hat,
            is_pe: alpha_hat > threshold,
            worst_start: grid.time(worst),
            trace,
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix; closed form up to 2x2.
fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    match g.nrows() {
        1 => g[(0, 0)],
        2 => {
            let (a, b, d) = (g[(0, 0)], 0.5 * (g[(0, 1)] + g[(1, 0)]), g[(1, 1)]);
            let half = 0.5 * (a - d);
            0.5 * (a + d) - half.hypot(b)
        }
        _ => {
            let sym = 0.5 * (g + g.transpose());
            sym.symmetric_eigenvalues().min()
        }
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::invalid(
            "threshold",
            format!("must be non-negative, got {threshold}"),
        ));
    }
    Ok(())
}

/// Continuous-time check of `int_t^{t+T} phi phi^T >= alpha I` at every grid
/// start, Gramians taken as differences of the cumulative Simpson integral.
pub fn pe_check_ct(phi: &Trajectory<DVector<f64>>, window: f64, threshold: f64) -> Result<PeReport> {
    if phi.kind() != SignalKind::Continuous {
        return Err(Error::SignalKind("pe_check_ct needs continuous-time data".into()));
    }
    check_threshold(threshold)?;
    let grid = *phi.grid();
    let (lag, residual) = grid.steps_for(window);
    if lag == 0 || residual.abs() > 1e-9 * grid.step() {
        return Err(Error::invalid(
            "window",
            format!("{window} s is not a positive multiple of the step {}", grid.step()),
        ));
    }
    if grid.count() - 1 < 2 * lag {
        return Err(Error::Grid(format!(
            "horizon {} s is shorter than twice the window {window} s",
            grid.end() - grid.t0()
        )));
    }
    let cum = cumulative_integral(phi.outer().values(), grid.step());
    let trace = (0..grid.count() - lag)
        .map(|k| min_eigenvalue(&(&cum[k + lag] - &cum[k])))
        .collect();
    Ok(PeReport::from_trace(PeWindow::Seconds(window), threshold, trace, &grid))
}

/// Discrete-time check of `sum_{j=k+1}^{k+K} phi(j) phi(j)^T >= alpha I`,
/// each window summed directly in index order.
pub fn pe_check_dt(phi: &Trajectory<DVector<f64>>, window: usize, threshold: f64) -> Result<PeReport> {
    if phi.kind() != SignalKind::Discrete {
        return Err(Error::SignalKind("pe_check_dt needs discrete-time data".into()));
    }
    check_threshold(threshold)?;
    let m = phi.dim();
    if window < m {
        return Err(Error::invalid(
            "window",
            format!("K = {window} is smaller than m = {m}"),
        ));
    }
    let n = phi.len();
    if n < window + 1 {
        return Err(Error::Grid(format!(
            "{n} samples cannot hold a window of {window} after the start"
        )));
    }
    let outer: Vec<f64> = phi
        .values()
        .iter()
        .flat_map(|p| (0..m * m).map(move |rc| p[rc / m] * p[rc % m]))
        .collect();
    let mut gram = DMatrix::zeros(m, m);
    let trace = (0..n - window)
        .map(|k| {
            gram.fill(0.0);
            for j in k + 1..=k + window {
                let block = &outer[j * m * m..(j + 1) * m * m];
                for (rc, v) in block.iter().enumerate() {
                    gram[(rc / m, rc % m)] += v;
                }
            }
            min_eigenvalue(&gram)
        })
        .collect();
    Ok(PeReport::from_trace(
        PeWindow::Steps(window),
        threshold,
        trace,
        phi.grid(),
    ))
}

/// `int_0^t Delta^2` (CT, Simpson) or `sum_{j<=k} Delta(j)^2` (DT).
pub fn cumulative_energy(delta: &Trajectory<f64>) -> Trajectory<f64> {
    let sq: Vec<f64> = delta.values().iter().map(|d| d * d).collect();
    let values = match delta.kind() {
        SignalKind::Continuous => cumulative_integral(&sq, delta.grid().step()),
        SignalKind::Discrete => sq
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect(),
    };
    Trajectory::new(*delta.grid(), delta.kind(), values).expect("same grid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyVerdict {
    pub final_energy: f64,
    pub envelope: f64,
    /// Final energy reaches the envelope value at the last sample.
    pub follows_envelope: bool,
}

/// Compare the energy at the last sample with `envelope(t_end)`.
pub fn divergence_verdict(energy: &Trajectory<f64>, envelope: impl Fn(f64) -> f64) -> EnergyVerdict {
    let final_energy = *energy.last();
    let envelope = envelope(energy.grid().end());
    EnergyVerdict {
        final_energy,
        envelope,
        follows_envelope: final_energy >= envelope,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub horizon: usize,
    pub threshold: f64,
    /// `(K, alpha_hat)` for every tested window length.
    pub alpha_hat: Vec<(usize, f64)>,
    pub not_pe: bool,
    pub energy: EnergyVerdict,
    /// `(k, sum_{j<=k} Delta^2)` at k = 10, 100, ... up to the horizon.
    pub energy_growth: Vec<(usize, f64)>,
    /// `sum Delta^2` for alternating basis vectors with a window of 2.
    pub pe_direction_energy: f64,
    pub pe_direction_diverges: bool,
    pub zero_energy: f64,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.not_pe && self.energy.follows_envelope && self.pe_direction_diverges && self.zero_energy == 0.0
    }
}

fn mixed_delta(phi: &Trajectory<DVector<f64>>, window: usize) -> Result<Trajectory<f64>> {
    let y = phi.map(|p| p.sum());
    let ext = sliding_window_phi(phi, &y, SlidingWindowSpec::new(window)?)?;
    Ok(mix(&ext).delta)
}

/// Regressor `phi(k) = (k+1)^(-1/4)` over `horizon` steps with a unit sliding
/// window: its `Delta` has diverging energy while no window length up to
/// `max_window` certifies excitation. Also checks the converse direction on an
/// excited regressor and the zero regressor.
pub fn counterexample_suite(horizon: usize, max_window: usize, threshold: f64) -> Result<CounterexampleReport> {
    let grid = TimeGrid::new(0.0, 1.0, horizon + 1)?;
    let phi = Trajectory::from_fn(grid, SignalKind::Discrete, |t| {
        DVector::from_element(1, (t + 1.0).powf(-0.25))
    })?;
    let alpha_hat = (1..=max_window)
        .map(|k| pe_check_dt(&phi, k, threshold).map(|r| (k, r.alpha_hat)))
        .collect::<Result<Vec<_>>>()?;
    let not_pe = alpha_hat.iter().all(|(_, a)| *a < threshold);
    let cumulative = cumulative_energy(&mixed_delta(&phi, 1)?);
    let energy = divergence_verdict(&cumulative, |t| 0.9 * t.ln());
    let energy_growth = std::iter::successors(Some(10usize), |k| k.checked_mul(10))
        .take_while(|k| *k <= horizon)
        .map(|k| (k, *cumulative.get(k)))
        .collect();

    let alternating = Trajectory::from_fn(grid, SignalKind::Discrete, |t| {
        if (t as usize).is_multiple_of(2) {
            DVector::from_column_slice(&[1.0, 0.0])
        } else {
            DVector::from_column_slice(&[0.0, 1.0])
        }
    })?;
    let pe_energy = *cumulative_energy(&mixed_delta(&alternating, 2)?).last();
    let zero = Trajectory::from_fn(grid, SignalKind::Discrete, |_| DVector::zeros(1))?;
    let zero_energy = *cumulative_energy(&mixed_delta(&zero, 1)?).last();
    Ok(CounterexampleReport {
        horizon,
        threshold,
        alpha_hat,
        not_pe,
        energy,
        energy_growth,
        pe_direction_energy: pe_energy,
        pe_direction_diverges: pe_energy >= 0.5 * horizon as f64,
        zero_energy,
    })
}
