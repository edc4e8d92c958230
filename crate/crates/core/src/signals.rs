//! Uniform-grid signals shared by the continuous-time (sampled) and
//! discrete-time paths.
//!
//! A [`Trajectory`] is a sequence of samples on a [`TimeGrid`]. Samples are
//! scalars, vectors or matrices; every sample of one trajectory has the same
//! shape. Continuous-time integrators that need values between grid points
//! ask for [`Trajectory::midpoint`], a four-point cubic interpolant.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling grid `t_k = t0 + k * step`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    step: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid("step", format!("must be positive, got {step}")));
        }
        if count == 0 {
            return Err(Error::invalid("count", "grid needs at least one sample"));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        Ok(Self { t0, step, count })
    }

    /// Grid covering `[t0, t0 + horizon]`; the horizon is rounded to the
    /// nearest multiple of `step`.
    pub fn with_horizon(t0: f64, step: f64, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(Error::invalid(
                "horizon",
                format!("must be non-negative, got {horizon}"),
            ));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("step", format!("must be positive, got {step}")));
        }
        let intervals = (horizon / step).round() as usize;
        Self::new(t0, step, intervals + 1)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn end(&self) -> f64 {
        self.time(self.count - 1)
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.time(k))
    }

    /// First index whose time is `>= t` (up to a relative slack of 1e-9
    /// steps), or `None` past the end of the grid.
    pub fn index_at_or_after(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.step;
        let k = if x <= 0.0 { 0 } else { (x - 1e-9).ceil() as usize };
        (k < self.count).then_some(k)
    }

    /// Number of whole steps closest to `duration`, together with the
    /// rounding residual in seconds.
    pub fn steps_for(&self, duration: f64) -> (usize, f64) {
        let steps = (duration / self.step).round().max(0.0);
        (steps as usize, duration - steps * self.step)
    }
}

/// Whether samples come from a continuous-time signal or are a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalKind {
    Continuous,
    Discrete,
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalKind::Continuous => f.write_str("continuous-time"),
            SignalKind::Discrete => f.write_str("discrete-time"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

/// Sample types a trajectory can carry. All of them form a real vector
/// space, which is what the integrators and interpolators rely on.
pub trait Sample: Clone + fmt::Debug + Send + Sync {
    fn shape(&self) -> Shape;

    /// `sum_i w_i * x_i`. `terms` must be non-empty and shape-consistent.
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl Sample for f64 {
    fn shape(&self) -> Shape {
        Shape::Scalar
    }

    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().fold(0.0, |acc, (w, x)| acc + w * **x)
    }
}

impl Sample for DVector<f64> {
    fn shape(&self) -> Shape {
        Shape::Vector(self.len())
    }

    fn combine(terms: &[(f64, &Self)]) -> Self {
        let (w0, x0) = terms[0];
        let mut out = x0 * w0;
        for (w, x) in &terms[1..] {
            out.axpy(*w, *x, 1.0);
        }
        out
    }
}

impl Sample for DMatrix<f64> {
    fn shape(&self) -> Shape {
        Shape::Matrix(self.nrows(), self.ncols())
    }

    fn combine(terms: &[(f64, &Self)]) -> Self {
        let (w0, x0) = terms[0];
        let mut out = x0 * w0;
        for (w, x) in &terms[1..] {
            out.zip_apply(*x, |o, v| *o += w * v);
        }
        out
    }
}

/// Value halfway between samples `k` and `k + 1` of `values`.
///
/// Four-point cubic Lagrange interpolation in the interior, one-sided
/// four-point stencils next to either end, and lower order only when fewer
/// than four samples exist.
pub(crate) fn midpoint_value<S: Sample>(values: &[S], k: usize) -> S {
    let n = values.len();
    debug_assert!(k + 1 < n, "midpoint index {k} out of range for {n} samples");
    const W: f64 = 1.0 / 16.0;
    match n {
        2 => S::combine(&[(0.5, &values[0]), (0.5, &values[1])]),
        3 => {
            // quadratic through all three samples
            if k == 0 {
                S::combine(&[(0.375, &values[0]), (0.75, &values[1]), (-0.125, &values[2])])
            } else {
                S::combine(&[(-0.125, &values[0]), (0.75, &values[1]), (0.375, &values[2])])
            }
        }
        _ if k == 0 => S::combine(&[
            (5.0 * W, &values[0]),
            (15.0 * W, &values[1]),
            (-5.0 * W, &values[2]),
            (W, &values[3]),
        ]),
        _ if k == n - 2 => S::combine(&[
            (W, &values[n - 4]),
            (-5.0 * W, &values[n - 3]),
            (15.0 * W, &values[n - 2]),
            (5.0 * W, &values[n - 1]),
        ]),
        _ => S::combine(&[
            (-W, &values[k - 1]),
            (9.0 * W, &values[k]),
            (9.0 * W, &values[k + 1]),
            (-W, &values[k + 2]),
        ]),
    }
}

/// Samples of a signal on a uniform grid. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    grid: TimeGrid,
    kind: SignalKind,
    values: Vec<S>,
}

pub type ScalarTrajectory = Trajectory<f64>;
pub type VectorTrajectory = Trajectory<DVector<f64>>;
pub type MatrixTrajectory = Trajectory<DMatrix<f64>>;

impl<S: Sample> Trajectory<S> {
    pub fn new(grid: TimeGrid, kind: SignalKind, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::Grid(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.count()
            )));
        }
        let shape = values[0].shape();
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| v.shape() != shape) {
            return Err(Error::Dimension(format!(
                "sample {k} has shape {:?}, expected {shape:?}",
                v.shape()
            )));
        }
        Ok(Self { grid, kind, values })
    }

    pub fn from_fn(grid: TimeGrid, kind: SignalKind, mut f: impl FnMut(f64) -> S) -> Result<Self> {
        let values = grid.times().map(&mut f).collect();
        Self::new(grid, kind, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.values[0].shape()
    }

    pub fn get(&self, k: usize) -> &S {
        &self.values[k]
    }

    pub fn first(&self) -> &S {
        &self.values[0]
    }

    pub fn last(&self) -> &S {
        &self.values[self.values.len() - 1]
    }

    /// `(t_k, sample_k)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> + '_ {
        self.values.iter().enumerate().map(|(k, v)| (self.grid.time(k), v))
    }

    /// Interpolated value at `t_k + step / 2`.
    pub fn midpoint(&self, k: usize) -> S {
        midpoint_value(&self.values, k)
    }

    pub fn map<T: Sample>(&self, f: impl FnMut(&S) -> T) -> Trajectory<T> {
        Trajectory {
            grid: self.grid,
            kind: self.kind,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn same_support<T>(&self, other: &Trajectory<T>) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Grid(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.kind != other.kind {
            return Err(Error::SignalKind(format!("{} vs {}", self.kind, other.kind)));
        }
        Ok(())
    }

    pub fn zip_map<T, U: Sample>(
        &self,
        other: &Trajectory<T>,
        mut f: impl FnMut(&S, &T) -> U,
    ) -> Result<Trajectory<U>> {
        self.same_support(other)?;
        Ok(Trajectory {
            grid: self.grid,
            kind: self.kind,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        })
    }

    /// `a * self + b * other`, sample by sample.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        self.zip_map(other, |x, y| S::combine(&[(a, x), (b, y)]))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| S::combine(&[(c, x)]))
    }

    /// Samples whose times fall in `[from, to]`, re-gridded from the first
    /// retained sample.
    pub fn window(&self, from: f64, to: f64) -> Result<Self> {
        let start = self
            .grid
            .index_at_or_after(from)
            .ok_or_else(|| Error::Grid(format!("window start {from} past the end of the grid")))?;
        let mut end = start;
        while end + 1 < self.len() && self.grid.time(end + 1) <= to + 1e-9 * self.grid.step() {
            end += 1;
        }
        let grid = TimeGrid::new(self.grid.time(start), self.grid.step(), end - start + 1)?;
        Ok(Self {
            grid,
            kind: self.kind,
            values: self.values[start..=end].to_vec(),
        })
    }
}

impl Trajectory<f64> {
    pub fn constant(grid: TimeGrid, kind: SignalKind, value: f64) -> Self {
        Self {
            grid,
            kind,
            values: vec![value; grid.count()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Trajectory<DVector<f64>> {
    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn component(&self, i: usize) -> Trajectory<f64> {
        self.map(|v| v[i])
    }

    /// Stacks scalar trajectories (sharing one grid) into a vector trajectory.
    pub fn from_components(components: &[Trajectory<f64>]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Dimension("no components".into()))?;
        for c in &components[1..] {
            first.same_support(c)?;
        }
        let values = (0..first.len())
            .map(|k| DVector::from_iterator(components.len(), components.iter().map(|c| c.values[k])))
            .collect();
        Trajectory::new(first.grid, first.kind, values)
    }

    /// Pointwise outer product `v v^T`.
    pub fn outer(&self) -> Trajectory<DMatrix<f64>> {
        self.map(|v| v * v.transpose())
    }

    /// Pointwise Euclidean norm.
    pub fn norms(&self) -> Trajectory<f64> {
        self.map(|v| v.norm())
    }
}

/// One segment of a piecewise parameter profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaPiece {
    Constant(Vec<f64>),
    /// `from + slope * (t - start)`.
    Ramp {
        from: Vec<f64>,
        slope: Vec<f64>,
    },
}

/// Right-continuous piecewise-constant/ramp parameter profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSchedule {
    pieces: Vec<(f64, ThetaPiece)>,
}

impl ThetaSchedule {
    pub fn new(pieces: Vec<(f64, ThetaPiece)>) -> Result<Self> {
        let (first_start, first) = pieces
            .first()
            .ok_or_else(|| Error::invalid("pieces", "schedule needs at least one piece"))?;
        if *first_start > 0.0 {
            return Err(Error::invalid("pieces", "first piece must start at or before t = 0"));
        }
        let dim = piece_dim(first)?;
        for w in pieces.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid("pieces", "start times must be strictly increasing"));
            }
        }
        for (_, p) in &pieces {
            if piece_dim(p)? != dim {
                return Err(Error::Dimension("all pieces must share one dimension".into()));
            }
        }
        Ok(Self { pieces })
    }

    pub fn constant(theta: DVector<f64>) -> Self {
        Self {
            pieces: vec![(0.0, ThetaPiece::Constant(theta.iter().copied().collect()))],
        }
    }

    /// Scalar profile: 10 on [0, 10), 15 on [10, 20), a ramp of slope -0.5
    /// on [20, 30), then 10.
    pub fn jump_and_ramp() -> Self {
        Self::new(vec![
            (0.0, ThetaPiece::Constant(vec![10.0])),
            (10.0, ThetaPiece::Constant(vec![15.0])),
            (
                20.0,
                ThetaPiece::Ramp {
                    from: vec![15.0],
                    slope: vec![-0.5],
                },
            ),
            (30.0, ThetaPiece::Constant(vec![10.0])),
        ])
        .expect("static schedule is valid")
    }

    pub fn pieces(&self) -> &[(f64, ThetaPiece)] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        piece_dim(&self.pieces[0].1).unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let idx = self.pieces.partition_point(|(start, _)| *start <= t).max(1) - 1;
        let (start, piece) = &self.pieces[idx];
        match piece {
            ThetaPiece::Constant(v) => DVector::from_column_slice(v),
            ThetaPiece::Ramp { from, slope } => {
                DVector::from_iterator(from.len(), from.iter().zip(slope).map(|(f, s)| f + s * (t - start)))
            }
        }
    }
}

fn piece_dim(p: &ThetaPiece) -> Result<usize> {
    match p {
        ThetaPiece::Constant(v) if !v.is_empty() => Ok(v.len()),
        ThetaPiece::Ramp { from, slope } if !from.is_empty() && from.len() == slope.len() => Ok(from.len()),
        _ => Err(Error::Dimension("empty or ragged schedule piece".into())),
    }
}

/// Noise-free linear regression output `phi^T theta`.
pub fn eval_lre(theta: &DVector<f64>, phi: &DVector<f64>) -> Result<f64> {
    if theta.len() != phi.len() {
        return Err(Error::Dimension(format!(
            "theta has {} entries, phi has {}",
            theta.len(),
            phi.len()
        )));
    }
    Ok(theta.dot(phi))
}

pub fn sample_schedule(schedule: &ThetaSchedule, grid: TimeGrid) -> Trajectory<DVector<f64>> {
    Trajectory {
        grid,
        kind: SignalKind::Continuous,
        values: grid.times().map(|t| schedule.eval(t)).collect(),
    }
}
