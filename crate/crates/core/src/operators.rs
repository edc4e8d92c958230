//! Regressor-extension operators.
//!
//! Every row of an extension operator is a SISO linear time-varying channel
//!
//! ```text
//!   x'(t) = A(t) x(t) + b(t) u(t)              (CT)    x(k+1) = A(k) x(k) + b(k) u(k)   (DT)
//!   z     = c^T x + d u + delay_gain * u(t - T)                                 (u := 0 before the delay)
//! ```
//!
//! Applying a bank of `m` such channels to a scalar regression `y = phi^T theta`
//! gives the matrix regression `Y = Phi theta`. The Kreisselmeier extension and
//! the discrete sliding-window extension are provided both directly and as
//! channel banks, so the two realizations can be cross-checked.

use std::fmt;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::numerics::{rk4_step, Stage};
use crate::signals::{midpoint_value, Sample, SignalKind, TimeGrid, Trajectory};

/// A possibly time-varying operator coefficient.
#[derive(Clone)]
pub enum Coefficient<T> {
    Constant(T),
    /// One value per grid sample; interpolated between samples in CT.
    Sampled(Vec<T>),
    Function(Arc<dyn Fn(f64) -> T + Send + Sync>),
}

impl<T: fmt::Debug> fmt::Debug for Coefficient<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Coefficient::Sampled(v) => write!(f, "Sampled({} samples)", v.len()),
            Coefficient::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl<T: Sample> Coefficient<T> {
    pub fn at(&self, grid: &TimeGrid, k: usize) -> T {
        match self {
            Coefficient::Constant(v) => v.clone(),
            Coefficient::Sampled(v) => v[k].clone(),
            Coefficient::Function(f) => f(grid.time(k)),
        }
    }

    /// Value at `t_k + step / 2`.
    pub fn mid(&self, grid: &TimeGrid, k: usize) -> T {
        match self {
            Coefficient::Constant(v) => v.clone(),
            Coefficient::Sampled(v) => midpoint_value(v, k),
            Coefficient::Function(f) => f(grid.time(k) + 0.5 * grid.step()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    fn probe(&self, t0: f64) -> Option<T> {
        match self {
            Coefficient::Constant(v) => Some(v.clone()),
            Coefficient::Sampled(v) => v.first().cloned(),
            Coefficient::Function(f) => Some(f(t0)),
        }
    }

    fn check_grid(&self, grid: &TimeGrid, name: &'static str) -> Result<()> {
        match self {
            Coefficient::Sampled(v) if v.len() != grid.count() => Err(Error::Grid(format!(
                "coefficient `{name}` has {} samples, the input grid has {}",
                v.len(),
                grid.count()
            ))),
            _ => Ok(()),
        }
    }
}

impl Coefficient<f64> {
    /// True when the coefficient vanishes at every sample of `grid`.
    pub fn vanishes_on(&self, grid: &TimeGrid) -> bool {
        match self {
            Coefficient::Constant(v) => *v == 0.0,
            Coefficient::Sampled(v) => v.iter().all(|x| *x == 0.0),
            Coefficient::Function(f) => grid.times().all(|t| f(t) == 0.0),
        }
    }
}

/// Delay of the direct delay tap: seconds (rounded to the grid) or steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Time(f64),
    Steps(usize),
}

impl Delay {
    pub fn steps_on(&self, grid: &TimeGrid) -> usize {
        match *self {
            Delay::Steps(k) => k,
            Delay::Time(t) => {
                let (k, residual) = grid.steps_for(t);
                if residual.abs() > 1e-9 * grid.step() {
                    warn!(
                        "delay {t} s is not a multiple of the grid step {}; rounded to {k} steps",
                        grid.step()
                    );
                }
                k
            }
        }
    }
}

/// One SISO row of an extension operator.
#[derive(Debug, Clone)]
pub struct LtvChannelSpec {
    domain: SignalKind,
    a: Coefficient<DMatrix<f64>>,
    b: Coefficient<DVector<f64>>,
    c: Coefficient<DVector<f64>>,
    feedthrough: Coefficient<f64>,
    delay_gain: Coefficient<f64>,
    delay: Delay,
    x0: DVector<f64>,
}

impl LtvChannelSpec {
    /// Channel with state matrices `(A, b, c)`, zero feedthrough, no delay
    /// tap and zero initial state.
    ///
    /// A constant `A` is checked for stability (open left half-plane in CT,
    /// open unit disc in DT). Time-varying `A` is taken as declared stable.
    pub fn new(
        domain: SignalKind,
        a: Coefficient<DMatrix<f64>>,
        b: Coefficient<DVector<f64>>,
        c: Coefficient<DVector<f64>>,
    ) -> Result<Self> {
        let a0 = a
            .probe(0.0)
            .ok_or_else(|| Error::invalid("A", "sampled coefficient has no samples"))?;
        let n = a0.nrows();
        if a0.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", a0.nrows(), a0.ncols())));
        }
        for (name, v) in [("b", b.probe(0.0)), ("c", c.probe(0.0))] {
            match v {
                Some(v) if v.len() == n => {}
                Some(v) => {
                    return Err(Error::Dimension(format!(
                        "{name} has {} entries, A is {n}x{n}",
                        v.len()
                    )))
                }
                None => return Err(Error::invalid(name, "sampled coefficient has no samples")),
            }
        }
        if let Coefficient::Constant(m) = &a {
            check_stable(m, domain)?;
        }
        Ok(Self {
            domain,
            a,
            b,
            c,
            feedthrough: Coefficient::Constant(0.0),
            delay_gain: Coefficient::Constant(0.0),
            delay: Delay::Steps(0),
            x0: DVector::zeros(n),
        })
    }

    /// Scalar LTI channel `c b / (s - a)` (CT) or `c b / (q - a)` (DT).
    pub fn first_order(domain: SignalKind, a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(
            domain,
            Coefficient::Constant(DMatrix::from_element(1, 1, a)),
            Coefficient::Constant(DVector::from_element(1, b)),
            Coefficient::Constant(DVector::from_element(1, c)),
        )
    }

    /// Memoryless channel `z = d u`.
    pub fn static_gain(domain: SignalKind, d: f64) -> Self {
        Self::stateless(domain).with_feedthrough(Coefficient::Constant(d))
    }

    /// `z = gain * u(t - delay)`.
    pub fn pure_delay(domain: SignalKind, gain: f64, delay: Delay) -> Result<Self> {
        Self::stateless(domain).with_delay(Coefficient::Constant(gain), delay)
    }

    fn stateless(domain: SignalKind) -> Self {
        Self {
            domain,
            a: Coefficient::Constant(DMatrix::zeros(0, 0)),
            b: Coefficient::Constant(DVector::zeros(0)),
            c: Coefficient::Constant(DVector::zeros(0)),
            feedthrough: Coefficient::Constant(0.0),
            delay_gain: Coefficient::Constant(0.0),
            delay: Delay::Steps(0),
            x0: DVector::zeros(0),
        }
    }

    pub fn with_feedthrough(mut self, d: Coefficient<f64>) -> Self {
        self.feedthrough = d;
        self
    }

    pub fn with_delay(mut self, gain: Coefficient<f64>, delay: Delay) -> Result<Self> {
        if let Delay::Time(t) = delay {
            if !(t >= 0.0) {
                return Err(Error::invalid("delay", format!("must be non-negative, got {t}")));
            }
        }
        self.delay_gain = gain;
        self.delay = delay;
        Ok(self)
    }

    pub fn with_initial_state(mut self, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "initial state has {} entries, channel order is {}",
                x0.len(),
                self.state_dim()
            )));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn domain(&self) -> SignalKind {
        self.domain
    }

    pub fn state_dim(&self) -> usize {
        self.x0.len()
    }

    pub fn feedthrough(&self) -> &Coefficient<f64> {
        &self.feedthrough
    }

    /// All coefficients constant.
    pub fn is_lti(&self) -> bool {
        self.a.is_constant()
            && self.b.is_constant()
            && self.c.is_constant()
            && self.feedthrough.is_constant()
            && self.delay_gain.is_constant()
    }

    /// Upper estimate of the induced L-infinity gain of an LTI channel:
    /// the L1 norm of the impulse response plus `|d| + |delay_gain|`.
    /// `None` for time-varying channels.
    pub fn gain_bound(&self) -> Option<f64> {
        let (
            Coefficient::Constant(a),
            Coefficient::Constant(b),
            Coefficient::Constant(c),
            Coefficient::Constant(d),
            Coefficient::Constant(mu),
        ) = (&self.a, &self.b, &self.c, &self.feedthrough, &self.delay_gain)
        else {
            return None;
        };
        let direct = d.abs() + mu.abs();
        if self.state_dim() == 0 {
            return Some(direct);
        }
        let scale = b.norm().max(f64::MIN_POSITIVE);
        let mut x = b.clone();
        let mut total = 0.0;
        match self.domain {
            SignalKind::Discrete => {
                for _ in 0..10_000_000 {
                    total += c.dot(&x).abs();
                    x = a * &x;
                    if x.norm() < 1e-14 * scale {
                        break;
                    }
                }
            }
            SignalKind::Continuous => {
                let dt = 1e-3 / a.norm().max(1.0);
                let transition = (a * dt).exp();
                let mut prev = c.dot(&x).abs();
                for _ in 0..100_000_000 {
                    x = &transition * &x;
                    let cur = c.dot(&x).abs();
                    total += 0.5 * dt * (prev + cur);
                    prev = cur;
                    if x.norm() < 1e-14 * scale {
                        break;
                    }
                }
            }
        }
        Some(direct + total)
    }

    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        self.a.check_grid(grid, "A")?;
        self.b.check_grid(grid, "b")?;
        self.c.check_grid(grid, "c")?;
        self.feedthrough.check_grid(grid, "d")?;
        self.delay_gain.check_grid(grid, "delay_gain")
    }

    /// `c^T x + d u(k) + delay_gain u(k - lag)`; the state term is summed in
    /// index order.
    fn output(&self, grid: &TimeGrid, k: usize, x: &DVector<f64>, u: &[f64], lag: usize) -> f64 {
        let mut acc = 0.0;
        if !x.is_empty() {
            let c = self.c.at(grid, k);
            for j in 0..x.len() {
                acc += c[j] * x[j];
            }
        }
        let delayed = if k >= lag { u[k - lag] } else { 0.0 };
        acc + self.feedthrough.at(grid, k) * u[k] + self.delay_gain.at(grid, k) * delayed
    }

    pub fn apply(&self, u: &Trajectory<f64>) -> Result<Trajectory<f64>> {
        match self.domain {
            SignalKind::Continuous => apply_channel_ct(self, u),
            SignalKind::Discrete => apply_channel_dt(self, u),
        }
    }
}

fn check_stable(a: &DMatrix<f64>, domain: SignalKind) -> Result<()> {
    if a.nrows() == 0 {
        return Ok(());
    }
    let domain_name = match domain {
        SignalKind::Continuous => "continuous-time",
        SignalKind::Discrete => "discrete-time",
    };
    let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, 10_000) else {
        // QR iteration stalls on some defective matrices (e.g. nilpotent
        // shifts); fall back to a power bound on the spectral radius.
        return if power_bound_below_one(a, domain) {
            Ok(())
        } else {
            Err(Error::UnstableChannel {
                eigenvalue: "unresolved (spectral radius bound not met)".into(),
                domain: domain_name,
            })
        };
    };
    for ev in schur.complex_eigenvalues().iter() {
        let stable = match domain {
            SignalKind::Continuous => ev.re < 0.0,
            SignalKind::Discrete => ev.norm() < 1.0,
        };
        if !stable {
            return Err(Error::UnstableChannel {
                eigenvalue: format!("{ev}"),
                domain: domain_name,
            });
        }
    }
    Ok(())
}

/// Sufficient test: some power `M^(2^j)` of the transition matrix has norm
/// below one, where `M = A` (DT) or `M = exp(A)` (CT).
fn power_bound_below_one(a: &DMatrix<f64>, domain: SignalKind) -> bool {
    let mut m = match domain {
        SignalKind::Continuous => a.exp(),
        SignalKind::Discrete => a.clone(),
    };
    for _ in 0..64 {
        let norm = m.norm();
        if norm < 1.0 {
            return true;
        }
        if !norm.is_finite() {
            return false;
        }
        m = &m * &m;
    }
    false
}

fn check_kind(spec: &LtvChannelSpec, u: &Trajectory<f64>, expected: SignalKind) -> Result<()> {
    if spec.domain != expected || u.kind() != expected {
        return Err(Error::SignalKind(format!(
            "{} channel applied to a {} input",
            spec.domain,
            u.kind()
        )));
    }
    spec.check_grid(u.grid())
}

/// Continuous-time channel response. The state is integrated with RK4; the
/// input and any sampled coefficients are interpolated at half steps.
pub fn apply_channel_ct(spec: &LtvChannelSpec, u: &Trajectory<f64>) -> Result<Trajectory<f64>> {
    check_kind(spec, u, SignalKind::Continuous)?;
    let grid = *u.grid();
    let h = grid.step();
    let lag = spec.delay.steps_on(&grid);
    let uv = u.values();
    let n = grid.count();
    let mut x = spec.x0.clone();
    let mut z = Vec::with_capacity(n);
    for k in 0..n {
        z.push(spec.output(&grid, k, &x, uv, lag));
        if k + 1 == n || x.is_empty() {
            continue;
        }
        let (a0, b0, u0) = (spec.a.at(&grid, k), spec.b.at(&grid, k), uv[k]);
        let (am, bm, um) = (spec.a.mid(&grid, k), spec.b.mid(&grid, k), u.midpoint(k));
        let (a1, b1, u1) = (spec.a.at(&grid, k + 1), spec.b.at(&grid, k + 1), uv[k + 1]);
        x = rk4_step(&x, h, |stage, x| {
            let (a, b, u) = match stage {
                Stage::Start => (&a0, &b0, u0),
                Stage::Mid => (&am, &bm, um),
                Stage::End => (&a1, &b1, u1),
            };
            let mut dx = a * x;
            dx.axpy(u, b, 1.0);
            dx
        });
    }
    Trajectory::new(grid, SignalKind::Continuous, z)
}

/// Discrete-time channel response by direct recursion.
pub fn apply_channel_dt(spec: &LtvChannelSpec, u: &Trajectory<f64>) -> Result<Trajectory<f64>> {
    check_kind(spec, u, SignalKind::Discrete)?;
    let grid = *u.grid();
    let lag = spec.delay.steps_on(&grid);
    let uv = u.values();
    let mut x = spec.x0.clone();
    let mut z = Vec::with_capacity(grid.count());
    for k in 0..grid.count() {
        z.push(spec.output(&grid, k, &x, uv, lag));
        if !x.is_empty() {
            let mut next = spec.a.at(&grid, k) * &x;
            next.axpy(uv[k], &spec.b.at(&grid, k), 1.0);
            x = next;
        }
    }
    Trajectory::new(grid, SignalKind::Discrete, z)
}

/// The matrix regression `Y = Phi theta` produced by an extension operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedRegression {
    pub y: Trajectory<DVector<f64>>,
    pub phi: Trajectory<DMatrix<f64>>,
}

impl ExtendedRegression {
    pub fn new(y: Trajectory<DVector<f64>>, phi: Trajectory<DMatrix<f64>>) -> Result<Self> {
        y.same_support(&phi)?;
        let m = y.dim();
        if phi.first().nrows() != m || phi.first().ncols() != m {
            return Err(Error::Dimension(format!(
                "Y has {m} rows but Phi is {}x{}",
                phi.first().nrows(),
                phi.first().ncols()
            )));
        }
        Ok(Self { y, phi })
    }

    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    /// `Y - Phi theta` at every sample.
    pub fn residual(&self, theta: &DVector<f64>) -> Result<Trajectory<DVector<f64>>> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, regression has {}",
                theta.len(),
                self.dim()
            )));
        }
        self.y.zip_map(&self.phi, |y, phi| y - phi * theta)
    }
}

/// `m` channels, one per row of the extension operator.
#[derive(Debug, Clone)]
pub struct OperatorBank {
    channels: Vec<LtvChannelSpec>,
}

impl OperatorBank {
    pub fn new(channels: Vec<LtvChannelSpec>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("channels", "operator bank needs at least one channel"))?;
        if channels.iter().any(|c| c.domain != first.domain) {
            return Err(Error::SignalKind("bank mixes continuous and discrete channels".into()));
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[LtvChannelSpec] {
        &self.channels
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn domain(&self) -> SignalKind {
        self.channels[0].domain
    }

    pub fn extend(&self, y: &Trajectory<f64>, phi: &Trajectory<DVector<f64>>) -> Result<ExtendedRegression> {
        extend(self, y, phi)
    }
}

/// `Y_i = H_i[y]` and row `i` of `Phi` is `H_i` applied to each entry of `phi^T`.
pub fn extend(bank: &OperatorBank, y: &Trajectory<f64>, phi: &Trajectory<DVector<f64>>) -> Result<ExtendedRegression> {
    y.same_support(phi)?;
    let m = phi.dim();
    if bank.dim() != m {
        return Err(Error::Dimension(format!(
            "bank has {} channels but the regressor has {m} entries",
            bank.dim()
        )));
    }
    let components: Vec<Trajectory<f64>> = (0..m).map(|j| phi.component(j)).collect();
    let mut y_rows = Vec::with_capacity(m);
    let mut phi_entries = Vec::with_capacity(m * m);
    for channel in &bank.channels {
        y_rows.push(channel.apply(y)?);
        for comp in &components {
            phi_entries.push(channel.apply(comp)?);
        }
    }
    let grid = *y.grid();
    let n = grid.count();
    let y_ext = (0..n)
        .map(|k| DVector::from_iterator(m, y_rows.iter().map(|r| r.values()[k])))
        .collect();
    let phi_ext = (0..n)
        .map(|k| DMatrix::from_fn(m, m, |i, j| phi_entries[i * m + j].values()[k]))
        .collect();
    ExtendedRegression::new(
        Trajectory::new(grid, y.kind(), y_ext)?,
        Trajectory::new(grid, y.kind(), phi_ext)?,
    )
}

/// Window length `K` of the discrete sliding-window extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlidingWindowSpec {
    window: usize,
}

impl SlidingWindowSpec {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window", "must be at least 1"));
        }
        Ok(Self { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn check(&self, m: usize) -> Result<()> {
        if self.window < m {
            return Err(Error::invalid(
                "window",
                format!("window {} is shorter than the regressor dimension {m}", self.window),
            ));
        }
        Ok(())
    }
}

fn check_discrete<T: Sample>(tr: &Trajectory<T>) -> Result<()> {
    if tr.kind() != SignalKind::Discrete {
        return Err(Error::SignalKind(
            "sliding-window extension needs discrete-time data".into(),
        ));
    }
    Ok(())
}

/// `Phi(k) = sum_{j=1..K} phi(k-j) phi(k-j)^T`, `Y(k) = sum_{j=1..K} phi(k-j) y(k-j)`,
/// summed in increasing `j`; samples before `k = 0` count as zero.
pub fn sliding_window_phi(
    phi: &Trajectory<DVector<f64>>,
    y: &Trajectory<f64>,
    spec: SlidingWindowSpec,
) -> Result<ExtendedRegression> {
    check_discrete(phi)?;
    phi.same_support(y)?;
    let m = phi.dim();
    spec.check(m)?;
    let (pv, yv) = (phi.values(), y.values());
    let n = pv.len();
    let mut y_ext = Vec::with_capacity(n);
    let mut phi_ext = Vec::with_capacity(n);
    for k in 0..n {
        let mut big_y = DVector::zeros(m);
        let mut big_phi = DMatrix::zeros(m, m);
        for j in 1..=spec.window.min(k) {
            let v = &pv[k - j];
            for r in 0..m {
                big_y[r] += v[r] * yv[k - j];
                for c in 0..m {
                    big_phi[(r, c)] += v[r] * v[c];
                }
            }
        }
        y_ext.push(big_y);
        phi_ext.push(big_phi);
    }
    ExtendedRegression::new(
        Trajectory::new(*phi.grid(), SignalKind::Discrete, y_ext)?,
        Trajectory::new(*phi.grid(), SignalKind::Discrete, phi_ext)?,
    )
}

/// The sliding-window extension realized as a bank of time-varying
/// shift-register channels: channel `i` keeps `u(k-1..k-K)` in its state and
/// reads it out with `c(k) = (phi_i(k-1), ..., phi_i(k-K))`.
pub fn sliding_window_bank(phi: &Trajectory<DVector<f64>>, spec: SlidingWindowSpec) -> Result<OperatorBank> {
    check_discrete(phi)?;
    let m = phi.dim();
    spec.check(m)?;
    let kw = spec.window;
    let shift = DMatrix::from_fn(kw, kw, |r, c| if r == c + 1 { 1.0 } else { 0.0 });
    let mut inject = DVector::zeros(kw);
    inject[0] = 1.0;
    let pv = phi.values();
    let channels = (0..m)
        .map(|i| {
            let readout = (0..pv.len())
                .map(|k| DVector::from_fn(kw, |j, _| if k > j { pv[k - j - 1][i] } else { 0.0 }))
                .collect();
            LtvChannelSpec::new(
                SignalKind::Discrete,
                Coefficient::Constant(shift.clone()),
                Coefficient::Constant(inject.clone()),
                Coefficient::Sampled(readout),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorBank::new(channels)
}

/// Kreisselmeier's extension `1 / (s + pole)` applied to `phi y` and `phi phi^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct KreSpec {
    pole: f64,
    omega0: Option<DMatrix<f64>>,
    z0: Option<DVector<f64>>,
}

impl KreSpec {
    pub fn new(pole: f64) -> Result<Self> {
        if !(pole > 0.0) {
            return Err(Error::invalid("pole", format!("must be positive, got {pole}")));
        }
        Ok(Self {
            pole,
            omega0: None,
            z0: None,
        })
    }

    pub fn with_initial(mut self, omega0: DMatrix<f64>, z0: DVector<f64>) -> Self {
        self.omega0 = Some(omega0);
        self.z0 = Some(z0);
        self
    }

    pub fn pole(&self) -> f64 {
        self.pole
    }
}

fn first_order_filter<S: Sample>(pole: f64, input: &Trajectory<S>, x0: S) -> Result<Trajectory<S>> {
    let grid = *input.grid();
    let h = grid.step();
    let iv = input.values();
    let mut x = x0;
    let mut out = Vec::with_capacity(grid.count());
    for k in 0..grid.count() {
        out.push(x.clone());
        if k + 1 == grid.count() {
            break;
        }
        let mid = input.midpoint(k);
        x = rk4_step(&x, h, |stage, x| {
            let u = match stage {
                Stage::Start => &iv[k],
                Stage::Mid => &mid,
                Stage::End => &iv[k + 1],
            };
            S::combine(&[(-pole, x), (1.0, u)])
        });
    }
    Trajectory::new(grid, input.kind(), out)
}

/// `Omega' = -a Omega + phi phi^T`, `Z' = -a Z + phi y`, integrated by RK4.
/// Returned as `(Y = Z, Phi = Omega)`.
pub fn kre_ct(spec: &KreSpec, y: &Trajectory<f64>, phi: &Trajectory<DVector<f64>>) -> Result<ExtendedRegression> {
    if phi.kind() != SignalKind::Continuous {
        return Err(Error::SignalKind("KRE filter is continuous-time".into()));
    }
    y.same_support(phi)?;
    let m = phi.dim();
    let omega0 = spec.omega0.clone().unwrap_or_else(|| DMatrix::zeros(m, m));
    let z0 = spec.z0.clone().unwrap_or_else(|| DVector::zeros(m));
    if omega0.shape() != (m, m) || z0.len() != m {
        return Err(Error::Dimension(
            "KRE initial conditions do not match the regressor".into(),
        ));
    }
    let phiphi = phi.outer();
    let phiy = phi.zip_map(y, |p, y| p * *y)?;
    ExtendedRegression::new(
        first_order_filter(spec.pole, &phiy, z0)?,
        first_order_filter(spec.pole, &phiphi, omega0)?,
    )
}

/// Channel bank whose extension equals the KRE output from zero initial
/// conditions: channel `i` is `x' = -a x + phi_i(t) u`, `z = x`.
pub fn kre_as_drem_bank(phi: &Trajectory<DVector<f64>>, pole: f64) -> Result<OperatorBank> {
    if phi.kind() != SignalKind::Continuous {
        return Err(Error::SignalKind("KRE bank is continuous-time".into()));
    }
    if !(pole > 0.0) {
        return Err(Error::invalid("pole", format!("must be positive, got {pole}")));
    }
    let channels = (0..phi.dim())
        .map(|i| {
            LtvChannelSpec::new(
                SignalKind::Continuous,
                Coefficient::Constant(DMatrix::from_element(1, 1, -pole)),
                Coefficient::Sampled(phi.values().iter().map(|v| DVector::from_element(1, v[i])).collect()),
                Coefficient::Constant(DVector::from_element(1, 1.0)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorBank::new(channels)
}
