//! Regressor mixing: `adj(Phi) Y = det(Phi) theta` splits the extended
//! regression into `m` scalar regressions sharing the regressor `Delta`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{ExtendedRegression, OperatorBank};
use crate::signals::Trajectory;

/// Largest order handled by cofactor expansion.
const COFACTOR_MAX: usize = 4;

fn assert_square(a: &DMatrix<f64>) {
    assert!(
        a.is_square(),
        "expected a square matrix, got {}x{}",
        a.nrows(),
        a.ncols()
    );
}

fn minor(a: &DMatrix<f64>, row: usize, col: usize) -> DMatrix<f64> {
    a.clone().remove_row(row).remove_column(col)
}

fn laplace_det(a: &DMatrix<f64>) -> f64 {
    match a.nrows() {
        0 => 1.0,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        n => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[(0, j)] * laplace_det(&minor(a, 0, j))
            })
            .sum(),
    }
}

/// Determinant: cofactor expansion up to order 4, LU with partial pivoting above.
///
/// # Panics
/// If `a` is not square.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    assert_square(a);
    if a.nrows() <= COFACTOR_MAX {
        laplace_det(a)
    } else {
        a.clone().lu().determinant()
    }
}

/// Adjugate (transposed cofactor matrix), defined for singular `a` too.
///
/// Orders up to 4 use cofactors; larger orders use the Faddeev-LeVerrier
/// recursion, which needs no inversion.
///
/// # Panics
/// If `a` is not square.
pub fn adjugate(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_square(a);
    let n = a.nrows();
    match n {
        0 => DMatrix::zeros(0, 0),
        1 => DMatrix::from_element(1, 1, 1.0),
        _ if n <= COFACTOR_MAX => DMatrix::from_fn(n, n, |i, j| {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * laplace_det(&minor(a, j, i))
        }),
        _ => faddeev_leverrier(a).1,
    }
}

/// `(det a, adj a)` via `M_k = a M_{k-1} + c_{n-k+1} I`, `c_{n-k} = -tr(a M_k) / k`.
fn faddeev_leverrier(a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + &eye * c;
        c = -(a * &m).trace() / k as f64;
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    (sign * c, -sign * m)
}

/// The `m` scalar regressions `cal_y_i = delta * theta_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRegression {
    pub cal_y: Trajectory<DVector<f64>>,
    pub delta: Trajectory<f64>,
}

impl MixedRegression {
    pub fn dim(&self) -> usize {
        self.cal_y.dim()
    }

    /// Scalar regression of parameter `i`: `(cal_y_i, delta)`.
    pub fn scalar(&self, i: usize) -> (Trajectory<f64>, &Trajectory<f64>) {
        (self.cal_y.component(i), &self.delta)
    }
}

pub fn mix(ext: &ExtendedRegression) -> MixedRegression {
    let cal_y = ext
        .y
        .zip_map(&ext.phi, |y, phi| adjugate(phi) * y)
        .expect("aligned by construction");
    let delta = ext.phi.map(determinant);
    MixedRegression { cal_y, delta }
}

/// Choice of feedforward gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedforwardGain {
    /// `d = adj(Phi0) phi`.
    #[default]
    Adjugate,
    /// `d = adj(Phi0)^T phi`, for which
    /// `det(Phi0 + d phi^T) = det Phi0 + |adj(Phi0)^T phi|^2` for every `Phi0`.
    AdjugateTranspose,
}

/// Feedforward gain `d = adj(Phi0) phi`.
///
/// `det(Phi0 + d phi^T) = det Phi0 + phi^T adj(Phi0) d`, which reduces to
/// `det Phi0 + |d|^2` when `Phi0` is symmetric.
pub fn feedforward_gain(phi0: &DMatrix<f64>, phi: &DVector<f64>) -> Result<DVector<f64>> {
    feedforward_gain_with(FeedforwardGain::Adjugate, phi0, phi)
}

pub fn feedforward_gain_with(kind: FeedforwardGain, phi0: &DMatrix<f64>, phi: &DVector<f64>) -> Result<DVector<f64>> {
    if !phi0.is_square() || phi0.nrows() != phi.len() {
        return Err(Error::Dimension(format!(
            "Phi0 is {}x{} and phi has {} entries",
            phi0.nrows(),
            phi0.ncols(),
            phi.len()
        )));
    }
    let adj = adjugate(phi0);
    Ok(match kind {
        FeedforwardGain::Adjugate => adj * phi,
        FeedforwardGain::AdjugateTranspose => adj.tr_mul(phi),
    })
}

/// Bank output augmented with the feedforward term.
#[derive(Debug, Clone)]
pub struct FeedforwardExtension {
    /// `Phi = Phi0 + d phi^T`, `Y = Y0 + d y`.
    pub regression: ExtendedRegression,
    /// Output of the bank alone.
    pub base: ExtendedRegression,
    pub gain: Trajectory<DVector<f64>>,
}

/// Apply `bank` and add the feedforward channel gain `d(t) = adj(Phi0(t)) phi(t)`
/// (or its transposed variant, see [`FeedforwardGain`]).
///
/// The bank itself must have no feedthrough, since `Phi0` is the
/// strictly-proper part the gain is computed from.
pub fn extend_with_feedforward(
    bank: &OperatorBank,
    kind: FeedforwardGain,
    y: &Trajectory<f64>,
    phi: &Trajectory<DVector<f64>>,
) -> Result<FeedforwardExtension> {
    if bank.channels().iter().any(|c| !c.feedthrough().vanishes_on(phi.grid())) {
        return Err(Error::invalid(
            "feedthrough",
            "feedforward gain is computed from a bank with zero feedthrough",
        ));
    }
    let base = bank.extend(y, phi)?;
    let mut gain_vals = Vec::with_capacity(phi.len());
    for (phi0, p) in base.phi.values().iter().zip(phi.values()) {
        gain_vals.push(feedforward_gain_with(kind, phi0, p)?);
    }
    let gain = Trajectory::new(*phi.grid(), phi.kind(), gain_vals)?;
    let mut phi_vals = Vec::with_capacity(phi.len());
    let mut y_vals = Vec::with_capacity(phi.len());
    for k in 0..phi.len() {
        let d = gain.get(k);
        phi_vals.push(base.phi.get(k) + d * phi.get(k).transpose());
        y_vals.push(base.y.get(k) + d * *y.get(k));
    }
    let regression = ExtendedRegression::new(
        Trajectory::new(*phi.grid(), phi.kind(), y_vals)?,
        Trajectory::new(*phi.grid(), phi.kind(), phi_vals)?,
    )?;
    Ok(FeedforwardExtension { regression, base, gain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LtvChannelSpec;
    use crate::signals::{SignalKind, TimeGrid};
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    /// Leibniz formula over all permutations, independent of both code paths.
    fn leibniz_det(a: &DMatrix<f64>) -> f64 {
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let n = a.nrows();
        permutations(n)
            .into_iter()
            .map(|p| {
                let inversions = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| p[i] > p[j])
                    .count();
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                sign * (0..n).map(|i| a[(i, p[i])]).product::<f64>()
            })
            .sum()
    }

    fn leibniz_adj(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * leibniz_det(&minor(a, j, i))
        })
    }

    #[test]
    fn two_by_two_examples() {
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(adjugate(&a), dmatrix![4.0, -2.0; -3.0, 1.0]);
        assert_eq!(determinant(&a), -2.0);
        let s = dmatrix![1.0, 1.0; 1.0, 1.0];
        assert_eq!(determinant(&s), 0.0);
        assert_eq!(adjugate(&s), dmatrix![1.0, -1.0; -1.0, 1.0]);
    }

    #[test]
    fn scalar_and_empty() {
        assert_eq!(adjugate(&dmatrix![5.0]), dmatrix![1.0]);
        assert_eq!(determinant(&dmatrix![5.0]), 5.0);
    }

    #[test]
    #[should_panic]
    fn non_square_panics() {
        adjugate(&DMatrix::zeros(2, 3));
    }

    #[test]
    fn faddeev_leverrier_on_singular_five_by_five() {
        let mut a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let r = a.row(0) + a.row(1);
        a.set_row(4, &r);
        let (det, adj) = faddeev_leverrier(&a);
        assert!(det.abs() < 1e-9);
        assert!((adj - leibniz_adj(&a)).amax() < 1e-9);
    }

    fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-2.0..2.0_f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
    }

    proptest! {
        #[test]
        fn adjugate_identity(a in (1usize..=6).prop_flat_map(matrix)) {
            let n = a.nrows();
            let det = determinant(&a);
            let lhs = adjugate(&a) * &a;
            let rhs = DMatrix::identity(n, n) * det;
            let scale = a.amax().max(1.0).powi(n as i32);
            prop_assert!((&lhs - &rhs).amax() <= 1e-9 * scale);
            let rhs2 = &a * adjugate(&a);
            prop_assert!((&rhs2 - &rhs).amax() <= 1e-9 * scale);
        }

        #[test]
        fn matches_leibniz(a in (1usize..=6).prop_flat_map(matrix)) {
            let n = a.nrows();
            let scale = a.amax().max(1.0).powi(n as i32);
            prop_assert!((determinant(&a) - leibniz_det(&a)).abs() <= 1e-10 * scale);
            prop_assert!((adjugate(&a) - leibniz_adj(&a)).amax() <= 1e-10 * scale);
        }

        #[test]
        fn determinant_lemma_for_any_gain(
            a in matrix(3),
            v in proptest::collection::vec(-2.0..2.0_f64, 3),
            w in proptest::collection::vec(-2.0..2.0_f64, 3),
        ) {
            let (phi, d) = (DVector::from_vec(v), DVector::from_vec(w));
            let lhs = determinant(&(&a + &d * phi.transpose()));
            let rhs = determinant(&a) + (phi.transpose() * adjugate(&a) * &d)[0];
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn squared_boost_for_symmetric_base(a in matrix(3), v in proptest::collection::vec(-2.0..2.0_f64, 3)) {
            let phi0 = &a * a.transpose();
            let phi = DVector::from_vec(v);
            let d = feedforward_gain(&phi0, &phi).unwrap();
            let lhs = determinant(&(&phi0 + &d * phi.transpose()));
            let rhs = determinant(&phi0) + d.norm_squared();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn squared_boost_for_transposed_gain(a in matrix(3), v in proptest::collection::vec(-2.0..2.0_f64, 3)) {
            let phi = DVector::from_vec(v);
            let d = feedforward_gain_with(FeedforwardGain::AdjugateTranspose, &a, &phi).unwrap();
            let lhs = determinant(&(&a + &d * phi.transpose()));
            let rhs = determinant(&a) + d.norm_squared();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn adjugate_gain_boost_fails_for_nonsymmetric_base() {
        let phi0 = dmatrix![1.0, 2.0; 0.0, 1.0];
        let phi = dvector![0.0, 1.0];
        let d = feedforward_gain(&phi0, &phi).unwrap();
        let det = determinant(&(&phi0 + &d * phi.transpose()));
        // phi^T adj(Phi0) d = 1, |d|^2 = 5
        assert_eq!(det, 2.0);
        assert_eq!(determinant(&phi0) + d.norm_squared(), 6.0);
    }

    #[test]
    fn mixing_recovers_delta_theta() {
        let g = TimeGrid::with_horizon(0.0, 1e-2, 2.0).unwrap();
        let theta = dvector![2.0, -1.0];
        let phi = Trajectory::from_fn(g, SignalKind::Continuous, |t| dvector![t.sin(), 1.0]).unwrap();
        let y = phi.map(|p| p.dot(&theta));
        let bank = OperatorBank::new(vec![
            LtvChannelSpec::first_order(SignalKind::Continuous, -1.0, 1.0, 1.0).unwrap(),
            LtvChannelSpec::first_order(SignalKind::Continuous, -3.0, 3.0, 1.0).unwrap(),
        ])
        .unwrap();
        let ext = bank.extend(&y, &phi).unwrap();
        let mixed = mix(&ext);
        for k in 0..g.count() {
            let want = &theta * *mixed.delta.get(k);
            assert!((mixed.cal_y.get(k) - want).amax() < 1e-12);
        }
    }

    #[test]
    fn feedforward_determinant_and_regression() {
        let g = TimeGrid::with_horizon(0.0, 1e-3, 3.0).unwrap();
        let theta = dvector![1.5, 0.5];
        let phi = Trajectory::from_fn(g, SignalKind::Continuous, |t| dvector![1.0, (2.0 * t).cos()]).unwrap();
        let y = phi.map(|p| p.dot(&theta));
        let bank = OperatorBank::new(vec![
            LtvChannelSpec::first_order(SignalKind::Continuous, -1.0, 1.0, 1.0).unwrap(),
            LtvChannelSpec::first_order(SignalKind::Continuous, -2.0, 2.0, 1.0).unwrap(),
        ])
        .unwrap();
        let ff = extend_with_feedforward(&bank, FeedforwardGain::Adjugate, &y, &phi).unwrap();
        for k in 0..g.count() {
            let (phi0, d) = (ff.base.phi.get(k), ff.gain.get(k));
            let det = determinant(ff.regression.phi.get(k));
            let want = determinant(phi0) + (phi.get(k).transpose() * adjugate(phi0) * d)[0];
            assert!((det - want).abs() <= 1e-10 * (1.0 + det.abs()));
        }
        let res = ff.regression.residual(&theta).unwrap();
        assert!(res.values().iter().all(|r| r.amax() < 1e-9));
    }

    #[test]
    fn feedforward_rejects_feedthrough() {
        let g = TimeGrid::with_horizon(0.0, 1e-2, 0.1).unwrap();
        let phi = Trajectory::from_fn(g, SignalKind::Continuous, |_| dvector![1.0]).unwrap();
        let y = phi.map(|p| p[0]);
        let bank = OperatorBank::new(vec![LtvChannelSpec::static_gain(SignalKind::Continuous, 1.0)]).unwrap();
        assert!(extend_with_feedforward(&bank, FeedforwardGain::Adjugate, &y, &phi).is_err());
    }
}
