//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use drem::cli::{read_csv, write_run_csv, Figure};
use drem::estimators::{
    closed_form_error_ct, closed_form_error_dt, ct_gradient, drem_ct, drem_dt, dt_gradient, monotonicity_violation,
    GradientConfig,
};
use drem::excitation::counterexample_suite;
use drem::ftc::{interval_excitation_time, run_ftc, FtcConfig};
use drem::mixing::{adjugate, determinant, feedforward_gain_with, FeedforwardGain, MixedRegression};
use drem::operators::{kre_as_drem_bank, kre_ct, sliding_window_bank, sliding_window_phi, KreSpec, SlidingWindowSpec};
use drem::scenarios::{
    convergence_time, run_identification, run_tracking, DeltaKind, IdentificationSetup, InputKind, NamedRun,
    ScenarioResult, TrackingSetup,
};
use drem::signals::{SignalKind, TimeGrid, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..=1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| rng.random_range(-1.0..=1.0))
}

fn verdict(ok: bool, details: String) -> Outcome {
    if ok {
        Ok(details)
    } else {
        Err(details)
    }
}

fn adjugate_identity() -> Outcome {
    let mut rng = rng(1);
    let mut worst = 0.0_f64;
    for m in 1..=5 {
        for _ in 0..1000 {
            let a = random_matrix(&mut rng, m);
            let det = determinant(&a);
            let resid = (adjugate(&a) * &a - DMatrix::identity(m, m) * det).amax();
            worst = worst.max(resid / (1.0 + det.abs()));
        }
    }
    verdict(
        worst <= 1e-9,
        format!("max scaled residual {worst:.3e} over 5000 matrices, m = 1..5"),
    )
}

/// Worst relative defect of `det(Phi0 + d phi^T) = det Phi0 + |g|^2`, where
/// `g = adj(Phi0) phi`, or `adj(Phi0)^T phi` for the transposed gain.
fn boost_defect(rng: &mut ChaCha8Rng, kind: FeedforwardGain, symmetric: bool) -> (f64, usize) {
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for trial in 0..1000 {
        let m = 2 + trial % 3;
        let mut phi0 = random_matrix(rng, m);
        if symmetric {
            phi0 = (&phi0 + phi0.transpose()) * 0.5;
        }
        let phi = random_vector(rng, m);
        let d = feedforward_gain_with(kind, &phi0, &phi).expect("dimensions match");
        let lhs = determinant(&(&phi0 + &d * phi.transpose()));
        let base = determinant(&phi0);
        let adj = match kind {
            FeedforwardGain::Adjugate => adjugate(&phi0),
            FeedforwardGain::AdjugateTranspose => adjugate(&phi0).transpose(),
        };
        let boost = (adj * &phi).norm_squared();
        let rel = (lhs - base - boost).abs() / lhs.abs().max(base.abs() + boost).max(1.0);
        if rel > 1e-9 {
            failures += 1;
        }
        worst = worst.max(rel);
    }
    (worst, failures)
}

fn sylvester_boost() -> Outcome {
    let (worst, failures) = boost_defect(&mut rng(2), FeedforwardGain::Adjugate, false);
    let (sym, _) = boost_defect(&mut rng(2), FeedforwardGain::Adjugate, true);
    let (transposed, _) = boost_defect(&mut rng(2), FeedforwardGain::AdjugateTranspose, false);
    verdict(
        failures == 0,
        format!(
            "d = adj(Phi0) phi: {failures}/1000 above 1e-9, worst {worst:.3e}; symmetric Phi0 worst {sym:.3e}; d = adj(Phi0)^T phi against |adj(Phi0)^T phi|^2 worst {transposed:.3e}"
        ),
    )
}

fn smooth_regressor(rng: &mut ChaCha8Rng, grid: TimeGrid, m: usize) -> Trajectory<DVector<f64>> {
    let terms: Vec<Vec<(f64, f64, f64)>> = (0..m)
        .map(|_| {
            (0..3)
                .map(|_| {
                    (
                        rng.random_range(0.2..2.0),
                        rng.random_range(0.5..10.0),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect()
        })
        .collect();
    Trajectory::from_fn(grid, SignalKind::Continuous, |t| {
        DVector::from_fn(m, |i, _| terms[i].iter().map(|(a, w, p)| a * (w * t + p).sin()).sum())
    })
    .unwrap()
}

fn kre_equivalence() -> Outcome {
    let mut rng = rng(3);
    let grid = TimeGrid::with_horizon(0.0, 1e-4, 5.0).unwrap();
    let phi = smooth_regressor(&mut rng, grid, 2);
    let theta = random_vector(&mut rng, 2);
    let y = phi.map(|p| p.dot(&theta));
    let kre = kre_ct(&KreSpec::new(1.0).unwrap(), &y, &phi).map_err(|e| e.to_string())?;
    let bank = kre_as_drem_bank(&phi, 1.0)
        .and_then(|b| b.extend(&y, &phi))
        .map_err(|e| e.to_string())?;
    let dphi = kre
        .phi
        .values()
        .iter()
        .zip(bank.phi.values())
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    let dy = kre
        .y
        .values()
        .iter()
        .zip(bank.y.values())
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    let worst = dphi.max(dy);
    verdict(
        worst <= 1e-6,
        format!("sup |Omega - Phi| = {dphi:.3e}, sup |Z - Y| = {dy:.3e}, 50001 samples"),
    )
}

fn window_identity() -> Outcome {
    let mut rng = rng(4);
    let grid = TimeGrid::new(0.0, 1.0, 10_000).unwrap();
    let mut mismatches = 0usize;
    let mut bank_mismatches = 0usize;
    for window in [2usize, 3, 5] {
        let values: Vec<DVector<f64>> = (0..grid.count()).map(|_| random_vector(&mut rng, 2)).collect();
        let phi = Trajectory::new(grid, SignalKind::Discrete, values).unwrap();
        let y = phi.map(|p| p[0] - 2.0 * p[1]);
        let spec = SlidingWindowSpec::new(window).unwrap();
        let ext = sliding_window_phi(&phi, &y, spec).map_err(|e| e.to_string())?;
        for k in 0..grid.count() {
            let mut brute = DMatrix::zeros(2, 2);
            for j in 1..=window.min(k) {
                let v = phi.get(k - j);
                brute += v * v.transpose();
            }
            if ext.phi.get(k) != &brute {
                mismatches += 1;
            }
        }
        let bank = sliding_window_bank(&phi, spec)
            .and_then(|b| b.extend(&y, &phi))
            .map_err(|e| e.to_string())?;
        bank_mismatches += (0..grid.count()).filter(|&k| bank.phi.get(k) != ext.phi.get(k)).count();
    }
    verdict(
        mismatches == 0 && bank_mismatches == 0,
        format!("K in {{2, 3, 5}}, 10^4 steps: {mismatches} samples differ from brute force, {bank_mismatches} from the shift-register bank"),
    )
}

fn counterexample() -> Outcome {
    let r = counterexample_suite(100_000, 100, 1e-3).map_err(|e| e.to_string())?;
    let (k_min, a_min) = r
        .alpha_hat
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let above = r.alpha_hat.iter().filter(|(_, a)| *a >= 1e-3).count();
    let energy_ok = r.energy.follows_envelope;
    verdict(
        r.not_pe && energy_ok,
        format!(
            "alpha_hat >= 1e-3 for {above}/100 window lengths (smallest {a_min:.4e} at K = {k_min}); energy {:.4} vs 0.9 ln(1e5) = {:.4} ({})",
            r.energy.final_energy,
            r.energy.envelope,
            if energy_ok { "ok" } else { "short" }
        ),
    )
}

fn closed_forms() -> Outcome {
    let theta = DVector::from_element(1, 1.0);
    let theta0 = DVector::from_element(1, 0.0);
    let gamma = 2.0;

    let grid = TimeGrid::with_horizon(0.0, 1e-3, 5.0).unwrap();
    let delta = Trajectory::from_fn(grid, SignalKind::Continuous, |t| (2.0 * PI * t).sin()).unwrap();
    let mixed = exact_mixed(&delta, &theta);
    let run = drem_ct(&mixed, &GradientConfig::new(gamma, theta0.clone()).unwrap()).map_err(|e| e.to_string())?;
    let oracle = closed_form_error_ct(&delta, gamma, -1.0);
    let ct = run
        .theta_hat
        .values()
        .iter()
        .zip(oracle.values())
        .map(|(th, e)| ((th[0] - 1.0) - e).abs() / e.abs())
        .fold(0.0, f64::max);

    let dgrid = TimeGrid::new(0.0, 1.0, 10_000).unwrap();
    let ddelta = Trajectory::from_fn(dgrid, SignalKind::Discrete, |k| 0.05 * (2.0 * PI * k / 100.0).sin()).unwrap();
    let mixed = exact_mixed(&ddelta, &theta);
    let run = drem_dt(&mixed, &GradientConfig::new(gamma, theta0).unwrap()).map_err(|e| e.to_string())?;
    let oracle = closed_form_error_dt(&ddelta, gamma, -1.0);
    let dt = run
        .theta_hat
        .values()
        .iter()
        .zip(oracle.values())
        .map(|(th, e)| ((th[0] - 1.0) - e).abs() / e.abs())
        .fold(0.0, f64::max);
    verdict(
        ct <= 1e-4 && dt <= 1e-12,
        format!("CT max relative deviation {ct:.3e} (5 s, h = 1e-3); DT {dt:.3e} over 10^4 steps"),
    )
}

fn exact_mixed(delta: &Trajectory<f64>, theta: &DVector<f64>) -> MixedRegression {
    MixedRegression {
        cal_y: delta.map(|d| theta * *d),
        delta: delta.clone(),
    }
}

fn monotonicity() -> Outcome {
    let mut rng = rng(7);
    let ct_grid = TimeGrid::with_horizon(0.0, 1e-3, 3.0).unwrap();
    let dt_grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
    let (mut drem_ct_worst, mut drem_dt_worst, mut grad_ct_worst, mut grad_dt_worst) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut grad_dt_ulps = 0.0_f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=3);
        let theta = random_vector(&mut rng, m) * 5.0;
        let theta0 = random_vector(&mut rng, m) * 5.0;
        let gamma = rng.random_range(0.5..5.0);
        let cfg = GradientConfig::new(gamma, theta0.clone()).unwrap();

        let delta = smooth_regressor(&mut rng, ct_grid, 1).map(|v| v[0]);
        let run = drem_ct(&exact_mixed(&delta, &theta), &cfg).map_err(|e| e.to_string())?;
        for i in 0..m {
            let v = monotonicity_violation(run.theta_hat.values().iter().map(|th| (th[i] - theta[i]).abs()));
            drem_ct_worst = drem_ct_worst.max(v);
        }
        let values: Vec<f64> = (0..dt_grid.count()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ddelta = Trajectory::new(dt_grid, SignalKind::Discrete, values).unwrap();
        let run = drem_dt(&exact_mixed(&ddelta, &theta), &cfg).map_err(|e| e.to_string())?;
        for i in 0..m {
            let v = monotonicity_violation(run.theta_hat.values().iter().map(|th| (th[i] - theta[i]).abs()));
            drem_dt_worst = drem_dt_worst.max(v);
        }

        let phi = smooth_regressor(&mut rng, ct_grid, m);
        let y = phi.map(|p| p.dot(&theta));
        let run = ct_gradient(&y, &phi, &cfg).map_err(|e| e.to_string())?;
        grad_ct_worst = grad_ct_worst.max(monotonicity_violation(
            run.theta_hat.values().iter().map(|th| (th - &theta).norm()),
        ));

        let values: Vec<DVector<f64>> = (0..dt_grid.count()).map(|_| random_vector(&mut rng, m)).collect();
        let phi = Trajectory::new(dt_grid, SignalKind::Discrete, values).unwrap();
        let y = phi.map(|p| p.dot(&theta));
        let run = dt_gradient(&y, &phi, &cfg).map_err(|e| e.to_string())?;
        let v = monotonicity_violation(run.theta_hat.values().iter().map(|th| (th - &theta).norm()));
        grad_dt_worst = grad_dt_worst.max(v);
        grad_dt_ulps = grad_dt_ulps.max(v / (f64::EPSILON * theta.norm()));
    }
    verdict(
        drem_ct_worst <= 1e-9 && drem_dt_worst == 0.0 && grad_ct_worst <= 1e-9 && grad_dt_ulps <= 4.0,
        format!(
            "worst increase: DREM CT {drem_ct_worst:.2e}, DREM DT {drem_dt_worst:.2e}, gradient CT {grad_ct_worst:.2e}, gradient DT {grad_dt_worst:.2e} ({grad_dt_ulps:.2} ulp of |theta|)"
        ),
    )
}

fn settle(run: &NamedRun, from: f64) -> Option<f64> {
    let times = convergence_time(&run.theta_tilde, 0.01, from);
    times
        .iter()
        .try_fold(from, |acc, t| t.map(|t| acc.max(t)))
        .map(|t| t - from)
}

fn show(t: Option<f64>) -> String {
    t.map_or_else(|| "never".to_owned(), |t| format!("{t:.3} s"))
}

fn identification_reproduction() -> Outcome {
    let result = run_identification(&IdentificationSetup::preset(InputKind::Constant)).map_err(|e| e.to_string())?;
    let get = |name| result.run(name).ok_or_else(|| format!("missing run {name}"));
    let ff = settle(get("drem_dN")?, 2.0);
    let d0 = settle(get("drem_d0")?, 2.0);
    let grad_final = get("gradient")?.final_error().norm();
    let ff_ok = ff.is_some_and(|t| t < 1.5);
    let d0_ok = match (d0, ff) {
        (None, Some(_)) => true,
        (Some(a), Some(b)) => a > b,
        _ => false,
    };
    verdict(
        ff_ok && d0_ok && grad_final > 0.05,
        format!(
            "settling after t = 2: feedforward {}, d = 0 {}; gradient |theta_tilde(20)| = {grad_final:.4}",
            show(ff),
            show(d0)
        ),
    )
}

fn ftc_exactness() -> Outcome {
    let grid = TimeGrid::with_horizon(0.0, 1e-3, 5.0).unwrap();
    let delta = Trajectory::from_fn(grid, SignalKind::Continuous, |t| (2.0 * PI * t).sin()).unwrap();
    let theta = DVector::from_element(1, 10.0);
    let run = drem_ct(
        &exact_mixed(&delta, &theta),
        &GradientConfig::new(2.0, DVector::zeros(1)).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let cfg = FtcConfig {
        gamma: 2.0,
        clip_threshold: 0.98,
        ..FtcConfig::default()
    };
    let ftc = run_ftc(&run.theta_hat, &delta, &cfg).map_err(|e| e.to_string())?;
    let t_c = interval_excitation_time(&delta, 2.0, 0.98).map_err(|e| e.to_string())?;
    let Some(t_c) = t_c else {
        return Err("interval excitation never reached".into());
    };
    let start = grid.index_at_or_after(t_c).unwrap();
    let err = ftc.theta_ftc.values()[start..]
        .iter()
        .map(|v| (v[0] - 10.0).abs())
        .fold(0.0, f64::max);
    verdict(
        t_c <= 0.1 && err <= 1e-6,
        format!("t_c = {t_c:.3} s, sup_(t >= t_c) |theta_ftc - 10| = {err:.3e}"),
    )
}

fn aux<'a>(run: &'a NamedRun, name: &str) -> &'a Trajectory<f64> {
    &run.aux.iter().find(|(n, _)| n == name).expect("aux signal").1
}

fn first_time(grid: &TimeGrid, values: &[f64], pred: impl Fn(f64) -> bool) -> Option<f64> {
    values.iter().position(|v| pred(*v)).map(|k| grid.time(k))
}

fn sup_diff(a: &NamedRun, b: &NamedRun, from: f64, to: f64) -> f64 {
    let grid = a.theta_hat.grid();
    grid.times()
        .enumerate()
        .filter(|(_, t)| *t >= from - 1e-9 && *t <= to + 1e-9)
        .map(|(k, _)| (a.theta_hat.get(k) - b.theta_hat.get(k)).amax())
        .fold(0.0, f64::max)
}

fn ftc_alertness() -> Outcome {
    let result = run_tracking(&TrackingSetup::preset(DeltaKind::Pe)).map_err(|e| e.to_string())?;
    let get = |name| result.run(name).ok_or_else(|| format!("missing run {name}"));
    let (grad, ftc, ftc_d) = (get("gradient")?, get("ftc")?, get("ftc_d")?);
    let grid = *ftc.theta_hat.grid();
    let t_ftc = first_time(&grid, aux(ftc, "w").values(), |w| w < 0.98);
    let t_alert = first_time(&grid, aux(ftc_d, "active").values(), |a| a > 0.5);
    let (Some(t_ftc), Some(t_alert)) = (t_ftc, t_alert) else {
        return Err(format!("activation: ftc {t_ftc:?}, ftc_d {t_alert:?}"));
    };
    let a = sup_diff(ftc, ftc_d, t_ftc.max(t_alert), 3.0);
    let b = sup_diff(ftc, grad, 12.0, 20.0);
    // first t* after which |ftc_d - 15| <= 1e-3 holds up to t = 20
    let end = grid.index_at_or_after(20.0).unwrap();
    let start = grid.index_at_or_after(10.0).unwrap();
    let mut settled = None;
    for k in (start..=end).rev() {
        if (ftc_d.theta_hat.get(k)[0] - 15.0).abs() > 1e-3 {
            break;
        }
        settled = Some(grid.time(k));
    }
    let c_ok = settled.is_some_and(|t| t <= 11.0 + 1e-9);
    verdict(
        a <= 1e-2 && b <= 1e-3 && c_ok,
        format!(
            "(a) sup [{:.3}, 3] |ftc - ftc_d| = {a:.3e}; (b) sup [12, 20] |ftc - gradient| = {b:.3e}; (c) ftc_d within 1e-3 of 15 from {}",
            t_ftc.max(t_alert),
            settled.map_or_else(|| "never".to_owned(), |t| format!("t = {t:.3} s"))
        ),
    )
}

fn nonpe_ftc() -> Outcome {
    let result = run_tracking(&TrackingSetup::preset(DeltaKind::Nonpe)).map_err(|e| e.to_string())?;
    let get = |name| result.run(name).ok_or_else(|| format!("missing run {name}"));
    let (ftc, ftc_d) = (get("ftc")?, get("ftc_d")?);
    let grid = *ftc.theta_hat.grid();
    let (from, to) = (
        grid.index_at_or_after(20.0).unwrap(),
        grid.index_at_or_after(30.0).unwrap(),
    );
    let mut violations = Vec::new();
    let (mut old_max, mut new_max) = (0.0_f64, 0.0_f64);
    for k in from..=to {
        let old = ftc.theta_tilde.get(k)[0].abs();
        let new = ftc_d.theta_tilde.get(k)[0].abs();
        old_max = old_max.max(old);
        new_max = new_max.max(new);
        if new > old {
            violations.push(grid.time(k));
        }
    }
    let span = match (violations.first(), violations.last()) {
        (Some(a), Some(b)) => format!(" (first at t = {a:.3}, last at t = {b:.3})"),
        _ => String::new(),
    };
    verdict(
        violations.is_empty(),
        format!(
            "ramp [20, 30]: new error exceeds old at {}/{} samples{span}; max error new {new_max:.4}, old {old_max:.4}",
            violations.len(),
            to - from + 1
        ),
    )
}

fn roundtrip(result: &ScenarioResult, dir: &std::path::Path) -> Result<usize, String> {
    let mut mismatches = 0;
    for run in &result.runs {
        let path = dir.join(format!("{}.csv", run.name));
        write_run_csv(&path, run).map_err(|e| e.to_string())?;
        let table = read_csv(&path).map_err(|e| e.to_string())?;
        let m = run.theta_hat.dim();
        for (k, row) in table.rows.iter().enumerate() {
            let mut expected = vec![run.theta_hat.grid().time(k)];
            expected.extend(run.theta_hat.get(k).iter());
            expected.extend(run.theta_tilde.get(k).iter());
            expected.extend(run.aux.iter().map(|(_, s)| *s.get(k)));
            debug_assert_eq!(expected.len(), 1 + 2 * m + run.aux.len());
            if row.len() != expected.len() || row.iter().zip(&expected).any(|(a, b)| a.to_bits() != b.to_bits()) {
                mismatches += 1;
            }
        }
        if table.rows.len() != run.theta_hat.len() {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

fn csv_roundtrip() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rows = 0;
    let mut mismatches = 0;
    for figure in [
        Figure::Fig1,
        Figure::Fig2,
        Figure::FtcPeEarly,
        Figure::FtcPeLate,
        Figure::FtcNonpe,
    ] {
        let result = drem::cli::figure_result(figure).map_err(|e| e.to_string())?;
        rows += result.runs.iter().map(|r| r.theta_hat.len()).sum::<usize>();
        mismatches += roundtrip(&result, tmp.path())?;
    }
    verdict(
        mismatches == 0,
        format!("{rows} rows across 5 presets, {mismatches} rows differ"),
    )
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "adjugate identity",
            limit: Some(Duration::from_secs(5)),
            check: adjugate_identity,
        },
        Criterion {
            id: 2,
            name: "feedforward determinant boost",
            limit: Some(Duration::from_secs(5)),
            check: sylvester_boost,
        },
        Criterion {
            id: 3,
            name: "KRE as DREM bank",
            limit: Some(Duration::from_secs(30)),
            check: kre_equivalence,
        },
        Criterion {
            id: 4,
            name: "sliding-window identity",
            limit: None,
            check: window_identity,
        },
        Criterion {
            id: 5,
            name: "non-PE regressor with divergent energy",
            limit: Some(Duration::from_secs(10)),
            check: counterexample,
        },
        Criterion {
            id: 6,
            name: "closed-form error match",
            limit: None,
            check: closed_forms,
        },
        Criterion {
            id: 7,
            name: "monotonicity",
            limit: None,
            check: monotonicity,
        },
        Criterion {
            id: 8,
            name: "identification with constant input",
            limit: Some(Duration::from_secs(60)),
            check: identification_reproduction,
        },
        Criterion {
            id: 9,
            name: "FTC exactness",
            limit: None,
            check: ftc_exactness,
        },
        Criterion {
            id: 10,
            name: "FTC alertness",
            limit: Some(Duration::from_secs(60)),
            check: ftc_alertness,
        },
        Criterion {
            id: 11,
            name: "non-PE FTC ramp",
            limit: None,
            check: nonpe_ftc,
        },
        Criterion {
            id: 12,
            name: "CSV round-trip",
            limit: None,
            check: csv_roundtrip,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let over = c.limit.filter(|l| elapsed > *l);
        let (ok, mut details) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if let Some(limit) = over {
            details.push_str(&format!("; runtime limit {:.0} s exceeded", limit.as_secs_f64()));
        }
        let pass = ok && over.is_none();
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {} {}: {} ({:.2} s)",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            details,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
