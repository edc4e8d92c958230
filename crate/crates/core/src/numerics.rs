//! Fixed-step RK4 and grid quadrature used by every continuous-time path.

use crate::signals::Sample;

/// Where inside a step an RK4 stage is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start,
    Mid,
    End,
}

/// One classical RK4 step of size `h` for `x' = f(stage, x)`.
///
/// The right-hand side receives the stage position instead of a time so that
/// grid-sampled inputs can be looked up (start/end) or interpolated (mid).
pub fn rk4_step<S: Sample>(x: &S, h: f64, mut f: impl FnMut(Stage, &S) -> S) -> S {
    let k1 = f(Stage::Start, x);
    let x2 = S::combine(&[(1.0, x), (0.5 * h, &k1)]);
    let k2 = f(Stage::Mid, &x2);
    let x3 = S::combine(&[(1.0, x), (0.5 * h, &k2)]);
    let k3 = f(Stage::Mid, &x3);
    let x4 = S::combine(&[(1.0, x), (h, &k3)]);
    let k4 = f(Stage::End, &x4);
    S::combine(&[(1.0, x), (h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)])
}

/// Running integral `I_k = int_{t_0}^{t_k} f` of grid samples.
///
/// Even indices use composite Simpson from the origin. Odd indices add the
/// third-order three-point rule `h/12 (-f_{k-2} + 8 f_{k-1} + 5 f_k)` on the
/// last interval, so every entry carries a fourth-order local error.
pub fn cumulative_integral<S: Sample>(values: &[S], h: f64) -> Vec<S> {
    let n = values.len();
    let zero = S::combine(&[(0.0, &values[0])]);
    let mut out = Vec::with_capacity(n);
    out.push(zero);
    if n == 1 {
        return out;
    }
    if n == 2 {
        out.push(S::combine(&[(0.5 * h, &values[0]), (0.5 * h, &values[1])]));
        return out;
    }
    let c = h / 12.0;
    out.push(S::combine(&[
        (5.0 * c, &values[0]),
        (8.0 * c, &values[1]),
        (-c, &values[2]),
    ]));
    for k in 2..n {
        let next = if k % 2 == 0 {
            S::combine(&[
                (1.0, &out[k - 2]),
                (h / 3.0, &values[k - 2]),
                (4.0 * h / 3.0, &values[k - 1]),
                (h / 3.0, &values[k]),
            ])
        } else {
            S::combine(&[
                (1.0, &out[k - 1]),
                (-c, &values[k - 2]),
                (8.0 * c, &values[k - 1]),
                (5.0 * c, &values[k]),
            ])
        };
        out.push(next);
    }
    out
}
