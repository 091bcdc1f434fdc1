//! Exact Legendre-Fenchel conjugation of piecewise-linear convex functions.
//!
//! For `f` piecewise linear on `[a, b]` with vertices `t_0 < ... < t_m` and
//! segment slopes `s_1 < ... < s_m`, the conjugate
//! `f*(x) = sup_t (t x - f(t))` is piecewise linear with breakpoints at the
//! slopes: on `[s_j, s_{j+1}]` the supremum is attained at vertex `t_j`, so
//! `f*(x) = t_j x - f(t_j)`. Left of `s_1` the support point is `a`, right of
//! `s_m` it is `b`, which makes the conjugate finite on the whole line; only a
//! bounded x-window of it is materialised.
//!
//! One linear pass suffices because the slopes of a convex function are
//! already sorted.

use crate::convexfn::{make_fn, ExtConvexFn};
use crate::error::{Error, Result};
use crate::estimators::{snapshot_cgf, SampleBatch};
use crate::extreal::ExtReal::{Finite, Infinity};

/// Relative slack under which neighbouring slopes count as equal and are merged.
const SLOPE_TIE: f64 = 1e-12;

/// Vertices of `f` on its finite window, dropping knots where the slope does not
/// strictly increase. Returns the vertices and the slopes between them.
fn vertices(f: &ExtConvexFn) -> (Vec<(f64, f64)>, Vec<f64>) {
    let slope = |p: (f64, f64), q: (f64, f64)| (q.1 - p.1) / (q.0 - p.0);
    let mut vs: Vec<(f64, f64)> = Vec::with_capacity(f.window_knots().len());
    for (&t, &v) in f.window_knots().iter().zip(f.window_values()) {
        let p = (t, v);
        while vs.len() >= 2 {
            let o = vs[vs.len() - 2];
            let a = vs[vs.len() - 1];
            let (s0, s1) = (slope(o, a), slope(a, p));
            if s1 - s0 <= SLOPE_TIE * s0.abs().max(s1.abs()).max(1.0) {
                vs.pop();
            } else {
                break;
            }
        }
        vs.push(p);
    }
    let slopes = vs.windows(2).map(|w| slope(w[0], w[1])).collect();
    (vs, slopes)
}

/// Default output window: the slope range padded by one on each side.
pub fn default_window(f: &ExtConvexFn) -> (f64, f64) {
    let (_, slopes) = vertices(f);
    match (slopes.first(), slopes.last()) {
        (Some(&lo), Some(&hi)) => (lo - 1.0, hi + 1.0),
        // a spike conjugates to a linear function; any window will do
        _ => (-1.0, 1.0),
    }
}

/// Conjugate on the default window.
pub fn conjugate(f: &ExtConvexFn) -> ExtConvexFn {
    let (lo, hi) = default_window(f);
    conjugate_on(f, lo, hi).expect("default window is well formed")
}

/// Conjugate materialised on `[x_lo, x_hi]`: knots at the window ends and at every
/// slope of `f` strictly inside it.
pub fn conjugate_on(f: &ExtConvexFn, x_lo: f64, x_hi: f64) -> Result<ExtConvexFn> {
    if !(x_lo.is_finite() && x_hi.is_finite() && x_lo <= x_hi) {
        return Err(Error::InvalidArgument(format!(
            "conjugate window [{x_lo}, {x_hi}] is not a finite interval"
        )));
    }
    let (vs, slopes) = vertices(f);
    let mut xs = Vec::with_capacity(slopes.len() + 2);
    xs.push(x_lo);
    xs.extend(slopes.iter().copied().filter(|&s| s > x_lo && s < x_hi));
    if x_hi > x_lo {
        xs.push(x_hi);
    }

    let affine = |j: usize, x: f64| vs[j].0 * x - vs[j].1;
    let mut values = Vec::with_capacity(xs.len());
    let mut j = 0;
    for &x in &xs {
        while j < slopes.len() && slopes[j] < x {
            j += 1;
        }
        // vertex j supports x; its neighbours agree at shared breakpoints up to rounding
        let mut v = affine(j, x);
        if j > 0 {
            v = v.max(affine(j - 1, x));
        }
        if j + 1 < vs.len() {
            v = v.max(affine(j + 1, x));
        }
        values.push(Finite(v));
    }
    make_fn(xs, values)
}

/// `f**` on the knot grid of `f`: the second conjugate is taken over the finite
/// window of `f` and is `+inf` outside it.
pub fn biconjugate(f: &ExtConvexFn) -> ExtConvexFn {
    let (a, b) = f.domain();
    let g = conjugate(f);
    let h = conjugate_on(&g, a, b).expect("domain of a valid function is a finite interval");
    let values = f
        .knots()
        .iter()
        .map(|&t| if t < a || t > b { Infinity } else { h.eval(t) })
        .collect();
    make_fn(f.knots().to_vec(), values).expect("biconjugate of a convex grid is convex")
}

/// Rate-function estimate: the conjugate of the empirical CGF restricted to `theta_knots`.
///
/// Outside the slope range of the restricted CGF the estimate is linear with slope
/// equal to the nearest window end; widen the theta window to cover a target x-range.
pub fn rate_estimate(batch: &SampleBatch, theta_knots: &[f64]) -> Result<ExtConvexFn> {
    let cgf = snapshot_cgf(batch, theta_knots)?;
    let (lo, hi) = default_window(&cgf);
    rate_from_cgf(&cgf, lo, hi)
}

/// As [`rate_estimate`], on an explicit x-window.
pub fn rate_estimate_on(
    batch: &SampleBatch,
    theta_knots: &[f64],
    x_lo: f64,
    x_hi: f64,
) -> Result<ExtConvexFn> {
    let cgf = snapshot_cgf(batch, theta_knots)?;
    rate_from_cgf(&cgf, x_lo, x_hi)
}

// A CGF grid holds (0, 0), so the conjugate is >= 0 exactly; clamp away rounding.
fn rate_from_cgf(cgf: &ExtConvexFn, x_lo: f64, x_hi: f64) -> Result<ExtConvexFn> {
    let f = conjugate_on(cgf, x_lo, x_hi)?;
    let values = f
        .values()
        .iter()
        .map(|v| Finite(v.finite().expect("conjugate is finite").max(0.0)))
        .collect();
    make_fn(f.knots().to_vec(), values)
}
