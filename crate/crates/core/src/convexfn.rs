//! Proper, closed, convex extended-real functions on the line, stored as
//! piecewise-linear interpolants on a knot grid.
//!
//! A function is finite on one contiguous block of knots (its finite window) and
//! `+inf` everywhere else. Between finite knots it is the linear interpolant;
//! at the window edges the stored value is the function value, so the epigraph
//! is closed. A window of a single knot is a spike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal::{self, Finite, Infinity};

/// Default slack for the discrete convexity test, relative to the local value scale.
pub const TOL_CONVEX: f64 = 1e-9;
/// Default accuracy for point-to-epigraph distances.
pub const TOL_DIST: f64 = 1e-9;

/// The JSON function-grid format: `{"knots":[...], "values":[..., "inf", ...]}`.
///
/// Used as-is for grids that need not be convex (Jarzynski estimates, raw
/// regularisation input); [`ExtConvexFn`] converts through it with validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnGrid {
    pub knots: Vec<f64>,
    pub values: Vec<ExtReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FnGrid", into = "FnGrid")]
pub struct ExtConvexFn {
    knots: Vec<f64>,
    values: Vec<ExtReal>,
    // inclusive index range of the finite block
    lo: usize,
    hi: usize,
    window: Vec<f64>,
}

/// A point of the plane in which epigraphs live.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpiPoint {
    pub x1: f64,
    pub x2: f64,
}

impl EpiPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Box (sup-norm) distance.
    pub fn box_dist(&self, other: &EpiPoint) -> f64 {
        (self.x1 - other.x1).abs().max((self.x2 - other.x2).abs())
    }
}

/// Shape checks shared by [`make_fn`] and [`lsc_closure_values`]: lengths,
/// knot ordering, value admissibility and contiguity. Returns the finite block.
fn check_shape(knots: &[f64], values: &[ExtReal]) -> Result<(usize, usize)> {
    if knots.len() != values.len() {
        return Err(Error::LengthMismatch {
            knots: knots.len(),
            values: values.len(),
        });
    }
    if knots.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, k) in knots.iter().enumerate() {
        if !k.is_finite() || (i > 0 && *k <= knots[i - 1]) {
            return Err(Error::NonIncreasingKnots(i));
        }
    }
    let mut first = None;
    let mut last = 0;
    for (i, v) in values.iter().enumerate() {
        match v {
            Finite(x) if x.is_finite() => {
                if first.is_none() {
                    first = Some(i);
                } else if last + 1 != i {
                    return Err(Error::NonContiguousDomain(i));
                }
                last = i;
            }
            Infinity => {}
            _ => return Err(Error::ImproperValue(i)),
        }
    }
    match first {
        Some(lo) => Ok((lo, last)),
        None => Err(Error::NoFiniteValue),
    }
}

/// Validates and builds a function with the default convexity tolerance.
pub fn make_fn(knots: Vec<f64>, values: Vec<ExtReal>) -> Result<ExtConvexFn> {
    ExtConvexFn::with_tolerance(knots, values, TOL_CONVEX)
}

impl ExtConvexFn {
    pub fn with_tolerance(knots: Vec<f64>, values: Vec<ExtReal>, tol_convex: f64) -> Result<Self> {
        let (lo, hi) = check_shape(&knots, &values)?;
        let window: Vec<f64> = values[lo..=hi].iter().filter_map(|v| v.finite()).collect();
        let ks = &knots[lo..=hi];
        for i in 1..window.len().saturating_sub(1) {
            let (a, b, c) = (ks[i - 1], ks[i], ks[i + 1]);
            let chord = ((c - b) * window[i - 1] + (b - a) * window[i + 1]) / (c - a);
            let excess = window[i] - chord;
            let scale = 1f64
                .max(window[i - 1].abs())
                .max(window[i].abs())
                .max(window[i + 1].abs());
            if excess > tol_convex * scale {
                return Err(Error::NotConvex {
                    index: lo + i,
                    excess,
                });
            }
        }
        Ok(Self {
            knots,
            values,
            lo,
            hi,
            window,
        })
    }

    /// Samples `f` at each knot.
    pub fn from_fn(knots: Vec<f64>, f: impl Fn(f64) -> ExtReal) -> Result<Self> {
        let values = knots.iter().map(|&t| f(t)).collect();
        make_fn(knots, values)
    }

    /// The function equal to `value` at `at` and `+inf` elsewhere.
    pub fn spike(at: f64, value: f64) -> Self {
        make_fn(vec![at], vec![Finite(value)]).expect("a single finite knot is always valid")
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    /// Knots of the finite window.
    pub fn window_knots(&self) -> &[f64] {
        &self.knots[self.lo..=self.hi]
    }

    /// Values on the finite window, as plain floats.
    pub fn window_values(&self) -> &[f64] {
        &self.window
    }

    /// Closed effective domain `[first finite knot, last finite knot]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.lo], self.knots[self.hi])
    }

    pub fn is_spike(&self) -> bool {
        self.lo == self.hi
    }

    pub fn eval(&self, theta: f64) -> ExtReal {
        let ks = self.window_knots();
        let (a, b) = self.domain();
        if !(theta >= a && theta <= b) {
            return Infinity;
        }
        let j = ks.partition_point(|&k| k < theta);
        if ks[j] == theta {
            return Finite(self.window[j]);
        }
        // ks[j-1] < theta < ks[j]
        Finite(interp(
            ks[j - 1],
            self.window[j - 1],
            ks[j],
            self.window[j],
            theta,
        ))
    }

    pub fn to_grid(&self) -> FnGrid {
        FnGrid {
            knots: self.knots.clone(),
            values: self.values.clone(),
        }
    }
}

impl TryFrom<FnGrid> for ExtConvexFn {
    type Error = Error;
    fn try_from(g: FnGrid) -> Result<Self> {
        make_fn(g.knots, g.values)
    }
}

impl From<ExtConvexFn> for FnGrid {
    fn from(f: ExtConvexFn) -> Self {
        FnGrid {
            knots: f.knots,
            values: f.values,
        }
    }
}

#[inline]
fn interp(a: f64, fa: f64, b: f64, fb: f64, t: f64) -> f64 {
    fa + (fb - fa) * ((t - a) / (b - a))
}

/// Box distance from `p` to the epigraph point above `(theta, v)`, minimised over the vertical
/// coordinate: `max(|x1 - theta|, (v - x2)_+)`.
#[inline]
fn lift_cost(p: EpiPoint, theta: f64, v: f64) -> f64 {
    (p.x1 - theta).abs().max((v - p.x2).max(0.0))
}

/// Box-metric distance from `p` to the (closed) epigraph of `f`.
///
/// The cost `theta -> max(|x1 - theta|, (f(theta) - x2)_+)` is convex and piecewise
/// linear, so the knot minimiser is located by bisection on the sign of its forward
/// differences and the two segments around it are minimised exactly over their
/// breakpoints. The result is exact up to rounding, hence within `tol`.
pub fn epi_dist(f: &ExtConvexFn, p: EpiPoint, tol: f64) -> f64 {
    debug_assert!(tol > 0.0);
    let ks = f.window_knots();
    let vs = f.window_values();
    let m = ks.len();
    let cost = |i: usize| lift_cost(p, ks[i], vs[i]);
    if m == 1 {
        return cost(0);
    }
    let mut lo = 0usize;
    let mut hi = m - 1;
    // first index whose forward difference is non-negative
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if cost(mid + 1) < cost(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let j = lo;
    let mut best = cost(j);
    if j > 0 {
        best = best.min(segment_min(p, ks[j - 1], vs[j - 1], ks[j], vs[j]));
    }
    if j + 1 < m {
        best = best.min(segment_min(p, ks[j], vs[j], ks[j + 1], vs[j + 1]));
    }
    best
}

fn segment_min(p: EpiPoint, a: f64, fa: f64, b: f64, fb: f64) -> f64 {
    let s = (fb - fa) / (b - a);
    let mut cands = [a, b, p.x1, f64::NAN, f64::NAN, f64::NAN];
    if s != 0.0 {
        // f(theta) = x2
        cands[3] = a + (p.x2 - fa) / s;
    }
    if 1.0 + s != 0.0 {
        // x1 - theta = f(theta) - x2
        cands[4] = (p.x1 + p.x2 - fa + s * a) / (1.0 + s);
    }
    if 1.0 - s != 0.0 {
        // theta - x1 = f(theta) - x2
        cands[5] = (p.x1 + fa - s * a - p.x2) / (1.0 - s);
    }
    cands
        .iter()
        .filter(|t| t.is_finite())
        .map(|&t| {
            let t = t.clamp(a, b);
            lift_cost(p, t, interp(a, fa, b, fb, t))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Lower semicontinuous convex regularisation of raw grid values.
///
/// On a grid the interpolant is continuous up to each window edge, so the limit
/// from inside equals the stored edge value; lowering to it is the identity, and
/// the regularisation reduces to the greatest convex minorant of the finite block
/// evaluated at its knots. `+inf` entries are kept.
pub fn lsc_closure_values(knots: &[f64], raw: &[ExtReal]) -> Result<Vec<ExtReal>> {
    let (lo, hi) = check_shape(knots, raw)?;
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .map(|i| (knots[i], raw[i].finite().expect("finite block")))
        .collect();
    let hull = lower_hull(&pts);
    let mut out = raw.to_vec();
    let mut h = 0;
    for (i, &(t, _)) in pts.iter().enumerate() {
        while h + 1 < hull.len() && hull[h + 1].0 < t {
            h += 1;
        }
        let v = if hull[h].0 == t {
            hull[h].1
        } else if h + 1 < hull.len() && hull[h + 1].0 == t {
            hull[h + 1].1
        } else {
            interp(hull[h].0, hull[h].1, hull[h + 1].0, hull[h + 1].1, t)
        };
        out[lo + i] = Finite(v);
    }
    Ok(out)
}

/// Lower convex hull of points sorted by abscissa (monotone chain).
fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}
