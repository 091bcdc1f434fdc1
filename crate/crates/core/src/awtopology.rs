//! Attouch-Wets distances between extended convex functions.
//!
//! Two functions are close when the box-metric distances from points of a bounded
//! box to their epigraphs agree uniformly. For the box `[-k, k]^2` the gap
//! `rho_k = sup |d(p, epi f) - d(p, epi g)|` is approximated by a lattice maximum.
//! Each distance is 1-Lipschitz in `p`, so the lattice maximum undershoots the
//! supremum by at most twice the spacing; since every lattice point is a real point
//! of the box, it never overshoots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexfn::{epi_dist, EpiPoint, ExtConvexFn, TOL_DIST};

/// One row of an [`AwReport`]: the lattice gap on `[-k, k]^2` and its certified slack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoEntry {
    pub k: u32,
    pub rho: f64,
    pub err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwReport {
    pub entries: Vec<RhoEntry>,
    /// `sum_k 2^-k min(1, rho_k)`, in `[0, 1)`.
    pub composite: f64,
    /// `sum_k 2^-k err_k`: the true composite is at most `composite + composite_err`.
    pub composite_err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    In,
    Out,
    Undecided,
}

/// Default lattice spacing for box `k`.
pub fn default_spacing(k: u32) -> f64 {
    1.0 / (8.0 * k as f64)
}

/// Finest spacing tried by [`in_vk_refined`].
pub fn min_spacing(k: u32) -> f64 {
    1.0 / (1024.0 * k as f64)
}

/// Lattice estimate of `rho_k(f, g)` with spacing at most `h`.
///
/// The lattice includes the box corners; its actual spacing `2k / ceil(2k / h)` is
/// what enters the error bound `2h + 4 tol`.
pub fn rho_k(f: &ExtConvexFn, g: &ExtConvexFn, k: u32, h: f64) -> RhoEntry {
    lattice_gap(
        |p| epi_dist(f, p, TOL_DIST),
        |p| epi_dist(g, p, TOL_DIST),
        k,
        h,
    )
}

/// Distance to the epigraph of `min_i f_i`, which is the union of the epigraphs.
pub fn epi_dist_min(pieces: &[ExtConvexFn], p: EpiPoint) -> f64 {
    pieces
        .iter()
        .map(|f| epi_dist(f, p, TOL_DIST))
        .fold(f64::INFINITY, f64::min)
}

/// [`rho_k`] for functions given as pointwise minima of convex pieces, which
/// covers non-convex piecewise-linear functions.
pub fn rho_k_min(f: &[ExtConvexFn], g: &[ExtConvexFn], k: u32, h: f64) -> RhoEntry {
    assert!(
        !f.is_empty() && !g.is_empty(),
        "a function needs at least one piece"
    );
    lattice_gap(|p| epi_dist_min(f, p), |p| epi_dist_min(g, p), k, h)
}

fn lattice_gap(
    df: impl Fn(EpiPoint) -> f64 + Sync,
    dg: impl Fn(EpiPoint) -> f64 + Sync,
    k: u32,
    h: f64,
) -> RhoEntry {
    assert!(k >= 1, "box index starts at 1");
    assert!(h > 0.0 && h.is_finite(), "lattice spacing must be positive");
    let half = k as f64;
    let cells = (2.0 * half / h).ceil() as usize;
    let step = 2.0 * half / cells as f64;
    let coord = |i: usize| {
        if i == cells {
            half
        } else {
            -half + step * i as f64
        }
    };
    let rho = (0..=cells)
        .into_par_iter()
        .map(|i| {
            let x1 = coord(i);
            (0..=cells)
                .map(|j| {
                    let p = EpiPoint::new(x1, coord(j));
                    (df(p) - dg(p)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    RhoEntry {
        k,
        rho,
        err: 2.0 * step + 4.0 * TOL_DIST,
    }
}

/// Decides `g in V_k(f)` at spacing `h`: `In` when even the certified upper bound is
/// below `1/k`, `Out` when the attained lattice gap already reaches `1/k`.
pub fn in_vk(g: &ExtConvexFn, f: &ExtConvexFn, k: u32, h: f64) -> Membership {
    classify(rho_k(g, f, k, h), k)
}

fn classify(r: RhoEntry, k: u32) -> Membership {
    let radius = 1.0 / k as f64;
    if r.rho + r.err < radius {
        Membership::In
    } else if r.rho >= radius {
        Membership::Out
    } else {
        Membership::Undecided
    }
}

/// [`in_vk`] with the spacing halved from [`default_spacing`] down to [`min_spacing`]
/// until the verdict is decided.
pub fn in_vk_refined(g: &ExtConvexFn, f: &ExtConvexFn, k: u32) -> Membership {
    let mut h = default_spacing(k);
    loop {
        let verdict = in_vk(g, f, k, h);
        if verdict != Membership::Undecided || h / 2.0 < min_spacing(k) {
            return verdict;
        }
        h /= 2.0;
    }
}

/// `rho_1 .. rho_K` and their weighted composite. With `h = None` each box uses
/// [`default_spacing`].
pub fn aw_composite(f: &ExtConvexFn, g: &ExtConvexFn, depth: u32, h: Option<f64>) -> AwReport {
    composite_of(depth, |k| {
        rho_k(f, g, k, h.unwrap_or_else(|| default_spacing(k)))
    })
}

/// [`aw_composite`] for pointwise minima of convex pieces.
pub fn aw_composite_min(
    f: &[ExtConvexFn],
    g: &[ExtConvexFn],
    depth: u32,
    h: Option<f64>,
) -> AwReport {
    composite_of(depth, |k| {
        rho_k_min(f, g, k, h.unwrap_or_else(|| default_spacing(k)))
    })
}

fn composite_of(depth: u32, rho: impl Fn(u32) -> RhoEntry) -> AwReport {
    assert!(depth >= 1, "depth must be at least 1");
    let entries: Vec<RhoEntry> = (1..=depth).map(rho).collect();
    let weight = |k: u32| 0.5f64.powi(k as i32);
    let composite = entries.iter().map(|e| weight(e.k) * e.rho.min(1.0)).sum();
    let composite_err = entries.iter().map(|e| weight(e.k) * e.err).sum();
    AwReport {
        entries,
        composite,
        composite_err,
    }
}

/// One report per element of `seq`, each against `target`.
pub fn converge_report(
    seq: &[ExtConvexFn],
    target: &ExtConvexFn,
    depth: u32,
    h: Option<f64>,
) -> Vec<AwReport> {
    seq.iter()
        .map(|f| aw_composite(f, target, depth, h))
        .collect()
}

/// Per-k CSV: header `k,rho,err` and one row per box.
pub fn report_csv(report: &AwReport) -> String {
    let mut out = String::from("k,rho,err\n");
    for e in &report.entries {
        out.push_str(&format!("{},{},{}\n", e.k, e.rho, e.err));
    }
    out
}
