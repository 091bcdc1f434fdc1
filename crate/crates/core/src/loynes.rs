//! Loynes' exponent `sup{theta : Lambda(theta) <= 0}`: the estimate from samples,
//! the exact value for built-in models, and the dual cross-check
//! `inf_{x > 0} x I(1/x)` on a rate function.

use serde::{Deserialize, Serialize};

use crate::convexfn::ExtConvexFn;
use crate::distributions::DistributionModel;
use crate::entropy::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::estimators::{cgf_at, SampleBatch};
use crate::extreal::ExtReal::{self, Finite, Infinity};

pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Upper end of the bracket search; beyond it the exponent is reported infinite.
const BRACKET_CAP: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoynesStatus {
    Zero,
    Finite,
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoynesResult {
    pub status: LoynesStatus,
    pub value: ExtReal,
    /// `[lo, hi]` with `Lambda(lo) <= 0 < Lambda(hi)`, present when `Finite`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bracket: Option<(f64, f64)>,
    pub iterations: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

impl LoynesResult {
    fn zero() -> Self {
        Self {
            status: LoynesStatus::Zero,
            value: Finite(0.0),
            bracket: None,
            iterations: 0,
            diagnostic: None,
        }
    }

    fn infinite(diagnostic: Option<String>, iterations: u32) -> Self {
        Self {
            status: LoynesStatus::Infinite,
            value: Infinity,
            bracket: None,
            iterations,
            diagnostic,
        }
    }

    fn finite(value: f64) -> Self {
        Self {
            status: LoynesStatus::Finite,
            value: Finite(value),
            bracket: Some((value, value)),
            iterations: 0,
            diagnostic: None,
        }
    }
}

/// Shape facts about the law behind a CGF that decide the case analysis.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Profile {
    pub mean: f64,
    /// mass strictly above zero
    pub has_positive: bool,
    /// the law is the point mass at zero
    pub degenerate_zero: bool,
}

/// Case analysis on a convex CGF with `Lambda(0) = 0`, then doubling and bisection
/// for the positive root.
pub(crate) fn exponent_from_cgf(
    cgf: impl Fn(f64) -> f64,
    profile: Profile,
    root_tol: f64,
) -> LoynesResult {
    assert!(root_tol > 0.0, "root tolerance must be positive");
    if profile.degenerate_zero {
        // Lambda == 0, so every theta qualifies
        return LoynesResult::infinite(None, 0);
    }
    if profile.mean >= 0.0 {
        return LoynesResult::zero();
    }
    if !profile.has_positive {
        return LoynesResult::infinite(None, 0);
    }
    let mut iterations = 0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while cgf(hi) <= 0.0 {
        iterations += 1;
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return LoynesResult::infinite(
                Some(format!(
                    "no sign change of the cgf below theta = {BRACKET_CAP:e}"
                )),
                iterations,
            );
        }
    }
    while hi - lo > root_tol {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cgf(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    LoynesResult {
        status: LoynesStatus::Finite,
        value: Finite(0.5 * (lo + hi)),
        bracket: Some((lo, hi)),
        iterations,
        diagnostic: None,
    }
}

/// `delta_n = sup{theta : Lambda_n(theta) <= 0}` for the empirical CGF.
pub fn loynes_estimate(batch: &SampleBatch, root_tol: f64) -> LoynesResult {
    let profile = Profile {
        mean: batch.mean(),
        has_positive: batch.max() > 0.0,
        degenerate_zero: batch.min() == 0.0 && batch.max() == 0.0,
    };
    exponent_from_cgf(|t| cgf_at(batch, t), profile, root_tol)
}

pub(crate) fn loynes_discrete(mu: &DiscreteMeasure, root_tol: f64) -> LoynesResult {
    let profile = Profile {
        mean: mu.mean(),
        has_positive: mu.atoms().iter().any(|&b| b > 0.0),
        degenerate_zero: mu.atoms() == [0.0],
    };
    exponent_from_cgf(|t| mu.cgf(t), profile, root_tol)
}

/// Exact Loynes exponent of a model.
///
/// Normal and two-sided exponential laws have closed forms; other models with a
/// closed-form CGF are solved by bisection on it.
pub fn loynes_true(model: &DistributionModel, root_tol: f64) -> Result<LoynesResult> {
    use DistributionModel::*;
    Ok(match model {
        PointMass { at } => {
            let profile = Profile {
                mean: *at,
                has_positive: *at > 0.0,
                degenerate_zero: *at == 0.0,
            };
            exponent_from_cgf(|t| t * at, profile, root_tol)
        }
        Normal { mean, variance } => {
            if *mean >= 0.0 {
                LoynesResult::zero()
            } else {
                LoynesResult::finite(-2.0 * mean / variance)
            }
        }
        TwoSidedExp {
            left_rate,
            right_rate,
        } => {
            // M(theta) = 1 at theta = (right - left) / 2, where both poles are equidistant
            if model.mean() >= 0.0 {
                LoynesResult::zero()
            } else {
                LoynesResult::finite((right_rate - left_rate) / 2.0)
            }
        }
        Exponential { .. } => LoynesResult::zero(),
        Discrete(mu) => loynes_discrete(mu, root_tol),
        Uniform { hi, .. } => {
            let profile = Profile {
                mean: model.mean(),
                has_positive: *hi > 0.0,
                degenerate_zero: false,
            };
            exponent_from_cgf(
                |t| model.cgf(t).map(ExtReal::to_f64).unwrap_or(f64::INFINITY),
                profile,
                root_tol,
            )
        }
        DoubleExpTail { .. } | SuperExpTail { .. } => {
            return Err(Error::UnsupportedModel(model.name()))
        }
    })
}

/// `inf x I(1/x)` over the positive points of `probe`, with `I` evaluated by
/// interpolation. Points where `I(1/x)` is infinite are skipped; if all are, the
/// result is `+inf`.
pub fn loynes_dual_check(rate: &ExtConvexFn, probe: &[f64]) -> Result<ExtReal> {
    let mut best = Infinity;
    let mut any = false;
    for &x in probe.iter().filter(|&&x| x > 0.0 && x.is_finite()) {
        any = true;
        if let Finite(v) = rate.eval(1.0 / x) {
            best = best.min(Finite(x * v));
        }
    }
    if !any {
        return Err(Error::EmptyProbeGrid);
    }
    Ok(best)
}

/// Probe points `x = 1/y` for every positive knot `y` of the rate function's finite
/// window, where the piecewise-linear rate is exact.
pub fn dual_probe_from_knots(rate: &ExtConvexFn) -> Vec<f64> {
    rate.window_knots()
        .iter()
        .filter(|&&y| y > 0.0)
        .map(|&y| 1.0 / y)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN_LOG: f64 = 0.481_211_825_059_603_47;

    fn batch(xs: &[f64]) -> SampleBatch {
        SampleBatch::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn estimate_cases() {
        assert_eq!(
            loynes_estimate(&batch(&[1.0]), 1e-10).status,
            LoynesStatus::Zero
        );
        let r = loynes_estimate(&batch(&[-1.0]), 1e-10);
        assert_eq!((r.status, r.value), (LoynesStatus::Infinite, Infinity));
        let r = loynes_estimate(&batch(&[-2.0, 1.0]), 1e-10);
        assert_eq!(r.status, LoynesStatus::Finite);
        assert!((r.value.finite().unwrap() - GOLDEN_LOG).abs() < 1e-10);
        let (lo, hi) = r.bracket.unwrap();
        assert!(hi - lo <= 1e-10);
        let b = batch(&[-2.0, 1.0]);
        assert!(cgf_at(&b, lo) <= 0.0 && cgf_at(&b, hi) > 0.0);
    }

    #[test]
    fn all_zero_and_mean_zero() {
        assert_eq!(
            loynes_estimate(&batch(&[0.0, 0.0]), 1e-10).status,
            LoynesStatus::Infinite
        );
        assert_eq!(
            loynes_estimate(&batch(&[-1.0, 1.0]), 1e-10).status,
            LoynesStatus::Zero
        );
    }

    #[test]
    fn true_exponents() {
        let r = loynes_true(&DistributionModel::normal(-1.0, 1.0).unwrap(), 1e-10).unwrap();
        assert_eq!(r.value, Finite(2.0));
        let r = loynes_true(&DistributionModel::two_sided_exp(1.0, 3.0).unwrap(), 1e-10).unwrap();
        assert_eq!(r.value, Finite(1.0));
        let r = loynes_true(&DistributionModel::point_mass(-1.0), 1e-10).unwrap();
        assert_eq!(r.status, LoynesStatus::Infinite);
        let tail = DistributionModel::double_exp_tail(1.0).unwrap();
        assert!(matches!(
            loynes_true(&tail, 1e-10),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn uniform_root_matches_closed_form_cgf() {
        let m = DistributionModel::uniform(-2.0, 1.0).unwrap();
        let r = loynes_true(&m, 1e-12).unwrap();
        let d = r.value.finite().unwrap();
        assert!(m.cgf(d).unwrap().finite().unwrap().abs() < 1e-10);
    }

    #[test]
    fn dual_check_on_normal_rate() {
        let ys: Vec<f64> = (-400..=400).map(|i| i as f64 / 100.0).collect();
        let rate = ExtConvexFn::from_fn(ys, |y| Finite((y + 1.0) * (y + 1.0) / 2.0)).unwrap();
        let v = loynes_dual_check(&rate, &dual_probe_from_knots(&rate)).unwrap();
        assert!((v.finite().unwrap() - 2.0).abs() < 1e-3);
        assert_eq!(
            loynes_dual_check(&rate, &[-1.0, 0.0]),
            Err(Error::EmptyProbeGrid)
        );
    }

    #[test]
    fn dual_check_infeasible_probe_is_infinite() {
        let rate = ExtConvexFn::spike(-1.0, 0.0);
        assert_eq!(
            loynes_dual_check(&rate, &[0.5, 1.0, 2.0]).unwrap(),
            Infinity
        );
    }
}
