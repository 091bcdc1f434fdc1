//! Relative entropy on finite supports, exponential tilting under a linear
//! constraint, the Loynes rate function for finitely supported laws, and exact
//! enumeration of empirical-MGF events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal::{self, Finite, Infinity};
use crate::loynes::loynes_discrete;
use crate::numeric::{ln_factorials, log_sum_exp_weighted, CompensatedSum};

pub const DEFAULT_TILT_TOL: f64 = 1e-10;
/// Largest number of count vectors [`exact_event_probability`] will visit.
pub const ENUMERATION_CAP: f64 = 1e7;
const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureJson> for DiscreteMeasure {
    type Error = Error;
    fn try_from(m: MeasureJson) -> Result<Self> {
        DiscreteMeasure::new(m.atoms, m.weights)
    }
}

impl From<DiscreteMeasure> for MeasureJson {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureJson {
            atoms: m.atoms,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidMeasure(msg));
        if atoms.len() != weights.len() {
            return bad(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            ));
        }
        if atoms.is_empty() {
            return bad("no atoms".into());
        }
        for (i, a) in atoms.iter().enumerate() {
            if !a.is_finite() || (i > 0 && *a <= atoms[i - 1]) {
                return bad(format!(
                    "atoms must be finite and strictly increasing (index {i})"
                ));
            }
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return bad(format!("weight {i} is not positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return bad(format!("weights sum to {total}, not 1"));
        }
        Ok(Self { atoms, weights })
    }

    /// Sorts `(atom, weight)` pairs, merges repeated atoms and drops zero weights.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut ps: Vec<(f64, f64)> = pairs.iter().copied().filter(|p| p.1 != 0.0).collect();
        ps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(ps.len());
        let mut weights: Vec<f64> = Vec::with_capacity(ps.len());
        for (a, w) in ps {
            if atoms.last() == Some(&a) {
                *weights.last_mut().unwrap() += w;
            } else {
                atoms.push(a);
                weights.push(w);
            }
        }
        Self::new(atoms, weights)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * w)
            .sum()
    }

    pub fn cgf(&self, theta: f64) -> f64 {
        log_sum_exp_weighted(
            self.weights
                .iter()
                .zip(&self.atoms)
                .map(move |(&w, &a)| (w, theta * a)),
        )
    }

    pub fn mgf(&self, theta: f64) -> ExtReal {
        ExtReal::from_f64(self.cgf(theta).exp())
    }
}

/// `H(nu | mu) = sum nu_i log(nu_i / mu_i)`; `+inf` if `nu` charges an atom `mu` does not.
pub fn rel_entropy(nu: &DiscreteMeasure, mu: &DiscreteMeasure) -> ExtReal {
    let mut acc = CompensatedSum::default();
    for (a, p) in nu.atoms.iter().zip(&nu.weights) {
        match mu.atoms.binary_search_by(|b| b.total_cmp(a)) {
            Ok(j) => acc.add(p * (p / mu.weights[j]).ln()),
            Err(_) => return Infinity,
        }
    }
    Finite(acc.value().max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltSolution {
    /// The minimiser `nu*`, on the atoms of `mu`.
    pub measure: DiscreteMeasure,
    /// Multiplier `lambda` of `nu_i ∝ mu_i exp(lambda g_i)`.
    pub multiplier: f64,
    /// `H(nu* | mu)`.
    pub entropy: f64,
    /// `sum nu*_i g_i - target`.
    pub constraint_residual: f64,
}

fn tilted_log_weights(mu: &DiscreteMeasure, g: &[f64], lambda: f64) -> Vec<f64> {
    let raw: Vec<f64> = mu
        .weights
        .iter()
        .zip(g)
        .map(|(w, gi)| w.ln() + lambda * gi)
        .collect();
    let shift = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = shift + raw.iter().map(|r| (r - shift).exp()).sum::<f64>().ln();
    raw.into_iter().map(|r| r - log_z).collect()
}

fn tilted_mean(mu: &DiscreteMeasure, g: &[f64], lambda: f64) -> f64 {
    tilted_log_weights(mu, g, lambda)
        .iter()
        .zip(g)
        .map(|(lw, gi)| lw.exp() * gi)
        .sum()
}

/// Minimises `H(nu | mu)` over measures on the support of `mu` subject to
/// `sum nu_i g_i = target`. The minimiser is the exponential tilt
/// `nu_i ∝ mu_i exp(lambda g_i)`, whose constraint value is strictly increasing in
/// `lambda`; the multiplier is found by bracketing and bisection on it.
///
/// Returns `None` when `target` is not strictly between `min g` and `max g` and
/// `mu` does not already satisfy the constraint.
pub fn tilt_linear(mu: &DiscreteMeasure, g: &[f64], target: f64, tol: f64) -> Option<TiltSolution> {
    assert_eq!(g.len(), mu.len(), "one constraint coefficient per atom");
    assert!(tol > 0.0, "tilt tolerance must be positive");
    let base: f64 = mu.weights.iter().zip(g).map(|(w, gi)| w * gi).sum();
    if (base - target).abs() <= tol {
        return Some(TiltSolution {
            measure: mu.clone(),
            multiplier: 0.0,
            entropy: 0.0,
            constraint_residual: base - target,
        });
    }
    let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(gmin < target && target < gmax) {
        return None;
    }
    let phi = |l: f64| tilted_mean(mu, g, l) - target;
    let dir = if base < target { 1.0 } else { -1.0 };
    let (mut lo, mut hi) = (0.0, dir);
    while phi(hi) * dir < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    // phi changes sign on [lo, hi]
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..2000 {
        lambda = 0.5 * (lo + hi);
        let r = phi(lambda);
        if r.abs() <= tol || lambda <= lo || lambda >= hi {
            break;
        }
        if r < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    let log_w = tilted_log_weights(mu, g, lambda);
    let weights: Vec<f64> = log_w.iter().map(|l| l.exp()).collect();
    let mut h = CompensatedSum::default();
    for ((lw, w), mw) in log_w.iter().zip(&weights).zip(&mu.weights) {
        h.add(w * (lw - mw.ln()));
    }
    let residual = weights.iter().zip(g).map(|(w, gi)| w * gi).sum::<f64>() - target;
    // Underflowed weights are dropped from the reported measure; the entropy above
    // already accounts for them.
    let kept: Vec<(f64, f64)> = mu
        .atoms
        .iter()
        .zip(&weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(a, w)| (*a, *w))
        .collect();
    let total: f64 = kept.iter().map(|p| p.1).sum();
    let measure = DiscreteMeasure {
        atoms: kept.iter().map(|p| p.0).collect(),
        weights: kept.iter().map(|p| p.1 / total).collect(),
    };
    Some(TiltSolution {
        measure,
        multiplier: lambda,
        entropy: h.value().max(0.0),
        constraint_residual: residual,
    })
}

/// Entropy-minimising measure with `sum nu_i exp(x b_i) = 1`.
pub fn tilt_to_constraint(mu: &DiscreteMeasure, x: f64, tol: f64) -> Option<TiltSolution> {
    let g: Vec<f64> = mu.atoms.iter().map(|b| (x * b).exp()).collect();
    tilt_linear(mu, &g, 1.0, tol)
}

/// Loynes rate function of a finitely supported law at `x` in `[0, +inf]`.
///
/// Compactly supported laws give infinite rate to every non-MGF candidate, so the
/// infimum runs over measures. On either side of `theta_mu` (the true exponent) the
/// binding constraint is `M_nu(x) = 1`, which is an exponential tilt. At `x = 0`
/// that constraint is vacuous and its limit `mean(nu) >= 0` is used instead; at
/// `x = +inf` the candidates are the laws carried by `(-inf, 0]`.
pub fn loynes_rate(mu: &DiscreteMeasure, x: f64, tol: f64) -> Result<ExtReal> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "loynes rate is defined on [0, inf], got {x}"
        )));
    }
    if x == f64::INFINITY {
        let mass: f64 = mu
            .atoms
            .iter()
            .zip(&mu.weights)
            .filter(|(a, _)| **a <= 0.0)
            .map(|(_, w)| w)
            .sum();
        return Ok(if mass > 0.0 {
            Finite(-mass.min(1.0).ln())
        } else {
            Infinity
        });
    }
    if x == 0.0 {
        if mu.mean() >= 0.0 {
            return Ok(Finite(0.0));
        }
        return Ok(tilt_linear(mu, &mu.atoms, 0.0, tol)
            .map(|t| Finite(t.entropy))
            .unwrap_or(Infinity));
    }
    let theta_mu = loynes_discrete(mu, tol.min(crate::loynes::DEFAULT_ROOT_TOL))
        .value
        .to_f64();
    let m = mu.mgf(x).to_f64();
    let satisfied = if x > theta_mu {
        m <= 1.0
    } else if x < theta_mu {
        m >= 1.0
    } else {
        true
    };
    if satisfied {
        return Ok(Finite(0.0));
    }
    Ok(tilt_to_constraint(mu, x, tol)
        .map(|t| Finite(t.entropy))
        .unwrap_or(Infinity))
}

fn composition_count(n: usize, k: usize) -> f64 {
    let lf = ln_factorials(n + k);
    (lf[n + k - 1] - lf[k - 1] - lf[n]).exp().round()
}

/// Exact `P(M_n(theta) <= c)` for `n` i.i.d. draws from `mu`, by enumerating every
/// vector of atom counts with its multinomial probability.
pub fn exact_event_probability(mu: &DiscreteMeasure, n: usize, theta: f64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    let k = mu.len();
    let count = composition_count(n, k);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            count,
            cap: ENUMERATION_CAP,
        });
    }
    let g: Vec<f64> = mu.atoms.iter().map(|b| (theta * b).exp()).collect();
    let ln_p: Vec<f64> = mu.weights.iter().map(|w| w.ln()).collect();
    let lf = ln_factorials(n);
    // boundary cases M_n = c are decided with a few ulps of slack
    let limit = c + 1e-12 * c.abs().max(1.0);

    struct Walk<'a> {
        g: &'a [f64],
        ln_p: &'a [f64],
        lf: &'a [f64],
        n: usize,
        limit: f64,
        total: CompensatedSum,
    }

    impl Walk<'_> {
        // atoms before `i` are assigned; `left` draws remain
        fn go(&mut self, i: usize, left: usize, g_sum: f64, ln_w: f64) {
            if i + 1 == self.g.len() {
                let g_sum = g_sum + left as f64 * self.g[i];
                if g_sum / self.n as f64 <= self.limit {
                    let ln_w = ln_w + left as f64 * self.ln_p[i] - self.lf[left];
                    self.total.add((self.lf[self.n] + ln_w).exp());
                }
                return;
            }
            for c in 0..=left {
                let ln_w = ln_w + c as f64 * self.ln_p[i] - self.lf[c];
                self.go(i + 1, left - c, g_sum + c as f64 * self.g[i], ln_w);
            }
        }
    }

    let mut walk = Walk {
        g: &g,
        ln_p: &ln_p,
        lf: &lf,
        n,
        limit,
        total: CompensatedSum::default(),
    };
    walk.go(0, n, 0.0, 0.0);
    Ok(walk.total.value().clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub n: usize,
    pub probability: f64,
    /// `-(1/n) log P`, `+inf` when the event is impossible.
    pub slope: ExtReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanovTable {
    pub rows: Vec<SlopeRow>,
    /// `inf H(nu | mu)` over `{nu : sum nu_i exp(theta b_i) <= c}`.
    pub prediction: ExtReal,
}

/// Entropy prediction for the decay rate of `P(M_n(theta) <= c)`.
pub fn sanov_prediction(mu: &DiscreteMeasure, theta: f64, c: f64, tol: f64) -> ExtReal {
    let g: Vec<f64> = mu.atoms.iter().map(|b| (theta * b).exp()).collect();
    let base: f64 = mu.weights.iter().zip(&g).map(|(w, gi)| w * gi).sum();
    if base <= c {
        return Finite(0.0);
    }
    let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
    if c < gmin {
        return Infinity;
    }
    if c == gmin {
        // only the measure on the minimising atoms qualifies
        let mass: f64 = g
            .iter()
            .zip(&mu.weights)
            .filter(|(gi, _)| **gi == gmin)
            .map(|(_, w)| w)
            .sum();
        return Finite(-mass.ln());
    }
    tilt_linear(mu, &g, c, tol)
        .map(|t| Finite(t.entropy))
        .unwrap_or(Infinity)
}

/// Exact decay slopes `-(1/n) log P(M_n(theta) <= c)` for each `n`, with the entropy
/// prediction they approach.
pub fn sanov_slope(
    mu: &DiscreteMeasure,
    theta: f64,
    c: f64,
    n_list: &[usize],
) -> Result<SanovTable> {
    let rows = n_list
        .iter()
        .map(|&n| {
            let p = exact_event_probability(mu, n, theta, c)?;
            let slope = if p > 0.0 {
                Finite(-p.ln() / n as f64)
            } else {
                Infinity
            };
            Ok(SlopeRow {
                n,
                probability: p,
                slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SanovTable {
        rows,
        prediction: sanov_prediction(mu, theta, c, DEFAULT_TILT_TOL),
    })
}
