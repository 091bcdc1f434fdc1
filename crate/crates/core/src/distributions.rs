//! Built-in distribution models: seeded samplers, closed-form MGF/CGF/rate,
//! MGF effective domains and the (alpha0, beta0) classification.
//!
//! Samplers draw from `ChaCha8Rng::seed_from_u64(seed)`:
//! - Normal: ziggurat standard normal (`rand_distr::StandardNormal`), scaled.
//! - Exponential, TwoSidedExp, Uniform, Discrete: inverse CDF of a uniform on (0, 1).
//! - DoubleExpTail(l), density ∝ exp(-e^{l x}) on x > 0: proposals from Exp(l),
//!   accepted with probability exp(1 + l x - e^{l x}) (uses e^y >= 1 + y).
//! - SuperExpTail(l), density ∝ exp(-e^{x^l}) on x > 0: proposals from Exp(1),
//!   accepted with probability exp(x - e^{x^l}) (e^{-e^{x^l}} <= e^{-x} for l > 1).

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::entropy::{tilt_linear, DiscreteMeasure, DEFAULT_TILT_TOL};
use crate::error::{Error, Result};
use crate::estimators::SampleBatch;
use crate::extreal::ExtReal::{self, Finite, Infinity, NegInfinity};
use crate::numeric::{golden_max, simpson};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionModel {
    PointMass {
        at: f64,
    },
    Discrete(DiscreteMeasure),
    Normal {
        mean: f64,
        variance: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Density `l1/2 e^{l1 x}` for `x < 0`, `l2/2 e^{-l2 x}` for `x >= 0`.
    TwoSidedExp {
        left_rate: f64,
        right_rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    DoubleExpTail {
        lambda: f64,
        mean: f64,
    },
    SuperExpTail {
        lambda: f64,
        mean: f64,
    },
}

/// Effective domain of the MGF.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: ExtReal,
    pub hi: ExtReal,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    fn open(lo: ExtReal, hi: ExtReal) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let t = Finite(t);
        let above = if self.lo_closed {
            t >= self.lo
        } else {
            t > self.lo
        };
        let below = if self.hi_closed {
            t <= self.hi
        } else {
            t < self.hi
        };
        above && below
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

// Means of exp(-e^{h(x)}) on x > 0, integrated up to where e^{h(x)} exceeds 800.
fn tail_mean(h: impl Fn(f64) -> f64, cutoff: f64) -> f64 {
    let density = |x: f64| (-h(x).exp()).exp();
    let mass = simpson(density, 0.0, cutoff, 200_000);
    let first = simpson(|x| x * density(x), 0.0, cutoff, 200_000);
    first / mass
}

impl DistributionModel {
    pub fn point_mass(at: f64) -> Self {
        DistributionModel::PointMass { at }
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        positive("variance", variance)?;
        Ok(DistributionModel::Normal { mean, variance })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(DistributionModel::Exponential { rate })
    }

    pub fn two_sided_exp(left_rate: f64, right_rate: f64) -> Result<Self> {
        positive("left rate", left_rate)?;
        positive("right rate", right_rate)?;
        Ok(DistributionModel::TwoSidedExp {
            left_rate,
            right_rate,
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "uniform needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(DistributionModel::Uniform { lo, hi })
    }

    pub fn double_exp_tail(lambda: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        let mean = tail_mean(|x| lambda * x, 800f64.ln() / lambda);
        Ok(DistributionModel::DoubleExpTail { lambda, mean })
    }

    pub fn super_exp_tail(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must exceed 1, got {lambda}"
            )));
        }
        let mean = tail_mean(|x| x.powf(lambda), 800f64.ln().powf(1.0 / lambda));
        Ok(DistributionModel::SuperExpTail { lambda, mean })
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn mean(&self) -> f64 {
        use DistributionModel::*;
        match self {
            PointMass { at } => *at,
            Discrete(mu) => mu.mean(),
            Normal { mean, .. } => *mean,
            Exponential { rate } => 1.0 / rate,
            TwoSidedExp {
                left_rate,
                right_rate,
            } => 0.5 * (1.0 / right_rate - 1.0 / left_rate),
            Uniform { lo, hi } => 0.5 * (lo + hi),
            DoubleExpTail { mean, .. } | SuperExpTail { mean, .. } => *mean,
        }
    }

    /// `n` draws; a pure function of `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n).map(|_| self.draw(&mut rng)).collect();
        SampleBatch::new(samples)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        use DistributionModel::*;
        match self {
            PointMass { at } => *at,
            Discrete(mu) => {
                let u = open01(rng);
                let mut acc = 0.0;
                for (a, w) in mu.atoms().iter().zip(mu.weights()) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                *mu.atoms().last().expect("non-empty")
            }
            Normal { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            Exponential { rate } => -open01(rng).ln() / rate,
            TwoSidedExp {
                left_rate,
                right_rate,
            } => {
                let u = open01(rng);
                if u < 0.5 {
                    (2.0 * u).ln() / left_rate
                } else {
                    -(2.0 * (1.0 - u)).ln() / right_rate
                }
            }
            Uniform { lo, hi } => lo + (hi - lo) * open01(rng),
            DoubleExpTail { lambda, .. } => loop {
                let x = -open01(rng).ln() / lambda;
                let accept = (1.0 + lambda * x - (lambda * x).exp()).exp();
                if open01(rng) <= accept {
                    break x;
                }
            },
            SuperExpTail { lambda, .. } => loop {
                let x = -open01(rng).ln();
                let accept = (x - x.powf(*lambda).exp()).exp();
                if open01(rng) <= accept {
                    break x;
                }
            },
        }
    }

    pub fn mgf_domain(&self) -> Interval {
        use DistributionModel::*;
        match self {
            Exponential { rate } => Interval::open(NegInfinity, Finite(*rate)),
            TwoSidedExp {
                left_rate,
                right_rate,
            } => Interval::open(Finite(-left_rate), Finite(*right_rate)),
            _ => Interval::open(NegInfinity, Infinity),
        }
    }

    pub fn cgf(&self, theta: f64) -> Result<ExtReal> {
        use DistributionModel::*;
        if !self.mgf_domain().contains(theta) {
            return Ok(Infinity);
        }
        Ok(Finite(match self {
            PointMass { at } => theta * at,
            Discrete(mu) => mu.cgf(theta),
            Normal { mean, variance } => mean * theta + 0.5 * variance * theta * theta,
            Exponential { rate } => (rate / (rate - theta)).ln(),
            TwoSidedExp {
                left_rate: l1,
                right_rate: l2,
            } => (0.5 * l1 / (l1 + theta) + 0.5 * l2 / (l2 - theta)).ln(),
            Uniform { lo, hi } => {
                let w = hi - lo;
                let tw = theta * w;
                if theta == 0.0 {
                    0.0
                } else if theta > 0.0 {
                    theta * hi + (-(-tw).exp_m1() / tw).ln()
                } else {
                    theta * lo + (tw.exp_m1() / tw).ln()
                }
            }
            DoubleExpTail { .. } | SuperExpTail { .. } => {
                return Err(Error::UnsupportedClosedForm(format!("cgf of {self}")))
            }
        }))
    }

    pub fn mgf(&self, theta: f64) -> Result<ExtReal> {
        Ok(match self.cgf(theta)? {
            Finite(c) => ExtReal::from_f64(c.exp()),
            other => other,
        })
    }

    /// Cramér rate `sup_theta (theta x - Lambda(theta))`. Closed form where one exists,
    /// otherwise a tilt (discrete) or a golden-section maximisation of the concave objective.
    pub fn rate(&self, x: f64) -> Result<ExtReal> {
        use DistributionModel::*;
        Ok(match self {
            PointMass { at } => {
                if x == *at {
                    Finite(0.0)
                } else {
                    Infinity
                }
            }
            Normal { mean, variance } => Finite((x - mean) * (x - mean) / (2.0 * variance)),
            Exponential { rate } => {
                if x > 0.0 {
                    Finite(rate * x - 1.0 - (rate * x).ln())
                } else {
                    Infinity
                }
            }
            Discrete(mu) => discrete_rate(mu, x),
            TwoSidedExp {
                left_rate,
                right_rate,
            } => {
                let obj = |t: f64| t * x - self.cgf(t).map(|c| c.to_f64()).unwrap_or(f64::INFINITY);
                let eps = 1e-12;
                let (_, v) = golden_max(obj, -left_rate + eps, right_rate - eps, 1e-13);
                Finite(v.max(0.0))
            }
            Uniform { lo, hi } => {
                if x <= *lo || x >= *hi {
                    Infinity
                } else {
                    let obj =
                        |t: f64| t * x - self.cgf(t).map(|c| c.to_f64()).unwrap_or(f64::INFINITY);
                    let mut span = 1.0;
                    while span < 1e8
                        && (obj(2.0 * span) > obj(span) || obj(-2.0 * span) > obj(-span))
                    {
                        span *= 2.0;
                    }
                    let (_, v) = golden_max(obj, -2.0 * span, 2.0 * span, 1e-12);
                    Finite(v.max(0.0))
                }
            }
            DoubleExpTail { .. } | SuperExpTail { .. } => {
                return Err(Error::UnsupportedClosedForm(format!("rate of {self}")))
            }
        })
    }

    /// `(alpha0, beta0)` for the built-in models.
    ///
    /// Table rows: compact support `(-inf, inf)`, Normal `(0, 0)`,
    /// `e^{-e^{l x}}` `(-inf, l)`, `e^{-e^{x^l}}` `(-inf, inf)`. Exponential inherits a
    /// bounded left tail and a heavier-than-normal right tail, `(-inf, 0)`; the
    /// two-sided exponential has both tails heavier than normal, `(0, 0)`.
    pub fn alpha0_beta0(&self) -> (ExtReal, ExtReal) {
        use DistributionModel::*;
        match self {
            PointMass { .. } | Discrete(_) | Uniform { .. } => (NegInfinity, Infinity),
            Normal { .. } => (Finite(0.0), Finite(0.0)),
            DoubleExpTail { lambda, .. } => (NegInfinity, Finite(*lambda)),
            SuperExpTail { .. } => (NegInfinity, Infinity),
            Exponential { .. } => (NegInfinity, Finite(0.0)),
            TwoSidedExp { .. } => (Finite(0.0), Finite(0.0)),
        }
    }

    /// Parses `kind:params`, e.g. `normal:-1,1`, `twosidedexp:1,3`, `discrete:@mu.json`,
    /// `discrete:-2=0.5,1=0.5`, `pointmass:-1`, `exponential:2`, `uniform:0,1`,
    /// `doubleexptail:1`, `superexptail:2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = || -> Result<Vec<f64>> {
            params
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("bad number {s:?} in model spec {spec:?}"))
                    })
                })
                .collect()
        };
        let arity = |want: usize| -> Result<Vec<f64>> {
            let v = nums()?;
            if v.len() == want {
                Ok(v)
            } else {
                Err(Error::Parse(format!(
                    "model {kind:?} takes {want} parameter(s): {spec:?}"
                )))
            }
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "pointmass" => Ok(Self::point_mass(arity(1)?[0])),
            "normal" => {
                let v = arity(2)?;
                Self::normal(v[0], v[1])
            }
            "exponential" => Self::exponential(arity(1)?[0]),
            "twosidedexp" => {
                let v = arity(2)?;
                Self::two_sided_exp(v[0], v[1])
            }
            "uniform" => {
                let v = arity(2)?;
                Self::uniform(v[0], v[1])
            }
            "doubleexptail" => Self::double_exp_tail(arity(1)?[0]),
            "superexptail" => Self::super_exp_tail(arity(1)?[0]),
            "discrete" => {
                if let Some(path) = params.strip_prefix('@') {
                    Ok(DistributionModel::Discrete(read_measure(path)?))
                } else {
                    let pairs = params
                        .split(',')
                        .map(|p| {
                            let (a, w) = p.split_once('=').ok_or_else(|| {
                                Error::Parse(format!("expected atom=weight, got {p:?}"))
                            })?;
                            let num = |s: &str| {
                                s.trim()
                                    .parse::<f64>()
                                    .map_err(|_| Error::Parse(format!("bad number {s:?}")))
                            };
                            Ok((num(a)?, num(w)?))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(DistributionModel::Discrete(DiscreteMeasure::from_pairs(
                        &pairs,
                    )?))
                }
            }
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Reads a `{"atoms":[...], "weights":[...]}` file.
pub fn read_measure(path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DistributionModel::*;
        match self {
            PointMass { at } => write!(f, "pointmass:{at}"),
            Discrete(mu) => {
                write!(f, "discrete:")?;
                for (i, (a, w)) in mu.atoms().iter().zip(mu.weights()).enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}={w}")?;
                }
                Ok(())
            }
            Normal { mean, variance } => write!(f, "normal:{mean},{variance}"),
            Exponential { rate } => write!(f, "exponential:{rate}"),
            TwoSidedExp {
                left_rate,
                right_rate,
            } => write!(f, "twosidedexp:{left_rate},{right_rate}"),
            Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            DoubleExpTail { lambda, .. } => write!(f, "doubleexptail:{lambda}"),
            SuperExpTail { lambda, .. } => write!(f, "superexptail:{lambda}"),
        }
    }
}

fn discrete_rate(mu: &DiscreteMeasure, x: f64) -> ExtReal {
    let atoms = mu.atoms();
    let (first, last) = (atoms[0], atoms[atoms.len() - 1]);
    if x < first || x > last {
        return Infinity;
    }
    if x == first {
        return Finite(-mu.weights()[0].ln());
    }
    if x == last {
        return Finite(-mu.weights()[atoms.len() - 1].ln());
    }
    // interior: the rate is the entropy of the tilt with mean x
    tilt_linear(mu, atoms, x, DEFAULT_TILT_TOL)
        .map(|t| Finite(t.entropy))
        .unwrap_or(Infinity)
}

/// Uniform on the open interval (0, 1) with 53 bits of resolution.
fn open01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
