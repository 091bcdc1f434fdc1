//! `lo:hi:steps` grid specifications.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `steps` equally spaced points from `lo` to `hi`, both ends included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        let ok = lo.is_finite()
            && hi.is_finite()
            && ((steps >= 2 && lo < hi) || (steps == 1 && lo == hi));
        if !ok {
            return Err(Error::Parse(format!(
                "grid {lo}:{hi}:{steps} needs lo < hi and at least 2 points (or lo == hi with 1)"
            )));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn knots(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let span = self.hi - self.lo;
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    return self.hi;
                }
                let t = self.lo + span * (i as f64 / last as f64);
                // keep an exact zero when the grid is meant to hit it
                if t.abs() <= 1e-12 * span {
                    0.0
                } else {
                    t
                }
            })
            .collect()
    }

    /// Knots with 0 inserted in order if absent; theta-grids need it.
    pub fn knots_with_zero(&self) -> Vec<f64> {
        let mut k = self.knots();
        if !k.contains(&0.0) {
            let at = k.partition_point(|&t| t < 0.0);
            k.insert(at, 0.0);
        }
        k
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid {s:?} is not lo:hi:steps")));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {p:?} in grid {s:?}")))
        };
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad step count in grid {s:?}")))?;
        GridSpec::new(num(parts[0])?, num(parts[1])?, steps)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> Self {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.steps)
    }
}
