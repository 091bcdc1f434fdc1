//! Empirical MGF, CGF and Jarzynski estimators.

use std::io::BufRead;

use crate::convexfn::{make_fn, ExtConvexFn, FnGrid};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;

/// An ordered batch of i.i.d. observations with cached summary statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    samples: Vec<f64>,
    min: f64,
    max: f64,
    mean: f64,
}

impl SampleBatch {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "a sample batch needs at least one observation".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample {i} is not finite")));
        }
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = (samples.iter().sum::<f64>() / samples.len() as f64).clamp(min, max);
        Ok(Self {
            samples,
            min,
            max,
            mean,
        })
    }

    /// Reads one decimal literal per line; blank lines are skipped.
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let x: f64 = t
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| {
                    Error::Parse(format!("line {}: not a finite decimal: {t:?}", i + 1))
                })?;
            samples.push(x);
        }
        if samples.is_empty() {
            return Err(Error::Parse("no samples found".into()));
        }
        Self::new(samples)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// `log((1/n) sum exp(theta x_i))`, evaluated with the largest exponent factored out.
pub fn cgf_at(batch: &SampleBatch, theta: f64) -> f64 {
    let shift = batch
        .samples
        .iter()
        .map(|&x| theta * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = batch
        .samples
        .iter()
        .map(|&x| (theta * x - shift).exp())
        .sum();
    shift + (s / batch.len() as f64).ln()
}

/// Empirical MGF; `+inf` when the exponentiation overflows.
pub fn mgf_at(batch: &SampleBatch, theta: f64) -> ExtReal {
    ExtReal::from_f64(cgf_at(batch, theta).exp())
}

/// `cgf_at(theta) / theta`, continued by the sample mean at `theta = 0`.
pub fn jarzynski_at(batch: &SampleBatch, theta: f64) -> f64 {
    if theta == 0.0 {
        batch.mean
    } else {
        cgf_at(batch, theta) / theta
    }
}

pub(crate) fn require_zero_knot(knots: &[f64]) -> Result<()> {
    if knots.contains(&0.0) {
        Ok(())
    } else {
        Err(Error::MissingZeroKnot)
    }
}

/// The empirical CGF restricted to `knots`, which must contain 0.
pub fn snapshot_cgf(batch: &SampleBatch, knots: &[f64]) -> Result<ExtConvexFn> {
    require_zero_knot(knots)?;
    let values = knots
        .iter()
        .map(|&t| ExtReal::Finite(cgf_at(batch, t)))
        .collect();
    make_fn(knots.to_vec(), values)
}

pub fn snapshot_mgf(batch: &SampleBatch, knots: &[f64]) -> Result<ExtConvexFn> {
    require_zero_knot(knots)?;
    let values = knots.iter().map(|&t| mgf_at(batch, t)).collect();
    make_fn(knots.to_vec(), values)
}

/// Jarzynski estimates on a grid. The result is monotone but not convex in general,
/// so it is returned as a raw grid.
pub fn snapshot_jarzynski(batch: &SampleBatch, knots: &[f64]) -> FnGrid {
    FnGrid {
        knots: knots.to_vec(),
        values: knots
            .iter()
            .map(|&t| ExtReal::Finite(jarzynski_at(batch, t)))
            .collect(),
    }
}

/// Concatenation. The merged MGF is the count-weighted average of the parts' MGFs.
pub fn merge(a: &SampleBatch, b: &SampleBatch) -> SampleBatch {
    let mut samples = Vec::with_capacity(a.len() + b.len());
    samples.extend_from_slice(&a.samples);
    samples.extend_from_slice(&b.samples);
    SampleBatch::new(samples).expect("both parts are valid")
}
