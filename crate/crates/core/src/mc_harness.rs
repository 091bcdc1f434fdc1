//! Seeded Monte Carlo studies: convergence of the empirical CGF, the sampling
//! distribution of the Loynes estimate, and exact mis-estimation decay.
//!
//! Replicate `r` at sample size `n` draws from the seed
//! `mix_seed(master, n, r) = splitmix64(splitmix64(splitmix64(master) ^ n) ^ r)`.
//! Replicates run on a rayon pool and are collected in `(n, r)` order, so results
//! do not depend on the worker count.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::awtopology::aw_composite;
use crate::convexfn::ExtConvexFn;
use crate::distributions::DistributionModel;
use crate::entropy::{sanov_slope, DiscreteMeasure, SanovTable};
use crate::error::{Error, Result};
use crate::estimators::{cgf_at, snapshot_cgf};
use crate::extreal::ExtReal::{self, Finite, Infinity};
use crate::grid::GridSpec;
use crate::loynes::{loynes_estimate, loynes_true, LoynesResult, LoynesStatus, DEFAULT_ROOT_TOL};

pub const METRIC_AW: &str = "aw_composite";
pub const METRIC_SUP: &str = "sup_cgf_error";
pub const METRIC_DELTA: &str = "delta";

fn default_theta_grid() -> GridSpec {
    GridSpec {
        lo: -2.0,
        hi: 2.0,
        steps: 41,
    }
}

fn default_depth() -> u32 {
    3
}

fn default_sup_window() -> (f64, f64) {
    (-1.0, 1.0)
}

fn default_root_tol() -> f64 {
    DEFAULT_ROOT_TOL
}

/// Configuration shared by the convergence and Loynes studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Model spec as accepted by [`DistributionModel::parse`].
    pub model: String,
    pub n_schedule: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default = "default_theta_grid")]
    pub theta_grid: GridSpec,
    #[serde(default = "default_depth")]
    pub aw_depth: u32,
    /// Lattice spacing for every box; per-box default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aw_h: Option<f64>,
    #[serde(default = "default_sup_window")]
    pub sup_window: (f64, f64),
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl StudyConfig {
    pub fn new(model: &str, n_schedule: Vec<usize>, replicates: usize, master_seed: u64) -> Self {
        Self {
            model: model.to_string(),
            n_schedule,
            replicates,
            master_seed,
            theta_grid: default_theta_grid(),
            aw_depth: default_depth(),
            aw_h: None,
            sup_window: default_sup_window(),
            root_tol: default_root_tol(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_schedule.is_empty() || self.n_schedule[0] == 0 {
            return Err(Error::InvalidArgument(
                "n_schedule must start at a positive count".into(),
            ));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "n_schedule must be strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        if self.aw_depth == 0 {
            return Err(Error::InvalidArgument("aw_depth must be at least 1".into()));
        }
        if let Some(h) = self.aw_h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "aw_h must be positive, got {h}"
                )));
            }
        }
        let (a, b) = self.sup_window;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::InvalidArgument("sup_window needs lo <= hi".into()));
        }
        if self.root_tol.is_nan() || self.root_tol <= 0.0 {
            return Err(Error::InvalidArgument("root_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub mu: DiscreteMeasure,
    pub theta: f64,
    pub c: f64,
    pub n_list: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Convergence,
    Loynes,
    Decay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigEcho {
    Sampling(StudyConfig),
    Decay(DecayConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub metrics: BTreeMap<String, ExtReal>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: ExtReal,
    pub q50: ExtReal,
    pub q75: ExtReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusFractions {
    pub zero: f64,
    pub finite: f64,
    pub infinite: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub metrics: BTreeMap<String, Quartiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<StatusFractions>,
}

/// Run metadata that varies between otherwise identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub wall_clock_secs: f64,
    pub tool_version: String,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: StudyKind,
    pub config: ConfigEcho,
    pub replicates: Vec<ReplicateRecord>,
    pub summaries: Vec<NSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loynes_true: Option<LoynesResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<SanovTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMeta>,
}

/// How a study is executed. Only `with_meta` changes the output.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Thread count; `None` uses rayon's default.
    pub workers: Option<usize>,
    pub with_meta: bool,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replicate seed. With `s = splitmix64(master)`, two pairs collide only when
/// `splitmix64(s ^ n1) ^ splitmix64(s ^ n2) == r1 ^ r2`, and for `n1 == n2` never.
pub fn mix_seed(master: u64, n: usize, r: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n as u64) ^ r as u64)
}

/// Type-7 sample quantile (linear interpolation between order statistics).
/// An infinite neighbour with positive weight makes the quantile infinite.
pub fn quantile(sorted: &[ExtReal], q: f64) -> ExtReal {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if frac == 0.0 || i + 1 >= sorted.len() {
        return sorted[i];
    }
    match (sorted[i], sorted[i + 1]) {
        (Finite(a), Finite(b)) => Finite(a + frac * (b - a)),
        (a, b) => a.max(b),
    }
}

fn quartiles(mut xs: Vec<ExtReal>) -> Quartiles {
    xs.sort_by(ExtReal::total_cmp);
    Quartiles {
        q25: quantile(&xs, 0.25),
        q50: quantile(&xs, 0.5),
        q75: quantile(&xs, 0.75),
    }
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn run_replicates(
    cfg: &StudyConfig,
    opts: RunOptions,
    metric: impl Fn(usize, u64) -> Result<BTreeMap<String, ExtReal>> + Sync,
) -> Result<Vec<ReplicateRecord>> {
    let tasks: Vec<(usize, usize)> = cfg
        .n_schedule
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();
    run_pool(opts.workers, || {
        tasks
            .par_iter()
            .map(|&(n, r)| {
                let seed = mix_seed(cfg.master_seed, n, r);
                Ok(ReplicateRecord {
                    n,
                    replicate: r,
                    seed,
                    metrics: metric(n, seed)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

fn summarise(cfg: &StudyConfig, records: &[ReplicateRecord], with_status: bool) -> Vec<NSummary> {
    cfg.n_schedule
        .iter()
        .map(|&n| {
            let rows: Vec<&ReplicateRecord> = records.iter().filter(|r| r.n == n).collect();
            let names: Vec<&String> = rows[0].metrics.keys().collect();
            let metrics = names
                .into_iter()
                .map(|name| {
                    let xs = rows.iter().map(|r| r.metrics[name]).collect();
                    (name.clone(), quartiles(xs))
                })
                .collect();
            let status = with_status.then(|| {
                let total = rows.len() as f64;
                let count = |pred: fn(ExtReal) -> bool| {
                    rows.iter()
                        .filter(|r| pred(r.metrics[METRIC_DELTA]))
                        .count() as f64
                        / total
                };
                StatusFractions {
                    zero: count(|d| d == Finite(0.0)),
                    finite: count(|d| d.is_finite() && d != Finite(0.0)),
                    infinite: count(|d| d == Infinity),
                }
            });
            NSummary { n, metrics, status }
        })
        .collect()
}

fn meta(start: Instant, opts: RunOptions) -> Option<RunMeta> {
    opts.with_meta.then(|| RunMeta {
        wall_clock_secs: start.elapsed().as_secs_f64(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        workers: opts.workers.unwrap_or_else(rayon::current_num_threads),
    })
}

/// The model's CGF on the theta-grid (with 0 inserted), `+inf` outside its MGF domain.
pub fn true_cgf_snapshot(model: &DistributionModel, knots: &[f64]) -> Result<ExtConvexFn> {
    let values = knots
        .iter()
        .map(|&t| model.cgf(t))
        .collect::<Result<Vec<_>>>()?;
    crate::convexfn::make_fn(knots.to_vec(), values)
}

/// Convergence of the empirical CGF to the model CGF: per replicate the AW composite
/// between the two grid snapshots and the sup error over `sup_window`.
pub fn convergence_study(cfg: &StudyConfig, opts: RunOptions) -> Result<StudyResult> {
    let start = Instant::now();
    cfg.validate()?;
    let model = DistributionModel::parse(&cfg.model)?;
    model.cgf(0.0)?;
    let knots = cfg.theta_grid.knots_with_zero();
    let truth = true_cgf_snapshot(&model, &knots)?;
    let (wlo, whi) = cfg.sup_window;
    let sup_points: Vec<f64> = knots
        .iter()
        .copied()
        .filter(|&t| t >= wlo && t <= whi && truth.eval(t).is_finite())
        .collect();
    let records = run_replicates(cfg, opts, |n, seed| {
        let batch = model.sample(n, seed)?;
        let est = snapshot_cgf(&batch, &knots)?;
        let aw = aw_composite(&est, &truth, cfg.aw_depth, cfg.aw_h).composite;
        let sup = sup_points
            .iter()
            .map(|&t| (cgf_at(&batch, t) - truth.eval(t).to_f64()).abs())
            .fold(0.0, f64::max);
        Ok(BTreeMap::from([
            (METRIC_AW.to_string(), Finite(aw)),
            (METRIC_SUP.to_string(), Finite(sup)),
        ]))
    })?;
    Ok(StudyResult {
        study: StudyKind::Convergence,
        config: ConfigEcho::Sampling(cfg.clone()),
        summaries: summarise(cfg, &records, false),
        replicates: records,
        loynes_true: None,
        decay: None,
        meta: meta(start, opts),
    })
}

/// Sampling distribution of the Loynes estimate, with the model's exact exponent.
pub fn loynes_study(cfg: &StudyConfig, opts: RunOptions) -> Result<StudyResult> {
    let start = Instant::now();
    cfg.validate()?;
    let model = DistributionModel::parse(&cfg.model)?;
    if model.mean() >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "loynes study needs a negative mean, {} has mean {}",
            cfg.model,
            model.mean()
        )));
    }
    let truth = loynes_true(&model, cfg.root_tol)?;
    let records = run_replicates(cfg, opts, |n, seed| {
        let batch = model.sample(n, seed)?;
        let est = loynes_estimate(&batch, cfg.root_tol);
        let delta = match est.status {
            LoynesStatus::Zero => Finite(0.0),
            _ => est.value,
        };
        Ok(BTreeMap::from([(METRIC_DELTA.to_string(), delta)]))
    })?;
    Ok(StudyResult {
        study: StudyKind::Loynes,
        config: ConfigEcho::Sampling(cfg.clone()),
        summaries: summarise(cfg, &records, true),
        replicates: records,
        loynes_true: Some(truth),
        decay: None,
        meta: meta(start, opts),
    })
}

/// Exact decay slopes of `P(M_n(theta) <= c)` against the entropy prediction.
pub fn decay_study(cfg: &DecayConfig, opts: RunOptions) -> Result<StudyResult> {
    let start = Instant::now();
    let table = sanov_slope(&cfg.mu, cfg.theta, cfg.c, &cfg.n_list)?;
    Ok(StudyResult {
        study: StudyKind::Decay,
        config: ConfigEcho::Decay(cfg.clone()),
        replicates: Vec::new(),
        summaries: Vec::new(),
        loynes_true: None,
        decay: Some(table),
        meta: meta(start, opts),
    })
}

impl StudyResult {
    /// Median of a metric at each `n`, in schedule order.
    pub fn medians(&self, metric: &str) -> Vec<(usize, ExtReal)> {
        self.summaries
            .iter()
            .filter_map(|s| s.metrics.get(metric).map(|q| (s.n, q.q50)))
            .collect()
    }

    /// Flat CSV: one row per replicate (or per `n` for decay studies).
    pub fn to_csv(&self) -> String {
        if let Some(table) = &self.decay {
            let mut out = String::from("n,probability,slope,prediction\n");
            for row in &table.rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.n, row.probability, row.slope, table.prediction
                ));
            }
            return out;
        }
        let names: Vec<String> = self
            .replicates
            .first()
            .map(|r| r.metrics.keys().cloned().collect())
            .unwrap_or_default();
        let mut out = String::from("n,replicate,seed");
        for name in &names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for rec in &self.replicates {
            out.push_str(&format!("{},{},{}", rec.n, rec.replicate, rec.seed));
            for name in &names {
                out.push_str(&format!(",{}", rec.metrics[name]));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
