//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ldrate::awtopology::{aw_composite, aw_composite_min, in_vk, rho_k, Membership};
use ldrate::convexfn::{make_fn, ExtConvexFn};
use ldrate::distributions::DistributionModel;
use ldrate::entropy::{
    exact_event_probability, loynes_rate, sanov_prediction, DiscreteMeasure, DEFAULT_TILT_TOL,
};
use ldrate::estimators::SampleBatch;
use ldrate::extreal::ExtReal::{self, Finite, Infinity, NegInfinity};
use ldrate::fenchel::{biconjugate, conjugate, conjugate_on, rate_estimate};
use ldrate::loynes::{dual_probe_from_knots, loynes_dual_check, loynes_estimate, loynes_true};
use ldrate::mc_harness::{
    convergence_study, decay_study, loynes_study, DecayConfig, RunOptions, StudyConfig, METRIC_AW,
    METRIC_SUP,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_secs {
        Ok(())
    } else {
        Err(format!(
            "took {:.2}s, limit {limit_secs}s",
            elapsed.as_secs_f64()
        ))
    }
}

fn fin(v: ExtReal) -> f64 {
    v.finite().expect("finite value")
}

fn nonconvex_base() -> Outcome {
    let start = Instant::now();
    let g = ExtConvexFn::spike(0.0, 0.0);
    let h =
        make_fn(vec![0.0, 1.0 / 3.0], vec![Finite(1.0), Finite(0.0)]).map_err(|e| e.to_string())?;
    let l = ExtConvexFn::spike(0.0, 0.5);
    let spacing = 1.0 / 256.0;
    let rh = rho_k(&g, &h, 2, spacing);
    let rl = rho_k(&g, &l, 2, spacing);
    check!(
        rh.err <= 1.0 / 64.0 && rl.err <= 1.0 / 64.0,
        "err {} exceeds 1/64",
        rh.err
    );
    check!(
        (rh.rho - 1.0 / 3.0).abs() <= rh.err,
        "rho(g,h) = {} not within {} of 1/3",
        rh.rho,
        rh.err
    );
    check!(
        (rl.rho - 0.5).abs() <= rl.err,
        "rho(g,l) = {} not within {} of 1/2",
        rl.rho,
        rl.err
    );
    let vh = in_vk(&h, &g, 2, spacing);
    let vl = in_vk(&l, &g, 2, spacing);
    check!(vh == Membership::In, "h verdict {vh:?}");
    check!(vl == Membership::Out, "l verdict {vl:?}");
    within(start.elapsed(), 1.0)?;
    Ok(format!(
        "rho(g,h)={:.6} rho(g,l)={:.6} err={:.6}, In/Out",
        rh.rho, rl.rho, rh.err
    ))
}

// The sequence is not convex for n < e, so it is handled as the minimum of its two
// convex pieces. Only the parts of a graph within K + 1 (box metric) of the box
// [-K, K]^2 can attain a distance, and every box point is within K + 1 of (0, 1):
// knots with theta < -(2K + 2) or values above 3K + 2 are dropped.
fn truncated_exp(depth: u32) -> ExtConvexFn {
    let left = -(2.0 * depth as f64 + 2.0);
    let h = 1.0 / 64.0;
    let steps = ((1.0 - left) / h).round() as usize;
    let mut knots: Vec<f64> = (0..=steps).map(|i| left + i as f64 * h).collect();
    *knots.last_mut().unwrap() = 1.0;
    ExtConvexFn::from_fn(knots, |t| Finite(t.exp())).expect("convex")
}

fn linear_tail(n: u32, depth: u32) -> ExtConvexFn {
    let e = 1f64.exp();
    let end = 1.0 + (3.0 * depth as f64 + 2.0 - e) / n as f64;
    make_fn(
        vec![1.0, end],
        vec![Finite(e), Finite(e + n as f64 * (end - 1.0))],
    )
    .expect("convex")
}

fn aw_examples() -> Outcome {
    let start = Instant::now();
    let depth = 4;
    let f = truncated_exp(depth);
    let mut composites = Vec::new();
    for p in 0..=8 {
        let n = 1u32 << p;
        let fnn = [f.clone(), linear_tail(n, depth)];
        composites.push((
            n,
            aw_composite_min(&fnn, std::slice::from_ref(&f), depth, None).composite,
        ));
    }
    for w in composites.windows(2) {
        check!(
            w[1].1 < w[0].1,
            "composite not decreasing: n={} {} -> n={} {}",
            w[0].0,
            w[0].1,
            w[1].0,
            w[1].1
        );
    }
    let last = composites.last().unwrap().1;
    check!(last < 0.02, "composite at n=256 is {last}");
    let n = 100.0;
    let spike_seq = make_fn(vec![-1.0 / n, 1.0 / n], vec![Finite(0.0), Finite(2.0)])
        .map_err(|e| e.to_string())?;
    let spike = aw_composite(&spike_seq, &ExtConvexFn::spike(0.0, 0.0), depth, None).composite;
    check!(spike < 0.05, "spike-approach composite at n=100 is {spike}");
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "exp: n=1 {:.5} .. n=256 {:.6}; spike n=100 {:.6}",
        composites[0].1, last, spike
    ))
}

fn random_convex(rng: &mut ChaCha8Rng) -> ExtConvexFn {
    let m = rng.random_range(2..40);
    let mut knots = vec![rng.random_range(-5.0..5.0)];
    let mut values = vec![rng.random_range(-3.0..3.0)];
    let mut slope: f64 = rng.random_range(-5.0..5.0);
    for _ in 1..m {
        let dx: f64 = rng.random_range(0.01..1.0);
        slope += rng.random_range(0.0..2.0);
        knots.push(knots.last().unwrap() + dx);
        values.push(values.last().unwrap() + slope * dx);
    }
    let mut ks = Vec::new();
    let mut vs = Vec::new();
    let pad_l = rng.random_range(0..3);
    let pad_r = rng.random_range(0..3);
    for i in (1..=pad_l).rev() {
        ks.push(knots[0] - i as f64);
        vs.push(Infinity);
    }
    ks.extend(&knots);
    vs.extend(values.iter().map(|&v| Finite(v)));
    for i in 1..=pad_r {
        ks.push(knots[m - 1] + i as f64);
        vs.push(Infinity);
    }
    make_fn(ks, vs).expect("random function is convex")
}

fn fenchel_involution() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let f = random_convex(&mut rng);
        let ff = biconjugate(&f);
        for (i, (a, b)) in f.values().iter().zip(ff.values()).enumerate() {
            match (a, b) {
                (Finite(x), Finite(y)) => {
                    worst = worst.max((x - y).abs());
                    check!((x - y).abs() <= 1e-9, "trial {trial} knot {i}: {x} vs {y}");
                }
                _ => check!(a == b, "trial {trial} knot {i}: {a} vs {b}"),
            }
        }
    }

    let knots: Vec<f64> = (-500..=500).map(|i| i as f64 * 0.01).collect();
    let quad = ExtConvexFn::from_fn(knots, |t| Finite(t * t / 2.0)).map_err(|e| e.to_string())?;
    let qs = conjugate(&quad);
    let mut quad_err: f64 = 0.0;
    for i in -4000..=4000 {
        let x = i as f64 * 1e-3;
        quad_err = quad_err.max((fin(qs.eval(x)) - x * x / 2.0).abs());
    }
    check!(quad_err <= 1e-3, "quadratic conjugate error {quad_err}");

    let abs = make_fn(
        vec![-1.0, 0.0, 1.0],
        vec![Finite(1.0), Finite(0.0), Finite(1.0)],
    )
    .map_err(|e| e.to_string())?;
    let abs_conj = conjugate_on(&abs, -3.0, 3.0).map_err(|e| e.to_string())?;
    for (&x, &v) in abs_conj.window_knots().iter().zip(abs_conj.window_values()) {
        let want = (x.abs() - 1.0).max(0.0);
        check!(v == want, "|theta| conjugate at {x}: {v} vs {want}");
    }
    check!(
        abs_conj.window_knots().contains(&-1.0) && abs_conj.window_knots().contains(&1.0),
        "breakpoints missing"
    );
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "biconjugate max err {worst:.2e}; quadratic err {quad_err:.2e}; |theta| exact"
    ))
}

fn loynes_closed_forms() -> Outcome {
    let start = Instant::now();
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let batch = SampleBatch::new(vec![-2.0, 1.0]).map_err(|e| e.to_string())?;
    let est = fin(loynes_estimate(&batch, 1e-12).value);
    check!((est - golden).abs() <= 1e-9, "estimate {est} vs {golden}");
    let normal = loynes_true(&DistributionModel::normal(-1.0, 1.0).unwrap(), 1e-12)
        .map_err(|e| e.to_string())?;
    check!(
        normal.value == Finite(2.0),
        "normal exponent {}",
        normal.value
    );
    let tse = loynes_true(&DistributionModel::two_sided_exp(1.0, 3.0).unwrap(), 1e-12)
        .map_err(|e| e.to_string())?;
    check!(
        (fin(tse.value) - 1.0).abs() <= 1e-9,
        "two-sided exponent {}",
        tse.value
    );
    let knots: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.01).collect();
    let rate = rate_estimate(&batch, &knots).map_err(|e| e.to_string())?;
    let dual =
        fin(loynes_dual_check(&rate, &dual_probe_from_knots(&rate)).map_err(|e| e.to_string())?);
    check!((dual - est).abs() <= 0.02, "dual {dual} vs estimate {est}");
    within(start.elapsed(), 5.0)?;
    Ok(format!("estimate {est:.12}; dual {dual:.6}"))
}

fn weak_law_scaling() -> Outcome {
    let start = Instant::now();
    let cfg = StudyConfig::new("normal:0,1", vec![100, 1000, 10000], 50, 42);
    let res = convergence_study(&cfg, RunOptions::default()).map_err(|e| e.to_string())?;
    let aw: Vec<f64> = res
        .medians(METRIC_AW)
        .into_iter()
        .map(|(_, v)| fin(v))
        .collect();
    let sup: Vec<f64> = res
        .medians(METRIC_SUP)
        .into_iter()
        .map(|(_, v)| fin(v))
        .collect();
    check!(
        aw.windows(2).all(|w| w[1] < w[0]),
        "aw medians not decreasing: {aw:?}"
    );
    let ratios: Vec<f64> = sup.windows(2).map(|w| w[0] / w[1]).collect();
    check!(
        ratios.iter().all(|r| (1.5..=6.0).contains(r)),
        "sup ratios {ratios:?} outside [1.5, 6]"
    );
    within(start.elapsed(), 120.0)?;
    Ok(format!("aw medians {aw:.5?}; sup ratios {ratios:.3?}"))
}

fn exact_slope() -> Outcome {
    let start = Instant::now();
    let mu = DiscreteMeasure::from_pairs(&[(-1.0, 0.7), (1.0, 0.3)]).map_err(|e| e.to_string())?;
    let p1 = exact_event_probability(&mu, 1, 1.0, 1.0).map_err(|e| e.to_string())?;
    let p2 = exact_event_probability(&mu, 2, 1.0, 1.0).map_err(|e| e.to_string())?;
    check!((p1 - 0.7).abs() <= 1e-12, "P(n=1) = {p1}");
    check!((p2 - 0.49).abs() <= 1e-12, "P(n=2) = {p2}");
    let p40 = exact_event_probability(&mu, 40, 1.0, 1.0).map_err(|e| e.to_string())?;
    let slope = -p40.ln() / 40.0;
    let pred = fin(sanov_prediction(&mu, 1.0, 1.0, DEFAULT_TILT_TOL));
    within(start.elapsed(), 60.0)?;
    check!(
        (slope - pred).abs() <= 0.25 * pred,
        "slope at n=40 is {slope:.6}, prediction {pred:.7} (ratio {:.2}); P(n=40) = {p40:.6}",
        slope / pred
    );
    Ok(format!("slope {slope:.6} vs prediction {pred:.7}"))
}

fn loynes_rate_shape() -> Outcome {
    let start = Instant::now();
    let mu = DiscreteMeasure::from_pairs(&[(-2.0, 0.5), (1.0, 0.5)]).map_err(|e| e.to_string())?;
    let delta = fin(loynes_true(&DistributionModel::Discrete(mu.clone()), 1e-13)
        .map_err(|e| e.to_string())?
        .value);
    let xs: Vec<f64> = (0..50).map(|i| 2.0 * i as f64 / 49.0).collect();
    let mut vals = Vec::new();
    for &x in &xs {
        let v = loynes_rate(&mu, x, 1e-12).map_err(|e| e.to_string())?;
        check!(v.is_finite(), "I_Lo({x}) = {v}");
        vals.push(fin(v));
    }
    let imin = (0..vals.len())
        .min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .unwrap();
    check!(
        vals[..=imin].windows(2).all(|w| w[1] <= w[0]),
        "not decreasing before the minimum"
    );
    check!(
        vals[imin..].windows(2).all(|w| w[1] >= w[0]),
        "not increasing after the minimum"
    );
    check!(
        imin > 0 && imin < vals.len() - 1,
        "minimum at the grid edge"
    );
    let at_delta = fin(loynes_rate(&mu, delta, 1e-12).map_err(|e| e.to_string())?);
    check!(at_delta.abs() <= 1e-8, "I_Lo(delta) = {at_delta}");
    for (&x, &v) in xs.iter().zip(&vals) {
        if x >= delta + 0.05 {
            check!(v > 0.0, "I_Lo({x}) = {v} not positive");
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "delta {delta:.9}; I_Lo(delta) = {at_delta:.1e}; minimum at x = {:.4}",
        xs[imin]
    ))
}

fn classification_table() -> Outcome {
    let mu = DiscreteMeasure::from_pairs(&[(-1.0, 0.5), (2.0, 0.5)]).unwrap();
    let rows: Vec<(DistributionModel, (ExtReal, ExtReal))> = vec![
        (
            DistributionModel::uniform(-1.0, 1.0).unwrap(),
            (NegInfinity, Infinity),
        ),
        (DistributionModel::point_mass(3.0), (NegInfinity, Infinity)),
        (DistributionModel::Discrete(mu), (NegInfinity, Infinity)),
        (
            DistributionModel::normal(0.0, 1.0).unwrap(),
            (Finite(0.0), Finite(0.0)),
        ),
        (
            DistributionModel::double_exp_tail(1.5).unwrap(),
            (NegInfinity, Finite(1.5)),
        ),
        (
            DistributionModel::super_exp_tail(2.0).unwrap(),
            (NegInfinity, Infinity),
        ),
        (
            DistributionModel::exponential(2.0).unwrap(),
            (NegInfinity, Finite(0.0)),
        ),
    ];
    for (m, want) in &rows {
        let got = m.alpha0_beta0();
        check!(got == *want, "{m}: {got:?} vs {want:?}");
    }
    Ok(format!("{} rows match", rows.len()))
}

fn determinism() -> Outcome {
    let mut conv = StudyConfig::new("normal:0,1", vec![50, 500], 6, 7);
    conv.aw_depth = 2;
    let loy = StudyConfig::new("discrete:-2=0.5,1=0.5", vec![100, 1000], 6, 7);
    let mu = DiscreteMeasure::from_pairs(&[(-1.0, 0.7), (1.0, 0.3)]).unwrap();
    let decay = DecayConfig {
        mu,
        theta: 1.0,
        c: 1.0,
        n_list: vec![5, 10, 20],
        output: None,
    };
    for workers in [1usize, 2, 8] {
        let opts = RunOptions {
            workers: Some(workers),
            with_meta: false,
        };
        let base = RunOptions {
            workers: Some(1),
            with_meta: false,
        };
        let pairs = [
            (
                convergence_study(&conv, base),
                convergence_study(&conv, opts),
            ),
            (loynes_study(&loy, base), loynes_study(&loy, opts)),
            (decay_study(&decay, base), decay_study(&decay, opts)),
        ];
        for (a, b) in pairs {
            let a = a
                .map_err(|e| e.to_string())?
                .to_json()
                .map_err(|e| e.to_string())?;
            let b = b
                .map_err(|e| e.to_string())?
                .to_json()
                .map_err(|e| e.to_string())?;
            check!(a == b, "output differs with {workers} workers");
        }
    }
    Ok("conv, loynes and decay identical across 1, 2 and 8 workers".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("nonconvex base", nonconvex_base),
        ("AW convergence examples", aw_examples),
        ("Fenchel involution and conjugates", fenchel_involution),
        ("Loynes closed forms", loynes_closed_forms),
        ("weak-law scaling", weak_law_scaling),
        ("exact decay slope", exact_slope),
        ("Loynes rate shape", loynes_rate_shape),
        ("tail classification", classification_table),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
