use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ldrate::awtopology::{aw_composite, report_csv};
use ldrate::entropy::{exact_event_probability, loynes_rate, DEFAULT_TILT_TOL};
use ldrate::estimators::{snapshot_cgf, snapshot_jarzynski, snapshot_mgf};
use ldrate::fenchel::{rate_estimate, rate_estimate_on};
use ldrate::loynes::{loynes_estimate, DEFAULT_ROOT_TOL};
use ldrate::mc_harness::{
    convergence_study, decay_study, loynes_study, DecayConfig, RunOptions, StudyConfig, StudyResult,
};
use ldrate::{DiscreteMeasure, Error, ExtConvexFn, ExtReal, FnGrid, GridSpec, Result, SampleBatch};

const EXIT_INPUT: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ldrate",
    version,
    about = "Large-deviation rate estimation from samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Mgf,
    Cgf,
    Jarzynski,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyName {
    Conv,
    Loynes,
    Decay,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical MGF, CGF or Jarzynski estimator on a theta-grid, as JSON.
    Estimate {
        #[arg(long)]
        samples: PathBuf,
        /// lo:hi:steps, endpoints included; 0 is added if missing
        #[arg(long, allow_hyphen_values = true)]
        grid: GridSpec,
        #[arg(long, value_enum, default_value = "cgf")]
        what: What,
    },
    /// Conjugate of the empirical CGF (the estimated rate function), as JSON.
    Rate {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        theta_window: GridSpec,
        /// Lower end of the output x-window; defaults to just past the extreme slopes.
        #[arg(long, requires = "x_hi", allow_negative_numbers = true)]
        x_lo: Option<f64>,
        #[arg(long, requires = "x_lo", allow_negative_numbers = true)]
        x_hi: Option<f64>,
    },
    /// Per-box Attouch-Wets gaps between two function grids, as CSV.
    Awdist {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        /// Largest box index K.
        #[arg(long)]
        k: u32,
        /// Lattice spacing; 1/(8k) per box by default.
        #[arg(long)]
        h: Option<f64>,
        /// Print the full report (with the composite) as JSON instead.
        #[arg(long)]
        json: bool,
    },
    /// Loynes exponent of the empirical CGF, as JSON.
    Loynes {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ROOT_TOL)]
        tol: f64,
    },
    /// Rate function of the Loynes exponent for a discrete law, as CSV.
    LoynesRate {
        /// JSON file with atoms and weights, or inline `atom=weight,...`.
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
        #[arg(long, allow_hyphen_values = true)]
        x_grid: GridSpec,
        #[arg(long, default_value_t = DEFAULT_TILT_TOL)]
        tol: f64,
    },
    /// Seeded studies, configured by a JSON file.
    Study {
        #[arg(value_enum)]
        which: StudyName,
        #[arg(long)]
        config: PathBuf,
        /// Thread count for replicates; the result does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Leave out run metadata (timing, version) so reruns compare byte for byte.
        #[arg(long)]
        no_meta: bool,
        /// Print one CSV row per replicate instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Exact probability that the empirical MGF at theta is at most c.
    Oracle {
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long)]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERIC
            })
        }
    }
}

fn read_samples(path: &Path) -> Result<SampleBatch> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    SampleBatch::from_reader(BufReader::new(file))
        .map_err(|e| Error::Parse(format!("{}: {}", path.display(), strip_kind(e))))
}

fn strip_kind(e: Error) -> String {
    match e {
        Error::Parse(m) | Error::Io(m) => m,
        other => other.to_string(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_mu(arg: &str) -> Result<DiscreteMeasure> {
    if arg.contains('=') && !Path::new(arg).exists() {
        match ldrate::DistributionModel::parse(&format!("discrete:{arg}"))? {
            ldrate::DistributionModel::Discrete(mu) => Ok(mu),
            _ => unreachable!("discrete spec parses to a discrete model"),
        }
    } else {
        ldrate::distributions::read_measure(arg)
    }
}

fn emit_json(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn emit_study(
    out: &mut impl Write,
    res: &StudyResult,
    csv: bool,
    file: Option<&str>,
) -> Result<()> {
    let text = if csv {
        res.to_csv()
    } else {
        format!("{}\n", res.to_json()?)
    };
    match file {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{path}: {e}"))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<()> {
    match command {
        Command::Estimate {
            samples,
            grid,
            what,
        } => {
            let batch = read_samples(&samples)?;
            let knots = grid.knots_with_zero();
            let fg: FnGrid = match what {
                What::Cgf => snapshot_cgf(&batch, &knots)?.to_grid(),
                What::Mgf => snapshot_mgf(&batch, &knots)?.to_grid(),
                What::Jarzynski => snapshot_jarzynski(&batch, &knots),
            };
            emit_json(out, &fg)
        }
        Command::Rate {
            samples,
            theta_window,
            x_lo,
            x_hi,
        } => {
            let batch = read_samples(&samples)?;
            let knots = theta_window.knots_with_zero();
            let rate = match (x_lo, x_hi) {
                (Some(a), Some(b)) => rate_estimate_on(&batch, &knots, a, b)?,
                _ => rate_estimate(&batch, &knots)?,
            };
            emit_json(out, &rate.to_grid())
        }
        Command::Awdist { f, g, k, h, json } => {
            if k == 0 {
                return Err(Error::InvalidArgument("k must be at least 1".into()));
            }
            if let Some(h) = h {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "h must be positive, got {h}"
                    )));
                }
            }
            let f: ExtConvexFn = read_json(&f)?;
            let g: ExtConvexFn = read_json(&g)?;
            let report = aw_composite(&f, &g, k, h);
            if json {
                emit_json(out, &report)
            } else {
                Ok(out.write_all(report_csv(&report).as_bytes())?)
            }
        }
        Command::Loynes { samples, tol } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::InvalidArgument("tol must be positive".into()));
            }
            let batch = read_samples(&samples)?;
            emit_json(out, &loynes_estimate(&batch, tol))
        }
        Command::LoynesRate { mu, x_grid, tol } => {
            let mu = read_mu(&mu)?;
            writeln!(out, "x,rate")?;
            for x in x_grid.knots() {
                let v: ExtReal = loynes_rate(&mu, x, tol)?;
                writeln!(out, "{x},{v}")?;
            }
            Ok(())
        }
        Command::Study {
            which,
            config,
            workers,
            no_meta,
            csv,
        } => {
            let opts = RunOptions {
                workers,
                with_meta: !no_meta,
            };
            match which {
                StudyName::Conv | StudyName::Loynes => {
                    let cfg: StudyConfig = read_json(&config)?;
                    let res = match which {
                        StudyName::Conv => convergence_study(&cfg, opts)?,
                        _ => loynes_study(&cfg, opts)?,
                    };
                    emit_study(out, &res, csv, cfg.output.as_deref())
                }
                StudyName::Decay => {
                    let cfg: DecayConfig = read_json(&config)?;
                    let res = decay_study(&cfg, opts)?;
                    emit_study(out, &res, csv, cfg.output.as_deref())
                }
            }
        }
        Command::Oracle { mu, theta, c, n } => {
            let mu = read_mu(&mu)?;
            let p = exact_event_probability(&mu, n, theta, c)?;
            #[derive(Serialize)]
            struct Oracle {
                n: usize,
                theta: f64,
                c: f64,
                probability: f64,
            }
            emit_json(
                out,
                &Oracle {
                    n,
                    theta,
                    c,
                    probability: p,
                },
            )
        }
    }
}
