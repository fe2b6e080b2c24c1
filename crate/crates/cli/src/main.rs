#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod plots;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use stflow_core::grid::io::{load_field, load_mask};
use stflow_core::uniformize::{schwarz_compare, HyperbolicFactor, Provenance};
use stflow_core::verify::{self, VerificationReport};
use stflow_core::{lfde, Curve, SpacetimeDomain, Trajectory};

use config::{parse_point, ExperimentConfig};
use scenario::{apply_expectation, RunError};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "stflow", version, about = "Conformal Ricci flow experiments on planar spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment configs, writing artifacts and reports.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Configs run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output root; each config writes to `<out>/<scenario>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single check on stored artifacts, printing JSONL reports.
    Verify {
        #[command(subcommand)]
        check: VerifyCheck,
    },
    /// Regroup the reports under a directory into CSV tables in `plots/`.
    EmitPlots { reportdir: PathBuf },
}

#[derive(Subcommand)]
enum VerifyCheck {
    /// Slices are nested increasing.
    Expanding { spacetime: PathBuf },
    /// One-sided continuity of a spacetime.
    Continuity { spacetime: PathBuf },
    /// A mask has no scattered part.
    PerfectSet { mask: PathBuf },
    /// Curvature lower bound on the last snapshot of a trajectory.
    Chen {
        trajectory: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        hindsight: f64,
        /// Step used to produce the trajectory (sets the tolerance).
        #[arg(long)]
        tau: f64,
        /// Core band fraction of the inradius.
        #[arg(long, default_value_t = 0.5)]
        band: f64,
    },
    /// Length growth of a segment between two stored times.
    Harnack {
        trajectory: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long, default_value = "0,0")]
        from: String,
        #[arg(long, default_value = "0.5,0")]
        to: String,
        #[arg(long, default_value_t = 0.0)]
        hindsight: f64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
    /// Inner factor dominates the outer one on the inner domain.
    Schwarz { inner_field: PathBuf, inner_mask: PathBuf, outer_field: PathBuf, outer_mask: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { configs, jobs, out } => run_all(&configs, jobs.max(1), out.as_deref()),
        Command::Verify { check } => match verify_cmd(check) {
            Ok(reports) => {
                let mut stdout = std::io::stdout().lock();
                if let Err(e) = verify::write_jsonl(&mut stdout, &reports) {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
                let _ = stdout.flush();
                ExitCode::from(scenario::status_of(&reports) as u8)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::EmitPlots { reportdir } => match plots::emit(&reportdir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}

fn out_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    match out {
        Some(o) => o.join(&cfg.scenario),
        None => cfg.base.join("out").join(&cfg.scenario),
    }
}

/// Exit status for one config.
fn run_one(path: &Path, out: Option<&Path>) -> u8 {
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: configuration error: {e:#}", path.display());
            return EXIT_CONFIG;
        }
    };
    let dir = out_dir(&cfg, out);
    match scenario::run(&cfg, &dir) {
        Ok(o) => {
            for r in &o.reports {
                log::info!("{}: {} {:?} margin {:e}", cfg.scenario, r.name, r.verdict, r.margin);
            }
            let status = apply_expectation(o.raw_status, cfg.expect_fail);
            println!(
                "{}: {} reports, {} failing{} -> exit {status} ({})",
                cfg.scenario,
                o.reports.len(),
                o.reports.iter().filter(|r| r.is_failure()).count(),
                if cfg.expect_fail { ", expected to fail" } else { "" },
                dir.display()
            );
            status as u8
        }
        Err(e) => {
            eprintln!("{}: {e}", cfg.scenario);
            match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::Solver(_) => EXIT_SOLVER,
            }
        }
    }
}

/// Runs configs on `jobs` worker threads; the exit code is the largest
/// per-config status.
fn run_all(configs: &[PathBuf], jobs: usize, out: Option<&Path>) -> ExitCode {
    let next = AtomicUsize::new(0);
    let statuses = Mutex::new(vec![0u8; configs.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = configs.get(i) else { break };
                let status = run_one(path, out);
                statuses.lock().unwrap()[i] = status;
            });
        }
    });
    let worst = statuses.into_inner().unwrap().into_iter().max().unwrap_or(0);
    ExitCode::from(worst)
}

fn load_factor(field: &Path, mask: &Path) -> Result<HyperbolicFactor> {
    let f = load_field(field).with_context(|| format!("loading {}", field.display()))?;
    let m = load_mask(mask).with_context(|| format!("loading {}", mask.display()))?;
    let name = field.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(HyperbolicFactor::new(f, m, Provenance::ClosedForm { name })?)
}

fn verify_cmd(check: VerifyCheck) -> Result<Vec<VerificationReport>> {
    let load_st = |p: &Path| SpacetimeDomain::load(p).with_context(|| format!("loading {}", p.display()));
    let load_traj = |p: &Path| Trajectory::load(p).with_context(|| format!("loading {}", p.display()));
    Ok(match check {
        VerifyCheck::Expanding { spacetime } => vec![scenario::expanding_report(&load_st(&spacetime)?)],
        VerifyCheck::Continuity { spacetime } => vec![scenario::continuity_report(&load_st(&spacetime)?)?],
        VerifyCheck::PerfectSet { mask } => {
            vec![scenario::perfect_set_report(&load_mask(&mask).with_context(|| format!("loading {}", mask.display()))?)]
        }
        VerifyCheck::Chen { trajectory, hindsight, tau, band } => {
            if !(tau > 0.0) {
                bail!("--tau must be positive");
            }
            let traj = load_traj(&trajectory)?;
            let state = traj.last_state();
            let band = traj.mask().core_band(band);
            vec![lfde::check_chen_global(&state, hindsight, tau, &band)?]
        }
        VerifyCheck::Harnack { trajectory, t0, t1, from, to, hindsight, tol } => {
            let traj = load_traj(&trajectory)?;
            let curve = Curve::segment(parse_point(&from)?, parse_point(&to)?)?;
            vec![verify::check_harnack(&traj, &curve, t0, t1, hindsight, tol)?]
        }
        VerifyCheck::Schwarz { inner_field, inner_mask, outer_field, outer_mask } => {
            let inner = load_factor(&inner_field, &inner_mask)?;
            let outer = load_factor(&outer_field, &outer_mask)?;
            if !inner.mask().is_subset(outer.mask()).map_err(|e| anyhow!(e))? {
                bail!("inner mask is not contained in the outer mask");
            }
            vec![schwarz_compare(&inner, &outer)?]
        }
    })
}
