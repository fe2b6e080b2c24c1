//! Scenario construction and check execution for `stflow run`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use stflow_core::lfde::{self, big_bang, run_flow};
use stflow_core::measures::{self, Background, TestFunction};
use stflow_core::uniformize::{self, hyperbolic_disk, BoundaryValue, HyperbolicFactor, LiouvilleOptions};
use stflow_core::verify::{self, RigidityConfig, Witness};
use stflow_core::{
    BoundaryPolicy, Curve, DiscreteMeasure, FlowState, Grid, ImplicitStepper, Mask, Point, SpacetimeDomain, Trajectory,
    Verdict, VerificationReport,
};

use crate::config::{BackgroundSpec, CheckSpec, DomainSpec, ExperimentConfig, FlowSpec, MeasureSpec};

/// Why a run stopped before producing a verdict.
#[derive(Debug)]
pub enum RunError {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e:#}"),
            RunError::Solver(e) => write!(f, "solver failure: {e:#}"),
        }
    }
}

/// Everything a check may need.
pub struct Scenario {
    pub grid: Grid,
    pub domain: SpacetimeDomain,
    pub factor: HyperbolicFactor,
    pub measure: Option<(DiscreteMeasure, f64, f64)>,
    pub traj: Trajectory,
    pub tau: f64,
}

fn center(grid: &Grid) -> Point {
    let h = grid.spacing();
    let o = grid.origin();
    Point::new(o.x + grid.nx() as f64 * h / 2.0, o.y + grid.ny() as f64 * h / 2.0)
}

fn build_domain(cfg: &ExperimentConfig, grid: Grid, times: &[f64]) -> Result<SpacetimeDomain> {
    let c = Point::default();
    let final_time = times.last().copied().unwrap_or(1.0) + cfg.time.stride;
    let times = times.to_vec();
    let s = match &cfg.domain {
        DomainSpec::Disk { radius } => SpacetimeDomain::from_fn(grid, times, final_time, |_| Mask::disk(grid, c, *radius))?,
        DomainSpec::GrowingDisk { radius, growth } => {
            SpacetimeDomain::from_fn(grid, times, final_time, |t| Mask::disk(grid, c, radius + growth * t))?
        }
        DomainSpec::PuncturedDisk { radius, puncture, fill_time } => {
            let cell = grid.cell_of(*puncture).ok_or_else(|| anyhow!("puncture lies outside the grid"))?;
            SpacetimeDomain::from_fn(grid, times, final_time, |t| {
                let mut m = Mask::disk(grid, c, *radius);
                if t < *fill_time {
                    m.set(cell, false);
                }
                m
            })?
        }
        DomainSpec::Annulus { inner, outer } => SpacetimeDomain::from_fn(grid, times, final_time, |_| {
            Mask::from_fn(grid, |z| z.norm() < *outer && z.norm() > *inner)
        })?,
        DomainSpec::File(p) => SpacetimeDomain::load(p).with_context(|| format!("loading {}", p.display()))?,
    };
    Ok(s)
}

fn factor_for(cfg: &ExperimentConfig, mask: &Mask) -> Result<HyperbolicFactor> {
    match &cfg.domain {
        DomainSpec::Disk { radius } if *mask == Mask::disk(*mask.grid(), Point::default(), *radius) => {
            Ok(hyperbolic_disk(*mask.grid(), Point::default(), *radius)?)
        }
        _ => Ok(uniformize::solve_liouville(mask, &BoundaryValue::Uniform(cfg.phi_b), LiouvilleOptions::default())?),
    }
}

fn build_measure(spec: &MeasureSpec, grid: Grid) -> Result<DiscreteMeasure> {
    Ok(match spec {
        MeasureSpec::Disk { center, radius, mass } => measures::measure_on_perfect_set(&Mask::closed_disk(grid, *center, *radius), *mass)?,
        MeasureSpec::File(p) => {
            let m = DiscreteMeasure::load(p).with_context(|| format!("loading {}", p.display()))?;
            if !m.grid().same_as(&grid) {
                bail!("measure grid does not match [grid]");
            }
            m
        }
    })
}

/// Builds the domain and runs (or loads) the flow.
pub fn build(cfg: &ExperimentConfig) -> std::result::Result<Scenario, RunError> {
    let grid = Grid::centered(cfg.grid.half_width, cfg.grid.spacing).map_err(|e| RunError::Config(e.into()))?;
    let times = cfg.time.snapshots();
    let domain = build_domain(cfg, grid, &times).map_err(RunError::Config)?;
    if !domain.grid().same_as(&grid) {
        return Err(RunError::Config(anyhow!("domain grid does not match [grid]")));
    }
    let mask0 = domain.slice(0).clone();
    let factor = factor_for(cfg, &mask0).map_err(RunError::Solver)?;
    let stepper = ImplicitStepper::default();
    let tau = cfg.time.tau;
    let mut measure = None;
    let start = match &cfg.flow {
        FlowSpec::BigBang => big_bang(&factor, cfg.time.t_init).map_err(|e| RunError::Solver(e.into()))?,
        FlowSpec::Flat { value } => {
            let u = stflow_core::Field::constant(grid, *value);
            FlowState::new(cfg.time.t_init, u.clone(), mask0.clone(), BoundaryPolicy::frozen_from(&u)).map_err(|e| RunError::Config(e.into()))?
        }
        FlowSpec::Measure { measure: spec, sigma, background } => {
            let mu = build_measure(spec, grid).map_err(RunError::Config)?;
            let sigma = sigma.unwrap_or(2.0 * grid.spacing());
            let (bg, floor) = match background {
                BackgroundSpec::Floor(f) => (Background::Floor(*f), *f),
                BackgroundSpec::Complete => {
                    let h = grid.spacing();
                    let r = grid.nx().min(grid.ny()) as f64 * h / 2.0 - h;
                    (Background::Complete(hyperbolic_disk(grid, center(&grid), r).map_err(|e| RunError::Config(e.into()))?), 0.0)
                }
            };
            let s = measures::weak_start(&mu, sigma, cfg.time.t_init, &bg).map_err(|e| RunError::Config(e.into()))?;
            measure = Some((mu, sigma, floor));
            s
        }
        FlowSpec::File(dir) => {
            let traj = Trajectory::load(dir).map_err(|e| RunError::Config(anyhow!(e).context(format!("loading {}", dir.display()))))?;
            if !traj.mask().grid().same_as(&grid) {
                return Err(RunError::Config(anyhow!("trajectory grid does not match [grid]")));
            }
            return Ok(Scenario { grid, domain, factor, measure, traj, tau });
        }
    };
    let traj = run_flow(&stepper, &start, &times[1..], tau).map_err(|e| RunError::Solver(e.into()))?;
    Ok(Scenario { grid, domain, factor, measure, traj, tau })
}

/// Report for the one-sided continuity criterion.
pub fn continuity_report(domain: &SpacetimeDomain) -> Result<VerificationReport> {
    let c = domain.is_continuous()?;
    let witness = match c.violations.first() {
        Some(&(cell, k)) => Witness::cell(cell, domain.grid().center(cell), Some(domain.times()[k])),
        None => Witness::default(),
    };
    Ok(VerificationReport::new("continuity", -(c.violations.len() as f64), 0.0, witness)
        .with_detail("violations", c.violations.len() as f64))
}

pub fn expanding_report(domain: &SpacetimeDomain) -> VerificationReport {
    let e = domain.is_expanding();
    VerificationReport::new("expanding", if e { 0.0 } else { -1.0 }, 0.0, Witness::default())
}

/// Perfect iff the Cantor–Bendixson scattered part is empty.
pub fn perfect_set_report(set: &Mask) -> VerificationReport {
    let cb = stflow_core::cantor_bendixson(set, stflow_core::Adjacency::Four);
    let witness = match cb.scattered.iter().next() {
        Some(cell) => Witness::cell(cell, set.grid().center(cell), None),
        None => Witness::default(),
    };
    VerificationReport::new("perfect-set", -(cb.scattered.count() as f64), 0.0, witness)
        .with_detail("perfect_cells", cb.perfect.count() as f64)
        .with_detail("scattered_cells", cb.scattered.count() as f64)
        .with_detail("rounds", cb.rounds as f64)
}

fn need_measure(s: &Scenario, check: &str) -> Result<(DiscreteMeasure, f64, f64)> {
    s.measure.clone().ok_or_else(|| anyhow!("check `{check}` needs a mollified-measure flow"))
}

/// Runs one configured check. Errors are configuration problems.
pub fn run_check(cfg: &ExperimentConfig, s: &Scenario, check: &CheckSpec) -> Result<Vec<VerificationReport>> {
    let traj = &s.traj;
    let last = *traj.times().last().unwrap();
    let state_at = |t: f64| -> Result<FlowState> {
        let k = traj.times().iter().position(|&x| (x - t).abs() <= 1e-12 * t.max(1.0));
        match k {
            Some(k) => Ok(traj.state(k)),
            None => Ok(FlowState::new(t, traj.at(t)?, traj.mask().clone(), traj.boundary().clone())?),
        }
    };
    let reports = match check.name.as_str() {
        "harnack" => {
            let t0 = check.get_or("t0", traj.times()[0])?;
            let t1 = check.get_or("t1", last)?;
            let from = check.point_or("from", Point::default())?;
            let to = check.point_or("to", Point::new(0.5, 0.0))?;
            let curve = Curve::segment(from, to)?;
            vec![verify::check_harnack(traj, &curve, t0, t1, check.get_or("hindsight", 0.0)?, check.get_or("tol", 0.01)?)?]
        }
        "chen" => {
            let state = state_at(check.get_or("t", last)?)?;
            let band = traj.mask().core_band(check.get_or("band", 0.5)?);
            vec![lfde::check_chen_global(&state, check.get_or("hindsight", 0.0)?, s.tau, &band)?]
        }
        "hyperbolic-lower" => {
            let state = state_at(check.get_or("t", last)?)?;
            vec![verify::check_hyperbolic_lower(&state, &s.factor)?]
        }
        "expanding" => vec![expanding_report(&s.domain)],
        "continuity" => vec![continuity_report(&s.domain)?],
        "properness" => {
            let factors = uniformize::slice_factors(&s.domain, cfg.phi_b, LiouvilleOptions::default())?;
            let levels = check.list_or("levels", &[10.0])?;
            let mut out = Vec::new();
            for p in uniformize::properness_profile(&s.domain, &factors, check.get_or("eps", 0.1)?, &levels)? {
                let witness = match p.witnesses.first() {
                    Some(&(cell, k)) => Witness::cell(cell, s.grid.center(cell), Some(s.domain.times()[k])),
                    None => Witness::default(),
                };
                out.push(
                    VerificationReport::new(format!("properness/L={}", p.level), -(p.witnesses.len() as f64), 0.0, witness)
                        .with_detail("level", p.level),
                );
            }
            out
        }
        "weak-convergence" => {
            let (mu, sigma, floor) = need_measure(s, "weak-convergence")?;
            // The constant test function also integrates the background, which
            // is unbounded for a complete one.
            let complete = matches!(cfg.flow, FlowSpec::Measure { background: BackgroundSpec::Complete, .. });
            let mut tests = Vec::new();
            if check.get_or("total_mass", !complete)? {
                tests.push(TestFunction::One);
            }
            if let Some(r) = check.get::<f64>("bump_radius")? {
                tests.push(TestFunction::Bump { center: check.point_or("bump_center", Point::default())?, radius: r });
            }
            if tests.is_empty() {
                bail!("weak-convergence needs total_mass = true or a bump_radius");
            }
            vec![measures::check_weak_convergence(traj, &mu, &tests, sigma, floor)?]
        }
        "volume-decay" => {
            let (mu, sigma, _) = need_measure(s, "volume-decay")?;
            let r = check.get_or("r", 1.0)?;
            let big_r = check.get_or("R", 2.0 * r)?;
            vec![measures::check_volume_decay(traj, &mu, r, big_r, check.point_or("center", Point::default())?, sigma)?]
        }
        "l1-linf" => {
            let (mu, _, _) = need_measure(s, "l1-linf")?;
            let r = check.get_or("r", 0.25)?;
            let c = check.point_or("center", Point::default())?;
            let mut rep = measures::check_l1_linf(&[(traj, &mu)], r, c, check.get_or("cap", 100.0)?, check.get_or("ratio", 10.0)?)?;
            for (t, c0) in measures::l1_linf_constants(traj, &mu, r, c)? {
                rep = rep.with_detail(&format!("c0_t_{t}"), c0);
            }
            vec![rep]
        }
        "blowup" => {
            let (mu, sigma, _) = need_measure(s, "blowup")?;
            let smooth = measures::mollify(mu.density(), sigma)?;
            let support = Mask::from_fn_idx(s.grid, |k| smooth.get(k) > 0.0);
            let band = traj.mask().core_band(check.get_or("band", 0.5)?);
            let b = measures::initial_time_blowup(traj, &support, check.get_or("buffer", 5.0)?, &band, check.get_or("tol", 0.05)?)?;
            let ledger_tol = check.get_or("ledger_tol", 1e-6)?;
            let ledger = VerificationReport::new("blowup-ledger", -b.max_violation, ledger_tol, Witness::default())
                .with_detail("region_cells", b.region.count() as f64);
            vec![ledger, b.curvature]
        }
        "rigidity" => {
            let rc = RigidityConfig {
                early: check.get_or("early", 0)?,
                late: check.get_or("late", s.domain.len() - 1)?,
                lambdas: check.list_or("lambdas", &[1.0, 4.0, 16.0, 64.0])?,
                mass: check.get_or("mass", 1.0)?,
                probe_radius: check.get_or("probe_radius", 0.0)?,
                ..RigidityConfig::default()
            };
            verify::rigidity_pipeline(&s.domain, traj, &rc)?
        }
        other => bail!("unknown check `{other}`"),
    };
    let h = s.grid.spacing();
    Ok(reports.into_iter().map(|r| r.with_detail("h", h)).collect())
}

/// Outcome of one configured experiment.
pub struct RunOutcome {
    pub reports: Vec<VerificationReport>,
    /// 0 all pass, 1 some check failed, before any expected-fail inversion.
    pub raw_status: i32,
}

pub fn status_of(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        1
    } else {
        0
    }
}

/// Expected-fail swaps pass and fail; configuration and solver errors keep
/// their codes.
pub fn apply_expectation(status: i32, expect_fail: bool) -> i32 {
    match (expect_fail, status) {
        (true, 0) => 1,
        (true, 1) => 0,
        (_, s) => s,
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> std::result::Result<RunOutcome, RunError> {
    let scenario = build(cfg)?;
    std::fs::create_dir_all(out).map_err(|e| RunError::Config(anyhow!(e).context(format!("creating {}", out.display()))))?;
    let io = |e: stflow_core::Error| RunError::Config(anyhow!(e).context("writing artifacts"));
    scenario.traj.save(out.join("trajectory")).map_err(io)?;
    scenario.domain.save(out.join("domain.spacetime")).map_err(io)?;
    let mut reports = Vec::new();
    for check in &cfg.checks {
        let r = run_check(cfg, &scenario, check).map_err(|e| RunError::Config(e.context(format!("check `{}`", check.name))))?;
        reports.extend(r);
    }
    let reports: Vec<_> = reports.into_iter().map(|r| match cfg.seed {
        Some(seed) => r.with_detail("seed", seed as f64),
        None => r,
    }).collect();
    verify::save_jsonl(out.join("reports.jsonl"), &reports).map_err(io)?;
    let mut csv = Vec::new();
    verify::write_csv(&mut csv, &reports).map_err(io)?;
    std::fs::write(out.join("reports.csv"), csv).map_err(|e| io(e.into()))?;
    let raw_status = status_of(&reports);
    let mut summary = format!("scenario {}\n", cfg.scenario);
    for r in &reports {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "n/a",
        };
        summary.push_str(&format!("{:<32} {verdict:<5} margin {:+.6e} tol {:.3e}\n", r.name, r.margin, r.tolerance));
    }
    summary.push_str(&format!(
        "expect_fail {}\nexit {}\n",
        cfg.expect_fail,
        apply_expectation(raw_status, cfg.expect_fail)
    ));
    std::fs::write(out.join("summary.txt"), summary).map_err(|e| io(e.into()))?;
    Ok(RunOutcome { reports, raw_status })
}
