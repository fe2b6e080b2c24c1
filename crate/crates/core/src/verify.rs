//! Inequality checks with machine-readable reports.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{curve_length, Curve, Field, Mask, Point};
use crate::lfde::{FlowState, ImplicitStepper, Trajectory};
use crate::measures::{self, Background, DiscreteMeasure};
use crate::spacetime::{cantor_bendixson, SpacetimeDomain};
use crate::uniformize::{gradient_norm, hyperbolic_disk, HyperbolicFactor};
use crate::Adjacency;

/// Gap used for strict hypotheses such as `v > u`.
pub const DELTA_STRICT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// Location of the worst slack.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Witness {
    pub cell: Option<usize>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub t: Option<f64>,
}

impl Witness {
    pub fn cell(cell: usize, p: Point, t: Option<f64>) -> Self {
        Self { cell: Some(cell), x: Some(p.x), y: Some(p.y), t }
    }

    pub fn time(t: f64) -> Self {
        Self { t: Some(t), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub digest: String,
    pub verdict: Verdict,
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub witness: Witness,
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    /// A report whose verdict follows from `margin ≥ −tolerance`.
    pub fn new(name: impl Into<String>, margin: f64, tolerance: f64, witness: Witness) -> Self {
        let pass = margin >= -tolerance;
        Self {
            name: name.into(),
            digest: String::new(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            pass,
            margin,
            tolerance,
            witness,
            details: BTreeMap::new(),
            note: None,
        }
    }

    /// Hypotheses of the checked statement do not hold; `margin` is the
    /// hypothesis slack. `pass` still mirrors the margin.
    pub fn not_applicable(name: impl Into<String>, margin: f64, tolerance: f64, witness: Witness) -> Self {
        let mut r = Self::new(name, margin, tolerance, witness);
        r.verdict = Verdict::NotApplicable;
        r
    }

    pub fn with_digest(mut self, d: String) -> Self {
        self.digest = d;
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_owned(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// `pass` recomputed from margin and tolerance.
    pub fn consistent(&self) -> bool {
        self.pass == (self.margin >= -self.tolerance)
    }

    pub fn is_failure(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Short SHA-256 digest of field contents and grids.
pub fn digest(fields: &[&Field]) -> String {
    let mut h = Sha256::new();
    for f in fields {
        let g = f.grid();
        for v in [g.origin().x, g.origin().y, g.spacing()] {
            h.update(v.to_le_bytes());
        }
        h.update((g.nx() as u64).to_le_bytes());
        h.update((g.ny() as u64).to_le_bytes());
        for v in f.values() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}

pub fn write_jsonl<W: Write>(mut w: W, reports: &[VerificationReport]) -> Result<()> {
    for r in reports {
        let line = serde_json::to_string(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

pub fn save_jsonl(path: impl AsRef<Path>, reports: &[VerificationReport]) -> Result<()> {
    write_jsonl(std::io::BufWriter::new(std::fs::File::create(path)?), reports)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<VerificationReport>> {
    read_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// CSV with a one-line header: fixed columns followed by the union of detail keys.
pub fn write_csv<W: Write>(mut w: W, reports: &[VerificationReport]) -> Result<()> {
    let mut keys: Vec<&str> = reports.iter().flat_map(|r| r.details.keys().map(String::as_str)).collect();
    keys.sort_unstable();
    keys.dedup();
    write!(w, "name,verdict,pass,margin,tolerance,cell,x,y,t")?;
    for k in &keys {
        write!(w, ",{k}")?;
    }
    writeln!(w)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        };
        write!(
            w,
            "{},{verdict},{},{},{},{},{},{},{}",
            r.name,
            r.pass,
            r.margin,
            r.tolerance,
            r.witness.cell.map(|c| c.to_string()).unwrap_or_default(),
            opt(r.witness.x),
            opt(r.witness.y),
            opt(r.witness.t)
        )?;
        for k in &keys {
            write!(w, ",{}", r.details.get(*k).map(|v| v.to_string()).unwrap_or_default())?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Length growth bound `ℓ(t₁) ≤ √((t₁−𝔥)/(t₀−𝔥)) ℓ(t₀)`. The tolerance is
/// `tol_rel · ℓ(t₁)`.
pub fn check_harnack(traj: &Trajectory, curve: &Curve, t0: f64, t1: f64, hindsight: f64, tol_rel: f64) -> Result<VerificationReport> {
    if !(t0 <= t1) || !(hindsight < t0) {
        return Err(Error::InvalidArgument(format!("need hindsight < t₀ ≤ t₁, got {hindsight}, {t0}, {t1}")));
    }
    let u0 = traj.at(t0)?;
    let u1 = traj.at(t1)?;
    let l0 = curve_length(curve, &u0, traj.mask())?;
    let l1 = curve_length(curve, &u1, traj.mask())?;
    let factor = ((t1 - hindsight) / (t0 - hindsight)).sqrt();
    let margin = factor * l0 - l1;
    let p = curve.vertices()[0];
    Ok(VerificationReport::new("harnack", margin, tol_rel * l1, Witness { x: Some(p.x), y: Some(p.y), t: Some(t1), cell: None })
        .with_digest(digest(&[&u0, &u1]))
        .with_detail("length_t0", l0)
        .with_detail("length_t1", l1)
        .with_detail("ratio", l1 / l0)
        .with_detail("bound_ratio", factor))
}

/// `u ≥ 2t·H` on the stencil interior, with cellwise tolerance
/// `2t · 5h |∇H|`.
pub fn check_hyperbolic_lower(state: &FlowState, h: &HyperbolicFactor) -> Result<VerificationReport> {
    if state.mask() != h.mask() {
        return Err(Error::GridMismatch);
    }
    let t = state.t();
    let spacing = state.u().grid().spacing();
    let grad = gradient_norm(h.factor(), h.mask());
    let region = state.mask().stencil_interior();
    let (cell, diff, tol) = region
        .iter()
        .map(|k| {
            let diff = state.u().get(k) - 2.0 * t * h.factor().get(k);
            (k, diff, 2.0 * t * 5.0 * spacing * grad.get(k))
        })
        .min_by(|a, b| (a.1 + a.2).total_cmp(&(b.1 + b.2)))
        .ok_or(Error::NoInteriorCell)?;
    let p = state.u().grid().center(cell);
    Ok(VerificationReport::new("hyperbolic-lower", diff, tol, Witness::cell(cell, p, Some(t)))
        .with_digest(digest(&[state.u(), h.factor()])))
}

/// Comparison principle on stored data. Hypothesis: `v > u + δ` on `region`
/// at every stored time of `v` up to `s`. Conclusion checked at the stored
/// times of `v` after `s` (all times when none follow `s`) within `u`'s range.
pub fn check_comparison(u: &Trajectory, v: &Trajectory, s: f64, region: &Mask, tol: f64) -> Result<VerificationReport> {
    if !u.mask().grid().same_as(v.mask().grid()) || !region.grid().same_as(v.mask().grid()) {
        return Err(Error::GridMismatch);
    }
    let region = region.intersection(u.mask())?.intersection(v.mask())?;
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (ulo, uhi) = (u.times()[0], *u.times().last().unwrap());
    let times: Vec<(usize, f64)> =
        v.times().iter().copied().enumerate().filter(|&(_, t)| t >= ulo && t <= uhi).collect();
    if times.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let grid = *region.grid();
    let worst = |sel: &mut dyn Iterator<Item = &(usize, f64)>| -> Result<Option<(f64, usize, f64)>> {
        let mut best: Option<(f64, usize, f64)> = None;
        for &(k, t) in sel {
            let uf = u.at(t)?;
            for c in region.iter() {
                let uval = uf.get(c);
                if !uval.is_finite() {
                    return Err(Error::NonFinite(c));
                }
                let d = v.fields()[k].get(c) - uval;
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, c, t));
                }
            }
        }
        Ok(best)
    };
    let digest = digest(&[&u.fields()[0], &v.fields()[0]]);
    if let Some((gap, c, t)) = worst(&mut times.iter().filter(|x| x.1 <= s))? {
        if gap <= DELTA_STRICT {
            return Ok(VerificationReport::not_applicable("comparison", gap - DELTA_STRICT, 0.0, Witness::cell(c, grid.center(c), Some(t)))
                .with_digest(digest)
                .with_note("strict ordering fails before s"));
        }
    }
    let after: Vec<(usize, f64)> = times.iter().copied().filter(|x| x.1 > s).collect();
    let conclusion = if after.is_empty() { worst(&mut times.iter())? } else { worst(&mut after.iter())? };
    let (gap, c, t) = conclusion.expect("non-empty times and region");
    Ok(VerificationReport::new("comparison", gap, tol, Witness::cell(c, grid.center(c), Some(t)))
        .with_digest(digest)
        .with_detail("s", s))
}

/// Inputs of the rigidity pipeline.
#[derive(Debug, Clone)]
pub struct RigidityConfig {
    /// Slice index of the early time `t₁`.
    pub early: usize,
    /// Slice index of the late time `t₂`.
    pub late: usize,
    pub lambdas: Vec<f64>,
    pub mass: f64,
    pub sigma: f64,
    /// Radius of the hyperbolic disk carrying the background of `G`; zero
    /// means the largest disk inscribed in the ambient box.
    pub background_radius: f64,
    pub tau: f64,
    /// Radius of the probe ball around the chosen perfect-set cell.
    pub probe_radius: f64,
    pub stepper: ImplicitStepper,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        Self {
            early: 0,
            late: 0,
            lambdas: vec![1.0, 4.0, 16.0, 64.0],
            mass: 1.0,
            sigma: 0.0,
            background_radius: 0.0,
            tau: 0.0,
            probe_radius: 0.0,
            stepper: ImplicitStepper::default(),
        }
    }
}

fn stage(name: &str) -> String {
    format!("rigidity/{name}")
}

/// Runs the ingredient chain of the rigidity argument on a spacetime whose
/// candidate flow is `g` (on the mask of the early slice).
///
/// Stages: expanding and continuity hypotheses, perfect/scattered split of
/// the region added between the early and late slices, a uniform measure on
/// its perfect part, the flow `G` started from that measure on the ambient
/// box, comparisons `G_λ ≤ g` before `t₁`, and the volume probe
/// `λ ↦ Vol_{G_λ(t₂)}(B(p,r))` whose slope is compared to `μ(B(p,r))/2`.
pub fn rigidity_pipeline(domain: &SpacetimeDomain, g: &Trajectory, cfg: &RigidityConfig) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    let grid = *domain.grid();
    let h = grid.spacing();
    if cfg.early >= cfg.late || cfg.late >= domain.len() {
        return Err(Error::InvalidArgument("need early < late < number of slices".into()));
    }
    let expanding = domain.is_expanding();
    let cont = if expanding { domain.is_continuous()?.continuous } else { false };
    out.push(VerificationReport::new(stage("expanding"), if expanding { 0.0 } else { -1.0 }, 0.0, Witness::default()));
    if !expanding {
        out.push(VerificationReport::not_applicable(stage("continuity"), -1.0, 0.0, Witness::default()));
        for name in ["perfect-split", "measure", "volume-probe"] {
            out.push(
                VerificationReport::not_applicable(stage(name), -1.0, 0.0, Witness::default())
                    .with_note("spacetime is not expanding"),
            );
        }
        return Ok(out);
    }
    // A discontinuous expanding spacetime is exactly what the remaining
    // stages are meant to refute, so they still run.
    let mut hyp = VerificationReport::new(stage("continuity"), if cont { 0.0 } else { -1.0 }, 0.0, Witness::default());
    if !cont {
        hyp = hyp.with_note("discontinuous: later stages run as a contradiction witness");
    }
    out.push(hyp);

    let added = domain.slice(cfg.late).difference(domain.slice(cfg.early))?;
    let cb = cantor_bendixson(&added, Adjacency::Four);
    out.push(
        VerificationReport::new(stage("perfect-split"), 0.0, 0.0, Witness::default())
            .with_detail("perfect_cells", cb.perfect.count() as f64)
            .with_detail("scattered_cells", cb.scattered.count() as f64)
            .with_detail("rounds", cb.rounds as f64),
    );
    if cb.perfect.is_empty() {
        for name in ["measure", "volume-probe"] {
            out.push(
                VerificationReport::new(stage(name), 0.0, 0.0, Witness::default()).with_note("vacuous: perfect part is empty"),
            );
        }
        return Ok(out);
    }

    let mu = measures::measure_on_perfect_set(&cb.perfect, cfg.mass)?;
    out.push(
        VerificationReport::new(stage("measure"), 0.0, 0.0, Witness::default())
            .with_detail("total", mu.total())
            .with_detail("support_cells", cb.perfect.count() as f64),
    );

    let t1 = domain.times()[cfg.early];
    let t2 = domain.times()[cfg.late];
    let lambdas = {
        let mut l = cfg.lambdas.clone();
        l.sort_by(f64::total_cmp);
        l
    };
    let lmax = *lambdas.last().unwrap();
    let sigma = if cfg.sigma > 0.0 { cfg.sigma } else { 2.0 * h };
    let tau = if cfg.tau > 0.0 { cfg.tau } else { t2 / lmax / 8.0 };
    let t_init = (t1.min(t2 / lmax) / 4.0).min(tau);
    let (lx, ly) = (grid.nx() as f64 * h, grid.ny() as f64 * h);
    let box_center = Point::new(grid.origin().x + lx / 2.0, grid.origin().y + ly / 2.0);
    let radius = if cfg.background_radius > 0.0 { cfg.background_radius } else { lx.min(ly) / 2.0 - h };
    let background = Background::Complete(hyperbolic_disk(grid, box_center, radius)?);
    let start = measures::weak_start(&mu, sigma, t_init, &background)?;
    // Snapshot times of G needed by every G_λ: t₂/λ and the early ladder t/λ.
    let mut snaps: Vec<f64> = Vec::new();
    for &l in &lambdas {
        snaps.push(t2 / l);
        for &t in g.times().iter().filter(|&&t| t <= t1) {
            snaps.push(t / l);
        }
    }
    snaps.retain(|&t| t > t_init);
    snaps.sort_by(f64::total_cmp);
    snaps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let big_g = crate::lfde::run_flow(&cfg.stepper, &start, &snaps, tau)?;

    let region = domain.slice(cfg.early).stencil_interior();
    for &l in &lambdas {
        let gl = big_g.rescaled(l)?;
        match check_comparison(&gl, g, t1, &region, 1e-9) {
            Ok(mut r) => {
                r.name = stage(&format!("comparison-lambda-{l}"));
                out.push(r.with_detail("lambda", l));
            }
            Err(Error::EmptyWindow) => out.push(
                VerificationReport::not_applicable(stage(&format!("comparison-lambda-{l}")), -1.0, 0.0, Witness::default())
                    .with_note("no common stored times"),
            ),
            Err(e) => return Err(e),
        }
    }

    // Probe ball around the perfect cell deepest inside P.
    let depth = cb.perfect.distance_to_outside();
    let (p_cell, _) = depth.max_on(&cb.perfect).ok_or(Error::EmptyRegion)?;
    let p = grid.center(p_cell);
    let r = if cfg.probe_radius > 0.0 { cfg.probe_radius } else { 4.0 * h };
    let ball = Mask::closed_disk(grid, p, r);
    let mu_b = mu.mass_in(&ball)?;
    let mut xs = Vec::new();
    let mut vols = Vec::new();
    let mut report_details = Vec::new();
    for &l in &lambdas {
        let vol = l * crate::grid::integrate(&big_g.at(t2 / l)?, &ball.intersection(big_g.mask())?)?;
        report_details.push((format!("volume_lambda_{l}"), vol));
        if l >= 16.0 {
            xs.push(l);
            vols.push(vol);
        }
    }
    let slope = least_squares_slope(&xs, &vols).unwrap_or(f64::NAN);
    let target = mu_b / 2.0;
    let margin = if slope.is_finite() { 0.2 * target - (slope - target).abs() } else { -1.0 };
    let mut rep = VerificationReport::new(stage("volume-probe"), margin, 0.0, Witness::cell(p_cell, p, Some(t2)))
        .with_digest(digest(&[mu.density()]))
        .with_detail("slope", slope)
        .with_detail("mu_ball", mu_b)
        .with_detail("target_slope", target);
    for (k, v) in report_details {
        rep = rep.with_detail(&k, v);
    }
    out.push(rep);
    Ok(out)
}

/// Slope of the least-squares line through `(x, y)`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Measure used in reports that need a digest of a measure.
pub fn measure_digest(mu: &DiscreteMeasure) -> String {
    digest(&[mu.density()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::lfde::{big_bang, run_flow, BoundaryPolicy};
    use crate::uniformize::hyperbolic_disk;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn verdict_follows_margin(margin in -10.0f64..10.0, tol in 0.0f64..5.0) {
            let r = VerificationReport::new("x", margin, tol, Witness::default());
            prop_assert!(r.consistent());
            prop_assert_eq!(r.pass, margin >= -tol);
        }
    }

    fn flat(g: Grid, m: &Mask, c: f64, t: f64) -> Trajectory {
        let s = FlowState::new(t, Field::constant(g, c), m.clone(), BoundaryPolicy::DirichletConstant(c)).unwrap();
        run_flow(&ImplicitStepper::default(), &s, &[t + 0.1, t + 0.2, t + 0.3], 0.1).unwrap()
    }

    #[test]
    fn report_serialization_round_trip() {
        let r = VerificationReport::new("demo", -0.5, 0.1, Witness::cell(3, Point::new(0.5, -0.25), Some(1.0)))
            .with_detail("k", 2.0)
            .with_digest("abc".into());
        let mut buf = Vec::new();
        write_jsonl(&mut buf, std::slice::from_ref(&r)).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, vec![r.clone()]);
        let mut csv = Vec::new();
        write_csv(&mut csv, &[r]).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("name,verdict,pass,margin,tolerance,cell,x,y,t,k\n"));
    }

    #[test]
    fn harnack_examples() {
        let g = Grid::centered(1.1, 0.05).unwrap();
        let m = Mask::disk(g, Point::default(), 1.0);
        let traj = flat(g, &m, 2.0, 1.0);
        let c = Curve::segment(Point::new(-0.5, 0.0), Point::new(0.5, 0.0)).unwrap();
        let r = check_harnack(&traj, &c, 1.0, 1.3, 0.0, 0.01).unwrap();
        assert!(r.pass && r.margin > 0.0);
        let r = check_harnack(&traj, &c, 1.1, 1.1, 0.0, 0.01).unwrap();
        assert!(r.pass && r.margin.abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_lower_examples() {
        let g = Grid::centered(1.1, 1.0 / 16.0).unwrap();
        let hd = hyperbolic_disk(g, Point::default(), 1.0).unwrap();
        let s = big_bang(&hd, 0.5).unwrap();
        let r = check_hyperbolic_lower(&s, &hd).unwrap();
        assert!(r.pass && r.margin.abs() < 1e-12);
        let plus = FlowState::new(0.5, s.u().map(|v| v + 1.0), s.mask().clone(), s.boundary().clone()).unwrap();
        let r = check_hyperbolic_lower(&plus, &hd).unwrap();
        assert!(r.pass);
        assert!((r.margin - 1.0).abs() < 1e-12);
        let half = FlowState::new(0.5, s.u().scaled(0.5), s.mask().clone(), s.boundary().clone()).unwrap();
        let r = check_hyperbolic_lower(&half, &hd).unwrap();
        assert!(!r.pass && r.witness.cell.is_some());
    }

    #[test]
    fn comparison_examples() {
        let g = Grid::centered(1.1, 0.1).unwrap();
        let m = Mask::disk(g, Point::default(), 1.0);
        let (a, b) = (flat(g, &m, 1.0, 1.0), flat(g, &m, 3.0, 1.0));
        let r = check_comparison(&a, &b, 1.1, &m, 1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.margin - 2.0).abs() < 1e-9);
        let same = check_comparison(&a, &a, 1.1, &m, 1e-9).unwrap();
        assert_eq!(same.verdict, Verdict::NotApplicable);
        let reversed = check_comparison(&b, &a, 1.0, &m, 1e-9).unwrap();
        assert_eq!(reversed.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn slope_fit() {
        assert_eq!(least_squares_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), Some(2.0));
        assert_eq!(least_squares_slope(&[1.0], &[2.0]), None);
    }

    #[test]
    fn cylinder_pipeline_is_vacuous() {
        let h = 1.0 / 16.0;
        let g = Grid::centered(1.25, h).unwrap();
        let disk = Mask::disk(g, Point::default(), 1.0);
        let times = vec![0.1, 0.2, 0.3];
        let domain = SpacetimeDomain::from_fn(g, times.clone(), 0.4, |_| disk.clone()).unwrap();
        let hd = hyperbolic_disk(g, Point::default(), 1.0).unwrap();
        let flow = run_flow(&ImplicitStepper::default(), &big_bang(&hd, 0.1).unwrap(), &times[1..], 0.01).unwrap();
        let cfg = RigidityConfig { early: 0, late: 2, ..RigidityConfig::default() };
        let reports = rigidity_pipeline(&domain, &flow, &cfg).unwrap();
        assert!(reports.iter().all(|r| r.verdict == Verdict::Pass), "{reports:?}");
        let measure = reports.iter().find(|r| r.name == "rigidity/measure").unwrap();
        assert!(measure.note.as_deref().is_some_and(|n| n.contains("vacuous")));
    }

    #[test]
    fn shrinking_spacetime_is_not_applicable() {
        let g = Grid::centered(1.25, 1.0 / 16.0).unwrap();
        let times = vec![0.1, 0.2];
        let domain = SpacetimeDomain::from_fn(g, times, 0.3, |t| Mask::disk(g, Point::default(), 1.2 - t)).unwrap();
        let hd = hyperbolic_disk(g, Point::default(), 1.0).unwrap();
        let flow = Trajectory::start(&big_bang(&hd, 0.1).unwrap());
        let cfg = RigidityConfig { early: 0, late: 1, ..RigidityConfig::default() };
        let reports = rigidity_pipeline(&domain, &flow, &cfg).unwrap();
        assert_eq!(reports[0].verdict, Verdict::Fail);
        assert!(reports[1..].iter().all(|r| r.verdict == Verdict::NotApplicable));
    }
}
