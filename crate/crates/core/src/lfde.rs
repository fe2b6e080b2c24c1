//! The logarithmic fast diffusion equation `∂u/∂t = Δ log u`.
//!
//! A [`FlowState`] holds the conformal factor on a mask. Cells of the mask
//! whose 5-point stencil leaves it carry ghost values dictated by the
//! [`BoundaryPolicy`]; the remaining cells are the unknowns of the implicit
//! Euler step, which is solved by damped Newton in the variable `log u`.

use std::io::{BufRead, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{io, laplacian, Field, Mask};
use crate::linalg::{solve_spd, CgOptions, Stencil};
use crate::verify::{digest, VerificationReport, Witness};

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryPolicy {
    /// Ghost cells hold a fixed positive value.
    DirichletConstant(f64),
    /// Ghost cells follow the big-bang barrier `2t·H`.
    BarrierHyperbolic { factor: Field },
    /// Ghost cells keep the trace of the initial data.
    Frozen { trace: Field },
}

impl BoundaryPolicy {
    pub fn frozen_from(u: &Field) -> Self {
        BoundaryPolicy::Frozen { trace: u.clone() }
    }

    fn ghost(&self, t: f64, cell: usize) -> f64 {
        match self {
            BoundaryPolicy::DirichletConstant(c) => *c,
            BoundaryPolicy::BarrierHyperbolic { factor } => 2.0 * t * factor.get(cell),
            BoundaryPolicy::Frozen { trace } => trace.get(cell),
        }
    }

    /// Policy of the rescaled flow `λ u(·, t/λ)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        match self {
            BoundaryPolicy::DirichletConstant(c) => BoundaryPolicy::DirichletConstant(lambda * c),
            BoundaryPolicy::BarrierHyperbolic { factor } => BoundaryPolicy::BarrierHyperbolic { factor: factor.clone() },
            BoundaryPolicy::Frozen { trace } => BoundaryPolicy::Frozen { trace: trace.scaled(lambda) },
        }
    }

    /// Writes ghost values at time `t` into the boundary-adjacent cells of `mask`.
    pub fn apply(&self, t: f64, u: &mut Field, mask: &Mask) -> Result<()> {
        for k in mask.boundary_adjacent().iter() {
            let g = self.ghost(t, k);
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::NonPositive { cell: k, value: g });
            }
            u.set(k, g);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    t: f64,
    u: Field,
    mask: Mask,
    boundary: BoundaryPolicy,
}

impl FlowState {
    pub fn new(t: f64, u: Field, mask: Mask, boundary: BoundaryPolicy) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("flow time must be positive, got {t}")));
        }
        if !u.grid().same_as(mask.grid()) {
            return Err(Error::GridMismatch);
        }
        if mask.stencil_interior().is_empty() {
            return Err(Error::NoInteriorCell);
        }
        for k in mask.iter() {
            if !(u.get(k) > 0.0) {
                return Err(Error::NonPositive { cell: k, value: u.get(k) });
            }
        }
        Ok(Self { t, u, mask, boundary })
    }

    /// State whose ghost cells are refreshed from the policy at `t`.
    pub fn with_policy_ghosts(t: f64, mut u: Field, mask: Mask, boundary: BoundaryPolicy) -> Result<Self> {
        boundary.apply(t, &mut u, &mask)?;
        Self::new(t, u, mask, boundary)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn boundary(&self) -> &BoundaryPolicy {
        &self.boundary
    }

    pub fn area(&self) -> f64 {
        crate::grid::integrate(&self.u, &self.mask).expect("state grids agree")
    }
}

/// Big-bang solution `2t·H` for a hyperbolic factor `H`, with barrier ghosts.
pub fn big_bang(h: &crate::uniformize::HyperbolicFactor, t: f64) -> Result<FlowState> {
    let u = h.factor().scaled(2.0 * t);
    FlowState::new(
        t,
        u,
        h.mask().clone(),
        BoundaryPolicy::BarrierHyperbolic { factor: h.factor().clone() },
    )
}

/// Scalar curvature `R = −Δ log u / u` on the stencil interior (zero elsewhere).
pub fn scalar_curvature(state: &FlowState) -> Result<Field> {
    let mut u = state.u.clone();
    state.boundary.apply(state.t, &mut u, &state.mask)?;
    curvature_of(&u, &state.mask)
}

/// Scalar curvature of the conformal metric `u |dz|²`, using the values of
/// `u` on boundary-adjacent cells as ghosts.
pub fn curvature_of(u: &Field, mask: &Mask) -> Result<Field> {
    for k in mask.iter() {
        if !(u.get(k) > 0.0) {
            return Err(Error::NonPositive { cell: k, value: u.get(k) });
        }
    }
    let logu = Field::from_fn_on(mask, 0.0, |_| 0.0);
    let mut logu = logu;
    for k in mask.iter() {
        logu.set(k, u.get(k).ln());
    }
    let lap = laplacian(&logu, mask)?;
    let interior = mask.stencil_interior();
    let mut r = Field::zeros(*u.grid());
    for k in interior.iter() {
        r.set(k, -lap.get(k) / u.get(k));
    }
    Ok(r)
}

pub trait Stepper {
    fn step(&self, state: &FlowState, tau: f64) -> Result<FlowState>;
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StepStats {
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    pub residual: f64,
}

/// Implicit Euler with damped Newton on `log u`.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitStepper {
    /// Max-norm bound on `u⁺ − u − τ Δ log u⁺` at convergence.
    pub tol_newton: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub cg: CgOptions,
}

impl Default for ImplicitStepper {
    fn default() -> Self {
        Self { tol_newton: 1e-10, max_newton: 60, max_halvings: 40, cg: CgOptions { rel_tol: 1e-10, max_iter: 20_000 } }
    }
}

/// Roundoff floor for the Newton residual at a cell of magnitude `u`.
fn residual_floor(tol: f64, u: f64) -> f64 {
    tol.max(64.0 * f64::EPSILON * u)
}

impl ImplicitStepper {
    pub fn step_with_stats(&self, state: &FlowState, tau: f64) -> Result<(FlowState, StepStats)> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be non-negative, got {tau}")));
        }
        if tau == 0.0 {
            return Ok((state.clone(), StepStats::default()));
        }
        let t_new = state.t + tau;
        let mut u_new = state.u.clone();
        state.boundary.apply(t_new, &mut u_new, &state.mask)?;

        let st = Stencil::new(&state.mask);
        let n = st.len();
        let mut ghost_log = vec![0.0; u_new.grid().len()];
        for k in state.mask.iter() {
            ghost_log[k] = u_new.get(k).ln();
        }
        let u_old = st.gather(&state.u);
        let mut w: Vec<f64> = u_old.iter().map(|v| v.ln()).collect();

        let mut lap = vec![0.0; n];
        let residual = |w: &[f64], out: &mut [f64], lap: &mut [f64]| {
            st.laplacian(w, &ghost_log, lap);
            for i in 0..n {
                out[i] = w[i].exp() - u_old[i] - tau * lap[i];
            }
        };
        let converged = |f: &[f64], w: &[f64]| {
            f.iter().zip(w).all(|(fi, wi)| fi.abs() <= residual_floor(self.tol_newton, wi.exp()))
        };
        let norm2 = |f: &[f64]| f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let norm_inf = |f: &[f64]| f.iter().fold(0.0f64, |a, x| a.max(x.abs()));

        let mut f = vec![0.0; n];
        residual(&w, &mut f, &mut lap);
        let mut stats = StepStats::default();
        let mut y = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut f_trial = vec![0.0; n];
        let mut d = vec![0.0; n];
        while !converged(&f, &w) {
            if stats.newton_iterations >= self.max_newton {
                return Err(Error::NewtonDiverged { iterations: stats.newton_iterations, residual: norm_inf(&f) });
            }
            stats.newton_iterations += 1;
            for i in 0..n {
                d[i] = w[i].exp();
                rhs[i] = -f[i];
                y[i] = 0.0;
            }
            let cg = solve_spd(&st, &d, tau, &rhs, &mut y, self.cg);
            stats.cg_iterations += cg.iterations;
            if !cg.converged {
                log::debug!("linear solve stopped after {} iterations", cg.iterations);
            }
            let ymax = norm_inf(&y);
            let mut alpha = if ymax > 4.0 { 4.0 / ymax } else { 1.0 };
            let f_norm = norm2(&f);
            let mut accepted = false;
            for _ in 0..=self.max_halvings {
                for i in 0..n {
                    trial[i] = w[i] + alpha * y[i];
                }
                residual(&trial, &mut f_trial, &mut lap);
                if norm2(&f_trial) < f_norm || converged(&f_trial, &trial) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(Error::LineSearchFailed { residual: norm_inf(&f) });
            }
            std::mem::swap(&mut w, &mut trial);
            std::mem::swap(&mut f, &mut f_trial);
        }
        stats.residual = norm_inf(&f);
        let x: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        st.scatter(&x, &mut u_new);
        let next = FlowState { t: t_new, u: u_new, mask: state.mask.clone(), boundary: state.boundary.clone() };
        Ok((next, stats))
    }
}

impl Stepper for ImplicitStepper {
    fn step(&self, state: &FlowState, tau: f64) -> Result<FlowState> {
        self.step_with_stats(state, tau).map(|(s, _)| s)
    }
}

/// Advances `state` to `t_target` with steps of at most `tau`, halving the
/// step (up to `max_halvings` times) when the stepper fails.
pub fn advance<S: Stepper + ?Sized>(stepper: &S, state: &FlowState, t_target: f64, tau: f64, max_halvings: usize) -> Result<FlowState> {
    let mut s = state.clone();
    let mut dt = tau;
    let mut halvings = 0;
    while s.t < t_target * (1.0 - 1e-14) {
        let step = dt.min(t_target - s.t);
        match stepper.step(&s, step) {
            Ok(next) => s = next,
            Err(e @ (Error::NewtonDiverged { .. } | Error::LineSearchFailed { .. })) => {
                if halvings >= max_halvings {
                    return Err(e);
                }
                halvings += 1;
                dt *= 0.5;
                log::debug!("step failed at t = {}, halving to {dt}", s.t);
            }
            Err(e) => return Err(e),
        }
    }
    s.t = t_target;
    Ok(s)
}

/// Runs the flow from `state` through every time in `snapshots` (ascending,
/// all ≥ `state.t()`), recording the initial state and each snapshot.
pub fn run_flow<S: Stepper + ?Sized>(stepper: &S, state: &FlowState, snapshots: &[f64], tau: f64) -> Result<Trajectory> {
    let mut traj = Trajectory::start(state);
    let mut s = state.clone();
    for &t in snapshots {
        if t < s.t {
            return Err(Error::InvalidArgument(format!("snapshot time {t} precedes current time {}", s.t)));
        }
        if t == s.t {
            continue;
        }
        s = advance(stepper, &s, t, tau, 20)?;
        traj.push(t, s.u.clone())?;
    }
    Ok(traj)
}

/// Parabolic rescaling `u ↦ λ u`, `t ↦ λ t`.
pub fn rescale_parabolic(state: &FlowState, lambda: f64) -> Result<FlowState> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("rescaling factor must be positive, got {lambda}")));
    }
    Ok(FlowState {
        t: lambda * state.t,
        u: state.u.scaled(lambda),
        mask: state.mask.clone(),
        boundary: state.boundary.rescaled(lambda),
    })
}

/// Stored snapshots of a flow on a fixed mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    mask: Mask,
    boundary: BoundaryPolicy,
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl Trajectory {
    pub fn start(state: &FlowState) -> Self {
        Self { mask: state.mask.clone(), boundary: state.boundary.clone(), times: vec![state.t], fields: vec![state.u.clone()] }
    }

    pub fn from_parts(mask: Mask, boundary: BoundaryPolicy, times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument("trajectory needs one field per time".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("trajectory times must be strictly increasing".into()));
        }
        if fields.iter().any(|f| !f.grid().same_as(mask.grid())) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { mask, boundary, times, fields })
    }

    pub fn push(&mut self, t: f64, u: Field) -> Result<()> {
        if !(t > *self.times.last().unwrap()) {
            return Err(Error::InvalidArgument(format!("snapshot time {t} is not increasing")));
        }
        if !u.grid().same_as(self.mask.grid()) {
            return Err(Error::GridMismatch);
        }
        self.times.push(t);
        self.fields.push(u);
        Ok(())
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn boundary(&self) -> &BoundaryPolicy {
        &self.boundary
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> FlowState {
        FlowState { t: self.times[k], u: self.fields[k].clone(), mask: self.mask.clone(), boundary: self.boundary.clone() }
    }

    pub fn last_state(&self) -> FlowState {
        self.state(self.len() - 1)
    }

    /// Linear interpolation in time between stored snapshots.
    pub fn at(&self, t: f64) -> Result<Field> {
        let (lo, hi) = (self.times[0], *self.times.last().unwrap());
        let slack = 1e-12 * hi.abs().max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::TimeOutOfRange { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Ok(self.fields[0].clone());
        }
        if k == self.times.len() {
            return Ok(self.fields[k - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        if s == 0.0 {
            return Ok(self.fields[k - 1].clone());
        }
        self.fields[k - 1].zip_map(&self.fields[k], |a, b| a + s * (b - a))
    }

    /// The rescaled flow `λ u(·, t/λ)` with times multiplied by `λ`.
    pub fn rescaled(&self, lambda: f64) -> Result<Trajectory> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("rescaling factor must be positive, got {lambda}")));
        }
        Ok(Trajectory {
            mask: self.mask.clone(),
            boundary: self.boundary.rescaled(lambda),
            times: self.times.iter().map(|t| t * lambda).collect(),
            fields: self.fields.iter().map(|f| f.scaled(lambda)).collect(),
        })
    }

    /// Implicit-Euler residual `(u_{k+1} − u_k)/Δt − Δ log u_{k+1}` on the
    /// stencil interior, one field per consecutive pair.
    pub fn implicit_residuals(&self) -> Result<Vec<Field>> {
        let interior = self.mask.stencil_interior();
        let mut out = Vec::with_capacity(self.len().saturating_sub(1));
        for k in 0..self.len().saturating_sub(1) {
            let dt = self.times[k + 1] - self.times[k];
            let next = &self.fields[k + 1];
            let mut logu = Field::zeros(*next.grid());
            for c in self.mask.iter() {
                let v = next.get(c);
                if !(v > 0.0) {
                    return Err(Error::NonPositive { cell: c, value: v });
                }
                logu.set(c, v.ln());
            }
            let lap = laplacian(&logu, &self.mask)?;
            let mut r = Field::zeros(*next.grid());
            for c in interior.iter() {
                r.set(c, (next.get(c) - self.fields[k].get(c)) / dt - lap.get(c));
            }
            out.push(r);
        }
        Ok(out)
    }

    /// Writes `NNNNNN.field` snapshots, `domain.mask` and a `manifest` of
    /// `t_k file` lines into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        io::save_mask(dir.join("domain.mask"), &self.mask)?;
        let mut manifest = std::fs::File::create(dir.join("manifest"))?;
        for (k, (t, f)) in self.times.iter().zip(&self.fields).enumerate() {
            let name = format!("{k:06}.field");
            io::save_field(dir.join(&name), f)?;
            writeln!(manifest, "{t} {name}")?;
        }
        Ok(())
    }

    /// Loads an archive written by [`Trajectory::save`]. The boundary policy
    /// is not archived; the loaded trajectory freezes the first snapshot's trace.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mask = io::load_mask(dir.join("domain.mask"))?;
        let manifest = std::io::BufReader::new(std::fs::File::open(dir.join("manifest"))?);
        let mut times = Vec::new();
        let mut fields = Vec::new();
        for (n, line) in manifest.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let (Some(t), Some(name)) = (parts.next(), parts.next()) else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Parse { line: n + 1, msg: "expected `t file`".into() });
            };
            let t: f64 = t.parse().map_err(|_| Error::Parse { line: n + 1, msg: format!("bad time `{t}`") })?;
            times.push(t);
            fields.push(io::load_field(dir.join(name))?);
        }
        let boundary = BoundaryPolicy::frozen_from(fields.first().ok_or(Error::EmptyRegion)?);
        Self::from_parts(mask, boundary, times, fields)
    }
}

/// The time-reparameterised flow `v_ε(t) = (1 + εt)·v(ε⁻¹ log(1 + εt))`.
///
/// With `times = None` the output is sampled at the images of the stored
/// times, so no interpolation is needed.
pub fn supersolution_transform(v: &Trajectory, eps: f64, times: Option<&[f64]>) -> Result<Trajectory> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("ε must be non-negative, got {eps}")));
    }
    let to_s = |t: f64| if eps == 0.0 { t } else { (eps * t).ln_1p() / eps };
    let to_t = |s: f64| if eps == 0.0 { s } else { (eps * s).exp_m1() / eps };
    let out_times: Vec<f64> = match times {
        Some(ts) => ts.to_vec(),
        None => v.times.iter().map(|&s| to_t(s)).collect(),
    };
    let mut fields = Vec::with_capacity(out_times.len());
    for (k, &t) in out_times.iter().enumerate() {
        let s = to_s(t);
        let base = if times.is_none() { v.fields[k].clone() } else { v.at(s)? };
        fields.push(base.scaled(1.0 + eps * t));
    }
    let boundary = BoundaryPolicy::frozen_from(&fields[0]);
    Trajectory::from_parts(v.mask.clone(), boundary, out_times, fields)
}

/// Parameters of the local scalar-curvature lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChenBoundParams {
    pub n: u32,
    pub delta: f64,
    pub r0: f64,
    pub k: f64,
    pub a: f64,
    pub c: f64,
    pub t1: f64,
    pub t2: f64,
}

impl ChenBoundParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.n as f64;
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_owned()));
        if self.n < 2 {
            return bad("dimension must be at least 2");
        }
        if !(self.delta > 0.0 && self.delta < 2.0 / n) {
            return bad("δ must lie in (0, 2/n)");
        }
        if !(self.r0 > 0.0 && self.k > 0.0 && self.c > 0.0) {
            return bad("r₀, K and C must be positive");
        }
        if !(self.t1 < self.t2) {
            return bad("need t₁ < t₂");
        }
        if !(self.a >= 2.0 + 24.0 * (n - 1.0) * self.t2 / (self.r0 * self.r0)) {
            return bad("A is below 2 + 24(n−1) r₀⁻² t₂");
        }
        Ok(())
    }
}

/// `min{ −1/((2/n − δ)(t − t₁) + 1/K), −C/(A² r₀²) }`.
pub fn chen_bound_rhs(p: &ChenBoundParams, t: f64) -> Result<f64> {
    p.validate()?;
    if !(t >= p.t1 && t <= p.t2) {
        return Err(Error::TimeOutOfRange { t, lo: p.t1, hi: p.t2 });
    }
    let n = p.n as f64;
    let first = -1.0 / ((2.0 / n - p.delta) * (t - p.t1) + 1.0 / p.k);
    let second = -p.c / (p.a * p.a * p.r0 * p.r0);
    Ok(first.min(second))
}

/// Global curvature lower bound `R ≥ −1/(t − hindsight)` (surface case),
/// tested on the stencil interior cells of `band`. The tolerance is
/// `10 (h + τ/t)`.
pub fn check_chen_global(state: &FlowState, hindsight: f64, tau: f64, band: &Mask) -> Result<VerificationReport> {
    if !(hindsight < state.t) {
        return Err(Error::InvalidArgument(format!("hindsight {hindsight} must precede t = {}", state.t)));
    }
    let r = scalar_curvature(state)?;
    let region = band.intersection(&state.mask.stencil_interior())?;
    let bound = 1.0 / (state.t - hindsight);
    let (cell, worst) = region
        .iter()
        .map(|k| (k, r.get(k) + bound))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::EmptyRegion)?;
    let h = state.u.grid().spacing();
    let tol = 10.0 * (h + tau / state.t);
    let p = state.u.grid().center(cell);
    Ok(VerificationReport::new("chen-global", worst, tol, Witness::cell(cell, p, Some(state.t)))
        .with_digest(digest(&[state.u()]))
        .with_detail("t", state.t)
        .with_detail("hindsight", hindsight)
        .with_detail("min_curvature", r.get(cell)))
}

/// Closed-form check helper: max |a − b| over `region`.
pub fn max_abs_diff(a: &Field, b: &Field, region: &Mask) -> (usize, f64) {
    region
        .iter()
        .map(|k| (k, (a.get(k) - b.get(k)).abs()))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap_or((0, 0.0))
}
