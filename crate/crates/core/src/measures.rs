//! Measure-valued initial data and the quantitative checks built on flows
//! started from them.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::io::{field_to_string, read_field_tokens, Tokens};
use crate::grid::{integrate, Field, Grid, Mask, Point};
use crate::lfde::{curvature_of, BoundaryPolicy, FlowState, Trajectory};
use crate::uniformize::HyperbolicFactor;
use crate::verify::{digest, VerificationReport, Witness};

/// Default cap on the share of total mass held by one cell.
pub const MAX_ATOM_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    density: Field,
    total: f64,
}

impl DiscreteMeasure {
    pub fn new(density: Field, max_atom_fraction: f64) -> Result<Self> {
        if let Some((k, &v)) = density.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NonPositive { cell: k, value: v });
        }
        let area = density.grid().cell_area();
        let total = density.values().iter().sum::<f64>() * area;
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("measure has zero mass".into()));
        }
        let atom = density.values().iter().fold(0.0f64, |a, &v| a.max(v)) * area;
        if atom > max_atom_fraction * total {
            return Err(Error::Atomic { fraction: atom / total, limit: max_atom_fraction });
        }
        Ok(Self { density, total })
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    pub fn density(&self) -> &Field {
        &self.density
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn support(&self) -> Mask {
        Mask::from_fn_idx(*self.grid(), |k| self.density.get(k) > 0.0)
    }

    pub fn mass_in(&self, region: &Mask) -> Result<f64> {
        integrate(&self.density, region)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {lambda}")));
        }
        Ok(Self { density: self.density.scaled(lambda), total: self.total * lambda })
    }

    pub fn to_text(&self) -> String {
        format!("MEASURE\n{}", field_to_string(&self.density))
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut t = Tokens::new(r);
        t.keyword("MEASURE")?;
        let density = read_field_tokens(&mut t)?;
        Self::new(density, 1.0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// Uniform measure of total `mass` on `cells`.
pub fn measure_on_perfect_set(cells: &Mask, mass: f64) -> Result<DiscreteMeasure> {
    if cells.is_empty() {
        return Err(Error::EmptyMask);
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    let g = *cells.grid();
    let rho = mass / (cells.count() as f64 * g.cell_area());
    let density = Field::from_fn_on(cells, 0.0, |_| rho);
    DiscreteMeasure::new(density, MAX_ATOM_FRACTION)
}

/// Normalised, truncated (at 4σ) discrete Gaussian weights.
fn gaussian_kernel(sigma: f64, h: f64) -> Vec<f64> {
    let half = (4.0 * sigma / h).ceil() as i64;
    let mut w: Vec<f64> = (-half..=half).map(|k| (-(k as f64 * h).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Separable Gaussian mollification with zero padding.
pub fn mollify(f: &Field, sigma: f64) -> Result<Field> {
    let g = *f.grid();
    let h = g.spacing();
    if !(sigma >= h) {
        return Err(Error::InvalidArgument(format!("mollifier width {sigma} is below the grid spacing {h}")));
    }
    let w = gaussian_kernel(sigma, h);
    let half = (w.len() / 2) as i64;
    let (nx, ny) = (g.nx() as i64, g.ny() as i64);
    let src = f.values();
    let mut tmp = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut s = 0.0;
            for (m, wm) in w.iter().enumerate() {
                let ii = i + m as i64 - half;
                if (0..nx).contains(&ii) {
                    s += wm * src[(j * nx + ii) as usize];
                }
            }
            tmp[(j * nx + i) as usize] = s;
        }
    }
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut s = 0.0;
            for (m, wm) in w.iter().enumerate() {
                let jj = j + m as i64 - half;
                if (0..ny).contains(&jj) {
                    s += wm * tmp[(jj * nx + i) as usize];
                }
            }
            out[(j * nx + i) as usize] = s;
        }
    }
    Field::new(g, out)
}

/// Background added to the mollified density so the start is positive.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    /// Constant floor on the whole box, held as Dirichlet data.
    Floor(f64),
    /// Big-bang flow `2t·H` of a complete hyperbolic factor; the flow lives on
    /// the factor's mask with barrier ghosts.
    Complete(HyperbolicFactor),
}

/// Mollified start `u₀ = μ ∗ φ_σ + background(t_init)`.
pub fn weak_start(mu: &DiscreteMeasure, sigma: f64, t_init: f64, background: &Background) -> Result<FlowState> {
    let smooth = mollify(mu.density(), sigma)?;
    match background {
        Background::Floor(floor) => {
            if !(*floor > 0.0) {
                return Err(Error::InvalidArgument(format!("floor must be positive, got {floor}")));
            }
            let u = smooth.map(|v| v + floor);
            let mask = Mask::full(*mu.grid());
            FlowState::with_policy_ghosts(t_init, u, mask, BoundaryPolicy::DirichletConstant(*floor))
        }
        Background::Complete(hf) => {
            if !hf.factor().grid().same_as(mu.grid()) {
                return Err(Error::GridMismatch);
            }
            let u = smooth.zip_map(hf.factor(), |a, hv| a + 2.0 * t_init * hv)?;
            FlowState::with_policy_ghosts(
                t_init,
                u,
                hf.mask().clone(),
                BoundaryPolicy::BarrierHyperbolic { factor: hf.factor().clone() },
            )
        }
    }
}

/// Smooth bump `exp(1 − 1/(1 − |z−c|²/ρ²))` supported in the disk, or the
/// constant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestFunction {
    One,
    Bump { center: Point, radius: f64 },
}

impl TestFunction {
    pub fn eval(&self, z: Point) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::Bump { center, radius } => {
                let s = z.dist(center).powi(2) / (radius * radius);
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Bound on the gradient.
    fn lipschitz(&self) -> f64 {
        match *self {
            TestFunction::One => 0.0,
            // max of |d/dr exp(1 − 1/(1−r²/ρ²))| is about 2.17/ρ
            TestFunction::Bump { radius, .. } => 2.2 / radius,
        }
    }
}

/// Weak convergence at the earliest stored time. For each test function the
/// gap `|∫f u dA − ∫f dμ|` is compared with
/// `tol_weak = floor·∫f dA + 2μ(ℂ)‖∇f‖(σ + h) + 4π t_min ‖f‖∞`.
pub fn check_weak_convergence(traj: &Trajectory, mu: &DiscreteMeasure, tests: &[TestFunction], sigma: f64, floor: f64) -> Result<VerificationReport> {
    if tests.is_empty() {
        return Err(Error::InvalidArgument("no test functions".into()));
    }
    let g = *mu.grid();
    let h = g.spacing();
    let t = traj.times()[0];
    let u = &traj.fields()[0];
    let mask = traj.mask();
    let mut worst: Option<(f64, f64, usize)> = None;
    for (n, f) in tests.iter().enumerate() {
        let fv = Field::from_fn(g, |z| f.eval(z));
        let flow: f64 = mask.iter().map(|k| fv.get(k) * u.get(k)).sum::<f64>() * h * h;
        let target: f64 = (0..g.len()).map(|k| fv.get(k) * mu.density().get(k)).sum::<f64>() * h * h;
        let f_area: f64 = mask.iter().map(|k| fv.get(k)).sum::<f64>() * h * h;
        let tol = floor * f_area + 2.0 * mu.total() * f.lipschitz() * (sigma + h) + 4.0 * PI * t;
        let gap = (flow - target).abs();
        if worst.is_none_or(|w| tol - gap < w.1 - w.0) {
            worst = Some((gap, tol, n));
        }
    }
    let (gap, tol, n) = worst.unwrap();
    Ok(VerificationReport::new("weak-convergence", -gap, tol, Witness::time(t))
        .with_digest(digest(&[u, mu.density()]))
        .with_detail("test_function", n as f64)
        .with_detail("gap", gap))
}

/// `4π (1 + (r/R)²) / (1 − (r/R)²)`.
pub fn volume_decay_constant(r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0 && r < big_r) {
        return Err(Error::InvalidArgument(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    let q = (r / big_r).powi(2);
    Ok(4.0 * PI * (1.0 + q) / (1.0 - q))
}

/// `μ(B_r) ≤ Vol_{g(t)}(B_R) + C t` for stored `t < μ(B_r)/4π`, with
/// tolerance `C (σ + h)`. Balls are closed rasterised disks.
pub fn check_volume_decay(traj: &Trajectory, mu: &DiscreteMeasure, r: f64, big_r: f64, center: Point, sigma: f64) -> Result<VerificationReport> {
    let c = volume_decay_constant(r, big_r)?;
    let g = *mu.grid();
    let h = g.spacing();
    let br = Mask::closed_disk(g, center, r);
    let big = Mask::closed_disk(g, center, big_r).intersection(traj.mask())?;
    let mu_r = mu.mass_in(&br)?;
    let tol = c * (sigma + h);
    let t_max = mu_r / (4.0 * PI);
    let mut worst: Option<(f64, f64)> = None;
    for (t, u) in traj.times().iter().zip(traj.fields()) {
        if mu_r > 0.0 && *t >= t_max {
            continue;
        }
        let slack = integrate(u, &big)? + c * t - mu_r;
        if worst.is_none_or(|w| slack < w.0) {
            worst = Some((slack, *t));
        }
    }
    let (margin, t) = worst.ok_or(Error::EmptyWindow)?;
    Ok(VerificationReport::new("volume-decay", margin, tol, Witness::time(t))
        .with_digest(digest(&[&traj.fields()[0], mu.density()]))
        .with_detail("mu_ball", mu_r)
        .with_detail("constant", c)
        .with_detail("window_end", t_max))
}

/// Measured smoothing constants `C₀(t) = sup_{B_r} u(t) r²/t` on stored
/// times with `t > μ(B̄_{2r})/2π`, for each experiment.
pub fn l1_linf_constants(traj: &Trajectory, mu: &DiscreteMeasure, r: f64, center: Point) -> Result<Vec<(f64, f64)>> {
    let g = *mu.grid();
    let t_min = mu.mass_in(&Mask::closed_disk(g, center, 2.0 * r))? / (2.0 * PI);
    let ball = Mask::closed_disk(g, center, r).intersection(traj.mask())?;
    let out: Vec<(f64, f64)> = traj
        .times()
        .iter()
        .zip(traj.fields())
        .filter(|(t, _)| **t > t_min)
        .map(|(t, u)| (*t, u.max_on(&ball).map_or(0.0, |x| x.1) * r * r / t))
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(out)
}

/// Universality probe for the L¹–L∞ smoothing constant: the largest measured
/// `C₀` across experiments is below `cap`, and per-experiment maxima agree
/// within a factor `ratio`.
pub fn check_l1_linf(experiments: &[(&Trajectory, &DiscreteMeasure)], r: f64, center: Point, cap: f64, ratio: f64) -> Result<VerificationReport> {
    let mut maxima = Vec::new();
    let mut worst_t = 0.0;
    let mut overall = 0.0f64;
    for (traj, mu) in experiments {
        let cs = l1_linf_constants(traj, mu, r, center)?;
        let (t, m) = cs.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if m > overall {
            overall = m;
            worst_t = t;
        }
        maxima.push(m);
    }
    if maxima.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let lo = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = (cap - overall).min(ratio * lo - overall);
    Ok(VerificationReport::new("l1-linf", margin, 0.0, Witness::time(worst_t))
        .with_detail("c0_max", overall)
        .with_detail("c0_min_experiment", lo))
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupResult {
    /// `u(t_min)/(2 t_min)` on the trajectory mask.
    #[serde(skip)]
    pub ghat: Field,
    #[serde(skip)]
    pub region: Mask,
    /// `(t_k, max relative increase of u/t from t_k to t_{k+1})` on the region.
    pub ledger: Vec<(f64, f64)>,
    pub max_violation: f64,
    /// Finite limit: `u/t` changes by less than `√(t₁/t₀)` between the two
    /// earliest times on the region.
    pub finite: bool,
    pub curvature: VerificationReport,
}

/// Initial-time blow-up extraction.
///
/// The region is the stencil interior of the trajectory mask at least
/// `buffer_cells` cells from `support`, intersected with `band`. The ledger
/// records the relative increase of `u/t` between consecutive stored times
/// (it should not increase). The curvature report checks `K(ĝ) = −1` within `tol_k`.
pub fn initial_time_blowup(traj: &Trajectory, support: &Mask, buffer_cells: f64, band: &Mask, tol_k: f64) -> Result<BlowupResult> {
    let g = *traj.mask().grid();
    let h = g.spacing();
    let away = support.complement().band(buffer_cells * h);
    let region = away.intersection(&traj.mask().stencil_interior())?.intersection(band)?;
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut ledger = Vec::new();
    let mut max_violation = 0.0f64;
    for k in 0..traj.len() - 1 {
        let (t0, t1) = (traj.times()[k], traj.times()[k + 1]);
        let (u0, u1) = (&traj.fields()[k], &traj.fields()[k + 1]);
        let inc = region.iter().map(|c| (u1.get(c) * t0) / (u0.get(c) * t1) - 1.0).fold(f64::NEG_INFINITY, f64::max);
        max_violation = max_violation.max(inc);
        ledger.push((t0, inc));
    }
    let t_min = traj.times()[0];
    let ghat = traj.fields()[0].scaled(0.5 / t_min);
    let finite = if traj.len() >= 2 {
        let t1 = traj.times()[1];
        let growth = region
            .iter()
            .map(|c| (traj.fields()[0].get(c) / t_min) / (traj.fields()[1].get(c) / t1))
            .fold(0.0f64, f64::max);
        growth < (t1 / t_min).sqrt()
    } else {
        true
    };
    let k = curvature_of(&ghat, traj.mask())?.scaled(0.5);
    let (cell, dev) = region
        .iter()
        .map(|c| (c, (k.get(c) + 1.0).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("region is non-empty");
    let curvature = VerificationReport::new("blowup-curvature", -dev, tol_k, Witness::cell(cell, g.center(cell), Some(t_min)))
        .with_digest(digest(&[&ghat]))
        .with_detail("curvature_at_witness", k.get(cell))
        .with_detail("region_cells", region.count() as f64);
    Ok(BlowupResult { ghat, region, ledger, max_violation, finite, curvature })
}

/// Rescaling ledger: `u_m(z, t) = m u(z, t/m)` for increasing `m` at fixed
/// `t`. Returns the largest relative decrease between consecutive `m` on
/// `region`.
pub fn rescaling_ledger(traj: &Trajectory, t: f64, ms: &[f64], region: &Mask) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut prev: Option<Field> = None;
    for &m in ms {
        let um = traj.at(t / m)?.scaled(m);
        if let Some(p) = &prev {
            let dec = region.iter().map(|c| p.get(c) / um.get(c) - 1.0).fold(f64::NEG_INFINITY, f64::max);
            out.push((m, dec));
        }
        prev = Some(um);
    }
    Ok(out)
}
