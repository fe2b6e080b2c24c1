//! Complete hyperbolic conformal factors `H` (curvature −1, `Δ log H = 2H`).

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{io, Field, Grid, Mask, Point};
use crate::linalg::{solve_spd, CgOptions, Stencil};
use crate::spacetime::SpacetimeDomain;
use crate::verify::{digest, VerificationReport, Witness};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm { name: String },
    Solved { phi_b: f64, residual: f64, iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicFactor {
    factor: Field,
    mask: Mask,
    provenance: Provenance,
}

impl HyperbolicFactor {
    pub fn new(factor: Field, mask: Mask, provenance: Provenance) -> Result<Self> {
        if !factor.grid().same_as(mask.grid()) {
            return Err(Error::GridMismatch);
        }
        if mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        for k in mask.iter() {
            if !(factor.get(k) > 0.0) {
                return Err(Error::NonPositive { cell: k, value: factor.get(k) });
            }
        }
        Ok(Self { factor, mask, provenance })
    }

    pub fn factor(&self) -> &Field {
        &self.factor
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Gaussian curvature `−Δ log H / (2H)` on the stencil interior.
    pub fn gaussian_curvature(&self) -> Result<Field> {
        Ok(crate::lfde::curvature_of(&self.factor, &self.mask)?.scaled(0.5))
    }

    /// Writes the factor as a FIELD file plus a `.meta` sidecar line.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        io::save_field(path, &self.factor)?;
        let meta = match &self.provenance {
            Provenance::ClosedForm { name } => format!("closed-form {name}\n"),
            Provenance::Solved { phi_b, residual, iterations } => {
                format!("solved phi_b={phi_b} residual={residual} iterations={iterations}\n")
            }
        };
        let mut side = path.as_os_str().to_owned();
        side.push(".meta");
        std::fs::write(side, meta)?;
        Ok(())
    }
}

/// Poincaré factor `4ρ² / (ρ² − |z−c|²)²` on the open disk.
pub fn disk_factor(center: Point, radius: f64, z: Point) -> f64 {
    let s = radius * radius - z.dist(center).powi(2);
    4.0 * radius * radius / (s * s)
}

pub fn hyperbolic_disk(grid: Grid, center: Point, radius: f64) -> Result<HyperbolicFactor> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mask = Mask::disk(grid, center, radius);
    let factor = Field::from_fn_on(&mask, 0.0, |z| disk_factor(center, radius, z));
    HyperbolicFactor::new(factor, mask, Provenance::ClosedForm { name: format!("disk r={radius}") })
}

/// Factor `4r² / (|z|² − r²)²` of the complement of the closed disk `B_r`.
pub fn exterior_factor(r: f64, z: Point) -> f64 {
    let s = z.norm().powi(2) - r * r;
    4.0 * r * r / (s * s)
}

pub fn hyperbolic_exterior(grid: Grid, r: f64) -> Result<HyperbolicFactor> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let mask = Mask::from_fn(grid, |z| z.norm() > r);
    let factor = Field::from_fn_on(&mask, 0.0, |z| exterior_factor(r, z));
    HyperbolicFactor::new(factor, mask, Provenance::ClosedForm { name: format!("exterior r={r}") })
}

/// `∫_{|z|>ρ} H_r dA = 4πr² / (ρ² − r²)`.
pub fn exterior_volume_beyond(r: f64, rho: f64) -> Result<f64> {
    if !(0.0 < r && r < rho) {
        return Err(Error::InvalidArgument(format!("need 0 < r < ρ, got {r}, {rho}")));
    }
    Ok(4.0 * PI * r * r / (rho * rho - r * r))
}

/// Quadrature of `H_r` over `{R < |z| < ρ}` (ρ = largest disk inside the box)
/// plus the closed-form tail beyond ρ. Returns `(quadrature, tail)`.
pub fn exterior_volume_quadrature(grid: Grid, r: f64, big_r: f64) -> Result<(f64, f64)> {
    let o = grid.origin();
    let h = grid.spacing();
    let rho = [-o.x, -o.y, o.x + grid.nx() as f64 * h, o.y + grid.ny() as f64 * h]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !(big_r > r && rho > big_r) {
        return Err(Error::InvalidArgument("need r < R < half-width of the box".into()));
    }
    let annulus = Mask::from_fn(grid, |z| z.norm() > big_r && z.norm() < rho);
    let quad: f64 = annulus.iter().map(|k| exterior_factor(r, grid.center(k))).sum::<f64>() * h * h;
    Ok((quad, exterior_volume_beyond(r, rho)?))
}

/// Cusp factor `1 / (d² (−log 2d)²)` with `d = |z − b| ∈ (0, ½)`.
pub fn punctured_ball_factor(b: Point, z: Point) -> Result<f64> {
    let d = z.dist(b);
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::InvalidArgument(format!("|z − b| = {d} outside (0, 1/2)")));
    }
    let l = -(2.0 * d).ln();
    Ok(1.0 / (d * d * l * l))
}

pub fn hyperbolic_punctured_ball(grid: Grid, b: Point) -> Result<HyperbolicFactor> {
    let mask = Mask::from_fn(grid, |z| {
        let d = z.dist(b);
        d > 0.0 && d < 0.5
    });
    let factor = Field::from_fn_on(&mask, 0.0, |z| punctured_ball_factor(b, z).unwrap_or(0.0));
    HyperbolicFactor::new(factor, mask, Provenance::ClosedForm { name: "punctured ball".into() })
}

/// Dirichlet data for `φ = ½ log H` on boundary-adjacent cells.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryValue {
    Uniform(f64),
    /// Values are read from the field at boundary-adjacent cells.
    Trace(Field),
}

#[derive(Debug, Clone, Copy)]
pub struct LiouvilleOptions {
    /// Max-norm bound on `Δφ − e^{2φ}`, relaxed to a roundoff floor where
    /// the terms are large.
    pub tol: f64,
    pub max_iter: usize,
    pub cg: CgOptions,
}

impl Default for LiouvilleOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, cg: CgOptions { rel_tol: 1e-11, max_iter: 50_000 } }
    }
}

/// Damped Newton for `Δφ = e^{2φ}` on the stencil interior of `mask`.
pub fn solve_liouville(mask: &Mask, phi_b: &BoundaryValue, opts: LiouvilleOptions) -> Result<HyperbolicFactor> {
    let grid = *mask.grid();
    if mask.stencil_interior().is_empty() {
        return Err(Error::NoInteriorCell);
    }
    let mut phi_full = Field::zeros(grid);
    let uniform = match phi_b {
        BoundaryValue::Uniform(v) => {
            if !v.is_finite() {
                return Err(Error::InvalidArgument("boundary value must be finite".into()));
            }
            *v
        }
        BoundaryValue::Trace(f) => {
            if !f.grid().same_as(&grid) {
                return Err(Error::GridMismatch);
            }
            f.max_on(&mask.boundary_adjacent()).map(|x| x.1).unwrap_or(0.0)
        }
    };
    for k in mask.iter() {
        phi_full.set(k, uniform);
    }
    if let BoundaryValue::Trace(f) = phi_b {
        for k in mask.boundary_adjacent().iter() {
            phi_full.set(k, f.get(k));
        }
        // Start from the trace itself where available: Newton then starts at
        // the fixed point when the trace comes from an exact solution.
        for k in mask.stencil_interior().iter() {
            phi_full.set(k, f.get(k));
        }
    }

    let st = Stencil::new(mask);
    let n = st.len();
    let ghost = phi_full.values().to_vec();
    let mut w = st.gather(&phi_full);
    if let BoundaryValue::Uniform(_) = phi_b {
        // Constant φ_b is a supersolution; Newton decreases monotonically from it.
        w.iter_mut().for_each(|x| *x = uniform);
    }
    let inv_h2 = st.inv_h2;
    let mut lap = vec![0.0; n];
    let residual = |w: &[f64], out: &mut [f64], lap: &mut [f64]| {
        st.laplacian(w, &ghost, lap);
        for i in 0..n {
            out[i] = lap[i] - (2.0 * w[i]).exp();
        }
    };
    let floor = |w: f64| opts.tol.max(64.0 * f64::EPSILON * ((2.0 * w).exp() + 8.0 * w.abs().max(uniform.abs()) * inv_h2));
    let done = |f: &[f64], w: &[f64]| f.iter().zip(w).all(|(fi, wi)| fi.abs() <= floor(*wi));
    let norm2 = |f: &[f64]| f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_inf = |f: &[f64]| f.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let mut f = vec![0.0; n];
    residual(&w, &mut f, &mut lap);
    let (mut d, mut y, mut trial, mut ft) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut iterations = 0;
    while !done(&f, &w) {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonDiverged { iterations, residual: norm_inf(&f) });
        }
        iterations += 1;
        for i in 0..n {
            d[i] = 2.0 * (2.0 * w[i]).exp();
            y[i] = 0.0;
        }
        // (−J) δ = F with −J = 2e^{2φ} + (−Δ).
        solve_spd(&st, &d, 1.0, &f, &mut y, opts.cg);
        let fnorm = norm2(&f);
        let mut alpha = 1.0;
        let mut ok = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = w[i] + alpha * y[i];
            }
            residual(&trial, &mut ft, &mut lap);
            if norm2(&ft) < fnorm || done(&ft, &trial) {
                ok = true;
                break;
            }
            alpha *= 0.5;
        }
        if !ok {
            return Err(Error::LineSearchFailed { residual: norm_inf(&f) });
        }
        std::mem::swap(&mut w, &mut trial);
        std::mem::swap(&mut f, &mut ft);
    }
    let res = norm_inf(&f);
    let mut out = phi_full;
    st.scatter(&w, &mut out);
    let mut factor = Field::zeros(grid);
    for k in mask.iter() {
        factor.set(k, (2.0 * out.get(k)).exp());
    }
    log::debug!("liouville solve: {iterations} Newton iterations, residual {res:e}");
    HyperbolicFactor::new(factor, mask.clone(), Provenance::Solved { phi_b: uniform, residual: res, iterations })
}

#[derive(Debug, Clone)]
pub struct LiouvilleSweep {
    pub phi_b: Vec<f64>,
    pub factors: Vec<HyperbolicFactor>,
    /// Max relative change between successive solves on the band.
    pub successive_change: Vec<f64>,
    /// Largest cellwise decrease when φ_b increases (zero when monotone).
    pub monotonicity_defect: f64,
    /// Last successive change is below 0.5%.
    pub certified: bool,
}

impl LiouvilleSweep {
    pub fn finest(&self) -> &HyperbolicFactor {
        self.factors.last().expect("sweep is non-empty")
    }
}

/// Solves for each boundary value (ascending) and measures convergence on `band`.
pub fn liouville_sweep(mask: &Mask, phi_bs: &[f64], band: &Mask, opts: LiouvilleOptions) -> Result<LiouvilleSweep> {
    if phi_bs.is_empty() {
        return Err(Error::InvalidArgument("empty φ_b sweep".into()));
    }
    let mut phi_b = phi_bs.to_vec();
    phi_b.sort_by(f64::total_cmp);
    let factors = phi_b
        .iter()
        .map(|&p| solve_liouville(mask, &BoundaryValue::Uniform(p), opts))
        .collect::<Result<Vec<_>>>()?;
    let region = band.intersection(mask)?;
    let mut successive_change = Vec::new();
    let mut defect = 0.0f64;
    for w in factors.windows(2) {
        let (a, b) = (w[0].factor(), w[1].factor());
        successive_change.push(region.iter().map(|k| ((b.get(k) - a.get(k)) / b.get(k)).abs()).fold(0.0, f64::max));
        defect = defect.max(mask.iter().map(|k| a.get(k) - b.get(k)).fold(0.0, f64::max));
    }
    let certified = successive_change.last().is_some_and(|&c| c < 0.005);
    Ok(LiouvilleSweep { phi_b, factors, successive_change, monotonicity_defect: defect, certified })
}

/// `|∇f|` by central differences over in-mask neighbours (one-sided where
/// only one exists, zero where none).
pub fn gradient_norm(f: &Field, mask: &Mask) -> Field {
    let g = *f.grid();
    let h = g.spacing();
    let mut out = Field::zeros(g);
    for k in mask.iter() {
        let [e, w, n, s] = g.neighbors4(k).map(|x| x.filter(|&c| mask.contains(c)));
        let d = |a: Option<usize>, b: Option<usize>| match (a, b) {
            (Some(a), Some(b)) => (f.get(a) - f.get(b)) / (2.0 * h),
            (Some(a), None) => (f.get(a) - f.get(k)) / h,
            (None, Some(b)) => (f.get(k) - f.get(b)) / h,
            (None, None) => 0.0,
        };
        out.set(k, d(e, w).hypot(d(n, s)));
    }
    out
}

/// Schwarz monotonicity `H_A ≥ H_B` on the stencil interior of `A ⊆ B`,
/// with cellwise tolerance `5h |∇H_B|`.
pub fn schwarz_compare(sub: &HyperbolicFactor, sup: &HyperbolicFactor) -> Result<VerificationReport> {
    if !sub.mask.is_subset(&sup.mask)? {
        return Err(Error::InvalidArgument("inner domain is not contained in the outer domain".into()));
    }
    schwarz_compare_on(sub, sup, &sub.mask.stencil_interior())
}

/// As [`schwarz_compare`], restricted to `region`.
pub fn schwarz_compare_on(sub: &HyperbolicFactor, sup: &HyperbolicFactor, region: &Mask) -> Result<VerificationReport> {
    if !sub.mask.is_subset(&sup.mask)? {
        return Err(Error::InvalidArgument("inner domain is not contained in the outer domain".into()));
    }
    let grid = *sub.mask.grid();
    let h = grid.spacing();
    let grad = gradient_norm(&sup.factor, &sup.mask);
    let region = region.intersection(&sub.mask.stencil_interior())?;
    let (cell, diff, tol) = region
        .iter()
        .map(|k| (k, sub.factor.get(k) - sup.factor.get(k), 5.0 * h * grad.get(k)))
        .min_by(|a, b| (a.1 + a.2).total_cmp(&(b.1 + b.2)))
        .ok_or(Error::EmptyRegion)?;
    Ok(VerificationReport::new("schwarz", diff, tol, Witness::cell(cell, grid.center(cell), None))
        .with_digest(digest(&[&sub.factor, &sup.factor])))
}

#[derive(Debug, Clone, Serialize)]
pub struct Properness {
    pub level: f64,
    pub proper: bool,
    /// `(cell, slice)` sublevel points touching the outside of a slice.
    pub witnesses: Vec<(usize, usize)>,
}

/// Discrete parabolic properness of `H` at level `L`.
///
/// The sublevel set is taken over stencil-interior cells of slices with
/// `t_k ∈ (t₀+ε, t_K−ε)`; boundary-adjacent cells are the boundary surrogate
/// and count as `H = ∞`. The set is proper when every sublevel point keeps
/// a one-cell buffer: the cell and its 4-neighbours belong to the slices at
/// `k−1`, `k`, `k+1`.
pub fn parabolic_properness(s: &SpacetimeDomain, factors: &[Field], eps: f64, level: f64) -> Result<Properness> {
    if factors.len() != s.len() {
        return Err(Error::InvalidArgument(format!("{} factors for {} slices", factors.len(), s.len())));
    }
    let times = s.times();
    let (t0, tk) = (times[0], *times.last().unwrap());
    if !(eps > 0.0 && eps < (tk - t0) / 2.0) {
        return Err(Error::InvalidArgument(format!("ε must lie in (0, {})", (tk - t0) / 2.0)));
    }
    let g = *s.grid();
    let mut witnesses = Vec::new();
    for k in 0..s.len() {
        if !(times[k] > t0 + eps && times[k] < tk - eps) {
            continue;
        }
        let slice = s.slice(k);
        let f = &factors[k];
        if !f.grid().same_as(&g) {
            return Err(Error::GridMismatch);
        }
        for c in slice.stencil_interior().iter() {
            let v = f.get(c);
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("factor of slice {k} is not solved at cell {c}")));
            }
            if v > level {
                continue;
            }
            let cells = std::iter::once(c).chain(g.neighbors4(c).into_iter().flatten());
            let touches = cells
                .flat_map(|n| [k.checked_sub(1), Some(k), Some(k + 1)].into_iter().flatten().map(move |j| (n, j)))
                .filter(|&(_, j)| j < s.len())
                .any(|(n, j)| !s.slice(j).contains(n));
            if touches {
                witnesses.push((c, k));
            }
        }
    }
    Ok(Properness { level, proper: witnesses.is_empty(), witnesses })
}

pub fn properness_profile(s: &SpacetimeDomain, factors: &[Field], eps: f64, levels: &[f64]) -> Result<Vec<Properness>> {
    levels.iter().map(|&l| parabolic_properness(s, factors, eps, l)).collect()
}

/// Hyperbolic factors of every slice, solving once per distinct mask.
pub fn slice_factors(s: &SpacetimeDomain, phi_b: f64, opts: LiouvilleOptions) -> Result<Vec<Field>> {
    let mut out: Vec<Field> = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        if let Some(j) = (0..k).find(|&j| s.slice(j) == s.slice(k)) {
            out.push(out[j].clone());
            continue;
        }
        out.push(solve_liouville(s.slice(k), &BoundaryValue::Uniform(phi_b), opts)?.factor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn disk_closed_form() {
        let g = Grid::centered(1.1, 0.1).unwrap();
        assert_relative_eq!(disk_factor(Point::default(), 1.0, Point::default()), 4.0);
        assert_relative_eq!(disk_factor(Point::new(1.0, 1.0), 2.5, Point::new(1.0, 1.0)), 4.0 / 6.25);
        assert!(hyperbolic_disk(g, Point::default(), 0.0).is_err());
    }

    #[test]
    fn disk_curvature_is_minus_one() {
        let err = |h: f64| {
            let hd = hyperbolic_disk(Grid::centered(1.05, h).unwrap(), Point::default(), 1.0).unwrap();
            let k = hd.gaussian_curvature().unwrap();
            hd.mask().core_band(0.5).iter().map(|c| (k.get(c) + 1.0).abs()).fold(0.0, f64::max)
        };
        let (a, b) = (err(1.0 / 32.0), err(1.0 / 64.0));
        assert!(b < 2e-3, "{b}");
        assert!(a / b > 3.0);
    }

    #[test]
    fn punctured_ball_examples() {
        let b = Point::new(0.1, -0.2);
        let z = Point::new(0.1 + 0.5 / std::f64::consts::E, -0.2);
        let e2 = std::f64::consts::E.powi(2);
        assert_relative_eq!(punctured_ball_factor(b, z).unwrap(), 4.0 * e2, max_relative = 1e-12);
        assert!(punctured_ball_factor(b, b).is_err());
        assert!(punctured_ball_factor(b, Point::new(0.7, -0.2)).is_err());
        // The factor is also complete at d = ½; it decreases away from the cusp up to d ≈ 0.18.
        let radii = [0.15, 0.1, 0.05, 0.01, 0.001];
        let vals: Vec<f64> = radii.iter().map(|&r| punctured_ball_factor(b, Point::new(b.x + r, b.y)).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));

        let grid = Grid::centered(0.55, 1.0 / 256.0).unwrap();
        let pb = hyperbolic_punctured_ball(grid, Point::new(1.0 / 512.0, 1.0 / 512.0)).unwrap();
        let k = pb.gaussian_curvature().unwrap();
        let ring = Mask::from_fn(grid, |z| (0.15..0.25).contains(&z.dist(Point::new(1.0 / 512.0, 1.0 / 512.0))));
        let worst = ring.iter().map(|c| (k.get(c) + 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn exterior_volume_closed_form() {
        assert_relative_eq!(exterior_volume_beyond(1.0, 2.0).unwrap(), 4.0 * PI / 3.0);
        assert!(exterior_volume_beyond(2.0, 1.0).is_err());
        let g = Grid::centered(8.0, 1.0 / 16.0).unwrap();
        let (q, tail) = exterior_volume_quadrature(g, 1.0, 2.0).unwrap();
        assert_relative_eq!(tail, 4.0 * PI / 63.0, max_relative = 1e-12);
        assert!(((q + tail) / (4.0 * PI / 3.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn liouville_on_disk() {
        let g = Grid::centered(1.1, 1.0 / 32.0).unwrap();
        let m = Mask::disk(g, Point::default(), 1.0);
        let band = m.band(3.0 / 32.0);
        let sweep = liouville_sweep(&m, &[3.0, 5.0, 7.0], &band, LiouvilleOptions::default()).unwrap();
        assert!(sweep.monotonicity_defect <= 1e-9, "{}", sweep.monotonicity_defect);
        for f in &sweep.factors {
            if let Provenance::Solved { residual, .. } = f.provenance() {
                assert!(residual.is_finite());
            }
        }
        let exact = hyperbolic_disk(g, Point::default(), 1.0).unwrap();
        let core = m.core_band(0.5);
        let rel = core
            .iter()
            .map(|k| (sweep.finest().factor().get(k) / exact.factor().get(k) - 1.0).abs())
            .fold(0.0, f64::max);
        // The ghost cells sit about h/2 inside the circle, so the error is O(h).
        assert!(rel < 0.15, "{rel}");
    }

    #[test]
    fn liouville_fixed_point_converges_fast() {
        let g = Grid::centered(1.1, 1.0 / 16.0).unwrap();
        let m = Mask::disk(g, Point::default(), 1.0);
        let first = solve_liouville(&m, &BoundaryValue::Uniform(4.0), LiouvilleOptions::default()).unwrap();
        let phi = first.factor().map(|v| if v > 0.0 { 0.5 * v.ln() } else { 0.0 });
        let again = solve_liouville(&m, &BoundaryValue::Trace(phi), LiouvilleOptions::default()).unwrap();
        match again.provenance() {
            Provenance::Solved { iterations, .. } => assert!(*iterations <= 2, "{iterations}"),
            _ => unreachable!(),
        }
    }

    #[test]
    fn schwarz_examples() {
        let g = Grid::centered(1.1, 1.0 / 32.0).unwrap();
        let small = hyperbolic_disk(g, Point::default(), 0.5).unwrap();
        let big = hyperbolic_disk(g, Point::default(), 1.0).unwrap();
        let r = schwarz_compare(&small, &big).unwrap();
        assert!(r.pass && r.margin > 0.0);
        let same = schwarz_compare(&big, &big).unwrap();
        assert!(same.pass && same.margin.abs() < 1e-12);
        assert!(schwarz_compare(&big, &small).is_err());
    }

    #[test]
    fn properness_examples() {
        let g = Grid::centered(1.2, 0.1).unwrap();
        let times: Vec<f64> = (1..=6).map(|k| k as f64 * 0.1).collect();
        let cyl = SpacetimeDomain::from_fn(g, times.clone(), 1.0, |_| Mask::disk(g, Point::default(), 1.0)).unwrap();
        let f = slice_factors(&cyl, 4.0, LiouvilleOptions::default()).unwrap();
        for p in properness_profile(&cyl, &f, 0.05, &[1.0, 10.0, 1e6]).unwrap() {
            assert!(p.proper);
        }
        let p = g.cell_of(Point::default()).unwrap();
        let punct = SpacetimeDomain::from_fn(g, times, 1.0, |t| {
            let mut m = Mask::disk(g, Point::default(), 1.0);
            if t < 0.35 {
                m.set(p, false);
            }
            m
        })
        .unwrap();
        let f = slice_factors(&punct, 4.0, LiouvilleOptions::default()).unwrap();
        let prof = properness_profile(&punct, &f, 0.05, &[1.0, 10.0, 100.0, 1e6]).unwrap();
        assert!(!prof[2].proper);
        assert!(prof[2].witnesses.iter().any(|&(c, _)| c == p));
        // Monotone in L.
        for w in prof.windows(2) {
            assert!(w[0].proper || !w[1].proper);
        }
    }
}
