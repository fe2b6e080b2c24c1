use super::{Curve, Field, Mask};
use crate::error::{Error, Result};

/// 5-point Laplacian on the stencil interior of `m`.
///
/// Values on cells of `m` whose stencil leaves the mask act as Dirichlet
/// ghosts; the result is zero there and outside the mask.
pub fn laplacian(f: &Field, m: &Mask) -> Result<Field> {
    let g = f.grid();
    if !g.same_as(m.grid()) {
        return Err(Error::GridMismatch);
    }
    if m.is_empty() {
        return Err(Error::EmptyMask);
    }
    let inv_h2 = 1.0 / (g.spacing() * g.spacing());
    let v = f.values();
    let mut out = vec![0.0; g.len()];
    let nx = g.nx();
    for j in 1..g.ny().saturating_sub(1) {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            if m.contains(k) && m.contains(k + 1) && m.contains(k - 1) && m.contains(k + nx) && m.contains(k - nx) {
                out[k] = (v[k + 1] + v[k - 1] + v[k + nx] + v[k - nx] - 4.0 * v[k]) * inv_h2;
            }
        }
    }
    Field::new(*g, out)
}

/// Midpoint quadrature `Σ f h²` over the cells of `m`.
pub fn integrate(f: &Field, m: &Mask) -> Result<f64> {
    if !f.grid().same_as(m.grid()) {
        return Err(Error::GridMismatch);
    }
    let area = f.grid().cell_area();
    Ok(m.iter().map(|k| f.get(k)).sum::<f64>() * area)
}

/// Length of `c` in the metric `u |dz|²`.
///
/// Each segment is split into pieces no longer than the grid spacing and
/// `√u` is sampled (bilinearly) at the piece midpoints.
pub fn curve_length(c: &Curve, u: &Field, m: &Mask) -> Result<f64> {
    let g = u.grid();
    if !g.same_as(m.grid()) {
        return Err(Error::GridMismatch);
    }
    for &p in c.vertices() {
        if !g.cell_of(p).is_some_and(|k| m.contains(k)) {
            return Err(Error::OutsideMask { x: p.x, y: p.y });
        }
    }
    let h = g.spacing();
    let mut length = 0.0;
    for w in c.vertices().windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg = a.dist(b);
        let pieces = (seg / h).ceil().max(1.0) as usize;
        let dl = seg / pieces as f64;
        for s in 0..pieces {
            let mid = a.lerp(b, (s as f64 + 0.5) / pieces as f64);
            let val = u
                .interpolate(mid, m)
                .ok_or(Error::OutsideMask { x: mid.x, y: mid.y })?;
            if !(val > 0.0) {
                let cell = g.cell_of(mid).unwrap_or(0);
                return Err(Error::NonPositive { cell, value: val });
            }
            length += val.sqrt() * dl;
        }
    }
    Ok(length)
}
