//! Matrix-free operators of the form `diag(d) + c·(−Δ_h)` restricted to the
//! stencil interior of a mask, and a Jacobi-preconditioned conjugate gradient
//! solver for them.

use crate::grid::{Field, Mask};

const GHOST: u32 = u32::MAX;

/// Unknown numbering of the stencil interior of a mask.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    /// Grid cell of each unknown.
    pub cells: Vec<usize>,
    /// Unknown index of each neighbour (E, W, N, S), or `GHOST`.
    nbr: Vec<[u32; 4]>,
    /// Grid cell of each neighbour.
    nbr_cell: Vec<[usize; 4]>,
    pub inv_h2: f64,
}

impl Stencil {
    pub fn new(mask: &Mask) -> Self {
        let g = *mask.grid();
        let interior = mask.stencil_interior();
        let mut slot = vec![GHOST; g.len()];
        let cells: Vec<usize> = interior.iter().collect();
        for (n, &k) in cells.iter().enumerate() {
            slot[k] = n as u32;
        }
        let nx = g.nx();
        let nbr_cell: Vec<[usize; 4]> = cells.iter().map(|&k| [k + 1, k - 1, k + nx, k - nx]).collect();
        let nbr = nbr_cell.iter().map(|c| c.map(|k| slot[k])).collect();
        let h = g.spacing();
        Self { cells, nbr, nbr_cell, inv_h2: 1.0 / (h * h) }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn gather(&self, f: &Field) -> Vec<f64> {
        self.cells.iter().map(|&k| f.get(k)).collect()
    }

    pub fn scatter(&self, x: &[f64], f: &mut Field) {
        let v = f.values_mut();
        for (&k, &xv) in self.cells.iter().zip(x) {
            v[k] = xv;
        }
    }

    /// `Δ_h w` at every unknown, reading interior values from `x` and ghost
    /// values from `ghost` (a full-grid array).
    pub fn laplacian(&self, x: &[f64], ghost: &[f64], out: &mut [f64]) {
        for n in 0..self.cells.len() {
            let mut s = -4.0 * x[n];
            for e in 0..4 {
                let m = self.nbr[n][e];
                s += if m == GHOST { ghost[self.nbr_cell[n][e]] } else { x[m as usize] };
            }
            out[n] = s * self.inv_h2;
        }
    }

    /// `y = diag(d) x + c (−Δ_h) x` with homogeneous ghosts.
    fn apply(&self, d: &[f64], c: f64, x: &[f64], y: &mut [f64]) {
        let a = c * self.inv_h2;
        for n in 0..self.cells.len() {
            let nb = &self.nbr[n];
            let mut s = 4.0 * x[n];
            for &m in nb {
                if m != GHOST {
                    s -= x[m as usize];
                }
            }
            y[n] = d[n] * x[n] + a * s;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CgStats {
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(diag(d) + c(−Δ_h)) x = b` by Jacobi-preconditioned CG. `d > 0`,
/// `c ≥ 0`, so the operator is symmetric positive definite.
pub(crate) fn solve_spd(st: &Stencil, d: &[f64], c: f64, b: &[f64], x: &mut [f64], opts: CgOptions) -> CgStats {
    let n = st.len();
    let diag: Vec<f64> = d.iter().map(|&di| di + 4.0 * c * st.inv_h2).collect();
    let mut r = vec![0.0; n];
    st.apply(d, c, x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgStats { iterations: 0, converged: true };
    }
    let target = opts.rel_tol * bnorm;
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..opts.max_iter {
        if dot(&r, &r).sqrt() <= target {
            return CgStats { iterations: it, converged: true };
        }
        st.apply(d, c, &p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return CgStats { iterations: it, converged: false };
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let converged = dot(&r, &r).sqrt() <= target;
    CgStats { iterations: opts.max_iter, converged }
}
