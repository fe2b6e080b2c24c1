//! Exact Euclidean distance transform (Felzenszwalb–Huttenlocher lower envelope).

use super::{Field, Mask};

const INF: f64 = 1e20;

/// 1-D squared distance transform of `f` into `out`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
            } else if s <= z[k] {
                // k == 0 and the new parabola dominates from -inf.
                v[0] = q;
                z[0] = -INF;
                z[1] = INF;
                break;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

pub(super) fn distance_to_outside(mask: &Mask) -> Field {
    let g = *mask.grid();
    // One-cell ring of outside cells around the grid.
    let w = g.nx() + 2;
    let hgt = g.ny() + 2;
    let mut d = vec![0.0; w * hgt];
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            if mask.contains(g.index(i, j)) {
                d[(j + 1) * w + i + 1] = INF;
            }
        }
    }
    let n = w.max(hgt);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for j in 0..hgt {
        f[..w].copy_from_slice(&d[j * w..(j + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        d[j * w..(j + 1) * w].copy_from_slice(&out[..w]);
    }
    for i in 0..w {
        for j in 0..hgt {
            f[j] = d[j * w + i];
        }
        edt_1d(&f[..hgt], &mut out[..hgt], &mut v, &mut z);
        for j in 0..hgt {
            d[j * w + i] = out[j];
        }
    }
    let h = g.spacing();
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            d[(j + 1) * w + i + 1].sqrt() * h
        })
        .collect();
    Field::new(g, values).expect("distance values are finite")
}
