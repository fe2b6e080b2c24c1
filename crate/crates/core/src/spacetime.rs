//! Discrete spacetimes: a time-indexed family of domain masks inside a fixed
//! ambient box, with worldlines and the topological predicates built on them.

use std::collections::VecDeque;
use std::io::BufRead;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::io::{mask_to_string, read_mask_tokens, Tokens};
use crate::grid::{Adjacency, Grid, Mask};

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeDomain {
    grid: Grid,
    times: Vec<f64>,
    slices: Vec<Mask>,
    final_time: f64,
}

/// Maximal run `[first, last]` of time indices during which `cell` is inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Worldline {
    pub cell: usize,
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub continuous: bool,
    /// `(cell, time index)` pairs lying in the interior of the intersection
    /// of all later slices but missing from the slice itself.
    pub violations: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbDecomposition {
    pub perfect: Mask,
    pub scattered: Mask,
    pub rounds: usize,
}

impl SpacetimeDomain {
    pub fn new(times: Vec<f64>, slices: Vec<Mask>, final_time: f64) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::InvalidArgument(format!(
                "need one slice per time ({} times, {} slices)",
                times.len(),
                slices.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        if !(times[0] > 0.0 && *times.last().unwrap() < final_time) {
            return Err(Error::InvalidArgument(format!("times must lie inside (0, {final_time})")));
        }
        let grid = *slices[0].grid();
        for (k, s) in slices.iter().enumerate() {
            if !s.grid().same_as(&grid) {
                return Err(Error::GridMismatch);
            }
            if s.is_empty() {
                return Err(Error::InvalidArgument(format!("slice {k} is empty")));
            }
        }
        Ok(Self { grid, times, slices, final_time })
    }

    /// Samples `inside(t)` at each time.
    pub fn from_fn(grid: Grid, times: Vec<f64>, final_time: f64, slice: impl Fn(f64) -> Mask) -> Result<Self> {
        let slices = times.iter().map(|&t| slice(t)).collect::<Vec<_>>();
        for s in &slices {
            if !s.grid().same_as(&grid) {
                return Err(Error::GridMismatch);
            }
        }
        Self::new(times, slices, final_time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[Mask] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &Mask {
        &self.slices[k]
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn worldlines(&self) -> Vec<Worldline> {
        let mut out = Vec::new();
        for cell in 0..self.grid.len() {
            let mut start = None;
            for (k, s) in self.slices.iter().enumerate() {
                match (s.contains(cell), start) {
                    (true, None) => start = Some(k),
                    (false, Some(first)) => {
                        out.push(Worldline { cell, first, last: k - 1 });
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(first) = start {
                out.push(Worldline { cell, first, last: self.slices.len() - 1 });
            }
        }
        out
    }

    pub fn is_expanding(&self) -> bool {
        self.first_non_nested().is_none()
    }

    fn first_non_nested(&self) -> Option<usize> {
        // Nesting of consecutive slices implies nesting of all later ones.
        self.slices
            .windows(2)
            .position(|w| !w[0].is_subset(&w[1]).expect("shared grid"))
    }

    /// Continuity test for expanding spacetimes using the default 4-adjacency
    /// interior.
    pub fn is_continuous(&self) -> Result<ContinuityReport> {
        self.is_continuous_with(Adjacency::Four)
    }

    /// Compares each slice with the discrete interior of the intersection of
    /// all strictly later slices. Slices are open, so only cells of that
    /// interior missing from the slice count as violations.
    pub fn is_continuous_with(&self, adjacency: Adjacency) -> Result<ContinuityReport> {
        if let Some(k) = self.first_non_nested() {
            return Err(Error::NotExpanding(k));
        }
        let mut violations = Vec::new();
        let n = self.slices.len();
        let mut later = self.slices[n - 1].clone();
        for k in (0..n - 1).rev() {
            let interior = later.interior(adjacency);
            for cell in interior.iter() {
                if !self.slices[k].contains(cell) {
                    violations.push((cell, k));
                }
            }
            later = later.intersection(&self.slices[k]).expect("shared grid");
        }
        violations.sort_by_key(|&(c, k)| (k, c));
        Ok(ContinuityReport { continuous: violations.is_empty(), violations })
    }

    pub fn hindsight(&self, cell: usize, k: usize) -> Result<f64> {
        self.hindsight_with(cell, k, Adjacency::Four)
    }

    /// Earliest time reachable from `(cell, k)` by backward steps that move to
    /// the same cell or a spatial neighbour in the previous slice.
    pub fn hindsight_with(&self, cell: usize, k: usize, adjacency: Adjacency) -> Result<f64> {
        if k >= self.slices.len() || cell >= self.grid.len() || !self.slices[k].contains(cell) {
            return Err(Error::NotInside { cell, slice: k });
        }
        let mut frontier = vec![cell];
        let mut seen = vec![false; self.grid.len()];
        for j in (1..=k).rev() {
            let prev = &self.slices[j - 1];
            let mut next = Vec::new();
            for &c in &frontier {
                for n in std::iter::once(c).chain(self.grid.neighbors(c, adjacency)) {
                    if prev.contains(n) && !seen[n] {
                        seen[n] = true;
                        next.push(n);
                    }
                }
            }
            for &n in &next {
                seen[n] = false;
            }
            if next.is_empty() {
                return Ok(self.times[j]);
            }
            frontier = next;
        }
        Ok(self.times[0])
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("SPACETIME {} {}\n", self.len(), self.final_time);
        for (t, m) in self.times.iter().zip(&self.slices) {
            s.push_str(&format!("{t}\n"));
            s.push_str(&mask_to_string(m));
        }
        s
    }

    /// Reads `SPACETIME n [T]` followed by `n` blocks of `t_k` and a MASK. When
    /// `T` is absent the final time is placed one time step past the last
    /// slice.
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut t = Tokens::new(r);
        t.keyword("SPACETIME")?;
        let n: usize = t.parse("slice count")?;
        if n == 0 {
            return Err(t.err("spacetime needs at least one slice".into()));
        }
        let explicit_final = match t.peek()? {
            Some(tok) if tok != "MASK" && n > 0 => {
                // Either T, or the first slice time followed by MASK.
                let first: f64 = t.parse("time")?;
                if t.peek()? == Some("MASK") {
                    Err(first)
                } else {
                    Ok(first)
                }
            }
            _ => return Err(t.err("missing slice time".into())),
        };
        let mut times = Vec::with_capacity(n);
        let mut slices = Vec::with_capacity(n);
        let final_time = match explicit_final {
            Ok(final_time) => Some(final_time),
            Err(t0) => {
                times.push(t0);
                slices.push(read_mask_tokens(&mut t)?);
                None
            }
        };
        while times.len() < n {
            times.push(t.parse("time")?);
            slices.push(read_mask_tokens(&mut t)?);
        }
        let final_time = final_time.unwrap_or_else(|| {
            let last = times[n - 1];
            let dt = if n > 1 { last - times[n - 2] } else { last };
            last + dt
        });
        Self::new(times, slices, final_time)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Members of `set` with no neighbour in `set`.
pub fn isolated_points(set: &Mask, adjacency: Adjacency) -> Mask {
    let g = set.grid();
    Mask::from_cells(*g, set.iter().filter(|&k| !g.neighbors(k, adjacency).any(|n| set.contains(n))))
}

/// Splits `set` into a perfect part (no isolated members) and a scattered
/// part by iterated removal of isolated points.
pub fn cantor_bendixson(set: &Mask, adjacency: Adjacency) -> CbDecomposition {
    let g = *set.grid();
    let mut remaining = set.clone();
    let mut scattered = Mask::empty(g);
    let mut rounds = 0;
    // Only neighbours of removed cells can become isolated in later rounds.
    let mut candidates: VecDeque<usize> = set.iter().collect();
    loop {
        let isolated: Vec<usize> = candidates
            .drain(..)
            .filter(|&k| remaining.contains(k) && !g.neighbors(k, adjacency).any(|n| remaining.contains(n)))
            .collect();
        if isolated.is_empty() {
            break;
        }
        rounds += 1;
        for &k in &isolated {
            if remaining.contains(k) {
                remaining.set(k, false);
                scattered.set(k, true);
            }
        }
        for &k in &isolated {
            candidates.extend(g.neighbors(k, adjacency).filter(|&n| remaining.contains(n)));
        }
    }
    CbDecomposition { perfect: remaining, scattered, rounds }
}

/// Rasterised middle-thirds Cantor set of `depth` levels on `[a, b]`, taken
/// as the set of x-centres lying in a surviving interval.
pub fn cantor_intervals(a: f64, b: f64, depth: u32) -> Vec<(f64, f64)> {
    let mut intervals = vec![(a, b)];
    for _ in 0..depth {
        intervals = intervals
            .into_iter()
            .flat_map(|(lo, hi)| {
                let third = (hi - lo) / 3.0;
                [(lo, lo + third), (hi - third, hi)]
            })
            .collect();
    }
    intervals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Point;

    fn grid() -> Grid {
        Grid::centered(3.5, 0.25).unwrap()
    }

    fn cylinder(k: usize) -> SpacetimeDomain {
        let g = grid();
        let times = (1..=k).map(|i| i as f64 * 0.1).collect();
        SpacetimeDomain::from_fn(g, times, 1.0, |_| Mask::disk(g, Point::default(), 2.0)).unwrap()
    }

    fn punctured(puncture: Point) -> SpacetimeDomain {
        let g = grid();
        let p = g.cell_of(puncture).unwrap();
        let times = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        SpacetimeDomain::from_fn(g, times, 1.0, |t| {
            let mut m = Mask::disk(g, Point::default(), 2.0);
            if t <= 0.3 {
                m.set(p, false);
            }
            m
        })
        .unwrap()
    }

    #[test]
    fn validation() {
        let g = grid();
        let d = Mask::disk(g, Point::default(), 1.0);
        assert!(SpacetimeDomain::new(vec![0.2, 0.1], vec![d.clone(), d.clone()], 1.0).is_err());
        assert!(SpacetimeDomain::new(vec![0.0, 0.1], vec![d.clone(), d.clone()], 1.0).is_err());
        assert!(SpacetimeDomain::new(vec![0.1, 1.0], vec![d.clone(), d.clone()], 1.0).is_err());
        assert!(SpacetimeDomain::new(vec![0.1], vec![Mask::empty(g)], 1.0).is_err());
    }

    #[test]
    fn cylinder_worldlines_span_everything() {
        let s = cylinder(4);
        let w = s.worldlines();
        assert_eq!(w.len(), s.slice(0).count());
        assert!(w.iter().all(|w| w.first == 0 && w.last == 3));
    }

    #[test]
    fn puncture_worldline_starts_after_filling() {
        let s = punctured(Point::new(0.6, 0.1));
        let p = s.grid().cell_of(Point::new(0.6, 0.1)).unwrap();
        let w: Vec<_> = s.worldlines().into_iter().filter(|w| w.cell == p).collect();
        assert_eq!(w, vec![Worldline { cell: p, first: 3, last: 4 }]);
        let far = s.grid().cell_of(Point::new(3.0, 3.0)).unwrap();
        assert!(s.worldlines().iter().all(|w| w.cell != far));
    }

    #[test]
    fn worldlines_split_on_gaps() {
        let g = grid();
        let c = g.cell_of(Point::default()).unwrap();
        let base = Mask::disk(g, Point::new(2.0, 2.0), 0.6);
        let s = SpacetimeDomain::from_fn(g, vec![0.1, 0.2, 0.3, 0.4], 1.0, |t| {
            let mut m = base.clone();
            m.set(c, (t * 10.0).round() as i32 % 2 == 1);
            m
        })
        .unwrap();
        let w: Vec<_> = s.worldlines().into_iter().filter(|w| w.cell == c).collect();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].first, w[0].last, w[1].first, w[1].last), (0, 0, 2, 2));
    }

    #[test]
    fn expanding_examples() {
        let g = Grid::centered(3.2, 0.1).unwrap();
        let times: Vec<f64> = (1..=5).map(|i| i as f64 * 0.2).collect();
        let grow = SpacetimeDomain::from_fn(g, times.clone(), 1.2, |t| Mask::disk(g, Point::default(), 2.0 + t)).unwrap();
        let shrink = SpacetimeDomain::from_fn(g, times, 1.2, |t| Mask::disk(g, Point::default(), 2.0 - t)).unwrap();
        assert!(grow.is_expanding());
        assert!(!shrink.is_expanding());
        assert!(cylinder(3).is_expanding());
        assert!(matches!(shrink.is_continuous(), Err(Error::NotExpanding(0))));
    }

    #[test]
    fn puncture_is_discontinuous_at_last_punctured_time() {
        let s = punctured(Point::new(0.6, 0.1));
        let p = s.grid().cell_of(Point::new(0.6, 0.1)).unwrap();
        let r = s.is_continuous().unwrap();
        assert!(!r.continuous);
        assert_eq!(r.violations, vec![(p, 2)]);
        assert!(cylinder(5).is_continuous().unwrap().continuous);
    }

    #[test]
    fn growing_disks_continuous_against_brute_force() {
        let g = Grid::centered(3.2, 0.1).unwrap();
        let times: Vec<f64> = (1..=12).map(|i| i as f64 * 0.05).collect();
        let s = SpacetimeDomain::from_fn(g, times, 1.0, |t| Mask::disk(g, Point::default(), 2.0 + t)).unwrap();
        // Brute force: intersection over all later slices, interior by
        // explicit neighbour scan.
        let mut brute = true;
        for k in 0..s.len() - 1 {
            for c in 0..g.len() {
                let in_all = (k + 1..s.len()).all(|j| s.slice(j).contains(c));
                let nbrs_in_all = g.neighbors(c, Adjacency::Four).count() == 4
                    && g.neighbors(c, Adjacency::Four).all(|n| (k + 1..s.len()).all(|j| s.slice(j).contains(n)));
                if in_all && nbrs_in_all && !s.slice(k).contains(c) {
                    brute = false;
                }
            }
        }
        assert!(brute);
        assert!(s.is_continuous().unwrap().continuous);
    }

    #[test]
    fn isolated_point_examples() {
        let g = grid();
        let c = g.index(5, 5);
        let single = Mask::from_cells(g, [c]);
        assert_eq!(isolated_points(&single, Adjacency::Eight), single);
        let row = Mask::from_cells(g, (0..g.nx()).map(|i| g.index(i, 3)));
        assert!(isolated_points(&row, Adjacency::Four).is_empty());
    }

    #[test]
    fn rasterised_cantor_set_has_no_isolated_cells() {
        // Depth 3 on [0, 27]: gaps are at least one unit wide, cells 1/4.
        let g = Grid::new(Point::new(-0.5, 0.0), 0.25, 114, 4).unwrap();
        let iv = cantor_intervals(0.0, 27.0, 3);
        let set = Mask::from_fn(g, |p| iv.iter().any(|&(a, b)| p.x > a && p.x < b));
        assert!(set.count() > 0);
        // Brute force scan.
        let brute: Vec<usize> = set
            .iter()
            .filter(|&k| {
                let (i, j) = g.coords(k);
                !(-1isize..=1).any(|di| {
                    (-1isize..=1).any(|dj| {
                        (di, dj) != (0, 0) && {
                            let (a, b) = (i as isize + di, j as isize + dj);
                            a >= 0 && b >= 0 && (a as usize) < g.nx() && (b as usize) < g.ny() && set.contains(g.index(a as usize, b as usize))
                        }
                    })
                })
            })
            .collect();
        assert!(brute.is_empty());
        assert!(isolated_points(&set, Adjacency::Eight).is_empty());
    }

    #[test]
    fn cantor_bendixson_examples() {
        let g = grid();
        let chain = Mask::from_cells(g, [g.index(1, 1), g.index(4, 1), g.index(7, 1)]);
        let d = cantor_bendixson(&chain, Adjacency::Eight);
        assert!(d.perfect.is_empty());
        assert_eq!(d.scattered, chain);

        let block = Mask::from_fn(g, |p| p.x.abs() < 1.0 && p.y.abs() < 1.0);
        let d = cantor_bendixson(&block, Adjacency::Eight);
        assert_eq!(d.perfect, block);
        assert!(d.scattered.is_empty());

        let lone = g.cell_of(Point::new(2.5, 2.5)).unwrap();
        let mut with_lone = block.clone();
        with_lone.set(lone, true);
        let d = cantor_bendixson(&with_lone, Adjacency::Eight);
        assert_eq!(d.perfect, block);
        assert_eq!(d.scattered, Mask::from_cells(g, [lone]));
        assert_eq!(d.rounds, 1);
    }

    #[test]
    fn hindsight_examples() {
        assert!(cylinder(4).slice(3).iter().all(|c| cylinder(4).hindsight(c, 3).unwrap() == 0.1));

        // Component appearing at layer 1 with no earlier connection.
        let g = grid();
        let a = Mask::disk(g, Point::new(-2.0, 0.0), 0.7);
        let b = Mask::disk(g, Point::new(2.0, 0.0), 0.7);
        let s = SpacetimeDomain::new(vec![0.1, 0.2, 0.3], vec![a.clone(), a.union(&b).unwrap(), a.union(&b).unwrap()], 1.0).unwrap();
        for c in b.iter() {
            assert_eq!(s.hindsight(c, 2).unwrap(), 0.2);
        }
        for c in a.iter() {
            assert_eq!(s.hindsight(c, 2).unwrap(), 0.1);
        }
        let outside = g.cell_of(Point::new(3.0, 3.0)).unwrap();
        assert!(matches!(s.hindsight(outside, 2), Err(Error::NotInside { .. })));
    }

    #[test]
    fn spacetime_text_round_trip() {
        let s = punctured(Point::new(0.6, 0.1));
        let back = SpacetimeDomain::read(s.to_text().as_bytes()).unwrap();
        assert_eq!(back, s);
        // Final time may be omitted.
        let body = s.to_text().replacen("SPACETIME 5 1\n", "SPACETIME 5\n", 1);
        let back = SpacetimeDomain::read(body.as_bytes()).unwrap();
        assert_eq!(back.times(), s.times());
        assert!((back.final_time() - 0.6).abs() < 1e-12);
    }
}
