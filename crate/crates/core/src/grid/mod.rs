//! Uniform Cartesian grids over a planar box, cell-centred fields and masks.
//!
//! Cells are indexed row-major with `y` outer and `x` inner, so cell `(i, j)`
//! lives at `j * nx + i` and has centre `origin + ((i + ½) h, (j + ½) h)`.

mod distance;
pub mod io;
mod ops;

pub use ops::{curve_length, integrate, laplacian};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point, s: f64) -> Point {
        Point::new(self.x + s * (other.x - self.x), self.y + s * (other.y - self.y))
    }
}

/// Neighbourhood used by set-topological queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Adjacency {
    Four,
    Eight,
}

impl Adjacency {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(isize, isize); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        match self {
            Adjacency::Four => &FOUR,
            Adjacency::Eight => &EIGHT,
        }
    }
}

impl TryFrom<u8> for Adjacency {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            4 => Ok(Adjacency::Four),
            8 => Ok(Adjacency::Eight),
            _ => Err(Error::InvalidArgument(format!("adjacency must be 4 or 8, got {n}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    origin: Point,
    spacing: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(origin: Point, spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3x3 cells, got {nx}x{ny}")));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { origin, spacing, nx, ny })
    }

    /// Square box `[-half_width, half_width]²` tiled by cells of size `spacing`.
    pub fn centered(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        let n = (2.0 * half_width / spacing).round() as usize;
        let hw = 0.5 * n as f64 * spacing;
        Grid::new(Point::new(-hw, -hw), spacing, n, n)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        self.center_ij(i, j)
    }

    pub fn center_ij(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.spacing,
            self.origin.y + (j as f64 + 0.5) * self.spacing,
        )
    }

    /// Cell whose closed square contains `p`, if any.
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        let fx = (p.x - self.origin.x) / self.spacing;
        let fy = (p.y - self.origin.y) / self.spacing;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        if fx > self.nx as f64 || fy > self.ny as f64 {
            return None;
        }
        Some(self.index(i, j))
    }

    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.coords(idx);
        let i2 = i as isize + di;
        let j2 = j as isize + dj;
        if i2 < 0 || j2 < 0 || i2 >= self.nx as isize || j2 >= self.ny as isize {
            None
        } else {
            Some(self.index(i2 as usize, j2 as usize))
        }
    }

    /// East, west, north, south neighbours; `None` past the grid edge.
    pub fn neighbors4(&self, idx: usize) -> [Option<usize>; 4] {
        [
            self.offset(idx, 1, 0),
            self.offset(idx, -1, 0),
            self.offset(idx, 0, 1),
            self.offset(idx, 0, -1),
        ]
    }

    pub fn neighbors(&self, idx: usize, adjacency: Adjacency) -> impl Iterator<Item = usize> + '_ {
        adjacency
            .offsets()
            .iter()
            .filter_map(move |&(di, dj)| self.offset(idx, di, dj))
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.center(k))).collect();
        Self { grid, values }
    }

    /// Evaluates `f` on cells of `mask`, `fill` elsewhere.
    pub fn from_fn_on(mask: &Mask, fill: f64, f: impl Fn(Point) -> f64) -> Self {
        let grid = *mask.grid();
        let values = (0..grid.len())
            .map(|k| if mask.contains(k) { f(grid.center(k)) } else { fill })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid, values })
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    /// Bilinear interpolation between cell centres, using only corners inside
    /// `mask` (weights renormalised). Returns `None` when no corner qualifies.
    pub fn interpolate(&self, p: Point, mask: &Mask) -> Option<f64> {
        let g = &self.grid;
        let h = g.spacing();
        let fx = ((p.x - g.origin.x) / h - 0.5).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((p.y - g.origin.y) / h - 0.5).clamp(0.0, (g.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(g.nx - 2);
        let j0 = (fy.floor() as usize).min(g.ny - 2);
        let sx = fx - i0 as f64;
        let sy = fy - j0 as f64;
        let corners = [
            (i0, j0, (1.0 - sx) * (1.0 - sy)),
            (i0 + 1, j0, sx * (1.0 - sy)),
            (i0, j0 + 1, (1.0 - sx) * sy),
            (i0 + 1, j0 + 1, sx * sy),
        ];
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (i, j, w) in corners {
            let k = g.index(i, j);
            if mask.contains(k) && w > 0.0 {
                acc += w * self.values[k];
                wsum += w;
            }
        }
        if wsum > 0.0 {
            Some(acc / wsum)
        } else {
            // Point sits exactly on a corner with zero-weight neighbours.
            g.cell_of(p).filter(|&k| mask.contains(k)).map(|k| self.values[k])
        }
    }

    pub fn max_on(&self, mask: &Mask) -> Option<(usize, f64)> {
        mask.iter()
            .map(|k| (k, self.values[k]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn min_on(&self, mask: &Mask) -> Option<(usize, f64)> {
        mask.iter()
            .map(|k| (k, self.values[k]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: Grid,
    inside: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries, grid has {} cells",
                inside.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, inside })
    }

    pub fn empty(grid: Grid) -> Self {
        Self { grid, inside: vec![false; grid.len()] }
    }

    pub fn full(grid: Grid) -> Self {
        Self { grid, inside: vec![true; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> bool) -> Self {
        let inside = (0..grid.len()).map(|k| f(grid.center(k))).collect();
        Self { grid, inside }
    }

    pub fn from_fn_idx(grid: Grid, f: impl Fn(usize) -> bool) -> Self {
        let inside = (0..grid.len()).map(f).collect();
        Self { grid, inside }
    }

    pub fn from_cells(grid: Grid, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(grid);
        for k in cells {
            m.inside[k] = true;
        }
        m
    }

    /// Open disk rasterised by the strict inequality on cell centres.
    pub fn disk(grid: Grid, center: Point, radius: f64) -> Self {
        Self::from_fn(grid, |p| p.dist(center) < radius)
    }

    /// Closed disk rasterised by the non-strict inequality on cell centres.
    pub fn closed_disk(grid: Grid, center: Point, radius: f64) -> Self {
        Self::from_fn(grid, |p| p.dist(center) <= radius)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn set(&mut self, idx: usize, v: bool) {
        self.inside[idx] = v;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    fn check(&self, other: &Mask) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_subset(&self, other: &Mask) -> Result<bool> {
        self.check(other)?;
        Ok(self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b))
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.check(other)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(&a, &b)| a || b).collect();
        Ok(Mask { grid: self.grid, inside })
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask> {
        self.check(other)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(&a, &b)| a && b).collect();
        Ok(Mask { grid: self.grid, inside })
    }

    pub fn difference(&self, other: &Mask) -> Result<Mask> {
        self.check(other)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(&a, &b)| a && !b).collect();
        Ok(Mask { grid: self.grid, inside })
    }

    pub fn complement(&self) -> Mask {
        Mask { grid: self.grid, inside: self.inside.iter().map(|&b| !b).collect() }
    }

    /// Cells whose whole `adjacency` neighbourhood lies in the mask. Cells on
    /// the grid edge are never interior.
    pub fn interior(&self, adjacency: Adjacency) -> Mask {
        let g = &self.grid;
        let inside = (0..g.len())
            .map(|k| {
                self.inside[k]
                    && adjacency
                        .offsets()
                        .iter()
                        .all(|&(di, dj)| g.offset(k, di, dj).is_some_and(|n| self.inside[n]))
            })
            .collect();
        Mask { grid: self.grid, inside }
    }

    /// Cells carrying the unknowns of the 5-point stencil.
    pub fn stencil_interior(&self) -> Mask {
        self.interior(Adjacency::Four)
    }

    /// Cells of the mask whose 5-point stencil leaves it; these hold ghost
    /// (Dirichlet) values.
    pub fn boundary_adjacent(&self) -> Mask {
        let interior = self.stencil_interior();
        let inside = self.inside.iter().zip(&interior.inside).map(|(&a, &b)| a && !b).collect();
        Mask { grid: self.grid, inside }
    }

    /// Euclidean distance from each cell centre to the nearest centre not in
    /// the mask (cells past the grid edge count as outside).
    pub fn distance_to_outside(&self) -> Field {
        distance::distance_to_outside(self)
    }

    /// Cells whose distance to the outside is at least `min_distance`.
    pub fn band(&self, min_distance: f64) -> Mask {
        let d = self.distance_to_outside();
        let inside = (0..self.grid.len())
            .map(|k| self.inside[k] && d.get(k) >= min_distance)
            .collect();
        Mask { grid: self.grid, inside }
    }

    /// Cells at least `fraction` of the inradius away from the outside.
    pub fn core_band(&self, fraction: f64) -> Mask {
        let d = self.distance_to_outside();
        let inradius = self.iter().map(|k| d.get(k)).fold(0.0, f64::max);
        let cut = fraction * inradius;
        let inside = (0..self.grid.len())
            .map(|k| self.inside[k] && d.get(k) >= cut)
            .collect();
        Mask { grid: self.grid, inside }
    }
}

/// Polyline in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    vertices: Vec<Point>,
}

impl Curve {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("curve needs at least 2 vertices".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("consecutive curve vertices coincide".into()));
        }
        Ok(Self { vertices })
    }

    pub fn segment(a: Point, b: Point) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(Point::new(0.0, 0.0), 0.5, 4, 3).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(Point::default(), 0.0, 4, 4).is_err());
        assert!(Grid::new(Point::default(), -1.0, 4, 4).is_err());
        assert!(Grid::new(Point::default(), 1.0, 2, 4).is_err());
    }

    #[test]
    fn cell_centres() {
        let g = grid();
        assert_eq!(g.center_ij(0, 0), Point::new(0.25, 0.25));
        assert_eq!(g.center(g.index(3, 2)), Point::new(1.75, 1.25));
        assert_eq!(g.cell_of(Point::new(1.9, 0.1)), Some(g.index(3, 0)));
        assert_eq!(g.cell_of(Point::new(-0.1, 0.1)), None);
    }

    #[test]
    fn centered_box_is_symmetric() {
        let g = Grid::centered(1.0, 0.25).unwrap();
        assert_eq!(g.nx(), 8);
        assert_eq!(g.center_ij(0, 0), Point::new(-0.875, -0.875));
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = grid();
        let mut v = vec![1.0; g.len()];
        v[5] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite(5))));
    }

    #[test]
    fn boundary_adjacent_plus_interior_is_mask() {
        let g = Grid::centered(1.0, 0.1).unwrap();
        let m = Mask::disk(g, Point::default(), 0.8);
        let a = m.stencil_interior();
        let b = m.boundary_adjacent();
        assert_eq!(a.count() + b.count(), m.count());
        assert!(a.intersection(&b).unwrap().is_empty());
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let g = Grid::centered(1.0, 0.1).unwrap();
        let f = Field::from_fn(g, |p| 2.0 * p.x - p.y + 1.0);
        let m = Mask::full(g);
        let p = Point::new(0.123, -0.456);
        assert!((f.interpolate(p, &m).unwrap() - (2.0 * 0.123 + 0.456 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn distance_band() {
        let g = Grid::centered(2.0, 0.05).unwrap();
        let m = Mask::disk(g, Point::default(), 1.0);
        let d = m.distance_to_outside();
        let centre = g.cell_of(Point::new(0.01, 0.01)).unwrap();
        assert!((d.get(centre) - 1.0).abs() < 0.06);
        let band = m.core_band(0.5);
        for k in band.iter() {
            assert!(g.center(k).norm() < 0.56);
        }
    }
}
