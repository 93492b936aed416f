//! Uniform Cartesian grids on the periodic torus and on a wall-bounded strip.

use serde::{Deserialize, Serialize};

use super::DomainError;

/// Boundary treatment of axis 0; remaining axes are always periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// All axes periodic (flat torus).
    Periodic,
    /// Axis 0 bounded by impermeable walls; other axes periodic.
    Strip,
}

/// Uniform grid in one or two dimensions.
///
/// Axis slots beyond `dim` are kept with a single cell of unit extent, so
/// `cell_volume` is always the product over the two slots. Cells are stored
/// row-major: index `i0 * n[1] + i1` with axis 1 fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    extent: [f64; 2],
    origin: [f64; 2],
    topology: Topology,
}

impl Grid {
    fn validated(
        dim: usize,
        n: [usize; 2],
        extent: [f64; 2],
        origin: [f64; 2],
        topology: Topology,
    ) -> Result<Self, DomainError> {
        if dim == 0 || dim > 2 {
            return Err(DomainError::BadDimension(dim));
        }
        for a in 0..dim {
            if n[a] < 4 {
                return Err(DomainError::TooFewCells(n[a]));
            }
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(DomainError::BadExtent(extent[a]));
            }
        }
        Ok(Self {
            dim,
            n,
            extent,
            origin,
            topology,
        })
    }

    /// Periodic unit torus `[0,1)` with `n` cells.
    pub fn torus_1d(n: usize) -> Result<Self, DomainError> {
        Self::validated(1, [n, 1], [1.0, 1.0], [0.0, 0.0], Topology::Periodic)
    }

    /// Periodic torus with per-axis cell counts and extents.
    pub fn torus_2d(n: [usize; 2], extent: [f64; 2]) -> Result<Self, DomainError> {
        Self::validated(2, n, extent, [0.0, 0.0], Topology::Periodic)
    }

    /// Wall-bounded interval `[-half_width, half_width]` with `n` cells.
    pub fn strip_1d(n: usize, half_width: f64) -> Result<Self, DomainError> {
        Self::validated(
            1,
            [n, 1],
            [2.0 * half_width, 1.0],
            [-half_width, 0.0],
            Topology::Strip,
        )
    }

    /// Strip `[-half_width, half_width] x [0, 1)`, periodic in the transverse axis.
    pub fn strip_2d(n: [usize; 2], half_width: f64) -> Result<Self, DomainError> {
        Self::validated(
            2,
            n,
            [2.0 * half_width, 1.0],
            [-half_width, 0.0],
            Topology::Strip,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn cells_per_axis(&self) -> [usize; 2] {
        self.n
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.n[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn num_cells(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Physical volume of one cell (unused axis slots contribute factor 1).
    pub fn cell_volume(&self) -> f64 {
        self.spacing(0) * if self.dim > 1 { self.spacing(1) } else { 1.0 }
    }

    /// Total domain volume.
    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.num_cells() as f64
    }

    #[inline]
    pub fn index(&self, i: [usize; 2]) -> usize {
        i[0] * self.n[1] + i[1]
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        [idx / self.n[1], idx % self.n[1]]
    }

    /// Center coordinates of cell `i`.
    pub fn center(&self, i: [usize; 2]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for a in 0..2 {
            x[a] = self.origin[a] + (i[a] as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    /// Neighbor index along `axis` with the grid's boundary rule.
    ///
    /// Returns `None` when the neighbor lies behind a wall; the caller mirrors
    /// the state instead.
    pub fn neighbor(&self, i: [usize; 2], axis: usize, step: isize) -> Option<[usize; 2]> {
        let n = self.n[axis] as isize;
        let raw = i[axis] as isize + step;
        let wrapped = if raw < 0 || raw >= n {
            match (self.topology, axis) {
                (Topology::Strip, 0) => return None,
                _ => raw.rem_euclid(n),
            }
        } else {
            raw
        };
        let mut j = i;
        j[axis] = wrapped as usize;
        Some(j)
    }

    /// True when both grids describe the same domain decomposition.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self == other
    }

    /// True when `self` covers the same physical domain as `other`
    /// (possibly at a different resolution).
    pub fn same_domain(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.topology == other.topology
            && self.extent == other.extent
            && self.origin == other.origin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_wraps_strip_walls() {
        let t = Grid::torus_1d(8).unwrap();
        assert_eq!(t.neighbor([0, 0], 0, -1), Some([7, 0]));
        let s = Grid::strip_1d(8, 1.0).unwrap();
        assert_eq!(s.neighbor([0, 0], 0, -1), None);
        assert_eq!(s.neighbor([7, 0], 0, 1), None);
        assert_eq!(s.neighbor([3, 0], 0, 1), Some([4, 0]));
    }

    #[test]
    fn volumes_and_centers() {
        let g = Grid::torus_2d([8, 4], [2.0, 1.0]).unwrap();
        assert_eq!(g.num_cells(), 32);
        assert!((g.cell_volume() - 0.0625).abs() < 1e-15);
        assert!((g.volume() - 2.0).abs() < 1e-15);
        let c = g.center([0, 0]);
        assert!((c[0] - 0.125).abs() < 1e-15);
        assert!((c[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid::torus_1d(3).is_err());
        assert!(Grid::torus_2d([8, 2], [1.0, 1.0]).is_err());
    }
}
