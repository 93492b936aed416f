//! Cell-averaged fields of conservative states and midpoint quadrature.

use serde::{Deserialize, Serialize};

use super::{DomainError, Grid};
use crate::thermo::{GasModel, State};

/// Compensated (Neumaier) summation; keeps quadrature exact to round-off
/// even for the large cell counts of refinement studies.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A grid together with one conservative state per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid,
    cells: Vec<State>,
}

impl Field {
    /// Builds a field and checks every cell against the finite-energy domain.
    pub fn new(grid: Grid, cells: Vec<State>) -> Result<Self, DomainError> {
        if cells.len() != grid.num_cells() {
            return Err(DomainError::CellCountMismatch {
                expected: grid.num_cells(),
                found: cells.len(),
            });
        }
        for (index, cell) in cells.iter().enumerate() {
            cell.validate()
                .map_err(|source| DomainError::BadCell { index, source })?;
        }
        Ok(Self { grid, cells })
    }

    pub fn uniform(grid: Grid, state: State) -> Result<Self, DomainError> {
        let n = grid.num_cells();
        Self::new(grid, vec![state; n])
    }

    /// Fills cells by evaluating `f` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> State) -> Result<Self, DomainError> {
        let cells = (0..grid.num_cells())
            .map(|idx| f(grid.center(grid.multi_index(idx))))
            .collect();
        Self::new(grid, cells)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[State] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> &State {
        &self.cells[idx]
    }

    pub fn cell_at(&self, i: [usize; 2]) -> &State {
        &self.cells[self.grid.index(i)]
    }

    /// Midpoint quadrature of a per-cell observable; exact for cell-constant
    /// observables. Any infinite cell value propagates to `+inf`.
    pub fn integrate(&self, observable: impl Fn(&State) -> f64) -> f64 {
        let vol = self.grid.cell_volume();
        let mut infinite = false;
        let sum = neumaier_sum(self.cells.iter().map(|c| {
            let v = observable(c);
            if v.is_infinite() {
                infinite = true;
            }
            v
        }));
        if infinite {
            f64::INFINITY
        } else {
            sum * vol
        }
    }

    /// Like [`Field::integrate`] but hands the cell index to the observable,
    /// for integrands that also depend on the cell position.
    pub fn integrate_indexed(&self, observable: impl Fn(usize, &State) -> f64) -> f64 {
        let vol = self.grid.cell_volume();
        let mut infinite = false;
        let sum = neumaier_sum(self.cells.iter().enumerate().map(|(i, c)| {
            let v = observable(i, c);
            if v.is_infinite() {
                infinite = true;
            }
            v
        }));
        if infinite {
            f64::INFINITY
        } else {
            sum * vol
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate(|c| c.rho)
    }

    pub fn total_entropy(&self) -> f64 {
        self.integrate(|c| c.entropy)
    }

    pub fn total_energy(&self, gas: &GasModel) -> f64 {
        self.integrate(|c| gas.total_energy(c))
    }

    /// L1 distance between two fields on the same grid, summed over components.
    pub fn l1_distance(&self, other: &Field) -> Result<f64, DomainError> {
        if !self.grid.same_layout(&other.grid) {
            return Err(DomainError::GridMismatch(
                "l1 distance needs identical grids".into(),
            ));
        }
        let vol = self.grid.cell_volume();
        Ok(vol
            * neumaier_sum(self.cells.iter().zip(&other.cells).map(|(a, b)| {
                (a.rho - b.rho).abs()
                    + (a.m[0] - b.m[0]).abs()
                    + (a.m[1] - b.m[1]).abs()
                    + (a.entropy - b.entropy).abs()
            })))
    }

    /// Cell-average restriction onto a coarser grid over the same domain.
    /// The refinement ratio must be an integer per axis.
    pub fn restrict_to(&self, coarse: &Grid) -> Result<Field, DomainError> {
        if !self.grid.same_domain(coarse) {
            return Err(DomainError::GridMismatch(
                "restriction requires the same physical domain".into(),
            ));
        }
        let nf = self.grid.cells_per_axis();
        let nc = coarse.cells_per_axis();
        let mut ratio = [1usize; 2];
        for a in 0..2 {
            if nf[a] % nc[a] != 0 {
                return Err(DomainError::BadRestriction {
                    fine: nf[a],
                    coarse: nc[a],
                });
            }
            ratio[a] = nf[a] / nc[a];
        }
        if ratio == [1, 1] {
            return Ok(Field {
                grid: coarse.clone(),
                cells: self.cells.clone(),
            });
        }
        let weight = 1.0 / (ratio[0] * ratio[1]) as f64;
        let mut cells = Vec::with_capacity(coarse.num_cells());
        for idx in 0..coarse.num_cells() {
            let c = coarse.multi_index(idx);
            let (mut rho, mut m0, mut m1, mut s) = (0.0, 0.0, 0.0, 0.0);
            for r0 in 0..ratio[0] {
                for r1 in 0..ratio[1] {
                    let st = self.cell_at([c[0] * ratio[0] + r0, c[1] * ratio[1] + r1]);
                    rho += st.rho;
                    m0 += st.m[0];
                    m1 += st.m[1];
                    s += st.entropy;
                }
            }
            cells.push(State::new(
                rho * weight,
                [m0 * weight, m1 * weight],
                s * weight,
            ));
        }
        Field::new(coarse.clone(), cells)
    }

    /// Linear combination used by ensemble averaging; grids must match.
    pub(crate) fn axpy(&mut self, alpha: f64, other: &Field) {
        debug_assert!(self.grid.same_layout(&other.grid));
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.rho += alpha * b.rho;
            a.m[0] += alpha * b.m[0];
            a.m[1] += alpha * b.m[1];
            a.entropy += alpha * b.entropy;
        }
    }

    pub(crate) fn scale(&mut self, alpha: f64) {
        for c in self.cells.iter_mut() {
            c.rho *= alpha;
            c.m[0] *= alpha;
            c.m[1] *= alpha;
            c.entropy *= alpha;
        }
    }

    pub(crate) fn zero_like(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            cells: vec![State::new(0.0, [0.0, 0.0], 0.0); self.cells.len()],
        }
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [State] {
        &mut self.cells
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, cells: Vec<State>) -> Field {
        Field { grid, cells }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_integrals() {
        let g = Grid::torus_1d(16).unwrap();
        let f = Field::uniform(g, State::at_rest(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.total_mass(), 1.0, epsilon = 1e-15);
        let gas = GasModel::air();
        assert_abs_diff_eq!(f.total_energy(&gas), 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.total_entropy(), 0.0);
    }

    #[test]
    fn trig_mode_orthogonality() {
        // discrete orthogonality of the quadrature: modes k != 0 integrate to 0
        let g = Grid::torus_1d(64).unwrap();
        for k in 1..=3 {
            let f = Field::from_fn(g.clone(), |x| {
                State::at_rest(2.0 + (2.0 * std::f64::consts::PI * k as f64 * x[0]).cos(), 0.0)
            })
            .unwrap();
            assert!((f.total_mass() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_observable_propagates() {
        let g = Grid::torus_1d(4).unwrap();
        let f = Field::uniform(g, State::at_rest(0.0, 0.0)).unwrap();
        let gas = GasModel::air();
        // vacuum with zero momentum has zero energy; force an infinity instead
        assert_eq!(f.integrate(|c| 1.0 / c.rho), f64::INFINITY);
        assert_eq!(f.total_energy(&gas), 0.0);
    }

    #[test]
    fn restriction_averages() {
        let fine = Grid::torus_1d(8).unwrap();
        let coarse = Grid::torus_1d(4).unwrap();
        let f = Field::from_fn(fine, |x| State::at_rest(x[0], 0.0)).unwrap();
        let r = f.restrict_to(&coarse).unwrap();
        assert_abs_diff_eq!(r.cell(0).rho, (0.0625 + 0.1875) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.total_mass(), f.total_mass(), epsilon = 1e-15);
    }

    #[test]
    fn vacuum_cell_with_momentum_rejected() {
        let g = Grid::torus_1d(4).unwrap();
        let mut cells = vec![State::at_rest(1.0, 0.0); 4];
        cells[2] = State::new(0.0, [1.0, 0.0], 0.0);
        assert!(Field::new(g, cells).is_err());
    }
}
