//! Ensemble-level diagnostics: empirical Young measures, barycenters,
//! oscillation defects, the energy-compatibility inequality, energy defects,
//! and Cesaro averaging.
//!
//! A finite ensemble of trajectories from shared data stands in for the
//! solution set of the underlying problem. Its empirical Young measure at a
//! checkpoint places uniform weights on the member states per coarse cell;
//! the flux defect estimates the oscillation part of the concentration
//! measure as flux-mean minus flux-of-mean. Reports always carry the member
//! count: finite-sample estimates, not weak-* limits.

use thiserror::Error;

use crate::domain::{DomainError, Field, Grid, Trajectory};
use crate::thermo::{GasModel, State, RHO_EPS};

#[derive(Debug, Error)]
pub enum DmvError {
    #[error("ensemble needs at least one member")]
    Empty,
    #[error("member {index} disagrees on {what}")]
    MemberMismatch { index: usize, what: String },
    #[error("infinite member energy at checkpoint {0}")]
    InfiniteEnergy(usize),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Coefficient of the integrated trace in the energy-compatibility
/// inequality: `min(1/2, d gamma / (gamma - 1))`.
///
/// The second branch exceeds `1/2` for every `gamma > 1` and `d >= 1`, so the
/// minimum always evaluates to `1/2`; reports carry a note to that effect.
pub fn r_coefficient(dim: usize, gamma: f64) -> f64 {
    (0.5_f64).min(dim as f64 * gamma / (gamma - 1.0))
}

pub const R_COEFFICIENT_NOTE: &str =
    "r = min(1/2, d*gamma/(gamma-1)); the second branch exceeds 1/2 for all gamma > 1, d >= 1, so r = 1/2 throughout";

/// Finitely many trajectories sharing gas model, checkpoint times, mass, and
/// energy budget; the desk-scale stand-in for a solution set.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<Trajectory>,
    provenance: Vec<String>,
    coarse_grid: Grid,
}

impl Ensemble {
    /// Validates shared structure: identical checkpoint times, equal `E0` and
    /// `M0` (to 1e-10 relative), one gas model, and grids that are integer
    /// refinements of a common coarsest grid.
    pub fn new(members: Vec<Trajectory>, provenance: Vec<String>) -> Result<Self, DmvError> {
        if members.is_empty() {
            return Err(DmvError::Empty);
        }
        let provenance = if provenance.is_empty() {
            (0..members.len()).map(|i| format!("member-{i}")).collect()
        } else {
            if provenance.len() != members.len() {
                return Err(DmvError::MemberMismatch {
                    index: provenance.len(),
                    what: "provenance length".into(),
                });
            }
            provenance
        };
        let first = &members[0];
        let mut coarse_grid = first.grid().clone();
        for (index, m) in members.iter().enumerate() {
            if m.gas() != first.gas() {
                return Err(DmvError::MemberMismatch {
                    index,
                    what: "gas model".into(),
                });
            }
            if m.times().len() != first.times().len()
                || m.times()
                    .iter()
                    .zip(first.times())
                    .any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
            {
                return Err(DmvError::MemberMismatch {
                    index,
                    what: "checkpoint times".into(),
                });
            }
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
            if rel(m.e0(), first.e0()) > 1e-10 {
                return Err(DmvError::MemberMismatch {
                    index,
                    what: format!("energy budget ({} vs {})", m.e0(), first.e0()),
                });
            }
            if rel(m.m0(), first.m0()) > 1e-10 {
                return Err(DmvError::MemberMismatch {
                    index,
                    what: format!("total mass ({} vs {})", m.m0(), first.m0()),
                });
            }
            if !m.grid().same_domain(first.grid()) {
                return Err(DmvError::MemberMismatch {
                    index,
                    what: "physical domain".into(),
                });
            }
            // keep the coarsest resolution per axis
            let na = m.grid().cells_per_axis();
            let nc = coarse_grid.cells_per_axis();
            if na[0] < nc[0] || na[1] < nc[1] {
                coarse_grid = m.grid().clone();
            }
        }
        // every member must restrict cleanly onto the coarsest grid
        for (index, m) in members.iter().enumerate() {
            let n = m.grid().cells_per_axis();
            let nc = coarse_grid.cells_per_axis();
            if n[0] % nc[0] != 0 || n[1] % nc[1] != 0 {
                return Err(DmvError::MemberMismatch {
                    index,
                    what: "grid is not an integer refinement of the coarsest member".into(),
                });
            }
        }
        Ok(Self {
            members,
            provenance,
            coarse_grid,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn member(&self, i: usize) -> &Trajectory {
        &self.members[i]
    }

    pub fn members(&self) -> &[Trajectory] {
        &self.members
    }

    pub fn provenance(&self, i: usize) -> &str {
        &self.provenance[i]
    }

    pub fn coarse_grid(&self) -> &Grid {
        &self.coarse_grid
    }

    pub fn gas(&self) -> &GasModel {
        self.members[0].gas()
    }

    pub fn times(&self) -> &[f64] {
        self.members[0].times()
    }

    pub fn e0(&self) -> f64 {
        self.members[0].e0()
    }

    pub fn m0(&self) -> f64 {
        self.members[0].m0()
    }

    /// Member field at checkpoint `k`, restricted to the coarse grid.
    pub fn member_field(&self, i: usize, k: usize) -> Result<Field, DmvError> {
        Ok(self.members[i].field(k).restrict_to(&self.coarse_grid)?)
    }

    /// Cell-wise arithmetic mean of the member states at checkpoint `k`.
    pub fn barycenter(&self, k: usize) -> Result<Field, DmvError> {
        let mut mean = self.member_field(0, k)?;
        if self.members.len() > 1 {
            for i in 1..self.members.len() {
                let f = self.member_field(i, k)?;
                mean.axpy(1.0, &f);
            }
            mean.scale(1.0 / self.members.len() as f64);
        }
        Ok(mean)
    }

    /// Empirical Young measure at checkpoint `k`: per coarse cell, the member
    /// states as uniformly weighted atoms.
    pub fn young_measure(&self, k: usize) -> Result<EmpiricalYoungMeasure, DmvError> {
        let fields: Vec<Field> = (0..self.members.len())
            .map(|i| self.member_field(i, k))
            .collect::<Result<_, _>>()?;
        let n_cells = self.coarse_grid.num_cells();
        let mut atoms = vec![Vec::with_capacity(self.members.len()); n_cells];
        for f in &fields {
            for (cell, st) in f.cells().iter().enumerate() {
                atoms[cell].push(*st);
            }
        }
        Ok(EmpiricalYoungMeasure {
            grid: self.coarse_grid.clone(),
            atoms,
        })
    }

    /// Mean member energy minus the barycenter energy; nonnegative by
    /// convexity of the total energy (Jensen).
    pub fn energy_gap(&self, k: usize) -> Result<f64, DmvError> {
        let gas = self.gas();
        let mut mean_energy = 0.0;
        for (i, m) in self.members.iter().enumerate() {
            let e = m.field(k).total_energy(gas);
            if e.is_infinite() {
                return Err(DmvError::InfiniteEnergy(i));
            }
            mean_energy += e;
        }
        mean_energy /= self.members.len() as f64;
        Ok(mean_energy - self.barycenter(k)?.total_energy(gas))
    }

    /// Oscillation part of the concentration measure at checkpoint `k`:
    /// mean member flux minus the flux of the barycenter, per coarse cell.
    pub fn flux_defect(&self, k: usize) -> Result<FluxDefect, DmvError> {
        let gas = *self.gas();
        let bary = self.barycenter(k)?;
        let n_cells = self.coarse_grid.num_cells();
        let weight = 1.0 / self.members.len() as f64;
        let mut matrices = vec![[[0.0_f64; 2]; 2]; n_cells];
        for i in 0..self.members.len() {
            let f = self.member_field(i, k)?;
            for (cell, st) in f.cells().iter().enumerate() {
                let fl = flux_matrix(&gas, st);
                for a in 0..2 {
                    for b in 0..2 {
                        matrices[cell][a][b] += weight * fl[a][b];
                    }
                }
            }
        }
        for (cell, st) in bary.cells().iter().enumerate() {
            let fl = flux_matrix(&gas, st);
            for a in 0..2 {
                for b in 0..2 {
                    matrices[cell][a][b] -= fl[a][b];
                }
            }
        }
        let dim = self.coarse_grid.dim();
        let trace: Vec<f64> = matrices
            .iter()
            .map(|m| (0..dim).map(|a| m[a][a]).sum())
            .collect();
        let integrated_trace =
            crate::domain::neumaier_sum(trace.iter().copied()) * self.coarse_grid.cell_volume();
        let r = r_coefficient(dim, gas.gamma());
        let gap = self.energy_gap(k)?;
        let tol = 1e-10 * self.e0().abs().max(1.0);
        Ok(FluxDefect {
            grid: self.coarse_grid.clone(),
            matrices,
            trace,
            integrated_trace,
            r,
            energy_gap: gap,
            compatibility_holds: r * integrated_trace <= gap + tol,
            note: R_COEFFICIENT_NOTE,
        })
    }

    /// Partial Cesaro averages `A_N = (1/N) sum_{n<=N} member_n` at
    /// checkpoint `k`, in provenance order.
    pub fn cesaro_averages(&self, k: usize) -> Result<Vec<Field>, DmvError> {
        let mut out = Vec::with_capacity(self.members.len());
        let mut running = self.member_field(0, k)?.zero_like();
        for n in 0..self.members.len() {
            let f = self.member_field(n, k)?;
            running.axpy(1.0, &f);
            let mut avg = running.clone();
            avg.scale(1.0 / (n + 1) as f64);
            out.push(avg);
        }
        Ok(out)
    }
}

fn flux_matrix(gas: &GasModel, st: &State) -> [[f64; 2]; 2] {
    if st.rho <= RHO_EPS {
        return [[0.0; 2]; 2];
    }
    let p = gas.pressure(st.rho, st.entropy).unwrap_or(0.0);
    let mut m = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            m[a][b] = st.m[a] * st.m[b] / st.rho + if a == b { p } else { 0.0 };
        }
    }
    m
}

/// Uniformly weighted member states per coarse cell.
#[derive(Debug, Clone)]
pub struct EmpiricalYoungMeasure {
    grid: Grid,
    atoms: Vec<Vec<State>>,
}

impl EmpiricalYoungMeasure {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn atoms(&self, cell: usize) -> &[State] {
        &self.atoms[cell]
    }

    /// Uniform weight of each atom.
    pub fn weight(&self) -> f64 {
        1.0 / self.atoms[0].len() as f64
    }

    /// Mean of the atoms in one cell.
    pub fn cell_barycenter(&self, cell: usize) -> State {
        let atoms = &self.atoms[cell];
        let w = 1.0 / atoms.len() as f64;
        let mut acc = State::new(0.0, [0.0, 0.0], 0.0);
        for a in atoms {
            acc.rho += w * a.rho;
            acc.m[0] += w * a.m[0];
            acc.m[1] += w * a.m[1];
            acc.entropy += w * a.entropy;
        }
        acc
    }
}

/// Per-cell flux-defect matrices and the integrated-trace compatibility check.
#[derive(Debug, Clone)]
pub struct FluxDefect {
    pub grid: Grid,
    /// Symmetric 2x2 defect matrix per coarse cell (only the leading
    /// `dim x dim` block is meaningful).
    pub matrices: Vec<[[f64; 2]; 2]>,
    pub trace: Vec<f64>,
    pub integrated_trace: f64,
    /// Coefficient `min(1/2, d gamma/(gamma-1))`.
    pub r: f64,
    pub energy_gap: f64,
    /// `r * integrated_trace <= energy_gap + tol`.
    pub compatibility_holds: bool,
    pub note: &'static str,
}

/// Energy defect of a trajectory at checkpoint `k`: budget minus current
/// total energy. Nonnegative (up to round-off) by the budget invariant.
pub fn energy_defect(traj: &Trajectory, k: usize) -> f64 {
    traj.e0() - traj.field(k).total_energy(traj.gas())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gas() -> GasModel {
        GasModel::air()
    }

    fn single_checkpoint(field: Field, e0: f64) -> Trajectory {
        Trajectory::new(gas(), vec![0.0], vec![field], e0, 1e-12, "test").unwrap()
    }

    fn momentum_pair(a: f64) -> Ensemble {
        let grid = Grid::torus_1d(8).unwrap();
        let plus = Field::uniform(grid.clone(), State::new(1.0, [a, 0.0], 0.0)).unwrap();
        let minus = Field::uniform(grid, State::new(1.0, [-a, 0.0], 0.0)).unwrap();
        let e0 = plus.total_energy(&gas());
        Ensemble::new(
            vec![single_checkpoint(plus, e0), single_checkpoint(minus, e0)],
            vec!["plus".into(), "minus".into()],
        )
        .unwrap()
    }

    #[test]
    fn r_coefficient_saturates_at_half() {
        assert_abs_diff_eq!(r_coefficient(3, 1.4), 0.5);
        assert_abs_diff_eq!(r_coefficient(1, 1.4), 0.5);
        assert_abs_diff_eq!(r_coefficient(2, 10.0), 0.5);
    }

    #[test]
    fn singleton_ensemble_is_its_own_barycenter() {
        let grid = Grid::torus_1d(8).unwrap();
        let f = Field::uniform(grid, State::new(1.2, [0.3, 0.0], 0.2)).unwrap();
        let e0 = f.total_energy(&gas());
        let e = Ensemble::new(vec![single_checkpoint(f.clone(), e0)], vec![]).unwrap();
        let b = e.barycenter(0).unwrap();
        assert_eq!(b.cells(), f.cells());
        assert_abs_diff_eq!(e.energy_gap(0).unwrap(), 0.0, epsilon = 1e-14);
        let fd = e.flux_defect(0).unwrap();
        assert_abs_diff_eq!(fd.integrated_trace, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn two_member_barycenter_is_midpoint() {
        let e = momentum_pair(0.8);
        let b = e.barycenter(0).unwrap();
        for c in b.cells() {
            assert_abs_diff_eq!(c.m[0], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(c.rho, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn momentum_oscillation_gap_closed_form() {
        let a = 0.8;
        let e = momentum_pair(a);
        // members share rho and S; only the kinetic part differs
        let gap = e.energy_gap(0).unwrap();
        assert_relative_eq!(gap, a * a / 2.0, max_relative = 1e-12);
        let fd = e.flux_defect(0).unwrap();
        assert_relative_eq!(fd.integrated_trace, a * a, max_relative = 1e-12);
        // the compatibility inequality holds with equality: gap = trace/2
        assert!(fd.compatibility_holds);
        assert_abs_diff_eq!(fd.r * fd.integrated_trace, gap, epsilon = 1e-12);
    }

    #[test]
    fn energy_gap_nonnegative_sweep() {
        let grid = Grid::torus_1d(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let mk = |rng: &mut ChaCha8Rng| {
                let cells: Vec<State> = (0..4)
                    .map(|_| {
                        State::new(
                            rng.gen_range(0.2..2.0),
                            [rng.gen_range(-1.0..1.0), 0.0],
                            rng.gen_range(-0.5..0.5),
                        )
                    })
                    .collect();
                Field::new(grid.clone(), cells).unwrap()
            };
            let f1 = mk(&mut rng);
            let mut f2 = mk(&mut rng);
            // match the masses so the pair forms a valid ensemble
            let scale = f1.total_mass() / f2.total_mass();
            for c in f2.cells_mut() {
                c.rho *= scale;
            }
            let e0 = f1.total_energy(&gas()).max(f2.total_energy(&gas())) * 1.01;
            let ens = Ensemble::new(
                vec![single_checkpoint(f1, e0), single_checkpoint(f2, e0)],
                vec![],
            )
            .unwrap();
            assert!(ens.energy_gap(0).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn young_measure_barycenter_consistency() {
        let e = momentum_pair(0.5);
        let ym = e.young_measure(0).unwrap();
        let bary = e.barycenter(0).unwrap();
        for cell in 0..ym.grid().num_cells() {
            let a = ym.cell_barycenter(cell);
            let b = bary.cell(cell);
            assert_abs_diff_eq!(a.rho, b.rho, epsilon = 1e-14);
            assert_abs_diff_eq!(a.m[0], b.m[0], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(ym.weight(), 0.5);
    }

    #[test]
    fn cesaro_alternating_bound() {
        let grid = Grid::torus_1d(8).unwrap();
        let a = Field::uniform(grid.clone(), State::new(1.0, [0.6, 0.0], 0.0)).unwrap();
        let b = Field::uniform(grid, State::new(1.0, [-0.6, 0.0], 0.0)).unwrap();
        let e0 = a.total_energy(&gas());
        let n = 16;
        let members: Vec<Trajectory> = (0..n)
            .map(|i| {
                single_checkpoint(if i % 2 == 0 { a.clone() } else { b.clone() }, e0)
            })
            .collect();
        let ens = Ensemble::new(members, vec![]).unwrap();
        let averages = ens.cesaro_averages(0).unwrap();
        let mean = {
            let mut m = a.clone();
            m.axpy(1.0, &b);
            m.scale(0.5);
            m
        };
        let dist_ab = a.l1_distance(&b).unwrap();
        for (idx, avg) in averages.iter().enumerate() {
            let n = idx + 1;
            let d = avg.l1_distance(&mean).unwrap();
            assert!(
                d <= dist_ab / (2.0 * n as f64) + 1e-14,
                "N = {n}: distance {d} exceeds the telescoping bound"
            );
        }
        // even prefixes hit the mean exactly
        assert_abs_diff_eq!(averages[1].l1_distance(&mean).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn energy_defect_of_budgeted_trajectory() {
        let grid = Grid::torus_1d(8).unwrap();
        let f = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
        let e = f.total_energy(&gas());
        let t = single_checkpoint(f, 1.1 * e);
        assert_relative_eq!(energy_defect(&t, 0), 0.1 * e, max_relative = 1e-12);
    }

    #[test]
    fn mismatched_budgets_rejected() {
        let grid = Grid::torus_1d(8).unwrap();
        let f = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
        let e = f.total_energy(&gas());
        let err = Ensemble::new(
            vec![
                single_checkpoint(f.clone(), e),
                single_checkpoint(f, 2.0 * e),
            ],
            vec![],
        );
        assert!(matches!(err, Err(DmvError::MemberMismatch { .. })));
    }
}
