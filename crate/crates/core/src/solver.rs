//! First-order finite-volume schemes for the complete Euler system.
//!
//! The solver evolves `(rho, m, E_total)` so that mass and total energy are
//! conserved to round-off by the telescoping flux form; the total entropy is a
//! diagnosed quantity converted only at checkpoints. An optional uniform
//! diffusion on all conserved variables provides a second,
//! vanishing-viscosity-style family of approximations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{neumaier_sum, DomainError, Field, Grid, Topology, Trajectory};
use crate::thermo::{GasModel, State};

/// Pressure floor applied after each update; clamp events are counted.
pub const PRESSURE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("scheme config: {0}")]
    BadConfig(String),
    #[error("initial data: cell {index} has rho = {rho}, below the floor {floor}")]
    BadInitial { index: usize, rho: f64, floor: f64 },
    #[error("non-finite wave speed at interface of cell {0}")]
    NonFiniteSpeed(usize),
    #[error("step failure at cell {index}: {reason}")]
    StepFailure { index: usize, reason: String },
    #[error("simulation aborted at t = {time}: {source}")]
    Aborted {
        time: f64,
        source: Box<SolverError>,
        partial: Box<Trajectory>,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    Rusanov,
    Hll,
}

/// Scheme parameters; `viscosity_eps > 0` selects the diffusive family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub flux: FluxKind,
    pub cfl: f64,
    pub rho_floor: f64,
    pub viscosity_eps: f64,
    pub checkpoint_dt: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            flux: FluxKind::Rusanov,
            cfl: 0.4,
            rho_floor: 1e-10,
            viscosity_eps: 0.0,
            checkpoint_dt: 0.05,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(SolverError::BadConfig(format!(
                "cfl must lie in (0, 0.9], got {}",
                self.cfl
            )));
        }
        if !(self.rho_floor > 0.0) {
            return Err(SolverError::BadConfig("rho_floor must be positive".into()));
        }
        if self.viscosity_eps < 0.0 {
            return Err(SolverError::BadConfig(
                "viscosity_eps must be nonnegative".into(),
            ));
        }
        if !(self.checkpoint_dt > 0.0) {
            return Err(SolverError::BadConfig(
                "checkpoint_dt must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn scheme_id(&self) -> String {
        let base = match self.flux {
            FluxKind::Rusanov => "rusanov",
            FluxKind::Hll => "hll",
        };
        if self.viscosity_eps > 0.0 {
            format!("{base}+visc{}", self.viscosity_eps)
        } else {
            base.to_string()
        }
    }
}

/// Conserved cell for time stepping: density, momentum, total energy density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedCell {
    pub rho: f64,
    pub m: [f64; 2],
    pub e_total: f64,
}

impl ConservedCell {
    pub fn from_state(gas: &GasModel, st: &State) -> Self {
        Self {
            rho: st.rho,
            m: st.m,
            e_total: gas.total_energy(st),
        }
    }

    pub fn to_state(&self, gas: &GasModel) -> State {
        let theta = self.temperature(gas);
        let entropy = self.rho * (gas.cv() * theta.ln() - self.rho.ln());
        State::new(self.rho, self.m, entropy)
    }

    pub fn velocity(&self, axis: usize) -> f64 {
        self.m[axis] / self.rho
    }

    pub fn internal_energy(&self) -> f64 {
        self.e_total - 0.5 * (self.m[0] * self.m[0] + self.m[1] * self.m[1]) / self.rho
    }

    pub fn pressure(&self, gas: &GasModel) -> f64 {
        (gas.gamma() - 1.0) * self.internal_energy()
    }

    pub fn temperature(&self, gas: &GasModel) -> f64 {
        self.internal_energy() / (gas.cv() * self.rho)
    }

    pub fn sound_speed(&self, gas: &GasModel) -> f64 {
        (gas.gamma() * self.pressure(gas) / self.rho).sqrt()
    }

    pub fn specific_entropy(&self, gas: &GasModel) -> f64 {
        gas.cv() * self.temperature(gas).ln() - self.rho.ln()
    }

    fn mirrored(&self, axis: usize) -> Self {
        let mut m = self.m;
        m[axis] = -m[axis];
        Self { m, ..*self }
    }
}

/// Field of conserved cells used inside the time loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedField {
    grid: Grid,
    cells: Vec<ConservedCell>,
}

impl ConservedField {
    pub fn from_field(gas: &GasModel, field: &Field, rho_floor: f64) -> Result<Self, SolverError> {
        let mut cells = Vec::with_capacity(field.cells().len());
        for (index, st) in field.cells().iter().enumerate() {
            if st.rho < rho_floor {
                return Err(SolverError::BadInitial {
                    index,
                    rho: st.rho,
                    floor: rho_floor,
                });
            }
            cells.push(ConservedCell::from_state(gas, st));
        }
        Ok(Self {
            grid: field.grid().clone(),
            cells,
        })
    }

    pub fn to_field(&self, gas: &GasModel) -> Field {
        Field::from_parts_unchecked(
            self.grid.clone(),
            self.cells.iter().map(|c| c.to_state(gas)).collect(),
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[ConservedCell] {
        &self.cells
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.cells.iter().map(|c| c.rho)) * self.grid.cell_volume()
    }

    pub fn total_energy(&self) -> f64 {
        neumaier_sum(self.cells.iter().map(|c| c.e_total)) * self.grid.cell_volume()
    }

    pub fn min_specific_entropy(&self, gas: &GasModel) -> f64 {
        self.cells
            .iter()
            .map(|c| c.specific_entropy(gas))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Exact Euler flux of a single state along `axis`:
/// `(mass, momentum_0, momentum_1, energy)`.
pub fn euler_flux(gas: &GasModel, cell: &ConservedCell, axis: usize) -> [f64; 4] {
    let u = cell.velocity(axis);
    let p = cell.pressure(gas);
    let mut f = [
        cell.m[axis],
        cell.m[0] * u,
        cell.m[1] * u,
        (cell.e_total + p) * u,
    ];
    f[1 + axis] += p;
    f
}

fn cell_values(cell: &ConservedCell) -> [f64; 4] {
    [cell.rho, cell.m[0], cell.m[1], cell.e_total]
}

/// Two-point numerical flux at the interface between `left` and `right`.
///
/// Consistent (`flux(a, a)` is the exact Euler flux of `a`) and conservative
/// by construction since neighbors share one interface value. HLL wave-speed
/// bounds follow Davis: min/max of the one-sided `u -+ c`.
pub fn numerical_flux(
    gas: &GasModel,
    cfg: &SchemeConfig,
    left: &ConservedCell,
    right: &ConservedCell,
    axis: usize,
) -> Result<[f64; 4], SolverError> {
    let fl = euler_flux(gas, left, axis);
    let fr = euler_flux(gas, right, axis);
    let ql = cell_values(left);
    let qr = cell_values(right);
    let (ul, ur) = (left.velocity(axis), right.velocity(axis));
    let (cl, cr) = (left.sound_speed(gas), right.sound_speed(gas));
    match cfg.flux {
        FluxKind::Rusanov => {
            let s = (ul.abs() + cl).max(ur.abs() + cr);
            if !s.is_finite() {
                return Err(SolverError::NonFiniteSpeed(0));
            }
            let mut f = [0.0; 4];
            for i in 0..4 {
                f[i] = 0.5 * (fl[i] + fr[i]) - 0.5 * s * (qr[i] - ql[i]);
            }
            Ok(f)
        }
        FluxKind::Hll => {
            let s_left = (ul - cl).min(ur - cr);
            let s_right = (ul + cl).max(ur + cr);
            if !s_left.is_finite() || !s_right.is_finite() {
                return Err(SolverError::NonFiniteSpeed(0));
            }
            if s_left >= 0.0 {
                Ok(fl)
            } else if s_right <= 0.0 {
                Ok(fr)
            } else {
                let mut f = [0.0; 4];
                for i in 0..4 {
                    f[i] = (s_right * fl[i] - s_left * fr[i]
                        + s_left * s_right * (qr[i] - ql[i]))
                        / (s_right - s_left);
                }
                Ok(f)
            }
        }
    }
}

/// Largest `|u| + c` over cells and axes.
pub fn max_wave_speed(gas: &GasModel, field: &ConservedField) -> f64 {
    let dim = field.grid.dim();
    field
        .cells
        .iter()
        .map(|c| {
            let speed = c.sound_speed(gas);
            (0..dim)
                .map(|a| c.velocity(a).abs() + speed)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Advective CFL time step `cfl * h / max(|u| + c)`.
pub fn cfl_dt(
    gas: &GasModel,
    field: &ConservedField,
    cfg: &SchemeConfig,
) -> Result<f64, SolverError> {
    let speed = max_wave_speed(gas, field);
    if !speed.is_finite() || speed <= 0.0 {
        return Err(SolverError::NonFiniteSpeed(0));
    }
    Ok(cfg.cfl * field.grid.min_spacing() / speed)
}

/// Per-step clamp counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub rho_clamps: usize,
    pub pressure_clamps: usize,
}

/// One explicit update: flux sweeps over every axis plus optional diffusion.
///
/// Mass and energy conservation are exact up to round-off on the torus; on
/// strips the wall fluxes carry zero mass and energy by the mirror symmetry
/// of the ghost states.
pub fn step(
    gas: &GasModel,
    field: &ConservedField,
    dt: f64,
    cfg: &SchemeConfig,
) -> Result<(ConservedField, StepStats), SolverError> {
    let grid = &field.grid;
    let mut next = field.cells.clone();
    let apply = |cells: &mut [ConservedCell], idx: usize, flux: &[f64; 4], scale: f64| {
        cells[idx].rho += scale * flux[0];
        cells[idx].m[0] += scale * flux[1];
        cells[idx].m[1] += scale * flux[2];
        cells[idx].e_total += scale * flux[3];
    };

    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        let scale = dt / h;
        let n_axis = grid.cells_per_axis()[axis];
        let wall = grid.topology() == Topology::Strip && axis == 0;
        for idx in 0..grid.num_cells() {
            let i = grid.multi_index(idx);
            // every cell owns the interface in the + direction
            if let Some(j) = grid.neighbor(i, axis, 1) {
                if wall && i[axis] == n_axis - 1 {
                    unreachable!("wall cells have no + neighbor");
                }
                let jdx = grid.index(j);
                let f = numerical_flux(gas, cfg, &field.cells[idx], &field.cells[jdx], axis)
                    .map_err(|_| SolverError::NonFiniteSpeed(idx))?;
                apply(&mut next, idx, &f, -scale);
                apply(&mut next, jdx, &f, scale);
            } else {
                // right wall: mirror ghost outside
                let ghost = field.cells[idx].mirrored(axis);
                let f = numerical_flux(gas, cfg, &field.cells[idx], &ghost, axis)
                    .map_err(|_| SolverError::NonFiniteSpeed(idx))?;
                apply(&mut next, idx, &f, -scale);
            }
            if wall && i[axis] == 0 {
                // left wall interface
                let ghost = field.cells[idx].mirrored(axis);
                let f = numerical_flux(gas, cfg, &ghost, &field.cells[idx], axis)
                    .map_err(|_| SolverError::NonFiniteSpeed(idx))?;
                apply(&mut next, idx, &f, scale);
            }
        }

        if cfg.viscosity_eps > 0.0 {
            // conservative diffusive exchange per interface; zero-flux walls
            let nu = cfg.viscosity_eps * dt / (h * h);
            for idx in 0..grid.num_cells() {
                let i = grid.multi_index(idx);
                if let Some(j) = grid.neighbor(i, axis, 1) {
                    let jdx = grid.index(j);
                    let qi = cell_values(&field.cells[idx]);
                    let qj = cell_values(&field.cells[jdx]);
                    let d = [
                        nu * (qj[0] - qi[0]),
                        nu * (qj[1] - qi[1]),
                        nu * (qj[2] - qi[2]),
                        nu * (qj[3] - qi[3]),
                    ];
                    apply(&mut next, idx, &d, 1.0);
                    apply(&mut next, jdx, &d, -1.0);
                }
            }
        }
    }

    let mut stats = StepStats::default();
    for (index, cell) in next.iter_mut().enumerate() {
        if !cell.rho.is_finite()
            || !cell.m[0].is_finite()
            || !cell.m[1].is_finite()
            || !cell.e_total.is_finite()
        {
            return Err(SolverError::StepFailure {
                index,
                reason: "non-finite conserved value".into(),
            });
        }
        if cell.rho < cfg.rho_floor {
            cell.rho = cfg.rho_floor;
            stats.rho_clamps += 1;
        }
        let e_int_floor = PRESSURE_FLOOR / (gas.gamma() - 1.0);
        if cell.internal_energy() < e_int_floor {
            cell.e_total =
                0.5 * (cell.m[0] * cell.m[0] + cell.m[1] * cell.m[1]) / cell.rho + e_int_floor;
            stats.pressure_clamps += 1;
        }
    }

    Ok((
        ConservedField {
            grid: grid.clone(),
            cells: next,
        },
        stats,
    ))
}

/// Summary statistics accumulated by [`simulate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSummary {
    pub steps: usize,
    /// Largest relative deviation of total mass from its initial value,
    /// measured on the conserved representation at checkpoints.
    pub mass_drift_rel: f64,
    /// Largest relative deviation of total energy from its initial value.
    pub energy_drift_rel: f64,
    pub entropy_initial: f64,
    pub entropy_final: f64,
    /// Largest decrease of total entropy between consecutive checkpoints.
    pub max_entropy_decrease: f64,
    /// Worst per-step decrease of the minimum cell specific entropy.
    pub max_min_entropy_drop: f64,
    pub rho_clamps: usize,
    pub pressure_clamps: usize,
}

/// A finished run: the checkpointed trajectory plus solver-side statistics.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub trajectory: Trajectory,
    pub summary: SimSummary,
}

/// Integrates the initial field to `t_end`, checkpointing at multiples of
/// `checkpoint_dt` (plus `t_end` itself). The energy budget `E0` is the
/// initial total energy; a step failure aborts with the partial trajectory
/// attached to the error.
pub fn simulate(
    gas: &GasModel,
    init: &Field,
    t_end: f64,
    cfg: &SchemeConfig,
) -> Result<SimRun, SolverError> {
    cfg.validate()?;
    if !(t_end > 0.0) {
        return Err(SolverError::BadConfig(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let mut current = ConservedField::from_field(gas, init, cfg.rho_floor)?;
    let e0 = current.total_energy();
    let m0 = current.total_mass();
    let entropy_tol = 1e-9 * (1.0 + init.total_entropy().abs());

    // checkpoint instants: multiples of checkpoint_dt, always including t_end
    let mut checkpoint_times = vec![0.0];
    let mut k = 1;
    loop {
        let tk = k as f64 * cfg.checkpoint_dt;
        if tk >= t_end - 1e-12 * t_end.max(1.0) {
            break;
        }
        checkpoint_times.push(tk);
        k += 1;
    }
    checkpoint_times.push(t_end);

    let mut times = vec![0.0];
    let mut fields = vec![current.to_field(gas)];
    let mut summary = SimSummary {
        steps: 0,
        mass_drift_rel: 0.0,
        energy_drift_rel: 0.0,
        entropy_initial: fields[0].total_entropy(),
        entropy_final: 0.0,
        max_entropy_decrease: 0.0,
        max_min_entropy_drop: 0.0,
        rho_clamps: 0,
        pressure_clamps: 0,
    };

    let build_trajectory = |times: &[f64], fields: &[Field]| {
        Trajectory::new(
            *gas,
            times.to_vec(),
            fields.to_vec(),
            e0,
            entropy_tol,
            cfg.scheme_id(),
        )
    };

    let mut t = 0.0;
    let mut next_checkpoint = 1;
    let tol = 1e-12 * t_end.max(1.0);
    while next_checkpoint < checkpoint_times.len() {
        let target = checkpoint_times[next_checkpoint];
        while t < target - tol {
            let mut dt = cfl_dt(gas, &current, cfg)?;
            if cfg.viscosity_eps > 0.0 {
                let h = current.grid.min_spacing();
                let dim = current.grid.dim() as f64;
                dt = dt.min(cfg.cfl * h * h / (2.0 * dim * cfg.viscosity_eps));
            }
            dt = dt.min(target - t);
            let min_s_before = current.min_specific_entropy(gas);
            match step(gas, &current, dt, cfg) {
                Ok((next, stats)) => {
                    summary.steps += 1;
                    summary.rho_clamps += stats.rho_clamps;
                    summary.pressure_clamps += stats.pressure_clamps;
                    let drop = min_s_before - next.min_specific_entropy(gas);
                    summary.max_min_entropy_drop = summary.max_min_entropy_drop.max(drop);
                    current = next;
                    t += dt;
                }
                Err(source) => {
                    let partial = build_trajectory(&times, &fields)?;
                    return Err(SolverError::Aborted {
                        time: t,
                        source: Box::new(source),
                        partial: Box::new(partial),
                    });
                }
            }
        }
        t = target;
        times.push(t);
        fields.push(current.to_field(gas));
        let mass = current.total_mass();
        let energy = current.total_energy();
        summary.mass_drift_rel = summary.mass_drift_rel.max((mass - m0).abs() / m0.abs());
        summary.energy_drift_rel = summary
            .energy_drift_rel
            .max((energy - e0).abs() / e0.abs());
        next_checkpoint += 1;
    }

    summary.entropy_final = fields.last().unwrap().total_entropy();
    let trajectory = build_trajectory(&times, &fields)?;
    summary.max_entropy_decrease = trajectory.monotonicity().max_decrease;
    Ok(SimRun {
        trajectory,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn gas() -> GasModel {
        GasModel::air()
    }

    fn uniform_conserved(n: usize) -> ConservedField {
        let grid = Grid::torus_1d(n).unwrap();
        let field = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
        ConservedField::from_field(&gas(), &field, 1e-10).unwrap()
    }

    #[test]
    fn flux_consistency_at_equal_arguments() {
        let g = gas();
        let cfg = SchemeConfig::default();
        let cell = ConservedCell {
            rho: 1.0,
            m: [0.0, 0.0],
            e_total: 2.5,
        };
        for kind in [FluxKind::Rusanov, FluxKind::Hll] {
            let cfg = SchemeConfig { flux: kind, ..cfg };
            let f = numerical_flux(&g, &cfg, &cell, &cell, 0).unwrap();
            // rest state: pressure 1 sits in the normal momentum slot
            assert_abs_diff_eq!(f[0], 0.0);
            assert_abs_diff_eq!(f[1], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f[2], 0.0);
            assert_abs_diff_eq!(f[3], 0.0);
        }
    }

    #[test]
    fn flux_equals_exact_flux_for_random_equal_states() {
        let g = gas();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for kind in [FluxKind::Rusanov, FluxKind::Hll] {
            let cfg = SchemeConfig {
                flux: kind,
                ..SchemeConfig::default()
            };
            for _ in 0..100 {
                let rho = rng.gen_range(0.1..3.0);
                let m = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let kinetic = 0.5 * (m[0] * m[0] + m[1] * m[1]) / rho;
                let cell = ConservedCell {
                    rho,
                    m,
                    e_total: kinetic + rng.gen_range(0.1..4.0),
                };
                let f = numerical_flux(&g, &cfg, &cell, &cell, 0).unwrap();
                let exact = euler_flux(&g, &cell, 0);
                for i in 0..4 {
                    assert_abs_diff_eq!(f[i], exact[i], epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn rusanov_mirror_symmetry() {
        let g = gas();
        let cfg = SchemeConfig::default();
        let a = ConservedCell {
            rho: 1.0,
            m: [0.3, 0.1],
            e_total: 2.8,
        };
        let b = ConservedCell {
            rho: 0.6,
            m: [-0.2, 0.4],
            e_total: 1.9,
        };
        let f = numerical_flux(&g, &cfg, &a, &b, 0).unwrap();
        let f_swapped = numerical_flux(&g, &cfg, &b.mirrored(0), &a.mirrored(0), 0).unwrap();
        // swapping sides and negating the axis negates the mass flux
        assert_relative_eq!(f[0], -f_swapped[0], max_relative = 1e-13);
        assert_relative_eq!(f[3], -f_swapped[3], max_relative = 1e-13);
    }

    #[test]
    fn cfl_dt_reference_value() {
        let g = gas();
        let grid = Grid::torus_1d(100).unwrap();
        let field = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
        let cf = ConservedField::from_field(&g, &field, 1e-10).unwrap();
        let cfg = SchemeConfig::default();
        // frozen: 0.4 * 0.01 / sqrt(1.4)
        assert_relative_eq!(
            cfl_dt(&g, &cf, &cfg).unwrap(),
            0.0033806170189140663,
            max_relative = 1e-12
        );
        // doubling cfl doubles dt
        let cfg2 = SchemeConfig {
            cfl: 0.8,
            ..SchemeConfig::default()
        };
        assert_relative_eq!(
            cfl_dt(&g, &cf, &cfg2).unwrap(),
            2.0 * cfl_dt(&g, &cf, &cfg).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn bulk_velocity_adds_to_wave_speed() {
        let g = gas();
        let grid = Grid::torus_1d(16).unwrap();
        let rest = ConservedField::from_field(
            &g,
            &Field::uniform(grid.clone(), State::at_rest(1.0, 0.0)).unwrap(),
            1e-10,
        )
        .unwrap();
        let s0 = max_wave_speed(&g, &rest);
        let u = 0.7;
        let gas_ref = g;
        let moving = Field::from_fn(grid, |_| {
            // same density/entropy, bulk velocity u: total energy gains the kinetic part
            let mut st = State::new(1.0, [u, 0.0], 0.0);
            st.entropy = 0.0;
            st
        })
        .unwrap();
        let moving = ConservedField::from_field(&gas_ref, &moving, 1e-10).unwrap();
        assert_relative_eq!(max_wave_speed(&g, &moving), s0 + u, max_relative = 1e-12);
    }

    #[test]
    fn uniform_state_is_a_fixed_point() {
        let g = gas();
        let cfg = SchemeConfig::default();
        let f0 = uniform_conserved(32);
        let dt = cfl_dt(&g, &f0, &cfg).unwrap();
        let (f1, _) = step(&g, &f0, dt, &cfg).unwrap();
        for (a, b) in f0.cells().iter().zip(f1.cells()) {
            assert_abs_diff_eq!(a.rho, b.rho, epsilon = 1e-15);
            assert_abs_diff_eq!(a.m[0], b.m[0], epsilon = 1e-15);
            assert_abs_diff_eq!(a.e_total, b.e_total, epsilon = 1e-15);
        }
    }

    #[test]
    fn conservation_over_many_steps() {
        let g = gas();
        let grid = Grid::torus_1d(64).unwrap();
        let init = Field::from_fn(grid, |x| {
            let rho = 1.0 + 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin();
            let u = 0.2 * (2.0 * std::f64::consts::PI * x[0]).cos();
            let theta = 1.0 + 0.1 * (4.0 * std::f64::consts::PI * x[0]).sin();
            let gas = GasModel::air();
            State::new(
                rho,
                [rho * u, 0.0],
                gas.entropy_from_primitive(rho, theta).unwrap(),
            )
        })
        .unwrap();
        for kind in [FluxKind::Rusanov, FluxKind::Hll] {
            let cfg = SchemeConfig {
                flux: kind,
                ..SchemeConfig::default()
            };
            let mut f = ConservedField::from_field(&g, &init, cfg.rho_floor).unwrap();
            let m0 = f.total_mass();
            let e0 = f.total_energy();
            for _ in 0..1000 {
                let dt = cfl_dt(&g, &f, &cfg).unwrap();
                let (next, _) = step(&g, &f, dt, &cfg).unwrap();
                f = next;
            }
            assert!((f.total_mass() - m0).abs() / m0 < 1e-11, "mass drift");
            assert!((f.total_energy() - e0).abs() / e0 < 1e-11, "energy drift");
        }
    }

    #[test]
    fn reflective_walls_conserve_mass_and_energy() {
        let g = gas();
        let grid = Grid::strip_1d(64, 1.0).unwrap();
        let init = Field::from_fn(grid, |x| {
            let rho = 1.0 + 0.3 * (-10.0 * x[0] * x[0]).exp();
            State::new(rho, [0.1 * rho, 0.0], 0.0)
        })
        .unwrap();
        let cfg = SchemeConfig::default();
        let mut f = ConservedField::from_field(&g, &init, cfg.rho_floor).unwrap();
        let m0 = f.total_mass();
        let e0 = f.total_energy();
        // long enough that the pulse interacts with both walls
        for _ in 0..500 {
            let dt = cfl_dt(&g, &f, &cfg).unwrap();
            let (next, _) = step(&g, &f, dt, &cfg).unwrap();
            f = next;
        }
        assert!((f.total_mass() - m0).abs() / m0 < 1e-11);
        assert!((f.total_energy() - e0).abs() / e0 < 1e-11);
    }

    #[test]
    fn viscosity_family_still_conserves() {
        let g = gas();
        let grid = Grid::torus_1d(32).unwrap();
        let init = Field::from_fn(grid, |x| {
            let rho = 1.0 + 0.2 * (2.0 * std::f64::consts::PI * x[0]).sin();
            State::new(rho, [0.0, 0.0], 0.0)
        })
        .unwrap();
        let cfg = SchemeConfig {
            viscosity_eps: 0.01,
            ..SchemeConfig::default()
        };
        let run = simulate(&g, &init, 0.3, &cfg).unwrap();
        assert!(run.summary.mass_drift_rel < 1e-11);
        assert!(run.summary.energy_drift_rel < 1e-11);
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = gas();
        let grid = Grid::torus_1d(16).unwrap();
        let init = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
        let run = simulate(&g, &init, 0.5, &SchemeConfig::default()).unwrap();
        let last = run.trajectory.fields().last().unwrap();
        for c in last.cells() {
            assert_abs_diff_eq!(c.m[0], 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(c.rho, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn smooth_advection_converges() {
        // exact contact-advection solution: rho = 1 + 0.2 sin(2 pi (x - t)), u = 1, p = 1
        let g = gas();
        let exact = |t: f64, x: f64| {
            let rho = 1.0 + 0.2 * (2.0 * std::f64::consts::PI * (x - t)).sin();
            let gas = GasModel::air();
            State::new(
                rho,
                [rho, 0.0],
                gas.entropy_from_primitive(rho, 1.0 / rho).unwrap(),
            )
        };
        let t_end = 0.5;
        let mut errors = Vec::new();
        for n in [128, 512] {
            let grid = Grid::torus_1d(n).unwrap();
            let init = Field::from_fn(grid.clone(), |x| exact(0.0, x[0])).unwrap();
            let cfg = SchemeConfig {
                checkpoint_dt: 0.25,
                ..SchemeConfig::default()
            };
            let run = simulate(&g, &init, t_end, &cfg).unwrap();
            let reference = Field::from_fn(grid, |x| exact(t_end, x[0])).unwrap();
            let err = run
                .trajectory
                .fields()
                .last()
                .unwrap()
                .l1_distance(&reference)
                .unwrap();
            errors.push(err);
        }
        let order = (errors[0] / errors[1]).log2() / 2.0;
        assert!(order >= 0.8, "observed order {order}, errors {errors:?}");
    }

    #[test]
    fn aborted_run_keeps_partial_trajectory() {
        let g = gas();
        let grid = Grid::torus_1d(16).unwrap();
        let init = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
        // NaN-poisoned config cannot happen through validate(); instead check
        // that bad initial data is rejected up front
        let cfg = SchemeConfig {
            rho_floor: 10.0,
            ..SchemeConfig::default()
        };
        assert!(matches!(
            simulate(&g, &init, 0.1, &cfg),
            Err(SolverError::BadInitial { .. })
        ));
    }
}
