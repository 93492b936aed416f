//! Weak-form consistency residuals of trajectories.
//!
//! A trajectory is a consistent approximation when its residuals against the
//! integrated weak form vanish under refinement: the energy excess `e1`, the
//! mass residual `e2[phi]`, the momentum residual `e3[phi]`, and the one-sided
//! entropy deficit `e4[phi]`. Residual measures on `[0, T]` are represented by
//! their values on checkpoint intervals; the total variation is the sum of
//! absolute interval values.
//!
//! Space integrals use the midpoint rule on cell centers (matching the
//! finite-volume cell averages) and time integrals use the trapezoid rule on
//! the trajectory's checkpoint partition. Test functions are evaluated with
//! their spatial part only (`t = 0`); the interval residuals of the weak form
//! use time-independent test functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    DomainError, Field, ScalarTestFunction, Trajectory, VectorTestFunction,
};
use crate::thermo::RHO_EPS;

#[derive(Debug, Error)]
pub enum ConsistencyError {
    #[error("interval must satisfy t1 < t2, got [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("entropy residuals need a nonnegative test function")]
    NegativeTestFunction,
    #[error("refinement study needs at least two strictly increasing resolutions")]
    BadResolutions,
    #[error("trajectories disagree on {0}")]
    IncompatibleTrajectories(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Trapezoid rule over the trajectory's checkpoints within `[k1, k2]`,
/// using the recorded right limit at the start of each subinterval.
fn time_integral(traj: &Trajectory, k1: usize, k2: usize, g: impl Fn(&Field) -> f64) -> f64 {
    let times = traj.times();
    let mut acc = 0.0;
    for k in k1..k2 {
        let dt = times[k + 1] - times[k];
        let left = g(traj.right_value(k));
        let right = g(traj.left_value(k + 1));
        acc += 0.5 * dt * (left + right);
    }
    acc
}

fn interval(traj: &Trajectory, t1: f64, t2: f64) -> Result<(usize, usize), ConsistencyError> {
    if !(t1 < t2) {
        return Err(ConsistencyError::BadInterval(t1, t2));
    }
    let k1 = traj.checkpoint_index(t1)?;
    let k2 = traj.checkpoint_index(t2)?;
    Ok((k1, k2))
}

/// Mass residual on `[t1, t2]`:
/// `int rho phi dx |_{t1}^{t2} - int_{t1}^{t2} int m . grad phi dx dt`.
pub fn residual_mass(
    traj: &Trajectory,
    tf: &ScalarTestFunction,
    t1: f64,
    t2: f64,
) -> Result<f64, ConsistencyError> {
    let (k1, k2) = interval(traj, t1, t2)?;
    let grid = traj.grid().clone();
    let phi = |f: &Field| {
        f.integrate_indexed(|idx, st| st.rho * tf.eval(0.0, grid.center(grid.multi_index(idx))).value)
    };
    let flux = |f: &Field| {
        f.integrate_indexed(|idx, st| {
            let e = tf.eval(0.0, grid.center(grid.multi_index(idx)));
            st.m[0] * e.grad[0] + st.m[1] * e.grad[1]
        })
    };
    let bracket = phi(traj.left_value(k2)) - phi(traj.left_value(k1));
    Ok(bracket - time_integral(traj, k1, k2, flux))
}

/// Momentum residual on `[t1, t2]`:
/// `int m . phi dx |_{t1}^{t2} - int int 1_{rho>0} (m x m / rho + p I) : grad phi`.
///
/// Vacuum cells (`rho <= RHO_EPS`) contribute nothing to the flux term.
pub fn residual_momentum(
    traj: &Trajectory,
    tf: &VectorTestFunction,
    t1: f64,
    t2: f64,
) -> Result<f64, ConsistencyError> {
    let (k1, k2) = interval(traj, t1, t2)?;
    let gas = *traj.gas();
    let grid = traj.grid().clone();
    let phi = |f: &Field| {
        f.integrate_indexed(|idx, st| {
            let e = tf.eval(0.0, grid.center(grid.multi_index(idx)));
            st.m[0] * e.value[0] + st.m[1] * e.value[1]
        })
    };
    let flux = |f: &Field| {
        f.integrate_indexed(|idx, st| {
            if st.rho <= RHO_EPS {
                return 0.0;
            }
            let e = tf.eval(0.0, grid.center(grid.multi_index(idx)));
            let p = gas.pressure(st.rho, st.entropy).unwrap_or(0.0);
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let stress =
                        st.m[a] * st.m[b] / st.rho + if a == b { p } else { 0.0 };
                    acc += stress * e.grad[a][b];
                }
            }
            acc
        })
    };
    let bracket = phi(traj.left_value(k2)) - phi(traj.left_value(k1));
    Ok(bracket - time_integral(traj, k1, k2, flux))
}

/// Entropy deficit on `[t1, t2]`:
/// `delta = int S phi dx |_{t1}^{t2} - int int 1_{rho>0} S (m/rho) . grad phi`.
///
/// For nonnegative `phi`, `delta >= -tol` certifies the entropy inequality on
/// the interval; the positive part of `-delta` is the violation measure.
pub fn residual_entropy(
    traj: &Trajectory,
    tf: &ScalarTestFunction,
    t1: f64,
    t2: f64,
) -> Result<f64, ConsistencyError> {
    if !tf.is_nonnegative() {
        return Err(ConsistencyError::NegativeTestFunction);
    }
    let (k1, k2) = interval(traj, t1, t2)?;
    let grid = traj.grid().clone();
    let phi = |f: &Field| {
        f.integrate_indexed(|idx, st| {
            st.entropy * tf.eval(0.0, grid.center(grid.multi_index(idx))).value
        })
    };
    let flux = |f: &Field| {
        f.integrate_indexed(|idx, st| {
            if st.rho <= RHO_EPS {
                return 0.0;
            }
            let e = tf.eval(0.0, grid.center(grid.multi_index(idx)));
            (st.entropy / st.rho) * (st.m[0] * e.grad[0] + st.m[1] * e.grad[1])
        })
    };
    let bracket = phi(traj.left_value(k2)) - phi(traj.left_value(k1));
    Ok(bracket - time_integral(traj, k1, k2, flux))
}

/// Energy-inequality excess `e1`: the largest positive excursion of the total
/// energy above its initial value.
pub fn residual_energy(traj: &Trajectory) -> f64 {
    let series = traj.total_energy_series();
    let e_init = series[0];
    series
        .iter()
        .map(|e| (e - e_init).max(0.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    Mass,
    Momentum,
    Entropy,
}

impl std::fmt::Display for ResidualKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResidualKind::Mass => write!(f, "mass"),
            ResidualKind::Momentum => write!(f, "momentum"),
            ResidualKind::Entropy => write!(f, "entropy"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualRow {
    pub kind: ResidualKind,
    pub test_function: String,
    /// Sum of `|residual|` over consecutive checkpoint intervals; for entropy
    /// rows only the violation (negative) part counts.
    pub total_variation: f64,
}

/// Residuals of one trajectory for a family of test functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub resolution: usize,
    pub scheme_id: String,
    /// Energy-inequality excess (`>= 0` means violation).
    pub e1: f64,
    pub rows: Vec<ResidualRow>,
}

/// Total variation of a per-interval residual over consecutive checkpoints.
fn total_variation(
    traj: &Trajectory,
    mut value: impl FnMut(f64, f64) -> Result<f64, ConsistencyError>,
    one_sided: bool,
) -> Result<f64, ConsistencyError> {
    let times = traj.times();
    let mut acc = 0.0;
    for k in 1..times.len() {
        let r = value(times[k - 1], times[k])?;
        acc += if one_sided { (-r).max(0.0) } else { r.abs() };
    }
    Ok(acc)
}

/// Evaluates every residual for the given test functions.
pub fn consistency_report(
    traj: &Trajectory,
    scalar_tfs: &[ScalarTestFunction],
    vector_tfs: &[VectorTestFunction],
    entropy_tfs: &[ScalarTestFunction],
) -> Result<ConsistencyReport, ConsistencyError> {
    let mut rows = Vec::new();
    for tf in scalar_tfs {
        rows.push(ResidualRow {
            kind: ResidualKind::Mass,
            test_function: tf.label(),
            total_variation: total_variation(
                traj,
                |t1, t2| residual_mass(traj, tf, t1, t2),
                false,
            )?,
        });
    }
    for tf in vector_tfs {
        rows.push(ResidualRow {
            kind: ResidualKind::Momentum,
            test_function: tf.label(),
            total_variation: total_variation(
                traj,
                |t1, t2| residual_momentum(traj, tf, t1, t2),
                false,
            )?,
        });
    }
    for tf in entropy_tfs {
        rows.push(ResidualRow {
            kind: ResidualKind::Entropy,
            test_function: tf.label(),
            total_variation: total_variation(
                traj,
                |t1, t2| residual_entropy(traj, tf, t1, t2),
                true,
            )?,
        });
    }
    Ok(ConsistencyReport {
        resolution: traj.grid().cells_per_axis()[0],
        scheme_id: traj.scheme_id().to_string(),
        e1: residual_energy(traj),
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    pub kind: ResidualKind,
    pub test_function: String,
    /// Total variation at each resolution, coarse to fine.
    pub values: Vec<f64>,
    /// Observed orders `log(v_i / v_{i+1}) / log(n_{i+1} / n_i)`.
    pub orders: Vec<f64>,
    pub monotone: bool,
    /// All values at the round-off floor; the row is treated as exact and
    /// excluded from the pass criterion.
    pub at_floor: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub resolutions: Vec<usize>,
    pub rows: Vec<RateRow>,
    /// True when every row above the floor decreases monotonically.
    pub pass: bool,
}

/// Refinement study over trajectories of the same run at nested resolutions.
///
/// Interval residuals are evaluated on the coarsest trajectory's checkpoint
/// partition (which must be a subset of every finer partition); each
/// trajectory integrates in time over its own finer checkpoints.
pub fn refinement_study(
    trajs: &[&Trajectory],
    scalar_tfs: &[ScalarTestFunction],
    vector_tfs: &[VectorTestFunction],
    entropy_tfs: &[ScalarTestFunction],
) -> Result<RateTable, ConsistencyError> {
    if trajs.len() < 2 {
        return Err(ConsistencyError::BadResolutions);
    }
    let resolutions: Vec<usize> = trajs
        .iter()
        .map(|t| t.grid().cells_per_axis()[0])
        .collect();
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConsistencyError::BadResolutions);
    }
    let horizon = trajs[0].horizon();
    for t in trajs {
        if (t.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(ConsistencyError::IncompatibleTrajectories(
                "the time horizon".into(),
            ));
        }
        if !t.grid().same_domain(trajs[0].grid()) {
            return Err(ConsistencyError::IncompatibleTrajectories(
                "the physical domain".into(),
            ));
        }
    }
    let coarse_times = trajs[0].times().to_vec();
    for t in trajs {
        for &ct in &coarse_times {
            t.checkpoint_index(ct).map_err(|_| {
                ConsistencyError::IncompatibleTrajectories(
                    "checkpoint instants (coarse set must nest)".into(),
                )
            })?;
        }
    }

    let tv_over_coarse = |_traj: &Trajectory,
                          eval: &dyn Fn(f64, f64) -> Result<f64, ConsistencyError>,
                          one_sided: bool|
     -> Result<f64, ConsistencyError> {
        let mut acc = 0.0;
        for w in coarse_times.windows(2) {
            let r = eval(w[0], w[1])?;
            acc += if one_sided { (-r).max(0.0) } else { r.abs() };
        }
        Ok(acc)
    };

    let mut rows = Vec::new();
    let scale_of = |traj: &Trajectory| 1.0 + traj.m0().abs() + traj.e0().abs();
    let mut push_row = |kind: ResidualKind,
                        label: String,
                        sup: f64,
                        values: Vec<f64>|
     -> Result<(), ConsistencyError> {
        let floor = 1e-12 * sup.max(1.0) * trajs.iter().map(|t| scale_of(t)).fold(1.0, f64::max);
        let at_floor = values.iter().all(|v| *v <= floor);
        let mut orders = Vec::new();
        for i in 0..values.len() - 1 {
            let ratio = resolutions[i + 1] as f64 / resolutions[i] as f64;
            orders.push((values[i] / values[i + 1]).ln() / ratio.ln());
        }
        let monotone = values.windows(2).all(|w| w[1] < w[0]);
        rows.push(RateRow {
            kind,
            test_function: label,
            values,
            orders,
            monotone,
            at_floor,
        });
        Ok(())
    };

    for tf in scalar_tfs {
        let mut values = Vec::new();
        for traj in trajs {
            values.push(tv_over_coarse(
                traj,
                &|t1, t2| residual_mass(traj, tf, t1, t2),
                false,
            )?);
        }
        push_row(ResidualKind::Mass, tf.label(), tf.sup_norm(), values)?;
    }
    for tf in vector_tfs {
        let mut values = Vec::new();
        for traj in trajs {
            values.push(tv_over_coarse(
                traj,
                &|t1, t2| residual_momentum(traj, tf, t1, t2),
                false,
            )?);
        }
        push_row(ResidualKind::Momentum, tf.label(), tf.sup_norm(), values)?;
    }
    for tf in entropy_tfs {
        let mut values = Vec::new();
        for traj in trajs {
            values.push(tv_over_coarse(
                traj,
                &|t1, t2| residual_entropy(traj, tf, t1, t2),
                true,
            )?);
        }
        push_row(ResidualKind::Entropy, tf.label(), tf.sup_norm(), values)?;
    }

    let pass = rows
        .iter()
        .filter(|r| !r.at_floor)
        .all(|r| r.monotone);
    Ok(RateTable {
        resolutions,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{scalar_catalogue, vector_catalogue, Grid, ScalarMode};
    use crate::solver::{simulate, SchemeConfig};
    use crate::thermo::{GasModel, State};
    use approx::assert_abs_diff_eq;

    fn constant_trajectory() -> Trajectory {
        let gas = GasModel::air();
        let grid = Grid::torus_1d(16).unwrap();
        let f = Field::uniform(grid, State::new(1.0, [0.3, 0.0], 0.1)).unwrap();
        let e0 = f.total_energy(&gas);
        Trajectory::new(
            gas,
            vec![0.0, 0.5, 1.0],
            vec![f.clone(), f.clone(), f],
            e0,
            1e-12,
            "const",
        )
        .unwrap()
    }

    #[test]
    fn constant_trajectory_mass_residual_vanishes() {
        let traj = constant_trajectory();
        for tf in scalar_catalogue(traj.grid()) {
            let r = residual_mass(&traj, &tf, 0.0, 1.0).unwrap();
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_phi_gives_mass_difference() {
        let gas = GasModel::air();
        let grid = Grid::torus_1d(32).unwrap();
        let init = Field::from_fn(grid, |x| {
            let rho = 1.0 + 0.2 * (2.0 * std::f64::consts::PI * x[0]).sin();
            State::new(rho, [rho * 0.5, 0.0], 0.0)
        })
        .unwrap();
        let run = simulate(&gas, &init, 0.2, &SchemeConfig::default()).unwrap();
        let tf = ScalarTestFunction::new(run.trajectory.grid(), ScalarMode::Constant);
        let r = residual_mass(&run.trajectory, &tf, 0.0, 0.2).unwrap();
        // conservation makes the constant-phi residual machine-small
        assert!(r.abs() < 1e-11, "got {r}");
    }

    #[test]
    fn rest_state_momentum_residual_cancels() {
        let traj = {
            let gas = GasModel::air();
            let grid = Grid::torus_1d(64).unwrap();
            let f = Field::uniform(grid, State::at_rest(1.0, 0.0)).unwrap();
            let e0 = f.total_energy(&gas);
            Trajectory::new(gas, vec![0.0, 1.0], vec![f.clone(), f], e0, 1e-12, "rest").unwrap()
        };
        for tf in vector_catalogue(traj.grid()) {
            let r = residual_momentum(&traj, &tf, 0.0, 1.0).unwrap();
            // constant pressure on the torus: int p div(phi) = 0 to quadrature round-off
            assert!(r.abs() < 1e-10, "{}: got {r}", tf.label());
        }
    }

    #[test]
    fn entropy_requires_nonnegative_phi() {
        let traj = constant_trajectory();
        let bad = ScalarTestFunction::new(traj.grid(), ScalarMode::AxisCos { axis: 0, k: 1 });
        assert!(matches!(
            residual_entropy(&traj, &bad, 0.0, 1.0),
            Err(ConsistencyError::NegativeTestFunction)
        ));
    }

    #[test]
    fn constructed_energy_bump_is_reported() {
        let gas = GasModel::air();
        let grid = Grid::torus_1d(8).unwrap();
        let low = Field::uniform(grid.clone(), State::at_rest(1.0, 0.0)).unwrap();
        // raise the entropy later in time: energy goes up by a known amount
        let high = Field::uniform(grid, State::at_rest(1.0, 0.1)).unwrap();
        let e_low = low.total_energy(&gas);
        let e_high = high.total_energy(&gas);
        let traj = Trajectory::new(
            gas,
            vec![0.0, 1.0],
            vec![low, high],
            e_high,
            1e-12,
            "bump",
        )
        .unwrap();
        assert_abs_diff_eq!(residual_energy(&traj), e_high - e_low, epsilon = 1e-13);
    }

    #[test]
    fn conservative_scheme_has_tiny_e1() {
        let gas = GasModel::air();
        let grid = Grid::torus_1d(64).unwrap();
        let init = Field::from_fn(grid, |x| {
            let rho = 1.0 + 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin();
            State::new(rho, [0.1, 0.0], 0.0)
        })
        .unwrap();
        let run = simulate(&gas, &init, 0.3, &SchemeConfig::default()).unwrap();
        let e0 = run.trajectory.e0();
        assert!(residual_energy(&run.trajectory) <= 1e-11 * e0);
    }

    #[test]
    fn identical_resolutions_rejected() {
        let t = constant_trajectory();
        let err = refinement_study(&[&t, &t], &[], &[], &[]);
        assert!(matches!(err, Err(ConsistencyError::BadResolutions)));
    }
}
