//! Time-indexed checkpoint container with conservation checks.

use std::collections::BTreeMap;
use std::path::Path;

use super::{DomainError, Field, Grid};
use crate::thermo::GasModel;

/// Relative tolerance for mass conservation across checkpoints.
pub const MASS_TOL: f64 = 1e-10;
/// Relative slack allowed on the total-energy budget.
pub const ENERGY_TOL: f64 = 1e-10;

/// Construction-time report on the total-entropy history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyMonotonicity {
    /// Largest decrease of total entropy between consecutive checkpoints
    /// (0 when the history is non-decreasing).
    pub max_decrease: f64,
    /// Interval where the decrease occurred.
    pub worst_interval: Option<(usize, usize)>,
    /// Whether the decrease stays within the recorded scheme tolerance.
    pub within_tol: bool,
}

/// A trajectory: strictly increasing checkpoint instants starting at 0, one
/// field per checkpoint, a total-energy budget `E0`, and the conserved mass.
///
/// Checkpoints store left limits (the field at index `k` represents the state
/// on `(t_{k-1}, t_k]`); right limits at concatenation instants are recorded
/// separately and only differ in the entropy component.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    gas: GasModel,
    times: Vec<f64>,
    fields: Vec<Field>,
    e0: f64,
    m0: f64,
    entropy_tol: f64,
    scheme_id: String,
    right_limits: BTreeMap<usize, Field>,
    monotonicity: EntropyMonotonicity,
}

impl Trajectory {
    /// Validates and assembles a trajectory. Mass conservation and the energy
    /// budget are hard errors; the entropy history is measured and recorded
    /// (schemes differ in how strictly they preserve monotonicity).
    pub fn new(
        gas: GasModel,
        times: Vec<f64>,
        fields: Vec<Field>,
        e0: f64,
        entropy_tol: f64,
        scheme_id: impl Into<String>,
    ) -> Result<Self, DomainError> {
        if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DomainError::BadTimes);
        }
        if fields.len() != times.len() {
            return Err(DomainError::FieldCountMismatch);
        }
        let grid = fields[0].grid().clone();
        for f in &fields {
            if !f.grid().same_layout(&grid) {
                return Err(DomainError::GridMismatch(
                    "all checkpoints must share one grid".into(),
                ));
            }
        }
        let m0 = fields[0].total_mass();
        for (index, f) in fields.iter().enumerate() {
            let mass = f.total_mass();
            if (mass - m0).abs() > MASS_TOL * m0.abs().max(1.0) {
                return Err(DomainError::MassDrift {
                    index,
                    expected: m0,
                    found: mass,
                });
            }
            let energy = f.total_energy(&gas);
            if energy > e0 + ENERGY_TOL * e0.abs().max(1.0) {
                return Err(DomainError::EnergyBudget {
                    index,
                    budget: e0,
                    found: energy,
                });
            }
        }
        let monotonicity = measure_monotonicity(&fields, entropy_tol);
        Ok(Self {
            gas,
            times,
            fields,
            e0,
            m0,
            entropy_tol,
            scheme_id: scheme_id.into(),
            right_limits: BTreeMap::new(),
            monotonicity,
        })
    }

    pub fn gas(&self) -> &GasModel {
        &self.gas
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn field(&self, k: usize) -> &Field {
        &self.fields[k]
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn entropy_tol(&self) -> f64 {
        self.entropy_tol
    }

    pub fn scheme_id(&self) -> &str {
        &self.scheme_id
    }

    pub fn monotonicity(&self) -> EntropyMonotonicity {
        self.monotonicity
    }

    /// Index of the checkpoint at time `t`, if `t` is one.
    pub fn checkpoint_index(&self, t: f64) -> Result<usize, DomainError> {
        let tol = 1e-12 * self.horizon().max(1.0);
        self.times
            .iter()
            .position(|&tk| (tk - t).abs() <= tol)
            .ok_or(DomainError::NotACheckpoint(t))
    }

    /// Left limit at checkpoint `k` (the stored field).
    pub fn left_value(&self, k: usize) -> &Field {
        &self.fields[k]
    }

    /// Right limit at checkpoint `k`; equals the left limit except at
    /// recorded concatenation instants.
    pub fn right_value(&self, k: usize) -> &Field {
        self.right_limits.get(&k).unwrap_or(&self.fields[k])
    }

    pub fn right_limit_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.right_limits.keys().copied()
    }

    /// Records the state right after checkpoint `k`. Density and momentum
    /// must agree with the left limit; entropy may only jump upward.
    pub fn set_right_limit(&mut self, k: usize, field: Field) -> Result<(), DomainError> {
        if k >= self.len() {
            return Err(DomainError::BadRightLimit {
                index: k,
                reason: "no such checkpoint".into(),
            });
        }
        if !field.grid().same_layout(self.grid()) {
            return Err(DomainError::BadRightLimit {
                index: k,
                reason: "grid mismatch".into(),
            });
        }
        let left = &self.fields[k];
        for (i, (a, b)) in left.cells().iter().zip(field.cells()).enumerate() {
            let scale = a.rho.abs().max(1.0);
            if (a.rho - b.rho).abs() > 1e-10 * scale
                || (a.m[0] - b.m[0]).abs() > 1e-10 * scale
                || (a.m[1] - b.m[1]).abs() > 1e-10 * scale
            {
                return Err(DomainError::BadRightLimit {
                    index: k,
                    reason: format!("cell {i}: density/momentum differ from the left limit"),
                });
            }
            if b.entropy < a.entropy - 1e-10 * a.entropy.abs().max(1.0) {
                return Err(DomainError::BadRightLimit {
                    index: k,
                    reason: format!("cell {i}: entropy may only jump upward"),
                });
            }
        }
        let energy = field.total_energy(&self.gas);
        if energy > self.e0 + ENERGY_TOL * self.e0.abs().max(1.0) {
            return Err(DomainError::BadRightLimit {
                index: k,
                reason: format!("energy {energy} exceeds the budget {}", self.e0),
            });
        }
        self.right_limits.insert(k, field);
        Ok(())
    }

    /// Total entropy at every checkpoint (left limits).
    pub fn total_entropy_series(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.total_entropy()).collect()
    }

    pub fn total_energy_series(&self) -> Vec<f64> {
        self.fields
            .iter()
            .map(|f| f.total_energy(&self.gas))
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<(), DomainError> {
        super::io::save(self, dir).map_err(DomainError::Persist)
    }

    pub fn load(dir: &Path) -> Result<Self, DomainError> {
        super::io::load(dir)
    }
}

fn measure_monotonicity(fields: &[Field], tol: f64) -> EntropyMonotonicity {
    let series: Vec<f64> = fields.iter().map(|f| f.total_entropy()).collect();
    let mut max_decrease = 0.0_f64;
    let mut worst = None;
    for k in 1..series.len() {
        let drop = series[k - 1] - series[k];
        if drop > max_decrease {
            max_decrease = drop;
            worst = Some((k - 1, k));
        }
    }
    EntropyMonotonicity {
        max_decrease,
        worst_interval: worst,
        within_tol: max_decrease <= tol,
    }
}
