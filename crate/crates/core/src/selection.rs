//! Entropy-based admissibility machinery: selection functionals over
//! exponentially weighted time integrals, entropy-history orders, time-shift
//! and concatenation operators, the temperature lift that trades an energy
//! defect for an entropy jump, and argmin/argmax selection over ensembles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmv::{DmvError, Ensemble};
use crate::domain::{DomainError, Field, Trajectory};
use crate::thermo::{GasModel, State, RHO_EPS};

/// Default relative tolerance for argmin/argmax tie sets.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("decay rate must be positive, got {0}")]
    BadLambda(f64),
    #[error("trajectory horizon {horizon} is shorter than the requested integration time {requested}; tail bound {tail_bound}")]
    HorizonTooShort {
        horizon: f64,
        requested: f64,
        tail_bound: f64,
    },
    #[error("trajectories do not share checkpoint times")]
    MismatchedTimes,
    #[error("rate undefined at the last checkpoint")]
    LastCheckpoint,
    #[error("cell {cell}: density/momentum mismatch at the concatenation instant")]
    IncompatibleGlue { cell: usize },
    #[error("cell {cell}: entropy may not jump downward at the concatenation instant")]
    EntropyJumpDown { cell: usize },
    #[error("nothing to lift: energy defect is {0}")]
    NothingToLift(f64),
    #[error("no interval after tau where the lifted member improves the cost")]
    NoAdvantageWindow,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Ensemble(#[from] DmvError),
}

/// Spatial observables available to the generic cost functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableId {
    /// `int S dx`
    TotalEntropy,
    /// `int E dx`
    TotalEnergy,
    /// `int rho |u|^2 dx = int |m|^2 / rho dx`
    KineticEnergy,
}

impl ObservableId {
    fn eval(&self, gas: &GasModel, field: &Field) -> f64 {
        match self {
            ObservableId::TotalEntropy => field.total_entropy(),
            ObservableId::TotalEnergy => field.total_energy(gas),
            ObservableId::KineticEnergy => field.integrate(|c| {
                if c.rho <= RHO_EPS {
                    0.0
                } else {
                    c.momentum_sq() / c.rho
                }
            }),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            ObservableId::TotalEntropy => "total_entropy",
            ObservableId::TotalEnergy => "total_energy",
            ObservableId::KineticEnergy => "kinetic_energy",
        }
    }
}

/// Integrand of a selection functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    /// Total entropy (the first selection functional; maximized).
    EntropyTotal,
    /// Total energy (the second-stage functional; minimized).
    EnergyTotal,
    /// `int [E - theta_bar S] dx`, the integrand of the single-step selection.
    EquilibriumGap { theta_bar: f64 },
    /// A generic observable from the countable family.
    Observable(ObservableId),
}

/// Exponentially weighted time integral of a spatial observable:
/// `int_0^{T_max} exp(-lambda t) Obs(t) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionFunctional {
    pub kind: FunctionalKind,
    pub lambda: f64,
    /// Truncation time; `None` integrates to the trajectory horizon.
    pub t_max: Option<f64>,
}

impl SelectionFunctional {
    pub fn entropy() -> Self {
        Self {
            kind: FunctionalKind::EntropyTotal,
            lambda: 1.0,
            t_max: None,
        }
    }

    pub fn energy() -> Self {
        Self {
            kind: FunctionalKind::EnergyTotal,
            lambda: 1.0,
            t_max: None,
        }
    }

    pub fn equilibrium_gap(theta_bar: f64) -> Self {
        Self {
            kind: FunctionalKind::EquilibriumGap { theta_bar },
            lambda: 1.0,
            t_max: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = Some(t_max);
        self
    }

    pub fn observable(id: ObservableId, lambda: f64) -> Self {
        Self {
            kind: FunctionalKind::Observable(id),
            lambda,
            t_max: None,
        }
    }

    pub fn label(&self) -> String {
        let base = match self.kind {
            FunctionalKind::EntropyTotal => "F_entropy".to_string(),
            FunctionalKind::EnergyTotal => "F_energy".to_string(),
            FunctionalKind::EquilibriumGap { .. } => "F_equilibrium_gap".to_string(),
            FunctionalKind::Observable(id) => format!("F[{}]", id.label()),
        };
        if (self.lambda - 1.0).abs() > 1e-15 {
            format!("{base}(lambda={})", self.lambda)
        } else {
            base
        }
    }

    fn eval_observable(&self, gas: &GasModel, field: &Field) -> f64 {
        match self.kind {
            FunctionalKind::EntropyTotal => field.total_entropy(),
            FunctionalKind::EnergyTotal => field.total_energy(gas),
            FunctionalKind::EquilibriumGap { theta_bar } => {
                field.total_energy(gas) - theta_bar * field.total_entropy()
            }
            FunctionalKind::Observable(id) => id.eval(gas, field),
        }
    }
}

/// `(1 - exp(-x)) / x`, stable near zero.
fn decay_mean(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(1 - exp(-x)(1 + x)) / x^2`, stable near zero.
fn decay_slope(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0 + x * x * x * x / 144.0
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Exact integral of `exp(-lambda t)` times the linear interpolant through
/// `(a, ya)` and `(b, yb)`; the constant case is exact to round-off.
fn exp_weighted_segment(lambda: f64, a: f64, b: f64, ya: f64, yb: f64) -> f64 {
    let dt = b - a;
    let x = lambda * dt;
    (-lambda * a).exp() * dt * (ya * decay_mean(x) + (yb - ya) * decay_slope(x) * x / x.max(1.0))
}

/// Evaluated functional with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub t_max: f64,
    /// Bound on the dropped tail `int_{T_max}^inf exp(-lambda t) |Obs| dt`
    /// for an observable bounded by its checkpoint maximum.
    pub tail_bound: f64,
}

/// Integrates the functional over the trajectory, treating the observable as
/// piecewise linear between checkpoints (with recorded right limits at
/// concatenation instants).
pub fn eval_functional(
    f: &SelectionFunctional,
    traj: &Trajectory,
) -> Result<FunctionalValue, SelectionError> {
    if !(f.lambda > 0.0) || !f.lambda.is_finite() {
        return Err(SelectionError::BadLambda(f.lambda));
    }
    let gas = traj.gas();
    let horizon = traj.horizon();
    let sup_obs = (0..traj.len())
        .map(|k| f.eval_observable(gas, traj.left_value(k)).abs())
        .fold(0.0, f64::max);
    let t_max = match f.t_max {
        None => horizon,
        Some(requested) => {
            if requested > horizon * (1.0 + 1e-12) {
                return Err(SelectionError::HorizonTooShort {
                    horizon,
                    requested,
                    tail_bound: (-f.lambda * horizon).exp() * sup_obs / f.lambda,
                });
            }
            requested.min(horizon)
        }
    };

    let times = traj.times();
    let mut acc = 0.0;
    for k in 0..times.len() - 1 {
        let (a, b) = (times[k], times[k + 1]);
        if a >= t_max {
            break;
        }
        let ya = f.eval_observable(gas, traj.right_value(k));
        let yb = f.eval_observable(gas, traj.left_value(k + 1));
        if b <= t_max {
            acc += exp_weighted_segment(f.lambda, a, b, ya, yb);
        } else {
            // partial last segment up to t_max
            let frac = (t_max - a) / (b - a);
            let y_mid = ya + frac * (yb - ya);
            acc += exp_weighted_segment(f.lambda, a, t_max, ya, y_mid);
        }
    }
    Ok(FunctionalValue {
        value: acc,
        t_max,
        tail_bound: (-f.lambda * t_max).exp() * sup_obs / f.lambda,
    })
}

// ---------------------------------------------------------------------------
// entropy-history orders
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRelation {
    Less,
    Greater,
    Equal,
    Incomparable,
}

/// Outcome of a pairwise order comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    pub relation: OrderRelation,
    /// For incomparable histories, a checkpoint where the comparison failed.
    pub witness: Option<usize>,
}

fn require_shared_times(a: &Trajectory, b: &Trajectory) -> Result<(), SelectionError> {
    if a.times().len() != b.times().len()
        || a.times()
            .iter()
            .zip(b.times())
            .any(|(x, y)| (x - y).abs() > 1e-12 * y.abs().max(1.0))
    {
        return Err(SelectionError::MismatchedTimes);
    }
    Ok(())
}

/// Entropy-history order: `a` is below `b` when the total entropy of `a`
/// never exceeds that of `b` (within `tol`) across all checkpoints.
pub fn dip_compare(
    a: &Trajectory,
    b: &Trajectory,
    tol: f64,
) -> Result<OrderResult, SelectionError> {
    require_shared_times(a, b)?;
    let sa = a.total_entropy_series();
    let sb = b.total_entropy_series();
    let mut first_less = None;
    let mut first_greater = None;
    for (k, (x, y)) in sa.iter().zip(&sb).enumerate() {
        if *x < y - tol && first_less.is_none() {
            first_less = Some(k);
        }
        if *x > y + tol && first_greater.is_none() {
            first_greater = Some(k);
        }
    }
    let result = match (first_less, first_greater) {
        (None, None) => OrderResult {
            relation: OrderRelation::Equal,
            witness: None,
        },
        (Some(_), None) => OrderResult {
            relation: OrderRelation::Less,
            witness: None,
        },
        (None, Some(_)) => OrderResult {
            relation: OrderRelation::Greater,
            witness: None,
        },
        (Some(l), Some(g)) => OrderResult {
            relation: OrderRelation::Incomparable,
            witness: Some(l.max(g)),
        },
    };
    Ok(result)
}

/// Forward-difference entropy production rate at checkpoint `k`, measured
/// from the recorded right limit.
pub fn dafermos_rate(traj: &Trajectory, k: usize) -> Result<f64, SelectionError> {
    if k + 1 >= traj.len() {
        return Err(SelectionError::LastCheckpoint);
    }
    let s_now = traj.right_value(k).total_entropy();
    let s_next = traj.left_value(k + 1).total_entropy();
    Ok((s_next - s_now) / (traj.time(k + 1) - traj.time(k)))
}

/// Rate-based order at the first checkpoint where the trajectories diverge
/// (fields differ by more than `1e-10` in `L^1`): the member with the larger
/// forward entropy-production rate at the last common checkpoint is greater.
pub fn dafermos_compare(
    a: &Trajectory,
    b: &Trajectory,
    tol: f64,
) -> Result<OrderResult, SelectionError> {
    require_shared_times(a, b)?;
    let mut diverge = None;
    for k in 0..a.len() {
        let d = a.field(k).l1_distance(b.field(k))?;
        if d > 1e-10 {
            diverge = Some(k);
            break;
        }
    }
    let Some(kd) = diverge else {
        return Ok(OrderResult {
            relation: OrderRelation::Equal,
            witness: None,
        });
    };
    if kd == 0 {
        // no common prefix: the order does not apply
        return Ok(OrderResult {
            relation: OrderRelation::Incomparable,
            witness: Some(0),
        });
    }
    let tau = kd - 1;
    let ra = dafermos_rate(a, tau)?;
    let rb = dafermos_rate(b, tau)?;
    let relation = if rb > ra + tol {
        OrderRelation::Less
    } else if ra > rb + tol {
        OrderRelation::Greater
    } else {
        OrderRelation::Incomparable
    };
    Ok(OrderResult {
        relation,
        witness: if relation == OrderRelation::Incomparable {
            Some(kd)
        } else {
            Some(tau)
        },
    })
}

// ---------------------------------------------------------------------------
// time shift and concatenation
// ---------------------------------------------------------------------------

/// Restarts the trajectory at checkpoint instant `t_shift`, re-basing times
/// to zero. `E0` and `M0` are inherited.
pub fn time_shift(traj: &Trajectory, t_shift: f64) -> Result<Trajectory, SelectionError> {
    let j = traj.checkpoint_index(t_shift)?;
    let base = traj.time(j);
    let times: Vec<f64> = traj.times()[j..].iter().map(|t| t - base).collect();
    let fields: Vec<Field> = traj.fields()[j..].to_vec();
    let mut shifted = Trajectory::new(
        *traj.gas(),
        times,
        fields,
        traj.e0(),
        traj.entropy_tol(),
        traj.scheme_id(),
    )?;
    for k in traj.right_limit_indices().collect::<Vec<_>>() {
        if k >= j {
            shifted.set_right_limit(k - j, traj.right_value(k).clone())?;
        }
    }
    Ok(shifted)
}

fn fields_bitwise_equal(a: &Field, b: &Field) -> bool {
    a.cells().iter().zip(b.cells()).all(|(x, y)| {
        x.rho.to_bits() == y.rho.to_bits()
            && x.m[0].to_bits() == y.m[0].to_bits()
            && x.m[1].to_bits() == y.m[1].to_bits()
            && x.entropy.to_bits() == y.entropy.to_bits()
    })
}

/// Glues `second` onto `first` at checkpoint instant `t_glue` of `first`.
///
/// The initial field of `second` must match the state of `first` at the glue
/// instant in density and momentum; the entropy may jump upward, and the
/// right limit is recorded on the result. The energy budget of `first` wins.
pub fn concatenate(
    first: &Trajectory,
    t_glue: f64,
    second: &Trajectory,
) -> Result<Trajectory, SelectionError> {
    let j = first.checkpoint_index(t_glue)?;
    let left = first.field(j);
    let incoming = second.field(0);
    for (cell, (a, b)) in left.cells().iter().zip(incoming.cells()).enumerate() {
        let scale = a.rho.abs().max(1.0);
        if (a.rho - b.rho).abs() > 1e-10 * scale
            || (a.m[0] - b.m[0]).abs() > 1e-10 * scale
            || (a.m[1] - b.m[1]).abs() > 1e-10 * scale
        {
            return Err(SelectionError::IncompatibleGlue { cell });
        }
        if b.entropy < a.entropy - 1e-10 * a.entropy.abs().max(1.0) {
            return Err(SelectionError::EntropyJumpDown { cell });
        }
    }

    let glue_time = first.time(j);
    let mut times: Vec<f64> = first.times()[..=j].to_vec();
    times.extend(second.times()[1..].iter().map(|t| glue_time + t));
    let mut fields: Vec<Field> = first.fields()[..=j].to_vec();
    fields.extend_from_slice(&second.fields()[1..]);

    let mut glued = Trajectory::new(
        *first.gas(),
        times,
        fields,
        first.e0(),
        first.entropy_tol().max(second.entropy_tol()),
        format!("{}+{}", first.scheme_id(), second.scheme_id()),
    )?;
    for k in first.right_limit_indices().collect::<Vec<_>>() {
        if k < j {
            glued.set_right_limit(k, first.right_value(k).clone())?;
        }
    }
    // record the entropy right limit at the glue instant unless trivial
    if !fields_bitwise_equal(left, incoming) {
        glued.set_right_limit(j, incoming.clone())?;
    }
    for k in second.right_limit_indices().collect::<Vec<_>>() {
        if k > 0 {
            glued.set_right_limit(j + k, second.right_value(k).clone())?;
        }
    }
    Ok(glued)
}

// ---------------------------------------------------------------------------
// temperature lift
// ---------------------------------------------------------------------------

/// Guaranteed cost drop produced by lifting an energy defect `y` at budget
/// `e0`: `G(y) = e0 log(e0 / (e0 - y)) - y`, with `G(0) = 0` and `G` strictly
/// increasing on `(0, e0)`.
pub fn lift_gain(e0: f64, y: f64) -> f64 {
    e0 * (e0 / (e0 - y)).ln() - y
}

/// Result of the temperature lift at one checkpoint.
#[derive(Debug, Clone)]
pub struct LiftResult {
    /// Field with the rescaled temperature and raised entropy.
    pub field: Field,
    /// Relative temperature increment `epsilon = D_E / int E_int`.
    pub epsilon: f64,
    /// Energy defect that was removed.
    pub defect: f64,
    /// Closed-form jump of the cost integrand:
    /// `D_E - e0 log(1 + epsilon)`; negative for positive defects.
    pub jump_value: f64,
    /// Upper bound on the jump, `-G(D_E)`.
    pub jump_bound: f64,
    pub theta_bar: f64,
}

/// Rescales the temperature at checkpoint `tau` by `1 + epsilon` so that the
/// energy defect against the budget `e0` closes exactly, raising the total
/// entropy density by `cv rho log(1 + epsilon)`. Cells at or below the vacuum
/// threshold keep their entropy and are excluded from the internal-energy
/// integral.
pub fn temperature_lift(
    traj: &Trajectory,
    tau: f64,
    e0: f64,
) -> Result<LiftResult, SelectionError> {
    let k = traj.checkpoint_index(tau)?;
    let gas = *traj.gas();
    let field = traj.right_value(k);
    let energy = field.total_energy(&gas);
    let defect = e0 - energy;
    if defect <= 0.0 {
        return Err(SelectionError::NothingToLift(defect));
    }
    let internal = field.integrate(|c| {
        if c.rho <= RHO_EPS {
            0.0
        } else {
            gas.internal_energy_density(c.rho, c.entropy)
                .unwrap_or(f64::INFINITY)
        }
    });
    let epsilon = defect / internal;
    let bump = gas.cv() * epsilon.ln_1p();
    let mut lifted = field.clone();
    for c in lifted.cells_mut() {
        if c.rho > RHO_EPS {
            c.entropy += c.rho * bump;
        }
    }
    let theta_bar = e0 / (gas.cv() * traj.m0());
    Ok(LiftResult {
        field: lifted,
        epsilon,
        defect,
        jump_value: defect - e0 * epsilon.ln_1p(),
        jump_bound: -lift_gain(e0, defect),
        theta_bar,
    })
}

// ---------------------------------------------------------------------------
// selection over ensembles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SelectionProcedure {
    /// Maximize total entropy, then minimize total energy among the ties.
    TwoStep,
    /// Minimize the divergence to the background equilibrium.
    Single,
    /// Successive argmin restriction by a list of `(lambda, observable)`
    /// cost functionals until a single member survives.
    KrylovChain {
        stages: Vec<(f64, ObservableId)>,
    },
}

impl SelectionProcedure {
    /// The documented default chain: rates `{1, 2, 1/2}` crossed with the
    /// observable list `{int S, int E, int rho |u|^2}`.
    pub fn default_chain() -> Self {
        let mut stages = Vec::new();
        for lambda in [1.0, 2.0, 0.5] {
            for id in [
                ObservableId::TotalEntropy,
                ObservableId::TotalEnergy,
                ObservableId::KineticEnergy,
            ] {
                stages.push((lambda, id));
            }
        }
        SelectionProcedure::KrylovChain { stages }
    }

    fn label(&self) -> String {
        match self {
            SelectionProcedure::TwoStep => "two_step".into(),
            SelectionProcedure::Single => "single".into(),
            SelectionProcedure::KrylovChain { stages } => {
                format!("krylov_chain[{}]", stages.len())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

/// One argmin/argmax stage over the surviving candidates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub functional: String,
    pub direction: Direction,
    /// Candidate member indices entering the stage.
    pub candidates: Vec<usize>,
    /// Functional value per candidate (same order as `candidates`).
    pub values: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    /// Members within the tie tolerance of the stage optimum.
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub procedure: String,
    pub tie_tol: f64,
    pub stages: Vec<StageReport>,
    pub chosen: usize,
    pub chosen_provenance: String,
    /// True when the final tie was broken by provenance order rather than by
    /// a functional.
    pub tie_broken_by_order: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SelectOptions {
    pub tie_tol: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            tie_tol: DEFAULT_TIE_TOL,
        }
    }
}

fn run_stage(
    ensemble: &Ensemble,
    candidates: &[usize],
    functional: &SelectionFunctional,
    direction: Direction,
    tie_tol: f64,
) -> Result<StageReport, SelectionError> {
    let mut values = Vec::with_capacity(candidates.len());
    let mut tails = Vec::with_capacity(candidates.len());
    for &i in candidates {
        let v = eval_functional(functional, ensemble.member(i))?;
        values.push(v.value);
        tails.push(v.tail_bound);
    }
    let best = match direction {
        Direction::Maximize => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Direction::Minimize => values.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let tol = tie_tol * best.abs().max(1.0);
    let survivors: Vec<usize> = candidates
        .iter()
        .zip(&values)
        .filter(|(_, &v)| match direction {
            Direction::Maximize => v >= best - tol,
            Direction::Minimize => v <= best + tol,
        })
        .map(|(&i, _)| i)
        .collect();
    Ok(StageReport {
        functional: functional.label(),
        direction,
        candidates: candidates.to_vec(),
        values,
        tail_bounds: tails,
        survivors,
    })
}

/// Applies the selection procedure to the ensemble, returning the chosen
/// member index and a full report of every stage.
pub fn select(
    ensemble: &Ensemble,
    procedure: &SelectionProcedure,
    opts: SelectOptions,
) -> Result<(usize, SelectionReport), SelectionError> {
    let gas = ensemble.gas();
    let all: Vec<usize> = (0..ensemble.len()).collect();
    let mut stages = Vec::new();
    let mut survivors = all.clone();

    let plan: Vec<(SelectionFunctional, Direction)> = match procedure {
        SelectionProcedure::TwoStep => vec![
            (SelectionFunctional::entropy(), Direction::Maximize),
            (SelectionFunctional::energy(), Direction::Minimize),
        ],
        SelectionProcedure::Single => {
            let theta_bar = ensemble.e0() / (gas.cv() * ensemble.m0());
            vec![(
                SelectionFunctional::equilibrium_gap(theta_bar),
                Direction::Minimize,
            )]
        }
        SelectionProcedure::KrylovChain { stages } => stages
            .iter()
            .map(|(lambda, id)| {
                (
                    SelectionFunctional::observable(*id, *lambda),
                    Direction::Minimize,
                )
            })
            .collect(),
    };

    for (functional, direction) in &plan {
        if survivors.len() <= 1 {
            break;
        }
        let stage = run_stage(ensemble, &survivors, functional, *direction, opts.tie_tol)?;
        survivors = stage.survivors.clone();
        stages.push(stage);
    }

    let tie_broken_by_order = survivors.len() > 1;
    let chosen = survivors[0];
    Ok((
        chosen,
        SelectionReport {
            procedure: procedure.label(),
            tie_tol: opts.tie_tol,
            stages,
            chosen,
            chosen_provenance: ensemble.provenance(chosen).to_string(),
            tie_broken_by_order,
        },
    ))
}

// ---------------------------------------------------------------------------
// separation of the lifted member for large decay rates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LerchRow {
    pub lambda: f64,
    pub value_original: f64,
    pub value_lifted: f64,
    pub prefers_lifted: bool,
}

/// Quantified comparison of an original trajectory against its
/// lifted-concatenated competitor across a grid of decay rates.
///
/// From the cost histories `g(t) = int [E - theta_bar S] dx` the report
/// extracts the advantage window after `tau` (depth `d_gap` over length
/// `delta`) and the worst later disadvantage `c_bound`; the preference for
/// the lifted member is guaranteed for `lambda >= lambda_bar = c_bound /
/// (d_gap * delta)`, and measured on the supplied grid either way.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LerchReport {
    pub tau: f64,
    pub d_gap: f64,
    pub delta: f64,
    pub c_bound: f64,
    pub lambda_bar: f64,
    pub rows: Vec<LerchRow>,
}

pub fn lerch_separation(
    original: &Trajectory,
    lifted: &Trajectory,
    tau: f64,
    lambdas: &[f64],
) -> Result<LerchReport, SelectionError> {
    require_shared_times(original, lifted)?;
    let gas = original.gas();
    let theta_bar = original.e0() / (gas.cv() * original.m0());
    let g_of = |f: &Field| f.total_energy(gas) - theta_bar * f.total_entropy();
    let k_tau = original.checkpoint_index(tau)?;

    // gap history after tau, starting from the right limits at tau
    let mut gaps = vec![g_of(original.right_value(k_tau)) - g_of(lifted.right_value(k_tau))];
    for k in k_tau + 1..original.len() {
        gaps.push(g_of(original.left_value(k)) - g_of(lifted.left_value(k)));
    }
    // advantage window: leading run of positive gaps
    let mut window_len = 0;
    while window_len < gaps.len() && gaps[window_len] > 0.0 {
        window_len += 1;
    }
    if window_len == 0 {
        return Err(SelectionError::NoAdvantageWindow);
    }
    let d_gap = gaps[..window_len]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let delta = if window_len < gaps.len() {
        original.time(k_tau + window_len) - tau
    } else {
        original.horizon() - tau
    };
    let c_bound = gaps[window_len..]
        .iter()
        .map(|g| (-g).max(0.0))
        .fold(0.0, f64::max);
    let lambda_bar = if c_bound == 0.0 {
        0.0
    } else {
        c_bound / (d_gap * delta)
    };

    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let f = SelectionFunctional::equilibrium_gap(theta_bar).with_lambda(lambda);
        let vo = eval_functional(&f, original)?.value;
        let vl = eval_functional(&f, lifted)?.value;
        rows.push(LerchRow {
            lambda,
            value_original: vo,
            value_lifted: vl,
            prefers_lifted: vl < vo,
        });
    }
    Ok(LerchReport {
        tau,
        d_gap,
        delta,
        c_bound,
        lambda_bar,
        rows,
    })
}

/// Constant-in-time trajectory over the given checkpoint instants; useful
/// for hand-built ensembles and tests.
pub fn constant_trajectory(
    gas: GasModel,
    field: Field,
    times: Vec<f64>,
    e0: f64,
    scheme_id: &str,
) -> Result<Trajectory, DomainError> {
    let fields = vec![field; times.len()];
    Trajectory::new(gas, times, fields, e0, 1e-12, scheme_id)
}

/// Uniform field whose entropy is set so the total energy matches `e_target`
/// at the given bulk momentum.
pub fn uniform_field_with_energy(
    gas: &GasModel,
    grid: &crate::domain::Grid,
    rho: f64,
    momentum: [f64; 2],
    e_target: f64,
) -> Result<Field, DomainError> {
    let vol = grid.volume();
    let kinetic = 0.5 * (momentum[0] * momentum[0] + momentum[1] * momentum[1]) / rho;
    let internal_density = e_target / vol - kinetic;
    let theta = internal_density / (gas.cv() * rho);
    let entropy = gas
        .entropy_from_primitive(rho, theta)
        .map_err(|e| DomainError::BadCell {
            index: 0,
            source: e,
        })?;
    Field::uniform(grid.clone(), State::new(rho, momentum, entropy))
}
