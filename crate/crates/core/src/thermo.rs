//! Thermodynamic closure for a complete polytropic gas.
//!
//! Everything here works in the conservative variables `(rho, m, S)`:
//! mass density, momentum density, and total entropy density `S = rho * s`.
//! The total energy
//!
//! ```text
//! E(rho, m, S) = |m|^2 / (2 rho) + rho^gamma * exp(S / (cv rho)) / (gamma - 1)
//! ```
//!
//! is extended lower-semicontinuously to the vacuum: it is `0` at
//! `(0, 0, S <= 0)` and `+inf` everywhere else outside the open domain.
//! Infinite energy is an ordinary `f64::INFINITY` value, never a panic or an
//! error, so comparisons and minimizations over candidate states stay total.
//!
//! Conversions to primitive variables (velocity, pressure, temperature) exist
//! only at module boundaries; the solver and the exact Riemann solver own
//! their own primitive representations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Densities below this are treated as vacuum throughout the crate.
pub const RHO_EPS: f64 = 1e-12;

/// The energy gradient is refused below this density instead of extrapolated.
pub const RHO_GRAD_FLOOR: f64 = 1e-8;

/// Relative step used by the finite-difference Gibbs check.
pub const GIBBS_FD_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error("adiabatic exponent must satisfy gamma > 1, got {0}")]
    BadGamma(f64),
    #[error("negative density {0} is outside the finite-energy domain")]
    NegativeDensity(f64),
    #[error("vacuum state with positive entropy S = {0} has infinite energy")]
    VacuumEntropy(f64),
    #[error("operation requires positive density, got rho = {0}")]
    NonPositiveDensity(f64),
    #[error("operation requires positive temperature, got theta = {0}")]
    NonPositiveTemperature(f64),
    #[error("energy gradient refused at near-vacuum density rho = {0}")]
    NearVacuumGradient(f64),
    #[error("Bregman reference must be strictly interior, got rho = {0}")]
    BadReference(f64),
    #[error("equilibrium state needs positive mass/energy/volume, got {0} = {1}")]
    BadEquilibriumInput(&'static str, f64),
    #[error("field mass {found} does not match equilibrium mass {expected}")]
    MassMismatch { expected: f64, found: f64 },
    #[error("non-finite input {0}")]
    NonFinite(&'static str),
}

/// Polytropic gas: adiabatic exponent, derived specific heat, entropy floor.
///
/// `cv = 1 / (gamma - 1)` is always recomputed from `gamma`, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasModel {
    gamma: f64,
    entropy_floor: f64,
}

/// Raw mirror used to validate deserialized configs.
#[derive(Deserialize)]
struct GasModelRaw {
    gamma: f64,
    #[serde(default = "default_entropy_floor")]
    entropy_floor: f64,
}

fn default_entropy_floor() -> f64 {
    -100.0
}

impl<'de> Deserialize<'de> for GasModel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = GasModelRaw::deserialize(de)?;
        GasModel::with_entropy_floor(raw.gamma, raw.entropy_floor)
            .map_err(serde::de::Error::custom)
    }
}

impl GasModel {
    /// Gas with the given adiabatic exponent and a permissive entropy floor.
    pub fn new(gamma: f64) -> Result<Self, ThermoError> {
        Self::with_entropy_floor(gamma, default_entropy_floor())
    }

    pub fn with_entropy_floor(gamma: f64, entropy_floor: f64) -> Result<Self, ThermoError> {
        if !gamma.is_finite() || gamma <= 1.0 {
            return Err(ThermoError::BadGamma(gamma));
        }
        if !entropy_floor.is_finite() {
            return Err(ThermoError::NonFinite("entropy_floor"));
        }
        Ok(Self {
            gamma,
            entropy_floor,
        })
    }

    /// Diatomic air, `gamma = 1.4`.
    pub fn air() -> Self {
        Self::new(1.4).unwrap()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Specific heat at constant volume, `1 / (gamma - 1)`.
    pub fn cv(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    /// Lower bound on the specific entropy `s = S / rho` for admissible states.
    pub fn entropy_floor(&self) -> f64 {
        self.entropy_floor
    }
}

/// Conservative state at one point or cell: `(rho, m, S)`.
///
/// The momentum always carries two slots; one-dimensional fields keep `m[1] = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Mass density, `>= 0`.
    pub rho: f64,
    /// Momentum density.
    pub m: [f64; 2],
    /// Total entropy density `S = rho * s`.
    pub entropy: f64,
}

impl State {
    pub fn new(rho: f64, m: [f64; 2], entropy: f64) -> Self {
        Self { rho, m, entropy }
    }

    /// Rest state with zero momentum.
    pub fn at_rest(rho: f64, entropy: f64) -> Self {
        Self::new(rho, [0.0, 0.0], entropy)
    }

    pub fn momentum_sq(&self) -> f64 {
        self.m[0] * self.m[0] + self.m[1] * self.m[1]
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho <= RHO_EPS
    }

    /// Specific entropy `s = S / rho`; only meaningful away from vacuum.
    pub fn specific_entropy(&self) -> f64 {
        self.entropy / self.rho
    }

    /// Checks the finite-energy domain conditions.
    pub fn validate(&self) -> Result<(), ThermoError> {
        if !self.rho.is_finite() || !self.m[0].is_finite() || !self.m[1].is_finite() {
            return Err(ThermoError::NonFinite("state"));
        }
        if !self.entropy.is_finite() {
            return Err(ThermoError::NonFinite("entropy"));
        }
        if self.rho < 0.0 {
            return Err(ThermoError::NegativeDensity(self.rho));
        }
        if self.rho == 0.0 && (self.momentum_sq() != 0.0 || self.entropy > 0.0) {
            return Err(ThermoError::VacuumEntropy(self.entropy));
        }
        Ok(())
    }

    /// Entropy minimum principle: `S >= floor * rho`.
    pub fn is_admissible(&self, gas: &GasModel) -> bool {
        self.entropy >= gas.entropy_floor() * self.rho
    }
}

/// Gradient of the total energy in `(rho, m, S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGradient {
    pub d_rho: f64,
    pub d_m: [f64; 2],
    pub d_entropy: f64,
}

/// Spatially constant background state fixed by total mass and energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub rho_bar: f64,
    pub theta_bar: f64,
    /// Total entropy density `rho_bar * s(rho_bar, theta_bar)`.
    pub s_bar: f64,
    pub total_mass: f64,
    pub total_energy: f64,
    pub volume: f64,
}

impl EquilibriumState {
    /// The equilibrium as a conservative state.
    pub fn state(&self) -> State {
        State::at_rest(self.rho_bar, self.s_bar)
    }
}

impl GasModel {
    /// Pressure `p(rho, S)` with the lower-semicontinuous vacuum extension.
    ///
    /// `rho > 0` gives `rho^gamma * exp(S / (cv rho))`; exact vacuum with
    /// `S <= 0` gives `0`. Negative density or vacuum with positive entropy is
    /// outside the finite-energy domain.
    pub fn pressure(&self, rho: f64, entropy: f64) -> Result<f64, ThermoError> {
        if !rho.is_finite() || !entropy.is_finite() {
            return Err(ThermoError::NonFinite("pressure input"));
        }
        if rho < 0.0 {
            return Err(ThermoError::NegativeDensity(rho));
        }
        if rho == 0.0 {
            if entropy > 0.0 {
                return Err(ThermoError::VacuumEntropy(entropy));
            }
            return Ok(0.0);
        }
        Ok(rho.powf(self.gamma) * (entropy / (self.cv() * rho)).exp())
    }

    /// Internal energy density `rho e = p / (gamma - 1)` for `rho > 0`.
    pub fn internal_energy_density(&self, rho: f64, entropy: f64) -> Result<f64, ThermoError> {
        Ok(self.pressure(rho, entropy)? / (self.gamma - 1.0))
    }

    /// Total energy density, extended to `[0, +inf]`.
    ///
    /// This is a total function: states outside the finite-energy domain map
    /// to `f64::INFINITY` rather than an error.
    pub fn total_energy(&self, st: &State) -> f64 {
        if st.rho > 0.0 {
            let kinetic = 0.5 * st.momentum_sq() / st.rho;
            let internal =
                st.rho.powf(self.gamma) * (st.entropy / (self.cv() * st.rho)).exp()
                    / (self.gamma - 1.0);
            kinetic + internal
        } else if st.rho == 0.0 && st.momentum_sq() == 0.0 && st.entropy <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Temperature from `(rho, S)`, inverting `S = rho (cv log theta - log rho)`.
    pub fn temperature(&self, rho: f64, entropy: f64) -> Result<f64, ThermoError> {
        if !(rho > 0.0) {
            return Err(ThermoError::NonPositiveDensity(rho));
        }
        Ok(((entropy / rho + rho.ln()) / self.cv()).exp())
    }

    /// Total entropy density `S = rho (cv log theta - log rho)`.
    pub fn entropy_from_primitive(&self, rho: f64, theta: f64) -> Result<f64, ThermoError> {
        if !(rho > 0.0) {
            return Err(ThermoError::NonPositiveDensity(rho));
        }
        if !(theta > 0.0) {
            return Err(ThermoError::NonPositiveTemperature(theta));
        }
        Ok(rho * (self.cv() * theta.ln() - rho.ln()))
    }

    /// Analytic gradient of the total energy; refused near vacuum.
    ///
    /// `d/dS (rho e) = theta`, `d/dm E = m / rho`, and the density slot is
    /// `-|u|^2/2 + cv gamma theta - theta s`.
    pub fn energy_gradient(&self, st: &State) -> Result<EnergyGradient, ThermoError> {
        if st.rho < RHO_GRAD_FLOOR {
            return Err(ThermoError::NearVacuumGradient(st.rho));
        }
        let theta = self.temperature(st.rho, st.entropy)?;
        let u = [st.m[0] / st.rho, st.m[1] / st.rho];
        let s = st.specific_entropy();
        Ok(EnergyGradient {
            d_rho: -0.5 * (u[0] * u[0] + u[1] * u[1]) + self.cv() * self.gamma * theta - theta * s,
            d_m: u,
            d_entropy: theta,
        })
    }

    /// Bregman divergence of the total energy, `E(a) - E(b) - <grad E(b), a - b>`.
    ///
    /// The reference must be strictly interior; a candidate outside the energy
    /// domain yields `+inf`.
    pub fn bregman(&self, st: &State, reference: &State) -> Result<f64, ThermoError> {
        if reference.rho < RHO_GRAD_FLOOR {
            return Err(ThermoError::BadReference(reference.rho));
        }
        let e = self.total_energy(st);
        if e.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let e_ref = self.total_energy(reference);
        let g = self.energy_gradient(reference)?;
        let linear = g.d_rho * (st.rho - reference.rho)
            + g.d_m[0] * (st.m[0] - reference.m[0])
            + g.d_m[1] * (st.m[1] - reference.m[1])
            + g.d_entropy * (st.entropy - reference.entropy);
        Ok(e - e_ref - linear)
    }

    /// Background equilibrium fixed by total mass, total energy, and volume.
    ///
    /// `rho_bar = M0 / vol` and `theta_bar = E0 / (cv M0)`, so the equilibrium
    /// internal energy exhausts the budget exactly.
    pub fn equilibrium(
        &self,
        total_mass: f64,
        total_energy: f64,
        volume: f64,
    ) -> Result<EquilibriumState, ThermoError> {
        for (name, v) in [
            ("total_mass", total_mass),
            ("total_energy", total_energy),
            ("volume", volume),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ThermoError::BadEquilibriumInput(name, v));
            }
        }
        let rho_bar = total_mass / volume;
        let theta_bar = total_energy / (self.cv() * total_mass);
        let s_bar = self.entropy_from_primitive(rho_bar, theta_bar)?;
        Ok(EquilibriumState {
            rho_bar,
            theta_bar,
            s_bar,
            total_mass,
            total_energy,
            volume,
        })
    }

    /// Finite-difference check of Gibbs' law `theta Ds = De + p D(1/rho)`.
    ///
    /// Central differences with relative step [`GIBBS_FD_STEP`] are taken on
    /// `e(rho, theta) = cv theta` and `s(rho, theta) = cv log theta - log rho`
    /// in each of the two coordinate directions. The returned residual is the
    /// worse direction, normalized by the local derivative scale so that the
    /// check is meaningful across the whole `(rho, theta)` range; raw absolute
    /// residuals near `rho << 1, theta >> 1` would be dominated by the
    /// cancellation of the two `theta / rho` terms.
    pub fn gibbs_residual(&self, rho: f64, theta: f64) -> Result<f64, ThermoError> {
        if !(rho > 0.0) {
            return Err(ThermoError::NonPositiveDensity(rho));
        }
        if !(theta > 0.0) {
            return Err(ThermoError::NonPositiveTemperature(theta));
        }
        let cv = self.cv();
        let e = |_r: f64, th: f64| cv * th;
        let s = |r: f64, th: f64| cv * th.ln() - r.ln();
        let inv = |r: f64, _th: f64| 1.0 / r;
        let p = rho * theta;

        let mut worst = 0.0_f64;
        for dir in 0..2 {
            let h = GIBBS_FD_STEP * if dir == 0 { rho } else { theta };
            let at = |f: &dyn Fn(f64, f64) -> f64, sign: f64| {
                if dir == 0 {
                    f(rho + sign * h, theta)
                } else {
                    f(rho, theta + sign * h)
                }
            };
            let fd = |f: &dyn Fn(f64, f64) -> f64| (at(f, 1.0) - at(f, -1.0)) / (2.0 * h);
            let ds = fd(&s);
            let de = fd(&e);
            let dinv = fd(&inv);
            let residual = (theta * ds - de - p * dinv).abs();
            let scale = 1.0 + (theta * ds).abs() + de.abs() + (p * dinv).abs();
            worst = worst.max(residual / scale);
        }
        Ok(worst)
    }

    /// Integrated Bregman distance of a field to the background equilibrium,
    /// evaluated from field integrals alone:
    ///
    /// ```text
    /// int [E - theta_bar S] dx + theta_bar M0 s(rho_bar, theta_bar) - E0
    /// ```
    ///
    /// The identity with the cell-wise integrated Bregman divergence holds for
    /// fields of total mass `M0`, so the mass is checked first.
    pub fn relative_energy_to_equilibrium(
        &self,
        integral_energy: f64,
        integral_entropy: f64,
        field_mass: f64,
        eq: &EquilibriumState,
    ) -> Result<f64, ThermoError> {
        let tol = 1e-8 * eq.total_mass.abs().max(1.0);
        if (field_mass - eq.total_mass).abs() > tol {
            return Err(ThermoError::MassMismatch {
                expected: eq.total_mass,
                found: field_mass,
            });
        }
        Ok(integral_energy - eq.theta_bar * integral_entropy
            + eq.theta_bar * eq.total_mass * (self.cv() * eq.theta_bar.ln() - eq.rho_bar.ln())
            - eq.total_energy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gas() -> GasModel {
        GasModel::air()
    }

    #[test]
    fn pressure_reference_values() {
        let g = gas();
        assert_abs_diff_eq!(g.pressure(1.0, 0.0).unwrap(), 1.0);
        // frozen from a high-precision evaluation of 2^1.4
        assert_abs_diff_eq!(
            g.pressure(2.0, 0.0).unwrap(),
            2.6390158215457885,
            epsilon = 1e-14
        );
        assert_eq!(g.pressure(0.0, -1.0).unwrap(), 0.0);
        assert!(g.pressure(0.0, 1.0).is_err());
        assert!(g.pressure(-1.0, 0.0).is_err());
    }

    #[test]
    fn total_energy_reference_values() {
        let g = gas();
        assert_abs_diff_eq!(
            g.total_energy(&State::at_rest(1.0, 0.0)),
            2.5,
            epsilon = 1e-14
        );
        assert_eq!(g.total_energy(&State::at_rest(0.0, 0.0)), 0.0);
        assert_eq!(
            g.total_energy(&State::new(0.0, [1.0, 0.0], 0.0)),
            f64::INFINITY
        );
        assert_eq!(g.total_energy(&State::at_rest(0.0, 0.5)), f64::INFINITY);
    }

    #[test]
    fn temperature_inverts_entropy() {
        let g = gas();
        assert_abs_diff_eq!(g.temperature(1.0, 0.0).unwrap(), 1.0);
        // cv = 2.5 at gamma = 1.4
        assert_relative_eq!(
            g.temperature(1.0, 2.5).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-14
        );
        assert!(g.temperature(0.0, 0.0).is_err());
        assert!(g.temperature(-1.0, 0.0).is_err());
    }

    #[test]
    fn entropy_from_primitive_values() {
        let g = gas();
        assert_abs_diff_eq!(g.entropy_from_primitive(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            g.entropy_from_primitive(1.0, std::f64::consts::E).unwrap(),
            2.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            g.entropy_from_primitive(std::f64::consts::E, 1.0).unwrap(),
            -std::f64::consts::E,
            max_relative = 1e-14
        );
        assert!(g.entropy_from_primitive(1.0, 0.0).is_err());
    }

    #[test]
    fn temperature_entropy_round_trip() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rho = 10f64.powf(rng.gen_range(-2.0..2.0));
            let s_spec = rng.gen_range(-3.0..3.0);
            let entropy = rho * s_spec;
            let theta = g.temperature(rho, entropy).unwrap();
            let back = g.entropy_from_primitive(rho, theta).unwrap();
            assert!(
                (back - entropy).abs() <= 1e-12 * (1.0 + entropy.abs()),
                "round trip rho={rho} S={entropy} got {back}"
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let st = State::new(
                rng.gen_range(0.2..3.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(-1.0..1.0),
            );
            let grad = g.energy_gradient(&st).unwrap();
            let h = 1e-6;
            let fd = |pert: &dyn Fn(f64) -> State| {
                (g.total_energy(&pert(h)) - g.total_energy(&pert(-h))) / (2.0 * h)
            };
            let d_rho = fd(&|e| State::new(st.rho + e, st.m, st.entropy));
            let d_m0 = fd(&|e| State::new(st.rho, [st.m[0] + e, st.m[1]], st.entropy));
            let d_m1 = fd(&|e| State::new(st.rho, [st.m[0], st.m[1] + e], st.entropy));
            let d_s = fd(&|e| State::new(st.rho, st.m, st.entropy + e));
            for (a, b) in [
                (grad.d_rho, d_rho),
                (grad.d_m[0], d_m0),
                (grad.d_m[1], d_m1),
                (grad.d_entropy, d_s),
            ] {
                assert!(
                    (a - b).abs() <= 1e-6 * (1.0 + a.abs()),
                    "gradient component {a} vs FD {b}"
                );
            }
            // d/dS of rho*e is the temperature
            let theta = g.temperature(st.rho, st.entropy).unwrap();
            assert_relative_eq!(grad.d_entropy, theta, max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_refused_near_vacuum() {
        let g = gas();
        assert!(g
            .energy_gradient(&State::at_rest(1e-9, 0.0))
            .is_err());
    }

    #[test]
    fn bregman_kinetic_case() {
        let g = gas();
        let a = State::new(1.0, [1.0, 0.0], 0.0);
        let b = State::at_rest(1.0, 0.0);
        assert_abs_diff_eq!(g.bregman(&a, &b).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g.bregman(&b, &b).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn bregman_nonnegative_sweep() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let a = State::new(
                rng.gen_range(0.1..4.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(-1.5..1.5),
            );
            let b = State::new(
                rng.gen_range(0.1..4.0),
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(-1.5..1.5),
            );
            let d = g.bregman(&a, &b).unwrap();
            assert!(d >= -1e-12, "bregman must be nonnegative, got {d}");
            let apart = (a.rho - b.rho).abs().max((a.m[0] - b.m[0]).abs());
            if apart > 1e-3 {
                assert!(d > 0.0, "distinct states must have positive divergence");
            }
        }
    }

    #[test]
    fn equilibrium_reference_values() {
        let g = gas();
        let eq = g.equilibrium(1.0, 2.5, 1.0).unwrap();
        assert_abs_diff_eq!(eq.rho_bar, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eq.theta_bar, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eq.s_bar, 0.0, epsilon = 1e-14);

        let eq = g.equilibrium(2.0, 5.0, 1.0).unwrap();
        assert_abs_diff_eq!(eq.theta_bar, 1.0);
        assert_abs_diff_eq!(eq.rho_bar, 2.0);
        assert_relative_eq!(eq.s_bar, -2.0 * 2f64.ln(), max_relative = 1e-14);

        for theta in [0.3, 1.7, 42.0] {
            let eq = g.equilibrium(1.0, g.cv() * theta, 1.0).unwrap();
            assert_relative_eq!(eq.theta_bar, theta, max_relative = 1e-14);
        }
        assert!(g.equilibrium(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn gibbs_residual_small_on_sweep() {
        let g = gas();
        assert!(g.gibbs_residual(1.0, 1.0).unwrap() < 1e-8);
        assert!(g.gibbs_residual(0.3, 4.2).unwrap() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let rho = 10f64.powf(rng.gen_range(-2.0..2.0));
            let theta = 10f64.powf(rng.gen_range(-2.0..2.0));
            let r = g.gibbs_residual(rho, theta).unwrap();
            assert!(r < 1e-8, "gibbs residual {r} at rho={rho} theta={theta}");
        }
    }

    #[test]
    fn relative_energy_at_equilibrium_is_zero() {
        let g = gas();
        let eq = g.equilibrium(2.0, 5.0, 1.0).unwrap();
        // the equilibrium field itself: integrals over unit volume
        let e_int = g.total_energy(&eq.state());
        let v = g
            .relative_energy_to_equilibrium(e_int, eq.s_bar, 2.0, &eq)
            .unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn relative_energy_kinetic_perturbation() {
        let g = gas();
        let eq = g.equilibrium(1.0, 2.5, 1.0).unwrap();
        let a = 0.7;
        let st = State::new(eq.rho_bar, [a, 0.0], eq.s_bar);
        let v = g
            .relative_energy_to_equilibrium(g.total_energy(&st), eq.s_bar, 1.0, &eq)
            .unwrap();
        assert_relative_eq!(v, a * a / (2.0 * eq.rho_bar), max_relative = 1e-12);
    }

    #[test]
    fn relative_energy_rejects_mass_mismatch() {
        let g = gas();
        let eq = g.equilibrium(1.0, 2.5, 1.0).unwrap();
        assert!(g
            .relative_energy_to_equilibrium(2.5, 0.0, 1.5, &eq)
            .is_err());
    }

    proptest! {
        #[test]
        fn midpoint_convexity(
            rho_a in 0.05f64..5.0, ma in -3.0f64..3.0, sa in -2.0f64..2.0,
            rho_b in 0.05f64..5.0, mb in -3.0f64..3.0, sb in -2.0f64..2.0,
        ) {
            let g = gas();
            let a = State::new(rho_a, [ma, 0.0], sa);
            let b = State::new(rho_b, [mb, 0.0], sb);
            let mid = State::new(
                0.5 * (a.rho + b.rho),
                [0.5 * (a.m[0] + b.m[0]), 0.5 * (a.m[1] + b.m[1])],
                0.5 * (a.entropy + b.entropy),
            );
            let ea = g.total_energy(&a);
            let eb = g.total_energy(&b);
            let em = g.total_energy(&mid);
            prop_assert!(em <= 0.5 * (ea + eb) + 1e-12 * (1.0 + ea.abs() + eb.abs()));
        }

        #[test]
        fn temperature_entropy_inverse(rho in 0.01f64..100.0, s_spec in -3.0f64..3.0) {
            let g = gas();
            let entropy = rho * s_spec;
            let theta = g.temperature(rho, entropy).unwrap();
            let back = g.entropy_from_primitive(rho, theta).unwrap();
            prop_assert!((back - entropy).abs() <= 1e-12 * (1.0 + entropy.abs()));
        }
    }
}
