//! Experiment configuration: a single JSON document describing gas, grid,
//! initial data, scheme, and the optional per-command sections. Presets
//! expand to full configs that are written next to the outputs.

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use eulerlab::domain::{Field, Grid};
use eulerlab::riemann::{riemann_field, solve_star, PrimitiveState, RiemannData};
use eulerlab::solver::SchemeConfig;
use eulerlab::thermo::{GasModel, State};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub gas: GasModel,
    pub grid: GridConfig,
    pub initial: InitialData,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riemann: Option<RiemannSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridConfig {
    Torus {
        n: Vec<usize>,
        #[serde(default)]
        extent: Option<Vec<f64>>,
    },
    Strip {
        n: Vec<usize>,
        half_width: f64,
    },
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        self.build_with_resolution(self.base_resolution())
    }

    pub fn base_resolution(&self) -> usize {
        match self {
            GridConfig::Torus { n, .. } | GridConfig::Strip { n, .. } => n[0],
        }
    }

    /// Same geometry with the axis-0 resolution replaced (other axes scale
    /// proportionally), used by refinement studies and ensemble members.
    pub fn build_with_resolution(&self, n0: usize) -> Result<Grid> {
        let grid = match self {
            GridConfig::Torus { n, extent } => {
                if n.is_empty() || n.len() > 2 {
                    bail!("torus grids need 1 or 2 axis resolutions");
                }
                let scale = n0 as f64 / n[0] as f64;
                if n.len() == 1 {
                    let extent0 = extent.as_ref().map_or(1.0, |e| e[0]);
                    if (extent0 - 1.0).abs() > 1e-12 {
                        // 1-D torus is fixed to unit extent; rescale counts instead
                        bail!("1-d torus uses unit extent");
                    }
                    Grid::torus_1d(n0)?
                } else {
                    let e = extent.clone().unwrap_or_else(|| vec![1.0, 1.0]);
                    let n1 = ((n[1] as f64) * scale).round() as usize;
                    Grid::torus_2d([n0, n1], [e[0], e[1]])?
                }
            }
            GridConfig::Strip { n, half_width } => {
                if n.len() == 1 {
                    Grid::strip_1d(n0, *half_width)?
                } else {
                    let scale = n0 as f64 / n[0] as f64;
                    let n1 = ((n[1] as f64) * scale).round() as usize;
                    Grid::strip_2d([n0, n1], *half_width)?
                }
            }
        };
        Ok(grid)
    }
}

/// Primitive data for one side of a Riemann problem; exactly one of
/// `pressure`/`temperature` must be given.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SideSpec {
    pub rho: f64,
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl SideSpec {
    fn primitive(&self) -> Result<PrimitiveState> {
        let p = match (self.pressure, self.temperature) {
            (Some(p), None) => p,
            (None, Some(theta)) => self.rho * theta,
            _ => bail!("give exactly one of pressure/temperature"),
        };
        Ok(PrimitiveState::new(self.rho, self.u, p).with_transverse(self.v))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Uniform {
        rho: f64,
        velocity: [f64; 2],
        pressure: f64,
    },
    /// Traveling density wave `rho = 1 + a sin(2 pi (x - t))`, `u = 1`,
    /// `p = 1` on the unit torus; an exact solution used by rate studies.
    SmoothAdvection {
        #[serde(default = "default_advection_amplitude")]
        amplitude: f64,
    },
    Sod,
    Riemann {
        left: SideSpec,
        right: SideSpec,
    },
    /// Seeded multiplicative density perturbation of a base field,
    /// renormalized to the base mass and total energy.
    Perturbed {
        base: Box<InitialData>,
        seed: u64,
        #[serde(default = "default_perturb_amplitude")]
        amplitude: f64,
    },
}

fn default_advection_amplitude() -> f64 {
    0.2
}

fn default_perturb_amplitude() -> f64 {
    0.01
}

impl InitialData {
    pub fn riemann_data(&self, gas: GasModel) -> Result<Option<RiemannData>> {
        Ok(match self {
            InitialData::Sod => Some(RiemannData::sod()),
            InitialData::Riemann { left, right } => Some(RiemannData::new(
                gas,
                left.primitive()?,
                right.primitive()?,
            )?),
            _ => None,
        })
    }

    pub fn build_field(&self, gas: &GasModel, grid: &Grid) -> Result<Field> {
        match self {
            InitialData::Uniform {
                rho,
                velocity,
                pressure,
            } => {
                let entropy = gas.entropy_from_primitive(*rho, pressure / rho)?;
                let state = State::new(*rho, [rho * velocity[0], rho * velocity[1]], entropy);
                Ok(Field::uniform(grid.clone(), state)?)
            }
            InitialData::SmoothAdvection { amplitude } => {
                let a = *amplitude;
                if !(a.abs() < 1.0) {
                    bail!("advection amplitude must keep the density positive");
                }
                let g = *gas;
                Ok(Field::from_fn(grid.clone(), move |x| {
                    let rho = 1.0 + a * (2.0 * std::f64::consts::PI * x[0]).sin();
                    let entropy = g.entropy_from_primitive(rho, 1.0 / rho).unwrap();
                    State::new(rho, [rho, 0.0], entropy)
                })?)
            }
            InitialData::Sod | InitialData::Riemann { .. } => {
                let data = self.riemann_data(*gas)?.unwrap();
                let sol = solve_star(&data)?;
                Ok(riemann_field(&sol, &data, grid, 0.0)?)
            }
            InitialData::Perturbed {
                base,
                seed,
                amplitude,
            } => {
                let base_field = base.build_field(gas, grid)?;
                perturb_field(gas, &base_field, *seed, *amplitude)
            }
        }
    }
}

/// Multiplicative density noise at fixed per-cell temperature, projected back
/// onto the base total mass and total energy so ensemble members share data.
fn perturb_field(gas: &GasModel, base: &Field, seed: u64, amplitude: f64) -> Result<Field> {
    if !(amplitude > 0.0 && amplitude < 0.5) {
        bail!("perturbation amplitude must lie in (0, 0.5)");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_mass = base.total_mass();
    let target_energy = base.total_energy(gas);

    let mut cells = Vec::with_capacity(base.cells().len());
    for st in base.cells() {
        let theta = gas.temperature(st.rho, st.entropy)?;
        let factor = 1.0 + amplitude * (2.0 * rng.gen::<f64>() - 1.0);
        let rho = st.rho * factor;
        let entropy = gas.entropy_from_primitive(rho, theta)?;
        // velocity is kept, momentum scales with the density
        cells.push(State::new(rho, [st.m[0] * factor, st.m[1] * factor], entropy));
    }
    let grid = base.grid().clone();
    let draft = Field::new(grid.clone(), cells)?;

    // restore the mass by a global density rescale
    let mass_scale = target_mass / draft.total_mass();
    let mut cells = Vec::with_capacity(draft.cells().len());
    for st in draft.cells() {
        let theta = gas.temperature(st.rho, st.entropy)?;
        let rho = st.rho * mass_scale;
        cells.push(State::new(
            rho,
            [st.m[0] * mass_scale, st.m[1] * mass_scale],
            gas.entropy_from_primitive(rho, theta)?,
        ));
    }
    let draft = Field::new(grid.clone(), cells)?;

    // restore the energy by a uniform temperature rescale
    let energy = draft.total_energy(gas);
    let internal = draft.integrate(|c| gas.internal_energy_density(c.rho, c.entropy).unwrap());
    let eps = (target_energy - energy) / internal;
    if eps <= -1.0 {
        bail!("perturbation cannot match the target energy");
    }
    let bump = gas.cv() * eps.ln_1p();
    let cells = draft
        .cells()
        .iter()
        .map(|st| State::new(st.rho, st.m, st.entropy + st.rho * bump))
        .collect();
    Ok(Field::new(grid, cells)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiemannSection {
    /// Sampling instant for the profile CSV.
    #[serde(default = "default_riemann_time")]
    pub time: f64,
    #[serde(default = "default_riemann_samples")]
    pub samples: usize,
}

fn default_riemann_time() -> f64 {
    0.2
}

fn default_riemann_samples() -> usize {
    401
}

impl Default for RiemannSection {
    fn default() -> Self {
        Self {
            time: default_riemann_time(),
            samples: default_riemann_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencySection {
    /// Axis-0 resolutions, coarse to fine; each must divide the next.
    pub resolutions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<eulerlab::solver::FluxKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
}

impl MemberSpec {
    pub fn label(&self, index: usize) -> String {
        self.label.clone().unwrap_or_else(|| format!("member-{index}"))
    }

    pub fn scheme(&self, base: &SchemeConfig) -> SchemeConfig {
        let mut s = *base;
        if let Some(f) = self.flux {
            s.flux = f;
        }
        if let Some(v) = self.viscosity_eps {
            s.viscosity_eps = v;
        }
        if let Some(c) = self.cfl {
            s.cfl = c;
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case")]
pub enum SelectionSpec {
    TwoStep,
    Single,
    KrylovChain,
}

impl SelectionSpec {
    pub fn to_procedure(&self) -> eulerlab::selection::SelectionProcedure {
        match self {
            SelectionSpec::TwoStep => eulerlab::selection::SelectionProcedure::TwoStep,
            SelectionSpec::Single => eulerlab::selection::SelectionProcedure::Single,
            SelectionSpec::KrylovChain => {
                eulerlab::selection::SelectionProcedure::default_chain()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftSection {
    /// Checkpoint instant at which the chosen member is lifted.
    pub tau: f64,
    /// Decay rates for the separation report.
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
}

fn default_lambda_grid() -> Vec<f64> {
    (0..24).map(|i| 0.25 * (i + 1) as f64).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSection {
    pub members: Vec<MemberSpec>,
    pub selection: SelectionSpec,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
    /// Relative slack added to the energy budget of every member; positive
    /// values create trajectories with a genuine energy defect.
    #[serde(default)]
    pub energy_slack: f64,
    #[serde(default = "default_perturb_amplitude")]
    pub perturb_amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftSection>,
}

fn default_tie_tol() -> f64 {
    1e-9
}

/// Expands a named preset into a full configuration.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let gas = GasModel::air();
    let config = match name {
        "uniform" => ExperimentConfig {
            gas,
            grid: GridConfig::Torus {
                n: vec![64],
                extent: None,
            },
            initial: InitialData::Uniform {
                rho: 1.0,
                velocity: [0.0, 0.0],
                pressure: 1.0,
            },
            scheme: SchemeConfig::default(),
            t_end: 0.5,
            riemann: None,
            consistency: None,
            ensemble: None,
        },
        "smooth-advection" => ExperimentConfig {
            gas,
            grid: GridConfig::Torus {
                n: vec![128],
                extent: None,
            },
            initial: InitialData::SmoothAdvection { amplitude: 0.2 },
            scheme: SchemeConfig {
                checkpoint_dt: 0.125,
                ..SchemeConfig::default()
            },
            t_end: 0.5,
            riemann: None,
            consistency: Some(ConsistencySection {
                resolutions: vec![128, 256, 512],
            }),
            ensemble: None,
        },
        "sod" => ExperimentConfig {
            gas,
            grid: GridConfig::Strip {
                n: vec![256],
                half_width: 0.5,
            },
            initial: InitialData::Sod,
            scheme: SchemeConfig {
                checkpoint_dt: 0.05,
                ..SchemeConfig::default()
            },
            t_end: 0.2,
            riemann: Some(RiemannSection::default()),
            consistency: Some(ConsistencySection {
                resolutions: vec![128, 256, 512],
            }),
            ensemble: Some(EnsembleSection {
                members: vec![
                    MemberSpec {
                        label: Some("rusanov-a".into()),
                        seed: Some(1),
                        ..default_member()
                    },
                    MemberSpec {
                        label: Some("rusanov-b".into()),
                        seed: Some(2),
                        ..default_member()
                    },
                ],
                selection: SelectionSpec::TwoStep,
                tie_tol: default_tie_tol(),
                energy_slack: 0.0,
                perturb_amplitude: 0.01,
                lift: None,
            }),
        },
        "lift-demo" => ExperimentConfig {
            gas,
            grid: GridConfig::Strip {
                n: vec![128],
                half_width: 0.5,
            },
            initial: InitialData::Sod,
            scheme: SchemeConfig {
                checkpoint_dt: 0.025,
                ..SchemeConfig::default()
            },
            t_end: 0.2,
            riemann: None,
            consistency: None,
            ensemble: Some(EnsembleSection {
                members: vec![
                    MemberSpec {
                        label: Some("rusanov".into()),
                        ..default_member()
                    },
                    MemberSpec {
                        label: Some("hll".into()),
                        flux: Some(eulerlab::solver::FluxKind::Hll),
                        ..default_member()
                    },
                ],
                selection: SelectionSpec::Single,
                tie_tol: default_tie_tol(),
                energy_slack: 0.1,
                perturb_amplitude: 0.01,
                lift: Some(LiftSection {
                    tau: 0.1,
                    lambda_grid: default_lambda_grid(),
                }),
            }),
        },
        other => bail!("unknown preset {other:?}; known: uniform, smooth-advection, sod, lift-demo"),
    };
    Ok(config)
}

fn default_member() -> MemberSpec {
    MemberSpec {
        label: None,
        n: None,
        seed: None,
        flux: None,
        viscosity_eps: None,
        cfl: None,
    }
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_slice(&bytes).context("parsing experiment config")?;
    if !(config.t_end > 0.0) {
        bail!("t_end must be positive");
    }
    config.scheme.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(config)
}
