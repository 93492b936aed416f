//! Smooth test functions for the weak-form residuals.
//!
//! The residual definitions quantify over all smooth test functions; the
//! catalogue here is the finite separating family actually used by reports:
//! the constant plus the first three trigonometric modes per axis, optionally
//! multiplied by `exp(-t)` or `t exp(-t)` in time. Vector test functions on
//! wall-bounded strips have exactly zero wall-normal trace by construction.

use serde::{Deserialize, Serialize};

use super::{Grid, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    Constant,
    /// `exp(-t)`
    ExpDecay,
    /// `t exp(-t)`
    TExpDecay,
}

impl TimeProfile {
    /// Value and time derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match self {
            TimeProfile::Constant => (1.0, 0.0),
            TimeProfile::ExpDecay => {
                let e = (-t).exp();
                (e, -e)
            }
            TimeProfile::TExpDecay => {
                let e = (-t).exp();
                (t * e, (1.0 - t) * e)
            }
        }
    }
}

/// Spatial profile of a scalar test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMode {
    Constant,
    /// Cosine mode along one axis: `cos(2 pi k xi)` on a periodic axis,
    /// `cos(pi k xi)` on the wall-bounded axis, `xi` the normalized coordinate.
    AxisCos { axis: usize, k: u32 },
    /// Sine mode along one axis; vanishes at strip walls.
    AxisSin { axis: usize, k: u32 },
    /// Strictly positive mode `1 + cos(..)/2`, for entropy residuals.
    RaisedCos { axis: usize, k: u32 },
    /// Compact bump `exp(1 - 1/(1 - r^2))` of radius `width` around `center`.
    Bump { center: [f64; 2], width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEval {
    pub value: f64,
    pub d_t: f64,
    pub grad: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarTestFunction {
    mode: ScalarMode,
    time: TimeProfile,
    origin: [f64; 2],
    extent: [f64; 2],
    wall_axis0: bool,
}

impl ScalarTestFunction {
    pub fn new(grid: &Grid, mode: ScalarMode) -> Self {
        Self {
            mode,
            time: TimeProfile::Constant,
            origin: grid.origin(),
            extent: grid.extent(),
            wall_axis0: grid.topology() == Topology::Strip,
        }
    }

    pub fn with_time(mut self, time: TimeProfile) -> Self {
        self.time = time;
        self
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    /// True when the spatial profile is nonnegative everywhere.
    pub fn is_nonnegative(&self) -> bool {
        matches!(
            self.mode,
            ScalarMode::Constant | ScalarMode::RaisedCos { .. } | ScalarMode::Bump { .. }
        )
    }

    /// Supremum of `|phi|` over the domain (time factor at its maximum 1).
    pub fn sup_norm(&self) -> f64 {
        match self.mode {
            ScalarMode::Constant | ScalarMode::AxisCos { .. } | ScalarMode::AxisSin { .. } => 1.0,
            ScalarMode::RaisedCos { .. } => 1.5,
            ScalarMode::Bump { .. } => 1.0,
        }
    }

    /// Angular frequency of the mode along `axis`.
    fn omega(&self, axis: usize, k: u32) -> f64 {
        let periods = if self.wall_axis0 && axis == 0 {
            std::f64::consts::PI
        } else {
            2.0 * std::f64::consts::PI
        };
        periods * k as f64 / self.extent[axis]
    }

    fn spatial(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        match self.mode {
            ScalarMode::Constant => (1.0, [0.0, 0.0]),
            ScalarMode::AxisCos { axis, k } => {
                let w = self.omega(axis, k);
                let arg = w * (x[axis] - self.origin[axis]);
                let mut grad = [0.0, 0.0];
                grad[axis] = -w * arg.sin();
                (arg.cos(), grad)
            }
            ScalarMode::AxisSin { axis, k } => {
                let w = self.omega(axis, k);
                let offset = x[axis] - self.origin[axis];
                let arg = w * offset;
                let mut grad = [0.0, 0.0];
                grad[axis] = w * arg.cos();
                // exact zero on the walls, not just sin(pi*k) round-off
                let at_wall = self.wall_axis0
                    && axis == 0
                    && (offset == 0.0 || offset == self.extent[0]);
                (if at_wall { 0.0 } else { arg.sin() }, grad)
            }
            ScalarMode::RaisedCos { axis, k } => {
                let w = self.omega(axis, k);
                let arg = w * (x[axis] - self.origin[axis]);
                let mut grad = [0.0, 0.0];
                grad[axis] = -0.5 * w * arg.sin();
                (1.0 + 0.5 * arg.cos(), grad)
            }
            ScalarMode::Bump { center, width } => {
                let dx = [x[0] - center[0], x[1] - center[1]];
                let r2 = (dx[0] * dx[0] + dx[1] * dx[1]) / (width * width);
                if r2 >= 1.0 {
                    return (0.0, [0.0, 0.0]);
                }
                let q = 1.0 / (1.0 - r2);
                let v = (1.0 - q).exp();
                let common = -2.0 * v * q * q / (width * width);
                ([v].into_iter().next().unwrap(), [common * dx[0], common * dx[1]])
            }
        }
    }

    /// Value, time derivative, and spatial gradient at `(t, x)`.
    pub fn eval(&self, t: f64, x: [f64; 2]) -> ScalarEval {
        let (tv, td) = self.time.eval(t);
        let (sv, sg) = self.spatial(x);
        ScalarEval {
            value: tv * sv,
            d_t: td * sv,
            grad: [tv * sg[0], tv * sg[1]],
        }
    }

    /// Short label for report rows.
    pub fn label(&self) -> String {
        let spatial = match self.mode {
            ScalarMode::Constant => "const".to_string(),
            ScalarMode::AxisCos { axis, k } => format!("cos(a{axis},k{k})"),
            ScalarMode::AxisSin { axis, k } => format!("sin(a{axis},k{k})"),
            ScalarMode::RaisedCos { axis, k } => format!("raised(a{axis},k{k})"),
            ScalarMode::Bump { .. } => "bump".to_string(),
        };
        match self.time {
            TimeProfile::Constant => spatial,
            TimeProfile::ExpDecay => format!("{spatial}*exp(-t)"),
            TimeProfile::TExpDecay => format!("{spatial}*t*exp(-t)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorEval {
    pub value: [f64; 2],
    pub d_t: [f64; 2],
    /// `grad[a][b] = d phi_a / d x_b`
    pub grad: [[f64; 2]; 2],
}

/// Vector test function: a scalar profile times a coordinate direction.
///
/// On strips the axis-0 component is built from sine modes so the wall-normal
/// trace vanishes exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorTestFunction {
    profile: ScalarTestFunction,
    direction: usize,
}

impl VectorTestFunction {
    /// Builds the vector test function; panics if the combination would break
    /// the wall condition (catalogue construction never does).
    pub fn new(grid: &Grid, mode: ScalarMode, direction: usize) -> Self {
        let profile = ScalarTestFunction::new(grid, mode);
        if profile.wall_axis0 && direction == 0 {
            assert!(
                matches!(mode, ScalarMode::AxisSin { axis: 0, .. }),
                "wall-normal components on strips must vanish at the walls"
            );
        }
        Self { profile, direction }
    }

    pub fn with_time(mut self, time: TimeProfile) -> Self {
        self.profile = self.profile.with_time(time);
        self
    }

    pub fn direction(&self) -> usize {
        self.direction
    }

    pub fn sup_norm(&self) -> f64 {
        self.profile.sup_norm()
    }

    pub fn eval(&self, t: f64, x: [f64; 2]) -> VectorEval {
        let s = self.profile.eval(t, x);
        let mut value = [0.0; 2];
        let mut d_t = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        value[self.direction] = s.value;
        d_t[self.direction] = s.d_t;
        grad[self.direction] = s.grad;
        VectorEval { value, d_t, grad }
    }

    pub fn label(&self) -> String {
        format!("e{}*{}", self.direction, self.profile.label())
    }
}

/// `{constant} + {first 3 cosine modes per axis}`.
pub fn scalar_catalogue(grid: &Grid) -> Vec<ScalarTestFunction> {
    let mut out = vec![ScalarTestFunction::new(grid, ScalarMode::Constant)];
    for axis in 0..grid.dim() {
        for k in 1..=3 {
            out.push(ScalarTestFunction::new(grid, ScalarMode::AxisCos { axis, k }));
        }
    }
    out
}

/// Nonnegative family for entropy residuals: constant plus raised cosines.
pub fn nonnegative_scalar_catalogue(grid: &Grid) -> Vec<ScalarTestFunction> {
    let mut out = vec![ScalarTestFunction::new(grid, ScalarMode::Constant)];
    for axis in 0..grid.dim() {
        for k in 1..=3 {
            out.push(ScalarTestFunction::new(grid, ScalarMode::RaisedCos { axis, k }));
        }
    }
    out
}

/// Vector family respecting the wall condition on strips.
pub fn vector_catalogue(grid: &Grid) -> Vec<VectorTestFunction> {
    let wall = grid.topology() == Topology::Strip;
    let mut out = Vec::new();
    for dir in 0..grid.dim() {
        if wall && dir == 0 {
            for k in 1..=3 {
                out.push(VectorTestFunction::new(
                    grid,
                    ScalarMode::AxisSin { axis: 0, k },
                    dir,
                ));
            }
        } else {
            out.push(VectorTestFunction::new(grid, ScalarMode::Constant, dir));
            for axis in 0..grid.dim() {
                for k in 1..=3 {
                    out.push(VectorTestFunction::new(
                        grid,
                        ScalarMode::AxisCos { axis, k },
                        dir,
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(tf: &ScalarTestFunction, t: f64, x: [f64; 2]) -> [f64; 2] {
        let h = 1e-7;
        let mut g = [0.0; 2];
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            g[a] = (tf.eval(t, xp).value - tf.eval(t, xm).value) / (2.0 * h);
        }
        g
    }

    #[test]
    fn constant_mode_is_one() {
        let g = Grid::torus_1d(8).unwrap();
        let tf = ScalarTestFunction::new(&g, ScalarMode::Constant);
        let e = tf.eval(0.3, [0.4, 0.0]);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.d_t, 0.0);
        assert_eq!(e.grad, [0.0, 0.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = Grid::torus_2d([8, 8], [2.0, 1.0]).unwrap();
        let modes = [
            ScalarMode::AxisCos { axis: 0, k: 2 },
            ScalarMode::AxisSin { axis: 1, k: 1 },
            ScalarMode::RaisedCos { axis: 0, k: 3 },
            ScalarMode::Bump {
                center: [1.0, 0.5],
                width: 0.4,
            },
        ];
        for mode in modes {
            let tf = ScalarTestFunction::new(&g, mode).with_time(TimeProfile::ExpDecay);
            for x in [[0.3, 0.2], [1.1, 0.7], [0.9, 0.45]] {
                let e = tf.eval(0.5, x);
                let fd = fd_gradient(&tf, 0.5, x);
                for a in 0..2 {
                    assert!(
                        (e.grad[a] - fd[a]).abs() < 1e-8 * (1.0 + e.grad[a].abs()),
                        "{mode:?} axis {a}: {} vs {}",
                        e.grad[a],
                        fd[a]
                    );
                }
                // time derivative against finite differences too
                let h = 1e-7;
                let dt = (tf.eval(0.5 + h, x).value - tf.eval(0.5 - h, x).value) / (2.0 * h);
                assert!((e.d_t - dt).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn strip_vector_normal_trace_vanishes() {
        let g = Grid::strip_1d(8, 1.0).unwrap();
        for tf in vector_catalogue(&g) {
            if tf.direction() == 0 {
                for wall in [-1.0, 1.0] {
                    let v = tf.eval(0.0, [wall, 0.0]);
                    assert_eq!(v.value[0], 0.0, "wall-normal trace must vanish exactly");
                }
            }
        }
    }

    #[test]
    fn nonnegative_catalogue_is_nonnegative() {
        let g = Grid::torus_1d(16).unwrap();
        for tf in nonnegative_scalar_catalogue(&g) {
            assert!(tf.is_nonnegative());
            for i in 0..64 {
                let x = [i as f64 / 64.0, 0.0];
                assert!(tf.eval(0.0, x).value >= 0.0);
            }
        }
    }
}
