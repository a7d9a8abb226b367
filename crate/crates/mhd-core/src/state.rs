//! Physical parameters, solver state, and time-indexed velocity data.

use crate::error::{MhdError, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::interp::Stencil;

/// Gas and viscosity parameters of the momentum equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    /// Pressure law coefficient A in P = A rho^gamma.
    pub pressure_coeff: f64,
    /// Adiabatic exponent, must exceed 1.
    pub gamma: f64,
    /// Shear viscosity, must be positive.
    pub mu: f64,
    /// Second viscosity; 2*mu + 3*lambda must be positive.
    pub lambda: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            pressure_coeff: 1.0,
            gamma: 2.0,
            mu: 1.0,
            lambda: 0.0,
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pressure_coeff > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "pressure coefficient A must be positive, got {}",
                self.pressure_coeff
            )));
        }
        if !(self.gamma > 1.0) {
            return Err(MhdError::InvalidParameter(format!(
                "adiabatic exponent gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.mu > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "viscosity mu must be positive, got {}",
                self.mu
            )));
        }
        if !(2.0 * self.mu + 3.0 * self.lambda > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "viscosity constraint 2*mu + 3*lambda > 0 violated: mu = {}, lambda = {}",
                self.mu, self.lambda
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.pressure_coeff * rho.powf(self.gamma)
    }

    /// P'(rho) = A * gamma * rho^(gamma - 1).
    #[inline]
    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.pressure_coeff * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Max of P' over the attained density range.
    pub fn pressure_derivative_sup(&self, rho_min: f64, rho_max: f64) -> f64 {
        // P' is monotone for gamma > 1
        self.pressure_derivative(rho_max)
            .max(self.pressure_derivative(rho_min))
    }

    pub fn pressure_field(&self, rho: &ScalarField) -> ScalarField {
        rho.map(|r| self.pressure(r))
    }
}

/// Density, velocity, and magnetic field at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: ScalarField,
    pub u: VectorField,
    pub h: VectorField,
}

impl State {
    pub fn new(rho: ScalarField, u: VectorField, h: VectorField) -> Result<Self> {
        if rho.grid() != u.grid() || rho.grid() != h.grid() {
            return Err(MhdError::InvalidField(
                "state fields on different grids".into(),
            ));
        }
        let min_rho = rho.min();
        if !(min_rho > 0.0) {
            return Err(MhdError::NonpositiveDensity(min_rho));
        }
        Ok(Self { rho, u, h })
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn rest(grid: &Grid, rho: f64) -> Self {
        Self {
            rho: ScalarField::constant(grid, rho),
            u: VectorField::zeros(grid),
            h: VectorField::zeros(grid),
        }
    }
}

/// Externally injected source terms (manufactured-solution forcing).
/// Production runs pass no forcing; all stages accept it additively.
pub trait Forcing: Sync {
    fn mass(&self, t: f64, x: [f64; 3]) -> f64;
    fn momentum(&self, t: f64, x: [f64; 3]) -> [f64; 3];
    fn induction(&self, t: f64, x: [f64; 3]) -> [f64; 3];
}

/// Velocity snapshots at uniformly spaced time levels, interpolated
/// linearly in time and tricubically in space.
#[derive(Debug, Clone)]
pub struct VelocityTrajectory {
    t0: f64,
    dt: f64,
    levels: Vec<VectorField>,
}

impl VelocityTrajectory {
    pub fn new(t0: f64, dt: f64, levels: Vec<VectorField>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if levels.is_empty() {
            return Err(MhdError::InvalidParameter(
                "empty velocity trajectory".into(),
            ));
        }
        let grid = levels[0].grid().clone();
        for lvl in &levels {
            if lvl.grid() != &grid {
                return Err(MhdError::InvalidField(
                    "trajectory levels on different grids".into(),
                ));
            }
            if !lvl.is_finite() {
                return Err(MhdError::InvalidField("non-finite velocity sample".into()));
            }
        }
        Ok(Self { t0, dt, levels })
    }

    /// A trajectory holding the same field at every level.
    pub fn constant_in_time(u: &VectorField, t0: f64, dt: f64, num_levels: usize) -> Self {
        Self {
            t0,
            dt,
            levels: vec![u.clone(); num_levels.max(1)],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.levels[0].grid()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &VectorField {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[VectorField] {
        &self.levels
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// True when every sample is exactly zero (enables bitwise-identity
    /// fast paths in the transport stages).
    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|lvl| {
            lvl.components()
                .iter()
                .all(|c| c.values().iter().all(|&v| v == 0.0))
        })
    }

    pub fn end_time(&self) -> f64 {
        self.time_of(self.levels.len() - 1)
    }

    /// Bracketing levels and linear weight for time `t` (clamped to range).
    #[inline]
    pub fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let last = self.levels.len() - 1;
        let s = ((t - self.t0) / self.dt).clamp(0.0, last as f64);
        let k0 = (s.floor() as usize).min(last.saturating_sub(1));
        if self.levels.len() == 1 {
            return (0, 0, 0.0);
        }
        (k0, k0 + 1, s - k0 as f64)
    }

    /// Velocity at an arbitrary space-time point.
    pub fn sample(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let stencil = Stencil::new(self.grid(), x);
        self.sample_with_stencil(t, &stencil)
    }

    /// Same as `sample` but reusing a prebuilt spatial stencil.
    #[inline]
    pub fn sample_with_stencil(&self, t: f64, stencil: &Stencil) -> [f64; 3] {
        let (k0, k1, w) = self.bracket(t);
        let a = stencil.eval_vector(&self.levels[k0]);
        if k0 == k1 || w == 0.0 {
            return a;
        }
        let b = stencil.eval_vector(&self.levels[k1]);
        [
            (1.0 - w) * a[0] + w * b[0],
            (1.0 - w) * a[1] + w * b[1],
            (1.0 - w) * a[2] + w * b[2],
        ]
    }
}

/// Linear-in-time interpolation of per-level scalar data at a stencil.
#[inline]
pub(crate) fn sample_levels_scalar(
    levels: &[ScalarField],
    k0: usize,
    k1: usize,
    w: f64,
    stencil: &Stencil,
) -> f64 {
    let a = stencil.eval(levels[k0].values());
    if k0 == k1 || w == 0.0 {
        return a;
    }
    let b = stencil.eval(levels[k1].values());
    (1.0 - w) * a + w * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn physics_config_validation() {
        assert!(PhysicsConfig::default().validate().is_ok());
        assert!(PhysicsConfig {
            gamma: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PhysicsConfig {
            mu: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PhysicsConfig {
            lambda: -0.7,
            ..Default::default()
        }
        .validate()
        .is_err());
        // 2mu + 3lambda > 0 with negative lambda still admissible
        assert!(PhysicsConfig {
            lambda: -0.5,
            ..Default::default()
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn state_rejects_nonpositive_density() {
        let g = Grid::cube(4);
        let rho = ScalarField::constant(&g, 0.0);
        assert!(State::new(rho, VectorField::zeros(&g), VectorField::zeros(&g)).is_err());
    }

    #[test]
    fn trajectory_time_interpolation_is_linear() {
        let g = Grid::cube(8);
        let a = VectorField::constant(&g, [1.0, 0.0, 0.0]);
        let b = VectorField::constant(&g, [3.0, 0.0, 0.0]);
        let traj = VelocityTrajectory::new(0.0, 0.5, vec![a, b]).unwrap();
        let v = traj.sample(0.25, [0.1, 0.2, 0.3]);
        assert_relative_eq!(v[0], 2.0, max_relative = 1e-12);
        // clamped outside the range
        assert_relative_eq!(traj.sample(-1.0, [0.0; 3])[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(traj.sample(9.0, [0.0; 3])[0], 3.0, max_relative = 1e-12);
    }
}
