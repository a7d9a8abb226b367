//! Fixed-point driver for the frozen-velocity auxiliary system.
//!
//! One sweep solves transport, induction and momentum with the velocity
//! trajectory frozen; the driver iterates sweeps with optional damping
//! until successive velocity trajectories agree in L2 over space-time.

use crate::error::{MhdError, Result};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::induction::{self, MagneticSolution};
use crate::momentum::{self, MomentumOperator};
use crate::norms;
use crate::spectral;
use crate::state::{Forcing, PhysicsConfig, State, VelocityTrajectory};
use crate::transport::{self, DensitySolution};

/// Iteration parameters of the fixed-point driver.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    /// Time horizon T.
    pub horizon: f64,
    pub dt: f64,
    /// Relative space-time L2 distance between successive sweeps.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Damping theta in (0, 1]: next iterate = theta*new + (1-theta)*old.
    pub damping: f64,
    /// Ball radius factor sigma >= 1.
    pub ball_radius_factor: f64,
    /// Characteristic RK4 substeps per time step.
    pub substeps: usize,
    /// Initial magnetic divergence tolerance (L2).
    pub div_tol: f64,
    /// Lebesgue exponent for the higher norms.
    pub q: f64,
    /// Linear momentum solver settings.
    pub linear_tol: f64,
    pub linear_max_iters: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            horizon: 0.05,
            dt: 5e-3,
            tol: 1e-8,
            max_sweeps: 25,
            damping: 1.0,
            ball_radius_factor: 4.0,
            substeps: 4,
            div_tol: 1e-6,
            q: norms::Q_DEFAULT,
            linear_tol: 1e-10,
            linear_max_iters: 500,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.tol > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(MhdError::InvalidParameter(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.ball_radius_factor >= 1.0) {
            return Err(MhdError::InvalidParameter(format!(
                "ball radius factor must be >= 1, got {}",
                self.ball_radius_factor
            )));
        }
        if self.substeps == 0 || self.max_sweeps == 0 {
            return Err(MhdError::InvalidParameter(
                "substeps and max_sweeps must be positive".into(),
            ));
        }
        norms::validate_q(self.q)?;
        self.num_steps().map(|_| ())
    }

    /// Number of time steps K with K*dt = horizon.
    pub fn num_steps(&self) -> Result<usize> {
        let steps = (self.horizon / self.dt).round();
        if steps < 1.0 || (steps * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(MhdError::InvalidParameter(format!(
                "horizon {} is not an integer multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// States at uniformly spaced time levels.
#[derive(Debug, Clone)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    states: Vec<State>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, states: Vec<State>) -> Result<Self> {
        if states.is_empty() {
            return Err(MhdError::InvalidParameter("empty trajectory".into()));
        }
        if !(dt > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let grid = states[0].grid().clone();
        for s in &states {
            if s.grid() != &grid {
                return Err(MhdError::InvalidField(
                    "trajectory states on different grids".into(),
                ));
            }
        }
        Ok(Self { t0, dt, states })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &State {
        &self.states[k]
    }

    pub fn num_levels(&self) -> usize {
        self.states.len()
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Velocity levels as a standalone trajectory.
    pub fn velocity(&self) -> VelocityTrajectory {
        VelocityTrajectory::new(
            self.t0,
            self.dt,
            self.states.iter().map(|s| s.u.clone()).collect(),
        )
        .expect("trajectory velocities valid")
    }
}

/// Space-time L2 norm of a velocity trajectory (trapezoid in time).
pub fn trajectory_norm(u: &VelocityTrajectory) -> f64 {
    let dt = u.dt();
    let n = u.num_levels();
    let mut acc = 0.0;
    for k in 0..n {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let l2 = norms::lp_vector(u.level(k), 2.0);
        acc += w * dt * l2 * l2;
    }
    acc.sqrt()
}

/// Space-time L2 distance between two trajectories on the same levels.
pub fn trajectory_distance(a: &VelocityTrajectory, b: &VelocityTrajectory) -> f64 {
    assert_eq!(a.num_levels(), b.num_levels(), "level count mismatch");
    let dt = a.dt();
    let n = a.num_levels();
    let mut acc = 0.0;
    for k in 0..n {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let l2 = norms::lp_vector(&a.level(k).sub(b.level(k)), 2.0);
        acc += w * dt * l2 * l2;
    }
    acc.sqrt()
}

/// Distance normalized by the larger trajectory norm; 0 when both vanish.
pub fn relative_distance(a: &VelocityTrajectory, b: &VelocityTrajectory) -> f64 {
    let d = trajectory_distance(a, b);
    let scale = trajectory_norm(a).max(trajectory_norm(b));
    if scale == 0.0 {
        0.0
    } else {
        d / scale
    }
}

/// The four trajectory norms of the invariant set, and the radius they
/// are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDiagnostics {
    pub radius: f64,
    /// L2 in time of the W^{2,q} intersect H2 norm.
    pub l2t_w2q_h2: f64,
    /// sup in time of |sqrt(rho) u_t|_2.
    pub linf_weighted_ut: f64,
    /// sup in time of the H2 norm.
    pub linf_h2: f64,
    /// L2 in time of the H1 norm of u_t.
    pub l2t_ut_h1: f64,
    pub inside: bool,
}

/// Radius r of the invariant set, from the initial data:
/// r^2 = sigma (|Lap u0|_2^2 + |u0|_inf^2 |grad u0|_2^2
///        + |rho0|^2_{W1q^H1} + |H0|^2_{W1q^H1}) / min(rho0).
pub fn ball_radius(initial: &State, pcfg: &PicardConfig) -> Result<f64> {
    let alpha = initial.rho.min();
    let lap = norms::lp_vector(&spectral::laplacian(&initial.u), 2.0);
    let u_inf = norms::linf_vector(&initial.u);
    let grad_u = norms::lp_scalar(&spectral::vector_gradient(&initial.u).frobenius(), 2.0);
    let rho_norm = norms::norms_scalar(&initial.rho, pcfg.q)?.w1q_h1();
    let h_norm = norms::norms_vector(&initial.h, pcfg.q)?.w1q_h1();
    Ok((pcfg.ball_radius_factor
        * (lap * lap + u_inf * u_inf * grad_u * grad_u + rho_norm * rho_norm + h_norm * h_norm)
        / alpha)
        .sqrt())
}

/// Measure the four capped norms of a trajectory against the radius.
pub fn ball_check(
    traj: &Trajectory,
    initial: &State,
    pcfg: &PicardConfig,
) -> Result<BallDiagnostics> {
    let radius = ball_radius(initial, pcfg)?;
    let dt = traj.dt;
    let n = traj.num_levels();
    let mut l2t_high_sq = 0.0;
    let mut linf_h2 = 0.0f64;
    let mut linf_weighted_ut = 0.0f64;
    let mut l2t_ut_h1_sq = 0.0;
    for k in 0..n {
        let suite = norms::norms_vector(&traj.states[k].u, pcfg.q)?;
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let high = suite.w2q_h2();
        l2t_high_sq += w * dt * high * high;
        linf_h2 = linf_h2.max(suite.h2);
        if k > 0 {
            let ut = traj.states[k].u.sub(&traj.states[k - 1].u).scale(1.0 / dt);
            let weighted = {
                let sq = traj.states[k].rho.map(f64::sqrt);
                let mut acc = 0.0;
                let vol = traj.grid().cell_volume();
                for c in 0..3 {
                    for (w2, v) in sq.values().iter().zip(ut.component(c).values()) {
                        acc += (w2 * v) * (w2 * v);
                    }
                }
                (vol * acc).sqrt()
            };
            linf_weighted_ut = linf_weighted_ut.max(weighted);
            let ut_h1 = norms::norms_vector(&ut, pcfg.q)?.h1;
            l2t_ut_h1_sq += dt * ut_h1 * ut_h1;
        }
    }
    let l2t_w2q_h2 = l2t_high_sq.sqrt();
    let l2t_ut_h1 = l2t_ut_h1_sq.sqrt();
    let inside = l2t_w2q_h2 <= radius
        && linf_weighted_ut <= radius
        && linf_h2 <= radius
        && l2t_ut_h1 <= radius;
    Ok(BallDiagnostics {
        radius,
        l2t_w2q_h2,
        linf_weighted_ut,
        linf_h2,
        l2t_ut_h1,
        inside,
    })
}

/// One full sweep of the auxiliary system with `u_bar` frozen:
/// density stage, magnetic stage, then the implicit momentum march.
pub fn sweep(
    u_bar: &VelocityTrajectory,
    initial: &State,
    cfg: &PhysicsConfig,
    pcfg: &PicardConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<Trajectory> {
    cfg.validate()?;
    pcfg.validate()?;
    let density = transport::solve_density(&initial.rho, u_bar, pcfg.substeps, forcing)?;
    let magnetic = induction::evolve_induction(
        &initial.h,
        u_bar,
        pcfg.substeps,
        forcing,
        pcfg.div_tol,
        pcfg.q,
    )?;
    assemble_momentum(u_bar, initial, cfg, pcfg, &density, &magnetic, forcing)
}

fn assemble_momentum(
    u_bar: &VelocityTrajectory,
    initial: &State,
    cfg: &PhysicsConfig,
    pcfg: &PicardConfig,
    density: &DensitySolution,
    magnetic: &MagneticSolution,
    forcing: Option<&dyn Forcing>,
) -> Result<Trajectory> {
    let n = u_bar.num_levels();
    let mut states = Vec::with_capacity(n);
    states.push(State::new(
        density.level(0).clone(),
        initial.u.clone(),
        magnetic.level(0).clone(),
    )?);
    for k in 1..n {
        let t_k = u_bar.time_of(k);
        let rho_k = density.level(k);
        let h_k = magnetic.level(k);
        let op = MomentumOperator::new(rho_k, pcfg.dt, cfg)?;
        let rhs = momentum::build_rhs(
            rho_k,
            u_bar.level(k),
            h_k,
            &states[k - 1].u,
            cfg,
            pcfg.dt,
            forcing.map(|f| (f, t_k)),
        )?;
        let (u_k, _cert) =
            momentum::solve_momentum_step(&op, &rhs, pcfg.linear_tol, pcfg.linear_max_iters)?;
        states.push(State::new(rho_k.clone(), u_k, h_k.clone())?);
    }
    Trajectory::new(u_bar.t0(), u_bar.dt(), states)
}

/// Per-sweep diagnostics of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Relative space-time L2 distance between successive iterates.
    pub distances: Vec<f64>,
    pub ball: Vec<BallDiagnostics>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Iterate sweeps from the constant-in-time extension of the initial
/// velocity until the inter-sweep distance drops below tolerance.
pub fn solve(
    initial: &State,
    cfg: &PhysicsConfig,
    pcfg: &PicardConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<(Trajectory, PicardReport)> {
    pcfg.validate()?;
    let steps = pcfg.num_steps()?;
    let mut u_bar = VelocityTrajectory::constant_in_time(&initial.u, 0.0, pcfg.dt, steps + 1);
    let mut distances = Vec::new();
    let mut ball = Vec::new();
    let mut theta = pcfg.damping;
    let mut rises = 0usize;
    let mut last: Option<Trajectory> = None;
    let mut converged = false;
    for _ in 0..pcfg.max_sweeps {
        let traj = sweep(&u_bar, initial, cfg, pcfg, forcing)?;
        let new_u = traj.velocity();
        let dist = relative_distance(&new_u, &u_bar);
        if let Some(prev) = distances.last() {
            if dist > *prev {
                rises += 1;
                if rises >= 2 {
                    theta = 0.5;
                }
            } else {
                rises = 0;
            }
        }
        distances.push(dist);
        ball.push(ball_check(&traj, initial, pcfg)?);
        last = Some(traj);
        if dist <= pcfg.tol {
            converged = true;
            break;
        }
        u_bar = blend(theta, &new_u, &u_bar);
    }
    let traj = last.expect("max_sweeps >= 1");
    let sweeps = distances.len();
    Ok((
        traj,
        PicardReport {
            distances,
            ball,
            converged,
            sweeps,
        },
    ))
}

fn blend(theta: f64, new: &VelocityTrajectory, old: &VelocityTrajectory) -> VelocityTrajectory {
    if theta == 1.0 {
        return new.clone();
    }
    let levels: Vec<VectorField> = new
        .levels()
        .iter()
        .zip(old.levels())
        .map(|(a, b)| a.lincomb(theta, b, 1.0 - theta))
        .collect();
    VelocityTrajectory::new(new.t0(), new.dt(), levels).expect("blended trajectory valid")
}

/// Discrete residuals of the three equations at a converged trajectory,
/// measured by re-running each linear stage with the trajectory's own
/// velocity frozen and comparing outputs in relative space-time L2.
/// Order: density, momentum, magnetic.
pub fn nonlinear_residuals(
    traj: &Trajectory,
    initial: &State,
    cfg: &PhysicsConfig,
    pcfg: &PicardConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<[f64; 3]> {
    let u_self = traj.velocity();
    let resweep = sweep(&u_self, initial, cfg, pcfg, forcing)?;
    let dt = traj.dt;
    let n = traj.num_levels();
    let mut num = [0.0f64; 3];
    let mut den = [0.0f64; 3];
    for k in 0..n {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let a = traj.state(k);
        let b = resweep.state(k);
        let d_rho = norms::lp_scalar(&a.rho.sub(&b.rho), 2.0);
        let d_u = norms::lp_vector(&a.u.sub(&b.u), 2.0);
        let d_h = norms::lp_vector(&a.h.sub(&b.h), 2.0);
        let n_rho = norms::lp_scalar(&a.rho, 2.0);
        let n_u = norms::lp_vector(&a.u, 2.0);
        let n_h = norms::lp_vector(&a.h, 2.0);
        num[0] += w * dt * d_rho * d_rho;
        num[1] += w * dt * d_u * d_u;
        num[2] += w * dt * d_h * d_h;
        den[0] += w * dt * n_rho * n_rho;
        den[1] += w * dt * n_u * n_u;
        den[2] += w * dt * n_h * n_h;
    }
    let mut out = [0.0f64; 3];
    for i in 0..3 {
        out[i] = if den[i] > 0.0 {
            (num[i] / den[i]).sqrt()
        } else {
            num[i].sqrt()
        };
    }
    Ok(out)
}

/// Ratio |G(a) - G(b)| / |a - b| in space-time L2. Identical inputs
/// return ratio 0 with the flag set.
pub fn continuity_probe(
    u_a: &VelocityTrajectory,
    u_b: &VelocityTrajectory,
    initial: &State,
    cfg: &PhysicsConfig,
    pcfg: &PicardConfig,
) -> Result<(f64, bool)> {
    let input_dist = trajectory_distance(u_a, u_b);
    if input_dist == 0.0 {
        return Ok((0.0, true));
    }
    let ga = sweep(u_a, initial, cfg, pcfg, None)?;
    let gb = sweep(u_b, initial, cfg, pcfg, None)?;
    let out_dist = trajectory_distance(&ga.velocity(), &gb.velocity());
    Ok((out_dist / input_dist, false))
}
