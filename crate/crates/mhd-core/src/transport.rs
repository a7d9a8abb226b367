//! Linear continuity solve by the method of characteristics.
//!
//! Node characteristics are backtraced with RK4; the density is recovered
//! from the explicit exponential formula. The divergence line integral is
//! accumulated by Simpson quadrature on the RK4 stage positions.

use rayon::prelude::*;

use crate::error::{MhdError, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::interp::{sample_scalar, Stencil};
use crate::norms::linf_scalar;
use crate::spectral;
use crate::state::{sample_levels_scalar, Forcing, VelocityTrajectory};

/// Departure points and accumulated divergence integral for the
/// characteristics ending at the grid nodes.
#[derive(Debug, Clone)]
pub struct CharacteristicField {
    grid: Grid,
    departure_points: Vec<[f64; 3]>,
    div_integral: ScalarField,
}

impl CharacteristicField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn departure_points(&self) -> &[[f64; 3]] {
        &self.departure_points
    }

    pub fn div_integral(&self) -> &ScalarField {
        &self.div_integral
    }
}

/// Everything one node-trace accumulates.
#[derive(Clone, Copy)]
struct TraceState {
    x: [f64; 3],
    /// Divergence integral from the current time back up to the start.
    div_int: f64,
    /// Weighted mass-source integral (zero when unforced).
    src_int: f64,
}

struct LevelData<'a> {
    u: &'a VelocityTrajectory,
    div: &'a [ScalarField],
}

impl LevelData<'_> {
    /// Velocity and divergence at a space-time point, one shared stencil.
    #[inline]
    fn eval(&self, t: f64, x: [f64; 3]) -> ([f64; 3], f64) {
        let stencil = Stencil::new(self.u.grid(), x);
        let (k0, k1, w) = self.u.bracket(t);
        let v = {
            let a = stencil.eval_vector(self.u.level(k0));
            if k0 == k1 || w == 0.0 {
                a
            } else {
                let b = stencil.eval_vector(self.u.level(k1));
                [
                    (1.0 - w) * a[0] + w * b[0],
                    (1.0 - w) * a[1] + w * b[1],
                    (1.0 - w) * a[2] + w * b[2],
                ]
            }
        };
        let d = sample_levels_scalar(self.div, k0, k1, w, &stencil);
        (v, d)
    }
}

/// One backward RK4 step of the coupled (position, integrals) system.
/// `h` is negative when tracing backward in time. The divergence and
/// source integrals use Simpson's rule on the stage-midpoint position.
#[inline]
fn rk4_step(
    data: &LevelData,
    t: f64,
    h: f64,
    state: TraceState,
    source: Option<(&dyn Forcing, f64)>,
) -> TraceState {
    let (v1, d1) = data.eval(t, state.x);
    let x2 = offset(state.x, v1, 0.5 * h);
    let (v2, _) = data.eval(t + 0.5 * h, x2);
    let x3 = offset(state.x, v2, 0.5 * h);
    let (v3, dmid) = data.eval(t + 0.5 * h, x3);
    let x4 = offset(state.x, v3, h);
    let (v4, _) = data.eval(t + h, x4);
    let mut x_new = state.x;
    for c in 0..3 {
        x_new[c] += h / 6.0 * (v1[c] + 2.0 * v2[c] + 2.0 * v3[c] + v4[c]);
    }
    let (_, d2) = data.eval(t + h, x_new);
    // j(tau) = integral of div from tau up to the trace start; stepping
    // backward (h < 0) therefore grows j by the Simpson panel value.
    let panel = -h / 6.0 * (d1 + 4.0 * dmid + d2);
    let j_new = state.div_int + panel;
    let mut src_new = state.src_int;
    if let Some((forcing, _t0)) = source {
        // weighted source integral: d/dtau of int_tau^t exp(-j) S
        let s1 = (-state.div_int).exp() * forcing.mass(t, state.x);
        let j_mid = state.div_int + 0.5 * panel;
        let smid = (-j_mid).exp() * forcing.mass(t + 0.5 * h, x3);
        let s2 = (-j_new).exp() * forcing.mass(t + h, x_new);
        src_new += -h / 6.0 * (s1 + 4.0 * smid + s2);
    }
    TraceState {
        x: x_new,
        div_int: j_new,
        src_int: src_new,
    }
}

#[inline]
fn offset(x: [f64; 3], v: [f64; 3], s: f64) -> [f64; 3] {
    [x[0] + s * v[0], x[1] + s * v[1], x[2] + s * v[2]]
}

fn trace_node(
    data: &LevelData,
    t_from: f64,
    t_to: f64,
    steps: usize,
    x0: [f64; 3],
    source: Option<&dyn Forcing>,
) -> TraceState {
    let mut state = TraceState {
        x: x0,
        div_int: 0.0,
        src_int: 0.0,
    };
    if steps == 0 || t_from == t_to {
        return state;
    }
    let h = (t_to - t_from) / steps as f64;
    let mut t = t_from;
    for _ in 0..steps {
        state = rk4_step(data, t, h, state, source.map(|s| (s, t_to)));
        t += h;
    }
    state
}

fn divergence_levels(u: &VelocityTrajectory) -> Vec<ScalarField> {
    u.levels().iter().map(spectral::divergence).collect()
}

/// Backtrace the node characteristics of `u` from `t_from` down to `t_to`
/// with `substeps` RK4 steps in total.
pub fn backtrace(
    u: &VelocityTrajectory,
    t_from: f64,
    t_to: f64,
    substeps: usize,
) -> Result<CharacteristicField> {
    if t_to > t_from {
        return Err(MhdError::InvalidParameter(format!(
            "backtrace requires t_to <= t_from, got {t_to} > {t_from}"
        )));
    }
    if substeps == 0 {
        return Err(MhdError::InvalidParameter(
            "substeps must be positive".into(),
        ));
    }
    let div = divergence_levels(u);
    let data = LevelData { u, div: &div };
    let grid = u.grid().clone();
    let results: Vec<TraceState> = (0..grid.len())
        .into_par_iter()
        .map(|idx| trace_node(&data, t_from, t_to, substeps, grid.node_position(idx), None))
        .collect();
    let departure_points: Vec<[f64; 3]> = results.iter().map(|s| s.x).collect();
    let div_values: Vec<f64> = results.iter().map(|s| s.div_int).collect();
    if div_values.iter().any(|v| !v.is_finite()) {
        return Err(MhdError::InvalidField(
            "non-finite divergence integral".into(),
        ));
    }
    Ok(CharacteristicField {
        grid: grid.clone(),
        departure_points,
        div_integral: ScalarField::from_values(&grid, div_values)?,
    })
}

/// Evaluate the explicit characteristic formula:
/// rho(t, x) = rho0(X(0)) * exp(-div_integral).
pub fn advect_density(rho0: &ScalarField, chars: &CharacteristicField) -> Result<ScalarField> {
    let min0 = rho0.min();
    if !(min0 > 0.0) {
        return Err(MhdError::NonpositiveDensity(min0));
    }
    let values: Vec<f64> = chars
        .departure_points
        .iter()
        .zip(chars.div_integral.values())
        .map(|(&p, &j)| sample_scalar(rho0, p) * (-j).exp())
        .collect();
    let out = ScalarField::from_values(&chars.grid, values)?;
    let min = out.min();
    if !(min > 0.0) {
        return Err(MhdError::NonpositiveDensity(min));
    }
    Ok(out)
}

/// Density at every trajectory time level, with per-level extrema.
#[derive(Debug, Clone)]
pub struct DensitySolution {
    t0: f64,
    dt: f64,
    levels: Vec<ScalarField>,
    min_max: Vec<(f64, f64)>,
}

impl DensitySolution {
    pub fn levels(&self) -> &[ScalarField] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &ScalarField {
        &self.levels[k]
    }

    pub fn min_max(&self) -> &[(f64, f64)] {
        &self.min_max
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Cell-volume sum of the density per level. The characteristic form
    /// does not conserve discrete mass exactly; the drift is reported,
    /// not corrected.
    pub fn mass_per_level(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|f| f.grid().cell_volume() * f.values().iter().sum::<f64>())
            .collect()
    }
}

/// Solve the linear continuity equation along `u` for every level of the
/// trajectory. `substeps_per_dt` RK4 steps are taken per trajectory step.
pub fn solve_density(
    rho0: &ScalarField,
    u: &VelocityTrajectory,
    substeps_per_dt: usize,
    forcing: Option<&dyn Forcing>,
) -> Result<DensitySolution> {
    let min0 = rho0.min();
    if !(min0 > 0.0) {
        return Err(MhdError::NonpositiveDensity(min0));
    }
    if substeps_per_dt == 0 {
        return Err(MhdError::InvalidParameter(
            "substeps must be positive".into(),
        ));
    }
    let grid = u.grid().clone();
    let t0 = u.t0();
    let mut levels = Vec::with_capacity(u.num_levels());
    levels.push(rho0.clone());
    if u.is_zero() && forcing.is_none() {
        // zero-velocity fixed point, bitwise
        for _ in 1..u.num_levels() {
            levels.push(rho0.clone());
        }
        let min_max = levels.iter().map(|f| (f.min(), f.max())).collect();
        return Ok(DensitySolution {
            t0,
            dt: u.dt(),
            levels,
            min_max,
        });
    }
    let div = divergence_levels(u);
    let data = LevelData { u, div: &div };
    for k in 1..u.num_levels() {
        let t_k = u.time_of(k);
        let steps = k * substeps_per_dt;
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let st = trace_node(&data, t_k, t0, steps, grid.node_position(idx), forcing);
                sample_scalar(rho0, st.x) * (-st.div_int).exp() + st.src_int
            })
            .collect();
        let field = ScalarField::from_values(&grid, values)?;
        let min = field.min();
        if !(min > 0.0) {
            return Err(MhdError::NonpositiveDensity(min));
        }
        levels.push(field);
    }
    let min_max = levels.iter().map(|f| (f.min(), f.max())).collect();
    Ok(DensitySolution {
        t0,
        dt: u.dt(),
        levels,
        min_max,
    })
}

/// Explicit density envelope: time quadrature of |div u|_inf gives
/// (min rho0 * exp(-I), max rho0 * exp(I)).
pub fn density_envelope(rho0: &ScalarField, u: &VelocityTrajectory, t: f64) -> Result<(f64, f64)> {
    let min0 = rho0.min();
    if !(min0 > 0.0) {
        return Err(MhdError::NonpositiveDensity(min0));
    }
    let integral = div_inf_integral(u, t);
    Ok((min0 * (-integral).exp(), rho0.max() * integral.exp()))
}

/// Trapezoid quadrature of |div u(tau)|_inf over [t0, t].
pub fn div_inf_integral(u: &VelocityTrajectory, t: f64) -> f64 {
    let norms: Vec<f64> = u
        .levels()
        .iter()
        .map(|lvl| linf_scalar(&spectral::divergence(lvl)))
        .collect();
    let dt = u.dt();
    let mut acc = 0.0;
    let mut tau = u.t0();
    let mut k = 0;
    while tau + dt <= t + 1e-12 * dt && k + 1 < norms.len() {
        acc += 0.5 * dt * (norms[k] + norms[k + 1]);
        tau += dt;
        k += 1;
    }
    // partial last interval, linear interpolation of the norm
    let rem = t - tau;
    if rem > 1e-12 * dt && k + 1 < norms.len() {
        let w = rem / dt;
        let end = (1.0 - w) * norms[k] + w * norms[k + 1];
        acc += 0.5 * rem * (norms[k] + end);
    }
    acc
}

/// One semi-Lagrangian step of the gradient-transport system obtained by
/// applying the gradient to the continuity equation (velocity frozen over
/// the step). Heun integration of the linear source along the trace.
pub fn density_gradient_step(
    grad_rho: &VectorField,
    rho: &ScalarField,
    u: &VectorField,
    dt: f64,
) -> VectorField {
    let grid = u.grid().clone();
    let jac = spectral::vector_gradient(u);
    let div = spectral::divergence(u);
    let grad_div = spectral::gradient(&div);
    let traj = VelocityTrajectory::constant_in_time(u, 0.0, dt.max(1e-30), 2);
    let div_levels = [div.clone(), div.clone()];
    let data = LevelData {
        u: &traj,
        div: &div_levels,
    };
    let mut out = VectorField::zeros(&grid);
    let results: Vec<[f64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x_arr = grid.node_position(idx);
            let st = trace_node(&data, dt, 0.0, 2, x_arr, None);
            let dep = st.x;
            let sten_dep = Stencil::new(&grid, dep);
            let g0 = sten_dep.eval_vector(grad_rho);
            let rho_dep = sten_dep.eval(rho.values());
            // coefficient A = -(J^T + div I), source b = -rho grad(div)
            let rate = |sten: &Stencil, g: [f64; 3], rho_val: f64| -> [f64; 3] {
                let mut j = [[0.0f64; 3]; 3];
                for i in 0..3 {
                    for jj in 0..3 {
                        j[i][jj] = sten.eval(jac.entry(i, jj).values());
                    }
                }
                let d = sten.eval(div.values());
                let gd = sten.eval_vector(&grad_div);
                let mut r = [0.0f64; 3];
                for i in 0..3 {
                    // (J^T g)_i = sum_j J_{j i} g_j
                    let jt = j[0][i] * g[0] + j[1][i] * g[1] + j[2][i] * g[2];
                    r[i] = -(jt + d * g[i]) - rho_val * gd[i];
                }
                r
            };
            let r0 = rate(&sten_dep, g0, rho_dep);
            let g_pred = [g0[0] + dt * r0[0], g0[1] + dt * r0[1], g0[2] + dt * r0[2]];
            let rho_arr = rho_dep * (-st.div_int).exp();
            let sten_arr = Stencil::new(&grid, x_arr);
            let r1 = rate(&sten_arr, g_pred, rho_arr);
            [
                g0[0] + 0.5 * dt * (r0[0] + r1[0]),
                g0[1] + 0.5 * dt * (r0[1] + r1[1]),
                g0[2] + 0.5 * dt * (r0[2] + r1[2]),
            ]
        })
        .collect();
    for (idx, v) in results.into_iter().enumerate() {
        out.set(idx, v);
    }
    out
}
