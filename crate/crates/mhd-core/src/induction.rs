//! Linear magnetic transport with frozen velocity, plus the Lorentz force.
//!
//! Along each characteristic the field obeys dH/dtau = S H with the
//! stretching matrix S = grad(u) - div(u) I. The scheme backtraces the
//! characteristic and integrates the fundamental matrix P of that ODE
//! backward (dP/dtau = -P S, P(t) = I), so H(t, x) = P(0) H0(X(0)).

use rayon::prelude::*;

use crate::error::{MhdError, Result};
use crate::field::{mat_vec, MatrixField, ScalarField, VectorField};
use crate::interp::Stencil;
use crate::norms::{self, NormSuite};
use crate::spectral;
use crate::state::{Forcing, VelocityTrajectory};

/// Stretching matrix grad(u) - div(u) I of a velocity level.
/// Its trace is -2 div(u) pointwise.
pub fn stretching_matrix(u: &VectorField) -> MatrixField {
    let mut m = spectral::vector_gradient(u);
    let div = spectral::divergence(u);
    for i in 0..3 {
        *m.entry_mut(i, i) = m.entry(i, i).sub(&div);
    }
    m
}

/// Magnetic field at every trajectory level with divergence and norm
/// diagnostics. The divergence constraint is monitored, never enforced.
#[derive(Debug, Clone)]
pub struct MagneticSolution {
    t0: f64,
    dt: f64,
    levels: Vec<VectorField>,
    div_l2: Vec<f64>,
    norms: Vec<NormSuite>,
}

impl MagneticSolution {
    pub fn levels(&self) -> &[VectorField] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &VectorField {
        &self.levels[k]
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// |div H(t_k)|_2 per level.
    pub fn divergence_l2(&self) -> &[f64] {
        &self.div_l2
    }

    pub fn norms(&self) -> &[NormSuite] {
        &self.norms
    }
}

/// |div H(t_k)|_2 per level of a solution.
pub fn divergence_monitor(sol: &MagneticSolution) -> Vec<f64> {
    sol.div_l2.to_vec()
}

#[derive(Clone, Copy)]
struct PropagatorState {
    x: [f64; 3],
    /// Fundamental matrix of dH/dtau = S H, propagated backward.
    p: [[f64; 3]; 3],
    /// Accumulated forcing contribution.
    q: [f64; 3],
}

struct StretchData<'a> {
    u: &'a VelocityTrajectory,
    stretch: &'a [MatrixField],
}

impl StretchData<'_> {
    #[inline]
    fn eval(&self, t: f64, x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
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
        let mut s = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let a = stencil.eval(self.stretch[k0].entry(i, j).values());
                s[i][j] = if k0 == k1 || w == 0.0 {
                    a
                } else {
                    let b = stencil.eval(self.stretch[k1].entry(i, j).values());
                    (1.0 - w) * a + w * b
                };
            }
        }
        (v, s)
    }
}

#[derive(Clone, Copy)]
struct Derivative {
    dx: [f64; 3],
    dp: [[f64; 3]; 3],
    dq: [f64; 3],
}

#[inline]
fn rate(
    data: &StretchData,
    t: f64,
    st: &PropagatorState,
    forcing: Option<&dyn Forcing>,
) -> Derivative {
    let (v, s) = data.eval(t, st.x);
    // dP/dtau = -P S
    let mut dp = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            dp[i][j] = -(st.p[i][0] * s[0][j] + st.p[i][1] * s[1][j] + st.p[i][2] * s[2][j]);
        }
    }
    // dQ/dtau = -P f
    let dq = match forcing {
        Some(f) => {
            let src = f.induction(t, st.x);
            let pv = mat_vec(&st.p, src);
            [-pv[0], -pv[1], -pv[2]]
        }
        None => [0.0; 3],
    };
    Derivative { dx: v, dp, dq }
}

#[inline]
fn advance(st: &PropagatorState, d: &Derivative, h: f64) -> PropagatorState {
    let mut out = *st;
    for c in 0..3 {
        out.x[c] += h * d.dx[c];
        out.q[c] += h * d.dq[c];
    }
    for i in 0..3 {
        for j in 0..3 {
            out.p[i][j] += h * d.dp[i][j];
        }
    }
    out
}

fn rk4_propagate(
    data: &StretchData,
    t_from: f64,
    t_to: f64,
    steps: usize,
    x0: [f64; 3],
    forcing: Option<&dyn Forcing>,
) -> PropagatorState {
    let mut st = PropagatorState {
        x: x0,
        p: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        q: [0.0; 3],
    };
    if steps == 0 || t_from == t_to {
        return st;
    }
    let h = (t_to - t_from) / steps as f64;
    let mut t = t_from;
    for _ in 0..steps {
        let k1 = rate(data, t, &st, forcing);
        let s2 = advance(&st, &k1, 0.5 * h);
        let k2 = rate(data, t + 0.5 * h, &s2, forcing);
        let s3 = advance(&st, &k2, 0.5 * h);
        let k3 = rate(data, t + 0.5 * h, &s3, forcing);
        let s4 = advance(&st, &k3, h);
        let k4 = rate(data, t + h, &s4, forcing);
        let sixth = h / 6.0;
        for c in 0..3 {
            st.x[c] += sixth * (k1.dx[c] + 2.0 * k2.dx[c] + 2.0 * k3.dx[c] + k4.dx[c]);
            st.q[c] += sixth * (k1.dq[c] + 2.0 * k2.dq[c] + 2.0 * k3.dq[c] + k4.dq[c]);
        }
        for i in 0..3 {
            for j in 0..3 {
                st.p[i][j] +=
                    sixth * (k1.dp[i][j] + 2.0 * k2.dp[i][j] + 2.0 * k3.dp[i][j] + k4.dp[i][j]);
            }
        }
        t += h;
    }
    st
}

/// Evolve the magnetic field along the frozen velocity trajectory.
/// `substeps_per_dt` RK4 steps per trajectory step; the initial field
/// must satisfy |div H0|_2 <= div_tol.
pub fn evolve_induction(
    h0: &VectorField,
    u: &VelocityTrajectory,
    substeps_per_dt: usize,
    forcing: Option<&dyn Forcing>,
    div_tol: f64,
    q: f64,
) -> Result<MagneticSolution> {
    if !h0.is_finite() {
        return Err(MhdError::InvalidField("non-finite magnetic field".into()));
    }
    if substeps_per_dt == 0 {
        return Err(MhdError::InvalidParameter(
            "substeps must be positive".into(),
        ));
    }
    let div0 = norms::lp_scalar(&spectral::divergence(h0), 2.0);
    if div0 > div_tol {
        return Err(MhdError::DivergenceTooLarge {
            norm: div0,
            tol: div_tol,
        });
    }
    let grid = u.grid().clone();
    let t0 = u.t0();
    let mut levels: Vec<VectorField> = Vec::with_capacity(u.num_levels());
    levels.push(h0.clone());
    if u.is_zero() && forcing.is_none() {
        // zero-velocity fixed point, bitwise
        for _ in 1..u.num_levels() {
            levels.push(h0.clone());
        }
    } else {
        let stretch: Vec<MatrixField> = u.levels().iter().map(stretching_matrix).collect();
        let data = StretchData {
            u,
            stretch: &stretch,
        };
        for k in 1..u.num_levels() {
            let t_k = u.time_of(k);
            let steps = k * substeps_per_dt;
            let results: Vec<[f64; 3]> = (0..grid.len())
                .into_par_iter()
                .map(|idx| {
                    let st = rk4_propagate(&data, t_k, t0, steps, grid.node_position(idx), forcing);
                    let sten = Stencil::new(&grid, st.x);
                    let h_dep = sten.eval_vector(h0);
                    let ph = mat_vec(&st.p, h_dep);
                    [ph[0] + st.q[0], ph[1] + st.q[1], ph[2] + st.q[2]]
                })
                .collect();
            let mut field = VectorField::zeros(&grid);
            for (idx, v) in results.into_iter().enumerate() {
                field.set(idx, v);
            }
            if !field.is_finite() {
                return Err(MhdError::InvalidField("non-finite magnetic level".into()));
            }
            levels.push(field);
        }
    }
    let div_l2: Vec<f64> = levels
        .iter()
        .map(|lvl| norms::lp_scalar(&spectral::divergence(lvl), 2.0))
        .collect();
    let norm_suites: Vec<NormSuite> = levels
        .iter()
        .map(|lvl| norms::norms_vector(lvl, q))
        .collect::<Result<_>>()?;
    Ok(MagneticSolution {
        t0,
        dt: u.dt(),
        levels,
        div_l2,
        norms: norm_suites,
    })
}

/// Local-patch harness: integrate dH/dtau = S H for a spatially uniform
/// field under a constant velocity gradient, bypassing interpolation.
/// `grad` is the velocity Jacobian; S = grad - trace(grad) I.
pub fn frozen_gradient_evolve(grad: [[f64; 3]; 3], h0: [f64; 3], t: f64, steps: usize) -> [f64; 3] {
    let div = grad[0][0] + grad[1][1] + grad[2][2];
    let mut s = grad;
    for i in 0..3 {
        s[i][i] -= div;
    }
    let mut h = h0;
    let dt = t / steps.max(1) as f64;
    for _ in 0..steps.max(1) {
        let k1 = mat_vec(&s, h);
        let k2 = mat_vec(&s, add_scaled(h, k1, 0.5 * dt));
        let k3 = mat_vec(&s, add_scaled(h, k2, 0.5 * dt));
        let k4 = mat_vec(&s, add_scaled(h, k3, dt));
        for c in 0..3 {
            h[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    h
}

#[inline]
fn add_scaled(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Magnetic body force in the curl form (curl H) x H.
pub fn lorentz_force(h: &VectorField) -> VectorField {
    let grid = h.grid().clone();
    let c = spectral::curl(h);
    let mut out = VectorField::zeros(&grid);
    for idx in 0..grid.len() {
        let a = c.at(idx);
        let b = h.at(idx);
        out.set(
            idx,
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ],
        );
    }
    out
}

/// The same force in the gradient form H . grad H - 1/2 grad |H|^2,
/// used as the cross-check oracle.
pub fn lorentz_force_gradient_form(h: &VectorField) -> VectorField {
    let grid = h.grid().clone();
    let jac = spectral::vector_gradient(h);
    let half_sq = {
        let mut sq = ScalarField::zeros(&grid);
        for c in 0..3 {
            sq = sq.add(&h.component(c).mul(h.component(c)));
        }
        sq.scale(0.5)
    };
    let grad_half_sq = spectral::gradient(&half_sq);
    let mut out = VectorField::zeros(&grid);
    for idx in 0..grid.len() {
        let b = h.at(idx);
        let j = jac.at(idx);
        let adv = mat_vec(&j, b);
        let g = grad_half_sq.at(idx);
        out.set(idx, [adv[0] - g[0], adv[1] - g[1], adv[2] - g[2]]);
    }
    out
}

/// Explicit growth factor exp(int_0^t c(p, tau) dtau) bounding
/// |H(t)|_p / |H0|_p, with c = (1/p) |div u|_inf + |S|_inf where |S| is
/// the pointwise Frobenius norm of the stretching matrix.
pub fn magnetic_growth_bound(u: &VelocityTrajectory, t: f64, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(MhdError::InvalidParameter(format!(
            "growth-bound exponent p must lie in [2, inf], got {p}"
        )));
    }
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let rates: Vec<f64> = u
        .levels()
        .iter()
        .map(|lvl| {
            let div = spectral::divergence(lvl);
            let s = stretching_matrix(lvl);
            inv_p * norms::linf_scalar(&div) + norms::linf_scalar(&s.frobenius())
        })
        .collect();
    // trapezoid quadrature up to t, linear in the final partial interval
    let dt = u.dt();
    let mut acc = 0.0;
    let mut tau = u.t0();
    let mut k = 0;
    while tau + dt <= t + 1e-12 * dt && k + 1 < rates.len() {
        acc += 0.5 * dt * (rates[k] + rates[k + 1]);
        tau += dt;
        k += 1;
    }
    let rem = t - tau;
    if rem > 1e-12 * dt && k + 1 < rates.len() {
        let w = rem / dt;
        let end = (1.0 - w) * rates[k] + w * rates[k + 1];
        acc += 0.5 * rem * (rates[k] + end);
    }
    Ok(acc.exp())
}
