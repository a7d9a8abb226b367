//! Independent explicit oracle: Eulerian pseudospectral discretization
//! of the full nonlinear system advanced with SSP-RK3.
//!
//! Shares nothing with the semi-Lagrangian production path beyond the
//! FFT backend: conservative continuity, curl-form induction, and a
//! velocity equation divided through by the density.

use crate::error::{MhdError, Result};
use crate::field::{mat_vec, ScalarField, VectorField};
use crate::induction;
use crate::picard::Trajectory;
use crate::spectral;
use crate::state::{Forcing, PhysicsConfig, State};

fn lincomb_scalar(a: &ScalarField, ca: f64, b: &ScalarField, cb: f64) -> ScalarField {
    a.zip_with(b, |x, y| ca * x + cb * y)
}

/// Time derivative of (rho, u, H) at time `t` in fully Eulerian form.
fn time_derivative(
    rho: &ScalarField,
    u: &VectorField,
    h: &VectorField,
    t: f64,
    cfg: &PhysicsConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<(ScalarField, VectorField, VectorField)> {
    let grid = rho.grid().clone();
    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(MhdError::NonpositiveDensity(min_rho));
    }

    // rho_t = -div(rho u)
    let flux = VectorField::from_components([
        rho.mul(u.component(0)),
        rho.mul(u.component(1)),
        rho.mul(u.component(2)),
    ])?;
    let mut rho_t = spectral::divergence(&flux).scale(-1.0);

    // u_t = -u.grad(u) + (lorentz - grad P + mu lap u + (lam+mu) grad div u) / rho
    let grad_u = spectral::vector_gradient(u);
    let grad_p = spectral::gradient(&cfg.pressure_field(rho));
    let lap_u = spectral::laplacian(u);
    let gd_u = spectral::grad_div(u);
    let lorentz = induction::lorentz_force(h);
    let lam_mu = cfg.lambda + cfg.mu;
    let mut u_t = VectorField::zeros(&grid);
    for idx in 0..grid.len() {
        let uu = u.at(idx);
        let conv = mat_vec(&grad_u.at(idx), uu);
        let r = rho.values()[idx];
        let mut v = [0.0; 3];
        for c in 0..3 {
            let force = lorentz.at(idx)[c] - grad_p.at(idx)[c]
                + cfg.mu * lap_u.at(idx)[c]
                + lam_mu * gd_u.at(idx)[c];
            v[c] = -conv[c] + force / r;
        }
        u_t.set(idx, v);
    }

    // H_t = curl(u x H)
    let mut cross = VectorField::zeros(&grid);
    for idx in 0..grid.len() {
        let a = u.at(idx);
        let b = h.at(idx);
        cross.set(
            idx,
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ],
        );
    }
    let mut h_t = spectral::curl(&cross);

    if let Some(f) = forcing {
        for (idx, x) in grid.nodes().enumerate() {
            let r = rho.values()[idx];
            rho_t.values_mut()[idx] += f.mass(t, x);
            let su = f.momentum(t, x);
            let sh = f.induction(t, x);
            let mut v = u_t.at(idx);
            let mut w = h_t.at(idx);
            for c in 0..3 {
                // the momentum source enters the velocity form through 1/rho
                v[c] += su[c] / r;
                w[c] += sh[c];
            }
            u_t.set(idx, v);
            h_t.set(idx, w);
        }
    }
    Ok((rho_t, u_t, h_t))
}

fn euler_stage(
    rho: &ScalarField,
    u: &VectorField,
    h: &VectorField,
    t: f64,
    dt: f64,
    cfg: &PhysicsConfig,
    forcing: Option<&dyn Forcing>,
) -> Result<(ScalarField, VectorField, VectorField)> {
    let (rho_t, u_t, h_t) = time_derivative(rho, u, h, t, cfg, forcing)?;
    Ok((
        lincomb_scalar(rho, 1.0, &rho_t, dt),
        u.lincomb(1.0, &u_t, dt),
        h.lincomb(1.0, &h_t, dt),
    ))
}

/// March the oracle for `steps` steps of size `dt` with the Shu-Osher
/// three-stage scheme; returns the full trajectory at the step times.
pub fn reference_solve(
    initial: &State,
    cfg: &PhysicsConfig,
    dt: f64,
    steps: usize,
    forcing: Option<&dyn Forcing>,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(MhdError::InvalidParameter(format!(
            "oracle dt must be positive, got {dt}"
        )));
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    let mut rho = initial.rho.clone();
    let mut u = initial.u.clone();
    let mut h = initial.h.clone();
    for k in 0..steps {
        let t = k as f64 * dt;
        let (r1, u1, h1) = euler_stage(&rho, &u, &h, t, dt, cfg, forcing)?;
        let (r2e, u2e, h2e) = euler_stage(&r1, &u1, &h1, t + dt, dt, cfg, forcing)?;
        let r2 = lincomb_scalar(&rho, 0.75, &r2e, 0.25);
        let u2 = u.lincomb(0.75, &u2e, 0.25);
        let h2 = h.lincomb(0.75, &h2e, 0.25);
        let (r3e, u3e, h3e) = euler_stage(&r2, &u2, &h2, t + 0.5 * dt, dt, cfg, forcing)?;
        rho = lincomb_scalar(&rho, 1.0 / 3.0, &r3e, 2.0 / 3.0);
        u = u.lincomb(1.0 / 3.0, &u3e, 2.0 / 3.0);
        h = h.lincomb(1.0 / 3.0, &h3e, 2.0 / 3.0);
        if !(rho.is_finite() && u.is_finite() && h.is_finite()) {
            return Err(MhdError::InvalidField(format!(
                "oracle produced non-finite fields at step {}",
                k + 1
            )));
        }
        states.push(State::new(rho.clone(), u.clone(), h.clone())?);
    }
    Trajectory::new(0.0, dt, states)
}

/// Relative space-time L2 gap between two trajectories over the three
/// fields jointly; trapezoid in time.
pub fn trajectory_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.num_levels() != b.num_levels() || (a.dt() - b.dt()).abs() > 1e-12 {
        return Err(MhdError::InvalidParameter(
            "trajectories have mismatched time levels".into(),
        ));
    }
    let n = a.num_levels();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        let sa = a.state(k);
        let sb = b.state(k);
        let d = crate::norms::lp_scalar(&sa.rho.sub(&sb.rho), 2.0).powi(2)
            + crate::norms::lp_vector(&sa.u.sub(&sb.u), 2.0).powi(2)
            + crate::norms::lp_vector(&sa.h.sub(&sb.h), 2.0).powi(2);
        let m = crate::norms::lp_scalar(&sa.rho, 2.0).powi(2)
            + crate::norms::lp_vector(&sa.u, 2.0).powi(2)
            + crate::norms::lp_vector(&sa.h, 2.0).powi(2);
        num += w * d;
        den += w * m;
    }
    Ok(if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::mms::ManufacturedCase;
    use crate::norms;

    #[test]
    fn rest_state_is_stationary() {
        let g = Grid::cube(8);
        let initial = State::rest(&g, 1.0);
        let traj = reference_solve(&initial, &PhysicsConfig::default(), 1e-3, 5, None).unwrap();
        let end = traj.state(traj.num_levels() - 1);
        assert!(norms::lp_vector(&end.u, 2.0) < 1e-13);
        assert!((end.rho.min() - 1.0).abs() < 1e-13);
        assert!((end.rho.max() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oracle_tracks_the_manufactured_solution() {
        let case = ManufacturedCase::single_mode(0.05, 1.0, PhysicsConfig::default()).unwrap();
        let g = Grid::cube(16);
        let initial = case.initial_state(&g).unwrap();
        let steps = 20;
        let dt = 1e-3;
        let traj = reference_solve(&initial, &case.cfg, dt, steps, Some(&case)).unwrap();
        let end = traj.state(steps);
        let exact = case.state_at(&g, steps as f64 * dt).unwrap();
        let err = norms::lp_vector(&end.u.sub(&exact.u), 2.0)
            + norms::lp_scalar(&end.rho.sub(&exact.rho), 2.0)
            + norms::lp_vector(&end.h.sub(&exact.h), 2.0);
        assert!(err < 1e-5, "oracle error {err}");
    }

    #[test]
    fn divergence_free_magnetic_field_stays_divergence_free() {
        let g = Grid::cube(16);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.05 * x[0].sin());
        let u = VectorField::from_fn(&g, |x| {
            [0.05 * x[1].sin(), 0.05 * x[2].cos(), 0.05 * x[0].sin()]
        });
        let h = VectorField::from_fn(&g, |x| [0.1 * x[1].cos(), 0.0, 0.1 * x[0].sin()]);
        let initial = State::new(rho, u, h).unwrap();
        let traj = reference_solve(&initial, &PhysicsConfig::default(), 1e-3, 20, None).unwrap();
        let end = traj.state(traj.num_levels() - 1);
        let div = spectral::divergence(&end.h);
        // curl-form update keeps div H at round-off
        assert!(norms::lp_scalar(&div, 2.0) < 1e-10);
    }

    #[test]
    fn gap_of_identical_trajectories_is_zero() {
        let g = Grid::cube(8);
        let initial = State::rest(&g, 1.0);
        let a = reference_solve(&initial, &PhysicsConfig::default(), 1e-3, 3, None).unwrap();
        let b = reference_solve(&initial, &PhysicsConfig::default(), 1e-3, 3, None).unwrap();
        assert_eq!(trajectory_gap(&a, &b).unwrap(), 0.0);
    }
}
