//! Implicit viscous momentum step.
//!
//! Backward Euler turns each step into the SPD system
//! (rho/dt) u - mu Lap(u) - (lambda+mu) grad(div u) = g,
//! solved by preconditioned conjugate gradients. The preconditioner is
//! the exact constant-coefficient inverse with rho replaced by its mean.

use num_complex::Complex64;

use crate::error::{MhdError, Result};
use crate::field::{mat_vec, ScalarField, VectorField};
use crate::grid::Grid;
use crate::induction::lorentz_force;
use crate::norms;
use crate::spectral::{self, fft3, ifft3_real, wavenumbers};
use crate::state::{Forcing, PhysicsConfig, State};

/// Left-hand side of one implicit momentum step.
#[derive(Debug, Clone)]
pub struct MomentumOperator {
    grid: Grid,
    rho_over_dt: ScalarField,
    rho_mean_over_dt: f64,
    mu: f64,
    lambda: f64,
}

impl MomentumOperator {
    pub fn new(rho: &ScalarField, dt: f64, cfg: &PhysicsConfig) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let min_rho = rho.min();
        if !(min_rho > 0.0) {
            return Err(MhdError::NonpositiveDensity(min_rho));
        }
        let mean = rho.values().iter().sum::<f64>() / rho.values().len() as f64;
        Ok(Self {
            grid: rho.grid().clone(),
            rho_over_dt: rho.scale(1.0 / dt),
            rho_mean_over_dt: mean / dt,
            mu: cfg.mu,
            lambda: cfg.lambda,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// (rho/dt) u - mu Lap(u) - (lambda+mu) grad(div u).
    pub fn apply(&self, u: &VectorField) -> VectorField {
        let lap = spectral::laplacian(u);
        let gd = spectral::grad_div(u);
        let mut out = VectorField::zeros(&self.grid);
        let lam_mu = self.lambda + self.mu;
        for c in 0..3 {
            let comp = out.component_mut(c);
            let uc = u.component(c).values();
            let rc = self.rho_over_dt.values();
            let lc = lap.component(c).values();
            let gc = gd.component(c).values();
            for (i, v) in comp.values_mut().iter_mut().enumerate() {
                *v = rc[i] * uc[i] - self.mu * lc[i] - lam_mu * gc[i];
            }
        }
        out
    }

    /// Exact inverse of the constant-coefficient operator, applied in
    /// Fourier space via the rank-one (Sherman-Morrison) formula for
    /// (c I + d k k^T)^{-1}.
    fn precondition(&self, r: &VectorField) -> VectorField {
        let dims = self.grid.dims();
        let lengths = self.grid.lengths();
        // the mass/viscous part uses the full Laplacian symbol; the
        // grad-div part matches the Nyquist-zeroed odd-derivative symbol
        let k_full: [Vec<f64>; 3] = [
            wavenumbers(dims[0], lengths[0], false),
            wavenumbers(dims[1], lengths[1], false),
            wavenumbers(dims[2], lengths[2], false),
        ];
        let k_odd: [Vec<f64>; 3] = [
            wavenumbers(dims[0], lengths[0], true),
            wavenumbers(dims[1], lengths[1], true),
            wavenumbers(dims[2], lengths[2], true),
        ];
        let mut spec: Vec<Vec<Complex64>> = (0..3)
            .map(|c| fft3(&self.grid, r.component(c).values()))
            .collect();
        let d = self.lambda + self.mu;
        let mut idx = 0;
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for l in 0..dims[2] {
                    let kf = [k_full[0][i], k_full[1][j], k_full[2][l]];
                    let ko = [k_odd[0][i], k_odd[1][j], k_odd[2][l]];
                    let k2_full = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
                    let k2_odd = ko[0] * ko[0] + ko[1] * ko[1] + ko[2] * ko[2];
                    let c = self.rho_mean_over_dt + self.mu * k2_full;
                    let kdotr = spec[0][idx] * ko[0] + spec[1][idx] * ko[1] + spec[2][idx] * ko[2];
                    let shift = kdotr * (d / (c + d * k2_odd));
                    for comp in 0..3 {
                        spec[comp][idx] = (spec[comp][idx] - shift * ko[comp]) / c;
                    }
                    idx += 1;
                }
            }
        }
        let comps: Vec<ScalarField> = spec
            .into_iter()
            .map(|s| {
                ScalarField::from_values(&self.grid, ifft3_real(&self.grid, s))
                    .expect("preconditioner output finite")
            })
            .collect();
        let mut it = comps.into_iter();
        VectorField::from_components([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
            .expect("shared grid")
    }
}

/// Convergence certificate of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveCertificate {
    /// Final relative residual |b - Au|_2 / |b|_2.
    pub residual: f64,
    pub iters: usize,
}

/// Preconditioned conjugate gradients to relative residual `tol`.
/// All reductions are sequential so reruns are bitwise identical.
pub fn solve_momentum_step(
    op: &MomentumOperator,
    rhs: &VectorField,
    tol: f64,
    max_iters: usize,
) -> Result<(VectorField, SolveCertificate)> {
    if !(tol > 0.0) {
        return Err(MhdError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let b_norm = norms::inner_product(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok((
            VectorField::zeros(&op.grid),
            SolveCertificate {
                residual: 0.0,
                iters: 0,
            },
        ));
    }
    let mut x = VectorField::zeros(&op.grid);
    let mut r = rhs.clone();
    let mut z = op.precondition(&r);
    let mut p = z.clone();
    let mut rz = norms::inner_product(&r, &z);
    for iter in 1..=max_iters {
        let ap = op.apply(&p);
        let p_ap = norms::inner_product(&p, &ap);
        if !(p_ap > 0.0) {
            return Err(MhdError::SolverDiverged {
                residual: norms::inner_product(&r, &r).sqrt() / b_norm,
                iters: iter,
            });
        }
        let alpha = rz / p_ap;
        x = x.lincomb(1.0, &p, alpha);
        r = r.lincomb(1.0, &ap, -alpha);
        let res = norms::inner_product(&r, &r).sqrt() / b_norm;
        if res <= tol {
            return Ok((
                x,
                SolveCertificate {
                    residual: res,
                    iters: iter,
                },
            ));
        }
        z = op.precondition(&r);
        let rz_new = norms::inner_product(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.lincomb(1.0, &p, beta);
    }
    Err(MhdError::SolverDiverged {
        residual: norms::inner_product(&r, &r).sqrt() / b_norm,
        iters: max_iters,
    })
}

/// Assemble the momentum right-hand side
/// g = -rho (ubar . grad) ubar - grad P(rho) + (curl H) x H
///     + (rho/dt) u_prev [+ source].
pub fn build_rhs(
    rho: &ScalarField,
    u_bar: &VectorField,
    h: &VectorField,
    u_prev: &VectorField,
    cfg: &PhysicsConfig,
    dt: f64,
    forcing: Option<(&dyn Forcing, f64)>,
) -> Result<VectorField> {
    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(MhdError::NonpositiveDensity(min_rho));
    }
    let grid = rho.grid().clone();
    let jac = spectral::vector_gradient(u_bar);
    let grad_p = spectral::gradient(&cfg.pressure_field(rho));
    let lorentz = lorentz_force(h);
    let mut out = VectorField::zeros(&grid);
    for idx in 0..grid.len() {
        let rho_v = rho.values()[idx];
        let ub = u_bar.at(idx);
        let conv = mat_vec(&jac.at(idx), ub);
        let gp = grad_p.at(idx);
        let lf = lorentz.at(idx);
        let up = u_prev.at(idx);
        let mut g = [0.0f64; 3];
        for c in 0..3 {
            g[c] = -rho_v * conv[c] - gp[c] + lf[c] + rho_v / dt * up[c];
        }
        if let Some((f, t)) = forcing {
            let s = f.momentum(t, grid.node_position(idx));
            for c in 0..3 {
                g[c] += s[c];
            }
        }
        out.set(idx, g);
    }
    if !out.is_finite() {
        return Err(MhdError::InvalidField(
            "non-finite momentum right-hand side".into(),
        ));
    }
    Ok(out)
}

/// Explicit bound on |sqrt(rho0) u_t(0)|_2 from the initial data:
/// alpha^{-1/2} times the sum of mu |Lap u0|_2, (lambda+mu)
/// |grad div u0|_2, |rho0|_inf |u0|_inf |grad u0|_2, sup P'
/// |grad rho0|_2, and 2 |H0|_inf |grad H0|_2, with alpha = min rho0
/// and P' taken over the attained density range.
pub fn initial_acceleration_bound(state0: &State, cfg: &PhysicsConfig) -> f64 {
    let alpha = state0.rho.min();
    let lap_u = norms::lp_vector(&spectral::laplacian(&state0.u), 2.0);
    let gd_u = norms::lp_vector(&spectral::grad_div(&state0.u), 2.0);
    let grad_u = norms::lp_scalar(&spectral::vector_gradient(&state0.u).frobenius(), 2.0);
    let grad_rho = norms::lp_vector(&spectral::gradient(&state0.rho), 2.0);
    let grad_h = norms::lp_scalar(&spectral::vector_gradient(&state0.h).frobenius(), 2.0);
    let rho_inf = norms::linf_scalar(&state0.rho);
    let u_inf = norms::linf_vector(&state0.u);
    let h_inf = norms::linf_vector(&state0.h);
    let p_sup = cfg.pressure_derivative_sup(alpha, state0.rho.max());
    (cfg.mu * lap_u
        + (cfg.lambda + cfg.mu) * gd_u
        + rho_inf * u_inf * grad_u
        + p_sup * grad_rho
        + 2.0 * h_inf * grad_h)
        / alpha.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn default_op(grid: &Grid, dt: f64) -> MomentumOperator {
        MomentumOperator::new(
            &ScalarField::constant(grid, 1.0),
            dt,
            &PhysicsConfig::default(),
        )
        .unwrap()
    }

    fn random_band_limited(grid: &Grid, seed: u64) -> VectorField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut comps = Vec::new();
        for _ in 0..3 {
            let modes: Vec<([f64; 3], f64, f64)> = (0..4)
                .map(|_| {
                    (
                        [
                            rng.gen_range(-3..=3) as f64,
                            rng.gen_range(-3..=3) as f64,
                            rng.gen_range(-3..=3) as f64,
                        ],
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            comps.push(ScalarField::from_fn(grid, |x| {
                modes
                    .iter()
                    .map(|(k, a, p)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + p).cos())
                    .sum()
            }));
        }
        VectorField::from_components([comps[0].clone(), comps[1].clone(), comps[2].clone()])
            .unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Grid::cube(8);
        let cfg = PhysicsConfig::default();
        assert!(MomentumOperator::new(&ScalarField::constant(&g, 0.0), 0.1, &cfg).is_err());
        assert!(MomentumOperator::new(&ScalarField::constant(&g, 1.0), 0.0, &cfg).is_err());
    }

    #[test]
    fn fourier_symbol_on_solenoidal_and_compressive_modes() {
        let g = Grid::cube(16);
        let op = default_op(&g, 0.1);
        // solenoidal: u = (sin x1) e2 -> factor 1/dt + mu |k|^2 = 11
        let sol = VectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
        let out = op.apply(&sol);
        for i in 0..g.len() {
            assert_relative_eq!(
                out.component(1).values()[i],
                11.0 * sol.component(1).values()[i],
                max_relative = 1e-10,
                epsilon = 1e-10
            );
        }
        // compressive: u = (sin x1) e1 -> factor 1/dt + (2mu+lambda) = 12
        let comp = VectorField::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
        let out = op.apply(&comp);
        for i in 0..g.len() {
            assert_relative_eq!(
                out.component(0).values()[i],
                12.0 * comp.component(0).values()[i],
                max_relative = 1e-10,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn operator_is_symmetric_and_coercive() {
        let g = Grid::cube(12);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * x[0].sin());
        let dt = 0.05;
        let op = MomentumOperator::new(&rho, dt, &PhysicsConfig::default()).unwrap();
        for seed in 0..10u64 {
            let u = random_band_limited(&g, 100 + seed);
            let v = random_band_limited(&g, 200 + seed);
            let au = op.apply(&u);
            let av = op.apply(&v);
            let lhs = norms::inner_product(&au, &v);
            let rhs = norms::inner_product(&u, &av);
            let scale = norms::lp_vector(&au, 2.0) * norms::lp_vector(&v, 2.0);
            assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0), "symmetry gap");
            // coercivity against the explicit lower bound
            let quad = norms::inner_product(&au, &u);
            let grad_u = norms::lp_scalar(&spectral::vector_gradient(&u).frobenius(), 2.0);
            let lower = rho.min() / dt * norms::lp_vector(&u, 2.0).powi(2)
                + 1.0 * grad_u.powi(2) * (1.0 - 1e-10);
            assert!(
                quad >= lower * (1.0 - 1e-10),
                "coercivity: {quad} < {lower}"
            );
        }
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let g = Grid::cube(8);
        let op = default_op(&g, 0.1);
        let (u, cert) = solve_momentum_step(&op, &VectorField::zeros(&g), 1e-10, 50).unwrap();
        assert_eq!(cert.iters, 0);
        for c in 0..3 {
            assert!(u.component(c).values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_density_solve_is_exact_in_one_iteration() {
        let g = Grid::cube(16);
        let op = default_op(&g, 0.1);
        let rhs = VectorField::from_fn(&g, |x| [0.0, 11.0 * x[0].sin(), 0.0]);
        let (u, cert) = solve_momentum_step(&op, &rhs, 1e-10, 50).unwrap();
        assert!(
            cert.iters <= 2,
            "expected mode-wise exact inverse, took {}",
            cert.iters
        );
        for (i, x) in g.nodes().enumerate() {
            assert_abs_diff_eq!(u.component(1).values()[i], x[0].sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn variable_density_roundtrip() {
        let g = Grid::cube(16);
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.4 * (x[0] + x[1]).sin());
        let op = MomentumOperator::new(&rho, 0.05, &PhysicsConfig::default()).unwrap();
        let u_star = random_band_limited(&g, 5);
        let rhs = op.apply(&u_star);
        let tol = 1e-10;
        let (u, cert) = solve_momentum_step(&op, &rhs, tol, 200).unwrap();
        assert!(cert.residual <= tol);
        let err = norms::lp_vector(&u.sub(&u_star), 2.0);
        let scale = norms::lp_vector(&u_star, 2.0);
        assert!(err <= 10.0 * tol * scale, "roundtrip error {err}");
    }

    #[test]
    fn rhs_trivial_and_pressure_gradient() {
        let g = Grid::cube(16);
        let cfg = PhysicsConfig::default();
        let zero = VectorField::zeros(&g);
        let rhs = build_rhs(
            &ScalarField::constant(&g, 2.0),
            &zero,
            &zero,
            &zero,
            &cfg,
            0.1,
            None,
        )
        .unwrap();
        for c in 0..3 {
            for &v in rhs.component(c).values() {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
            }
        }
        // rho = 1 + 0.1 sin x1, A = 1, gamma = 2: rhs = -grad(rho^2)
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.1 * x[0].sin());
        let rhs = build_rhs(&rho, &zero, &zero, &zero, &cfg, 0.1, None).unwrap();
        for (i, x) in g.nodes().enumerate() {
            let expect = -2.0 * (1.0 + 0.1 * x[0].sin()) * 0.1 * x[0].cos();
            assert_abs_diff_eq!(rhs.component(0).values()[i], expect, epsilon = 1e-9);
            assert_abs_diff_eq!(rhs.component(1).values()[i], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rhs_terms_match_fd_oracle() {
        let g = Grid::cube(32);
        let cfg = PhysicsConfig::default();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.2 * (x[0] - x[2]).sin());
        let u_bar = random_band_limited(&g, 21).scale(0.1);
        let h = random_band_limited(&g, 22).scale(0.1);
        let zero = VectorField::zeros(&g);
        let rhs = build_rhs(&rho, &u_bar, &h, &zero, &cfg, 0.1, None).unwrap();
        // independent assembly with fd4 derivatives
        let jac = crate::fd::vector_gradient_fd4(&u_bar);
        let grad_p = crate::fd::gradient_fd4(&cfg.pressure_field(&rho));
        let curl_h = crate::fd::curl_fd4(&h);
        let hmax = g.spacing()[0].powi(4);
        for idx in 0..g.len() {
            let conv = mat_vec(&jac.at(idx), u_bar.at(idx));
            let c = curl_h.at(idx);
            let b = h.at(idx);
            let lf = [
                c[1] * b[2] - c[2] * b[1],
                c[2] * b[0] - c[0] * b[2],
                c[0] * b[1] - c[1] * b[0],
            ];
            for comp in 0..3 {
                let expect = -rho.values()[idx] * conv[comp] - grad_p.at(idx)[comp] + lf[comp];
                let got = rhs.component(comp).values()[idx];
                assert!(
                    (got - expect).abs() < 50.0 * hmax,
                    "fd4 oracle mismatch {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn acceleration_bound_examples() {
        let g = Grid::cube(16);
        let cfg = PhysicsConfig::default();
        let rest = State::rest(&g, 1.0);
        assert_abs_diff_eq!(
            initial_acceleration_bound(&rest, &cfg),
            0.0,
            epsilon = 1e-12
        );
        // single-mode velocity: bound dominates the viscous term alone
        let state = State::new(
            ScalarField::constant(&g, 1.0),
            VectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]),
            VectorField::zeros(&g),
        )
        .unwrap();
        let bound = initial_acceleration_bound(&state, &cfg);
        let lap_term = std::f64::consts::TAU.powf(1.5) / 2.0f64.sqrt();
        assert!(bound >= lap_term * (1.0 - 1e-10));
    }
}
