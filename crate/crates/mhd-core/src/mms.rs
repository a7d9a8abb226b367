//! Manufactured solutions: trigonometric ansatz plus the sources that
//! make it an exact solution of the forced system.
//!
//! All differentiation is closed-form on the mode sums, so the injected
//! sources carry no discretization error of their own.

use crate::error::{MhdError, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::norms;
use crate::picard::{self, PicardConfig};
use crate::state::{Forcing, PhysicsConfig, State};

/// One traveling trigonometric mode amp * sin(k.x - omega t + phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMode {
    pub amp: f64,
    pub wavevector: [f64; 3],
    pub omega: f64,
    pub phase: f64,
}

impl TrigMode {
    #[inline]
    fn theta(&self, t: f64, x: [f64; 3]) -> f64 {
        self.wavevector[0] * x[0] + self.wavevector[1] * x[1] + self.wavevector[2] * x[2]
            - self.omega * t
            + self.phase
    }

    #[inline]
    fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        self.amp * self.theta(t, x).sin()
    }

    #[inline]
    fn time_deriv(&self, t: f64, x: [f64; 3]) -> f64 {
        -self.amp * self.omega * self.theta(t, x).cos()
    }

    #[inline]
    fn partial(&self, axis: usize, t: f64, x: [f64; 3]) -> f64 {
        self.amp * self.wavevector[axis] * self.theta(t, x).cos()
    }

    #[inline]
    fn second_partial(&self, i: usize, j: usize, t: f64, x: [f64; 3]) -> f64 {
        -self.amp * self.wavevector[i] * self.wavevector[j] * self.theta(t, x).sin()
    }
}

/// Scalar ansatz: constant base plus a mode sum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarAnsatz {
    pub base: f64,
    pub modes: Vec<TrigMode>,
}

impl ScalarAnsatz {
    pub fn constant(base: f64) -> Self {
        Self {
            base,
            modes: Vec::new(),
        }
    }

    pub fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        self.base + self.modes.iter().map(|m| m.value(t, x)).sum::<f64>()
    }

    pub fn time_deriv(&self, t: f64, x: [f64; 3]) -> f64 {
        self.modes.iter().map(|m| m.time_deriv(t, x)).sum()
    }

    pub fn grad(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for m in &self.modes {
            for (axis, gc) in g.iter_mut().enumerate() {
                *gc += m.partial(axis, t, x);
            }
        }
        g
    }

    pub fn second_partial(&self, i: usize, j: usize, t: f64, x: [f64; 3]) -> f64 {
        self.modes
            .iter()
            .map(|m| m.second_partial(i, j, t, x))
            .sum()
    }

    /// Guaranteed lower bound over all space-time points.
    pub fn min_bound(&self) -> f64 {
        self.base - self.modes.iter().map(|m| m.amp.abs()).sum::<f64>()
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(t, x))
    }
}

/// Vector ansatz: one scalar ansatz per component.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorAnsatz {
    pub components: [ScalarAnsatz; 3],
}

impl VectorAnsatz {
    pub fn value(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        [
            self.components[0].value(t, x),
            self.components[1].value(t, x),
            self.components[2].value(t, x),
        ]
    }

    pub fn time_deriv(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        [
            self.components[0].time_deriv(t, x),
            self.components[1].time_deriv(t, x),
            self.components[2].time_deriv(t, x),
        ]
    }

    /// Jacobian entry (i, j) = d comp_i / d x_j.
    pub fn jacobian(&self, t: f64, x: [f64; 3]) -> [[f64; 3]; 3] {
        let mut j = [[0.0; 3]; 3];
        for (i, comp) in self.components.iter().enumerate() {
            let g = comp.grad(t, x);
            j[i] = g;
        }
        j
    }

    pub fn divergence(&self, t: f64, x: [f64; 3]) -> f64 {
        (0..3).map(|c| self.components[c].grad(t, x)[c]).sum()
    }

    pub fn laplacian(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, comp) in self.components.iter().enumerate() {
            out[c] = (0..3).map(|i| comp.second_partial(i, i, t, x)).sum();
        }
        out
    }

    /// grad(div u), component i = sum_j d_i d_j u_j.
    pub fn grad_div(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, oc) in out.iter_mut().enumerate() {
            *oc = (0..3)
                .map(|j| self.components[j].second_partial(i, j, t, x))
                .sum();
        }
        out
    }

    pub fn curl(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let j = self.jacobian(t, x);
        [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> VectorField {
        VectorField::from_fn(grid, |x| self.value(t, x))
    }
}

/// An analytic (rho, u, H) triple and the gas parameters it is forced
/// under. Implements `Forcing` with the exact residual sources.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub rho: ScalarAnsatz,
    pub u: VectorAnsatz,
    pub h: VectorAnsatz,
    pub cfg: PhysicsConfig,
}

impl ManufacturedCase {
    pub fn new(
        rho: ScalarAnsatz,
        u: VectorAnsatz,
        h: VectorAnsatz,
        cfg: PhysicsConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(rho.min_bound() > 0.0) {
            return Err(MhdError::InvalidParameter(format!(
                "manufactured density may reach {} <= 0",
                rho.min_bound()
            )));
        }
        let case = Self { rho, u, h, cfg };
        // the magnetic ansatz must be solenoidal identically
        let mut worst = 0.0f64;
        for &t in &[0.0, 0.37, 1.1] {
            for s in 0..24 {
                let x = [
                    0.261 * s as f64,
                    0.173 * (s * s % 17) as f64,
                    0.419 * (s * 7 % 11) as f64,
                ];
                worst = worst.max(case.h.divergence(t, x).abs());
            }
        }
        if worst > 1e-10 {
            return Err(MhdError::InvalidField(format!(
                "manufactured magnetic field has divergence {worst:.3e}"
            )));
        }
        Ok(case)
    }

    /// Default single-mode verification case.
    pub fn single_mode(amplitude: f64, omega: f64, cfg: PhysicsConfig) -> Result<Self> {
        let mode = |amp: f64, k: [f64; 3], phase: f64| TrigMode {
            amp,
            wavevector: k,
            omega,
            phase,
        };
        let rho = ScalarAnsatz {
            base: 1.0,
            modes: vec![mode(amplitude, [1.0, 0.0, 0.0], 0.0)],
        };
        let u = VectorAnsatz {
            components: [
                ScalarAnsatz {
                    base: 0.0,
                    modes: vec![mode(amplitude, [0.0, 1.0, 0.0], 0.4)],
                },
                ScalarAnsatz {
                    base: 0.0,
                    modes: vec![mode(amplitude, [0.0, 0.0, 1.0], 0.9)],
                },
                ScalarAnsatz {
                    base: 0.0,
                    modes: vec![mode(amplitude, [1.0, 0.0, 0.0], 1.3)],
                },
            ],
        };
        // amp . k = 0 per mode keeps div H = 0
        let h = VectorAnsatz {
            components: [
                ScalarAnsatz::constant(0.0),
                ScalarAnsatz {
                    base: 0.0,
                    modes: vec![mode(amplitude, [1.0, 0.0, 0.0], 0.2)],
                },
                ScalarAnsatz {
                    base: 0.0,
                    modes: vec![mode(amplitude, [0.0, 1.0, 0.0], 0.7)],
                },
            ],
        };
        Self::new(rho, u, h, cfg)
    }

    /// Unforced traveling wave: rho = 1 + a sin(x1 - t), u = e1, H = 0.
    /// The continuity source vanishes identically.
    pub fn traveling_wave(amplitude: f64, cfg: PhysicsConfig) -> Result<Self> {
        let rho = ScalarAnsatz {
            base: 1.0,
            modes: vec![TrigMode {
                amp: amplitude,
                wavevector: [1.0, 0.0, 0.0],
                omega: 1.0,
                phase: 0.0,
            }],
        };
        let u = VectorAnsatz {
            components: [
                ScalarAnsatz::constant(1.0),
                ScalarAnsatz::constant(0.0),
                ScalarAnsatz::constant(0.0),
            ],
        };
        Self::new(rho, u, VectorAnsatz::default(), cfg)
    }

    pub fn state_at(&self, grid: &Grid, t: f64) -> Result<State> {
        State::new(
            self.rho.sample(grid, t),
            self.u.sample(grid, t),
            self.h.sample(grid, t),
        )
    }

    pub fn initial_state(&self, grid: &Grid) -> Result<State> {
        self.state_at(grid, 0.0)
    }

    /// The same ansatz with every mode frozen in time (omega = 0).
    ///
    /// The exact solution of the steady variant is time-independent, so
    /// a backward Euler march started on it carries no temporal error:
    /// the remaining discrepancy is purely spatial. The spatial sweep of
    /// the convergence study uses this to avoid fitting through the
    /// dt-dependent error floor.
    pub fn steady_variant(&self) -> Self {
        let freeze_scalar = |s: &ScalarAnsatz| ScalarAnsatz {
            base: s.base,
            modes: s
                .modes
                .iter()
                .map(|m| TrigMode { omega: 0.0, ..*m })
                .collect(),
        };
        let freeze_vector = |v: &VectorAnsatz| VectorAnsatz {
            components: [
                freeze_scalar(&v.components[0]),
                freeze_scalar(&v.components[1]),
                freeze_scalar(&v.components[2]),
            ],
        };
        Self {
            rho: freeze_scalar(&self.rho),
            u: freeze_vector(&self.u),
            h: freeze_vector(&self.h),
            cfg: self.cfg.clone(),
        }
    }
}

impl Forcing for ManufacturedCase {
    /// Residual of the continuity equation at the ansatz.
    fn mass(&self, t: f64, x: [f64; 3]) -> f64 {
        let grad_rho = self.rho.grad(t, x);
        let u = self.u.value(t, x);
        self.rho.time_deriv(t, x)
            + grad_rho[0] * u[0]
            + grad_rho[1] * u[1]
            + grad_rho[2] * u[2]
            + self.rho.value(t, x) * self.u.divergence(t, x)
    }

    /// Residual of the momentum equation at the ansatz.
    fn momentum(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let rho = self.rho.value(t, x);
        let grad_rho = self.rho.grad(t, x);
        let u = self.u.value(t, x);
        let ut = self.u.time_deriv(t, x);
        let j = self.u.jacobian(t, x);
        let lap = self.u.laplacian(t, x);
        let gd = self.u.grad_div(t, x);
        let h = self.h.value(t, x);
        let c = self.h.curl(t, x);
        let lorentz = [
            c[1] * h[2] - c[2] * h[1],
            c[2] * h[0] - c[0] * h[2],
            c[0] * h[1] - c[1] * h[0],
        ];
        let dp = self.cfg.pressure_derivative(rho);
        let lam_mu = self.cfg.lambda + self.cfg.mu;
        let mut out = [0.0; 3];
        for i in 0..3 {
            let conv = j[i][0] * u[0] + j[i][1] * u[1] + j[i][2] * u[2];
            out[i] = rho * (ut[i] + conv) + dp * grad_rho[i]
                - lorentz[i]
                - self.cfg.mu * lap[i]
                - lam_mu * gd[i];
        }
        out
    }

    /// Residual of the induction equation at the ansatz.
    fn induction(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let u = self.u.value(t, x);
        let ju = self.u.jacobian(t, x);
        let div_u = ju[0][0] + ju[1][1] + ju[2][2];
        let h = self.h.value(t, x);
        let ht = self.h.time_deriv(t, x);
        let jh = self.h.jacobian(t, x);
        let mut out = [0.0; 3];
        for i in 0..3 {
            let adv = jh[i][0] * u[0] + jh[i][1] * u[1] + jh[i][2] * u[2];
            let stretch = ju[i][0] * h[0] + ju[i][1] * h[1] + ju[i][2] * h[2] - div_u * h[i];
            out[i] = ht[i] + adv - stretch;
        }
        out
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub sweep: SweepKind,
    pub n: usize,
    pub dt: f64,
    pub err_rho: f64,
    pub err_u: f64,
    pub err_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Spatial,
    Temporal,
}

/// Convergence-study output: per-run errors plus fitted orders for
/// (rho, u, H). Orders are absent when the errors sit at round-off.
#[derive(Debug, Clone)]
pub struct OrderTable {
    pub rows: Vec<OrderRow>,
    pub spatial_order: Option<[f64; 3]>,
    pub temporal_order: Option<[f64; 3]>,
}

fn solve_case(case: &ManufacturedCase, n: usize, dt: f64, base: &PicardConfig) -> Result<State> {
    let grid = Grid::cube(n);
    let initial = case.initial_state(&grid)?;
    let pcfg = PicardConfig { dt, ..base.clone() };
    let (traj, report) = picard::solve(&initial, &case.cfg, &pcfg, Some(case))?;
    if !report.converged {
        return Err(MhdError::SolverDiverged {
            residual: *report.distances.last().unwrap_or(&f64::NAN),
            iters: report.sweeps,
        });
    }
    Ok(traj.state(traj.num_levels() - 1).clone())
}

fn state_errors(a: &State, b: &State) -> [f64; 3] {
    [
        norms::lp_scalar(&a.rho.sub(&b.rho), 2.0),
        norms::lp_vector(&a.u.sub(&b.u), 2.0),
        norms::lp_vector(&a.h.sub(&b.h), 2.0),
    ]
}

/// Least-squares slope of ln(err) against ln(scale); None at round-off.
fn fit_order(scales: &[f64], errs: &[[f64; 3]]) -> Option<[f64; 3]> {
    if errs.iter().any(|e| e.iter().any(|&v| v < 1e-13)) {
        return None;
    }
    let n = scales.len() as f64;
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let denom: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let mut out = [0.0; 3];
    for c in 0..3 {
        let ys: Vec<f64> = errs.iter().map(|e| e[c].ln()).collect();
        let y_mean = ys.iter().sum::<f64>() / n;
        let num: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - x_mean) * (y - y_mean))
            .sum();
        out[c] = num / denom;
    }
    Some(out)
}

/// Run the forced solver over a spatial sweep (the steady variant of
/// the case against its ansatz, where backward Euler is exact in time)
/// and a temporal sweep (against a halved-dt reference at the finest
/// resolution, so the spatial floor cancels).
pub fn convergence_study(
    case: &ManufacturedCase,
    resolutions: &[usize],
    dts: &[f64],
    base: &PicardConfig,
) -> Result<OrderTable> {
    if resolutions.len() < 3 {
        return Err(MhdError::InvalidParameter(
            "need at least 3 resolutions for an order fit".into(),
        ));
    }
    if dts.is_empty() {
        return Err(MhdError::InvalidParameter("need at least one dt".into()));
    }
    let dt_min = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt_max = dts.iter().cloned().fold(0.0f64, f64::max);
    let mut rows = Vec::new();

    let steady = case.steady_variant();
    let mut spatial_scales = Vec::new();
    let mut spatial_errs = Vec::new();
    for &n in resolutions {
        let end = solve_case(&steady, n, dt_max, base)?;
        let exact = steady.state_at(end.grid(), base.horizon)?;
        let e = state_errors(&end, &exact);
        rows.push(OrderRow {
            sweep: SweepKind::Spatial,
            n,
            dt: dt_max,
            err_rho: e[0],
            err_u: e[1],
            err_h: e[2],
        });
        spatial_scales.push(Grid::cube(n).spacing()[0]);
        spatial_errs.push(e);
    }
    let spatial_order = fit_order(&spatial_scales, &spatial_errs);

    let n_ref = *resolutions.iter().max().unwrap();
    let dt_ref = dt_min / 2.0;
    let reference = solve_case(case, n_ref, dt_ref, base)?;
    let mut temporal_scales = Vec::new();
    let mut temporal_errs = Vec::new();
    for &dt in dts {
        let end = solve_case(case, n_ref, dt, base)?;
        let e = state_errors(&end, &reference);
        rows.push(OrderRow {
            sweep: SweepKind::Temporal,
            n: n_ref,
            dt,
            err_rho: e[0],
            err_u: e[1],
            err_h: e[2],
        });
        temporal_scales.push(dt - dt_ref);
        temporal_errs.push(e);
    }
    let temporal_order = fit_order(&temporal_scales, &temporal_errs);

    Ok(OrderTable {
        rows,
        spatial_order,
        temporal_order,
    })
}
