//! Lebesgue and Sobolev norm suite (midpoint quadrature, spectral derivatives).

use crate::error::{MhdError, Result};
use crate::field::{ScalarField, VectorField};
use crate::spectral;

/// Admissible Lebesgue exponent range for the `q` norms.
pub const Q_MIN: f64 = 3.0;
pub const Q_MAX: f64 = 6.0;
pub const Q_DEFAULT: f64 = 6.0;

pub fn validate_q(q: f64) -> Result<()> {
    if q > Q_MIN && q <= Q_MAX {
        Ok(())
    } else {
        Err(MhdError::InvalidParameter(format!(
            "exponent q must lie in ({Q_MIN}, {Q_MAX}], got {q}"
        )))
    }
}

/// L^p norm of a pointwise-magnitude sample vector.
fn lp_of_magnitudes(mags: impl Iterator<Item = f64>, p: f64, cell_volume: f64) -> f64 {
    let sum: f64 = mags.map(|m| m.powf(p)).sum();
    (cell_volume * sum).powf(1.0 / p)
}

pub fn lp_scalar(f: &ScalarField, p: f64) -> f64 {
    if p.is_infinite() {
        return linf_scalar(f);
    }
    lp_of_magnitudes(
        f.values().iter().map(|v| v.abs()),
        p,
        f.grid().cell_volume(),
    )
}

pub fn linf_scalar(f: &ScalarField) -> f64 {
    f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn lp_vector(v: &VectorField, p: f64) -> f64 {
    if p.is_infinite() {
        return linf_vector(v);
    }
    let grid = v.grid();
    lp_of_magnitudes(
        (0..grid.len()).map(|i| {
            let u = v.at(i);
            (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
        }),
        p,
        grid.cell_volume(),
    )
}

pub fn linf_vector(v: &VectorField) -> f64 {
    let grid = v.grid();
    (0..grid.len())
        .map(|i| {
            let u = v.at(i);
            (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
        })
        .fold(0.0f64, f64::max)
}

/// L² inner product of two vector fields.
pub fn inner_product(a: &VectorField, b: &VectorField) -> f64 {
    let vol = a.grid().cell_volume();
    let mut acc = 0.0;
    for c in 0..3 {
        for (x, y) in a.component(c).values().iter().zip(b.component(c).values()) {
            acc += x * y;
        }
    }
    vol * acc
}

/// L² inner product of two scalar fields.
pub fn inner_product_scalar(a: &ScalarField, b: &ScalarField) -> f64 {
    let vol = a.grid().cell_volume();
    vol * a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
}

/// The norms of one field that the estimates and the ball check consume.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSuite {
    pub q: f64,
    pub l2: f64,
    pub lq: f64,
    pub linf: f64,
    /// H¹ = W^{1,2} norm (field plus first derivatives).
    pub h1: f64,
    /// W^{1,q} norm.
    pub w1q: f64,
    /// H² = W^{2,2} norm (through second derivatives).
    pub h2: f64,
    /// W^{2,q} norm.
    pub w2q: f64,
}

impl NormSuite {
    pub fn lp(&self, p: f64) -> f64 {
        if p == 2.0 {
            self.l2
        } else if p == self.q {
            self.lq
        } else if p.is_infinite() {
            self.linf
        } else {
            panic!("NormSuite stores p in {{2, q, inf}} only");
        }
    }

    /// Norm of the intersection space W^{1,q} ∩ H¹.
    pub fn w1q_h1(&self) -> f64 {
        self.w1q.max(self.h1)
    }

    /// Norm of the intersection space W^{2,q} ∩ H².
    pub fn w2q_h2(&self) -> f64 {
        self.w2q.max(self.h2)
    }
}

fn sobolev(p: f64, layers: &[Vec<f64>], cell_volume: f64) -> f64 {
    let mut acc = 0.0;
    for layer in layers {
        acc += layer.iter().map(|m| m.powf(p)).sum::<f64>();
    }
    (cell_volume * acc).powf(1.0 / p)
}

fn magnitudes_scalar(f: &ScalarField) -> Vec<f64> {
    f.values().iter().map(|v| v.abs()).collect()
}

/// Full norm suite of a scalar field.
pub fn norms_scalar(f: &ScalarField, q: f64) -> Result<NormSuite> {
    validate_q(q)?;
    let vol = f.grid().cell_volume();
    let grad = spectral::gradient(f);
    let grad_mag: Vec<f64> = (0..f.grid().len())
        .map(|i| {
            let g = grad.at(i);
            (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
        })
        .collect();
    // second derivatives: full Hessian magnitude
    let mut hess_sq = vec![0.0f64; f.grid().len()];
    for i in 0..3 {
        let di = grad.component(i);
        for j in 0..3 {
            let dij = spectral::derivative(di, j);
            for (acc, v) in hess_sq.iter_mut().zip(dij.values()) {
                *acc += v * v;
            }
        }
    }
    let hess_mag: Vec<f64> = hess_sq.iter().map(|s| s.sqrt()).collect();
    let f_mag = magnitudes_scalar(f);
    Ok(NormSuite {
        q,
        l2: lp_scalar(f, 2.0),
        lq: lp_scalar(f, q),
        linf: linf_scalar(f),
        h1: sobolev(2.0, &[f_mag.clone(), grad_mag.clone()], vol),
        w1q: sobolev(q, &[f_mag.clone(), grad_mag.clone()], vol),
        h2: sobolev(
            2.0,
            &[f_mag.clone(), grad_mag.clone(), hess_mag.clone()],
            vol,
        ),
        w2q: sobolev(q, &[f_mag, grad_mag, hess_mag], vol),
    })
}

/// Full norm suite of a vector field (component-summed derivatives).
pub fn norms_vector(v: &VectorField, q: f64) -> Result<NormSuite> {
    validate_q(q)?;
    let grid = v.grid();
    let vol = grid.cell_volume();
    let n = grid.len();
    let mut f_sq = vec![0.0f64; n];
    let mut grad_sq = vec![0.0f64; n];
    let mut hess_sq = vec![0.0f64; n];
    for c in 0..3 {
        let comp = v.component(c);
        for (acc, x) in f_sq.iter_mut().zip(comp.values()) {
            *acc += x * x;
        }
        let grad = spectral::gradient(comp);
        for j in 0..3 {
            let dj = grad.component(j);
            for (acc, x) in grad_sq.iter_mut().zip(dj.values()) {
                *acc += x * x;
            }
            for k in 0..3 {
                let djk = spectral::derivative(dj, k);
                for (acc, x) in hess_sq.iter_mut().zip(djk.values()) {
                    *acc += x * x;
                }
            }
        }
    }
    let f_mag: Vec<f64> = f_sq.iter().map(|s| s.sqrt()).collect();
    let grad_mag: Vec<f64> = grad_sq.iter().map(|s| s.sqrt()).collect();
    let hess_mag: Vec<f64> = hess_sq.iter().map(|s| s.sqrt()).collect();
    Ok(NormSuite {
        q,
        l2: lp_vector(v, 2.0),
        lq: lp_vector(v, q),
        linf: linf_vector(v),
        h1: sobolev(2.0, &[f_mag.clone(), grad_mag.clone()], vol),
        w1q: sobolev(q, &[f_mag.clone(), grad_mag.clone()], vol),
        h2: sobolev(
            2.0,
            &[f_mag.clone(), grad_mag.clone(), hess_mag.clone()],
            vol,
        ),
        w2q: sobolev(q, &[f_mag, grad_mag, hess_mag], vol),
    })
}
