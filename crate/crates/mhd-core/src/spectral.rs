//! FFT-based differential operators on the periodic grid.
//!
//! Derivatives are exact for resolved Fourier modes. Odd derivatives zero
//! the Nyquist mode so that real input yields real output.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER.lock().expect("fft planner");
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Angular wavenumbers for one axis in FFT storage order.
/// `nyquist_zeroed` drops the unmatched `n/2` mode (used for odd derivatives).
pub fn wavenumbers(n: usize, length: f64, nyquist_zeroed: bool) -> Vec<f64> {
    let base = std::f64::consts::TAU / length;
    (0..n)
        .map(|m| {
            let m_signed = if m <= n / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            if nyquist_zeroed && n.is_multiple_of(2) && m == n / 2 {
                0.0
            } else {
                base * m_signed as f64
            }
        })
        .collect()
}

fn transform_axis(data: &mut [Complex64], dims: [usize; 3], axis: usize, inverse: bool) {
    let n = dims[axis];
    let fft = plan(n, inverse);
    let (stride, lines): (usize, Vec<(usize, usize)>) = match axis {
        0 => (
            dims[1] * dims[2],
            (0..dims[1] * dims[2]).map(|off| (off, 1)).collect(),
        ),
        1 => {
            let mut starts = Vec::with_capacity(dims[0] * dims[2]);
            for i in 0..dims[0] {
                for k in 0..dims[2] {
                    starts.push((i * dims[1] * dims[2] + k, 1));
                }
            }
            (dims[2], starts)
        }
        _ => {
            let mut starts = Vec::with_capacity(dims[0] * dims[1]);
            for ij in 0..dims[0] * dims[1] {
                starts.push((ij * dims[2], 1));
            }
            (1, starts)
        }
    };
    let mut line = vec![Complex64::default(); n];
    for (start, _) in lines {
        for m in 0..n {
            line[m] = data[start + m * stride];
        }
        fft.process(&mut line);
        for m in 0..n {
            data[start + m * stride] = line[m];
        }
    }
}

/// Forward 3D FFT of a real field (unnormalized).
pub fn fft3(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let dims = grid.dims();
    for axis in 0..3 {
        transform_axis(&mut data, dims, axis, false);
    }
    data
}

/// Inverse 3D FFT returning the real part, with 1/N normalization.
pub fn ifft3_real(grid: &Grid, mut data: Vec<Complex64>) -> Vec<f64> {
    let dims = grid.dims();
    for axis in 0..3 {
        transform_axis(&mut data, dims, axis, true);
    }
    let scale = 1.0 / grid.len() as f64;
    data.iter().map(|c| c.re * scale).collect()
}

/// Apply a diagonal multiplier `m(kx, ky, kz)` in spectral space.
fn apply_symbol(
    grid: &Grid,
    values: &[f64],
    symbol: impl Fn(f64, f64, f64) -> Complex64,
) -> Vec<f64> {
    let dims = grid.dims();
    let lengths = grid.lengths();
    let kx = wavenumbers(dims[0], lengths[0], true);
    let ky = wavenumbers(dims[1], lengths[1], true);
    let kz = wavenumbers(dims[2], lengths[2], true);
    let mut spec = fft3(grid, values);
    let mut idx = 0;
    for &kxi in &kx {
        for &kyj in &ky {
            for &kzk in &kz {
                spec[idx] *= symbol(kxi, kyj, kzk);
                idx += 1;
            }
        }
    }
    ifft3_real(grid, spec)
}

/// Partial derivative along one axis.
pub fn derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid();
    let out = apply_symbol(grid, f.values(), |kx, ky, kz| {
        let k = [kx, ky, kz][axis];
        Complex64::new(0.0, k)
    });
    ScalarField::from_values(grid, out).expect("spectral derivative finite")
}

/// Spectral gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField::from_components([derivative(f, 0), derivative(f, 1), derivative(f, 2)])
        .expect("shared grid")
}

/// Spectral divergence of a vector field.
pub fn divergence(v: &VectorField) -> ScalarField {
    let mut out = derivative(v.component(0), 0);
    out = out.add(&derivative(v.component(1), 1));
    out.add(&derivative(v.component(2), 2))
}

/// Spectral curl of a vector field.
pub fn curl(v: &VectorField) -> VectorField {
    let c0 = derivative(v.component(2), 1).sub(&derivative(v.component(1), 2));
    let c1 = derivative(v.component(0), 2).sub(&derivative(v.component(2), 0));
    let c2 = derivative(v.component(1), 0).sub(&derivative(v.component(0), 1));
    VectorField::from_components([c0, c1, c2]).expect("shared grid")
}

/// Jacobian matrix of a vector field: entry `(i, j)` is d v_i / d x_j.
pub fn vector_gradient(v: &VectorField) -> MatrixField {
    let grid = v.grid().clone();
    let mut entries = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            entries.push(derivative(v.component(i), j));
        }
    }
    MatrixField::from_entries(&grid, entries).expect("shared grid")
}

/// Spectral Laplacian of a scalar field.
pub fn laplacian_scalar(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let out = apply_symbol(grid, f.values(), |kx, ky, kz| {
        Complex64::new(-(kx * kx + ky * ky + kz * kz), 0.0)
    });
    ScalarField::from_values(grid, out).expect("spectral laplacian finite")
}

/// Component-wise spectral Laplacian of a vector field.
pub fn laplacian(v: &VectorField) -> VectorField {
    VectorField::from_components([
        laplacian_scalar(v.component(0)),
        laplacian_scalar(v.component(1)),
        laplacian_scalar(v.component(2)),
    ])
    .expect("shared grid")
}

/// Gradient of the divergence of a vector field.
pub fn grad_div(v: &VectorField) -> VectorField {
    gradient(&divergence(v))
}

/// Leray/Helmholtz projection onto divergence-free fields,
/// used only for initial-data preparation.
pub fn project_solenoidal(v: &VectorField) -> VectorField {
    let grid = v.grid().clone();
    let dims = grid.dims();
    let lengths = grid.lengths();
    let kx = wavenumbers(dims[0], lengths[0], true);
    let ky = wavenumbers(dims[1], lengths[1], true);
    let kz = wavenumbers(dims[2], lengths[2], true);
    let mut spec: Vec<Vec<Complex64>> = (0..3)
        .map(|c| fft3(&grid, v.component(c).values()))
        .collect();
    let mut idx = 0;
    for &kxi in &kx {
        for &kyj in &ky {
            for &kzk in &kz {
                let k = [kxi, kyj, kzk];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 > 0.0 {
                    let kdotv = spec[0][idx] * k[0] + spec[1][idx] * k[1] + spec[2][idx] * k[2];
                    for c in 0..3 {
                        spec[c][idx] -= kdotv * (k[c] / k2);
                    }
                }
                idx += 1;
            }
        }
    }
    let comps: Vec<ScalarField> = spec
        .into_iter()
        .map(|s| ScalarField::from_values(&grid, ifft3_real(&grid, s)).expect("projection finite"))
        .collect();
    let mut it = comps.into_iter();
    VectorField::from_components([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
        .expect("shared grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn band_limited(grid: &Grid, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<([f64; 3], f64, f64)> = (0..6)
            .map(|_| {
                let k = [
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-3..=3) as f64,
                ];
                (
                    k,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        ScalarField::from_fn(grid, |x| {
            modes
                .iter()
                .map(|(k, a, p)| a * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + p).cos())
                .sum()
        })
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid::cube(8);
        let f = ScalarField::constant(&g, 3.0);
        let grad = gradient(&f);
        for c in 0..3 {
            for &v in grad.component(c).values() {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gradient_of_single_mode_is_exact() {
        let g = Grid::cube(16);
        let f = ScalarField::from_fn(&g, |x| x[0].sin());
        let grad = gradient(&f);
        for (idx, x) in g.nodes().enumerate() {
            assert_abs_diff_eq!(grad.component(0).values()[idx], x[0].cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(grad.component(1).values()[idx], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(grad.component(2).values()[idx], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_fd4_oracle() {
        let g = Grid::cube(32);
        let f = band_limited(&g, 1);
        let grad = gradient(&f);
        let fd = crate::fd::gradient_fd4(&f);
        let h = g.spacing()[0];
        // |k| <= 3 sqrt(3) modes: fd4 error ~ (kh)^4/30 per mode
        let tol = 40.0 * h.powi(4);
        for c in 0..3 {
            for (a, b) in grad
                .component(c)
                .values()
                .iter()
                .zip(fd.component(c).values())
            {
                assert!((a - b).abs() < tol, "fd4 mismatch: {a} vs {b}");
            }
        }
    }

    #[test]
    fn divergence_and_curl_of_single_mode() {
        let g = Grid::cube(16);
        let v = VectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
        let div = divergence(&v);
        let c = curl(&v);
        for (idx, x) in g.nodes().enumerate() {
            assert_abs_diff_eq!(div.values()[idx], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(c.component(0).values()[idx], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(c.component(1).values()[idx], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(c.component(2).values()[idx], x[0].cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn operators_vanish_on_constants() {
        let g = Grid::cube(8);
        let v = VectorField::constant(&g, [1.0, -2.0, 0.5]);
        let f = divergence(&v);
        assert!(f.values().iter().all(|v| v.abs() < 1e-13));
        for op in [curl(&v), laplacian(&v), grad_div(&v)] {
            for c in 0..3 {
                assert!(op.component(c).values().iter().all(|v| v.abs() < 1e-13));
            }
        }
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = Grid::cube(16);
        let f = band_limited(&g, 2);
        let v = gradient(&f);
        let c = curl(&v);
        let scale = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for comp in 0..3 {
            for &val in c.component(comp).values() {
                assert!(val.abs() < 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let g = Grid::cube(16);
        let v = VectorField::from_components([
            band_limited(&g, 3),
            band_limited(&g, 4),
            band_limited(&g, 5),
        ])
        .unwrap();
        let d = divergence(&curl(&v));
        for &val in d.values() {
            assert!(val.abs() < 1e-11);
        }
    }

    #[test]
    fn differentiation_is_linear() {
        let g = Grid::cube(16);
        let f = band_limited(&g, 6);
        let h = band_limited(&g, 7);
        let combo = f.scale(2.5).add(&h.scale(-1.25));
        let lhs = gradient(&combo);
        let rhs0 = gradient(&f);
        let rhs1 = gradient(&h);
        for c in 0..3 {
            for i in 0..g.len() {
                let expect =
                    2.5 * rhs0.component(c).values()[i] - 1.25 * rhs1.component(c).values()[i];
                assert_abs_diff_eq!(lhs.component(c).values()[i], expect, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn laplacian_equals_div_grad_on_band_limited() {
        let g = Grid::cube(16);
        let f = band_limited(&g, 8);
        let lap = laplacian_scalar(&f);
        let dg = divergence(&gradient(&f));
        for (a, b) in lap.values().iter().zip(dg.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn projection_is_solenoidal_and_idempotent() {
        let g = Grid::cube(16);
        let v = VectorField::from_components([
            band_limited(&g, 9),
            band_limited(&g, 10),
            band_limited(&g, 11),
        ])
        .unwrap();
        let p = project_solenoidal(&v);
        let d = divergence(&p);
        for &val in d.values() {
            assert!(val.abs() < 1e-11);
        }
        let pp = project_solenoidal(&p);
        for c in 0..3 {
            for (a, b) in p.component(c).values().iter().zip(pp.component(c).values()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }
}
