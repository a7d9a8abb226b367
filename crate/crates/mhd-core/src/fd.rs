//! 4th-order central-difference backend.
//!
//! Independent cross-check for the spectral operators; also drives the
//! Eulerian induction scheme used to validate the semi-Lagrangian route.

use crate::field::{MatrixField, ScalarField, VectorField};

/// 4th-order centered first derivative along one axis.
pub fn derivative_fd4(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid().clone();
    let dims = grid.dims();
    let h = grid.spacing()[axis];
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    let inv12h = 1.0 / (12.0 * h);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let sample = |off: isize| -> f64 {
                    let (mut ii, mut jj, mut kk) = (i as isize, j as isize, k as isize);
                    match axis {
                        0 => ii += off,
                        1 => jj += off,
                        _ => kk += off,
                    }
                    v[grid.index_wrapped(ii, jj, kk)]
                };
                out[grid.index(i, j, k)] =
                    (8.0 * (sample(1) - sample(-1)) - (sample(2) - sample(-2))) * inv12h;
            }
        }
    }
    ScalarField::from_values(&grid, out).expect("fd derivative finite")
}

pub fn gradient_fd4(f: &ScalarField) -> VectorField {
    VectorField::from_components([
        derivative_fd4(f, 0),
        derivative_fd4(f, 1),
        derivative_fd4(f, 2),
    ])
    .expect("shared grid")
}

pub fn divergence_fd4(v: &VectorField) -> ScalarField {
    derivative_fd4(v.component(0), 0)
        .add(&derivative_fd4(v.component(1), 1))
        .add(&derivative_fd4(v.component(2), 2))
}

pub fn curl_fd4(v: &VectorField) -> VectorField {
    let c0 = derivative_fd4(v.component(2), 1).sub(&derivative_fd4(v.component(1), 2));
    let c1 = derivative_fd4(v.component(0), 2).sub(&derivative_fd4(v.component(2), 0));
    let c2 = derivative_fd4(v.component(1), 0).sub(&derivative_fd4(v.component(0), 1));
    VectorField::from_components([c0, c1, c2]).expect("shared grid")
}

pub fn vector_gradient_fd4(v: &VectorField) -> MatrixField {
    let grid = v.grid().clone();
    let mut entries = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            entries.push(derivative_fd4(v.component(i), j));
        }
    }
    MatrixField::from_entries(&grid, entries).expect("shared grid")
}

/// 4th-order centered second derivative along one axis.
pub fn second_derivative_fd4(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid().clone();
    let dims = grid.dims();
    let h = grid.spacing()[axis];
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    let inv12h2 = 1.0 / (12.0 * h * h);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let sample = |off: isize| -> f64 {
                    let (mut ii, mut jj, mut kk) = (i as isize, j as isize, k as isize);
                    match axis {
                        0 => ii += off,
                        1 => jj += off,
                        _ => kk += off,
                    }
                    v[grid.index_wrapped(ii, jj, kk)]
                };
                out[grid.index(i, j, k)] = (-30.0 * sample(0) + 16.0 * (sample(1) + sample(-1))
                    - (sample(2) + sample(-2)))
                    * inv12h2;
            }
        }
    }
    ScalarField::from_values(&grid, out).expect("fd second derivative finite")
}

pub fn laplacian_fd4(f: &ScalarField) -> ScalarField {
    second_derivative_fd4(f, 0)
        .add(&second_derivative_fd4(f, 1))
        .add(&second_derivative_fd4(f, 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn fd4_converges_at_fourth_order() {
        let mut errors = Vec::new();
        for n in [8usize, 16, 32] {
            let g = Grid::cube(n);
            let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).sin() * x[1].cos());
            let d = derivative_fd4(&f, 0);
            let err = g
                .nodes()
                .enumerate()
                .map(|(idx, x)| (d.values()[idx] - 2.0 * (2.0 * x[0]).cos() * x[1].cos()).abs())
                .fold(0.0f64, f64::max);
            errors.push(err);
        }
        let order01 = (errors[0] / errors[1]).log2();
        let order12 = (errors[1] / errors[2]).log2();
        assert!(order01 > 3.5, "observed order {order01}");
        assert!(order12 > 3.5, "observed order {order12}");
    }

    #[test]
    fn fd4_second_derivative_of_mode() {
        let g = Grid::cube(32);
        let f = ScalarField::from_fn(&g, |x| x[0].sin());
        let d2 = second_derivative_fd4(&f, 0);
        for (idx, x) in g.nodes().enumerate() {
            assert!((d2.values()[idx] + x[0].sin()).abs() < 1e-4);
        }
    }
}
