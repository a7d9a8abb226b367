//! Scratch probe for convergence-order diagnosis (not part of the suite).

use mhd_core::field::{ScalarField, VectorField};
use mhd_core::grid::Grid;
use mhd_core::interp::sample_scalar;
use mhd_core::state::VelocityTrajectory;
use mhd_core::transport;

fn main() {
    // 1) tricubic error at general 3D points
    println!("tricubic at 3D points:");
    let mut prev = 0.0;
    for n in [8usize, 16, 32, 64] {
        let g = Grid::cube(n);
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * (2.0 * x[1]).cos() * x[2].sin());
        let mut err = 0.0f64;
        for m in 0..500 {
            let p = [
                (0.037 * m as f64).rem_euclid(std::f64::consts::TAU),
                (0.059 * m as f64 + 0.3).rem_euclid(std::f64::consts::TAU),
                (0.083 * m as f64 + 1.1).rem_euclid(std::f64::consts::TAU),
            ];
            let exact = p[0].sin() * (2.0 * p[1]).cos() * p[2].sin();
            err = err.max((sample_scalar(&f, p) - exact).abs());
        }
        let order = if prev > 0.0 { (prev / err).log2() } else { 0.0 };
        println!("  N={n}: err {err:.3e} order {order:.2}");
        prev = err;
    }

    // 2) density transport order in h with analytic steady velocity
    println!("density transport in h (vs fine reference N=64):");
    let vel = |x: [f64; 3]| {
        [
            0.1 * x[0].sin() * x[1].cos(),
            0.1 * x[1].sin() * x[2].cos(),
            0.1 * x[2].sin(),
        ]
    };
    let rho_init = |x: [f64; 3]| 1.0 + 0.05 * x[0].sin() * x[1].cos();
    let dt = 5e-3;
    let levels = 9; // T = 0.04
    let gref = Grid::cube(64);
    let uref =
        VelocityTrajectory::constant_in_time(&VectorField::from_fn(&gref, vel), 0.0, dt, levels);
    let solref =
        transport::solve_density(&ScalarField::from_fn(&gref, rho_init), &uref, 2, None).unwrap();
    let rref = solref.levels().last().unwrap();
    let mut prev = 0.0;
    for n in [8usize, 16, 32] {
        let g = Grid::cube(n);
        let u =
            VelocityTrajectory::constant_in_time(&VectorField::from_fn(&g, vel), 0.0, dt, levels);
        let sol =
            transport::solve_density(&ScalarField::from_fn(&g, rho_init), &u, 2, None).unwrap();
        let r = sol.levels().last().unwrap();
        // compare at shared nodes (n divides 64)
        let stride = 64 / n;
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = r.values()[g.index(i, j, k)];
                    let b = rref.values()[gref.index(i * stride, j * stride, k * stride)];
                    err = err.max((a - b).abs());
                }
            }
        }
        let order = if prev > 0.0 { (prev / err).log2() } else { 0.0 };
        println!("  N={n}: err {err:.3e} order {order:.2}");
        prev = err;
    }

    // 3) split departure-point and div-integral errors
    println!("backtrace pieces in h (vs N=64 reference):");
    let t_end = dt * (levels - 1) as f64;
    let chars_ref = transport::backtrace(&uref, t_end, 0.0, 2 * (levels - 1)).unwrap();
    let mut prev_x = 0.0;
    let mut prev_j = 0.0;
    for n in [8usize, 16, 32] {
        let g = Grid::cube(n);
        let u =
            VelocityTrajectory::constant_in_time(&VectorField::from_fn(&g, vel), 0.0, dt, levels);
        let chars = transport::backtrace(&u, t_end, 0.0, 2 * (levels - 1)).unwrap();
        let stride = 64 / n;
        let mut ex = 0.0f64;
        let mut ej = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = chars.departure_points()[g.index(i, j, k)];
                    let b = chars_ref.departure_points()
                        [gref.index(i * stride, j * stride, k * stride)];
                    for c in 0..3 {
                        let mut d = (a[c] - b[c]).abs();
                        d = d.min((d - std::f64::consts::TAU).abs());
                        ex = ex.max(d);
                    }
                    let ja = chars.div_integral().values()[g.index(i, j, k)];
                    let jb = chars_ref.div_integral().values()
                        [gref.index(i * stride, j * stride, k * stride)];
                    ej = ej.max((ja - jb).abs());
                }
            }
        }
        let ox = if prev_x > 0.0 {
            (prev_x / ex).log2()
        } else {
            0.0
        };
        let oj = if prev_j > 0.0 {
            (prev_j / ej).log2()
        } else {
            0.0
        };
        println!("  N={n}: X err {ex:.3e} order {ox:.2}; J err {ej:.3e} order {oj:.2}");
        prev_x = ex;
        prev_j = ej;
    }
}
