//! Named initial-condition presets shared by the test suite and the
//! command-line driver.

use crate::error::{MhdError, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::mms::ManufacturedCase;
use crate::state::{PhysicsConfig, State};

pub const PRESET_NAMES: [&str; 5] = [
    "rest",
    "small-data",
    "traveling-wave",
    "rotation",
    "single-mode-mms",
];

/// Quiescent uniform gas.
pub fn rest(n: usize) -> State {
    State::rest(&Grid::cube(n), 1.0)
}

/// Small smooth perturbation of the rest state with a solenoidal
/// magnetic field; the workhorse regression fixture.
pub fn small_data(n: usize) -> State {
    let g = Grid::cube(n);
    let a = 0.05;
    let rho = ScalarField::from_fn(&g, |x| 1.0 + a * x[0].sin() * x[1].cos());
    let u = VectorField::from_fn(&g, |x| [a * x[1].sin(), a * x[2].sin(), a * x[0].sin()]);
    // each component independent of its own coordinate: divergence-free
    let h = VectorField::from_fn(&g, |x| [a * x[1].cos(), a * x[2].cos(), a * x[0].cos()]);
    State::new(rho, u, h).expect("small-data preset valid")
}

/// Unforced traveling wave rho = 1 + 0.1 sin(x1), u = e1, H = 0.
pub fn traveling_wave(n: usize) -> State {
    let case = ManufacturedCase::traveling_wave(0.1, PhysicsConfig::default())
        .expect("traveling-wave ansatz valid");
    case.initial_state(&Grid::cube(n))
        .expect("traveling-wave preset valid")
}

/// Periodic swirl (divergence-free velocity) threading a transverse
/// magnetic field.
pub fn rotation(n: usize) -> State {
    let g = Grid::cube(n);
    let rho = ScalarField::constant(&g, 1.0);
    let u = VectorField::from_fn(&g, |x| {
        [
            0.1 * x[0].sin() * x[1].cos(),
            -0.1 * x[0].cos() * x[1].sin(),
            0.0,
        ]
    });
    let h = VectorField::from_fn(&g, |x| [0.0, 0.0, 0.05 * x[0].sin()]);
    State::new(rho, u, h).expect("rotation preset valid")
}

/// Manufactured single-mode case behind the `single-mode-mms` preset.
pub fn single_mode_case() -> ManufacturedCase {
    ManufacturedCase::single_mode(0.05, 1.0, PhysicsConfig::default())
        .expect("single-mode ansatz valid")
}

pub fn by_name(name: &str, n: usize) -> Result<State> {
    match name {
        "rest" => Ok(rest(n)),
        "small-data" => Ok(small_data(n)),
        "traveling-wave" => Ok(traveling_wave(n)),
        "rotation" => Ok(rotation(n)),
        "single-mode-mms" => single_mode_case().initial_state(&Grid::cube(n)),
        other => Err(MhdError::InvalidParameter(format!(
            "unknown preset '{other}', expected one of {PRESET_NAMES:?}"
        ))),
    }
}
