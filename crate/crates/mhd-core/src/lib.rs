//! Semi-Lagrangian solver for viscous compressible magnetohydrodynamics
//! without magnetic diffusion, on the periodic box.
//!
//! The production path iterates a linearized sweep to a fixed point:
//! density and magnetic field are transported along characteristics of a
//! frozen velocity, then an implicit viscous step updates the velocity.
//! Independent finite-difference and explicit Eulerian backends exist
//! solely to cross-check the production operators.

// Index loops over fixed 3-component/3x3 tensor slots read better than
// iterator chains in stencil code, and `!(x > 0.0)` guards are written
// negated on purpose so that NaN fails validation.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod fd;
pub mod field;
pub mod grid;
pub mod induction;
pub mod interp;
pub mod mms;
pub mod momentum;
pub mod norms;
pub mod picard;
pub mod presets;
pub mod reference;
pub mod snapshot;
pub mod spectral;
pub mod state;
pub mod transport;

pub use error::{MhdError, Result};
pub use field::{MatrixField, ScalarField, VectorField};
pub use grid::Grid;
pub use picard::{PicardConfig, PicardReport, Trajectory};
pub use state::{Forcing, PhysicsConfig, State, VelocityTrajectory};
