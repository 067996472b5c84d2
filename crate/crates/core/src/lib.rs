//! Geometric phases between arbitrary quantum states, including orthogonal
//! ones, through projection onto an auxiliary reference state.
//!
//! The central quantity is the projective phase `arg<a|i><i|b>`, defined
//! whenever neither `a` nor `b` is orthogonal to `|i>`. From it the crate
//! builds transition functions between coverings, winding and Chern numbers
//! of loops near orthogonal states, the `0`/`pi` jump through an orthogonal
//! state, off-diagonal geometric phases, and a simulated interferometer that
//! measures the phase from intensity fringes.
//!
//! Modules:
//! - [`statekit`]: state vectors, inner products, geodesics, discrete connection.
//! - [`phases`]: Pancharatnam/projective phases, transition functions, Bargmann invariants.
//! - [`bloch`]: two-state sphere, Wu-Yang connections, solid angles.
//! - [`dynamics`]: spin operators, rotations, Schrödinger evolution.
//! - [`topology`]: phase accumulation, winding and Chern numbers, orthogonal crossings.
//! - [`offdiag`]: off-diagonal phases and their reconstruction.
//! - [`interferometer`]: fringe simulation and phase extraction.

pub mod angle;
pub mod bloch;
pub mod dynamics;
pub mod error;
pub mod interferometer;
pub mod offdiag;
pub mod phases;
pub mod statekit;
pub mod topology;

pub use error::{Endpoint, Error, Result};
pub use phases::{Branch, Covering, PhaseValue, UnitPhasor};
pub use statekit::{Geodesic, StateVector, ORTHOGONALITY_THRESHOLD};

pub use num_complex::Complex64;
