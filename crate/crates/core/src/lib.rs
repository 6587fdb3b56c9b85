//! Open-system simulator for cavity-induced self-ordering of a few bosons or
//! fermions: truncated mode model, Lindblad dynamics, stationary states and
//! the observables that characterize the transition.
//!
//! Units: ħ = 1, energies and rates in recoil frequencies ω_R, time in 1/ω_R.

// `!(x > 0.0)` also rejects NaN, which is the point of those checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolve;
pub mod io;
pub mod lattice;
pub mod liouvillian;
pub mod observables;
pub mod operators;
pub mod runner;
pub mod sparse;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
