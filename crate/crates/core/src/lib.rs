//! Simulation and verification toolkit for the two-dimensional stochastic
//! Ericksen–Leslie system under Ginzburg–Landau relaxation.
//!
//! The crate is organised bottom-up:
//!
//! * [`fields`]: grid geometry, field storage, finite-difference operators and
//!   the discrete Leray projection.
//! * [`noise`]: seeded Wiener drivers, the Hilbert–Schmidt noise operator on the
//!   velocity and the magnetic field acting on the director.
//! * [`dynamics`]: the coupled Euler–Maruyama stepper in Itô form.
//! * [`diagnostics`]: energies, the stochastic energy budget, Pohozaev
//!   residuals, defect detection, stress pairings and weak-form residuals.
//! * [`ensemble`]: Monte-Carlo orchestration with reproducible reductions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod fields;
pub mod init;
pub mod noise;

pub use error::{Error, Result};
